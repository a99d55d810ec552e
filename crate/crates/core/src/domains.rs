//! Distinguished domains and their geometric functionals.
//!
//! Volumes and boundary integrals are taken over the exact curved domain
//! described by the mesh's [`BoundaryShape`], not over the polyhedral mesh:
//! cells are integrated with a degree-4 rule and each boundary facet adds the
//! signed radial sliver between the facet and the true boundary,
//! `∫ dω ∫_{|p|}^{R(ω)} f(tω) t^{N−1} dt`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::geometry::{
    curvature_at, exp_map, log_map, pullback_ball_chart, pullback_ball_chart_in,
    pullback_ellipsoid_chart, ricci_frame, CurvaturePacket, MetricChart, ModelManifold,
    NormalFrame,
};
use crate::mesh::{
    cross, sub3, unit_ball_mesh, BoundaryShape, RadialProfile, SimplicialMesh, StarProfile,
};
use crate::quadrature::{gauss_legendre, tetrahedron_degree4, triangle_degree4, triangle_degree5};

/// Volume of the Euclidean unit ball in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI.powf(n as f64 / 2.0) / gamma_half_integer(n + 2),
    }
}

/// `Γ(k/2)` for integer `k ≥ 1`.
fn gamma_half_integer(k: usize) -> f64 {
    if k == 1 {
        PI.sqrt()
    } else if k == 2 {
        1.0
    } else {
        (k as f64 / 2.0 - 1.0) * gamma_half_integer(k - 2)
    }
}

/// `bᵢ = (Rᵢᵢ − S/N) / (3(N+2))` with `Rᵢᵢ` the Ricci eigenvalues in the order
/// of [`ricci_frame`] (descending).
pub fn ellipsoid_coefficients(cp: &CurvaturePacket) -> Vec<f64> {
    let nf = ricci_frame(cp);
    let n = cp.dim() as f64;
    let s: f64 = nf.ricci_eigenvalues.iter().sum();
    nf.ricci_eigenvalues
        .iter()
        .map(|rii| (rii - s / n) / (3.0 * (n + 2.0)))
        .collect()
}

/// The geodesic ellipsoid `E(y0, r)`: image of the unit ball under
/// `x ↦ Exp_{y0}(r(1 + r²bᵢ)xⁱEᵢ)` in the Ricci frame.
#[derive(Clone, Debug)]
pub struct GeodesicEllipsoidSpec {
    pub base_point: DVector<f64>,
    pub r: f64,
    pub b: Vec<f64>,
    pub frame: NormalFrame,
}

impl GeodesicEllipsoidSpec {
    pub fn new(m: &ModelManifold, y0: &[f64], r: f64) -> Result<Self> {
        let cp = curvature_at(m, y0)?;
        let b = ellipsoid_coefficients(&cp);
        Ok(Self {
            base_point: DVector::from_column_slice(y0),
            r,
            b,
            frame: ricci_frame(&cp),
        })
    }

    /// The rescaled chart `h_r` on the unit ball.
    pub fn chart(&self, m: &ModelManifold) -> Result<MetricChart> {
        pullback_ellipsoid_chart(m, self.base_point.as_slice(), self.r, &self.b)
    }

    pub fn b_sum(&self) -> f64 {
        self.b.iter().sum()
    }
}

/// Measures of a domain under a chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainGeometry {
    pub volume: f64,
    pub boundary_measure: f64,
    pub weighted_moment: f64,
    pub sym_diff_vs_ball: f64,
}

pub fn domain_geometry(chart: &MetricChart, mesh: &SimplicialMesh) -> Result<DomainGeometry> {
    Ok(DomainGeometry {
        volume: volume_of(chart, mesh)?,
        boundary_measure: boundary_measure(chart, mesh)?,
        weighted_moment: weighted_boundary_moment(chart, mesh)?,
        sym_diff_vs_ball: symmetric_difference(mesh, 100_000, 0)?.value,
    })
}

fn check_inside(chart: &MetricChart, mesh: &SimplicialMesh) -> Result<()> {
    if chart.dim() != mesh.dim() {
        return Err(SteklovError::Argument(
            "chart and mesh dimensions differ".into(),
        ));
    }
    for v in 0..mesh.n_vertices() {
        chart.check(mesh.vertex(v))?;
    }
    Ok(())
}

/// `∫_Ω f dx` over the exact domain of `mesh`, where `f` is a density with
/// respect to coordinate measure.
pub fn integrate_over_domain(mesh: &SimplicialMesh, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    cell_integral(mesh, f) + sliver_integral(mesh, f)
}

fn cell_integral(mesh: &SimplicialMesh, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    let d = mesh.dim();
    let mut total = 0.0;
    let tri = triangle_degree4();
    let tet = tetrahedron_degree4();
    for c in 0..mesh.n_cells() {
        let vol = mesh.cell_volume(c);
        let cell = mesh.cell(c);
        let mut s = 0.0;
        if d == 2 {
            for (bary, w) in &tri {
                let x: Vec<f64> = (0..2)
                    .map(|k| (0..3).map(|a| bary[a] * mesh.vertex(cell[a])[k]).sum())
                    .collect();
                s += w * f(&x);
            }
        } else {
            for (bary, w) in &tet {
                let x: Vec<f64> = (0..3)
                    .map(|k| (0..4).map(|a| bary[a] * mesh.vertex(cell[a])[k]).sum())
                    .collect();
                s += w * f(&x);
            }
        }
        total += vol * s;
    }
    total
}

/// Subdivisions per edge of the reference triangle for integrands over
/// curved boundary patches.
const FACET_SUBDIVISIONS: usize = 4;

/// The degree-5 rule on each of the `s²` subtriangles of the reference
/// triangle `{u, v ≥ 0, u + v ≤ 1}`, as `((u, v), w)` with weights summing
/// to its area `1/2`.
fn subdivided_triangle_rule(s: usize) -> Vec<((f64, f64), f64)> {
    let base = triangle_degree5();
    let h = 1.0 / s as f64;
    let w_scale = 0.5 * h * h;
    let mut out = Vec::with_capacity(base.len() * s * s);
    for i in 0..s {
        for j in 0..s - i {
            let (u0, v0) = (i as f64 * h, j as f64 * h);
            let mut tris = vec![[(u0, v0), (u0 + h, v0), (u0, v0 + h)]];
            if i + j + 1 < s {
                tris.push([(u0 + h, v0 + h), (u0, v0 + h), (u0 + h, v0)]);
            }
            for t in tris {
                for (bary, w) in &base {
                    let u = bary[0] * t[0].0 + bary[1] * t[1].0 + bary[2] * t[2].0;
                    let v = bary[0] * t[0].1 + bary[1] * t[1].1 + bary[2] * t[2].1;
                    out.push(((u, v), w * w_scale));
                }
            }
        }
    }
    out
}

fn sliver_integral(mesh: &SimplicialMesh, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    let d = mesh.dim();
    let shape = mesh.boundary_shape();
    let outer = gauss_legendre(8);
    let inner = gauss_legendre(4);
    let radial = |p: &[f64], solid: f64| -> f64 {
        let rho0 = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        let q = shape.project(p);
        let rho1 = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        let omega: Vec<f64> = p.iter().map(|c| c / rho0).collect();
        let len = rho1 - rho0;
        let mut s = 0.0;
        for (t, w) in &inner {
            let rho = rho0 + t * len;
            let x: Vec<f64> = omega.iter().map(|c| c * rho).collect();
            s += w * f(&x) * rho.powi(d as i32 - 1);
        }
        solid * s * len
    };
    let facet_rule = subdivided_triangle_rule(FACET_SUBDIVISIONS);
    let mut total = 0.0;
    for fi in 0..mesh.n_boundary_facets() {
        let fv = mesh.boundary_facet(fi);
        if d == 2 {
            let (a, b) = (mesh.vertex(fv[0]), mesh.vertex(fv[1]));
            let t = [b[0] - a[0], b[1] - a[1]];
            for (u, w) in &outer {
                let p = [a[0] + u * t[0], a[1] + u * t[1]];
                let n2 = p[0] * p[0] + p[1] * p[1];
                let domega = (p[0] * t[1] - p[1] * t[0]) / n2;
                total += w * radial(&p, domega);
            }
        } else {
            let (a, b, c) = (mesh.vertex(fv[0]), mesh.vertex(fv[1]), mesh.vertex(fv[2]));
            let nrm = cross(&sub3(b, a), &sub3(c, a));
            for &((u, v), w) in &facet_rule {
                let p: Vec<f64> = (0..3)
                    .map(|k| a[k] + u * (b[k] - a[k]) + v * (c[k] - a[k]))
                    .collect();
                let n3 = p.iter().map(|c| c * c).sum::<f64>().powf(1.5);
                let domega = (p[0] * nrm[0] + p[1] * nrm[1] + p[2] * nrm[2]) / n3;
                total += w * radial(&p, domega);
            }
        }
    }
    total
}

/// `|Ω|_g = ∫ √|g| dx` over the exact domain of `mesh`.
pub fn volume_of(chart: &MetricChart, mesh: &SimplicialMesh) -> Result<f64> {
    check_inside(chart, mesh)?;
    Ok(integrate_over_domain(mesh, &|x| chart.sqrt_det(x)))
}

/// `∫ √|g| dx` over the polyhedral mesh only.
pub fn mesh_volume(chart: &MetricChart, mesh: &SimplicialMesh) -> Result<f64> {
    check_inside(chart, mesh)?;
    Ok(cell_integral(mesh, &|x| chart.sqrt_det(x)))
}

/// `∫_{∂Ω} w dσ_g` over the exact boundary.
pub fn boundary_integral(
    chart: &MetricChart,
    mesh: &SimplicialMesh,
    w: &dyn Fn(&[f64]) -> f64,
) -> Result<f64> {
    check_inside(chart, mesh)?;
    let d = mesh.dim();
    let shape = mesh.boundary_shape();
    let mut total = 0.0;
    if d == 2 {
        let rule = gauss_legendre(8);
        let (rf, drf): (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>) = match shape {
            BoundaryShape::UnitSphere => (Box::new(|_| 1.0), Box::new(|_| 0.0)),
            BoundaryShape::Star(p) => {
                let (p1, p2) = (p.clone(), p.clone());
                (
                    Box::new(move |t| p1.radius(t)),
                    Box::new(move |t| p2.derivative(t)),
                )
            }
        };
        for fi in 0..mesh.n_boundary_facets() {
            let fv = mesh.boundary_facet(fi);
            let (a, b) = (mesh.vertex(fv[0]), mesh.vertex(fv[1]));
            let ta = a[1].atan2(a[0]);
            let mut dt = b[1].atan2(b[0]) - ta;
            if dt > PI {
                dt -= 2.0 * PI;
            } else if dt <= -PI {
                dt += 2.0 * PI;
            }
            for (u, wq) in &rule {
                let th = ta + u * dt;
                let (c, s) = (th.cos(), th.sin());
                let (r, dr) = (rf(th), drf(th));
                let q = [r * c, r * s];
                let tq = [dr * c - r * s, dr * s + r * c];
                let g = chart.g(&q);
                let len = (tq[0] * tq[0] * g[(0, 0)]
                    + 2.0 * tq[0] * tq[1] * g[(0, 1)]
                    + tq[1] * tq[1] * g[(1, 1)])
                    .sqrt();
                total += wq * dt * len * w(&q);
            }
        }
    } else {
        if !matches!(shape, BoundaryShape::UnitSphere) {
            return Err(SteklovError::Argument(
                "three-dimensional meshes must bound the unit ball".into(),
            ));
        }
        let facet_rule = subdivided_triangle_rule(FACET_SUBDIVISIONS);
        for fi in 0..mesh.n_boundary_facets() {
            let fv = mesh.boundary_facet(fi);
            let (a, b, c) = (mesh.vertex(fv[0]), mesh.vertex(fv[1]), mesh.vertex(fv[2]));
            let e1 = sub3(b, a);
            let e2 = sub3(c, a);
            for &((u, v), wq) in &facet_rule {
                let p: Vec<f64> = (0..3).map(|k| a[k] + u * e1[k] + v * e2[k]).collect();
                let rho = p.iter().map(|c| c * c).sum::<f64>().sqrt();
                let q = DVector::from_iterator(3, p.iter().map(|c| c / rho));
                let proj = (DMatrix::identity(3, 3) - &q * q.transpose()) / rho;
                let jac =
                    proj * DMatrix::from_fn(3, 2, |r, col| if col == 0 { e1[r] } else { e2[r] });
                let g = chart.g(q.as_slice());
                let area = (jac.transpose() * g * &jac).determinant().max(0.0).sqrt();
                total += wq * area * w(q.as_slice());
            }
        }
    }
    Ok(total)
}

/// `σ_g(∂Ω)`.
pub fn boundary_measure(chart: &MetricChart, mesh: &SimplicialMesh) -> Result<f64> {
    boundary_integral(chart, mesh, &|_| 1.0)
}

/// `∫_{∂Ω} |x|² dσ_g`.
pub fn weighted_boundary_moment(chart: &MetricChart, mesh: &SimplicialMesh) -> Result<f64> {
    boundary_integral(chart, mesh, &|x| x.iter().map(|c| c * c).sum())
}

/// `(∫_Ω div_g V dv_g, σ_g(∂Ω))` for `V(x) = |x|x`, with the divergence from
/// central differences of `√|g|`. In normal coordinates the two agree on the
/// unit ball, since `V` is the unit normal there.
pub fn divergence_identity(chart: &MetricChart, mesh: &SimplicialMesh) -> Result<(f64, f64)> {
    check_inside(chart, mesh)?;
    let n = mesh.dim() as f64;
    let div = |x: &[f64]| {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let grad = chart.grad_sqrt_det(x);
        let xg: f64 = x.iter().zip(grad.iter()).map(|(a, b)| a * b).sum();
        chart.sqrt_det(x) * (n + 1.0) * r + r * xg
    };
    Ok((
        integrate_over_domain(mesh, &div),
        boundary_measure(chart, mesh)?,
    ))
}

/// `|B_g(y0, r)|_g`: closed forms for catalogs (homogeneous, so `y0` is
/// irrelevant), a mesh quadrature of the pullback chart for custom charts.
pub fn ball_volume(m: &ModelManifold, y0: &[f64], r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(SteklovError::Argument("radius must be nonnegative".into()));
    }
    if let Some(bound) = m.injectivity_bound() {
        if r >= bound {
            return Err(SteklovError::Range(format!(
                "radius {r} beyond the injectivity bound {bound}"
            )));
        }
    }
    Ok(match m {
        ModelManifold::Euclidean { dim } => unit_ball_volume(*dim) * r.powi(*dim as i32),
        ModelManifold::Sphere { radius } => 2.0 * PI * radius * radius * (1.0 - (r / radius).cos()),
        ModelManifold::Hyperbolic { radius } => {
            2.0 * PI * radius * radius * ((r / radius).cosh() - 1.0)
        }
        ModelManifold::ProductS2xR => {
            // t = r sin φ, sphere cap of radius r cos φ
            gauss_legendre(48)
                .iter()
                .map(|(u, w)| {
                    let phi = PI * (u - 0.5);
                    let c = phi.cos();
                    PI * w * 2.0 * PI * (1.0 - (r * c).cos()) * r * c
                })
                .sum()
        }
        ModelManifold::Custom(_) => {
            if r == 0.0 {
                return Ok(0.0);
            }
            let chart = pullback_ball_chart(m, y0, r)?;
            let mesh = unit_ball_mesh(m.dim(), if m.dim() == 2 { 4 } else { 2 })?;
            volume_of(&chart, &mesh)? * r.powi(m.dim() as i32)
        }
    })
}

/// The radius `ρ` with `|B_g(y0, ρ)|_g = target_volume`, by bisection to
/// relative tolerance `1e-12`.
pub fn matched_radius(m: &ModelManifold, y0: &[f64], target_volume: f64) -> Result<f64> {
    if !(target_volume > 0.0 && target_volume.is_finite()) {
        return Err(SteklovError::Argument(
            "target volume must be positive".into(),
        ));
    }
    let mut hi = match m.injectivity_bound() {
        Some(b) if b.is_finite() => b * (1.0 - 1e-12),
        _ => 1.0,
    };
    let bounded = matches!(m.injectivity_bound(), Some(b) if b.is_finite());
    if !bounded {
        let mut grow = 0;
        while ball_volume(m, y0, hi)? < target_volume {
            hi *= 2.0;
            grow += 1;
            if grow > 200 {
                return Err(SteklovError::Range("target volume unreachable".into()));
            }
        }
    } else if ball_volume(m, y0, hi)? <= target_volume {
        return Err(SteklovError::Range(format!(
            "target volume {target_volume} exceeds the injectivity ball of {}",
            m.label()
        )));
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ball_volume(m, y0, mid)? < target_volume {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Points on a boundary with quadrature weights for `dσ_g`.
#[derive(Clone, Debug)]
pub struct BoundarySample {
    pub points: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
}

impl BoundarySample {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// The geodesic circle (dimension 2) or sphere (dimension 3) of radius
/// `radius` about `center`, with `n` points per angular direction. Weights are
/// the boundary area elements of the pulled-back chart.
pub fn geodesic_sphere_sample(
    m: &ModelManifold,
    center: &[f64],
    radius: f64,
    n: usize,
) -> Result<BoundarySample> {
    let chart = pullback_ball_chart_in(m, center, radius, 1.01)?;
    let frame = ricci_frame(&curvature_at(m, center)?).frame;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut push = |omega: &[f64], weight: f64| -> Result<()> {
        let v = &frame * DVector::from_column_slice(omega) * radius;
        points.push(exp_map(m, center, v.as_slice())?);
        weights.push(weight);
        Ok(())
    };
    if m.dim() == 2 {
        for j in 0..n {
            let th = 2.0 * PI * j as f64 / n as f64;
            let omega = [th.cos(), th.sin()];
            let tau = [-th.sin(), th.cos()];
            let g = chart.g(&omega);
            let len = (tau[0] * tau[0] * g[(0, 0)]
                + 2.0 * tau[0] * tau[1] * g[(0, 1)]
                + tau[1] * tau[1] * g[(1, 1)])
                .sqrt();
            push(&omega, radius * len * 2.0 * PI / n as f64)?;
        }
    } else {
        let n_phi = 2 * n;
        for (u, wz) in gauss_legendre(n) {
            let z = 2.0 * u - 1.0;
            let s = (1.0 - z * z).sqrt();
            for j in 0..n_phi {
                let ph = 2.0 * PI * j as f64 / n_phi as f64;
                let omega = [s * ph.cos(), s * ph.sin(), z];
                let jz = [-z / s * ph.cos(), -z / s * ph.sin(), 1.0];
                let jp = [-s * ph.sin(), s * ph.cos(), 0.0];
                let jac = DMatrix::from_fn(3, 2, |r, c| if c == 0 { jz[r] } else { jp[r] });
                let area = (jac.transpose() * chart.g(&omega) * &jac)
                    .determinant()
                    .sqrt();
                push(
                    &omega,
                    radius * radius * area * 2.0 * wz * 2.0 * PI / n_phi as f64,
                )?;
            }
        }
    }
    Ok(BoundarySample { points, weights })
}

/// The Euclidean ellipse `c + (a cos t, b sin t)` with arc-length weights.
pub fn ellipse_sample(center: [f64; 2], a: f64, b: f64, n: usize) -> BoundarySample {
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for j in 0..n {
        let t = 2.0 * PI * j as f64 / n as f64;
        points.push(DVector::from_vec(vec![
            center[0] + a * t.cos(),
            center[1] + b * t.sin(),
        ]));
        weights
            .push((a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt() * 2.0 * PI / n as f64);
    }
    BoundarySample { points, weights }
}

#[derive(Clone, Debug)]
pub struct CentroidResult {
    pub point: DVector<f64>,
    pub iterations: usize,
    /// `|∫ Exp_p⁻¹(q) dσ(q)|_g` at the returned point.
    pub moment_norm: f64,
    /// `σ = ∫ dσ`.
    pub sigma: f64,
}

pub const CENTROID_MAX_ITERATIONS: usize = 500;

/// Minimizes `J(p) = ∫ dist_g(p, q)² dσ(q)` by gradient descent with step
/// `1/(2σ)`, i.e. `p ← Exp_p((1/σ) ∫ Exp_p⁻¹(q) dσ)`, until the first moment
/// is at most `1e-8 σ`.
pub fn boundary_centroid(m: &ModelManifold, sample: &BoundarySample) -> Result<CentroidResult> {
    let n = m.dim();
    let sigma = sample.total_weight();
    if sample.points.is_empty() || !(sigma > 0.0) {
        return Err(SteklovError::Argument("empty boundary sample".into()));
    }
    let moment = |p: &DVector<f64>| -> Result<DVector<f64>> {
        let mut acc = DVector::zeros(n);
        for (q, w) in sample.points.iter().zip(&sample.weights) {
            acc += log_map(m, p.as_slice(), q.as_slice())? * *w;
        }
        Ok(acc)
    };
    let mut p = sample
        .points
        .iter()
        .zip(&sample.weights)
        .fold(DVector::zeros(n), |acc, (q, w)| acc + q * *w)
        / sigma;
    let mut mom = moment(&p)?;
    p = exp_map(m, p.as_slice(), (&mom / sigma).as_slice())?;
    for iter in 0..=CENTROID_MAX_ITERATIONS {
        mom = moment(&p)?;
        let norm = m.norm_at(p.as_slice(), mom.as_slice());
        if norm <= 1e-8 * sigma {
            return Ok(CentroidResult {
                point: p,
                iterations: iter,
                moment_norm: norm,
                sigma,
            });
        }
        if iter == CENTROID_MAX_ITERATIONS {
            return Err(SteklovError::Numeric(format!(
                "boundary centroid did not converge in {CENTROID_MAX_ITERATIONS} iterations (moment {norm:e})"
            )));
        }
        p = exp_map(m, p.as_slice(), (&mom / sigma).as_slice())?;
    }
    unreachable!()
}

/// `|U △ B|` with an error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricDifference {
    pub value: f64,
    /// Standard error (zero for the exact planar integral).
    pub stderr: f64,
}

/// Exact `|U △ B| = ∫ |r(θ)² − 1| / 2 dθ` for a planar star domain.
pub fn star_symmetric_difference(profile: &dyn RadialProfile) -> f64 {
    let m = 2048;
    let g = |t: f64| profile.radius(t) - 1.0;
    let mut breaks = vec![0.0];
    for i in 0..m {
        let (a, b) = (
            2.0 * PI * i as f64 / m as f64,
            2.0 * PI * (i + 1) as f64 / m as f64,
        );
        let (ga, gb) = (g(a), g(b));
        if ga == 0.0 {
            continue;
        }
        if ga * gb < 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if g(lo) * g(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            breaks.push(0.5 * (lo + hi));
        }
    }
    breaks.push(2.0 * PI);
    let rule = gauss_legendre(10);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let pieces = (((w[1] - w[0]) / (2.0 * PI / 512.0)).ceil() as usize).max(1);
        let h = (w[1] - w[0]) / pieces as f64;
        for k in 0..pieces {
            let a = w[0] + k as f64 * h;
            for (u, wq) in &rule {
                let r = profile.radius(a + u * h);
                total += wq * h * 0.5 * (r * r - 1.0).abs();
            }
        }
    }
    total
}

/// `|U △ B|` for the domain of a star-shaped mesh. Planar star meshes use the
/// exact polar integral of their boundary profile; in dimension 3 the polar
/// integral `∫ |R(ω)³ − 1|/3 dω` of the polyhedral boundary is estimated by
/// Monte Carlo over the boundary facets with `samples` draws from a generator
/// seeded with `seed`.
pub fn symmetric_difference(
    mesh: &SimplicialMesh,
    samples: usize,
    seed: u64,
) -> Result<SymmetricDifference> {
    check_star_shaped(mesh)?;
    if mesh.dim() == 2 {
        let value = match mesh.boundary_shape() {
            BoundaryShape::UnitSphere => 0.0,
            BoundaryShape::Star(p) => star_symmetric_difference(p.as_ref()),
        };
        return Ok(SymmetricDifference { value, stderr: 0.0 });
    }
    if samples < 2 {
        return Err(SteklovError::Argument(
            "Monte Carlo needs at least two samples".into(),
        ));
    }
    let nf = mesh.n_boundary_facets();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let f = rng.random_range(0..nf);
        let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        let fv = mesh.boundary_facet(f);
        let (a, b, c) = (mesh.vertex(fv[0]), mesh.vertex(fv[1]), mesh.vertex(fv[2]));
        let nrm = cross(&sub3(b, a), &sub3(c, a));
        let p: Vec<f64> = (0..3)
            .map(|k| a[k] + u * (b[k] - a[k]) + v * (c[k] - a[k]))
            .collect();
        let rho = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        let domega = (p[0] * nrm[0] + p[1] * nrm[1] + p[2] * nrm[2]) / rho.powi(3);
        let x = nf as f64 * 0.5 * (rho.powi(3) - 1.0).abs() / 3.0 * domega;
        sum += x;
        sum2 += x * x;
    }
    let nn = samples as f64;
    let mean = sum / nn;
    let var = (sum2 / nn - mean * mean).max(0.0) * nn / (nn - 1.0);
    Ok(SymmetricDifference {
        value: mean,
        stderr: (var / nn).sqrt(),
    })
}

fn check_star_shaped(mesh: &SimplicialMesh) -> Result<()> {
    for f in 0..mesh.n_boundary_facets() {
        let fv = mesh.boundary_facet(f);
        let ok = if mesh.dim() == 2 {
            let (a, b) = (mesh.vertex(fv[0]), mesh.vertex(fv[1]));
            a[0] * b[1] - a[1] * b[0] > 0.0
        } else {
            let (a, b, c) = (mesh.vertex(fv[0]), mesh.vertex(fv[1]), mesh.vertex(fv[2]));
            let nrm = cross(&sub3(b, a), &sub3(c, a));
            [a, b, c]
                .iter()
                .all(|p| p[0] * nrm[0] + p[1] * nrm[1] + p[2] * nrm[2] > 0.0)
        };
        if !ok {
            return Err(SteklovError::Argument(
                "domain is not star-shaped about the origin".into(),
            ));
        }
    }
    if mesh.boundary_snap_error() > 1e-9 {
        return Err(SteklovError::Argument(
            "boundary vertices do not lie on the boundary shape".into(),
        ));
    }
    Ok(())
}

/// `|U|_g` of the planar star domain bounded by `profile`, by polar
/// quadrature `∫ dθ ∫_0^{R(θ)} √|g(tω)| t dt`.
pub fn star_volume(chart: &MetricChart, profile: &dyn RadialProfile) -> Result<f64> {
    if chart.dim() != 2 {
        return Err(SteklovError::Argument("star domains are planar".into()));
    }
    let radial = gauss_legendre(16);
    let n = 512;
    let h = 2.0 * PI / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let th = i as f64 * h;
        let (c, s) = (th.cos(), th.sin());
        let big_r = profile.radius(th);
        chart.check(&[big_r * c, big_r * s])?;
        let inner: f64 = radial
            .iter()
            .map(|(u, w)| {
                let t = u * big_r;
                w * chart.sqrt_det(&[t * c, t * s]) * t
            })
            .sum();
        total += h * inner * big_r;
    }
    Ok(total)
}

/// `½ ∫ r² dθ`.
pub fn star_area(profile: &dyn RadialProfile) -> f64 {
    periodic_integral(|t| 0.5 * profile.radius(t).powi(2))
}

/// `∫_{∂U} |x|² ds = ∫ r² √(r² + r'²) dθ`.
pub fn star_moment(profile: &dyn RadialProfile) -> f64 {
    periodic_integral(|t| {
        let r = profile.radius(t);
        let dr = profile.derivative(t);
        r * r * (r * r + dr * dr).sqrt()
    })
}

/// Trapezoidal rule over one period, exponentially accurate for analytic
/// periodic integrands.
fn periodic_integral(f: impl Fn(f64) -> f64) -> f64 {
    let n = 4096;
    let h = 2.0 * PI / n as f64;
    (0..n).map(|i| f(i as f64 * h)).sum::<f64>() * h
}

/// The profile with `r₀` rescaled so that the Euclidean area is `area`.
pub fn normalize_star_area(profile: &StarProfile, area: f64) -> StarProfile {
    let unit = profile.with_r0(1.0);
    profile.with_r0((area / star_area(&unit)).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricRow {
    pub amplitude: f64,
    pub r0: f64,
    /// `|U △ B| / |U|`.
    pub deficit: f64,
    /// `∫_{∂U} |x|² dσ − N|B|`.
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricTable {
    pub rows: Vec<IsoperimetricRow>,
    /// Least-squares slope of `ln excess` against `ln deficit`.
    pub slope: f64,
    /// `min excess / deficit²` over rows with positive deficit.
    pub beta_hat: f64,
}

/// Least-squares slope of `ln y` against `ln x` over pairs with `x, y > 0`.
pub fn log_log_slope(pairs: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Deficit and moment excess of the area-normalized star domains
/// `r(θ) = r₀(1 + ε s(θ))`, where `s` is given by the modes of `shape` and `ε`
/// runs over `amplitudes`.
pub fn isoperimetric_deficit_check(shape: &StarProfile, amplitudes: &[f64]) -> IsoperimetricTable {
    let rows: Vec<IsoperimetricRow> = amplitudes
        .iter()
        .map(|&eps| {
            let modes = shape
                .modes
                .iter()
                .map(|&(k, a, b)| (k, eps * a, eps * b))
                .collect();
            let p = normalize_star_area(&StarProfile::new(1.0, modes), PI);
            isoperimetric_row(eps, &p)
        })
        .collect();
    summarize_isoperimetric(rows)
}

/// One row for an already area-normalized profile.
pub fn isoperimetric_row(amplitude: f64, p: &StarProfile) -> IsoperimetricRow {
    let area = star_area(p);
    IsoperimetricRow {
        amplitude,
        r0: p.r0,
        deficit: star_symmetric_difference(p) / area,
        excess: star_moment(p) - 2.0 * PI,
    }
}

pub fn summarize_isoperimetric(rows: Vec<IsoperimetricRow>) -> IsoperimetricTable {
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.deficit, r.excess)).collect();
    let slope = log_log_slope(&pairs);
    let beta_hat = rows
        .iter()
        .filter(|r| r.deficit > 0.0)
        .map(|r| r.excess / (r.deficit * r.deficit))
        .fold(f64::INFINITY, f64::min);
    IsoperimetricTable {
        rows,
        slope,
        beta_hat,
    }
}
