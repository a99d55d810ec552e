use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::curvature::{curvature_at, ricci_frame, NormalFrame};
use super::geodesic::integrate_geodesic_fixed;
use super::manifold::{MetricFn, ModelManifold};
use crate::error::{Result, SteklovError};

/// Default coordinate radius of the rescaled charts.
pub const DEFAULT_DOMAIN_RADIUS: f64 = 3.0;

/// RK4 steps per unit time for the numerical exponential map of custom charts.
const PULLBACK_RK4_STEPS: usize = 48;

/// A metric field `g_ij(x)` on the coordinate ball `|x| < domain_radius`.
#[derive(Clone)]
pub struct MetricChart {
    dim: usize,
    domain_radius: f64,
    id: String,
    metric: MetricFn,
}

impl fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricChart")
            .field("dim", &self.dim)
            .field("domain_radius", &self.domain_radius)
            .field("id", &self.id)
            .finish()
    }
}

impl MetricChart {
    pub fn new(
        dim: usize,
        domain_radius: f64,
        id: impl Into<String>,
        metric: MetricFn,
    ) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(SteklovError::Argument(format!(
                "dimension {dim} not in {{2,3}}"
            )));
        }
        if !(domain_radius > 0.0) {
            return Err(SteklovError::Argument(
                "domain radius must be positive".into(),
            ));
        }
        Ok(Self {
            dim,
            domain_radius,
            id: id.into(),
            metric,
        })
    }

    /// The flat metric on all of `R^dim`.
    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(
            dim,
            f64::INFINITY,
            format!("euclidean{dim}"),
            Arc::new(move |_: &[f64]| DMatrix::identity(dim, dim)),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    /// Short human-readable description, used as `chart_id` in reports.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim
            && x.iter().all(|c| c.is_finite())
            && x.iter().map(|c| c * c).sum::<f64>().sqrt() < self.domain_radius
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(SteklovError::Domain(format!(
                "{x:?} outside chart {} (radius {})",
                self.id, self.domain_radius
            )))
        }
    }

    /// `g(x)`; callers are responsible for staying inside the domain.
    pub fn g(&self, x: &[f64]) -> DMatrix<f64> {
        (self.metric)(x)
    }

    pub fn g_inv(&self, x: &[f64]) -> DMatrix<f64> {
        let g = self.g(x);
        let n = self.dim;
        g.try_inverse()
            .unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN))
    }

    pub fn sqrt_det(&self, x: &[f64]) -> f64 {
        self.g(x).determinant().sqrt()
    }

    /// Gradient of `√det g` by central differences.
    pub fn grad_sqrt_det(&self, x: &[f64]) -> DVector<f64> {
        let h = 1e-5;
        let mut xp = x.to_vec();
        DVector::from_fn(self.dim, |i, _| {
            xp[i] = x[i] + h;
            let fp = self.sqrt_det(&xp);
            xp[i] = x[i] - h;
            let fm = self.sqrt_det(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
    }

    /// The chart `x ↦ g(x/ρ)` on the ball of radius `ρ · domain_radius`: the
    /// homothetic domain with all lengths multiplied by `ρ`, so Steklov
    /// eigenvalues divide by `ρ`.
    pub fn scaled(&self, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(SteklovError::Argument("scale must be positive".into()));
        }
        let inner = self.metric.clone();
        let metric: MetricFn = Arc::new(move |x: &[f64]| {
            let y: Vec<f64> = x.iter().map(|c| c / rho).collect();
            inner(&y)
        });
        Self::new(
            self.dim,
            self.domain_radius * rho,
            format!("{}*{rho}", self.id),
            metric,
        )
    }
}

/// `sin(√K ρ)/(√K ρ)` (or its hyperbolic analogue for `K < 0`).
fn jacobi_ratio(k: f64, rho: f64) -> f64 {
    let t = k * rho * rho;
    if t.abs() < 1e-4 {
        1.0 - t / 6.0 + t * t / 120.0 - t * t * t / 5040.0
    } else if t > 0.0 {
        let s = t.sqrt();
        s.sin() / s
    } else {
        let s = (-t).sqrt();
        s.sinh() / s
    }
}

struct ChartSetup {
    frame: NormalFrame,
    base: Vec<f64>,
}

fn setup(m: &ModelManifold, y0: &[f64], r: f64, domain_radius: f64) -> Result<ChartSetup> {
    m.check_point(y0)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(SteklovError::Range(format!("radius {r} must be positive")));
    }
    if !(domain_radius > 0.0) {
        return Err(SteklovError::Argument(
            "domain radius must be positive".into(),
        ));
    }
    if let Some(bound) = m.injectivity_bound() {
        if r * domain_radius >= bound {
            return Err(SteklovError::Range(format!(
                "r = {r} with chart radius {domain_radius} exceeds the injectivity bound {bound} of {}",
                m.label()
            )));
        }
    }
    let cp = curvature_at(m, y0)?;
    Ok(ChartSetup {
        frame: ricci_frame(&cp),
        base: y0.to_vec(),
    })
}

fn describe(kind: &str, m: &ModelManifold, y0: &[f64], r: f64) -> String {
    let pt: Vec<String> = y0.iter().map(|c| format!("{c}")).collect();
    format!("{kind}[{}@({}),r={r}]", m.label(), pt.join(","))
}

/// Metric of `y ↦ Exp_{y0}(yⁱEᵢ)` at `y`, in closed form for catalogs.
///
/// In geodesic polar coordinates around `y0`, a space form of curvature `K`
/// has radial factor 1 and tangential factor `(sin(√K ρ)/(√K ρ))²`. For the
/// product only the sphere block is curved.
fn catalog_normal_metric(k: f64, pi: &DMatrix<f64>, y: &[f64]) -> DMatrix<f64> {
    let n = y.len();
    let yv = DVector::from_column_slice(y);
    let a = pi * &yv;
    let rho = a.norm();
    let mut g = DMatrix::identity(n, n);
    if rho == 0.0 {
        return g;
    }
    let f = jacobi_ratio(k, rho);
    let ahat = a / rho;
    let radial = &ahat * ahat.transpose();
    g += (pi - &radial) * (f * f - 1.0);
    g
}

/// The rescaled normal-coordinate metric `g_r(x) = g(rx)` on the unit ball
/// (chart radius [`DEFAULT_DOMAIN_RADIUS`]), written in the Ricci frame at
/// `y0`.
pub fn pullback_ball_chart(m: &ModelManifold, y0: &[f64], r: f64) -> Result<MetricChart> {
    pullback_ball_chart_in(m, y0, r, DEFAULT_DOMAIN_RADIUS)
}

/// [`pullback_ball_chart`] with an explicit chart radius.
pub fn pullback_ball_chart_in(
    m: &ModelManifold,
    y0: &[f64],
    r: f64,
    domain_radius: f64,
) -> Result<MetricChart> {
    let s = setup(m, y0, r, domain_radius)?;
    let n = m.dim();
    let id = describe("g_r", m, y0, r);
    let metric: MetricFn = match m {
        ModelManifold::Euclidean { .. } => Arc::new(move |_: &[f64]| DMatrix::identity(n, n)),
        ModelManifold::Custom(_) => return pullback_numeric_with(m, s, r, domain_radius, id),
        _ => {
            let (k, h) = m
                .curved_factor(y0)
                .expect("catalog manifolds have a curved factor");
            let f = &s.frame.frame;
            let pi = f.transpose() * h * f;
            // clean rounding so that Π is an exact projection on exact frames
            let pi = pi.map(|v| if v.abs() < 1e-14 { 0.0 } else { v });
            Arc::new(move |x: &[f64]| {
                let y: Vec<f64> = x.iter().map(|c| c * r).collect();
                catalog_normal_metric(k, &pi, &y)
            })
        }
    };
    MetricChart::new(n, domain_radius, id, metric)
}

/// [`pullback_ball_chart`] computed for any manifold from the numerical
/// exponential map: `g_r(x) = dΦᵀ G(Φ(rx)) dΦ` with `Φ(y) = Exp_{y0}(yⁱEᵢ)`
/// and `dΦ` by central differences of a fixed-step RK4 flow.
pub fn pullback_ball_chart_numeric(m: &ModelManifold, y0: &[f64], r: f64) -> Result<MetricChart> {
    let s = setup(m, y0, r, DEFAULT_DOMAIN_RADIUS)?;
    let id = describe("g_r~", m, y0, r);
    pullback_numeric_with(m, s, r, DEFAULT_DOMAIN_RADIUS, id)
}

fn pullback_numeric_with(
    m: &ModelManifold,
    s: ChartSetup,
    r: f64,
    domain_radius: f64,
    id: String,
) -> Result<MetricChart> {
    let n = m.dim();
    let manifold = m.clone();
    let frame = s.frame.frame.clone();
    let base = s.base.clone();
    let phi = move |y: &[f64]| -> Vec<f64> {
        let v = &frame * DVector::from_column_slice(y);
        let metric = |x: &[f64]| manifold.coordinate_metric(x);
        integrate_geodesic_fixed(&metric, &base, v.as_slice(), PULLBACK_RK4_STEPS)
    };
    // the chart must stay inside the coordinate domain of the manifold
    for i in 0..n {
        for sign in [-1.0, 1.0] {
            let mut y = vec![0.0; n];
            y[i] = sign * r * domain_radius * 0.999;
            let q = phi(&y);
            if !m.contains(&q) {
                return Err(SteklovError::Range(format!(
                    "r = {r} leaves the chart of {} inside the rescaled domain",
                    m.label()
                )));
            }
        }
    }
    let manifold = m.clone();
    let metric: MetricFn = Arc::new(move |x: &[f64]| {
        if x.iter().all(|c| *c == 0.0) {
            return DMatrix::identity(n, n);
        }
        let y: Vec<f64> = x.iter().map(|c| c * r).collect();
        let h = 1e-5;
        let mut jac = DMatrix::zeros(n, n);
        let mut yp = y.clone();
        for c in 0..n {
            yp[c] = y[c] + h;
            let fp = phi(&yp);
            yp[c] = y[c] - h;
            let fm = phi(&yp);
            yp[c] = y[c];
            for row in 0..n {
                jac[(row, c)] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        let q = phi(&y);
        let g = manifold.coordinate_metric(&q);
        let out = jac.transpose() * g * &jac;
        (&out + out.transpose()) * 0.5
    });
    MetricChart::new(n, domain_radius, id, metric)
}

/// The ellipsoid chart `h_r(x) = D g_r(Dx) D` with `D = diag(1 + r² bᵢ)` in the
/// Ricci frame at `y0`. With `b = 0` this is exactly [`pullback_ball_chart`].
pub fn pullback_ellipsoid_chart(
    m: &ModelManifold,
    y0: &[f64],
    r: f64,
    b: &[f64],
) -> Result<MetricChart> {
    if b.len() != m.dim() {
        return Err(SteklovError::Argument(
            "eccentricity vector has wrong dimension".into(),
        ));
    }
    let ball = pullback_ball_chart(m, y0, r)?;
    if b.iter().all(|c| *c == 0.0) {
        return Ok(ball);
    }
    let d: Vec<f64> = b.iter().map(|bi| 1.0 + r * r * bi).collect();
    let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
    let dmax = d.iter().cloned().fold(0.0, f64::max);
    if dmin <= 0.0 {
        return Err(SteklovError::Range(
            "stretch factors 1 + r²bᵢ must be positive".into(),
        ));
    }
    let domain_radius = ball.domain_radius() / dmax;
    let inner = ball.metric.clone();
    let dd = DMatrix::from_diagonal(&DVector::from_vec(d.clone()));
    let metric: MetricFn = Arc::new(move |x: &[f64]| {
        let y: Vec<f64> = x.iter().zip(&d).map(|(c, s)| c * s).collect();
        &dd * inner(&y) * &dd
    });
    let pts: Vec<String> = b.iter().map(|c| format!("{c}")).collect();
    MetricChart::new(
        m.dim(),
        domain_radius,
        format!("h_r{}[b=({})]", &ball.id()[3..], pts.join(",")),
        metric,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::manifold::CustomChart;

    fn max_dev_from_second_order(m: &ModelManifold, r: f64) -> f64 {
        // g ≈ δ + (r²/3) R_kilj x^k x^l, with K = 1: (r²/3)(x_i x_j − |x|² δ_ij)
        let chart = pullback_ball_chart(m, &[0.0, 0.0], r).unwrap();
        let mut worst: f64 = 0.0;
        for a in 0..24 {
            let th = a as f64 * std::f64::consts::PI / 12.0;
            for rad in [0.25, 0.5, 0.75, 1.0] {
                let x = [rad * th.cos(), rad * th.sin()];
                let g = chart.g(&x);
                let n2 = rad * rad;
                for i in 0..2 {
                    for j in 0..2 {
                        let d = if i == j { 1.0 } else { 0.0 };
                        let model = d + r * r / 3.0 * (x[i] * x[j] - n2 * d);
                        worst = worst.max((g[(i, j)] - model).abs());
                    }
                }
            }
        }
        worst
    }

    #[test]
    fn euclidean_chart_is_identity() {
        let m = ModelManifold::euclidean(3).unwrap();
        let c = pullback_ball_chart(&m, &[1.0, 2.0, 3.0], 0.5).unwrap();
        assert_eq!(c.g(&[0.3, -0.2, 0.9]), DMatrix::identity(3, 3));
    }

    #[test]
    fn sphere_chart_is_identity_at_origin() {
        let m = ModelManifold::sphere(1.0).unwrap();
        let c = pullback_ball_chart(&m, &[0.0, 0.0], 0.2).unwrap();
        assert_eq!(c.g(&[0.0, 0.0]), DMatrix::identity(2, 2));
    }

    #[test]
    fn sphere_chart_second_order_residual_is_third_order() {
        let m = ModelManifold::sphere(1.0).unwrap();
        let rs = [0.4, 0.2, 0.1];
        let e: Vec<f64> = rs
            .iter()
            .map(|&r| max_dev_from_second_order(&m, r))
            .collect();
        let slope = (e[0] / e[2]).ln() / (rs[0] / rs[2]).ln();
        assert!(slope >= 2.5, "slope {slope}");
    }

    #[test]
    fn numeric_pullback_matches_closed_form() {
        let sphere = ModelManifold::sphere(1.0).unwrap();
        let custom = ModelManifold::Custom(CustomChart::wrap(&sphere, 3.0).unwrap());
        let exact = pullback_ball_chart(&sphere, &[0.0, 0.0], 0.3).unwrap();
        let numeric = pullback_ball_chart(&custom, &[0.0, 0.0], 0.3).unwrap();
        for x in [[0.5, 0.1], [-0.7, 0.7], [0.0, 1.0]] {
            let d = (exact.g(&x) - numeric.g(&x)).amax();
            assert!(d < 1e-6, "{d}");
        }
    }

    #[test]
    fn chart_invariants_hold() {
        let m = ModelManifold::hyperbolic(1.0).unwrap();
        let c = pullback_ball_chart(&m, &[0.1, 0.0], 0.3).unwrap();
        let x = [0.4, -0.6];
        let g = c.g(&x);
        assert!((c.g_inv(&x) * &g - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
        assert!((c.sqrt_det(&x).powi(2) - g.determinant()).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_with_zero_b_is_ball() {
        let m = ModelManifold::ProductS2xR;
        let ball = pullback_ball_chart(&m, &[0.0, 0.0, 0.0], 0.3).unwrap();
        let ell = pullback_ellipsoid_chart(&m, &[0.0, 0.0, 0.0], 0.3, &[0.0, 0.0, 0.0]).unwrap();
        let x = [0.3, 0.2, -0.4];
        assert_eq!(ball.g(&x), ell.g(&x));
    }

    #[test]
    fn flat_ellipsoid_is_constant_stretch() {
        let m = ModelManifold::euclidean(2).unwrap();
        let c = pullback_ellipsoid_chart(&m, &[0.0, 0.0], 0.1, &[1.0, -1.0]).unwrap();
        let g = c.g(&[0.2, 0.5]);
        assert!((g[(0, 0)] - 1.01f64.powi(2)).abs() < 1e-15);
        assert!((g[(1, 1)] - 0.99f64.powi(2)).abs() < 1e-15);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn oversized_radius_is_range_error() {
        let m = ModelManifold::sphere(1.0).unwrap();
        assert!(matches!(
            pullback_ball_chart(&m, &[0.0, 0.0], 1.1),
            Err(SteklovError::Range(_))
        ));
    }
}
