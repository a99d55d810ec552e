//! P1 finite elements for the Steklov problem `Δ_g u = 0` in Ω,
//! `∂_η u = ν u` on ∂Ω, in its variational form
//! `∫ ⟨∇u, ∇v⟩_g dv_g = ν ∫_{∂Ω} u v dσ_g`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::geometry::MetricChart;
use crate::linalg::{
    boundary_last_ordering, generalized_eigen, householder_congruence, householder_to_e1,
    sorted_symmetric_eigen, CsrMatrix, EnvelopeCholesky,
};
use crate::mesh::SimplicialMesh;

/// Boundary size above which [`SolverMethod::Auto`] switches from the dense
/// boundary eigenproblem to subspace iteration.
pub const DENSE_BOUNDARY_LIMIT: usize = 3000;

/// Stiffness and boundary mass of a mesh under a metric chart.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub stiffness: CsrMatrix,
    pub boundary_mass: CsrMatrix,
    /// Sorted vertex indices carrying boundary mass.
    pub boundary_dofs: Vec<usize>,
    pub mesh_level: u32,
    pub chart_id: String,
    pub dim: usize,
}

impl AssembledSystem {
    pub fn n_dofs(&self) -> usize {
        self.stiffness.n()
    }

    /// `σ_g(∂Ω)` as seen by the boundary quadrature.
    pub fn total_boundary_mass(&self) -> f64 {
        self.boundary_mass.total()
    }
}

/// Reference barycentric gradients `∇λ_a` (rows) of a simplex and its volume.
fn p1_gradients(p: &[&[f64]]) -> (DMatrix<f64>, f64) {
    let d = p.len() - 1;
    let j = DMatrix::from_fn(d, d, |r, c| p[c + 1][r] - p[0][r]);
    let det = j.determinant();
    let jinv = j.try_inverse().expect("nondegenerate cell");
    let mut grads = DMatrix::zeros(d + 1, d);
    for a in 0..d {
        for c in 0..d {
            grads[(a + 1, c)] = jinv[(a, c)];
            grads[(0, c)] -= jinv[(a, c)];
        }
    }
    let fact = if d == 2 { 2.0 } else { 6.0 };
    (grads, det.abs() / fact)
}

/// Assembles `K_ab = ∫ √|g| g^{ij} ∂_iλ_a ∂_jλ_b dx` with the metric frozen at
/// each cell centroid, and `M_ab = ∫_{∂Ω} λ_a λ_b dσ_g` with 2-point Gauss per
/// edge (dimension 2) or the 3-point interior rule per triangle (dimension 3).
pub fn assemble(mesh: &SimplicialMesh, chart: &MetricChart) -> Result<AssembledSystem> {
    let d = mesh.dim();
    if chart.dim() != d {
        return Err(SteklovError::Argument(format!(
            "chart dimension {} ≠ mesh dimension {d}",
            chart.dim()
        )));
    }
    for v in 0..mesh.n_vertices() {
        chart.check(mesh.vertex(v))?;
    }
    let elements: Vec<(Vec<usize>, DMatrix<f64>)> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let cell = mesh.cell(c).to_vec();
            let p: Vec<&[f64]> = cell.iter().map(|&v| mesh.vertex(v)).collect();
            let centroid: Vec<f64> = (0..d)
                .map(|k| p.iter().map(|q| q[k]).sum::<f64>() / (d + 1) as f64)
                .collect();
            let g = chart.g(&centroid);
            let sqrt_det = g.determinant().sqrt();
            let ginv = g.try_inverse().expect("metric is positive definite");
            let (grads, vol) = p1_gradients(&p);
            let ke = &grads * ginv * grads.transpose() * (vol * sqrt_det);
            (cell, ke)
        })
        .collect();
    let mut kt = Vec::with_capacity(elements.len() * (d + 1) * (d + 1));
    for (cell, ke) in &elements {
        for a in 0..=d {
            for b in 0..=d {
                kt.push((cell[a], cell[b], ke[(a, b)]));
            }
        }
    }
    let facets: Vec<(Vec<usize>, DMatrix<f64>)> = (0..mesh.n_boundary_facets())
        .into_par_iter()
        .map(|f| {
            let fv = mesh.boundary_facet(f).to_vec();
            let p: Vec<&[f64]> = fv.iter().map(|&v| mesh.vertex(v)).collect();
            (fv, facet_mass(chart, &p))
        })
        .collect();
    let mut mt = Vec::with_capacity(facets.len() * d * d);
    for (fv, me) in &facets {
        for a in 0..d {
            for b in 0..d {
                mt.push((fv[a], fv[b], me[(a, b)]));
            }
        }
    }
    let n = mesh.n_vertices();
    Ok(AssembledSystem {
        stiffness: CsrMatrix::from_triplets(n, kt),
        boundary_mass: CsrMatrix::from_triplets(n, mt),
        boundary_dofs: mesh.boundary_vertices(),
        mesh_level: mesh.level(),
        chart_id: chart.id().to_string(),
        dim: d,
    })
}

/// Local boundary mass matrix of one facet.
fn facet_mass(chart: &MetricChart, p: &[&[f64]]) -> DMatrix<f64> {
    let d = p.len();
    let mut me = DMatrix::zeros(d, d);
    if d == 2 {
        let t = [p[1][0] - p[0][0], p[1][1] - p[0][1]];
        let s = 0.5 / 3f64.sqrt();
        for xi in [0.5 - s, 0.5 + s] {
            let x = [p[0][0] + xi * t[0], p[0][1] + xi * t[1]];
            let g = chart.g(&x);
            let len =
                (t[0] * t[0] * g[(0, 0)] + 2.0 * t[0] * t[1] * g[(0, 1)] + t[1] * t[1] * g[(1, 1)])
                    .sqrt();
            let phi = [1.0 - xi, xi];
            for a in 0..2 {
                for b in 0..2 {
                    me[(a, b)] += 0.5 * len * phi[a] * phi[b];
                }
            }
        }
    } else {
        let jac = DMatrix::from_fn(3, 2, |r, c| p[c + 1][r] - p[0][r]);
        for (s, t) in [
            (1.0 / 6.0, 1.0 / 6.0),
            (2.0 / 3.0, 1.0 / 6.0),
            (1.0 / 6.0, 2.0 / 3.0),
        ] {
            let x: Vec<f64> = (0..3)
                .map(|k| p[0][k] + s * jac[(k, 0)] + t * jac[(k, 1)])
                .collect();
            let g = chart.g(&x);
            let area = (jac.transpose() * g * &jac).determinant().sqrt();
            let phi = [1.0 - s - t, s, t];
            for a in 0..3 {
                for b in 0..3 {
                    me[(a, b)] += area / 6.0 * phi[a] * phi[b];
                }
            }
        }
    }
    me
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    /// Schur reduction below [`DENSE_BOUNDARY_LIMIT`] boundary dofs, subspace
    /// iteration above.
    Auto,
    /// Eliminate interior dofs and solve the dense boundary eigenproblem.
    Schur,
    /// Block inverse iteration with `K + σ M`.
    SubspaceIteration,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub method: SolverMethod,
    /// Shift `σ` of the subspace iteration.
    pub shift: f64,
    /// Relative Ritz-value change at which the subspace iteration stops.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: SolverMethod::Auto,
            shift: 0.5,
            tolerance: 1e-13,
            max_iterations: 2000,
        }
    }
}

/// Smallest Steklov eigenpairs.
#[derive(Clone, Debug)]
pub struct SteklovSpectrum {
    /// Ascending; the first entry is the constant mode.
    pub eigenvalues: Vec<f64>,
    /// Nodal vectors normalized by `uᵀ M u = 1`.
    pub eigenvectors: Vec<Vec<f64>>,
    /// `|K u − ν M u| / (‖K‖_∞ |u| + |ν| |M u|)` per pair.
    pub residuals: Vec<f64>,
    pub mesh_level: u32,
    pub chart_id: String,
    pub method: SolverMethod,
}

#[derive(Serialize, Deserialize)]
struct SpectrumJson {
    eigenvalues: Vec<f64>,
    mesh_level: u32,
    chart_id: String,
    residuals: Vec<f64>,
}

impl SteklovSpectrum {
    /// `ν₂`.
    pub fn nu2(&self) -> f64 {
        self.eigenvalues[1]
    }

    /// `{eigenvalues, mesh_level, chart_id, residuals}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SpectrumJson {
            eigenvalues: self.eigenvalues.clone(),
            mesh_level: self.mesh_level,
            chart_id: self.chart_id.clone(),
            residuals: self.residuals.clone(),
        })
        .expect("spectrum serializes")
    }
}

/// The `k` smallest eigenpairs of `K u = ν M u` with the default solver.
pub fn solve_steklov(system: &AssembledSystem, k: usize) -> Result<SteklovSpectrum> {
    solve_steklov_with(system, k, &SolverOptions::default())
}

pub fn solve_steklov_with(
    system: &AssembledSystem,
    k: usize,
    opts: &SolverOptions,
) -> Result<SteklovSpectrum> {
    let nb = system.boundary_dofs.len();
    if k < 2 || k > nb {
        return Err(SteklovError::Argument(format!(
            "k = {k} must lie in [2, {nb}]"
        )));
    }
    let method = match opts.method {
        SolverMethod::Auto if nb < DENSE_BOUNDARY_LIMIT => SolverMethod::Schur,
        SolverMethod::Auto => SolverMethod::SubspaceIteration,
        m => m,
    };
    let (values, vectors) = match method {
        SolverMethod::SubspaceIteration => subspace_iteration(system, k, opts)?,
        _ => schur_solve(system, k)?,
    };
    let residuals = vectors
        .iter()
        .zip(&values)
        .map(|(u, &nu)| residual(system, u, nu))
        .collect();
    Ok(SteklovSpectrum {
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
        mesh_level: system.mesh_level,
        chart_id: system.chart_id.clone(),
        method,
    })
}

fn residual(system: &AssembledSystem, u: &[f64], nu: f64) -> f64 {
    let ku = system.stiffness.mul_vec(u);
    let mu = system.boundary_mass.mul_vec(u);
    let norm = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let r: Vec<f64> = ku.iter().zip(&mu).map(|(a, b)| a - nu * b).collect();
    let k_norm = (0..system.n_dofs())
        .map(|i| system.stiffness.row(i).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    norm(&r) / (k_norm * norm(u) + nu.abs() * norm(&mu) + f64::MIN_POSITIVE)
}

fn constant_mode(system: &AssembledSystem) -> (f64, Vec<f64>) {
    let n = system.n_dofs();
    let ones = vec![1.0; n];
    let m1 = system.boundary_mass.bilinear(&ones, &ones);
    let k1 = system.stiffness.bilinear(&ones, &ones);
    (k1 / m1, vec![1.0 / m1.sqrt(); n])
}

/// Dirichlet-to-Neumann reduction: `S = K_BB − K_BI K_II⁻¹ K_IB` from a partial
/// envelope Cholesky factorization, then `S u = ν M_BB u` on the complement of
/// the constants, which are removed with a Householder reflection.
fn schur_solve(system: &AssembledSystem, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = system.n_dofs();
    let bdofs = &system.boundary_dofs;
    let nb = bdofs.len();
    let ni = n - nb;
    let perm = boundary_last_ordering(&system.stiffness, bdofs);
    let kp = system.stiffness.permuted(&perm);
    let fac = EnvelopeCholesky::factor(&kp, ni)?;
    let trailing: Vec<usize> = (ni..n).collect();
    let s = fac.schur_complement(&kp.submatrix(&trailing, &trailing));
    let mbb = system.boundary_mass.submatrix(&perm[ni..], &perm[ni..]);
    let lm = mbb
        .cholesky()
        .ok_or_else(|| {
            SteklovError::Numeric("boundary mass matrix is not positive definite".into())
        })?
        .l();
    // C = L⁻¹ S L⁻ᵀ
    let x = lm
        .solve_lower_triangular(&s)
        .ok_or_else(|| SteklovError::Numeric("singular boundary mass factor".into()))?;
    let c = lm
        .solve_lower_triangular(&x.transpose())
        .expect("factor already checked");
    let y0 = lm.transpose() * DVector::from_element(nb, 1.0);
    let w = householder_to_e1(&y0);
    let hch = householder_congruence(&c, &w);
    let block = hch.view((1, 1), (nb - 1, nb - 1)).into_owned();
    let (vals, z) = sorted_symmetric_eigen(block);

    let (nu1, u1) = constant_mode(system);
    let mut values = vec![nu1];
    let mut vectors = vec![u1];
    let lt = lm.transpose();
    for j in 0..k - 1 {
        let mut full = DVector::zeros(nb);
        full.rows_mut(1, nb - 1).copy_from(&z.column(j));
        let hz = &full - &w * (2.0 * w.dot(&full));
        let ub = lt
            .solve_upper_triangular(&hz)
            .expect("factor already checked");
        let ui = fac.harmonic_extension(ub.as_slice());
        let mut u = vec![0.0; n];
        for (pos, &orig) in perm.iter().enumerate() {
            u[orig] = if pos < ni { ui[pos] } else { ub[pos - ni] };
        }
        values.push(vals[j]);
        vectors.push(u);
    }
    Ok((values, vectors))
}

/// Block inverse iteration on `(K + σM)⁻¹ M` with Rayleigh–Ritz on the pencil
/// `(K, M)`.
fn subspace_iteration(
    system: &AssembledSystem,
    k: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = system.n_dofs();
    let nb = system.boundary_dofs.len();
    let p = nb.min((2 * k).max(k + 8));
    let a = system
        .stiffness
        .add_scaled(&system.boundary_mass, opts.shift);
    let perm = boundary_last_ordering(&a, &system.boundary_dofs);
    let ap = a.permuted(&perm);
    let kp = system.stiffness.permuted(&perm);
    let mp = system.boundary_mass.permuted(&perm);
    let fac = EnvelopeCholesky::factor(&ap, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e4c_10f5);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut previous = vec![f64::INFINITY; k];
    let mut ritz = Vec::new();
    for iter in 0..opts.max_iterations {
        let y: Vec<Vec<f64>> = x.iter().map(|col| fac.solve(&mp.mul_vec(col))).collect();
        let ky: Vec<Vec<f64>> = y.iter().map(|c| kp.mul_vec(c)).collect();
        let my: Vec<Vec<f64>> = y.iter().map(|c| mp.mul_vec(c)).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(s, t)| s * t).sum::<f64>();
        let kr = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&y[i], &ky[j]) + dot(&y[j], &ky[i])));
        let mr = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&y[i], &my[j]) + dot(&y[j], &my[i])));
        let (vals, q) = generalized_eigen(&kr, &mr)?;
        x = (0..p)
            .map(|c| {
                let mut col = vec![0.0; n];
                for (r, yr) in y.iter().enumerate() {
                    let coef = q[(r, c)];
                    for (dst, src) in col.iter_mut().zip(yr) {
                        *dst += coef * src;
                    }
                }
                col
            })
            .collect();
        ritz = vals;
        let change = (0..k)
            .map(|i| (ritz[i] - previous[i]).abs() / ritz[i].abs().max(1.0))
            .fold(0.0, f64::max);
        previous.copy_from_slice(&ritz[..k]);
        if change < opts.tolerance && iter > 2 {
            let values = ritz[..k].to_vec();
            let vectors = x[..k]
                .iter()
                .map(|col| {
                    let mut u = vec![0.0; n];
                    for (pos, &orig) in perm.iter().enumerate() {
                        u[orig] = col[pos];
                    }
                    u
                })
                .collect();
            return Ok((values, vectors));
        }
    }
    Err(SteklovError::Numeric(format!(
        "subspace iteration did not converge in {} iterations (Ritz values {:?})",
        opts.max_iterations,
        &ritz[..k.min(ritz.len())]
    )))
}

/// `uᵀKu / uᵀMu`.
pub fn rayleigh_quotient(system: &AssembledSystem, u: &[f64]) -> Result<f64> {
    if u.len() != system.n_dofs() {
        return Err(SteklovError::Argument(
            "vector length differs from the dof count".into(),
        ));
    }
    let m = system.boundary_mass.bilinear(u, u);
    let scale: f64 = system
        .boundary_dofs
        .iter()
        .map(|&i| u[i] * u[i])
        .sum::<f64>();
    if !(m > 0.0)
        || m <= 1e-14
            * scale
            * system
                .boundary_mass
                .get(system.boundary_dofs[0], system.boundary_dofs[0])
    {
        return Err(SteklovError::Argument("vector has no boundary mass".into()));
    }
    Ok(system.stiffness.bilinear(u, u) / m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{pullback_ball_chart, ModelManifold};
    use crate::mesh::unit_ball_mesh;

    fn disk(level: u32) -> AssembledSystem {
        assemble(
            &unit_ball_mesh(2, level).unwrap(),
            &MetricChart::euclidean(2).unwrap(),
        )
        .unwrap()
    }

    /// Independent oracle: dense Schur complement by LU and a dense generalized
    /// eigensolve on the boundary block, constant mode included.
    fn dense_oracle(system: &AssembledSystem) -> Vec<f64> {
        let n = system.n_dofs();
        let b = &system.boundary_dofs;
        let interior: Vec<usize> = (0..n).filter(|i| b.binary_search(i).is_err()).collect();
        let k = &system.stiffness;
        let kii = k.submatrix(&interior, &interior);
        let kib = k.submatrix(&interior, b);
        let kbb = k.submatrix(b, b);
        let s = &kbb - kib.transpose() * kii.lu().solve(&kib).unwrap();
        let m = system.boundary_mass.submatrix(b, b);
        let (vals, _) = generalized_eigen(&((&s + s.transpose()) * 0.5), &m).unwrap();
        vals
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let s = disk(3);
        assert!(s.stiffness.row_sums().iter().all(|v| v.abs() < 1e-12));
        assert!(s.stiffness.asymmetry() < 1e-14);
    }

    #[test]
    fn boundary_mass_supported_on_boundary() {
        let s = disk(3);
        for i in 0..s.n_dofs() {
            let on_boundary = s.boundary_dofs.binary_search(&i).is_ok();
            let row: f64 = s.boundary_mass.row(i).map(|(_, v)| v.abs()).sum();
            assert_eq!(on_boundary, row > 0.0);
        }
    }

    #[test]
    fn boundary_mass_converges_to_perimeter() {
        let e: Vec<f64> = (3..6)
            .map(|l| (disk(l).total_boundary_mass() - 2.0 * std::f64::consts::PI).abs())
            .collect();
        assert!((e[0] / e[2]).log2() / 2.0 > 1.9);
    }

    #[test]
    fn sphere_boundary_mass_is_geodesic_circle_length() {
        let m = ModelManifold::sphere(1.0).unwrap();
        let chart = pullback_ball_chart(&m, &[0.0, 0.0], 0.2).unwrap();
        let exact = 2.0 * std::f64::consts::PI * 0.2f64.sin() / 0.2;
        let e: Vec<f64> = (3..6)
            .map(|l| {
                (assemble(&unit_ball_mesh(2, l).unwrap(), &chart)
                    .unwrap()
                    .total_boundary_mass()
                    - exact)
                    .abs()
            })
            .collect();
        assert!((e[0] / e[2]).log2() / 2.0 > 1.9, "{e:?}");
    }

    #[test]
    fn schur_matches_dense_oracle_and_subspace_iteration() {
        let s = disk(3);
        let oracle = dense_oracle(&s);
        let schur = solve_steklov_with(
            &s,
            6,
            &SolverOptions {
                method: SolverMethod::Schur,
                ..Default::default()
            },
        )
        .unwrap();
        let sub = solve_steklov_with(
            &s,
            6,
            &SolverOptions {
                method: SolverMethod::SubspaceIteration,
                ..Default::default()
            },
        )
        .unwrap();
        for i in 0..6 {
            assert!(
                (schur.eigenvalues[i] - oracle[i]).abs() < 1e-10,
                "{i}: {} vs {}",
                schur.eigenvalues[i],
                oracle[i]
            );
            assert!(
                (sub.eigenvalues[i] - oracle[i]).abs() < 1e-9,
                "{i}: {} vs {}",
                sub.eigenvalues[i],
                oracle[i]
            );
        }
    }

    #[test]
    fn spectrum_invariants() {
        let s = disk(4);
        let spec = solve_steklov(&s, 5).unwrap();
        assert!(spec.eigenvalues[0].abs() <= 1e-8);
        let ones = vec![1.0; s.n_dofs()];
        for (u, &nu) in spec.eigenvectors.iter().zip(&spec.eigenvalues).skip(1) {
            let mean = s.boundary_mass.bilinear(u, &ones);
            assert!(mean.abs() <= 1e-8);
            assert!((s.boundary_mass.bilinear(u, u) - 1.0).abs() < 1e-9);
            let rq = rayleigh_quotient(&s, u).unwrap();
            assert!((rq - nu).abs() <= 1e-9 * nu);
        }
        assert!(
            spec.residuals.iter().all(|r| *r < 1e-9),
            "{:?}",
            spec.residuals
        );
    }

    #[test]
    fn more_eigenvalues_reproduce_fewer() {
        let s = disk(3);
        let a = solve_steklov(&s, 3).unwrap();
        let b = solve_steklov(&s, 7).unwrap();
        for i in 0..3 {
            assert!((a.eigenvalues[i] - b.eigenvalues[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn rayleigh_quotient_checks() {
        let mesh = unit_ball_mesh(2, 4).unwrap();
        let s = assemble(&mesh, &MetricChart::euclidean(2).unwrap()).unwrap();
        let x1: Vec<f64> = (0..mesh.n_vertices()).map(|v| mesh.vertex(v)[0]).collect();
        assert!((rayleigh_quotient(&s, &x1).unwrap() - 1.0).abs() < 5e-3);
        let xy: Vec<f64> = (0..mesh.n_vertices())
            .map(|v| mesh.vertex(v)[0] + mesh.vertex(v)[1])
            .collect();
        let scaled: Vec<f64> = xy.iter().map(|c| 7.5 * c).collect();
        let (a, b) = (
            rayleigh_quotient(&s, &xy).unwrap(),
            rayleigh_quotient(&s, &scaled).unwrap(),
        );
        assert!((a - b).abs() <= 1e-12 * a);
        let mut interior_only = vec![0.0; s.n_dofs()];
        interior_only[0] = 1.0;
        assert!(matches!(
            rayleigh_quotient(&s, &interior_only),
            Err(SteklovError::Argument(_))
        ));
    }

    #[test]
    fn argument_and_domain_errors() {
        let s = disk(1);
        assert!(matches!(
            solve_steklov(&s, 1),
            Err(SteklovError::Argument(_))
        ));
        assert!(matches!(
            solve_steklov(&s, 13),
            Err(SteklovError::Argument(_))
        ));
        let m = ModelManifold::sphere(1.0).unwrap();
        let chart = crate::geometry::pullback_ball_chart_in(&m, &[0.0, 0.0], 0.2, 0.5).unwrap();
        assert!(matches!(
            assemble(&unit_ball_mesh(2, 1).unwrap(), &chart),
            Err(SteklovError::Domain(_))
        ));
    }

    #[test]
    fn json_shape() {
        let spec = solve_steklov(&disk(2), 3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&spec.to_json()).unwrap();
        for key in ["eigenvalues", "mesh_level", "chart_id", "residuals"] {
            assert!(v.get(key).is_some());
        }
    }
}
