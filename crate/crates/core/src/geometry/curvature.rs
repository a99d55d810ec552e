use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::geodesic::christoffel;
use super::manifold::ModelManifold;
use crate::error::{Result, SteklovError};

/// Curvature at a base point, expressed in an orthonormal frame.
///
/// Sign conventions: `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`,
/// `R_ijkl = ⟨R(E_i,E_j)E_k, E_l⟩` and `Ric(X,Y) = −Σ_k ⟨R(X,E_k)Y, E_k⟩`, so
/// the unit sphere has `Ric = (N−1)·g` and `R_ijkl = δ_jk δ_il − δ_ik δ_jl`.
#[derive(Clone, Debug)]
pub struct CurvaturePacket {
    pub base_point: DVector<f64>,
    /// Columns are the frame vectors `E_i` in chart coordinates.
    pub frame: DMatrix<f64>,
    riemann: Vec<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub ricci_min: f64,
}

impl CurvaturePacket {
    fn from_riemann(base_point: DVector<f64>, frame: DMatrix<f64>, riemann: Vec<f64>) -> Self {
        let n = frame.ncols();
        let mut ricci = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s -= riemann[idx(n, i, k, j, k)];
                }
                ricci[(i, j)] = s;
            }
        }
        ricci = (&ricci + ricci.transpose()) * 0.5;
        let scalar = ricci.trace();
        let ricci_min = SymmetricEigen::new(ricci.clone()).eigenvalues.min();
        Self {
            base_point,
            frame,
            riemann,
            ricci,
            scalar,
            ricci_min,
        }
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn riemann(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.riemann[idx(self.dim(), i, j, k, l)]
    }

    /// Re-expresses the packet in the frame `frame · rotation`, where
    /// `rotation` is orthogonal.
    pub fn rotated(&self, rotation: &DMatrix<f64>) -> Self {
        let n = self.dim();
        let mut out = vec![0.0; n.pow(4)];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut s = 0.0;
                        for i in 0..n {
                            for j in 0..n {
                                let rij = rotation[(i, a)] * rotation[(j, b)];
                                if rij == 0.0 {
                                    continue;
                                }
                                for k in 0..n {
                                    for l in 0..n {
                                        s += rij
                                            * rotation[(k, c)]
                                            * rotation[(l, d)]
                                            * self.riemann[idx(n, i, j, k, l)];
                                    }
                                }
                            }
                        }
                        out[idx(n, a, b, c, d)] = s;
                    }
                }
            }
        }
        Self::from_riemann(self.base_point.clone(), &self.frame * rotation, out)
    }

    /// Largest violation of `R_ijkl = −R_jikl = −R_ijlk`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = self.riemann(i, j, k, l);
                        worst = worst.max((r + self.riemann(j, i, k, l)).abs());
                        worst = worst.max((r + self.riemann(i, j, l, k)).abs());
                    }
                }
            }
        }
        worst
    }
}

fn idx(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

/// A frame diagonalizing the Ricci tensor.
#[derive(Clone, Debug)]
pub struct NormalFrame {
    /// Columns are frame vectors in chart coordinates.
    pub frame: DMatrix<f64>,
    /// Descending.
    pub ricci_eigenvalues: Vec<f64>,
    /// Orthogonal matrix taking the packet frame to this frame.
    pub rotation: DMatrix<f64>,
}

/// Orthonormal frame at `p` obtained from the Cholesky factor of the metric.
pub fn orthonormal_frame(m: &ModelManifold, p: &[f64]) -> Result<DMatrix<f64>> {
    let g = m.metric_at(p)?;
    let chol = g
        .cholesky()
        .ok_or_else(|| SteklovError::Numeric("metric not positive definite".into()))?;
    let l = chol.l();
    let n = m.dim();
    let lt_inv = l
        .transpose()
        .try_inverse()
        .ok_or_else(|| SteklovError::Numeric("singular metric factor".into()))?;
    debug_assert_eq!(lt_inv.nrows(), n);
    Ok(lt_inv)
}

/// Curvature packet at `p`: closed form for catalog manifolds, finite
/// differences of Christoffel symbols for custom charts.
pub fn curvature_at(m: &ModelManifold, p: &[f64]) -> Result<CurvaturePacket> {
    m.check_point(p)?;
    match m {
        ModelManifold::Custom(c) => curvature_numeric(m, p, 1e-4 * c.domain_radius()),
        _ => curvature_closed_form(m, p),
    }
}

fn curvature_closed_form(m: &ModelManifold, p: &[f64]) -> Result<CurvaturePacket> {
    let n = m.dim();
    let frame = orthonormal_frame(m, p)?;
    let mut riemann = vec![0.0; n.pow(4)];
    if let Some((k_curv, h)) = m.curved_factor(p) {
        // R(X,Y)Z = K (h(Y,Z) X − h(X,Z) Y) on the curved factor
        let hf = frame.transpose() * h * &frame;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        riemann[idx(n, i, j, k, l)] =
                            k_curv * (hf[(j, k)] * hf[(i, l)] - hf[(i, k)] * hf[(j, l)]);
                    }
                }
            }
        }
    }
    Ok(CurvaturePacket::from_riemann(
        DVector::from_column_slice(p),
        frame,
        riemann,
    ))
}

/// Curvature from second-order central differences with step `h`, valid for
/// any manifold (catalogs included, for cross-checks).
pub fn curvature_numeric(m: &ModelManifold, p: &[f64], h: f64) -> Result<CurvaturePacket> {
    m.check_point(p)?;
    let n = m.dim();
    let metric = |x: &[f64]| m.coordinate_metric(x);
    let gamma = christoffel(&metric, p, h);
    let mut dgamma = Vec::with_capacity(n);
    let mut xp = p.to_vec();
    for a in 0..n {
        xp[a] = p[a] + h;
        let gp = christoffel(&metric, &xp, h);
        xp[a] = p[a] - h;
        let gm = christoffel(&metric, &xp, h);
        xp[a] = p[a];
        dgamma.push(
            gp.iter()
                .zip(&gm)
                .map(|(u, v)| (u - v) / (2.0 * h))
                .collect::<Vec<_>>(),
        );
    }
    let gam = |k: usize, i: usize, j: usize| gamma[(k * n + i) * n + j];
    let dgam = |a: usize, k: usize, i: usize, j: usize| dgamma[a][(k * n + i) * n + j];
    // coordinate components R(∂_i,∂_j)∂_k = Rm^m_ijk ∂_m
    let g = m.coordinate_metric(p);
    let mut coord = vec![0.0; n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = 0.0;
                    for mm in 0..n {
                        let mut r = dgam(i, mm, j, k) - dgam(j, mm, i, k);
                        for q in 0..n {
                            r += gam(mm, i, q) * gam(q, j, k) - gam(mm, j, q) * gam(q, i, k);
                        }
                        s += g[(l, mm)] * r;
                    }
                    coord[idx(n, i, j, k, l)] = s;
                }
            }
        }
    }
    let frame = orthonormal_frame(m, p)?;
    let base = CurvaturePacket {
        base_point: DVector::from_column_slice(p),
        frame: DMatrix::identity(n, n),
        riemann: coord,
        ricci: DMatrix::zeros(n, n),
        scalar: 0.0,
        ricci_min: 0.0,
    };
    // transform coordinate components to the orthonormal frame
    let mut packet = base.rotated(&frame);
    packet.frame = frame;
    Ok(packet)
}

/// Diagonalizes the Ricci tensor of `cp`.
///
/// Eigenvalues are sorted descending. Within a cluster of equal eigenvalues the
/// basis is obtained by projecting the packet frame vectors onto the
/// eigenspace in order, so repeated runs give the same frame; each vector is
/// then signed so its first nonzero component is positive.
pub fn ricci_frame(cp: &CurvaturePacket) -> NormalFrame {
    let n = cp.dim();
    let eig = SymmetricEigen::new(cp.ricci.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let tie = 1e-9 * scale;

    let mut rotation = DMatrix::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end - 1] - values[end]).abs() <= tie {
            end += 1;
        }
        let span: Vec<DVector<f64>> = order[start..end]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        let mut chosen: Vec<DVector<f64>> = Vec::new();
        for e in 0..n {
            if chosen.len() == span.len() {
                break;
            }
            let unit = DVector::from_fn(n, |r, _| if r == e { 1.0 } else { 0.0 });
            let mut proj = DVector::zeros(n);
            for s in &span {
                proj += s * s.dot(&unit);
            }
            for c in &chosen {
                let d = c.dot(&proj);
                proj -= c * d;
            }
            let len = proj.norm();
            if len > 1e-6 {
                chosen.push(proj / len);
            }
        }
        for (offset, mut v) in chosen.into_iter().enumerate() {
            if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
                if *first < 0.0 {
                    v = -v;
                }
            }
            rotation.set_column(start + offset, &v);
        }
        start = end;
    }
    NormalFrame {
        frame: &cp.frame * &rotation,
        ricci_eigenvalues: values,
        rotation,
    }
}
