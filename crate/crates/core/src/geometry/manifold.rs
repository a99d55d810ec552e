use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SteklovError};

/// Coordinate metric of a user-supplied chart.
pub type MetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A manifold given by a single coordinate chart `|x| < domain_radius`.
#[derive(Clone)]
pub struct CustomChart {
    dim: usize,
    domain_radius: f64,
    label: String,
    metric: MetricFn,
}

impl CustomChart {
    /// The metric function must return symmetric positive definite matrices on
    /// the stated domain; this is spot-checked at the origin.
    pub fn new(
        dim: usize,
        domain_radius: f64,
        label: impl Into<String>,
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
        let g0 = metric(&vec![0.0; dim]);
        if g0.nrows() != dim || g0.ncols() != dim {
            return Err(SteklovError::Argument("metric has wrong shape".into()));
        }
        if (&g0 - g0.transpose()).amax() > 1e-12 * g0.amax().max(1.0)
            || g0.clone().cholesky().is_none()
        {
            return Err(SteklovError::Argument(
                "metric is not symmetric positive definite at the origin".into(),
            ));
        }
        Ok(Self {
            dim,
            domain_radius,
            label: label.into(),
            metric,
        })
    }

    /// Wraps the coordinate metric of a catalog manifold, so that every
    /// operation goes through the generic numerical code paths.
    pub fn wrap(m: &ModelManifold, domain_radius: f64) -> Result<Self> {
        let inner = m.clone();
        let metric: MetricFn = Arc::new(move |x: &[f64]| inner.coordinate_metric(x));
        Self::new(
            m.dim(),
            domain_radius,
            format!("custom({})", m.label()),
            metric,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        (self.metric)(x)
    }
}

impl fmt::Debug for CustomChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomChart")
            .field("dim", &self.dim)
            .field("domain_radius", &self.domain_radius)
            .field("label", &self.label)
            .finish()
    }
}

/// The manifolds the laboratory knows about.
///
/// Points are coordinate vectors in one global chart per manifold:
///
/// - `Euclidean`: Cartesian coordinates.
/// - `Sphere`: stereographic coordinates from the south pole; the origin is the
///   north pole and `|u| = 1` is the equator.
/// - `Hyperbolic`: Poincaré disk coordinates `|u| < 1`.
/// - `ProductS2xR`: `(u1, u2, t)` with `u` stereographic on the unit sphere.
/// - `Custom`: the chart of the [`CustomChart`].
#[derive(Clone, Debug)]
pub enum ModelManifold {
    Euclidean { dim: usize },
    Sphere { radius: f64 },
    Hyperbolic { radius: f64 },
    ProductS2xR,
    Custom(CustomChart),
}

impl ModelManifold {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(SteklovError::Argument(format!(
                "dimension {dim} not in {{2,3}}"
            )));
        }
        Ok(Self::Euclidean { dim })
    }

    pub fn sphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SteklovError::Argument(
                "sphere radius must be positive".into(),
            ));
        }
        Ok(Self::Sphere { radius })
    }

    pub fn hyperbolic(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SteklovError::Argument(
                "hyperbolic radius must be positive".into(),
            ));
        }
        Ok(Self::Hyperbolic { radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Euclidean { dim } => *dim,
            Self::Sphere { .. } | Self::Hyperbolic { .. } => 2,
            Self::ProductS2xR => 3,
            Self::Custom(c) => c.dim,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Euclidean { dim } => format!("euclidean{dim}"),
            Self::Sphere { radius } => format!("sphere(R={radius})"),
            Self::Hyperbolic { radius } => format!("hyperbolic(R={radius})"),
            Self::ProductS2xR => "s2xr".to_string(),
            Self::Custom(c) => c.label.clone(),
        }
    }

    /// The distinguished base point (coordinate origin).
    pub fn origin(&self) -> DVector<f64> {
        DVector::zeros(self.dim())
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() || p.iter().any(|c| !c.is_finite()) {
            return false;
        }
        match self {
            Self::Hyperbolic { .. } => p[0] * p[0] + p[1] * p[1] < 1.0,
            Self::Custom(c) => norm(p) < c.domain_radius,
            _ => true,
        }
    }

    pub(crate) fn check_point(&self, p: &[f64]) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(SteklovError::Domain(format!(
                "point {p:?} not in the chart of {}",
                self.label()
            )))
        }
    }

    /// Coordinate expression of the metric at `p` (no domain check).
    pub fn coordinate_metric(&self, p: &[f64]) -> DMatrix<f64> {
        match self {
            Self::Euclidean { dim } => DMatrix::identity(*dim, *dim),
            Self::Sphere { radius } => {
                let lam = radius * 2.0 / (1.0 + p[0] * p[0] + p[1] * p[1]);
                DMatrix::identity(2, 2) * (lam * lam)
            }
            Self::Hyperbolic { radius } => {
                let lam = radius * 2.0 / (1.0 - p[0] * p[0] - p[1] * p[1]);
                DMatrix::identity(2, 2) * (lam * lam)
            }
            Self::ProductS2xR => {
                let lam = 2.0 / (1.0 + p[0] * p[0] + p[1] * p[1]);
                DMatrix::from_diagonal(&DVector::from_vec(vec![lam * lam, lam * lam, 1.0]))
            }
            Self::Custom(c) => c.metric(p),
        }
    }

    pub fn metric_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        Ok(self.coordinate_metric(p))
    }

    /// Length bound on tangent vectors for which `exp_map` is injective.
    /// `None` for custom charts, where leaving the chart is reported instead.
    pub fn injectivity_bound(&self) -> Option<f64> {
        match self {
            Self::Euclidean { .. } | Self::Hyperbolic { .. } => Some(f64::INFINITY),
            Self::Sphere { radius } => Some(PI * radius),
            Self::ProductS2xR => Some(PI),
            Self::Custom(_) => None,
        }
    }

    /// Metric norm of the tangent vector `v` at `p`.
    pub fn norm_at(&self, p: &[f64], v: &[f64]) -> f64 {
        let g = self.coordinate_metric(p);
        let v = DVector::from_column_slice(v);
        (v.transpose() * &g * &v)[(0, 0)].max(0.0).sqrt()
    }

    /// Metric restricted to the curved factor, as used by the closed-form
    /// curvature: the full metric for constant curvature surfaces, the sphere
    /// block for `ProductS2xR`, zero for flat space.
    pub(crate) fn curved_factor(&self, p: &[f64]) -> Option<(f64, DMatrix<f64>)> {
        match self {
            Self::Euclidean { .. } => None,
            Self::Sphere { radius } => Some((1.0 / (radius * radius), self.coordinate_metric(p))),
            Self::Hyperbolic { radius } => {
                Some((-1.0 / (radius * radius), self.coordinate_metric(p)))
            }
            Self::ProductS2xR => {
                let mut h = self.coordinate_metric(p);
                h[(2, 2)] = 0.0;
                Some((1.0, h))
            }
            Self::Custom(_) => None,
        }
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Stereographic embedding of the unit sphere: `u = 0` is the north pole.
pub(crate) fn sphere_embed(u: &[f64]) -> [f64; 3] {
    let s = 1.0 + u[0] * u[0] + u[1] * u[1];
    [2.0 * u[0] / s, 2.0 * u[1] / s, (2.0 - s) / s]
}

pub(crate) fn sphere_chart(q: &[f64; 3]) -> Option<[f64; 2]> {
    let d = 1.0 + q[2];
    if d <= 1e-14 {
        return None;
    }
    Some([q[0] / d, q[1] / d])
}

/// Jacobian of [`sphere_embed`] (3x2, columns are images of coordinate vectors).
pub(crate) fn sphere_embed_jacobian(u: &[f64]) -> [[f64; 2]; 3] {
    let s = 1.0 + u[0] * u[0] + u[1] * u[1];
    let mut j = [[0.0; 2]; 3];
    for a in 0..2 {
        for b in 0..2 {
            let delta = if a == b { 1.0 } else { 0.0 };
            j[a][b] = 2.0 * delta / s - 4.0 * u[a] * u[b] / (s * s);
        }
    }
    for b in 0..2 {
        j[2][b] = -4.0 * u[b] / (s * s);
    }
    j
}

/// Hyperboloid embedding `(t, x, y)` of the Poincaré disk.
pub(crate) fn hyperboloid_embed(u: &[f64]) -> [f64; 3] {
    let n2 = u[0] * u[0] + u[1] * u[1];
    let w = 1.0 - n2;
    [(1.0 + n2) / w, 2.0 * u[0] / w, 2.0 * u[1] / w]
}

pub(crate) fn hyperboloid_chart(q: &[f64; 3]) -> [f64; 2] {
    let d = 1.0 + q[0];
    [q[1] / d, q[2] / d]
}

pub(crate) fn hyperboloid_embed_jacobian(u: &[f64]) -> [[f64; 2]; 3] {
    let n2 = u[0] * u[0] + u[1] * u[1];
    let w = 1.0 - n2;
    let mut j = [[0.0; 2]; 3];
    for b in 0..2 {
        j[0][b] = 4.0 * u[b] / (w * w);
    }
    for a in 0..2 {
        for b in 0..2 {
            let delta = if a == b { 1.0 } else { 0.0 };
            j[a + 1][b] = 2.0 * delta / w + 4.0 * u[a] * u[b] / (w * w);
        }
    }
    j
}

pub(crate) fn minkowski(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_validate() {
        assert!(ModelManifold::euclidean(4).is_err());
        assert!(ModelManifold::sphere(0.0).is_err());
        assert!(ModelManifold::hyperbolic(-1.0).is_err());
        assert_eq!(ModelManifold::ProductS2xR.dim(), 3);
    }

    #[test]
    fn custom_chart_rejects_indefinite_metric() {
        let bad: MetricFn =
            Arc::new(|_x: &[f64]| DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        assert!(CustomChart::new(2, 1.0, "bad", bad).is_err());
    }

    #[test]
    fn stereographic_round_trip() {
        let u = [0.3, -1.7];
        let q = sphere_embed(&u);
        assert!((q.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-14);
        let back = sphere_chart(&q).unwrap();
        assert!((back[0] - u[0]).abs() < 1e-14 && (back[1] - u[1]).abs() < 1e-14);
        let h = hyperboloid_embed(&[0.2, 0.5]);
        assert!((minkowski(&h, &h) + 1.0).abs() < 1e-13);
    }

    #[test]
    fn embedding_is_conformal() {
        let u = [0.4, 0.9];
        let j = sphere_embed_jacobian(&u);
        let lam = 2.0 / (1.0 + u[0] * u[0] + u[1] * u[1]);
        for a in 0..2 {
            for b in 0..2 {
                let dot: f64 = (0..3).map(|k| j[k][a] * j[k][b]).sum();
                let want = if a == b { lam * lam } else { 0.0 };
                assert!((dot - want).abs() < 1e-14);
            }
        }
    }
}
