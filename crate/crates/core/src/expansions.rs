//! Closed-form asymptotic predictors for `ν₂` and for volumes.
//!
//! Every predictor has the form `leading(t) + coefficient · monomial(t)`, and
//! [`ExpansionPrediction`] keeps the two parts apart so that fits can target
//! the coefficient alone. Symbols: `N` dimension, `S` scalar curvature,
//! `R_min` least Ricci eigenvalue, `|B|` volume of the Euclidean unit ball.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{matched_radius, unit_ball_volume, GeodesicEllipsoidSpec};
use crate::error::{Result, SteklovError};
use crate::geometry::{curvature_at, pullback_ball_chart, ModelManifold};
use crate::mesh::unit_ball_mesh;
use crate::steklov::{assemble, solve_steklov};

/// Which expansion a prediction evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaId {
    /// `ν₂(B_g(y0,r)) = 1/r + (2R_min/(3(N+2))) r + o(r)`.
    BallNu2OfRadius,
    /// `ν₂ = (v/|B|)^{−1/N} + ((4N R_min − S)/(6N(N+2))) (v/|B|)^{1/N}` for balls of volume `v`.
    BallNu2OfVolume,
    /// `ν₂(E(y0,r)) = 1/r + (2S/(3N(N+2))) r + o(r)`.
    EllipsoidNu2OfRadius,
    /// `ν₂ = (v/|B|)^{−1/N} + (S/(2N(N+2))) (v/|B|)^{1/N}` for ellipsoids of volume `v`.
    EllipsoidNu2OfVolume,
    /// `|B_g(y0,r)| = |B| r^N (1 − S r²/(6(N+2))) + O(r^{N+4})`.
    BallVolume,
    /// `WB(v) = (v/π)^{−1/2} + (S_M/16)(v/π)^{1/2} + o(v^{1/2})` on surfaces.
    WbSurfaceProfile,
}

impl FormulaId {
    pub fn tag(self) -> &'static str {
        match self {
            FormulaId::BallNu2OfRadius => "ball-nu2-of-radius",
            FormulaId::BallNu2OfVolume => "ball-nu2-of-volume",
            FormulaId::EllipsoidNu2OfRadius => "ellipsoid-nu2-of-radius",
            FormulaId::EllipsoidNu2OfVolume => "ellipsoid-nu2-of-volume",
            FormulaId::BallVolume => "ball-volume",
            FormulaId::WbSurfaceProfile => "wb-surface-profile",
        }
    }
}

/// A first-order expansion `evaluate(t) = leading(t) + coefficient · monomial(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPrediction {
    pub formula_id: FormulaId,
    pub dim: usize,
    pub coefficient: f64,
}

impl ExpansionPrediction {
    pub fn ball_nu2_of_radius(dim: usize, r_min: f64) -> Self {
        let n = dim as f64;
        Self {
            formula_id: FormulaId::BallNu2OfRadius,
            dim,
            coefficient: 2.0 * r_min / (3.0 * (n + 2.0)),
        }
    }

    pub fn ball_nu2_of_volume(dim: usize, r_min: f64, s: f64) -> Self {
        let n = dim as f64;
        Self {
            formula_id: FormulaId::BallNu2OfVolume,
            dim,
            coefficient: (4.0 * n * r_min - s) / (6.0 * n * (n + 2.0)),
        }
    }

    pub fn ellipsoid_nu2_of_radius(dim: usize, s: f64) -> Self {
        let n = dim as f64;
        Self {
            formula_id: FormulaId::EllipsoidNu2OfRadius,
            dim,
            coefficient: 2.0 * s / (3.0 * n * (n + 2.0)),
        }
    }

    pub fn ellipsoid_nu2_of_volume(dim: usize, s: f64) -> Self {
        let n = dim as f64;
        Self {
            formula_id: FormulaId::EllipsoidNu2OfVolume,
            dim,
            coefficient: s / (2.0 * n * (n + 2.0)),
        }
    }

    pub fn ball_volume(dim: usize, s: f64) -> Self {
        let n = dim as f64;
        Self {
            formula_id: FormulaId::BallVolume,
            dim,
            coefficient: -s / (6.0 * (n + 2.0)),
        }
    }

    pub fn wb_surface_profile(s_max: f64) -> Self {
        Self {
            formula_id: FormulaId::WbSurfaceProfile,
            dim: 2,
            coefficient: s_max / 16.0,
        }
    }

    /// The argument-dependent zeroth-order term.
    pub fn leading(&self, t: f64) -> f64 {
        let n = self.dim as f64;
        match self.formula_id {
            FormulaId::BallNu2OfRadius | FormulaId::EllipsoidNu2OfRadius => 1.0 / t,
            FormulaId::BallNu2OfVolume
            | FormulaId::EllipsoidNu2OfVolume
            | FormulaId::WbSurfaceProfile => (t / unit_ball_volume(self.dim)).powf(-1.0 / n),
            FormulaId::BallVolume => unit_ball_volume(self.dim) * t.powi(self.dim as i32),
        }
    }

    /// The monomial multiplying the coefficient.
    pub fn monomial(&self, t: f64) -> f64 {
        let n = self.dim as f64;
        match self.formula_id {
            FormulaId::BallNu2OfRadius | FormulaId::EllipsoidNu2OfRadius => t,
            FormulaId::BallNu2OfVolume
            | FormulaId::EllipsoidNu2OfVolume
            | FormulaId::WbSurfaceProfile => (t / unit_ball_volume(self.dim)).powf(1.0 / n),
            FormulaId::BallVolume => unit_ball_volume(self.dim) * t.powi(self.dim as i32 + 2),
        }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.leading(t) + self.coefficient * self.monomial(t)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(SteklovError::Argument(format!("dimension {dim} < 2")));
    }
    Ok(())
}

fn check_positive(name: &str, t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(SteklovError::Argument(format!(
            "{name} must be positive, got {t}"
        )));
    }
    Ok(())
}

/// `1/r + (2r/(3(N+2))) R_min`.
pub fn ball_nu2_expansion(r: f64, dim: usize, r_min: f64) -> Result<f64> {
    check_dim(dim)?;
    check_positive("r", r)?;
    Ok(ExpansionPrediction::ball_nu2_of_radius(dim, r_min).evaluate(r))
}

/// `(v/|B|)^{−1/N} + ((4N R_min − S)/(6N(N+2))) (v/|B|)^{1/N}`.
pub fn ball_nu2_of_volume(v: f64, dim: usize, r_min: f64, s: f64) -> Result<f64> {
    check_dim(dim)?;
    check_positive("v", v)?;
    Ok(ExpansionPrediction::ball_nu2_of_volume(dim, r_min, s).evaluate(v))
}

/// `1/r + (2r/(3N(N+2))) S`.
pub fn ellipsoid_nu2_expansion(r: f64, dim: usize, s: f64) -> Result<f64> {
    check_dim(dim)?;
    check_positive("r", r)?;
    Ok(ExpansionPrediction::ellipsoid_nu2_of_radius(dim, s).evaluate(r))
}

/// `(v/|B|)^{−1/N} + (S/(2N(N+2))) (v/|B|)^{1/N}`, also the lower bound
/// predictor for the Weinstock–Brock profile.
pub fn ellipsoid_nu2_of_volume(v: f64, dim: usize, s: f64) -> Result<f64> {
    check_dim(dim)?;
    check_positive("v", v)?;
    Ok(ExpansionPrediction::ellipsoid_nu2_of_volume(dim, s).evaluate(v))
}

/// `r^N |B| (1 − S r²/(6(N+2)))`.
pub fn ball_volume_expansion(r: f64, dim: usize, s: f64) -> Result<f64> {
    check_dim(dim)?;
    if !(r >= 0.0) {
        return Err(SteklovError::Argument(format!(
            "r must be nonnegative, got {r}"
        )));
    }
    Ok(ExpansionPrediction::ball_volume(dim, s).evaluate(r))
}

/// `(v/π)^{−1/2} + (S_M/16)(v/π)^{1/2}`.
pub fn wb_surface_profile(v: f64, s_max: f64) -> Result<f64> {
    check_positive("v", v)?;
    Ok(ExpansionPrediction::wb_surface_profile(s_max).evaluate(v))
}

/// `Σ 1/νᵢ` over `ν₂..ν_{N+1}` and whether it is at least `N − tolerance`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrockSum {
    pub sum: f64,
    pub satisfied: bool,
}

/// Brock's inequality `Σ_{i=2}^{N+1} 1/νᵢ ≥ N` for domains with the volume of
/// the unit ball, given `ν₂..ν_{N+1}`.
pub fn brock_sum_bound(eigenvalues: &[f64], tolerance: f64) -> Result<BrockSum> {
    if eigenvalues.is_empty() || eigenvalues.iter().any(|v| !(*v > 0.0)) {
        return Err(SteklovError::Argument(
            "Brock sum needs positive eigenvalues".into(),
        ));
    }
    let sum: f64 = eigenvalues.iter().map(|v| 1.0 / v).sum();
    Ok(BrockSum {
        sum,
        satisfied: sum >= eigenvalues.len() as f64 - tolerance,
    })
}

/// A manifold and base point being compared.
#[derive(Clone, Debug)]
pub struct ProfileSite<'a> {
    pub manifold: &'a ModelManifold,
    pub base_point: &'a [f64],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub v: f64,
    pub predictor_a: f64,
    pub predictor_b: f64,
    pub nu2_a: f64,
    pub nu2_b: f64,
    /// Sign of `predictor_b − predictor_a` (−1, 0 or 1).
    pub predicted_order: i8,
    /// Sign of `nu2_b − nu2_a`.
    pub computed_order: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub scalar_a: f64,
    pub scalar_b: f64,
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    /// Whether the predictor ordering is strict and the same on every row.
    pub fn predictor_ordering_strict(&self) -> bool {
        let first = self.rows.first().map(|r| r.predicted_order).unwrap_or(0);
        first != 0 && self.rows.iter().all(|r| r.predicted_order == first)
    }

    /// Volumes at which the computed ordering agrees with the predicted one.
    pub fn agreeing_volumes(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.predicted_order == r.computed_order)
            .map(|r| r.v)
            .collect()
    }
}

fn sign(x: f64, tol: f64) -> i8 {
    if x > tol {
        1
    } else if x < -tol {
        -1
    } else {
        0
    }
}

/// `ν₂` of the distinguished domain of volume `v` at a site: the geodesic
/// ellipsoid of the volume-matched radius (the ball in dimension 2).
pub fn distinguished_nu2(site: &ProfileSite, v: f64, level: u32) -> Result<f64> {
    let m = site.manifold;
    let r = matched_radius(m, site.base_point, v)?;
    let chart = if m.dim() == 2 {
        pullback_ball_chart(m, site.base_point, r)?
    } else {
        GeodesicEllipsoidSpec::new(m, site.base_point, r)?.chart(m)?
    };
    let mesh = unit_ball_mesh(m.dim(), level)?;
    Ok(solve_steklov(&assemble(&mesh, &chart)?, 2)?.nu2() / r)
}

/// Tabulates the ellipsoid predictors and computed `ν₂` at two sites over a
/// volume grid. Ties in the predictors are detected to `1e-14` relative, ties
/// in computed values to `1e-12` relative.
pub fn compare_profiles(
    a: &ProfileSite,
    b: &ProfileSite,
    v_grid: &[f64],
    level: u32,
) -> Result<CompareReport> {
    if a.manifold.dim() != b.manifold.dim() {
        return Err(SteklovError::Argument(
            "compared manifolds must have the same dimension".into(),
        ));
    }
    let dim = a.manifold.dim();
    let sa = curvature_at(a.manifold, a.base_point)?.scalar;
    let sb = curvature_at(b.manifold, b.base_point)?.scalar;
    let pa = ExpansionPrediction::ellipsoid_nu2_of_volume(dim, sa);
    let pb = ExpansionPrediction::ellipsoid_nu2_of_volume(dim, sb);
    let rows = v_grid
        .par_iter()
        .map(|&v| {
            check_positive("v", v)?;
            let (predictor_a, predictor_b) = (pa.evaluate(v), pb.evaluate(v));
            let nu2_a = distinguished_nu2(a, v, level)?;
            let nu2_b = if a.manifold.label() == b.manifold.label() && a.base_point == b.base_point
            {
                nu2_a
            } else {
                distinguished_nu2(b, v, level)?
            };
            Ok(CompareRow {
                v,
                predictor_a,
                predictor_b,
                nu2_a,
                nu2_b,
                predicted_order: sign(predictor_b - predictor_a, 1e-14 * predictor_a.abs()),
                computed_order: sign(nu2_b - nu2_a, 1e-12 * nu2_a.abs()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompareReport {
        scalar_a: sa,
        scalar_b: sb,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_radius_examples() {
        assert!((ball_nu2_expansion(0.2, 2, 1.0).unwrap() - (5.0 + 0.4 / 12.0)).abs() < 1e-14);
        assert!((ball_nu2_expansion(0.2, 2, 1.0).unwrap() - 5.03333).abs() < 1e-5);
        assert!((ball_nu2_expansion(0.2, 2, -1.0).unwrap() - 4.96667).abs() < 1e-5);
        assert_eq!(ball_nu2_expansion(0.37, 3, 0.0).unwrap(), 1.0 / 0.37);
        assert!(ball_nu2_expansion(0.0, 2, 1.0).is_err());
        assert!(ball_nu2_expansion(-1.0, 2, 1.0).is_err());
    }

    #[test]
    fn ball_volume_form_coefficients() {
        assert!(
            (ExpansionPrediction::ball_nu2_of_volume(2, 1.0, 2.0).coefficient - 0.125).abs()
                < 1e-15
        );
        assert!(
            (ExpansionPrediction::ball_nu2_of_volume(3, 0.0, 2.0).coefficient + 1.0 / 45.0).abs()
                < 1e-15
        );
        let v = 0.3;
        assert_eq!(
            ball_nu2_of_volume(v, 2, 0.0, 0.0).unwrap(),
            (v / PI).powf(-0.5)
        );
    }

    #[test]
    fn ellipsoid_examples() {
        assert!((ellipsoid_nu2_expansion(0.3, 3, 2.0).unwrap() - 3.36).abs() < 1e-5);
        assert_eq!(ellipsoid_nu2_expansion(0.3, 3, 0.0).unwrap(), 1.0 / 0.3);
        for r in [0.05, 0.2, 0.7] {
            for s in [-2.0, 0.0, 2.0, 5.0] {
                let e = ellipsoid_nu2_expansion(r, 2, s).unwrap();
                let b = ball_nu2_expansion(r, 2, s / 2.0).unwrap();
                assert!((e - b).abs() < 1e-14);
            }
        }
        assert!((ellipsoid_nu2_of_volume(0.1, 2, 2.0).unwrap() - 5.62729).abs() < 1e-5);
        assert!(
            (ExpansionPrediction::ellipsoid_nu2_of_volume(2, 3.0).coefficient - 3.0 / 16.0).abs()
                < 1e-15
        );
    }

    #[test]
    fn ellipsoid_dominates_ball_when_ricci_is_anisotropic() {
        for (dim, s, r_min) in [(3usize, 2.0, 0.0), (3, 3.0, 0.5), (4, 1.0, -0.2)] {
            let n = dim as f64;
            let e = ExpansionPrediction::ellipsoid_nu2_of_volume(dim, s).coefficient;
            let b = ExpansionPrediction::ball_nu2_of_volume(dim, r_min, s).coefficient;
            assert!((e - b - 2.0 / (3.0 * (n + 2.0)) * (s / n - r_min)).abs() < 1e-15);
            assert!(
                ellipsoid_nu2_of_volume(0.05, dim, s).unwrap()
                    >= ball_nu2_of_volume(0.05, dim, r_min, s).unwrap()
            );
        }
    }

    #[test]
    fn ball_volume_examples() {
        assert!((ball_volume_expansion(0.2, 2, 2.0).unwrap() - 0.125245).abs() < 1e-6);
        let cap = 2.0 * PI * (1.0 - 0.2f64.cos());
        assert!((cap - 0.125246).abs() < 1e-6);
        assert_eq!(
            ball_volume_expansion(0.3, 3, 0.0).unwrap(),
            4.0 * PI / 3.0 * 0.3f64.powi(3)
        );
        assert!((ball_volume_expansion(0.1, 3, 2.0).unwrap() - 0.0041860).abs() < 1e-7);
    }

    #[test]
    fn surface_profile_examples() {
        assert!((wb_surface_profile(0.1, 2.0).unwrap() - 5.62729).abs() < 1e-5);
        assert!((wb_surface_profile(0.1, -2.0).unwrap() - 5.58268).abs() < 1e-5);
        assert_eq!(wb_surface_profile(0.1, 0.0).unwrap(), (0.1 / PI).powf(-0.5));
        for v in [0.01, 0.1, 0.5] {
            assert!(
                (wb_surface_profile(v, 1.3).unwrap() - ellipsoid_nu2_of_volume(v, 2, 1.3).unwrap())
                    .abs()
                    < 1e-14
            );
        }
    }

    #[test]
    fn brock_examples() {
        let b = brock_sum_bound(&[1.0, 1.0], 1e-12).unwrap();
        assert_eq!(b.sum, 2.0);
        assert!(b.satisfied);
        assert_eq!(brock_sum_bound(&[1.0, 1.0, 1.0], 0.0).unwrap().sum, 3.0);
        assert!(!brock_sum_bound(&[1.1, 1.1], 1e-3).unwrap().satisfied);
        assert!(brock_sum_bound(&[1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn leading_plus_monomial_is_evaluate() {
        let p = ExpansionPrediction::ball_nu2_of_volume(3, 0.4, 1.7);
        for t in [0.01, 0.2, 1.5] {
            assert_eq!(p.evaluate(t), p.leading(t) + p.coefficient * p.monomial(t));
        }
    }

    #[test]
    fn compare_predictor_ordering() {
        let h = ModelManifold::hyperbolic(1.0).unwrap();
        let s = ModelManifold::sphere(1.0).unwrap();
        let a = ProfileSite {
            manifold: &h,
            base_point: &[0.0, 0.0],
        };
        let b = ProfileSite {
            manifold: &s,
            base_point: &[0.0, 0.0],
        };
        let rep = compare_profiles(&a, &b, &[0.05, 0.02], 3).unwrap();
        assert!(rep.predictor_ordering_strict());
        assert!(rep.rows.iter().all(|r| r.predicted_order == 1));
        let same = compare_profiles(&b, &b, &[0.05, 0.02], 2).unwrap();
        assert!(same
            .rows
            .iter()
            .all(|r| r.predicted_order == 0 && r.computed_order == 0));
    }

    proptest::proptest! {
        #[test]
        fn dimension_two_consistency(v in 1e-4f64..2.0, s in -5.0f64..5.0) {
            let e = ellipsoid_nu2_of_volume(v, 2, s).unwrap();
            let b = ball_nu2_of_volume(v, 2, s / 2.0, s).unwrap();
            proptest::prop_assert!((e - b).abs() <= 1e-13 * e.abs());
        }

        #[test]
        fn coefficient_increases_with_curvature(s in -5.0f64..5.0, ds in 1e-3f64..3.0, dim in 2usize..6) {
            let lo = ExpansionPrediction::ellipsoid_nu2_of_volume(dim, s).coefficient;
            let hi = ExpansionPrediction::ellipsoid_nu2_of_volume(dim, s + ds).coefficient;
            proptest::prop_assert!(hi > lo);
        }

        #[test]
        fn flat_predictors_are_exact(v in 1e-4f64..2.0, dim in 2usize..5) {
            let flat = (v / unit_ball_volume(dim)).powf(-1.0 / dim as f64);
            proptest::prop_assert_eq!(ball_nu2_of_volume(v, dim, 0.0, 0.0).unwrap(), flat);
            proptest::prop_assert_eq!(ellipsoid_nu2_of_volume(v, dim, 0.0).unwrap(), flat);
        }
    }
}
