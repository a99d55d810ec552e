//! Coefficient fits from computed spectra, empirical scans of the
//! Weinstock–Brock profile, Brock sweeps over random star domains, and a
//! simplex search over star domains of fixed volume.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{
    ball_volume, isoperimetric_row, matched_radius, normalize_star_area, star_volume,
    summarize_isoperimetric, unit_ball_volume, volume_of, GeodesicEllipsoidSpec,
    IsoperimetricTable,
};
use crate::error::{Result, SteklovError};
use crate::expansions::{brock_sum_bound, ExpansionPrediction};
use crate::geometry::{curvature_at, pullback_ball_chart, MetricChart, ModelManifold};
use crate::mesh::{star_domain_mesh, unit_ball_mesh, RadialProfile, StarProfile};
use crate::steklov::{assemble, solve_steklov};

/// Default radius grid for coefficient fits.
pub const DEFAULT_R_GRID: [f64; 5] = [0.30, 0.25, 0.20, 0.15, 0.10];

/// A fitted first-order coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFit {
    pub c_hat: f64,
    pub stderr: f64,
    pub r_grid: Vec<f64>,
    pub mesh_levels: Vec<u32>,
    pub extrapolation: String,
}

/// `(4ν_{L+1} − ν_L)/3`, exact for an `O(h²)` error model.
pub fn richardson_extrapolate(coarse: f64, fine: f64) -> f64 {
    if coarse == fine {
        return fine;
    }
    (4.0 * fine - coarse) / 3.0
}

/// Least squares of `(νⱼ − 1/tⱼ)/tⱼ` against a constant, plus a `tⱼ` term if
/// `include_linear`. Returns the constant with its standard error.
pub fn coefficient_fit(samples: &[(f64, f64)], include_linear: bool) -> Result<CoefficientFit> {
    if samples.len() < 3 {
        return Err(SteklovError::Argument(format!(
            "coefficient fit needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    let mut ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    if ts.iter().any(|t| !(*t > 0.0)) {
        return Err(SteklovError::Argument(
            "fit abscissae must be positive".into(),
        ));
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if ts.windows(2).any(|w| w[0] == w[1]) {
        return Err(SteklovError::Argument(
            "fit abscissae must be distinct".into(),
        ));
    }
    let p = if include_linear { 2 } else { 1 };
    let n = samples.len();
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { samples[i].0 });
    let y = DVector::from_iterator(n, samples.iter().map(|&(t, nu)| (nu - 1.0 / t) / t));
    let xtx = x.transpose() * &x;
    let inv = xtx
        .clone()
        .try_inverse()
        .filter(|_| xtx.determinant().abs() > 1e-14 * xtx.norm().powi(p as i32))
        .ok_or_else(|| SteklovError::Argument("rank-deficient coefficient fit".into()))?;
    let beta = &inv * x.transpose() * &y;
    let resid = &y - &x * &beta;
    let stderr = if n > p {
        (resid.norm_squared() / (n - p) as f64 * inv[(0, 0)])
            .max(0.0)
            .sqrt()
    } else {
        0.0
    };
    Ok(CoefficientFit {
        c_hat: beta[0],
        stderr,
        r_grid: samples.iter().map(|s| s.0).collect(),
        mesh_levels: Vec::new(),
        extrapolation: "none".into(),
    })
}

/// Ball or curvature-balanced ellipsoid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Ball,
    Ellipsoid,
}

/// Options for the radius-grid fitting pipelines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub r_grid: Vec<f64>,
    /// Coarse level; the fine level is `level + 1`.
    pub level: u32,
    pub include_linear: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            r_grid: DEFAULT_R_GRID.to_vec(),
            level: 5,
            include_linear: false,
        }
    }
}

/// One radius of a fitting pipeline. Eigenvalues are in the scale of the
/// domain in `M` (the chart value divided by `r`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub r: f64,
    pub volume: f64,
    pub nu2_coarse: f64,
    pub nu2_fine: f64,
    pub nu2: f64,
}

/// Rows, the radius-form fit `(ν₂ − 1/r)/r`, and the volume-form fit
/// `(ν₂ − 1/t)/t` with `t = (v/|B|)^{1/N}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPipeline {
    pub kind: DomainKind,
    pub rows: Vec<FitRow>,
    pub radius_fit: CoefficientFit,
    pub volume_fit: CoefficientFit,
    /// Predicted radius-form coefficient.
    pub radius_target: f64,
    /// Predicted volume-form coefficient.
    pub volume_target: f64,
}

/// The rescaled chart of the ball or ellipsoid of radius `r` about `y0`.
pub fn domain_chart(
    m: &ModelManifold,
    y0: &[f64],
    r: f64,
    kind: DomainKind,
) -> Result<MetricChart> {
    match kind {
        DomainKind::Ball => pullback_ball_chart(m, y0, r),
        DomainKind::Ellipsoid => GeodesicEllipsoidSpec::new(m, y0, r)?.chart(m),
    }
}

/// `ν₂` of the chart on the unit ball mesh of `level`.
pub fn chart_nu2(chart: &MetricChart, level: u32) -> Result<f64> {
    let mesh = unit_ball_mesh(chart.dim(), level)?;
    Ok(solve_steklov(&assemble(&mesh, chart)?, 2)?.nu2())
}

fn fit_row(m: &ModelManifold, y0: &[f64], r: f64, kind: DomainKind, level: u32) -> Result<FitRow> {
    let chart = domain_chart(m, y0, r, kind)?;
    let nu2_coarse = chart_nu2(&chart, level)? / r;
    let nu2_fine = chart_nu2(&chart, level + 1)? / r;
    let volume = match kind {
        DomainKind::Ball => ball_volume(m, y0, r)?,
        DomainKind::Ellipsoid => {
            volume_of(&chart, &unit_ball_mesh(m.dim(), level + 1)?)? * r.powi(m.dim() as i32)
        }
    };
    Ok(FitRow {
        r,
        volume,
        nu2_coarse,
        nu2_fine,
        nu2: richardson_extrapolate(nu2_coarse, nu2_fine),
    })
}

/// Solves the ball or ellipsoid family on the radius grid at two levels,
/// extrapolates, and fits both forms of the first-order coefficient.
pub fn fit_pipeline(
    m: &ModelManifold,
    y0: &[f64],
    kind: DomainKind,
    opts: &FitOptions,
) -> Result<FitPipeline> {
    let cp = curvature_at(m, y0)?;
    let n = m.dim();
    let rows = opts
        .r_grid
        .par_iter()
        .map(|&r| fit_row(m, y0, r, kind, opts.level))
        .collect::<Result<Vec<_>>>()?;
    let note = format!(
        "richardson O(h^2) over levels {} and {}",
        opts.level,
        opts.level + 1
    );
    let finish = |mut f: CoefficientFit| {
        f.mesh_levels = vec![opts.level, opts.level + 1];
        f.extrapolation = note.clone();
        f
    };
    let radius_samples: Vec<(f64, f64)> = rows.iter().map(|row| (row.r, row.nu2)).collect();
    let volume_samples: Vec<(f64, f64)> = rows
        .iter()
        .map(|row| {
            (
                (row.volume / unit_ball_volume(n)).powf(1.0 / n as f64),
                row.nu2,
            )
        })
        .collect();
    let radius_fit = finish(coefficient_fit(&radius_samples, opts.include_linear)?);
    let mut volume_fit = finish(coefficient_fit(&volume_samples, opts.include_linear)?);
    volume_fit.r_grid = opts.r_grid.clone();
    let (radius_target, volume_target) = match kind {
        DomainKind::Ball => (
            ExpansionPrediction::ball_nu2_of_radius(n, cp.ricci_min).coefficient,
            ExpansionPrediction::ball_nu2_of_volume(n, cp.ricci_min, cp.scalar).coefficient,
        ),
        DomainKind::Ellipsoid => (
            ExpansionPrediction::ellipsoid_nu2_of_radius(n, cp.scalar).coefficient,
            ExpansionPrediction::ellipsoid_nu2_of_volume(n, cp.scalar).coefficient,
        ),
    };
    Ok(FitPipeline {
        kind,
        rows,
        radius_fit,
        volume_fit,
        radius_target,
        volume_target,
    })
}

/// Relative error `|ĉ − c|/|c|`, or the absolute error when `c = 0`.
pub fn relative_error(c_hat: f64, target: f64) -> f64 {
    if target == 0.0 {
        c_hat.abs()
    } else {
        ((c_hat - target) / target).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub v: f64,
    pub radius: f64,
    pub nu2_ball: f64,
    pub nu2_ellipsoid: f64,
    pub predictor_ball: f64,
    pub predictor_ellipsoid: f64,
    /// The surface profile predictor; dimension 2 only.
    pub wb_prediction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileScan {
    pub scalar: f64,
    pub ricci_min: f64,
    pub levels: Vec<u32>,
    pub rows: Vec<ProfileRow>,
}

/// Computes `ν₂` of the volume-matched ball and ellipsoid for each volume
/// (sorted decreasing), extrapolated over `level` and `level + 1` when
/// `extrapolate` is set, alongside the closed-form predictors.
pub fn profile_scan(
    m: &ModelManifold,
    y0: &[f64],
    v_grid: &[f64],
    level: u32,
    extrapolate: bool,
) -> Result<ProfileScan> {
    let cp = curvature_at(m, y0)?;
    let n = m.dim();
    let mut vs = v_grid.to_vec();
    if vs.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(SteklovError::Argument("volumes must be positive".into()));
    }
    vs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if vs.windows(2).any(|w| w[0] == w[1]) {
        return Err(SteklovError::Argument("volumes must be distinct".into()));
    }
    let solve = |chart: &MetricChart, r: f64| -> Result<f64> {
        let coarse = chart_nu2(chart, level)? / r;
        if extrapolate {
            Ok(richardson_extrapolate(
                coarse,
                chart_nu2(chart, level + 1)? / r,
            ))
        } else {
            Ok(coarse)
        }
    };
    let pb = ExpansionPrediction::ball_nu2_of_volume(n, cp.ricci_min, cp.scalar);
    let pe = ExpansionPrediction::ellipsoid_nu2_of_volume(n, cp.scalar);
    let wb = (n == 2).then(|| ExpansionPrediction::wb_surface_profile(cp.scalar));
    let rows = vs
        .par_iter()
        .map(|&v| {
            let radius = matched_radius(m, y0, v)?;
            let nu2_ball = solve(&pullback_ball_chart(m, y0, radius)?, radius)?;
            let nu2_ellipsoid = if n == 2 {
                nu2_ball
            } else {
                solve(&domain_chart(m, y0, radius, DomainKind::Ellipsoid)?, radius)?
            };
            Ok(ProfileRow {
                v,
                radius,
                nu2_ball,
                nu2_ellipsoid,
                predictor_ball: pb.evaluate(v),
                predictor_ellipsoid: pe.evaluate(v),
                wb_prediction: wb.map(|p| p.evaluate(v)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let levels = if extrapolate {
        vec![level, level + 1]
    } else {
        vec![level]
    };
    Ok(ProfileScan {
        scalar: cp.scalar,
        ricci_min: cp.ricci_min,
        levels,
        rows,
    })
}

/// Options for the seeded Brock sweep over random planar star domains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrockOptions {
    pub domains: usize,
    /// Upper bound on the total amplitude `Σ √(a_k² + b_k²)`.
    pub max_amplitude: f64,
    pub max_modes: usize,
    pub min_wavenumber: u32,
    pub max_wavenumber: u32,
    /// Coarse level; the fine level is `level + 1`.
    pub level: u32,
    pub seed: u64,
}

impl Default for BrockOptions {
    fn default() -> Self {
        Self {
            domains: 100,
            max_amplitude: 0.2,
            max_modes: 3,
            min_wavenumber: 2,
            max_wavenumber: 6,
            level: 4,
            seed: 0,
        }
    }
}

/// Random star profiles normalized to area `π`: `1..=max_modes` distinct
/// wavenumbers, total amplitude uniform in `[0, max_amplitude]` split by
/// uniform random weights, uniform random phases.
pub fn random_star_profiles(opts: &BrockOptions) -> Result<Vec<StarProfile>> {
    let span = (opts.min_wavenumber..=opts.max_wavenumber).count();
    if opts.min_wavenumber < 1 || opts.max_modes < 1 || opts.max_modes > span {
        return Err(SteklovError::Argument(
            "invalid wavenumber range or mode count".into(),
        ));
    }
    if !(0.0..0.5).contains(&opts.max_amplitude) {
        return Err(SteklovError::Argument(
            "max amplitude must lie in [0, 0.5)".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::with_capacity(opts.domains);
    for _ in 0..opts.domains {
        let count = rng.random_range(1..=opts.max_modes);
        let mut ks: Vec<u32> = (opts.min_wavenumber..=opts.max_wavenumber).collect();
        ks.shuffle(&mut rng);
        let total = opts.max_amplitude * rng.random::<f64>();
        let w: Vec<f64> = (0..count).map(|_| rng.random::<f64>()).collect();
        let wsum: f64 = w.iter().sum();
        let modes = (0..count)
            .map(|i| {
                let phase = 2.0 * PI * rng.random::<f64>();
                let eps = if wsum > 0.0 { total * w[i] / wsum } else { 0.0 };
                (ks[i], eps * phase.cos(), eps * phase.sin())
            })
            .collect();
        out.push(normalize_star_area(&StarProfile::new(1.0, modes), PI));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrockRow {
    pub index: usize,
    pub total_amplitude: f64,
    pub nu2: f64,
    pub nu3: f64,
    /// `1/ν₂ + 1/ν₃`.
    pub brock_sum: f64,
    /// `brock_sum − 2`.
    pub gap: f64,
    pub deficit: f64,
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrockSweep {
    pub profiles: Vec<StarProfile>,
    pub rows: Vec<BrockRow>,
    pub isoperimetric: IsoperimetricTable,
}

/// `(ν₂, ν₃)` of a Euclidean star domain, extrapolated over two levels.
pub fn star_nu23(profile: &StarProfile, level: u32) -> Result<(f64, f64)> {
    let chart = MetricChart::euclidean(2)?;
    let at = |l: u32| -> Result<(f64, f64)> {
        let mesh = star_domain_mesh(Arc::new(profile.clone()), l)?;
        let s = solve_steklov(&assemble(&mesh, &chart)?, 3)?;
        Ok((s.eigenvalues[1], s.eigenvalues[2]))
    };
    let (c, f) = (at(level)?, at(level + 1)?);
    Ok((
        richardson_extrapolate(c.0, f.0),
        richardson_extrapolate(c.1, f.1),
    ))
}

/// Brock sums and isoperimetric rows for the seeded random star domains.
pub fn brock_sweep(opts: &BrockOptions) -> Result<BrockSweep> {
    let profiles = random_star_profiles(opts)?;
    let rows = profiles
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            let (nu2, nu3) = star_nu23(p, opts.level)?;
            let b = brock_sum_bound(&[nu2, nu3], 0.0)?;
            let iso = isoperimetric_row(p.total_amplitude(), p);
            Ok(BrockRow {
                index,
                total_amplitude: p.total_amplitude(),
                nu2,
                nu3,
                brock_sum: b.sum,
                gap: b.sum - 2.0,
                deficit: iso.deficit,
                excess: iso.excess,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let iso_rows = profiles
        .iter()
        .map(|p| isoperimetric_row(p.total_amplitude(), p))
        .collect();
    Ok(BrockSweep {
        profiles,
        rows,
        isoperimetric: summarize_isoperimetric(iso_rows),
    })
}

/// Options for [`shape_search`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSearchOptions {
    /// Highest wavenumber `K`; coefficients `a_k, b_k` for `k = 2..=K`.
    pub order: u32,
    /// Maximum number of objective evaluations.
    pub budget: usize,
    pub level: u32,
    pub seed: u64,
    /// Half-width of the seeded uniform start when `start` is absent.
    pub initial_amplitude: f64,
    /// Starting coefficients `[a_2, b_2, …, a_K, b_K]`.
    pub start: Option<Vec<f64>>,
    /// Initial simplex edge.
    pub step: f64,
    /// Simplex convergence thresholds on function spread and vertex spread.
    pub f_tolerance: f64,
    pub x_tolerance: f64,
}

impl Default for ShapeSearchOptions {
    fn default() -> Self {
        Self {
            order: 4,
            budget: 2000,
            level: 4,
            seed: 0,
            initial_amplitude: 0.05,
            start: None,
            step: 0.05,
            f_tolerance: 1e-10,
            x_tolerance: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTraceRow {
    pub evaluation: usize,
    /// `None` for infeasible shapes.
    pub nu2: Option<f64>,
    pub best_nu2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSearchResult {
    pub best_nu2: f64,
    pub best_profile: StarProfile,
    pub initial_nu2: f64,
    pub evaluations: usize,
    /// False when the budget ran out before the simplex converged.
    pub converged: bool,
    pub trace: Vec<SearchTraceRow>,
}

fn profile_from_coefficients(coeffs: &[f64]) -> StarProfile {
    let modes = coeffs
        .chunks(2)
        .enumerate()
        .map(|(i, c)| (i as u32 + 2, c[0], c[1]))
        .collect();
    StarProfile::new(1.0, modes)
}

/// The profile with `r₀` chosen by bisection so that the domain has
/// `target_volume` under `chart`.
pub fn renormalize_to_volume(
    chart: &MetricChart,
    shape: &StarProfile,
    target_volume: f64,
) -> Result<StarProfile> {
    let unit = shape.with_r0(1.0);
    let samples = 512;
    let max_rel = (0..samples)
        .map(|i| unit.radius(2.0 * PI * i as f64 / samples as f64))
        .fold(0.0, f64::max);
    let reach = chart.domain_radius().min(3.0) * (1.0 - 1e-9) / (max_rel * (1.0 + 1e-3));
    let vol = |r0: f64| star_volume(chart, &shape.with_r0(r0));
    if vol(reach)? < target_volume {
        return Err(SteklovError::Range(format!(
            "target volume {target_volume} not reachable in the chart"
        )));
    }
    let (mut lo, mut hi) = (0.0, reach);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if vol(mid)? < target_volume {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(shape.with_r0(0.5 * (lo + hi)))
}

/// `ν₂` of the star domain with the given coefficients, renormalized to the
/// target volume, or `None` if the shape leaves `1/2 ≤ r/r₀ ≤ 3/2` or the
/// chart.
pub fn star_objective(
    chart: &MetricChart,
    target_volume: f64,
    coeffs: &[f64],
    level: u32,
) -> Result<Option<f64>> {
    let shape = profile_from_coefficients(coeffs);
    let samples = 512;
    let feasible = (0..samples).all(|i| {
        let r = shape.radius(2.0 * PI * i as f64 / samples as f64);
        (0.5..=1.5).contains(&r)
    });
    if !feasible {
        return Ok(None);
    }
    let p = match renormalize_to_volume(chart, &shape, target_volume) {
        Ok(p) => p,
        Err(SteklovError::Range(_)) | Err(SteklovError::Domain(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mesh = match star_domain_mesh(Arc::new(p), level) {
        Ok(m) => m,
        Err(SteklovError::Argument(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some(solve_steklov(&assemble(&mesh, chart)?, 2)?.nu2()))
}

/// Restarts of the simplex about its best vertex after convergence.
pub const SHAPE_SEARCH_RESTARTS: usize = 3;

/// Nelder–Mead search maximizing `ν₂` over planar star domains
/// `r(θ) = r₀(1 + Σ_{k=2}^{K} a_k cos kθ + b_k sin kθ)` of fixed volume.
/// After the simplex converges it is rebuilt about its best vertex, up to
/// [`SHAPE_SEARCH_RESTARTS`] times, and the search is reported converged once
/// a restart brings no improvement.
pub fn shape_search(
    chart: &MetricChart,
    target_volume: f64,
    opts: &ShapeSearchOptions,
) -> Result<ShapeSearchResult> {
    if chart.dim() != 2 {
        return Err(SteklovError::Argument("shape search is planar".into()));
    }
    if !(2..=8).contains(&opts.order) {
        return Err(SteklovError::Argument(format!(
            "Fourier order {} outside 2..=8",
            opts.order
        )));
    }
    if !(target_volume > 0.0) || opts.budget < 1 {
        return Err(SteklovError::Argument(
            "target volume and budget must be positive".into(),
        ));
    }
    let dim = 2 * (opts.order as usize - 1);
    let x0 = match &opts.start {
        Some(s) if s.len() == dim => s.clone(),
        Some(s) => {
            return Err(SteklovError::Argument(format!(
                "start has {} coefficients, expected {dim}",
                s.len()
            )));
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            (0..dim)
                .map(|_| opts.initial_amplitude * (2.0 * rng.random::<f64>() - 1.0))
                .collect()
        }
    };

    let mut trace = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut eval = |x: &[f64], trace: &mut Vec<SearchTraceRow>| -> Result<f64> {
        let nu2 = star_objective(chart, target_volume, x, opts.level)?;
        if let Some(v) = nu2 {
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((v, x.to_vec()));
            }
        }
        trace.push(SearchTraceRow {
            evaluation: trace.len() + 1,
            nu2,
            best_nu2: best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0),
        });
        Ok(nu2.map_or(f64::INFINITY, |v| -v))
    };

    let initial = eval(&x0, &mut trace)?;
    if !initial.is_finite() {
        return Err(SteklovError::Argument(
            "starting shape is infeasible".into(),
        ));
    }
    let mut converged = false;
    let mut start = (x0.clone(), initial);
    for _restart in 0..=SHAPE_SEARCH_RESTARTS {
        let x_start = start.0.clone();
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![start.clone()];
        for i in 0..dim {
            if trace.len() >= opts.budget {
                break;
            }
            let mut x = x_start.clone();
            x[i] += opts.step;
            let f = eval(&x, &mut trace)?;
            simplex.push((x, f));
        }

        converged = false;
        while simplex.len() == dim + 1 {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let f_spread = simplex[dim].1 - simplex[0].1;
            let x_spread = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if f_spread <= opts.f_tolerance && x_spread <= opts.x_tolerance {
                converged = true;
                break;
            }
            if trace.len() >= opts.budget {
                break;
            }
            let centroid: Vec<f64> = (0..dim)
                .map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                (0..dim)
                    .map(|j| centroid[j] + t * (simplex[dim].0[j] - centroid[j]))
                    .collect()
            };
            let xr = along(-1.0);
            let fr = eval(&xr, &mut trace)?;
            if fr < simplex[0].1 {
                if trace.len() >= opts.budget {
                    simplex[dim] = (xr, fr);
                    continue;
                }
                let xe = along(-2.0);
                let fe = eval(&xe, &mut trace)?;
                simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[dim - 1].1 {
                simplex[dim] = (xr, fr);
            } else {
                if trace.len() >= opts.budget {
                    continue;
                }
                let (xc, fc) = if fr < simplex[dim].1 {
                    let xc = along(-0.5);
                    let fc = eval(&xc, &mut trace)?;
                    (xc, fc)
                } else {
                    let xc = along(0.5);
                    let fc = eval(&xc, &mut trace)?;
                    (xc, fc)
                };
                if fc < simplex[dim].1.min(fr) {
                    simplex[dim] = (xc, fc);
                } else {
                    let x_best = simplex[0].0.clone();
                    for item in simplex.iter_mut().skip(1) {
                        if trace.len() >= opts.budget {
                            break;
                        }
                        let x: Vec<f64> = x_best
                            .iter()
                            .zip(&item.0)
                            .map(|(b, v)| b + 0.5 * (v - b))
                            .collect();
                        let f = eval(&x, &mut trace)?;
                        *item = (x, f);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let improved = simplex[0].1 < start.1 - opts.f_tolerance;
        start = simplex[0].clone();
        if !converged || !improved {
            break;
        }
    }

    let (best_nu2, best_x) =
        best.ok_or_else(|| SteklovError::Numeric("no feasible shape evaluated".into()))?;
    Ok(ShapeSearchResult {
        best_nu2,
        best_profile: renormalize_to_volume(
            chart,
            &profile_from_coefficients(&best_x),
            target_volume,
        )?,
        initial_nu2: -initial,
        evaluations: trace.len(),
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_examples() {
        assert!((richardson_extrapolate(1.004, 1.001) - 1.0).abs() < 1e-12);
        assert_eq!(richardson_extrapolate(1.3, 1.3), 1.3);
    }

    #[test]
    fn fit_recovers_exact_model() {
        let samples: Vec<(f64, f64)> = [0.1, 0.2, 0.3]
            .iter()
            .map(|&r| (r, 1.0 / r + 0.1 * r))
            .collect();
        let f = coefficient_fit(&samples, false).unwrap();
        assert!((f.c_hat - 0.1).abs() < 1e-12);
        assert!(f.stderr < 1e-12);
        let g = coefficient_fit(&samples, true).unwrap();
        assert!((g.c_hat - 0.1).abs() < 1e-12);
    }

    #[test]
    fn fit_with_remainder_converges() {
        let errs: Vec<f64> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&rmax| {
                let samples: Vec<(f64, f64)> = [1.0, 0.75, 0.5]
                    .iter()
                    .map(|s| s * rmax)
                    .map(|r: f64| (r, 1.0 / r + 0.1 * r + r.powi(3)))
                    .collect();
                (coefficient_fit(&samples, false).unwrap().c_hat - 0.1).abs()
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0] / 3.0), "{errs:?}");
        let samples: Vec<(f64, f64)> = [0.1, 0.2, 0.3]
            .iter()
            .map(|&r: &f64| (r, 1.0 / r + 0.1 * r + r.powi(3)))
            .collect();
        assert!(coefficient_fit(&samples, false).unwrap().stderr > 0.0);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(coefficient_fit(&[(0.1, 10.0), (0.2, 5.0)], false).is_err());
        assert!(coefficient_fit(&[(0.1, 10.0), (0.1, 10.0), (0.2, 5.0)], true).is_err());
    }

    #[test]
    fn random_profiles_are_area_normalized_and_seeded() {
        let opts = BrockOptions {
            domains: 12,
            seed: 7,
            ..Default::default()
        };
        let a = random_star_profiles(&opts).unwrap();
        assert_eq!(a, random_star_profiles(&opts).unwrap());
        for p in &a {
            assert!(p.total_amplitude() <= 0.2 + 1e-15);
            assert!((crate::domains::star_area(p) - PI).abs() < 1e-12);
            assert!(p.modes.iter().all(|m| (2..=6).contains(&m.0)));
        }
    }

    #[test]
    fn objective_rejects_wild_shapes_and_keeps_volume() {
        let chart = MetricChart::euclidean(2).unwrap();
        assert_eq!(star_objective(&chart, PI, &[0.6, 0.0], 3).unwrap(), None);
        let p = renormalize_to_volume(
            &chart,
            &profile_from_coefficients(&[0.1, -0.05, 0.02, 0.0]),
            PI,
        )
        .unwrap();
        let mesh = star_domain_mesh(Arc::new(p), 3).unwrap();
        assert!((volume_of(&chart, &mesh).unwrap() - PI).abs() < 1e-8 * PI);
    }

    #[test]
    fn small_search_is_deterministic_and_monotone() {
        let chart = MetricChart::euclidean(2).unwrap();
        let opts = ShapeSearchOptions {
            order: 2,
            budget: 30,
            level: 2,
            seed: 3,
            ..Default::default()
        };
        let a = shape_search(&chart, PI, &opts).unwrap();
        let b = shape_search(&chart, PI, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.evaluations, 30);
        assert!(a.trace.windows(2).all(|w| w[1].best_nu2 >= w[0].best_nu2));
        assert!(a.best_nu2 >= a.initial_nu2);
    }
}
