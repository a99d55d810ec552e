//! Command-line frontend: configuration, the eight subcommands, and report
//! writing.
//!
//! Every command writes `<command>.csv`, `<command>.json` and
//! `<command>.txt` into the output directory. The JSON report carries
//! `{command, config_hash, version, pass, warnings, summary, rows}`; the
//! config hash is the SHA-256 of the effective configuration serialized as
//! TOML. Exit codes: 0 pass, 1 tolerance breach, 2 usage or configuration
//! error, 3 numeric failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::domains::{unit_ball_volume, volume_of};
use crate::error::{Result, SteklovError};
use crate::expansions::{brock_sum_bound, compare_profiles, CompareRow, ProfileSite};
use crate::geometry::{pullback_ball_chart, CustomChart, MetricChart, ModelManifold};
use crate::mesh::{star_domain_mesh, unit_ball_mesh, SimplicialMesh, StarProfile};
use crate::profile::{
    brock_sweep, chart_nu2, fit_pipeline, profile_scan, relative_error, renormalize_to_volume,
    richardson_extrapolate, shape_search, BrockOptions, DomainKind, FitOptions, FitRow,
    ShapeSearchOptions, DEFAULT_R_GRID,
};
use crate::steklov::{assemble, solve_steklov};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A manifold as written in a configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ManifoldSpec {
    Euclidean {
        dim: usize,
    },
    Sphere {
        radius: f64,
    },
    Hyperbolic {
        radius: f64,
    },
    #[serde(rename = "product-s2xr")]
    ProductS2xR,
    /// A custom chart carrying the coordinate metric of another manifold,
    /// so that its curvature and geodesics are computed numerically.
    WrappedChart {
        of: Box<ManifoldSpec>,
        domain_radius: f64,
    },
}

impl Default for ManifoldSpec {
    fn default() -> Self {
        ManifoldSpec::Euclidean { dim: 2 }
    }
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<ModelManifold> {
        match self {
            ManifoldSpec::Euclidean { dim } => ModelManifold::euclidean(*dim),
            ManifoldSpec::Sphere { radius } => ModelManifold::sphere(*radius),
            ManifoldSpec::Hyperbolic { radius } => ModelManifold::hyperbolic(*radius),
            ManifoldSpec::ProductS2xR => Ok(ModelManifold::ProductS2xR),
            ManifoldSpec::WrappedChart { of, domain_radius } => Ok(ModelManifold::Custom(
                CustomChart::wrap(&of.build()?, *domain_radius)?,
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub r_grid: Vec<f64>,
    pub include_linear: bool,
    /// Relative tolerance on ball coefficients.
    pub ball_tolerance: f64,
    /// Relative tolerance on ellipsoid coefficients.
    pub ellipsoid_tolerance: f64,
    /// Absolute tolerance used when the predicted coefficient is zero.
    pub absolute_tolerance: f64,
    /// Allowed shortfall of the ellipsoid `ν₂` below the ball `ν₂` (chart scale).
    pub ordering_slack: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            r_grid: DEFAULT_R_GRID.to_vec(),
            include_linear: false,
            ball_tolerance: 0.15,
            ellipsoid_tolerance: 0.30,
            absolute_tolerance: 0.02,
            ordering_slack: 2e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub v_grid: Vec<f64>,
    pub extrapolate: bool,
    /// Relative slack of the lower-bound check and of the flat-profile check.
    pub tolerance: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            v_grid: vec![0.1, 0.05, 0.02, 0.01],
            extrapolate: true,
            tolerance: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub order: u32,
    pub budget: usize,
    /// Radius of the pullback chart; absent for the identity chart of a flat manifold.
    pub radius: Option<f64>,
    /// Target volume in chart units; defaults to the volume of the unit disk under the chart.
    pub target_volume: Option<f64>,
    pub initial_amplitude: f64,
    pub start: Option<Vec<f64>>,
    /// Allowed relative excess of the best `ν₂` over the round domain.
    pub nu2_tolerance: f64,
    /// Largest accepted total amplitude of the best shape.
    pub amplitude_tolerance: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            order: 4,
            budget: 2000,
            radius: None,
            target_volume: None,
            initial_amplitude: 0.05,
            start: None,
            nu2_tolerance: 5e-3,
            amplitude_tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrockConfig {
    pub domains: usize,
    pub max_amplitude: f64,
    pub max_modes: usize,
    pub min_wavenumber: u32,
    pub max_wavenumber: u32,
    /// `Σ 1/νᵢ ≥ 2 − sum_tolerance` for every domain.
    pub sum_tolerance: f64,
    /// A gap below `gap_threshold` is only allowed for total amplitude below `amplitude_threshold`.
    pub gap_threshold: f64,
    pub amplitude_threshold: f64,
    /// Moment excess must be at least `−excess_slack`.
    pub excess_slack: f64,
    /// Allowed deviation of the excess-versus-deficit log-log slope from 2.
    pub slope_tolerance: f64,
}

impl Default for BrockConfig {
    fn default() -> Self {
        let b = BrockOptions::default();
        Self {
            domains: b.domains,
            max_amplitude: b.max_amplitude,
            max_modes: b.max_modes,
            min_wavenumber: b.min_wavenumber,
            max_wavenumber: b.max_wavenumber,
            sum_tolerance: 1e-3,
            gap_threshold: 1e-3,
            amplitude_threshold: 0.02,
            excess_slack: 1e-9,
            slope_tolerance: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub other: ManifoldSpec,
    pub other_base_point: Option<Vec<f64>>,
    pub v_grid: Vec<f64>,
    /// Computed and predicted orderings must agree for `v ≤ v_max`.
    pub v_max: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            other: ManifoldSpec::Sphere { radius: 1.0 },
            other_base_point: None,
            v_grid: vec![0.2, 0.1, 0.05, 0.02, 0.01],
            v_max: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiskConfig {
    /// Tolerance on `ν₂, ν₃` around 1.
    pub tolerance: f64,
    /// Relative tolerance on `ν₄, ν₅` around 2.
    pub second_tolerance: f64,
}

impl Default for DiskConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            second_tolerance: 5e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub dim: usize,
    pub r0: f64,
    /// `(k, a_k, b_k)` modes of a planar star boundary; empty for the unit ball.
    pub modes: Vec<(u32, f64, f64)>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            r0: 1.0,
            modes: Vec::new(),
        }
    }
}

/// A full run configuration. Every field has a default, so an empty file is
/// a valid configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: ManifoldSpec,
    /// Defaults to the origin of the manifold's coordinates.
    pub base_point: Option<Vec<f64>>,
    /// Defaults depend on the command.
    pub level: Option<u32>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub fit: FitConfig,
    pub scan: ScanConfig,
    pub search: SearchConfig,
    pub brock: BrockConfig,
    pub compare: CompareConfig,
    pub disk: DiskConfig,
    pub mesh: MeshConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SteklovError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SteklovError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// SHA-256 of the TOML serialization without the output directory, hex
    /// encoded.
    pub fn hash(&self) -> Result<String> {
        let mut cfg = self.clone();
        cfg.out = None;
        Ok(hex::encode(Sha256::digest(cfg.to_toml()?.as_bytes())))
    }

    fn base_point(&self, m: &ModelManifold) -> Vec<f64> {
        self.base_point
            .clone()
            .unwrap_or_else(|| m.origin().as_slice().to_vec())
    }
}

/// The outcome of one command.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub config_hash: String,
    pub version: String,
    pub pass: bool,
    /// Soft failures; they fail the run only under `--strict`.
    pub warnings: Vec<String>,
    pub summary: serde_json::Value,
    pub rows: serde_json::Value,
    #[serde(skip)]
    pub csv: String,
}

impl Report {
    fn new<R: Serialize>(command: &str, cfg: &RunConfig, rows: &[R]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row)
                .map_err(|e| SteklovError::Config(e.to_string()))?;
        }
        let csv = String::from_utf8(
            w.into_inner()
                .map_err(|e| SteklovError::Config(e.to_string()))?,
        )
        .map_err(|e| SteklovError::Config(e.to_string()))?;
        Ok(Self {
            command: command.into(),
            config_hash: cfg.hash()?,
            version: VERSION.into(),
            pass: true,
            warnings: Vec::new(),
            summary: json!({}),
            rows: serde_json::to_value(rows).map_err(|e| SteklovError::Config(e.to_string()))?,
            csv,
        })
    }

    pub fn passes(&self, strict: bool) -> bool {
        self.pass && !(strict && !self.warnings.is_empty())
    }

    pub fn text_summary(&self) -> String {
        let mut s = format!(
            "command: {}\nversion: {}\nconfig_hash: {}\npass: {}\n",
            self.command, self.version, self.config_hash, self.pass
        );
        if let serde_json::Value::Object(map) = &self.summary {
            for (k, v) in map {
                s.push_str(&format!("{k}: {v}\n"));
            }
        }
        for w in &self.warnings {
            s.push_str(&format!("warning: {w}\n"));
        }
        s
    }

    /// Writes `<command>.csv`, `<command>.json` and `<command>.txt`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{}.csv", self.command)), &self.csv)?;
        let json =
            serde_json::to_string_pretty(self).map_err(|e| SteklovError::Config(e.to_string()))?;
        fs::write(dir.join(format!("{}.json", self.command)), json + "\n")?;
        fs::write(
            dir.join(format!("{}.txt", self.command)),
            self.text_summary(),
        )?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiskRow {
    pub index: usize,
    pub expected: f64,
    pub nu_coarse: f64,
    pub nu_fine: f64,
    pub nu_extrapolated: f64,
}

/// Steklov spectrum of the Euclidean unit disk against `0, 1, 1, 2, 2, 3`.
pub fn cmd_verify_disk(cfg: &RunConfig) -> Result<Report> {
    let level = cfg.level.unwrap_or(4);
    let chart = MetricChart::euclidean(2)?;
    let spectrum = |l: u32| -> Result<Vec<f64>> {
        Ok(solve_steklov(&assemble(&unit_ball_mesh(2, l)?, &chart)?, 6)?.eigenvalues)
    };
    let (coarse, fine) = (spectrum(level)?, spectrum(level + 1)?);
    let expected = [0.0, 1.0, 1.0, 2.0, 2.0, 3.0];
    let rows: Vec<DiskRow> = (0..6)
        .map(|i| DiskRow {
            index: i + 1,
            expected: expected[i],
            nu_coarse: coarse[i],
            nu_fine: fine[i],
            nu_extrapolated: richardson_extrapolate(coarse[i], fine[i]),
        })
        .collect();
    let nu = |i: usize| rows[i].nu_extrapolated;
    let first_ok = nu(1) >= 1.0 - cfg.disk.tolerance && nu(1) <= 1.0 + cfg.disk.tolerance;
    let second_ok = (nu(2) - 1.0).abs() <= cfg.disk.tolerance;
    let double_ok = (3..5).all(|i| ((nu(i) - 2.0) / 2.0).abs() <= cfg.disk.second_tolerance);
    let constant_ok = rows[0].nu_coarse.abs() <= 1e-8;
    let brock = brock_sum_bound(&[nu(1), nu(2)], cfg.disk.tolerance)?;
    let brock_ok = (brock.sum - 2.0).abs() <= 2.0 * cfg.disk.tolerance;
    let mut r = Report::new("verify-disk", cfg, &rows)?;
    r.pass = first_ok && second_ok && double_ok && constant_ok && brock_ok;
    r.summary = json!({
        "levels": [level, level + 1],
        "nu2": nu(1), "nu3": nu(2), "nu4": nu(3), "nu5": nu(4),
        "nu1_coarse": rows[0].nu_coarse,
        "brock_sum": brock.sum,
    });
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReportRow {
    pub r: f64,
    pub volume: f64,
    pub nu2_coarse: f64,
    pub nu2_fine: f64,
    pub nu2: f64,
    /// `(ν₂ − 1/r)/r`.
    pub slope_sample: f64,
    /// `ν₂` of the ball of the same radius (ellipsoid runs only).
    pub nu2_ball: Option<f64>,
}

fn fit_rows(rows: &[FitRow], ball: Option<&[FitRow]>) -> Vec<FitReportRow> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| FitReportRow {
            r: row.r,
            volume: row.volume,
            nu2_coarse: row.nu2_coarse,
            nu2_fine: row.nu2_fine,
            nu2: row.nu2,
            slope_sample: (row.nu2 - 1.0 / row.r) / row.r,
            nu2_ball: ball.map(|b| b[i].nu2),
        })
        .collect()
}

fn coefficient_ok(c_hat: f64, target: f64, rel: f64, abs: f64) -> bool {
    if target == 0.0 {
        c_hat.abs() <= abs
    } else {
        relative_error(c_hat, target) <= rel
    }
}

/// Ball coefficient in radius form `2R_min/(3(N+2))` and in volume form.
pub fn cmd_fit_ball(cfg: &RunConfig) -> Result<Report> {
    let m = cfg.manifold.build()?;
    let y0 = cfg.base_point(&m);
    let level = cfg.level.unwrap_or(if m.dim() == 2 { 5 } else { 3 });
    let opts = FitOptions {
        r_grid: cfg.fit.r_grid.clone(),
        level,
        include_linear: cfg.fit.include_linear,
    };
    let p = fit_pipeline(&m, &y0, DomainKind::Ball, &opts)?;
    let mut r = Report::new("fit-ball", cfg, &fit_rows(&p.rows, None))?;
    let (tol, abs) = (cfg.fit.ball_tolerance, cfg.fit.absolute_tolerance);
    r.pass = coefficient_ok(p.radius_fit.c_hat, p.radius_target, tol, abs)
        && coefficient_ok(p.volume_fit.c_hat, p.volume_target, tol, abs);
    r.summary = json!({
        "manifold": m.label(),
        "levels": [level, level + 1],
        "c_hat": p.radius_fit.c_hat,
        "c_hat_stderr": p.radius_fit.stderr,
        "target": p.radius_target,
        "relative_error": relative_error(p.radius_fit.c_hat, p.radius_target),
        "volume_c_hat": p.volume_fit.c_hat,
        "volume_c_hat_stderr": p.volume_fit.stderr,
        "volume_target": p.volume_target,
        "volume_relative_error": relative_error(p.volume_fit.c_hat, p.volume_target),
        "tolerance": tol,
    });
    Ok(r)
}

/// Ellipsoid coefficient `2S/(3N(N+2))` and the ordering `ν₂(E) ≥ ν₂(B)`.
pub fn cmd_fit_ellipsoid(cfg: &RunConfig) -> Result<Report> {
    let m = cfg.manifold.build()?;
    let y0 = cfg.base_point(&m);
    let level = cfg.level.unwrap_or(if m.dim() == 2 { 5 } else { 3 });
    let opts = FitOptions {
        r_grid: cfg.fit.r_grid.clone(),
        level,
        include_linear: cfg.fit.include_linear,
    };
    let e = fit_pipeline(&m, &y0, DomainKind::Ellipsoid, &opts)?;
    let b = fit_pipeline(&m, &y0, DomainKind::Ball, &opts)?;
    let ordering_ok = e
        .rows
        .iter()
        .zip(&b.rows)
        .all(|(er, br)| er.nu2 * er.r >= br.nu2 * br.r - cfg.fit.ordering_slack);
    let mut r = Report::new("fit-ellipsoid", cfg, &fit_rows(&e.rows, Some(&b.rows)))?;
    let tol = cfg.fit.ellipsoid_tolerance;
    r.pass = coefficient_ok(
        e.radius_fit.c_hat,
        e.radius_target,
        tol,
        cfg.fit.absolute_tolerance,
    ) && ordering_ok;
    r.summary = json!({
        "manifold": m.label(),
        "levels": [level, level + 1],
        "c_hat": e.radius_fit.c_hat,
        "c_hat_stderr": e.radius_fit.stderr,
        "target": e.radius_target,
        "relative_error": relative_error(e.radius_fit.c_hat, e.radius_target),
        "ball_c_hat": b.radius_fit.c_hat,
        "ball_target": b.radius_target,
        "volume_c_hat": e.volume_fit.c_hat,
        "volume_target": e.volume_target,
        "ordering_holds": ordering_ok,
        "tolerance": tol,
    });
    Ok(r)
}

/// Volume-matched balls and ellipsoids against the closed-form predictors.
pub fn cmd_profile_scan(cfg: &RunConfig) -> Result<Report> {
    let m = cfg.manifold.build()?;
    let y0 = cfg.base_point(&m);
    let level = cfg.level.unwrap_or(if m.dim() == 2 { 4 } else { 2 });
    let scan = profile_scan(&m, &y0, &cfg.scan.v_grid, level, cfg.scan.extrapolate)?;
    let tol = cfg.scan.tolerance;
    let flat = scan.scalar == 0.0 && scan.ricci_min == 0.0;
    let n = m.dim() as f64;
    let lower_ok = scan
        .rows
        .iter()
        .all(|row| row.nu2_ellipsoid >= row.predictor_ellipsoid * (1.0 - tol));
    let flat_ok = !flat
        || scan.rows.iter().all(|row| {
            (row.nu2_ball * (row.v / unit_ball_volume(m.dim())).powf(1.0 / n) - 1.0).abs() <= tol
        });
    let mut r = Report::new("profile-scan", cfg, &scan.rows)?;
    r.pass = lower_ok && flat_ok;
    r.summary = json!({
        "manifold": m.label(),
        "levels": scan.levels,
        "scalar_curvature": scan.scalar,
        "ricci_min": scan.ricci_min,
        "lower_bound_holds": lower_ok,
        "flat_profile_holds": flat_ok,
        "tolerance": tol,
    });
    Ok(r)
}

/// Simplex search for a star domain beating the round one.
pub fn cmd_shape_search(cfg: &RunConfig) -> Result<Report> {
    let m = cfg.manifold.build()?;
    if m.dim() != 2 {
        return Err(SteklovError::Config(
            "shape-search needs a two-dimensional manifold".into(),
        ));
    }
    let y0 = cfg.base_point(&m);
    let level = cfg.level.unwrap_or(4);
    let chart = match (cfg.search.radius, &m) {
        (None, ModelManifold::Euclidean { .. }) => MetricChart::euclidean(2)?,
        (None, _) => {
            return Err(SteklovError::Config(
                "search.radius is required on curved manifolds".into(),
            ))
        }
        (Some(r), _) => pullback_ball_chart(&m, &y0, r)?,
    };
    let target = match cfg.search.target_volume {
        Some(v) => v,
        None => volume_of(&chart, &unit_ball_mesh(2, 6)?)?,
    };
    let opts = ShapeSearchOptions {
        order: cfg.search.order,
        budget: cfg.search.budget,
        level,
        seed: cfg.seed,
        initial_amplitude: cfg.search.initial_amplitude,
        start: cfg.search.start.clone(),
        ..Default::default()
    };
    let res = shape_search(&chart, target, &opts)?;
    let round = match cfg.search.target_volume {
        None => chart_nu2(&chart, level)?,
        Some(_) => {
            let p = renormalize_to_volume(&chart, &StarProfile::circle(1.0), target)?;
            solve_steklov(
                &assemble(&star_domain_mesh(Arc::new(p), level)?, &chart)?,
                2,
            )?
            .nu2()
        }
    };
    let amplitude = res.best_profile.total_amplitude();
    let nu_ok = res.best_nu2 <= round * (1.0 + cfg.search.nu2_tolerance);
    let amp_ok = amplitude <= cfg.search.amplitude_tolerance;
    let monotone = res.trace.windows(2).all(|w| w[1].best_nu2 >= w[0].best_nu2);
    let mut r = Report::new("shape-search", cfg, &res.trace)?;
    r.pass = nu_ok && amp_ok && monotone;
    if !res.converged {
        r.warnings.push(format!(
            "simplex did not converge within {} evaluations",
            cfg.search.budget
        ));
    }
    r.summary = json!({
        "manifold": m.label(),
        "level": level,
        "target_volume": target,
        "round_nu2": round,
        "initial_nu2": res.initial_nu2,
        "best_nu2": res.best_nu2,
        "best_total_amplitude": amplitude,
        "best_r0": res.best_profile.r0,
        "best_modes": res.best_profile.modes,
        "evaluations": res.evaluations,
        "converged": res.converged,
    });
    Ok(r)
}

/// Brock sums and quantitative isoperimetric rows for seeded random star
/// domains of the disk's area.
pub fn cmd_isoperimetric(cfg: &RunConfig) -> Result<Report> {
    let b = &cfg.brock;
    let opts = BrockOptions {
        domains: b.domains,
        max_amplitude: b.max_amplitude,
        max_modes: b.max_modes,
        min_wavenumber: b.min_wavenumber,
        max_wavenumber: b.max_wavenumber,
        level: cfg.level.unwrap_or(4),
        seed: cfg.seed,
    };
    let sweep = brock_sweep(&opts)?;
    let sum_ok = sweep
        .rows
        .iter()
        .all(|row| row.brock_sum >= 2.0 - b.sum_tolerance);
    let gap_ok = sweep
        .rows
        .iter()
        .all(|row| row.gap >= b.gap_threshold || row.total_amplitude < b.amplitude_threshold);
    let excess_ok = sweep.rows.iter().all(|row| row.excess >= -b.excess_slack);
    let slope = sweep.isoperimetric.slope;
    let slope_ok = (slope - 2.0).abs() <= b.slope_tolerance;
    let mut r = Report::new("isoperimetric", cfg, &sweep.rows)?;
    r.pass = sum_ok && gap_ok && excess_ok && slope_ok;
    r.summary = json!({
        "domains": sweep.rows.len(),
        "levels": [opts.level, opts.level + 1],
        "min_brock_sum": sweep.rows.iter().map(|r| r.brock_sum).fold(f64::INFINITY, f64::min),
        "brock_holds": sum_ok,
        "gap_rule_holds": gap_ok,
        "min_excess": sweep.rows.iter().map(|r| r.excess).fold(f64::INFINITY, f64::min),
        "slope": slope,
        "beta_hat": sweep.isoperimetric.beta_hat,
    });
    Ok(r)
}

/// Predicted and computed `ν₂` orderings at two sites.
pub fn cmd_compare(cfg: &RunConfig) -> Result<Report> {
    let ma = cfg.manifold.build()?;
    let mb = cfg.compare.other.build()?;
    let ya = cfg.base_point(&ma);
    let yb = cfg
        .compare
        .other_base_point
        .clone()
        .unwrap_or_else(|| mb.origin().as_slice().to_vec());
    let level = cfg.level.unwrap_or(if ma.dim() == 2 { 4 } else { 2 });
    let a = ProfileSite {
        manifold: &ma,
        base_point: &ya,
    };
    let b = ProfileSite {
        manifold: &mb,
        base_point: &yb,
    };
    let rep = compare_profiles(&a, &b, &cfg.compare.v_grid, level)?;
    let rows: Vec<&CompareRow> = rep.rows.iter().collect();
    let agree = rep
        .rows
        .iter()
        .filter(|row| row.v <= cfg.compare.v_max)
        .all(|row| row.predicted_order == row.computed_order);
    let mut r = Report::new("compare", cfg, &rows)?;
    r.pass = agree;
    r.summary = json!({
        "manifold_a": ma.label(),
        "manifold_b": mb.label(),
        "scalar_a": rep.scalar_a,
        "scalar_b": rep.scalar_b,
        "predictor_ordering_strict": rep.predictor_ordering_strict(),
        "agreeing_volumes": rep.agreeing_volumes(),
        "ordering_agrees_up_to_v_max": agree,
    });
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshRow {
    pub dim: usize,
    pub level: u32,
    pub vertices: usize,
    pub cells: usize,
    pub boundary_facets: usize,
    pub euler_characteristic: i64,
    pub min_quality: f64,
    pub max_edge: f64,
}

/// The unit ball mesh, or a planar star mesh, written in the text format.
pub fn build_config_mesh(cfg: &RunConfig) -> Result<SimplicialMesh> {
    let level = cfg.level.unwrap_or(3);
    if cfg.mesh.modes.is_empty() && cfg.mesh.r0 == 1.0 {
        unit_ball_mesh(cfg.mesh.dim, level)
    } else if cfg.mesh.dim == 2 {
        star_domain_mesh(
            Arc::new(StarProfile::new(cfg.mesh.r0, cfg.mesh.modes.clone())),
            level,
        )
    } else {
        Err(SteklovError::Config(
            "star meshes are two-dimensional".into(),
        ))
    }
}

pub fn cmd_export_mesh(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let mesh = build_config_mesh(cfg)?;
    fs::create_dir_all(out)?;
    let file = fs::File::create(out.join("mesh.txt"))?;
    mesh.write_text(std::io::BufWriter::new(file))?;
    let row = MeshRow {
        dim: mesh.dim(),
        level: mesh.level(),
        vertices: mesh.n_vertices(),
        cells: mesh.n_cells(),
        boundary_facets: mesh.n_boundary_facets(),
        euler_characteristic: mesh.euler_characteristic(),
        min_quality: mesh.min_quality(),
        max_edge: mesh.max_edge(),
    };
    let mut r = Report::new("export-mesh", cfg, &[row])?;
    r.pass = mesh.euler_characteristic() == 1;
    r.summary = json!({ "file": "mesh.txt" });
    Ok(r)
}

#[derive(Parser, Debug)]
#[command(
    name = "steklov",
    version,
    about = "Steklov eigenvalues of small domains on model manifolds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured mesh level.
    #[arg(long, global = true)]
    pub level: Option<u32>,
    /// Output directory (default `steklov-out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Treat warnings such as a non-converged search as failures.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Spectrum of the unit disk against 0, 1, 1, 2, 2, 3.
    VerifyDisk,
    /// Fit the ball coefficient of ν₂ on a radius grid.
    FitBall,
    /// Fit the ellipsoid coefficient and check ν₂(E) ≥ ν₂(B).
    FitEllipsoid,
    /// Volume-matched domains against the profile predictors.
    ProfileScan,
    /// Simplex search over planar star domains of fixed volume.
    ShapeSearch,
    /// Brock sums and isoperimetric deficits of random star domains.
    Isoperimetric,
    /// Compare predicted and computed orderings at two sites.
    Compare,
    /// Write a mesh in the text format.
    ExportMesh,
}

/// Exit code for an error.
pub fn exit_code_for(e: &SteklovError) -> u8 {
    match e {
        SteklovError::Numeric(_) => 3,
        _ => 2,
    }
}

/// The effective configuration: file contents with command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(l) = cli.level {
        cfg.level = Some(l);
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

/// Runs one command and writes its report.
pub fn run_command(command: Command, cfg: &RunConfig) -> Result<Report> {
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("steklov-out"));
    let report = match command {
        Command::VerifyDisk => cmd_verify_disk(cfg)?,
        Command::FitBall => cmd_fit_ball(cfg)?,
        Command::FitEllipsoid => cmd_fit_ellipsoid(cfg)?,
        Command::ProfileScan => cmd_profile_scan(cfg)?,
        Command::ShapeSearch => cmd_shape_search(cfg)?,
        Command::Isoperimetric => cmd_isoperimetric(cfg)?,
        Command::Compare => cmd_compare(cfg)?,
        Command::ExportMesh => cmd_export_mesh(cfg, &out)?,
    };
    report.write(&out)?;
    Ok(report)
}

/// Caps the global thread pool at `STEKLOV_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("STEKLOV_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            SteklovError::Config(format!(
                "STEKLOV_THREADS must be a positive integer, got {v:?}"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| SteklovError::Config(e.to_string()))?;
    }
    Ok(())
}

pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|_| {
        let cfg = effective_config(&cli)?;
        run_command(cli.command, &cfg)
    });
    match result {
        Ok(report) => {
            print!("{}", report.text_summary());
            if report.passes(cli.strict) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn manifold_specs_parse() {
        let cfg = RunConfig::from_toml(
            "[manifold]\nkind = \"wrapped-chart\"\ndomain_radius = 1.0\n[manifold.of]\nkind = \"sphere\"\nradius = 1.0\n",
        )
        .unwrap();
        assert!(matches!(
            cfg.manifold.build().unwrap(),
            ModelManifold::Custom(_)
        ));
        let p = RunConfig::from_toml("[manifold]\nkind = \"product-s2xr\"\n").unwrap();
        assert_eq!(p.manifold, ManifoldSpec::ProductS2xR);
        assert!(RunConfig::from_toml("[manifold]\nkind = \"torus\"\n").is_err());
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn hash_depends_on_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.seed = 9;
        assert_eq!(a.hash().unwrap(), a.clone().hash().unwrap());
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }

    #[test]
    fn numeric_errors_map_to_exit_three() {
        assert_eq!(exit_code_for(&SteklovError::Numeric("x".into())), 3);
        assert_eq!(exit_code_for(&SteklovError::Config("x".into())), 2);
    }

    #[test]
    fn cli_parses_flags() {
        let cli = Cli::try_parse_from([
            "steklov", "fit-ball", "--seed", "4", "--level", "3", "--strict",
        ])
        .unwrap();
        assert_eq!(cli.command, Command::FitBall);
        let cfg = effective_config(&cli).unwrap();
        assert_eq!((cfg.seed, cfg.level), (4, Some(3)));
        assert!(cli.strict);
        let err = Cli::try_parse_from(["steklov", "frobnicate"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    fn spec_strategy() -> impl Strategy<Value = ManifoldSpec> {
        prop_oneof![
            (2usize..5).prop_map(|dim| ManifoldSpec::Euclidean { dim }),
            (0.1f64..10.0).prop_map(|radius| ManifoldSpec::Sphere { radius }),
            (0.1f64..10.0).prop_map(|radius| ManifoldSpec::Hyperbolic { radius }),
            Just(ManifoldSpec::ProductS2xR),
            (0.1f64..10.0, 0.1f64..3.0).prop_map(|(radius, d)| ManifoldSpec::WrappedChart {
                of: Box::new(ManifoldSpec::Sphere { radius }),
                domain_radius: d
            }),
        ]
    }

    proptest! {
        #[test]
        fn config_round_trips(
            manifold in spec_strategy(),
            seed in any::<u64>(),
            level in proptest::option::of(0u32..8),
            grid in proptest::collection::vec(1e-3f64..1.0, 3..7),
            tol in 1e-6f64..1.0,
            modes in proptest::collection::vec((2u32..9, -0.3f64..0.3, -0.3f64..0.3), 0..4),
            base in proptest::option::of(proptest::collection::vec(-1.0f64..1.0, 2..4)),
        ) {
            let mut cfg = RunConfig { manifold, seed, level, base_point: base, ..Default::default() };
            cfg.fit.r_grid = grid.clone();
            cfg.scan.v_grid = grid;
            cfg.fit.ball_tolerance = tol;
            cfg.mesh.modes = modes;
            let text = cfg.to_toml().unwrap();
            let back = RunConfig::from_toml(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(back.to_toml().unwrap(), text);
        }
    }
}
