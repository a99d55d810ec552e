//! Exponential and logarithm maps.
//!
//! Catalog manifolds use closed forms through their sphere / hyperboloid
//! embeddings. Custom charts integrate the geodesic equation
//! `ẍᵏ = −Γᵏᵢⱼ ẋⁱ ẋʲ` with an adaptive Dormand–Prince 5(4) pair.

use nalgebra::{DMatrix, DVector};

use super::manifold::{
    hyperboloid_chart, hyperboloid_embed, hyperboloid_embed_jacobian, minkowski, sphere_chart,
    sphere_embed, sphere_embed_jacobian, ModelManifold,
};
use crate::error::{Result, SteklovError};

/// Local error tolerance per integration step.
pub const GEODESIC_TOLERANCE: f64 = 1e-12;

const MAX_STEPS: usize = 200_000;

/// Christoffel symbols `Γᵏᵢⱼ` at `x`, stored at `(k * n + i) * n + j`, from
/// central differences of the metric with step `h`.
pub fn christoffel(metric: &dyn Fn(&[f64]) -> DMatrix<f64>, x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    let g = metric(x);
    let g_inv = g
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::identity(n, n));
    // dg[l] = ∂_l g
    let mut dg = Vec::with_capacity(n);
    let mut xp = x.to_vec();
    for l in 0..n {
        xp[l] = x[l] + h;
        let gp = metric(&xp);
        xp[l] = x[l] - h;
        let gm = metric(&xp);
        xp[l] = x[l];
        dg.push((gp - gm) / (2.0 * h));
    }
    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += g_inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gamma[(k * n + i) * n + j] = 0.5 * s;
            }
        }
    }
    gamma
}

fn christoffel_step(x: &[f64]) -> f64 {
    1e-5 * x.iter().fold(1.0_f64, |m, c| m.max(c.abs()))
}

fn geodesic_rhs(metric: &dyn Fn(&[f64]) -> DMatrix<f64>, y: &[f64], out: &mut [f64]) {
    let n = y.len() / 2;
    let (x, v) = y.split_at(n);
    let gamma = christoffel(metric, x, christoffel_step(x));
    out[..n].copy_from_slice(v);
    for k in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += gamma[(k * n + i) * n + j] * v[i] * v[j];
            }
        }
        out[n + k] = -acc;
    }
}

/// Integrates the geodesic starting at `p` with initial velocity `v` over unit
/// time. Returns the endpoint and the final velocity.
pub fn integrate_geodesic(
    metric: &dyn Fn(&[f64]) -> DMatrix<f64>,
    inside: &dyn Fn(&[f64]) -> bool,
    p: &[f64],
    v: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let n = p.len();
    let m = 2 * n;
    let mut y: Vec<f64> = p.iter().chain(v.iter()).copied().collect();
    let speed = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut t = 0.0;
    let mut h = if speed > 0.0 {
        (0.05 / speed).min(0.1)
    } else {
        1.0
    };
    let mut k = vec![vec![0.0; m]; 7];
    let mut stage = vec![0.0; m];
    for _ in 0..MAX_STEPS {
        if t >= 1.0 {
            return Ok((y[..n].to_vec(), y[n..].to_vec()));
        }
        h = h.min(1.0 - t);
        let mut left_chart = false;
        for s in 0..7 {
            for c in 0..m {
                let mut acc = y[c];
                for q in 0..s {
                    acc += h * A[s][q] * k[q][c];
                }
                stage[c] = acc;
            }
            if !inside(&stage[..n]) {
                left_chart = true;
                break;
            }
            geodesic_rhs(metric, &stage, &mut k[s]);
        }
        if left_chart {
            h *= 0.5;
            if h < 1e-14 {
                return Err(SteklovError::Range(
                    "geodesic leaves the chart domain".into(),
                ));
            }
            continue;
        }
        let mut err: f64 = 0.0;
        let mut y5 = vec![0.0; m];
        for c in 0..m {
            let mut s5 = y[c];
            let mut s4 = y[c];
            for s in 0..7 {
                s5 += h * B5[s] * k[s][c];
                s4 += h * B4[s] * k[s][c];
            }
            y5[c] = s5;
            let scale = tol * (1.0 + y[c].abs().max(s5.abs()));
            err = err.max((s5 - s4).abs() / scale);
        }
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < 1e-14 {
            return Err(SteklovError::Numeric("geodesic step size underflow".into()));
        }
    }
    Err(SteklovError::Numeric(
        "geodesic integration exceeded the step budget".into(),
    ))
}

/// Classical RK4 with a fixed number of steps; the endpoint depends smoothly
/// on `(p, v)`, which keeps finite-difference Jacobians of the flow clean.
pub fn integrate_geodesic_fixed(
    metric: &dyn Fn(&[f64]) -> DMatrix<f64>,
    p: &[f64],
    v: &[f64],
    steps: usize,
) -> Vec<f64> {
    let n = p.len();
    let m = 2 * n;
    let mut y: Vec<f64> = p.iter().chain(v.iter()).copied().collect();
    let h = 1.0 / steps as f64;
    let mut k1 = vec![0.0; m];
    let mut k2 = vec![0.0; m];
    let mut k3 = vec![0.0; m];
    let mut k4 = vec![0.0; m];
    let mut tmp = vec![0.0; m];
    for _ in 0..steps {
        geodesic_rhs(metric, &y, &mut k1);
        for c in 0..m {
            tmp[c] = y[c] + 0.5 * h * k1[c];
        }
        geodesic_rhs(metric, &tmp, &mut k2);
        for c in 0..m {
            tmp[c] = y[c] + 0.5 * h * k2[c];
        }
        geodesic_rhs(metric, &tmp, &mut k3);
        for c in 0..m {
            tmp[c] = y[c] + h * k3[c];
        }
        geodesic_rhs(metric, &tmp, &mut k4);
        for c in 0..m {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    y.truncate(n);
    y
}

fn check_vector(m: &ModelManifold, p: &[f64], v: &[f64]) -> Result<()> {
    m.check_point(p)?;
    if v.len() != m.dim() {
        return Err(SteklovError::Argument(
            "tangent vector has wrong dimension".into(),
        ));
    }
    if let Some(bound) = m.injectivity_bound() {
        let len = match m {
            ModelManifold::ProductS2xR => m.norm_at(p, &[v[0], v[1], 0.0]),
            _ => m.norm_at(p, v),
        };
        if len >= bound {
            return Err(SteklovError::Range(format!(
                "|v|_g = {len} exceeds the injectivity bound {bound} of {}",
                m.label()
            )));
        }
    }
    Ok(())
}

fn sphere_exp(u: &[f64], v: &[f64]) -> Result<[f64; 2]> {
    let p = sphere_embed(u);
    let j = sphere_embed_jacobian(u);
    let t: Vec<f64> = (0..3).map(|a| j[a][0] * v[0] + j[a][1] * v[1]).collect();
    let theta = t.iter().map(|c| c * c).sum::<f64>().sqrt();
    if theta == 0.0 {
        return Ok([u[0], u[1]]);
    }
    let (s, c) = theta.sin_cos();
    let q = [
        c * p[0] + s * t[0] / theta,
        c * p[1] + s * t[1] / theta,
        c * p[2] + s * t[2] / theta,
    ];
    sphere_chart(&q)
        .ok_or_else(|| SteklovError::Range("geodesic endpoint is the chart pole".into()))
}

fn sphere_log(u: &[f64], w: &[f64]) -> Result<[f64; 2]> {
    let p = sphere_embed(u);
    let q = sphere_embed(w);
    let dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
    let cross = [
        p[1] * q[2] - p[2] * q[1],
        p[2] * q[0] - p[0] * q[2],
        p[0] * q[1] - p[1] * q[0],
    ];
    let sin = cross.iter().map(|c| c * c).sum::<f64>().sqrt();
    let theta = sin.atan2(dot);
    if theta > std::f64::consts::PI - 1e-9 {
        return Err(SteklovError::Range("points are antipodal".into()));
    }
    let perp = [q[0] - dot * p[0], q[1] - dot * p[1], q[2] - dot * p[2]];
    let pn = perp.iter().map(|c| c * c).sum::<f64>().sqrt();
    if pn == 0.0 || theta == 0.0 {
        return Ok([0.0, 0.0]);
    }
    let tvec = [
        theta * perp[0] / pn,
        theta * perp[1] / pn,
        theta * perp[2] / pn,
    ];
    let j = sphere_embed_jacobian(u);
    let s = 1.0 + u[0] * u[0] + u[1] * u[1];
    let lam2 = 4.0 / (s * s);
    let mut out = [0.0; 2];
    for b in 0..2 {
        out[b] = (0..3).map(|a| j[a][b] * tvec[a]).sum::<f64>() / lam2;
    }
    Ok(out)
}

fn hyperbolic_exp(u: &[f64], v: &[f64]) -> [f64; 2] {
    let p = hyperboloid_embed(u);
    let j = hyperboloid_embed_jacobian(u);
    let t = [
        j[0][0] * v[0] + j[0][1] * v[1],
        j[1][0] * v[0] + j[1][1] * v[1],
        j[2][0] * v[0] + j[2][1] * v[1],
    ];
    let theta = minkowski(&t, &t).max(0.0).sqrt();
    if theta == 0.0 {
        return [u[0], u[1]];
    }
    let (s, c) = (theta.sinh(), theta.cosh());
    let q = [
        c * p[0] + s * t[0] / theta,
        c * p[1] + s * t[1] / theta,
        c * p[2] + s * t[2] / theta,
    ];
    hyperboloid_chart(&q)
}

fn hyperbolic_log(u: &[f64], w: &[f64]) -> [f64; 2] {
    let p = hyperboloid_embed(u);
    let q = hyperboloid_embed(w);
    let ch = -minkowski(&p, &q);
    let perp = [q[0] - ch * p[0], q[1] - ch * p[1], q[2] - ch * p[2]];
    let sh = minkowski(&perp, &perp).max(0.0).sqrt();
    if sh == 0.0 {
        return [0.0, 0.0];
    }
    let theta = sh.asinh();
    let tvec = [
        theta * perp[0] / sh,
        theta * perp[1] / sh,
        theta * perp[2] / sh,
    ];
    let j = hyperboloid_embed_jacobian(u);
    let wgt = 1.0 - u[0] * u[0] - u[1] * u[1];
    let lam2 = 4.0 / (wgt * wgt);
    let eta = [-1.0, 1.0, 1.0];
    let mut out = [0.0; 2];
    for b in 0..2 {
        out[b] = (0..3).map(|a| j[a][b] * eta[a] * tvec[a]).sum::<f64>() / lam2;
    }
    out
}

/// `Exp_p(v)`: closed forms for catalog manifolds, numerical integration for
/// custom charts.
pub fn exp_map(m: &ModelManifold, p: &[f64], v: &[f64]) -> Result<DVector<f64>> {
    check_vector(m, p, v)?;
    let out = match m {
        ModelManifold::Euclidean { .. } => p.iter().zip(v).map(|(a, b)| a + b).collect(),
        ModelManifold::Sphere { .. } => sphere_exp(p, v)?.to_vec(),
        ModelManifold::Hyperbolic { .. } => hyperbolic_exp(p, v).to_vec(),
        ModelManifold::ProductS2xR => {
            let s = sphere_exp(&p[..2], &v[..2])?;
            vec![s[0], s[1], p[2] + v[2]]
        }
        ModelManifold::Custom(_) => return exp_map_numeric(m, p, v),
    };
    Ok(DVector::from_vec(out))
}

/// `Exp_p(v)` by integrating the geodesic equation in the coordinate chart of
/// any manifold (including catalogs, for cross-checking the closed forms).
pub fn exp_map_numeric(m: &ModelManifold, p: &[f64], v: &[f64]) -> Result<DVector<f64>> {
    check_vector(m, p, v)?;
    let metric = |x: &[f64]| m.coordinate_metric(x);
    let inside = |x: &[f64]| m.contains(x);
    let (x, _) = integrate_geodesic(&metric, &inside, p, v, GEODESIC_TOLERANCE)?;
    Ok(DVector::from_vec(x))
}

/// `Exp_p⁻¹(q)` as a coordinate tangent vector at `p`.
pub fn log_map(m: &ModelManifold, p: &[f64], q: &[f64]) -> Result<DVector<f64>> {
    m.check_point(p)?;
    m.check_point(q)?;
    let out = match m {
        ModelManifold::Euclidean { .. } => q.iter().zip(p).map(|(a, b)| a - b).collect(),
        ModelManifold::Sphere { .. } => sphere_log(p, q)?.to_vec(),
        ModelManifold::Hyperbolic { .. } => hyperbolic_log(p, q).to_vec(),
        ModelManifold::ProductS2xR => {
            let s = sphere_log(&p[..2], &q[..2])?;
            vec![s[0], s[1], q[2] - p[2]]
        }
        ModelManifold::Custom(_) => return log_map_shooting(m, p, q),
    };
    Ok(DVector::from_vec(out))
}

/// Newton shooting on the numerical exponential map.
fn log_map_shooting(m: &ModelManifold, p: &[f64], q: &[f64]) -> Result<DVector<f64>> {
    let n = m.dim();
    let target = DVector::from_column_slice(q);
    let mut v = DVector::from_iterator(n, q.iter().zip(p).map(|(a, b)| a - b));
    let residual = |v: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(exp_map_numeric(m, p, v.as_slice())? - &target)
    };
    let mut f = residual(&v)?;
    for _ in 0..60 {
        if f.norm() < 1e-11 {
            return Ok(v);
        }
        let delta = 1e-6 * v.norm().max(1e-3);
        let mut jac = DMatrix::zeros(n, n);
        for c in 0..n {
            let mut vp = v.clone();
            vp[c] += delta;
            let mut vm = v.clone();
            vm[c] -= delta;
            let col = (exp_map_numeric(m, p, vp.as_slice())?
                - exp_map_numeric(m, p, vm.as_slice())?)
                / (2.0 * delta);
            jac.set_column(c, &col);
        }
        let step = jac
            .lu()
            .solve(&f)
            .ok_or_else(|| SteklovError::Numeric("singular exponential map Jacobian".into()))?;
        let mut damping = 1.0;
        loop {
            let trial = &v - &step * damping;
            match residual(&trial) {
                Ok(ft) if ft.norm() < f.norm() || damping < 1e-3 => {
                    v = trial;
                    f = ft;
                    break;
                }
                _ => damping *= 0.5,
            }
            if damping < 1e-4 {
                return Err(SteklovError::Range("logarithm shooting diverged".into()));
            }
        }
    }
    if f.norm() < 1e-9 {
        Ok(v)
    } else {
        Err(SteklovError::Range(
            "logarithm shooting did not converge".into(),
        ))
    }
}

pub fn geodesic_distance(m: &ModelManifold, p: &[f64], q: &[f64]) -> Result<f64> {
    let v = log_map(m, p, q)?;
    Ok(m.norm_at(p, v.as_slice()))
}
