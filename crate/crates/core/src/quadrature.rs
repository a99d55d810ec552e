//! Quadrature rules on intervals, triangles and tetrahedra.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Degree-4 six-point rule on the reference triangle: barycentric points and
/// weights summing to 1.
pub fn triangle_degree4() -> Vec<([f64; 3], f64)> {
    let (a1, w1) = (0.445_948_490_915_965, 0.223_381_589_678_011);
    let (a2, w2) = (0.091_576_213_509_771, 0.109_951_743_655_322);
    let mut out = Vec::with_capacity(6);
    for (a, w) in [(a1, w1), (a2, w2)] {
        let b = 1.0 - 2.0 * a;
        out.push(([a, a, b], w));
        out.push(([a, b, a], w));
        out.push(([b, a, a], w));
    }
    out
}

/// Degree-5 seven-point rule on the reference triangle (weights sum to 1).
pub fn triangle_degree5() -> Vec<([f64; 3], f64)> {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let a2 = (6.0 + s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let w2 = (155.0 + s15) / 1200.0;
    let mut out = vec![([1.0 / 3.0; 3], 9.0 / 40.0)];
    for (a, w) in [(a1, w1), (a2, w2)] {
        let b = 1.0 - 2.0 * a;
        out.push(([a, a, b], w));
        out.push(([a, b, a], w));
        out.push(([b, a, a], w));
    }
    out
}

/// Degree-4 eleven-point rule on the reference tetrahedron (weights sum to 1).
pub fn tetrahedron_degree4() -> Vec<([f64; 4], f64)> {
    let mut out = vec![([0.25; 4], -0.013_155_555_555_555_6 * 6.0)];
    let (a, b) = (0.071_428_571_428_571_4, 0.785_714_285_714_286);
    for k in 0..4 {
        let mut p = [a; 4];
        p[k] = b;
        out.push((p, 0.007_622_222_222_222_22 * 6.0));
    }
    let (c, d) = (0.399_403_576_166_799, 0.100_596_423_833_201);
    for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        let mut p = [d; 4];
        p[i] = c;
        p[j] = c;
        out.push((p, 0.024_888_888_888_888_9 * 6.0));
    }
    out
}
