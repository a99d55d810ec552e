use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steklov::domains::{
    boundary_centroid, divergence_identity, ellipse_sample, geodesic_sphere_sample,
    isoperimetric_deficit_check, star_area, star_moment, star_symmetric_difference,
    symmetric_difference, volume_of, weighted_boundary_moment, BoundarySample,
    GeodesicEllipsoidSpec,
};
use steklov::expansions::ball_volume_expansion;
use steklov::geometry::{pullback_ball_chart, ModelManifold};
use steklov::mesh::{star_domain_mesh, unit_ball_mesh, BoundaryShape, SimplicialMesh, StarProfile};

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}

#[test]
fn cos2_star_symmetric_difference_is_pinned() {
    // |r² − 1| = |cos 2θ| (0.2 + 0.01 cos 2θ) integrates to 0.4 over a period
    let p = StarProfile::new(1.0, vec![(2, 0.1, 0.0)]);
    assert!((star_symmetric_difference(&p) - 0.4).abs() < 1e-13);
    let mesh = star_domain_mesh(Arc::new(p), 3).unwrap();
    assert!((symmetric_difference(&mesh, 10, 0).unwrap().value - 0.4).abs() < 1e-13);
}

#[test]
fn star_symmetric_difference_matches_brute_force() {
    let p = StarProfile::new(1.02, vec![(3, 0.07, -0.02), (5, 0.0, 0.03)]);
    let n = 400_000;
    let h = 2.0 * PI / n as f64;
    let brute: f64 = (0..n)
        .map(|i| {
            use steklov::mesh::RadialProfile;
            let r = p.radius((i as f64 + 0.5) * h);
            0.5 * (r * r - 1.0).abs() * h
        })
        .sum();
    assert!((star_symmetric_difference(&p) - brute).abs() < 1e-9);
}

#[test]
fn three_d_symmetric_difference_estimates_polyhedral_defect() {
    // the polyhedral ball lies inside B, so |U △ B| = |B| − |U_h|
    let mesh = unit_ball_mesh(3, 2).unwrap();
    let est = symmetric_difference(&mesh, 200_000, 11).unwrap();
    let exact = 4.0 * PI / 3.0 - mesh.euclidean_volume();
    assert!(est.stderr > 0.0);
    assert!(
        (est.value - exact).abs() < 5.0 * est.stderr,
        "{} ± {} vs {exact}",
        est.value,
        est.stderr
    );
    assert_eq!(est, symmetric_difference(&mesh, 200_000, 11).unwrap());
}

#[test]
fn non_star_mesh_is_rejected() {
    let mesh = unit_ball_mesh(2, 2).unwrap();
    let coords: Vec<f64> = (0..mesh.n_vertices())
        .flat_map(|i| {
            let v = mesh.vertex(i);
            [v[0] + 1.5, v[1]]
        })
        .collect();
    let cells: Vec<usize> = (0..mesh.n_cells())
        .flat_map(|c| mesh.cell(c).to_vec())
        .collect();
    let moved = SimplicialMesh::from_parts(2, coords, cells, 2, BoundaryShape::UnitSphere).unwrap();
    assert!(symmetric_difference(&moved, 10, 0).is_err());
}

#[test]
fn centroid_examples() {
    let e = ModelManifold::euclidean(2).unwrap();
    let c = boundary_centroid(&e, &ellipse_sample([0.3, -0.1], 1.2, 1.0 / 1.2, 256)).unwrap();
    assert!((c.point[0] - 0.3).abs() < 1e-8 && (c.point[1] + 0.1).abs() < 1e-8);
    let s = ModelManifold::sphere(1.0).unwrap();
    let sample = geodesic_sphere_sample(&s, &[0.0, 0.0], 0.4, 64).unwrap();
    assert!((sample.total_weight() - 2.0 * PI * 0.4f64.sin()).abs() < 1e-12);
    let c = boundary_centroid(&s, &sample).unwrap();
    assert!(c.point.norm() < 1e-8);
    for m in [s, ModelManifold::hyperbolic(1.0).unwrap()] {
        let c = boundary_centroid(
            &m,
            &geodesic_sphere_sample(&m, &[0.3, 0.2], 0.4, 64).unwrap(),
        )
        .unwrap();
        assert!((c.point[0] - 0.3).abs() < 1e-8 && (c.point[1] - 0.2).abs() < 1e-8);
    }
    let p = ModelManifold::ProductS2xR;
    let c = boundary_centroid(
        &p,
        &geodesic_sphere_sample(&p, &[0.1, 0.2, 0.3], 0.3, 12).unwrap(),
    )
    .unwrap();
    assert!((c.point - DVector::from_vec(vec![0.1, 0.2, 0.3])).norm() < 1e-8);
}

#[test]
fn centroid_iterates_on_asymmetric_samples() {
    let s = ModelManifold::sphere(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let points: Vec<DVector<f64>> = (0..40)
        .map(|_| {
            DVector::from_vec(vec![
                rng.random_range(-0.4..0.6),
                rng.random_range(-0.5..0.3),
            ])
        })
        .collect();
    let weights: Vec<f64> = (0..40).map(|_| rng.random_range(0.1..1.0)).collect();
    let c = boundary_centroid(&s, &BoundarySample { points, weights }).unwrap();
    assert!(c.iterations > 0 && c.iterations <= 500);
    assert!(c.moment_norm <= 1e-8 * c.sigma);
}

#[test]
fn volume_expansion_residual_decays() {
    let s = ModelManifold::sphere(1.0).unwrap();
    let mesh = unit_ball_mesh(2, 5).unwrap();
    let rs = [0.4, 0.2, 0.1];
    let mut resid = Vec::new();
    for &r in &rs {
        let v =
            volume_of(&pullback_ball_chart(&s, &[0.0, 0.0], r).unwrap(), &mesh).unwrap() * r * r;
        let cap = 2.0 * PI * (1.0 - r.cos());
        assert!((v / cap - 1.0).abs() < 1e-6);
        resid.push(v - ball_volume_expansion(r, 2, 2.0).unwrap());
    }
    assert!(slope(&rs, &resid) >= 3.5);
}

#[test]
fn weighted_moment_expansion_on_catalogs() {
    // ∫_{∂B} |x|² dσ_{g_r} = N|B| − (|B| r²/6) S + O(r³)
    for (m, level, b, s) in [
        (ModelManifold::sphere(1.0).unwrap(), 5, PI, 2.0),
        (ModelManifold::hyperbolic(1.0).unwrap(), 5, PI, -2.0),
        (ModelManifold::ProductS2xR, 2, 4.0 * PI / 3.0, 2.0),
    ] {
        let n = m.dim() as f64;
        let mesh = unit_ball_mesh(m.dim(), level).unwrap();
        let rs = [0.4, 0.2, 0.1];
        let resid: Vec<f64> = rs
            .iter()
            .map(|&r| {
                let chart = pullback_ball_chart(&m, &vec![0.0; m.dim()], r).unwrap();
                weighted_boundary_moment(&chart, &mesh).unwrap() - (n * b - b * r * r / 6.0 * s)
            })
            .collect();
        assert!(slope(&rs, &resid) >= 2.5, "{}: {resid:?}", m.label());
    }
}

#[test]
fn divergence_identity_holds() {
    let s = ModelManifold::sphere(1.0).unwrap();
    let mesh = unit_ball_mesh(2, 5).unwrap();
    let (div, bdry) =
        divergence_identity(&pullback_ball_chart(&s, &[0.0, 0.0], 0.3).unwrap(), &mesh).unwrap();
    assert!((div - bdry).abs() < 1e-6 * bdry);
    let p = ModelManifold::ProductS2xR;
    let mesh = unit_ball_mesh(3, 2).unwrap();
    let (div, bdry) =
        divergence_identity(&pullback_ball_chart(&p, &[0.0; 3], 0.3).unwrap(), &mesh).unwrap();
    assert!((div - bdry).abs() < 1e-4 * bdry);
}

#[test]
fn ellipsoid_volume_matches_ball_to_high_order() {
    let m = ModelManifold::ProductS2xR;
    let mesh = unit_ball_mesh(3, 2).unwrap();
    let rs = [0.4, 0.3, 0.2];
    let diffs: Vec<f64> = rs
        .iter()
        .map(|&r| {
            let e = GeodesicEllipsoidSpec::new(&m, &[0.0; 3], r).unwrap();
            assert!(e.b_sum().abs() < 1e-12);
            let ve = volume_of(&e.chart(&m).unwrap(), &mesh).unwrap();
            let vb = volume_of(&pullback_ball_chart(&m, &[0.0; 3], r).unwrap(), &mesh).unwrap();
            (ve - vb) * r.powi(3)
        })
        .collect();
    assert!(slope(&rs, &diffs) >= 6.5, "{diffs:?}");
}

#[test]
fn isoperimetric_family_and_moment_oracle() {
    let t = isoperimetric_deficit_check(
        &StarProfile::new(1.0, vec![(3, 1.0, 0.0)]),
        &[0.02, 0.04, 0.08, 0.16],
    );
    assert!((t.slope - 2.0).abs() <= 0.3);
    assert!(t.rows.iter().all(|r| r.excess >= -1e-9 && r.deficit >= 0.0));
    let p = StarProfile::new(1.0, vec![(3, 0.05, 0.0)]);
    let mesh = star_domain_mesh(Arc::new(p.clone()), 4).unwrap();
    let id = steklov::geometry::MetricChart::euclidean(2).unwrap();
    assert!((weighted_boundary_moment(&id, &mesh).unwrap() - star_moment(&p)).abs() < 1e-6);
    assert!(star_area(&p) > PI);
}
