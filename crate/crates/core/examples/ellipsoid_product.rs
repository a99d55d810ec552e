//! Curvature-balanced geodesic ellipsoids in S²×R: eccentricities, volume and
//! `ν₂` against the geodesic ball of the same radius.

use steklov::domains::{volume_of, GeodesicEllipsoidSpec};
use steklov::geometry::{curvature_at, pullback_ball_chart, ModelManifold};
use steklov::mesh::unit_ball_mesh;
use steklov::profile::chart_nu2;

fn main() -> steklov::Result<()> {
    let m = ModelManifold::ProductS2xR;
    let y0 = [0.0; 3];
    let cp = curvature_at(&m, &y0)?;
    println!(
        "scalar curvature {}, least Ricci eigenvalue {}",
        cp.scalar, cp.ricci_min
    );
    let mesh = unit_ball_mesh(3, 3)?;
    for r in [0.3, 0.2] {
        let spec = GeodesicEllipsoidSpec::new(&m, &y0, r)?;
        let (ellipsoid, ball) = (spec.chart(&m)?, pullback_ball_chart(&m, &y0, r)?);
        let (ne, nb) = (chart_nu2(&ellipsoid, 3)? / r, chart_nu2(&ball, 3)? / r);
        println!(
            "r = {r}: b = {:?}, volumes {:.9} / {:.9}, nu2 ellipsoid {ne:.6}, ball {nb:.6}, (nu2 ellipsoid - nu2 ball)/r {:.5}",
            spec.b,
            volume_of(&ellipsoid, &mesh)? * r.powi(3),
            volume_of(&ball, &mesh)? * r.powi(3),
            (ne - nb) / r
        );
    }
    Ok(())
}
