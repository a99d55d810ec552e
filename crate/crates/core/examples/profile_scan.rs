//! `ν₂` of volume-matched geodesic disks on the unit sphere against the
//! closed-form small-volume predictors.

use steklov::geometry::ModelManifold;
use steklov::profile::profile_scan;

fn main() -> steklov::Result<()> {
    let m = ModelManifold::sphere(1.0)?;
    let scan = profile_scan(&m, &[0.0, 0.0], &[0.1, 0.05, 0.02, 0.01], 4, true)?;
    println!("S = {}, levels {:?}", scan.scalar, scan.levels);
    println!("v      radius     nu2          predictor    surface profile");
    for row in &scan.rows {
        println!(
            "{:<6} {:<10.6} {:<12.6} {:<12.6} {:.6}",
            row.v,
            row.radius,
            row.nu2_ball,
            row.predictor_ball,
            row.wb_prediction.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
