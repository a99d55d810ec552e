//! Recovers the first-order coefficient of `ν₂` for small geodesic balls on
//! the unit sphere, in radius form (target 1/6) and volume form (target 1/8).

use steklov::geometry::ModelManifold;
use steklov::profile::{fit_pipeline, relative_error, DomainKind, FitOptions};

fn main() -> steklov::Result<()> {
    let m = ModelManifold::sphere(1.0)?;
    let fit = fit_pipeline(&m, &[0.0, 0.0], DomainKind::Ball, &FitOptions::default())?;
    println!("r      volume        nu2 (extrapolated)");
    for row in &fit.rows {
        println!("{:<6} {:<13.9} {:.9}", row.r, row.volume, row.nu2);
    }
    for (name, c, target) in [
        ("radius form", fit.radius_fit.c_hat, fit.radius_target),
        ("volume form", fit.volume_fit.c_hat, fit.volume_target),
    ] {
        println!(
            "{name}: c_hat = {c:.5}, target {target:.5}, relative error {:.4}",
            relative_error(c, target)
        );
    }
    Ok(())
}
