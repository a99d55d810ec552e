//! Orders the unit sphere and the hyperbolic plane by the predicted and the
//! computed `ν₂` of small domains of equal area.

use steklov::expansions::{compare_profiles, ProfileSite};
use steklov::geometry::ModelManifold;

fn main() -> steklov::Result<()> {
    let (s, h) = (ModelManifold::sphere(1.0)?, ModelManifold::hyperbolic(1.0)?);
    let a = ProfileSite {
        manifold: &s,
        base_point: &[0.0, 0.0],
    };
    let b = ProfileSite {
        manifold: &h,
        base_point: &[0.0, 0.0],
    };
    let report = compare_profiles(&a, &b, &[0.2, 0.1, 0.05, 0.02], 4)?;
    println!(
        "scalar curvatures {} and {}",
        report.scalar_a, report.scalar_b
    );
    println!("v      nu2 sphere   nu2 hyperbolic  predicted  computed");
    for row in &report.rows {
        println!(
            "{:<6} {:<12.6} {:<15.6} {:<10} {}",
            row.v, row.nu2_a, row.nu2_b, row.predicted_order, row.computed_order
        );
    }
    println!("orderings agree at volumes {:?}", report.agreeing_volumes());
    Ok(())
}
