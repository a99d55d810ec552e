//! Nelder–Mead search over Fourier star domains of area π for a larger `ν₂`
//! than the disk. A short budget keeps the run brief; the search settles near
//! the round shape.

use steklov::geometry::MetricChart;
use steklov::profile::{shape_search, ShapeSearchOptions};

fn main() -> steklov::Result<()> {
    let opts = ShapeSearchOptions {
        order: 3,
        budget: 300,
        level: 3,
        seed: 7,
        ..Default::default()
    };
    let res = shape_search(&MetricChart::euclidean(2)?, std::f64::consts::PI, &opts)?;
    println!("initial nu2 {:.6}", res.initial_nu2);
    println!(
        "best nu2    {:.6} after {} evaluations (converged: {})",
        res.best_nu2, res.evaluations, res.converged
    );
    println!(
        "best profile r0 = {:.6}, modes {:?}",
        res.best_profile.r0, res.best_profile.modes
    );
    println!("total amplitude {:.2e}", res.best_profile.total_amplitude());
    Ok(())
}
