//! Steklov spectrum of the Euclidean unit disk, whose exact values are
//! 0, 1, 1, 2, 2, 3, 3, … .

use steklov::geometry::MetricChart;
use steklov::mesh::unit_ball_mesh;
use steklov::profile::richardson_extrapolate;
use steklov::steklov::{assemble, solve_steklov};

fn main() -> steklov::Result<()> {
    let chart = MetricChart::euclidean(2)?;
    let spectrum = |level| -> steklov::Result<Vec<f64>> {
        Ok(solve_steklov(&assemble(&unit_ball_mesh(2, level)?, &chart)?, 7)?.eigenvalues)
    };
    let (coarse, fine) = (spectrum(4)?, spectrum(5)?);
    println!("k  level 4       level 5       extrapolated");
    for k in 0..coarse.len() {
        let nu = richardson_extrapolate(coarse[k], fine[k]);
        println!(
            "{:<2} {:<13.9} {:<13.9} {:.9}",
            k + 1,
            coarse[k],
            fine[k],
            nu
        );
    }
    Ok(())
}
