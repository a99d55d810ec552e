//! Exponential and logarithm maps, geodesic distance and curvature on the
//! model manifolds.

use steklov::geometry::{
    curvature_at, exp_map, exp_map_numeric, geodesic_distance, log_map, ModelManifold,
};

fn main() -> steklov::Result<()> {
    let manifolds = [ModelManifold::sphere(1.0)?, ModelManifold::hyperbolic(1.0)?];
    for m in &manifolds {
        let p = [0.2, -0.1];
        let v = [0.3, 0.4];
        let q = exp_map(m, &p, &v)?;
        let q_ode = exp_map_numeric(m, &p, &v)?;
        let back = log_map(m, &p, q.as_slice())?;
        let cp = curvature_at(m, &p)?;
        println!("{}", m.label());
        println!(
            "  exp_p(v) = {:?}, integrated geodesic differs by {:.2e}",
            q.as_slice(),
            (&q - &q_ode).norm()
        );
        println!("  log_p(exp_p(v)) = {:?}", back.as_slice());
        println!(
            "  distance {:.12} (|v|_g = {:.12})",
            geodesic_distance(m, &p, q.as_slice())?,
            m.norm_at(&p, &v)
        );
        println!(
            "  scalar curvature {:.6}, least Ricci eigenvalue {:.6}",
            cp.scalar, cp.ricci_min
        );
    }
    let prod = ModelManifold::ProductS2xR;
    let cp = curvature_at(&prod, &[0.0; 3])?;
    println!("{}: Ricci\n{}", prod.label(), cp.ricci);
    Ok(())
}
