//! Boundary centroids: the point whose boundary integral of the inverse
//! exponential map vanishes.

use steklov::domains::{boundary_centroid, ellipse_sample, geodesic_sphere_sample};
use steklov::geometry::ModelManifold;

fn main() -> steklov::Result<()> {
    let e = ModelManifold::euclidean(2)?;
    let s = ModelManifold::sphere(1.0)?;
    let h = ModelManifold::hyperbolic(1.0)?;
    let cases = [
        (
            "ellipse about (0.3, -0.1)",
            boundary_centroid(&e, &ellipse_sample([0.3, -0.1], 1.2, 1.0 / 1.2, 256))?,
        ),
        (
            "sphere circle about the pole",
            boundary_centroid(&s, &geodesic_sphere_sample(&s, &[0.0, 0.0], 0.4, 64)?)?,
        ),
        (
            "hyperbolic circle about (0.3, 0.2)",
            boundary_centroid(&h, &geodesic_sphere_sample(&h, &[0.3, 0.2], 0.4, 64)?)?,
        ),
    ];
    for (name, c) in &cases {
        println!(
            "{name}: centroid {:?}, first moment {:.2e} of boundary measure {:.6}, {} iterations",
            c.point.as_slice(),
            c.moment_norm,
            c.sigma,
            c.iterations
        );
    }
    Ok(())
}
