//! Builds a star-domain mesh, writes it in the text format and reads it back.

use std::sync::Arc;

use steklov::mesh::{star_domain_mesh, SimplicialMesh, StarProfile};

fn main() -> steklov::Result<()> {
    let profile = StarProfile::new(1.0, vec![(3, 0.1, 0.0), (5, 0.0, 0.04)]);
    let mesh = star_domain_mesh(Arc::new(profile), 3)?;
    let path = std::env::temp_dir().join("steklov-star-mesh.txt");
    mesh.write_text(std::fs::File::create(&path)?)?;
    let back = SimplicialMesh::read_text(std::io::BufReader::new(std::fs::File::open(&path)?))?;
    println!("wrote {}", path.display());
    println!(
        "{} vertices, {} cells, {} boundary facets, Euler characteristic {}",
        back.n_vertices(),
        back.n_cells(),
        back.n_boundary_facets(),
        back.euler_characteristic()
    );
    println!(
        "area {:.9}, minimum cell quality {:.4}",
        back.euclidean_volume(),
        back.min_quality()
    );
    Ok(())
}
