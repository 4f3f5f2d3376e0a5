//! Writes the road networks under `fixtures/`.
//!
//! `cargo run -p roadfusion --example gen_fixtures -- <dir>`

use std::path::PathBuf;

use roadfusion::synthetic::{grid_network, path_network, random_digraph, triangle_network};

fn main() -> roadfusion::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    path_network(8)?.save(dir.join("path_8.json"))?;
    triangle_network()?.save(dir.join("triangle.json"))?;
    for n in [60, 400, 775] {
        grid_network(n, 7)?.save(dir.join(format!("grid_{n}.json")))?;
    }
    random_digraph(40, 2, 11)?.save(dir.join("digraph_40.json"))?;
    println!("fixtures written to {}", dir.display());
    Ok(())
}
