// Distance layers, balls and treated-count signatures on small graphs.

use adaptive_interference::{signature, Graph};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Graph::lattice(3, 3, false)?;
    let layers = grid.bfs_layers(4, 2);
    println!("3x3 grid, centre layers: {layers:?}");
    assert_eq!(layers[0].len(), 4);

    let torus = Graph::lattice(5, 5, true)?;
    println!("5x5 torus: diameter {}, |ball(0, 2)| = {}", torus.diameter(), torus.ball(0, 2).len());

    let path = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)])?;
    let z = [0, 1, 0, 0, 0];
    for ego in 0..path.n() {
        println!("node {ego}: signature at depth 2 = {}", signature(&path, &z, ego, 2));
    }

    let er = Graph::erdos_renyi(30, 0.1, 7)?;
    println!("G(30, 0.1) with seed 7 has {} edges", er.edge_count());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
