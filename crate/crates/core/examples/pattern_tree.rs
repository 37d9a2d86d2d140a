// Builds the pattern index for a labelled path and prints its dump.

use adaptive_interference::{Graph, Observations, PatternIndex};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let graph = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)])?;
    let obs = Observations::unstratified(vec![0, 1, 0, 0, 0], vec![5.0, 8.0, 5.0, 1.0, 1.0])?;
    let index = PatternIndex::build(&graph, &obs, 2)?;

    let mut dump = Vec::new();
    index.write_dump(&mut dump, |_| true)?;
    print!("depth\tcounts\t|V|\t|V-bar|\n{}", String::from_utf8(dump)?);

    for id in index.depth_first() {
        println!("{:>6}  controls {:?}  members {:?}", index.key(id).to_string(), index.controls(id), index.members(id));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
