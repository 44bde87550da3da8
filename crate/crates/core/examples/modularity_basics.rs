//! Build a graph, score partitions, and price single-node moves.

use qicd::graph::{load_edge_list, DuplicatePolicy};
use qicd::partition::{aggregate, delta_q_move, modularity, Network, Partition, Target};

fn main() -> anyhow::Result<()> {
    // two triangles joined by a light bridge
    let text = "# nodes: 6\n0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n2 3 0.25\n";
    let g = load_edge_list(text.as_bytes(), DuplicatePolicy::Reject)?;
    println!("{} nodes, {} edges, total weight {}", g.node_count(), g.edge_count(), g.total_weight());

    let natural = Partition::from_labels(&g, &[0, 0, 0, 1, 1, 1])?;
    println!("natural split   Q = {:.6}", modularity(&g, &natural)?);
    println!("one community   Q = {:.6}", modularity(&g, &Partition::whole(&g))?);
    println!("all singletons  Q = {:.6}", modularity(&g, &Partition::singletons(&g))?);

    let dq = delta_q_move(&g, &natural, 2, Target::Community(1))?;
    println!("moving node 2 across the bridge changes Q by {dq:+.6}");
    let dq = delta_q_move(&g, &natural, 2, Target::NewSingleton)?;
    println!("isolating node 2 changes Q by {dq:+.6}");

    let coarse = aggregate(&g, &natural);
    println!(
        "aggregate: {} nodes, self weights {:?}, Q of singletons {:.6}",
        coarse.graph().node_count(),
        (0..2).map(|c| coarse.self_weight(c)).collect::<Vec<_>>(),
        modularity(&coarse, &Partition::singletons(&coarse))?
    );
    Ok(())
}
