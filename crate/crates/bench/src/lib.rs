//! Benchmark fixtures.

use amplitude_core::{build_graph_walk, AbsorbingGenerator};

/// Unit-rate walk on a `side × side` torus grid, absorbed from the first cell.
pub fn torus_walk(side: usize) -> AbsorbingGenerator {
    let n = side * side;
    let mut edges = Vec::with_capacity(4 * n);
    for r in 0..side {
        for c in 0..side {
            let x = r * side + c;
            for (dr, dc) in [(1, 0), (side - 1, 0), (0, 1), (0, side - 1)] {
                let y = ((r + dr) % side) * side + (c + dc) % side;
                if y != x && !edges.contains(&(x, y)) {
                    edges.push((x, y));
                }
            }
        }
    }
    build_graph_walk(n, &edges, &[0]).expect("torus walk is irreducible")
}
