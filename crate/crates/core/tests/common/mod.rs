//! Shared oracles for the integration suites.

use sirsn_core::arrangement::ArrangementGraph;
use sirsn_core::Terminal;

/// Exhaustive minimum time over simple paths between two terminals, by
/// depth-first enumeration with admissible pruning (a partial time already
/// at or above the incumbent can never improve). Independent of the
/// production search; accumulates edge times in path order from the
/// smaller terminal id, the same association the search uses.
pub fn brute_force_min_time(graph: &ArrangementGraph, a: &Terminal, b: &Terminal) -> f64 {
    let (src, dst) = if a.vertex_id <= b.vertex_id {
        (a.vertex, b.vertex)
    } else {
        (b.vertex, a.vertex)
    };
    if src == dst {
        return 0.0;
    }
    let mut visited = vec![false; graph.vertices.len()];
    visited[src] = true;
    let mut best = f64::INFINITY;
    dfs(graph, src, dst, 0.0, &mut visited, &mut best);
    best
}

fn dfs(
    graph: &ArrangementGraph,
    v: usize,
    dst: usize,
    partial: f64,
    visited: &mut [bool],
    best: &mut f64,
) {
    // Cheapest edges first so the incumbent drops fast.
    let mut nexts: Vec<(f64, usize, usize)> = graph
        .adjacency(v)
        .iter()
        .map(|&ei| {
            let e = &graph.edges[ei];
            let w = if e.u == v { e.v } else { e.u };
            (e.time, w, ei)
        })
        .collect();
    nexts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for (time, w, _) in nexts {
        if visited[w] {
            continue;
        }
        let t = partial + time;
        if t >= *best {
            continue;
        }
        if w == dst {
            *best = t;
            continue;
        }
        visited[w] = true;
        dfs(graph, w, dst, t, visited, best);
        visited[w] = false;
    }
}
