//! Orientations: injective maps from edges to one of their own vertices.
//!
//! An orientation is a left-perfect matching in the bipartite incidence graph
//! (edges on the left, vertices on the right). We compute a maximum matching
//! with Hopcroft–Karp, using an explicit stack for the augmenting DFS so large
//! graphs cannot overflow the call stack.

use std::collections::VecDeque;

use crate::hypergraph::{for_each_distinct, Hypergraph};

const FREE: usize = usize::MAX;
const INF: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// `vertex_of[e]` is the vertex edge `e` is oriented to.
    Full(Vec<u64>),
    /// No orientation exists; this many edges can be oriented at most.
    Partial { oriented: usize },
}

impl Orientation {
    pub fn is_full(&self) -> bool {
        matches!(self, Orientation::Full(_))
    }
}

/// Finds an orientation of `h`, or the size of a maximum partial one.
pub fn orient(h: &Hypergraph) -> Orientation {
    let m = h.num_edges();
    let matching = max_matching(h);
    let oriented = matching.iter().filter(|&&v| v != FREE).count();
    if oriented == m {
        Orientation::Full(matching.into_iter().map(|v| v as u64).collect())
    } else {
        Orientation::Partial { oriented }
    }
}

/// Checks that `vertex_of` is an orientation of `h`.
pub fn is_orientation(h: &Hypergraph, vertex_of: &[u64]) -> bool {
    if vertex_of.len() != h.num_edges() {
        return false;
    }
    let mut used = vec![false; h.num_vertices() as usize];
    for (e, &v) in vertex_of.iter().enumerate() {
        if !h.edge(e).contains(&v) || std::mem::replace(&mut used[v as usize], true) {
            return false;
        }
    }
    true
}

/// Maximum matching, as `match_of_edge[e]` (a vertex or `FREE`).
fn max_matching(h: &Hypergraph) -> Vec<usize> {
    let m = h.num_edges();
    let nv = h.num_vertices() as usize;
    let adj: Vec<Vec<usize>> = h
        .edges()
        .map(|vs| {
            let mut a = Vec::with_capacity(vs.len());
            for_each_distinct(vs, |v| a.push(v as usize));
            a
        })
        .collect();

    let mut match_of_edge = vec![FREE; m];
    let mut match_of_vertex = vec![FREE; nv];

    // Greedy start.
    for e in 0..m {
        if let Some(&v) = adj[e].iter().find(|&&v| match_of_vertex[v] == FREE) {
            match_of_edge[e] = v;
            match_of_vertex[v] = e;
        }
    }

    let mut dist = vec![INF; m];
    let mut cursor = vec![0usize; m];
    let mut queue = VecDeque::new();
    let mut stack: Vec<usize> = Vec::new();

    loop {
        // BFS layers from free edges over alternating paths.
        queue.clear();
        for e in 0..m {
            if match_of_edge[e] == FREE {
                dist[e] = 0;
                queue.push_back(e);
            } else {
                dist[e] = INF;
            }
        }
        let mut found = false;
        while let Some(e) = queue.pop_front() {
            for &v in &adj[e] {
                let next = match_of_vertex[v];
                if next == FREE {
                    found = true;
                } else if dist[next] == INF {
                    dist[next] = dist[e] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found {
            break;
        }

        // Layered DFS for vertex-disjoint shortest augmenting paths.
        cursor.iter_mut().for_each(|c| *c = 0);
        for root in 0..m {
            if match_of_edge[root] != FREE {
                continue;
            }
            stack.clear();
            stack.push(root);
            while let Some(&e) = stack.last() {
                if cursor[e] == adj[e].len() {
                    dist[e] = INF;
                    stack.pop();
                    continue;
                }
                let v = adj[e][cursor[e]];
                let next = match_of_vertex[v];
                if next == FREE {
                    // Augment along the stack: each edge takes the vertex its
                    // cursor points at.
                    for &f in stack.iter().rev() {
                        let w = adj[f][cursor[f]];
                        match_of_edge[f] = w;
                        match_of_vertex[w] = f;
                    }
                    for &f in &stack {
                        dist[f] = INF;
                    }
                    break;
                }
                if dist[next] != INF && dist[next] == dist[e] + 1 {
                    stack.push(next);
                } else {
                    cursor[e] += 1;
                }
            }
        }
    }
    match_of_edge
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::generate_er;
    use crate::peeler::peel_rounds;

    fn graph(nv: u64, edges: &[[u64; 3]]) -> Hypergraph {
        Hypergraph::new(nv, 3, edges.iter().flatten().copied().collect()).unwrap()
    }

    /// Exhaustive search for the largest orientable edge subset.
    fn brute_force_max(h: &Hypergraph) -> usize {
        fn go(h: &Hypergraph, e: usize, used: &mut Vec<bool>) -> usize {
            if e == h.num_edges() {
                return 0;
            }
            let mut best = go(h, e + 1, used);
            for &v in h.edge(e) {
                if !used[v as usize] {
                    used[v as usize] = true;
                    best = best.max(1 + go(h, e + 1, used));
                    used[v as usize] = false;
                }
            }
            best
        }
        go(h, 0, &mut vec![false; h.num_vertices() as usize])
    }

    #[test]
    fn doubled_edge_is_orientable_but_not_peelable() {
        let h = graph(3, &[[0, 1, 2], [0, 1, 2]]);
        let o = orient(&h);
        let Orientation::Full(map) = &o else { panic!("{o:?}") };
        assert!(is_orientation(&h, map));
        assert!(!peel_rounds(&h).is_peelable());
    }

    #[test]
    fn more_edges_than_vertices() {
        let h = graph(3, &[[0, 1, 2]; 4]);
        assert_eq!(orient(&h), Orientation::Partial { oriented: 3 });
        let h = generate_er(3, 20, 21, 1).unwrap();
        assert!(!orient(&h).is_full());
    }

    #[test]
    fn empty_graph_is_orientable() {
        let h = graph(4, &[]);
        assert_eq!(orient(&h), Orientation::Full(vec![]));
    }

    #[test]
    fn matches_brute_force_on_small_graphs() {
        for seed in 0..200 {
            let nv = 6 + seed % 5;
            let m = (seed as usize * 7) % 8 + 1;
            let h = generate_er(3, nv, m, seed).unwrap();
            let best = brute_force_max(&h);
            match orient(&h) {
                Orientation::Full(map) => {
                    assert_eq!(best, m);
                    assert!(is_orientation(&h, &map));
                }
                Orientation::Partial { oriented } => assert_eq!(oriented, best, "seed {seed}"),
            }
        }
    }

    #[test]
    fn rejects_non_orientations() {
        let h = graph(4, &[[0, 1, 2], [1, 2, 3]]);
        assert!(is_orientation(&h, &[0, 3]));
        assert!(!is_orientation(&h, &[1, 1]));
        assert!(!is_orientation(&h, &[3, 1]));
        assert!(!is_orientation(&h, &[0]));
    }
}
