//! 2-core computation by peeling.
//!
//! Both peelers track, per vertex, the number of live incident edges and the
//! XOR of their indices. When the count drops to one, the accumulator is the
//! index of the remaining edge, so no adjacency lists are built.

use std::collections::VecDeque;

use crate::hypergraph::{for_each_distinct, Hypergraph, SegmentLayout};
use crate::{Error, Result};

/// One deletion: a vertex, and the edge removed with it if it had degree 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeelRecord {
    pub vertex: u64,
    pub edge: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeelResult {
    /// Deletions in the order they were applied.
    pub peel_order: Vec<PeelRecord>,
    /// Rounds executed by [`peel_rounds`], including a final round that
    /// deleted nothing when the core is non-empty. Zero for [`peel_sequential`].
    pub rounds: usize,
    /// `survivors_by_round[r][i]`: live vertices of segment `i` after round `r`.
    /// Row 0 is the initial state. Empty unless the graph has a segment
    /// layout and was peeled in rounds.
    pub survivors_by_round: Vec<Vec<u64>>,
    /// Vertices of the 2-core, ascending.
    pub core_vertices: Vec<u64>,
    /// Edges of the 2-core, ascending.
    pub core_edges: Vec<usize>,
    /// Elementary steps performed (vertex inspections plus incidence updates).
    pub work: u64,
    layout: Option<SegmentLayout>,
}

impl PeelResult {
    pub fn is_peelable(&self) -> bool {
        self.core_vertices.is_empty()
    }

    /// Surviving fraction of each segment after round `r`.
    pub fn segment_survival(&self, r: usize) -> Result<Vec<f64>> {
        let layout = self.layout.ok_or(Error::MissingLayout)?;
        if self.survivors_by_round.is_empty() {
            return Err(Error::NoRoundTrace);
        }
        let row = self
            .survivors_by_round
            .get(r)
            .ok_or(Error::RoundOutOfRange { requested: r, rounds: self.rounds })?;
        Ok(row.iter().map(|&s| s as f64 / layout.n as f64).collect())
    }

    /// Orients each peeled edge to the vertex deleted with it. `None` unless
    /// the graph is peelable.
    pub fn orientation(&self, num_edges: usize) -> Option<Vec<u64>> {
        if !self.is_peelable() {
            return None;
        }
        let mut out = vec![u64::MAX; num_edges];
        for rec in &self.peel_order {
            if let Some(e) = rec.edge {
                out[e] = rec.vertex;
            }
        }
        out.iter().all(|&v| v != u64::MAX).then_some(out)
    }
}

/// Free function form of [`PeelResult::segment_survival`].
pub fn segment_survival(result: &PeelResult, r: usize) -> Result<Vec<f64>> {
    result.segment_survival(r)
}

struct State {
    degree: Vec<u32>,
    xor: Vec<usize>,
    deleted: Vec<bool>,
    edge_alive: Vec<bool>,
    work: u64,
}

impl State {
    fn new(h: &Hypergraph) -> Self {
        let nv = h.num_vertices() as usize;
        let mut degree = vec![0u32; nv];
        let mut xor = vec![0usize; nv];
        let mut work = 0;
        for (e, vs) in h.edges().enumerate() {
            for_each_distinct(vs, |v| {
                degree[v as usize] += 1;
                xor[v as usize] ^= e;
                work += 1;
            });
        }
        Self {
            degree,
            xor,
            deleted: vec![false; nv],
            edge_alive: vec![true; h.num_edges()],
            work,
        }
    }

    /// Deletes `v` (degree <= 1) and its edge, reporting vertices whose degree
    /// fell to 1 or below.
    fn delete(&mut self, h: &Hypergraph, v: u64, mut on_low: impl FnMut(u64)) -> PeelRecord {
        let vi = v as usize;
        debug_assert!(self.degree[vi] <= 1 && !self.deleted[vi]);
        self.deleted[vi] = true;
        self.work += 1;
        if self.degree[vi] == 0 {
            return PeelRecord { vertex: v, edge: None };
        }
        let e = self.xor[vi];
        debug_assert!(self.edge_alive[e]);
        self.edge_alive[e] = false;
        for_each_distinct(h.edge(e), |w| {
            let wi = w as usize;
            self.degree[wi] -= 1;
            self.xor[wi] ^= e;
            self.work += 1;
            if self.degree[wi] <= 1 && !self.deleted[wi] {
                on_low(w);
            }
        });
        PeelRecord { vertex: v, edge: Some(e) }
    }

    fn finish(
        self,
        peel_order: Vec<PeelRecord>,
        rounds: usize,
        survivors_by_round: Vec<Vec<u64>>,
        layout: Option<SegmentLayout>,
    ) -> PeelResult {
        let core_vertices = (0..self.deleted.len() as u64)
            .filter(|&v| !self.deleted[v as usize])
            .collect();
        let core_edges = (0..self.edge_alive.len()).filter(|&e| self.edge_alive[e]).collect();
        PeelResult {
            peel_order,
            rounds,
            survivors_by_round,
            core_vertices,
            core_edges,
            work: self.work,
            layout,
        }
    }
}

/// Round-synchronous peeling: each round deletes every vertex that has degree
/// at most 1 when the round starts. Stops when a round deletes nothing or no
/// vertex is left.
pub fn peel_rounds(h: &Hypergraph) -> PeelResult {
    let mut st = State::new(h);
    let nv = h.num_vertices();
    let layout = h.layout().copied();

    let mut alive_per_segment = layout.map(|l| vec![l.n; l.num_segments()]);
    let mut survivors_by_round: Vec<Vec<u64>> = alive_per_segment.iter().cloned().collect();

    let mut peel_order = Vec::with_capacity(nv as usize);
    // Last round in which a vertex was queued, to avoid duplicates.
    let mut queued = vec![0usize; nv as usize];
    let mut frontier: Vec<u64> = (0..nv).collect();
    let mut remaining = nv;
    let mut rounds = 0;

    while remaining > 0 {
        rounds += 1;
        let batch: Vec<u64> = frontier
            .drain(..)
            .filter(|&v| {
                st.work += 1;
                !st.deleted[v as usize] && st.degree[v as usize] <= 1
            })
            .collect();
        if batch.is_empty() {
            survivors_by_round.extend(alive_per_segment.iter().cloned());
            break;
        }
        let mut next = Vec::new();
        for &v in &batch {
            let rec = st.delete(h, v, |w| {
                if queued[w as usize] != rounds {
                    queued[w as usize] = rounds;
                    next.push(w);
                }
            });
            peel_order.push(rec);
            if let (Some(alive), Some(l)) = (alive_per_segment.as_mut(), layout.as_ref()) {
                alive[l.segment_of(v)] -= 1;
            }
        }
        remaining -= batch.len() as u64;
        if let Some(alive) = &alive_per_segment {
            survivors_by_round.push(alive.clone());
        }
        frontier = next;
    }

    st.finish(peel_order, rounds, survivors_by_round, layout)
}

/// Work-queue peeling. The queue is seeded with low-degree vertices in
/// ascending order and served FIFO, so the order is reproducible.
pub fn peel_sequential(h: &Hypergraph) -> PeelResult {
    let mut st = State::new(h);
    let nv = h.num_vertices();
    let mut queue: VecDeque<u64> = (0..nv).filter(|&v| st.degree[v as usize] <= 1).collect();
    st.work += nv;
    let mut in_queue = vec![false; nv as usize];
    for &v in &queue {
        in_queue[v as usize] = true;
    }

    let mut peel_order = Vec::with_capacity(nv as usize);
    while let Some(v) = queue.pop_front() {
        let rec = st.delete(h, v, |w| {
            if !in_queue[w as usize] {
                in_queue[w as usize] = true;
                queue.push_back(w);
            }
        });
        peel_order.push(rec);
    }

    st.finish(peel_order, 0, Vec::new(), h.layout().copied())
}

/// Why a peel order failed to replay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReplayError {
    UnknownVertex(u64),
    DeletedTwice(u64),
    DegreeTooHigh { vertex: u64, degree: u32 },
    WrongEdge { vertex: u64, claimed: Option<usize> },
    CoreMismatch,
    CoreDegreeTooLow(u64),
}

/// Replays `result.peel_order` against `h` from scratch, checking that every
/// deletion was legal and that the reported core is what remains.
pub fn validate_peel_order(h: &Hypergraph, result: &PeelResult) -> Result<(), ReplayError> {
    let nv = h.num_vertices() as usize;
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (e, vs) in h.edges().enumerate() {
        for_each_distinct(vs, |v| incident[v as usize].push(e));
    }
    let mut edge_alive = vec![true; h.num_edges()];
    let mut deleted = vec![false; nv];

    for rec in &result.peel_order {
        let v = rec.vertex as usize;
        if v >= nv {
            return Err(ReplayError::UnknownVertex(rec.vertex));
        }
        if deleted[v] {
            return Err(ReplayError::DeletedTwice(rec.vertex));
        }
        let live: Vec<usize> = incident[v].iter().copied().filter(|&e| edge_alive[e]).collect();
        match (live.as_slice(), rec.edge) {
            ([], None) => {}
            ([e], Some(claimed)) if *e == claimed => edge_alive[claimed] = false,
            ([_], _) | ([], Some(_)) => {
                return Err(ReplayError::WrongEdge { vertex: rec.vertex, claimed: rec.edge })
            }
            _ => {
                return Err(ReplayError::DegreeTooHigh {
                    vertex: rec.vertex,
                    degree: live.len() as u32,
                })
            }
        }
        deleted[v] = true;
    }

    let core_vertices: Vec<u64> = (0..nv as u64).filter(|&v| !deleted[v as usize]).collect();
    let core_edges: Vec<usize> = (0..h.num_edges()).filter(|&e| edge_alive[e]).collect();
    if core_vertices != result.core_vertices || core_edges != result.core_edges {
        return Err(ReplayError::CoreMismatch);
    }
    for &v in &core_vertices {
        if incident[v as usize].iter().filter(|&&e| edge_alive[e]).count() < 2 {
            return Err(ReplayError::CoreDegreeTooLow(v));
        }
    }
    Ok(())
}

/// Per-segment counts of vertices that survive `r` rounds of their own rooted
/// peeling process (a vertex may only go once it has degree 0), for
/// `r = 0..=max_rounds`, under the locally tree-like approximation.
///
/// Computed by non-backtracking message passing: `alive[r](w -> e)` says
/// whether `w` survives `r` rounds in the graph with `e` removed. Exact
/// whenever the `r`-neighbourhood of a vertex is a tree.
pub fn rooted_survival(h: &Hypergraph, max_rounds: usize) -> Result<Vec<Vec<u64>>> {
    let layout = *h.layout().ok_or(Error::MissingLayout)?;
    let k = h.k();
    let nv = h.num_vertices() as usize;
    let inc = h.incidences();

    // msg[e*k + t]: vertex edge(e)[t] survives, with e removed.
    let mut msg = vec![true; inc.len()];
    // Number of incident edges supporting each vertex (all other members alive).
    let mut support = vec![0u32; nv];
    let mut edge_ok = vec![false; inc.len()];
    let mut out = vec![vec![layout.n; layout.num_segments()]];

    for _ in 0..max_rounds {
        support.iter_mut().for_each(|s| *s = 0);
        for (e, vs) in inc.chunks_exact(k).enumerate() {
            let m = &msg[e * k..(e + 1) * k];
            let dead = m.iter().filter(|&&b| !b).count();
            for t in 0..k {
                // Edge e stays attached to vs[t] iff every other member survives.
                let ok = dead == 0 || (dead == 1 && !m[t]);
                edge_ok[e * k + t] = ok;
                if ok {
                    support[vs[t] as usize] += 1;
                }
            }
        }
        for (i, &v) in inc.iter().enumerate() {
            msg[i] = support[v as usize] > edge_ok[i] as u32;
        }
        let mut row = vec![0u64; layout.num_segments()];
        for (v, &s) in support.iter().enumerate() {
            if s > 0 {
                row[layout.segment_of(v as u64)] += 1;
            }
        }
        out.push(row);
    }
    Ok(out)
}
