//! Uniform hypergraphs and their random generators.
//!
//! Indexing is 0-based throughout. A fuse graph with segment size `n`, `ell`
//! edge types and edge size `k` has `ell + k - 1` segments; segment `i` holds
//! vertices `i*n .. (i+1)*n`. An edge of type `j` with offsets `o_0..o_{k-1}`
//! (each in `0..n`) is `{(j + t)*n + o_t : t in 0..k}`, one vertex from each
//! of the segments `j..j+k`.

use std::io::{BufRead, Write};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::rng;
use crate::{Error, Result};

/// Parameters of the fuse-graph distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuseParams {
    /// Edge size, at least 3.
    pub k: usize,
    /// Edges per segment per type.
    pub c: f64,
    /// Number of edge types.
    pub ell: usize,
    /// Segment size.
    pub n: u64,
    pub seed: u64,
}

impl FuseParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 3 {
            return Err(Error::InvalidParams(format!("k must be >= 3, got {}", self.k)));
        }
        if self.ell < 1 {
            return Err(Error::InvalidParams("ell must be >= 1".into()));
        }
        if self.n < 1 {
            return Err(Error::InvalidParams("n must be >= 1".into()));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidParams(format!("c must be positive, got {}", self.c)));
        }
        Ok(())
    }

    pub fn layout(&self) -> SegmentLayout {
        SegmentLayout { n: self.n, ell: self.ell, k: self.k }
    }

    pub fn num_vertices(&self) -> Result<u64> {
        self.layout().num_vertices()
    }

    /// `round(c * n * ell)`.
    pub fn num_edges(&self) -> Result<usize> {
        let m = (self.c * self.n as f64 * self.ell as f64).round();
        // Edge indices must also fit the peeler's XOR accumulator.
        if m >= usize::MAX as f64 || m >= u64::MAX as f64 {
            return Err(Error::Capacity(format!("{m} edges")));
        }
        Ok(m as usize)
    }

    /// Edges per vertex: `c * ell / (ell + k - 1)`.
    pub fn edge_density(&self) -> f64 {
        self.c * self.ell as f64 / self.layout().num_segments() as f64
    }
}

/// Segment geometry of a fuse graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentLayout {
    pub n: u64,
    pub ell: usize,
    pub k: usize,
}

impl SegmentLayout {
    pub fn num_segments(&self) -> usize {
        self.ell + self.k - 1
    }

    pub fn num_vertices(&self) -> Result<u64> {
        self.n
            .checked_mul(self.num_segments() as u64)
            .filter(|&v| v < usize::MAX as u64)
            .ok_or_else(|| {
                Error::Capacity(format!("{} segments of size {}", self.num_segments(), self.n))
            })
    }

    #[inline]
    pub fn segment_of(&self, v: u64) -> usize {
        (v / self.n) as usize
    }
}

/// A fuse edge in (type, offsets) form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FuseEdge {
    pub ty: usize,
    pub offsets: Vec<u64>,
}

impl FuseEdge {
    #[inline]
    pub fn vertex(&self, t: usize, n: u64) -> u64 {
        (self.ty + t) as u64 * n + self.offsets[t]
    }

    pub fn vertices(&self, n: u64) -> Vec<u64> {
        (0..self.offsets.len()).map(|t| self.vertex(t, n)).collect()
    }
}

/// A `k`-uniform hypergraph. Edges are stored flat, `k` vertex indices each.
/// Duplicate edges are allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    num_vertices: u64,
    k: usize,
    incidences: Vec<u64>,
    layout: Option<SegmentLayout>,
}

impl Hypergraph {
    /// Builds a hypergraph from flattened edges, checking every index.
    pub fn new(num_vertices: u64, k: usize, incidences: Vec<u64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParams("edge size must be positive".into()));
        }
        if !incidences.len().is_multiple_of(k) {
            return Err(Error::InvalidParams(format!(
                "{} incidences is not a multiple of k={k}",
                incidences.len()
            )));
        }
        if num_vertices >= usize::MAX as u64 {
            return Err(Error::Capacity(format!("{num_vertices} vertices")));
        }
        if let Some(&v) = incidences.iter().find(|&&v| v >= num_vertices) {
            return Err(Error::InvalidParams(format!(
                "vertex {v} out of range for {num_vertices} vertices"
            )));
        }
        Ok(Self { num_vertices, k, incidences, layout: None })
    }

    /// Attaches a segment layout. The caller guarantees the fuse discipline.
    pub fn with_layout(mut self, layout: SegmentLayout) -> Result<Self> {
        if layout.k != self.k || layout.num_vertices()? != self.num_vertices {
            return Err(Error::InvalidParams("layout does not match graph".into()));
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn num_vertices(&self) -> u64 {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.incidences.len() / self.k
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn layout(&self) -> Option<&SegmentLayout> {
        self.layout.as_ref()
    }

    pub fn incidences(&self) -> &[u64] {
        &self.incidences
    }

    pub fn into_incidences(self) -> Vec<u64> {
        self.incidences
    }

    #[inline]
    pub fn edge(&self, e: usize) -> &[u64] {
        &self.incidences[e * self.k..(e + 1) * self.k]
    }

    pub fn edges(&self) -> std::slice::ChunksExact<'_, u64> {
        self.incidences.chunks_exact(self.k)
    }

    /// Edges per vertex.
    pub fn density(&self) -> f64 {
        self.num_edges() as f64 / self.num_vertices as f64
    }

    /// The (type, offsets) view of edge `e`, if this is a fuse graph.
    pub fn fuse_edge(&self, e: usize) -> Option<FuseEdge> {
        let layout = self.layout?;
        let vs = self.edge(e);
        let ty = layout.segment_of(vs[0]);
        Some(FuseEdge { ty, offsets: vs.iter().map(|v| v % layout.n).collect() })
    }

    /// Number of distinct edges containing each vertex.
    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.num_vertices as usize];
        for e in self.edges() {
            for_each_distinct(e, |v| deg[v as usize] += 1);
        }
        deg
    }

    /// Writes the text dump: a `k n_vertices n_edges` header, then one edge per line.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.k, self.num_vertices, self.num_edges())?;
        let mut line = String::new();
        for e in self.edges() {
            line.clear();
            for (t, v) in e.iter().enumerate() {
                if t > 0 {
                    line.push(' ');
                }
                line.push_str(&v.to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads the text dump written by [`Hypergraph::write_dump`].
    pub fn read_dump<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty graph dump".into()))??;
        let fields = parse_u64s(&header)?;
        let [k, nv, ne] = fields[..] else {
            return Err(Error::Parse(format!("bad header {header:?}")));
        };
        let (k, ne) = (k as usize, ne as usize);
        let mut incidences = Vec::with_capacity(k.saturating_mul(ne));
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vs = parse_u64s(&line)?;
            if vs.len() != k {
                return Err(Error::Parse(format!("edge {line:?} does not have {k} vertices")));
            }
            incidences.extend(vs);
        }
        if incidences.len() != k * ne {
            return Err(Error::Parse(format!(
                "header announces {ne} edges, found {}",
                incidences.len() / k.max(1)
            )));
        }
        Hypergraph::new(nv, k, incidences)
    }
}

fn parse_u64s(line: &str) -> Result<Vec<u64>> {
    line.split_whitespace()
        .map(|s| s.parse::<u64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
        .collect()
}

/// Calls `f` once per distinct vertex of `edge`. Edges from the
/// with-replacement model may repeat a vertex; it still counts once.
#[inline]
pub(crate) fn for_each_distinct(edge: &[u64], mut f: impl FnMut(u64)) {
    for (t, &v) in edge.iter().enumerate() {
        if !edge[..t].contains(&v) {
            f(v);
        }
    }
}

/// Generates `F(n, k, c, ell)` with the default execution.
/// A zeroed incidence buffer, or `Capacity` if the allocation fails.
pub(crate) fn zeroed(len: usize) -> Result<Vec<u64>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len)
        .map_err(|_| Error::Capacity(format!("cannot allocate {len} incidences")))?;
    v.resize(len, 0);
    Ok(v)
}

pub fn generate_fuse(params: &FuseParams) -> Result<Hypergraph> {
    generate_fuse_with(params, Execution::default())
}

/// Samples edge `index` of the fuse graph with the given parameters.
pub fn sample_fuse_edge(params: &FuseParams, index: u64) -> FuseEdge {
    let mut rng = rng::stream(params.seed, index);
    let ty = rng.random_range(0..params.ell);
    let offsets = (0..params.k).map(|_| rng.random_range(0..params.n)).collect();
    FuseEdge { ty, offsets }
}

pub fn generate_fuse_with(params: &FuseParams, exec: Execution) -> Result<Hypergraph> {
    params.validate()?;
    let layout = params.layout();
    let num_vertices = layout.num_vertices()?;
    let m = params.num_edges()?;
    let k = params.k;
    let total = m
        .checked_mul(k)
        .ok_or_else(|| Error::Capacity(format!("{m} edges of size {k}")))?;

    let mut incidences = zeroed(total)?;
    exec.for_each_chunk(&mut incidences, k, |e, out| {
        let mut rng = rng::stream(params.seed, e as u64);
        let ty = rng.random_range(0..params.ell) as u64;
        for (t, slot) in out.iter_mut().enumerate() {
            *slot = (ty + t as u64) * params.n + rng.random_range(0..params.n);
        }
    });
    debug_assert!((0..m).all(|e| sample_fuse_edge(params, e as u64).vertices(params.n)
        == incidences[e * k..(e + 1) * k]));

    Ok(Hypergraph { num_vertices, k, incidences, layout: Some(layout) })
}

/// Parameters of the `k`-uniform Erdős–Rényi model with a fixed edge count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErParams {
    pub k: usize,
    pub n_vertices: u64,
    pub m_edges: usize,
    pub seed: u64,
    /// Draw the `k` vertices of an edge independently, allowing repeats.
    pub with_replacement: bool,
}

impl ErParams {
    pub fn new(k: usize, n_vertices: u64, m_edges: usize, seed: u64) -> Self {
        Self { k, n_vertices, m_edges, seed, with_replacement: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 3 {
            return Err(Error::InvalidParams(format!("k must be >= 3, got {}", self.k)));
        }
        if self.n_vertices < self.k as u64 {
            return Err(Error::InvalidParams(format!(
                "need at least k={} vertices, got {}",
                self.k, self.n_vertices
            )));
        }
        if self.n_vertices >= usize::MAX as u64 {
            return Err(Error::Capacity(format!("{} vertices", self.n_vertices)));
        }
        Ok(())
    }
}

pub fn generate_er(k: usize, n_vertices: u64, m_edges: usize, seed: u64) -> Result<Hypergraph> {
    generate_er_with(&ErParams::new(k, n_vertices, m_edges, seed), Execution::default())
}

pub fn generate_er_with(params: &ErParams, exec: Execution) -> Result<Hypergraph> {
    params.validate()?;
    let k = params.k;
    let n = params.n_vertices;
    let total = params
        .m_edges
        .checked_mul(k)
        .ok_or_else(|| Error::Capacity(format!("{} edges of size {k}", params.m_edges)))?;

    let mut incidences = zeroed(total)?;
    exec.for_each_chunk(&mut incidences, k, |e, out| {
        let mut rng = rng::stream(params.seed, e as u64);
        if params.with_replacement {
            for slot in out.iter_mut() {
                *slot = rng.random_range(0..n);
            }
        } else {
            for (slot, v) in out.iter_mut().zip(index::sample(&mut rng, n as usize, k)) {
                *slot = v as u64;
            }
        }
    });
    Ok(Hypergraph { num_vertices: n, k, incidences, layout: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fuse(k: usize, c: f64, ell: usize, n: u64, seed: u64) -> FuseParams {
        FuseParams { k, c, ell, n, seed }
    }

    #[test]
    fn small_fuse_graph_shape() {
        let p = fuse(3, 0.9, 2, 10, 1);
        let h = generate_fuse(&p).unwrap();
        assert_eq!(h.num_vertices(), 40);
        assert_eq!(h.num_edges(), 18);
        for e in 0..h.num_edges() {
            let fe = h.fuse_edge(e).unwrap();
            assert!(fe.ty < 2);
            for (t, &v) in h.edge(e).iter().enumerate() {
                assert_eq!(v / 10, (fe.ty + t) as u64);
            }
        }
    }

    #[test]
    fn single_type_fuse_graph() {
        let h = generate_fuse(&fuse(3, 1.0, 1, 5, 7)).unwrap();
        assert_eq!(h.num_vertices(), 15);
        assert_eq!(h.num_edges(), 5);
        assert!((0..5).all(|e| h.fuse_edge(e).unwrap().ty == 0));
    }

    #[test]
    fn fuse_generation_is_deterministic_and_order_free() {
        let p = fuse(4, 0.95, 30, 500, 99);
        let a = generate_fuse_with(&p, Execution::Sequential).unwrap();
        let b = generate_fuse_with(&p, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, generate_fuse(&p).unwrap());
        let e = 1234;
        assert_eq!(sample_fuse_edge(&p, e as u64).vertices(p.n), a.edge(e));
        let other = generate_fuse(&FuseParams { seed: 100, ..p }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn fuse_params_are_validated() {
        assert!(matches!(generate_fuse(&fuse(2, 0.9, 2, 10, 1)), Err(Error::InvalidParams(_))));
        assert!(matches!(generate_fuse(&fuse(3, 0.0, 2, 10, 1)), Err(Error::InvalidParams(_))));
        assert!(matches!(generate_fuse(&fuse(3, 0.9, 0, 10, 1)), Err(Error::InvalidParams(_))));
        assert!(matches!(generate_fuse(&fuse(3, 0.9, 2, 0, 1)), Err(Error::InvalidParams(_))));
        assert!(matches!(
            generate_fuse(&fuse(3, 0.9, 2, u64::MAX / 2, 1)),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(generate_fuse(&fuse(3, 1e300, 2, 10, 1)), Err(Error::Capacity(_))));
    }

    #[test]
    fn fuse_density() {
        let p = fuse(3, 0.9, 100, 10, 0);
        assert!((p.edge_density() - 0.9 * 100.0 / 102.0).abs() < 1e-15);
    }

    #[test]
    fn er_single_possible_edge() {
        for seed in 0..20 {
            let h = generate_er(3, 3, 1, seed).unwrap();
            let mut e = h.edge(0).to_vec();
            e.sort_unstable();
            assert_eq!(e, [0, 1, 2]);
        }
    }

    #[test]
    fn er_edges_have_distinct_vertices() {
        let h = generate_er(4, 100, 50, 5).unwrap();
        assert_eq!(h.num_edges(), 50);
        for e in h.edges() {
            let mut s = e.to_vec();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 4);
        }
    }

    #[test]
    fn er_with_replacement_can_repeat() {
        let p = ErParams { with_replacement: true, ..ErParams::new(3, 4, 2000, 3) };
        let h = generate_er_with(&p, Execution::default()).unwrap();
        assert!(h.edges().any(|e| e[0] == e[1] || e[1] == e[2] || e[0] == e[2]));
        // Repeated vertices count once towards the degree.
        let g = Hypergraph::new(3, 3, vec![0, 0, 1]).unwrap();
        assert_eq!(g.degrees(), [1, 1, 0]);
    }

    #[test]
    fn er_rejects_bad_params() {
        assert!(generate_er(2, 10, 1, 0).is_err());
        assert!(generate_er(3, 2, 1, 0).is_err());
        assert_eq!(
            generate_er(3, 100, 40, 8).unwrap(),
            generate_er_with(&ErParams::new(3, 100, 40, 8), Execution::Sequential).unwrap()
        );
    }

    #[test]
    fn new_rejects_out_of_range_vertices() {
        assert!(Hypergraph::new(3, 3, vec![0, 1, 3]).is_err());
        assert!(Hypergraph::new(3, 3, vec![0, 1]).is_err());
        assert!(Hypergraph::new(3, 3, vec![0, 1, 2, 2, 1, 0]).is_ok());
    }

    #[test]
    fn dump_round_trip() {
        let h = generate_er(3, 50, 20, 11).unwrap();
        let mut buf = Vec::new();
        h.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3 50 20\n"));
        assert_eq!(text.lines().count(), 21);
        let back = Hypergraph::read_dump(&buf[..]).unwrap();
        assert_eq!(back, h);

        assert!(Hypergraph::read_dump(&b"3 5 2\n0 1 2\n"[..]).is_err());
        assert!(Hypergraph::read_dump(&b"3 5 1\n0 1\n"[..]).is_err());
        assert!(Hypergraph::read_dump(&b"3 5 1\n0 1 9\n"[..]).is_err());
        assert!(Hypergraph::read_dump(&b""[..]).is_err());
    }
}
