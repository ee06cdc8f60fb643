//! Half-edge multigraphs and the configuration model.
//!
//! A [`Multigraph`] stores `sum(deg)` half-edges grouped by vertex and a
//! fixed-point-free pairing between them. Self-loops (a half-edge paired
//! with a sibling on the same vertex) and parallel edges are permitted.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("n*d = {0} is odd; no perfect matching of half-edges exists")]
    OddHalfEdges(usize),
    #[error("need n >= 2 and d >= 3, got n = {n}, d = {d}")]
    BadShape { n: usize, d: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: vertex {vertex} out of range for n = {n}")]
    VertexIndex { line: usize, vertex: usize, n: usize },
    #[error("expected {expected} edges, found {found}")]
    EdgeCount { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multigraph {
    /// Half-edges of vertex `v` are `offsets[v]..offsets[v+1]`.
    offsets: Vec<usize>,
    /// Owning vertex of each half-edge.
    owner: Vec<u32>,
    /// Involution on half-edges.
    pairing: Vec<u32>,
}

impl Multigraph {
    /// Builds a graph from an edge list; `(u, u)` is a self-loop.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut degree = vec![0usize; n];
        for &(u, v) in edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = offsets[n];
        let mut owner = vec![0u32; total];
        for v in 0..n {
            owner[offsets[v]..offsets[v + 1]].fill(v as u32);
        }
        let mut next = offsets[..n].to_vec();
        let mut pairing = vec![0u32; total];
        for &(u, v) in edges {
            let hu = next[u];
            next[u] += 1;
            let hv = next[v];
            next[v] += 1;
            pairing[hu] = hv as u32;
            pairing[hv] = hu as u32;
        }
        Self { offsets, owner, pairing }
    }

    /// Configuration-model `d`-regular multigraph: the `n*d` half-edges are
    /// shuffled and consecutive pairs matched.
    pub fn configuration(n: usize, d: usize, seed: u64) -> Result<Self, GraphError> {
        if n < 2 || d < 3 {
            return Err(GraphError::BadShape { n, d });
        }
        if (n * d) % 2 == 1 {
            return Err(GraphError::OddHalfEdges(n * d));
        }
        let total = n * d;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<u32> = (0..total as u32).collect();
        order.shuffle(&mut rng);
        let mut pairing = vec![0u32; total];
        for pair in order.chunks_exact(2) {
            pairing[pair[0] as usize] = pair[1];
            pairing[pair[1] as usize] = pair[0];
        }
        let offsets = (0..=n).map(|v| v * d).collect();
        let owner = (0..total).map(|h| (h / d) as u32).collect();
        Ok(Self { offsets, owner, pairing })
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn half_edge_count(&self) -> usize {
        self.pairing.len()
    }

    /// Edges counted with multiplicity; a self-loop counts once.
    pub fn edge_count(&self) -> usize {
        self.pairing.len() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn half_edges(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }

    pub fn owner(&self, h: usize) -> usize {
        self.owner[h] as usize
    }

    pub fn partner(&self, h: usize) -> usize {
        self.pairing[h] as usize
    }

    /// Neighbour across each half-edge of `v`, with multiplicity (a
    /// self-loop lists `v` twice).
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.half_edges(v).map(move |h| self.owner(self.partner(h)))
    }

    /// Each edge once as `(u, v)` with `u <= v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for h in 0..self.pairing.len() {
            let p = self.partner(h);
            if h < p {
                let (a, b) = (self.owner(h), self.owner(p));
                out.push((a.min(b), a.max(b)));
            }
        }
        out
    }

    /// `Some(d)` when every vertex has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        (1..self.vertex_count()).all(|v| self.degree(v) == d).then_some(d)
    }

    pub fn is_involution(&self) -> bool {
        self.pairing
            .iter()
            .enumerate()
            .all(|(h, &p)| p as usize != h && self.pairing[p as usize] as usize == h)
    }

    /// Neighbour sets of the simple underlying graph (loops and parallel
    /// edges dropped).
    pub fn simple_adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.vertex_count())
            .map(|v| {
                let mut nb: Vec<usize> = self.neighbors(v).filter(|&u| u != v).collect();
                nb.sort_unstable();
                nb.dedup();
                nb
            })
            .collect()
    }

    /// Parses `"n m"` followed by `m` lines `"u v"`.
    pub fn load_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(GraphError::Parse { line: 1, msg: "empty input".into() })?;
        let [n, m] = parse_pair(header, hline + 1)?;
        let mut edges = Vec::with_capacity(m);
        for (i, line) in lines {
            let [u, v] = parse_pair(line, i + 1)?;
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexIndex { line: i + 1, vertex: w, n });
                }
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(GraphError::EdgeCount { expected: m, found: edges.len() });
        }
        Ok(Self::from_edges(n, &edges))
    }

    pub fn save_edge_list(&self) -> String {
        let edges = self.edges();
        let mut out = format!("{} {}\n", self.vertex_count(), edges.len());
        for (u, v) in edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<[usize; 2], GraphError> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize, GraphError> {
        let tok = it.next().ok_or(GraphError::Parse { line: lineno, msg: "expected two integers".into() })?;
        tok.parse()
            .map_err(|_| GraphError::Parse { line: lineno, msg: format!("not a vertex index: {tok:?}") })
    };
    let pair = [next()?, next()?];
    if it.next().is_some() {
        return Err(GraphError::Parse { line: lineno, msg: "trailing tokens".into() });
    }
    Ok(pair)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub self_loops: usize,
    /// Sum over vertex pairs of `C(multiplicity, 2)`.
    pub parallel_pairs: usize,
    /// Cycles of length 3, 4 and 5 in the simple underlying graph.
    pub cycles_3: usize,
    pub cycles_4: usize,
    pub cycles_5: usize,
}

impl GraphStats {
    pub fn short_cycles(&self) -> usize {
        self.cycles_3 + self.cycles_4 + self.cycles_5
    }
}

/// Exact defect counts by enumeration.
pub fn stats(g: &Multigraph) -> GraphStats {
    let mut out = GraphStats::default();
    let mut mult: HashMap<(usize, usize), usize> = HashMap::new();
    for (u, v) in g.edges() {
        if u == v {
            out.self_loops += 1;
        } else {
            *mult.entry((u, v)).or_default() += 1;
        }
    }
    out.parallel_pairs = mult.values().map(|&k| k * (k - 1) / 2).sum();

    // Each simple cycle is found from its smallest vertex in both directions.
    let adj = g.simple_adjacency();
    let mut counts = [0usize; 6];
    let mut path = Vec::with_capacity(5);
    for start in 0..adj.len() {
        path.clear();
        path.push(start);
        count_cycles_from(&adj, start, &mut path, &mut counts);
    }
    out.cycles_3 = counts[3] / 2;
    out.cycles_4 = counts[4] / 2;
    out.cycles_5 = counts[5] / 2;
    out
}

fn count_cycles_from(adj: &[Vec<usize>], start: usize, path: &mut Vec<usize>, counts: &mut [usize; 6]) {
    let last = *path.last().unwrap();
    for &next in &adj[last] {
        if next == start && path.len() >= 3 {
            counts[path.len()] += 1;
        } else if next > start && path.len() < 5 && !path.contains(&next) {
            path.push(next);
            count_cycles_from(adj, start, path, counts);
            path.pop();
        }
    }
}

/// Fraction of vertices within distance `radius` of a self-loop or of an
/// endpoint of a parallel edge.
pub fn near_defect_fraction(g: &Multigraph, radius: usize) -> f64 {
    let n = g.vertex_count();
    let mut dist = vec![usize::MAX; n];
    let mut frontier = Vec::new();
    for v in 0..n {
        let mut seen = Vec::with_capacity(g.degree(v));
        let defective = g.neighbors(v).any(|u| {
            let repeat = u == v || seen.contains(&u);
            seen.push(u);
            repeat
        });
        if defective {
            dist[v] = 0;
            frontier.push(v);
        }
    }
    for step in 1..=radius {
        let mut next = Vec::new();
        for &v in &frontier {
            for u in g.neighbors(v) {
                if dist[u] == usize::MAX {
                    dist[u] = step;
                    next.push(u);
                }
            }
        }
        frontier = next;
    }
    dist.iter().filter(|&&d| d != usize::MAX).count() as f64 / n as f64
}
