//! Exhaustive maximum independent set and maximum cut for small graphs.

use thiserror::Error;

use crate::graph::Multigraph;

pub const MAX_MIS_VERTICES: usize = 30;
pub const MAX_CUT_VERTICES: usize = 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{n} vertices exceeds the exhaustive limit of {limit}")]
    TooLarge { n: usize, limit: usize },
}

/// How self-loops of the input multigraph are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoopPolicy {
    /// Drop them: the simple underlying graph.
    #[default]
    Ignore,
    /// A looped vertex may not be selected (it is adjacent to itself).
    Exclude,
}

/// Simple graph on at most 30 vertices as neighbour bitmasks, plus edge
/// multiplicities for the cut objective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmallGraph {
    adj: Vec<u32>,
    /// Vertices barred from independent sets.
    excluded: u32,
    /// `(u, v, multiplicity)` with `u < v`.
    weighted_edges: Vec<(usize, usize, u32)>,
}

impl SmallGraph {
    pub fn from_multigraph(g: &Multigraph, loops: LoopPolicy) -> Result<Self, OracleError> {
        let n = g.vertex_count();
        if n > MAX_MIS_VERTICES {
            return Err(OracleError::TooLarge { n, limit: MAX_MIS_VERTICES });
        }
        let mut adj = vec![0u32; n];
        let mut excluded = 0u32;
        let mut mult = std::collections::BTreeMap::new();
        for (u, v) in g.edges() {
            if u == v {
                if loops == LoopPolicy::Exclude {
                    excluded |= 1 << u;
                }
                continue;
            }
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
            *mult.entry((u, v)).or_insert(0u32) += 1;
        }
        let weighted_edges = mult.into_iter().map(|((u, v), k)| (u, v, k)).collect();
        Ok(Self { adj, excluded, weighted_edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors_mask(&self, v: usize) -> u32 {
        self.adj[v]
    }

    pub fn is_independent(&self, set: u32) -> bool {
        set & self.excluded == 0 && (0..self.adj.len()).all(|v| set & (1 << v) == 0 || self.adj[v] & set == 0)
    }

    /// Bichromatic edges (with multiplicity) when `side` is one colour class.
    pub fn cut_value(&self, side: u32) -> u32 {
        self.weighted_edges
            .iter()
            .filter(|&&(u, v, _)| ((side >> u) ^ (side >> v)) & 1 == 1)
            .map(|&(_, _, k)| k)
            .sum()
    }
}

fn all_vertices(n: usize) -> u32 {
    if n == 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Maximum independent set size and one witness (bit `v` set for each member).
pub fn max_independent_set(g: &SmallGraph) -> Result<(usize, u32), OracleError> {
    let n = g.vertex_count();
    if n > MAX_MIS_VERTICES {
        return Err(OracleError::TooLarge { n, limit: MAX_MIS_VERTICES });
    }
    let mut best = (0usize, 0u32);
    branch(g, all_vertices(n) & !g.excluded, 0, &mut best);
    Ok(best)
}

/// Branch on the highest-degree candidate: either take it (dropping its
/// neighbours) or discard it. Vertices with at most one candidate
/// neighbour are always taken.
fn branch(g: &SmallGraph, candidates: u32, chosen: u32, best: &mut (usize, u32)) {
    let size = chosen.count_ones() as usize;
    if size + candidates.count_ones() as usize <= best.0 {
        return;
    }
    if candidates == 0 {
        *best = (size, chosen);
        return;
    }
    let mut pick = None;
    let mut max_deg = 0;
    let mut rest = candidates;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let deg = (g.adj[v] & candidates).count_ones();
        if deg <= 1 {
            branch(g, candidates & !(1 << v) & !g.adj[v], chosen | (1 << v), best);
            return;
        }
        if deg > max_deg {
            max_deg = deg;
            pick = Some(v);
        }
    }
    let v = pick.expect("non-empty candidates");
    branch(g, candidates & !(1 << v) & !g.adj[v], chosen | (1 << v), best);
    branch(g, candidates & !(1 << v), chosen, best);
}

/// Maximum cut value and one side of a witness bipartition. Vertex 0 is
/// pinned to side 0 and the other `2^(n-1)` assignments are visited in
/// Gray-code order with incremental updates.
pub fn max_cut(g: &SmallGraph) -> Result<(u32, u32), OracleError> {
    let n = g.vertex_count();
    if n > MAX_CUT_VERTICES {
        return Err(OracleError::TooLarge { n, limit: MAX_CUT_VERTICES });
    }
    if n <= 1 {
        return Ok((0, 0));
    }
    let mut nbrs: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
    for &(u, v, k) in &g.weighted_edges {
        nbrs[u].push((v, k as i64));
        nbrs[v].push((u, k as i64));
    }
    let mut side = 0u32;
    let mut value: i64 = 0;
    let mut best = (0i64, 0u32);
    for i in 1u64..(1u64 << (n - 1)) {
        // flip vertex 1 + (index of lowest set bit of i)
        let v = 1 + i.trailing_zeros() as usize;
        let on_one = (side >> v) & 1;
        let mut delta = 0;
        for &(u, k) in &nbrs[v] {
            if (side >> u) & 1 == on_one {
                delta += k;
            } else {
                delta -= k;
            }
        }
        side ^= 1 << v;
        value += delta;
        if value > best.0 {
            best = (value, side);
        }
    }
    Ok((best.0 as u32, best.1))
}

/// Plain enumeration of all subsets; the reference for the branching solver.
pub fn max_independent_set_naive(g: &SmallGraph) -> usize {
    let n = g.vertex_count();
    (0..=all_vertices(n)).filter(|&s| g.is_independent(s)).map(|s| s.count_ones() as usize).max().unwrap_or(0)
}

/// Plain enumeration of all bipartitions.
pub fn max_cut_naive(g: &SmallGraph) -> u32 {
    let n = g.vertex_count();
    (0..=all_vertices(n)).map(|s| g.cut_value(s)).max().unwrap_or(0)
}

pub fn mask_to_vec(mask: u32) -> Vec<usize> {
    (0..32).filter(|&v| mask & (1 << v) != 0).collect()
}
