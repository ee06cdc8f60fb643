//! Contraction-based independent sets on finite graphs.
//!
//! The survival graph starts as the input multigraph. Each round deletes
//! vertices of the top degree class (thinned at random) and everything
//! above it, then clears all vertices of degree at most 2: isolated
//! vertices are selected, pendant vertices are selected and their
//! neighbour deleted, and a 2-vertex `y` with neighbours `x`, `z` is
//! contracted with them into one super-vertex of degree
//! `deg(x) + deg(z) - 2`.
//!
//! A super-vertex carries two disjoint sets of original vertices: `in_set`
//! joins the output if the super-vertex is ultimately selected, `out_set`
//! if it is deleted. Contraction sets
//! `in(v) = in(x) + in(z) + out(y)` and `out(v) = out(x) + out(z) + in(y)`,
//! so every contraction grows the final set by exactly one. The sets are
//! kept as a merge tree and only expanded on commit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Multigraph;

const NONE: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IsError {
    #[error("unsupported degree {0}; expected 3 or 4")]
    UnsupportedDegree(usize),
    #[error("input graph is not {0}-regular")]
    NotRegular(usize),
    #[error("vertex {0} is not in the survival graph")]
    NotAlive(usize),
    #[error("vertex {vertex} has degree {degree}, expected 2")]
    NotDegreeTwo { vertex: usize, degree: usize },
    #[error("both edges of vertex {vertex} lead to vertex {neighbor}")]
    ParallelNeighbors { vertex: usize, neighbor: usize },
    #[error("vertex {0} carries a self-loop")]
    SelfLoop(usize),
    #[error("invalid schedule: {0}")]
    Schedule(String),
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Leaf(u32),
    Merge { outer: [u32; 2], middle: u32 },
}

/// Read-only view of a survival vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperVertex {
    pub degree: usize,
    pub half_edges: Vec<usize>,
    pub in_set: Vec<usize>,
    pub out_set: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Contraction {
    /// Survival id of the merged vertex (one of the two outer ids).
    pub merged: usize,
    /// Self-loops created by edges that ran between the two outer vertices.
    pub self_loops: usize,
}

/// Survival multigraph whose vertices are super-vertices over the original
/// vertex set. Vertex ids are the original ids; a merged vertex reuses one
/// of its outer ids.
#[derive(Debug, Clone)]
pub struct SurvivalGraph {
    partner: Vec<u32>,
    owner: Vec<u32>,
    pos: Vec<u32>,
    edges: Vec<Vec<u32>>,
    node: Vec<u32>,
    alive: Vec<bool>,
    alive_count: usize,
    nodes: Vec<Node>,
    in_count: Vec<u32>,
    out_count: Vec<u32>,
    selected: Vec<bool>,
    contractions: usize,
}

impl SurvivalGraph {
    /// Self-loops of the input are dropped: they impose nothing on an
    /// independent set of the simple underlying graph.
    pub fn from_multigraph(g: &Multigraph) -> Self {
        let n = g.vertex_count();
        let m = g.half_edge_count();
        let partner: Vec<u32> = (0..m).map(|h| g.partner(h) as u32).collect();
        let mut owner = vec![NONE; m];
        let mut pos = vec![NONE; m];
        let mut edges = vec![Vec::new(); n];
        for v in 0..n {
            for h in g.half_edges(v) {
                if g.owner(g.partner(h)) != v {
                    owner[h] = v as u32;
                    pos[h] = edges[v].len() as u32;
                    edges[v].push(h as u32);
                }
            }
        }
        Self {
            partner,
            owner,
            pos,
            edges,
            node: (0..n as u32).collect(),
            alive: vec![true; n],
            alive_count: n,
            nodes: (0..n as u32).map(Node::Leaf).collect(),
            in_count: vec![1; n],
            out_count: vec![0; n],
            selected: vec![false; n],
            contractions: 0,
        }
    }

    pub fn original_count(&self) -> usize {
        self.selected.len()
    }

    pub fn alive_count(&self) -> usize {
        self.alive_count
    }

    pub fn is_alive(&self, v: usize) -> bool {
        self.alive[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges[v].len()
    }

    pub fn contractions(&self) -> usize {
        self.contractions
    }

    /// Neighbour across each half-edge of `v`, with multiplicity.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges[v].iter().map(move |&h| self.owner[self.partner[h as usize] as usize] as usize)
    }

    pub fn alive_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.alive.len()).filter(move |&v| self.alive[v])
    }

    /// Sizes of `(in_set, out_set)` of `v`.
    pub fn set_sizes(&self, v: usize) -> (usize, usize) {
        let node = self.node[v] as usize;
        (self.in_count[node] as usize, self.out_count[node] as usize)
    }

    pub fn super_vertex(&self, v: usize) -> SuperVertex {
        let mut in_set = Vec::new();
        let mut out_set = Vec::new();
        self.expand(self.node[v], |u, sel| if sel { in_set.push(u) } else { out_set.push(u) });
        in_set.sort_unstable();
        out_set.sort_unstable();
        SuperVertex {
            degree: self.degree(v),
            half_edges: self.edges[v].iter().map(|&h| h as usize).collect(),
            in_set,
            out_set,
        }
    }

    /// Original vertices committed to the independent set so far.
    pub fn committed(&self) -> Vec<usize> {
        (0..self.selected.len()).filter(|&v| self.selected[v]).collect()
    }

    /// Walks the merge tree below `root` assuming `root` is selected,
    /// reporting each original vertex with whether it ends up selected.
    fn expand(&self, root: u32, mut visit: impl FnMut(usize, bool)) {
        let mut stack = vec![(root, true)];
        while let Some((node, sel)) = stack.pop() {
            match self.nodes[node as usize] {
                Node::Leaf(u) => visit(u as usize, sel),
                Node::Merge { outer, middle } => {
                    stack.push((outer[0], sel));
                    stack.push((outer[1], sel));
                    stack.push((middle, !sel));
                }
            }
        }
    }

    fn commit(&mut self, v: usize, select: bool) -> Vec<usize> {
        let mut chosen = Vec::new();
        let mut stack = vec![(self.node[v], select)];
        while let Some((node, sel)) = stack.pop() {
            match self.nodes[node as usize] {
                Node::Leaf(u) => {
                    if sel {
                        self.selected[u as usize] = true;
                        chosen.push(u as usize);
                    }
                }
                Node::Merge { outer, middle } => {
                    stack.push((outer[0], sel));
                    stack.push((outer[1], sel));
                    stack.push((middle, !sel));
                }
            }
        }
        self.alive[v] = false;
        self.alive_count -= 1;
        chosen
    }

    fn detach(&mut self, h: u32) {
        let o = self.owner[h as usize];
        let list = &mut self.edges[o as usize];
        let i = self.pos[h as usize] as usize;
        let last = *list.last().unwrap();
        list.swap_remove(i);
        if last != h {
            self.pos[last as usize] = i as u32;
        }
        self.owner[h as usize] = NONE;
        self.pos[h as usize] = NONE;
    }

    /// Removes `v`, commits its `out_set`, and strips the edges it had.
    /// Returns the newly committed original vertices.
    pub fn delete(&mut self, v: usize) -> Result<Vec<usize>, IsError> {
        if !self.alive[v] {
            return Err(IsError::NotAlive(v));
        }
        Ok(self.delete_into(v, &mut Vec::new()))
    }

    /// Removes `v` and pushes neighbours left with degree <= 2 onto `low`.
    fn delete_into(&mut self, v: usize, low: &mut Vec<u32>) -> Vec<usize> {
        let hs = std::mem::take(&mut self.edges[v]);
        for &h in &hs {
            self.owner[h as usize] = NONE;
            self.pos[h as usize] = NONE;
        }
        for &h in &hs {
            let p = self.partner[h as usize];
            let o = self.owner[p as usize];
            if o != NONE {
                self.detach(p);
                if self.edges[o as usize].len() <= 2 {
                    low.push(o);
                }
            }
        }
        self.commit(v, false)
    }

    /// Selects an isolated vertex, committing its `in_set`.
    fn select(&mut self, v: usize) -> Vec<usize> {
        debug_assert!(self.edges[v].is_empty());
        self.commit(v, true)
    }

    /// Contracts the 2-vertex `y` with its two distinct neighbours.
    ///
    /// Edges that ran between the two neighbours become self-loops of the
    /// merged vertex; such a vertex must not be selected later.
    pub fn contract(&mut self, y: usize) -> Result<Contraction, IsError> {
        if !self.alive[y] {
            return Err(IsError::NotAlive(y));
        }
        if self.degree(y) != 2 {
            return Err(IsError::NotDegreeTwo { vertex: y, degree: self.degree(y) });
        }
        let (h1, h2) = (self.edges[y][0], self.edges[y][1]);
        let (p1, p2) = (self.partner[h1 as usize], self.partner[h2 as usize]);
        let (x, z) = (self.owner[p1 as usize] as usize, self.owner[p2 as usize] as usize);
        if x == y || z == y {
            return Err(IsError::SelfLoop(y));
        }
        if x == z {
            return Err(IsError::ParallelNeighbors { vertex: y, neighbor: x });
        }
        self.detach(h1);
        self.detach(h2);
        self.detach(p1);
        self.detach(p2);

        let (keep, gone) = if self.edges[x].len() >= self.edges[z].len() { (x, z) } else { (z, x) };
        let moved = std::mem::take(&mut self.edges[gone]);
        let mut self_loops = 0;
        for &h in &moved {
            self.owner[h as usize] = keep as u32;
            self.pos[h as usize] = self.edges[keep].len() as u32;
            self.edges[keep].push(h);
        }
        for &h in &moved {
            if self.owner[self.partner[h as usize] as usize] as usize == keep {
                self_loops += 1;
            }
        }

        let (nx, ny, nz) = (self.node[x], self.node[y], self.node[z]);
        let merged = self.nodes.len() as u32;
        self.nodes.push(Node::Merge { outer: [nx, nz], middle: ny });
        let (ix, iy, iz) = (nx as usize, ny as usize, nz as usize);
        self.in_count.push(self.in_count[ix] + self.in_count[iz] + self.out_count[iy]);
        self.out_count.push(self.out_count[ix] + self.out_count[iz] + self.in_count[iy]);
        self.node[keep] = merged;

        for v in [y, gone] {
            self.alive[v] = false;
        }
        self.alive_count -= 2;
        self.contractions += 1;
        Ok(Contraction { merged: keep, self_loops })
    }

    /// The current survival graph with vertices renumbered `0..k` in id
    /// order, plus the id of each new vertex.
    pub fn to_multigraph(&self) -> (Multigraph, Vec<usize>) {
        let ids: Vec<usize> = self.alive_vertices().collect();
        let mut index = vec![usize::MAX; self.alive.len()];
        for (i, &v) in ids.iter().enumerate() {
            index[v] = i;
        }
        let mut edges = Vec::new();
        for &v in &ids {
            for &h in &self.edges[v] {
                let p = self.partner[h as usize];
                if h < p {
                    edges.push((index[v], index[self.owner[p as usize] as usize]));
                }
            }
        }
        (Multigraph::from_edges(ids.len(), &edges), ids)
    }

    /// Clears every vertex of degree at most 2, starting from `low`.
    fn clear_low_degree(&mut self, low: &mut Vec<u32>) {
        while let Some(v) = low.pop() {
            let v = v as usize;
            if !self.alive[v] {
                continue;
            }
            match self.degree(v) {
                0 => {
                    self.select(v);
                }
                1 => {
                    let x = self.neighbors(v).next().unwrap();
                    self.delete_into(x, low);
                    self.select(v);
                }
                2 => match self.contract(v) {
                    Ok(c) if c.self_loops > 0 => {
                        self.delete_into(c.merged, low);
                    }
                    Ok(c) => {
                        if self.degree(c.merged) <= 2 {
                            low.push(c.merged as u32);
                        }
                    }
                    Err(IsError::ParallelNeighbors { neighbor, .. }) => {
                        // in the simple graph v is a pendant of `neighbor`
                        self.delete_into(neighbor, low);
                        self.select(v);
                    }
                    Err(_) => {
                        self.delete_into(v, low);
                    }
                },
                _ => {}
            }
        }
    }
}

/// Deletion policy for [`run`].
///
/// Each round the top class is the highest degree holding at least
/// `sparse_fraction` of the survivors (at least one vertex). Vertices above
/// it are deleted outright and vertices in it with probability
/// `thin_probability`, independently. In the 4-regular variant, once no
/// class above 5 is dense, each 3-vertex is probed with probability
/// `thin_probability` instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundSchedule {
    pub thin_probability: f64,
    pub sparse_fraction: f64,
    /// Stop once at most this fraction of the original vertices survive.
    pub stop_fraction: f64,
    pub max_rounds: usize,
}

impl Default for RoundSchedule {
    fn default() -> Self {
        Self { thin_probability: 0.02, sparse_fraction: 1e-3, stop_fraction: 1e-3, max_rounds: 1_000_000 }
    }
}

impl RoundSchedule {
    pub fn validate(&self) -> Result<(), IsError> {
        if !(0.0..=1.0).contains(&self.thin_probability) || self.thin_probability == 0.0 {
            return Err(IsError::Schedule(format!("thin_probability {} not in (0, 1]", self.thin_probability)));
        }
        if !(0.0..1.0).contains(&self.sparse_fraction) {
            return Err(IsError::Schedule(format!("sparse_fraction {} not in [0, 1)", self.sparse_fraction)));
        }
        if !(self.stop_fraction > 0.0 && self.stop_fraction < 1.0) {
            return Err(IsError::Schedule(format!("stop_fraction {} not in (0, 1)", self.stop_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsRun {
    /// Sorted original vertex ids.
    pub set: Vec<usize>,
    pub rounds: usize,
    pub contractions: usize,
}

impl IsRun {
    pub fn ratio(&self, n: usize) -> f64 {
        self.set.len() as f64 / n as f64
    }
}

/// Runs the round-based algorithm on a `d`-regular graph (`d` = 3 or 4).
pub fn run(g: &Multigraph, d: usize, schedule: &RoundSchedule, seed: u64) -> Result<IsRun, IsError> {
    if d != 3 && d != 4 {
        return Err(IsError::UnsupportedDegree(d));
    }
    if g.regular_degree() != Some(d) {
        return Err(IsError::NotRegular(d));
    }
    schedule.validate()?;
    let n = g.vertex_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sg = SurvivalGraph::from_multigraph(g);
    let mut low: Vec<u32> = (0..n as u32).filter(|&v| sg.degree(v as usize) <= 2).collect();
    sg.clear_low_degree(&mut low);

    let stop = schedule.stop_fraction * n as f64;
    let mut survivors: Vec<u32> = (0..n as u32).collect();
    let mut hist: Vec<usize> = Vec::new();
    let mut marked: Vec<u32> = Vec::new();
    let mut rounds = 0;

    while rounds < schedule.max_rounds {
        survivors.retain(|&v| sg.alive[v as usize]);
        if survivors.is_empty() || survivors.len() as f64 <= stop {
            break;
        }
        rounds += 1;

        hist.clear();
        for &v in &survivors {
            let deg = sg.degree(v as usize);
            if hist.len() <= deg {
                hist.resize(deg + 1, 0);
            }
            hist[deg] += 1;
        }
        let dense = ((schedule.sparse_fraction * survivors.len() as f64).ceil() as usize).max(1);
        let top = (3..hist.len()).rev().find(|&k| hist[k] >= dense).unwrap_or(hist.len() - 1);

        marked.clear();
        if d == 4 && top <= 5 && hist.get(3).copied().unwrap_or(0) > 0 {
            // probe regime: clear the sparse high classes, then probe 3-vertices
            for &v in &survivors {
                let deg = sg.degree(v as usize);
                if deg >= 6 || (deg == 3 && rng.random_bool(schedule.thin_probability)) {
                    marked.push(v);
                }
            }
            let (high, mut probes): (Vec<u32>, Vec<u32>) =
                marked.iter().partition(|&&v| sg.degree(v as usize) >= 6);
            for v in high {
                sg.delete_into(v as usize, &mut low);
            }
            sg.clear_low_degree(&mut low);
            probes.shuffle(&mut rng);
            for v in probes {
                let v = v as usize;
                if sg.alive[v] && sg.degree(v) == 3 {
                    probe(&mut sg, v, &mut low);
                    sg.clear_low_degree(&mut low);
                }
            }
        } else {
            for &v in &survivors {
                let deg = sg.degree(v as usize);
                if deg > top || (deg == top && rng.random_bool(schedule.thin_probability)) {
                    marked.push(v);
                }
            }
            for &v in &marked {
                if sg.alive[v as usize] {
                    sg.delete_into(v as usize, &mut low);
                }
            }
            sg.clear_low_degree(&mut low);
        }
    }

    let rest: Vec<usize> = sg.alive_vertices().collect();
    for v in rest {
        sg.delete_into(v, &mut Vec::new());
    }
    Ok(IsRun { set: sg.committed(), rounds, contractions: sg.contractions })
}

/// 4-regular probe at a 3-vertex: delete it if every neighbour is a
/// 3-vertex, otherwise delete its highest-degree neighbour so that it
/// becomes a 2-vertex and is contracted next.
fn probe(sg: &mut SurvivalGraph, v: usize, low: &mut Vec<u32>) {
    let nbrs: Vec<usize> = sg.neighbors(v).collect();
    let (best, best_deg) = nbrs
        .iter()
        .map(|&u| (u, sg.degree(u)))
        .fold((usize::MAX, 0), |acc, (u, k)| if k > acc.1 { (u, k) } else { acc });
    if best_deg <= 3 {
        sg.delete_into(v, low);
    } else {
        sg.delete_into(best, low);
        // contract at v before anything else
        low.push(v as u32);
    }
}

/// True iff no edge of the simple underlying graph has both ends in `set`.
/// Self-loops are ignored.
pub fn verify_independent(g: &Multigraph, set: &[usize]) -> bool {
    let mut member = vec![false; g.vertex_count()];
    for &v in set {
        if v >= member.len() {
            return false;
        }
        member[v] = true;
    }
    g.edges().iter().all(|&(u, v)| u == v || !(member[u] && member[v]))
}
