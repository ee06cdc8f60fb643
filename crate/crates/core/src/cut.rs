//! Red/green/white cut process on finite cubic graphs.
//!
//! Survival vertices are typed by the labels their coloured neighbours
//! pass them: `R`, `G`, or `W` (a white neighbour whose colour will be the
//! opposite of this vertex, so the edge is good whatever happens). Edges
//! between survival vertices are either revealed (part of a survival
//! component) or still open. Queries reveal the actual partner of an open
//! half-edge.
//!
//! Colour flips on one side of a spliced white vertex are recorded as a
//! twist bit on the new edge: an edge `(x, y)` with twist `t` is good iff
//! `colour(x) ^ colour(y) ^ t`. Labels are passed through twists, so a
//! survival vertex always sees the effective colour of its neighbour.
//! Deferred colours (white vertices, spliced vertices, the collapsed
//! vertices of an `[R]-[R]-[R]` reduction) are recorded as links
//! `colour(v) = colour(base) ^ flip` and resolved newest first.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Multigraph;

/// Components larger than this are not analysed as paths.
const MAX_COMPONENT: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CutError {
    #[error("input graph is not 3-regular")]
    NotCubic,
    #[error("vertex {vertex} has degree {degree} > 3")]
    DegreeTooHigh { vertex: usize, degree: usize },
    #[error("vertex {0} is not a survival vertex")]
    NotAlive(usize),
    #[error("half-edge {0} is not open")]
    NotOpen(usize),
    #[error("pattern mismatch: {0}")]
    Pattern(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("invalid options: {0}")]
    Options(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Red,
    Green,
}

impl Color {
    pub fn flip(self) -> Self {
        match self {
            Color::Red => Color::Green,
            Color::Green => Color::Red,
        }
    }

    pub fn xor(self, t: bool) -> Self {
        if t {
            self.flip()
        } else {
            self
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Color::Red => 'R',
            Color::Green => 'G',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Colored(Color),
    White,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Half {
    Open,
    Revealed,
    Label(Label),
    Done,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    red: usize,
    green: usize,
    white: usize,
    open: usize,
    revealed: usize,
}

impl Tally {
    fn labels(&self) -> usize {
        self.red + self.green + self.white
    }
}

#[derive(Debug, Clone, Copy)]
struct PathNode {
    v: usize,
    /// Actual (not normalised) colour label, if any.
    label: Option<Color>,
    /// Twist of the edge to the next node.
    twist: bool,
}

enum Shape {
    Singleton,
    Path(Vec<PathNode>),
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutOptions {
    /// Chance that an isolated `[R]`/`[G]` vertex queries in a given round.
    pub query_probability: f64,
    /// Survivor fraction at which the endgame colours everything greedily.
    pub endgame_fraction: f64,
    pub endgame_min: usize,
    /// Swap the meaning of every colour coin (for the coupling check).
    pub invert_colors: bool,
    /// Verify the component shapes after every closure.
    pub check_invariants: bool,
}

impl Default for CutOptions {
    fn default() -> Self {
        Self {
            query_probability: 0.1,
            endgame_fraction: 1e-3,
            endgame_min: 64,
            invert_colors: false,
            check_invariants: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutResult {
    pub coloring: Vec<Color>,
    /// Exact recount from the final colouring.
    pub good: u64,
    pub bad: u64,
    /// Counters maintained by the rules as they fire.
    pub incremental_good: u64,
    pub incremental_bad: u64,
    pub rounds: usize,
    pub queries: usize,
    /// Greedy colourings forced by components that are not paths or match
    /// no rule.
    pub fallbacks: usize,
}

impl CutResult {
    pub fn good_ratio(&self) -> f64 {
        self.good as f64 / self.coloring.len() as f64
    }
}

/// Good and bad edge counts of a colouring; self-loops are bad.
pub fn count_cut(g: &Multigraph, coloring: &[Color]) -> (u64, u64) {
    let mut good = 0;
    let mut bad = 0;
    for (u, v) in g.edges() {
        if coloring[u] != coloring[v] {
            good += 1;
        } else {
            bad += 1;
        }
    }
    (good, bad)
}

/// State of the cut process. The rule methods are public so single
/// rewrites can be checked in isolation; [`run_cut`] drives the full
/// process.
#[derive(Debug, Clone)]
pub struct CutProcess {
    slots: Vec<[u32; 3]>,
    deg: Vec<u8>,
    owner: Vec<u32>,
    partner: Vec<u32>,
    twist: Vec<bool>,
    half: Vec<Half>,
    alive: Vec<bool>,
    alive_count: usize,
    color: Vec<Option<Color>>,
    links: Vec<(u32, u32, bool)>,
    stamp: Vec<u64>,
    clock: u64,
    seen: Vec<u32>,
    epoch: u32,
    queue: Vec<u32>,
    good: u64,
    bad: u64,
    queries: usize,
    fallbacks: usize,
    rng: ChaCha8Rng,
    invert: bool,
}

impl CutProcess {
    /// All vertices start as `[]`. Self-loops are credited bad at once and
    /// leave two `W` labels. Degrees up to 3 are accepted.
    pub fn new(g: &Multigraph, seed: u64, invert_colors: bool) -> Result<Self, CutError> {
        let n = g.vertex_count();
        let m = g.half_edge_count();
        let mut slots = vec![[u32::MAX; 3]; n];
        let mut deg = vec![0u8; n];
        for v in 0..n {
            let d = g.degree(v);
            if d > 3 {
                return Err(CutError::DegreeTooHigh { vertex: v, degree: d });
            }
            for (i, h) in g.half_edges(v).enumerate() {
                slots[v][i] = h as u32;
            }
            deg[v] = d as u8;
        }
        let mut p = Self {
            slots,
            deg,
            owner: (0..m).map(|h| g.owner(h) as u32).collect(),
            partner: (0..m).map(|h| g.partner(h) as u32).collect(),
            twist: vec![false; m],
            half: vec![Half::Open; m],
            alive: vec![true; n],
            alive_count: n,
            color: vec![None; n],
            links: Vec::new(),
            stamp: vec![0; n],
            clock: 0,
            seen: vec![0; n],
            epoch: 0,
            queue: Vec::new(),
            good: 0,
            bad: 0,
            queries: 0,
            fallbacks: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            invert: invert_colors,
        };
        for h in 0..m {
            let q = p.partner[h] as usize;
            if p.owner[h] == p.owner[q] && h < q {
                p.bad += 1;
                p.half[h] = Half::Label(Label::White);
                p.half[q] = Half::Label(Label::White);
                p.queue.push(p.owner[h]);
            }
        }
        Ok(p)
    }

    pub fn vertex_count(&self) -> usize {
        self.alive.len()
    }

    pub fn alive_count(&self) -> usize {
        self.alive_count
    }

    pub fn is_alive(&self, v: usize) -> bool {
        self.alive[v]
    }

    /// Incremental `(good, bad)` counters.
    pub fn counters(&self) -> (u64, u64) {
        (self.good, self.bad)
    }

    fn halves(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.slots[v][..self.deg[v] as usize].iter().map(|&h| h as usize)
    }

    fn tally(&self, v: usize) -> Tally {
        let mut t = Tally::default();
        for h in self.halves(v) {
            match self.half[h] {
                Half::Open => t.open += 1,
                Half::Revealed => t.revealed += 1,
                Half::Label(Label::Colored(Color::Red)) => t.red += 1,
                Half::Label(Label::Colored(Color::Green)) => t.green += 1,
                Half::Label(Label::White) => t.white += 1,
                Half::Done => {}
            }
        }
        t
    }

    /// Labels of `v`, in slot order.
    pub fn labels(&self, v: usize) -> Vec<Label> {
        self.halves(v)
            .filter_map(|h| match self.half[h] {
                Half::Label(l) => Some(l),
                _ => None,
            })
            .collect()
    }

    fn color_label(&self, v: usize) -> Option<Color> {
        self.halves(v).find_map(|h| match self.half[h] {
            Half::Label(Label::Colored(c)) => Some(c),
            _ => None,
        })
    }

    /// Survival neighbours across revealed edges, with the edge twist.
    fn revealed(&self, v: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.halves(v)
            .filter(move |&h| self.half[h] == Half::Revealed)
            .map(move |h| (self.owner[self.partner[h] as usize] as usize, self.twist[h]))
    }

    fn coin(&mut self) -> Color {
        let c = if self.rng.random_bool(0.5) { Color::Red } else { Color::Green };
        if self.invert {
            c.flip()
        } else {
            c
        }
    }

    fn require_alive(&self, v: usize) -> Result<(), CutError> {
        if v >= self.alive.len() || !self.alive[v] {
            return Err(CutError::NotAlive(v));
        }
        Ok(())
    }

    fn touch(&mut self, v: usize) {
        if self.stamp[v] == 0 {
            self.clock += 1;
            self.stamp[v] = self.clock;
        }
    }

    fn kill(&mut self, v: usize) {
        self.alive[v] = false;
        self.alive_count -= 1;
    }

    /// Reveals the partner of the open half-edge `h`.
    pub fn reveal(&mut self, h: usize) -> Result<usize, CutError> {
        if self.half.get(h) != Some(&Half::Open) {
            return Err(CutError::NotOpen(h));
        }
        let p = self.partner[h] as usize;
        self.half[h] = Half::Revealed;
        self.half[p] = Half::Revealed;
        let (a, b) = (self.owner[h] as usize, self.owner[p] as usize);
        self.touch(a);
        self.touch(b);
        self.queue.push(a as u32);
        self.queue.push(b as u32);
        Ok(b)
    }

    /// Colours `v`: its labels are credited and every other edge turns
    /// into a label on the far end.
    pub fn color_vertex(&mut self, v: usize, c: Color) -> Result<(), CutError> {
        self.require_alive(v)?;
        for i in 0..self.deg[v] as usize {
            let h = self.slots[v][i] as usize;
            match self.half[h] {
                Half::Label(Label::Colored(l)) => {
                    if l == c {
                        self.bad += 1;
                    } else {
                        self.good += 1;
                    }
                }
                Half::Open | Half::Revealed => {
                    let p = self.partner[h] as usize;
                    self.half[p] = Half::Label(Label::Colored(c.xor(self.twist[h])));
                    self.queue.push(self.owner[p]);
                }
                Half::Label(Label::White) | Half::Done => {}
            }
            self.half[h] = Half::Done;
        }
        self.color[v] = Some(c);
        self.kill(v);
        Ok(())
    }

    /// Colour minimising bad edges among the labels; ties by coin.
    fn greedy_color(&mut self, v: usize) -> Result<(), CutError> {
        let t = self.tally(v);
        let c = match t.red.cmp(&t.green) {
            std::cmp::Ordering::Greater => Color::Green,
            std::cmp::Ordering::Less => Color::Red,
            std::cmp::Ordering::Equal => self.coin(),
        };
        self.color_vertex(v, c)
    }

    /// Whitens a `[RG]` or `[WW]` vertex: its colour becomes the opposite
    /// of the neighbour across its last edge, which receives a `W` label.
    /// Returns that reference neighbour.
    pub fn whiten(&mut self, v: usize) -> Result<usize, CutError> {
        self.require_alive(v)?;
        let t = self.tally(v);
        let pair_ok = (t.red == 1 && t.green == 1) || t.white == 2;
        if !(pair_ok && t.labels() == 2 && t.open + t.revealed == 1) {
            return Err(CutError::Pattern(format!("vertex {v} is not [RG] or [WW] with one edge")));
        }
        let h = self
            .halves(v)
            .find(|&h| matches!(self.half[h], Half::Open | Half::Revealed))
            .expect("one edge");
        if t.red == 1 {
            self.good += 1;
            self.bad += 1;
        }
        self.good += 1;
        let p = self.partner[h] as usize;
        let r = self.owner[p] as usize;
        self.links.push((v as u32, r as u32, !self.twist[h]));
        self.half[p] = Half::Label(Label::White);
        for i in 0..self.deg[v] as usize {
            let s = self.slots[v][i] as usize;
            self.half[s] = Half::Done;
        }
        self.kill(v);
        self.queue.push(r as u32);
        Ok(r)
    }

    /// Removes a `[W]` vertex and joins its two other edges into one
    /// twisted edge; good grows by one.
    pub fn eliminate_white(&mut self, v: usize) -> Result<(), CutError> {
        self.require_alive(v)?;
        let t = self.tally(v);
        if !(t.white == 1 && t.labels() == 1 && t.open + t.revealed == 2) {
            return Err(CutError::Pattern(format!("vertex {v} is not of type [W]")));
        }
        let hs: Vec<usize> = self.halves(v).filter(|&h| matches!(self.half[h], Half::Open | Half::Revealed)).collect();
        let (h1, h2) = (hs[0], hs[1]);
        let (p1, p2) = (self.partner[h1] as usize, self.partner[h2] as usize);
        let (t1, t2) = (self.twist[h1], self.twist[h2]);
        let (a, b) = (self.owner[p1] as usize, self.owner[p2] as usize);
        let revealed = self.half[h1] == Half::Revealed && self.half[h2] == Half::Revealed;

        self.good += 1;
        self.links.push((v as u32, a as u32, !t1));
        let tw = t1 ^ t2 ^ true;
        self.partner[p1] = p2 as u32;
        self.partner[p2] = p1 as u32;
        self.twist[p1] = tw;
        self.twist[p2] = tw;
        if a == b {
            // a twisted loop is good, a plain one bad
            if tw {
                self.good += 1;
            } else {
                self.bad += 1;
            }
            self.half[p1] = Half::Label(Label::White);
            self.half[p2] = Half::Label(Label::White);
        } else {
            let s = if revealed { Half::Revealed } else { Half::Open };
            self.half[p1] = s;
            self.half[p2] = s;
        }
        for i in 0..self.deg[v] as usize {
            let s = self.slots[v][i] as usize;
            self.half[s] = Half::Done;
        }
        self.kill(v);
        self.queue.push(a as u32);
        self.queue.push(b as u32);
        Ok(())
    }

    /// Collapses a revealed path `a - m - b` whose three labels agree in
    /// the path frame into `a`: the outer vertices will share a colour and
    /// `m` take the other. Credits three good edges and one bad.
    pub fn reduce_rrr(&mut self, path: [usize; 3]) -> Result<(), CutError> {
        let [a, m, b] = path;
        for v in path {
            self.require_alive(v)?;
        }
        let mismatch = || CutError::Pattern(format!("{a}-{m}-{b} is not [R]-[R]-[R]"));
        if a == b || a == m || m == b {
            return Err(mismatch());
        }
        for v in path {
            let t = self.tally(v);
            if t.red + t.green != 1 || t.white != 0 {
                return Err(mismatch());
            }
        }
        let edge = |s: &Self, x: usize, y: usize| {
            s.halves(x)
                .find(|&h| s.half[h] == Half::Revealed && s.owner[s.partner[h] as usize] as usize == y)
        };
        let h_am = edge(self, a, m).ok_or_else(mismatch)?;
        let h_mb = edge(self, m, b).ok_or_else(mismatch)?;
        let h_bm = self.partner[h_mb] as usize;
        let (t_am, t_mb) = (self.twist[h_am], self.twist[h_mb]);
        let (la, lm, lb) = (self.color_label(a).unwrap(), self.color_label(m).unwrap(), self.color_label(b).unwrap());
        if la.xor(t_am) != lm || lm.xor(t_mb) != lb {
            return Err(mismatch());
        }

        self.good += 3;
        self.bad += 1;
        self.links.push((m as u32, a as u32, !t_am));
        self.links.push((b as u32, a as u32, t_am ^ t_mb));

        let slot_am = self.slots[a][..self.deg[a] as usize].iter().position(|&h| h as usize == h_am).unwrap();
        let rest = self
            .halves(b)
            .find(|&h| h != h_bm && matches!(self.half[h], Half::Open | Half::Revealed));
        for v in [m, b] {
            for i in 0..self.deg[v] as usize {
                let s = self.slots[v][i] as usize;
                if Some(s) != rest {
                    self.half[s] = Half::Done;
                }
            }
        }
        match rest {
            Some(hb) => {
                let shift = t_am ^ t_mb;
                let pb = self.partner[hb] as usize;
                self.slots[a][slot_am] = hb as u32;
                self.owner[hb] = a as u32;
                self.twist[hb] ^= shift;
                self.twist[pb] = self.twist[hb];
                self.half[h_am] = Half::Done;
                if self.owner[pb] as usize == a {
                    if self.twist[hb] {
                        self.good += 1;
                    } else {
                        self.bad += 1;
                    }
                    self.half[hb] = Half::Label(Label::White);
                    self.half[pb] = Half::Label(Label::White);
                } else {
                    self.queue.push(self.owner[pb]);
                }
            }
            None => {
                // b had no further edge: drop the slot from a
                self.half[h_am] = Half::Done;
            }
        }
        self.kill(m);
        self.kill(b);
        self.queue.push(a as u32);
        Ok(())
    }

    /// The survival component of `v` as a path of normalised labels, read
    /// from one end, or `None` if it is not a path. Normalised labels
    /// undo the twists accumulated from the first vertex.
    pub fn path_labels(&mut self, v: usize) -> Option<Vec<(usize, Option<Color>)>> {
        let path = match self.shape(v) {
            Shape::Singleton => vec![PathNode { v, label: self.color_label(v), twist: false }],
            Shape::Path(p) => p,
            Shape::Other => return None,
        };
        let mut pi = false;
        let mut out = Vec::with_capacity(path.len());
        for node in &path {
            out.push((node.v, node.label.map(|c| c.xor(pi))));
            pi ^= node.twist;
        }
        Some(out)
    }

    fn shape(&mut self, v: usize) -> Shape {
        self.epoch += 1;
        let epoch = self.epoch;
        self.seen[v] = epoch;
        let mut members = vec![v];
        let mut i = 0;
        let mut half_edges = 0;
        let mut end = None;
        while i < members.len() {
            let u = members[i];
            i += 1;
            let nbrs: Vec<(usize, bool)> = self.revealed(u).collect();
            half_edges += nbrs.len();
            if nbrs.len() > 2 || (nbrs.len() == 2 && nbrs[0].0 == nbrs[1].0) {
                return Shape::Other;
            }
            if nbrs.len() <= 1 {
                end.get_or_insert(u);
            }
            for (w, _) in nbrs {
                if self.seen[w] != epoch {
                    self.seen[w] = epoch;
                    members.push(w);
                    if members.len() > MAX_COMPONENT {
                        return Shape::Other;
                    }
                }
            }
        }
        if members.len() == 1 {
            return Shape::Singleton;
        }
        let Some(start) = end else { return Shape::Other };
        if half_edges != 2 * (members.len() - 1) {
            return Shape::Other;
        }
        let mut path = Vec::with_capacity(members.len());
        let mut prev = usize::MAX;
        let mut cur = start;
        loop {
            let next = self.revealed(cur).find(|&(w, _)| w != prev);
            let label = self.color_label(cur);
            match next {
                Some((w, t)) => {
                    path.push(PathNode { v: cur, label, twist: t });
                    prev = cur;
                    cur = w;
                }
                None => {
                    path.push(PathNode { v: cur, label, twist: false });
                    break;
                }
            }
        }
        Shape::Path(path)
    }

    /// Applies the rules until no survival vertex matches any of them.
    pub fn apply_table(&mut self) -> Result<(), CutError> {
        while let Some(v) = self.queue.pop() {
            self.process(v as usize)?;
        }
        Ok(())
    }

    fn process(&mut self, v: usize) -> Result<(), CutError> {
        if !self.alive[v] {
            return Ok(());
        }
        let t = self.tally(v);
        if t.labels() >= 2 {
            return self.two_labels(v, t);
        }
        if t.white == 1 {
            return if t.open + t.revealed == 2 {
                self.eliminate_white(v)
            } else {
                self.fallback(v)
            };
        }
        let path = match self.shape(v) {
            Shape::Singleton => return Ok(()),
            Shape::Other => return self.fallback(v),
            Shape::Path(p) => p,
        };
        for node in &path {
            let tu = self.tally(node.v);
            if tu.labels() >= 2 || tu.white > 0 {
                self.queue.push(v as u32);
                self.queue.push(node.v as u32);
                return Ok(());
            }
        }
        for node in &path {
            self.queue.push(node.v as u32);
        }
        self.path_rules(v, &path)
    }

    fn two_labels(&mut self, v: usize, t: Tally) -> Result<(), CutError> {
        if t.labels() == 3 || t.open + t.revealed == 0 {
            return self.greedy_color(v);
        }
        if t.white == 2 || (t.red == 1 && t.green == 1) {
            self.whiten(v)?;
            return Ok(());
        }
        // {c, c} or {c, W}
        let c = if t.red > 0 { Color::Red } else { Color::Green };
        self.color_vertex(v, c.flip())
    }

    fn path_rules(&mut self, v: usize, path: &[PathNode]) -> Result<(), CutError> {
        let k = path.len();
        let mut norm = Vec::with_capacity(k);
        let mut pi = false;
        for node in path {
            norm.push(node.label.map(|c| c.xor(pi)));
            pi ^= node.twist;
        }
        let recolor = |s: &mut Self, i: usize| s.color_vertex(path[i].v, path[i].label.unwrap().flip());

        // [G]-[R]
        for i in 0..k - 1 {
            if let (Some(x), Some(y)) = (norm[i], norm[i + 1]) {
                if x != y {
                    return recolor(self, i);
                }
            }
        }
        // []-[R]-[]
        for i in 1..k.saturating_sub(1) {
            if norm[i].is_some() && norm[i - 1].is_none() && norm[i + 1].is_none() {
                return recolor(self, i);
            }
        }
        // []-[R]-[R]-[]
        for i in 1..k.saturating_sub(2) {
            if norm[i].is_some() && norm[i] == norm[i + 1] && norm[i - 1].is_none() && norm[i + 2].is_none() {
                let j = if self.stamp[path[i].v] <= self.stamp[path[i + 1].v] { i } else { i + 1 };
                return recolor(self, j);
            }
        }
        // [R]-[R]-[R]
        for i in 0..k.saturating_sub(2) {
            if norm[i].is_some() && norm[i] == norm[i + 1] && norm[i + 1] == norm[i + 2] {
                return self.reduce_rrr([path[i].v, path[i + 1].v, path[i + 2].v]);
            }
        }
        // query from the newest labelled end
        let mut ends = [path[0].v, path[k - 1].v];
        if self.stamp[ends[0]] < self.stamp[ends[1]] {
            ends.swap(0, 1);
        }
        for e in ends {
            if self.color_label(e).is_some() {
                let open = self.halves(e).find(|&h| self.half[h] == Half::Open);
                if let Some(h) = open {
                    self.queries += 1;
                    self.reveal(h)?;
                    return Ok(());
                }
            }
        }
        self.fallback(v)
    }

    fn fallback(&mut self, v: usize) -> Result<(), CutError> {
        self.fallbacks += 1;
        self.greedy_color(v)
    }

    /// Queries one open half-edge of every marked isolated `[R]`/`[G]`
    /// vertex, closing the table after each.
    fn query_round(&mut self, survivors: &[u32], q: f64) -> Result<usize, CutError> {
        let mut marked: Vec<u32> = Vec::new();
        let mut candidates = 0;
        for &v in survivors {
            if self.is_isolated_colored(v as usize) {
                candidates += 1;
                if self.rng.random_bool(q) {
                    marked.push(v);
                }
            }
        }
        if candidates == 0 {
            return Ok(0);
        }
        if marked.is_empty() {
            let pick = self.rng.random_range(0..candidates);
            let v = survivors.iter().copied().filter(|&v| self.is_isolated_colored(v as usize)).nth(pick).unwrap();
            marked.push(v);
        }
        marked.shuffle(&mut self.rng);
        for &v in &marked {
            let v = v as usize;
            if self.is_isolated_colored(v) {
                let open = self.halves(v).find(|&h| self.half[h] == Half::Open);
                if let Some(h) = open {
                    self.queries += 1;
                    self.reveal(h)?;
                    self.apply_table()?;
                }
            }
        }
        Ok(marked.len())
    }

    fn is_isolated_colored(&self, v: usize) -> bool {
        if !self.alive[v] {
            return false;
        }
        let t = self.tally(v);
        t.red + t.green == 1 && t.white == 0 && t.revealed == 0 && t.open > 0
    }

    /// Every survival vertex is `[]`, `[R]` or `[G]` with no revealed edge.
    pub fn check_shapes(&self) -> Result<(), CutError> {
        for v in 0..self.alive.len() {
            if !self.alive[v] {
                continue;
            }
            let t = self.tally(v);
            if t.revealed != 0 || t.white != 0 || t.red + t.green > 1 {
                return Err(CutError::Invariant(format!(
                    "vertex {v} left as R{} G{} W{} with {} revealed edges",
                    t.red, t.green, t.white, t.revealed
                )));
            }
            if t.labels() + t.open != self.deg[v] as usize {
                return Err(CutError::Invariant(format!("vertex {v} lost an edge")));
            }
        }
        Ok(())
    }

    /// Colours every remaining survival vertex greedily in index order,
    /// without white, then resolves deferred colours.
    pub fn finish(mut self, g: &Multigraph, rounds: usize) -> Result<CutResult, CutError> {
        for v in 0..self.alive.len() {
            if self.alive[v] {
                self.greedy_color(v)?;
            }
        }
        for &(v, base, flip) in self.links.iter().rev() {
            let c = self.color[base as usize]
                .ok_or_else(|| CutError::Invariant(format!("vertex {v} links to uncoloured {base}")))?;
            self.color[v as usize] = Some(c.xor(flip));
        }
        let coloring: Vec<Color> = self
            .color
            .iter()
            .enumerate()
            .map(|(v, c)| c.ok_or_else(|| CutError::Invariant(format!("vertex {v} never coloured"))))
            .collect::<Result<_, _>>()?;
        let (good, bad) = count_cut(g, &coloring);
        Ok(CutResult {
            coloring,
            good,
            bad,
            incremental_good: self.good,
            incremental_bad: self.bad,
            rounds,
            queries: self.queries,
            fallbacks: self.fallbacks,
        })
    }
}

/// Runs the cut process on a 3-regular graph.
pub fn run_cut(g: &Multigraph, seed: u64, options: &CutOptions) -> Result<CutResult, CutError> {
    if g.regular_degree() != Some(3) {
        return Err(CutError::NotCubic);
    }
    if !(options.query_probability > 0.0 && options.query_probability <= 1.0) {
        return Err(CutError::Options(format!("query_probability {} not in (0, 1]", options.query_probability)));
    }
    if !(0.0..1.0).contains(&options.endgame_fraction) {
        return Err(CutError::Options(format!("endgame_fraction {} not in [0, 1)", options.endgame_fraction)));
    }
    let n = g.vertex_count();
    let mut p = CutProcess::new(g, seed, options.invert_colors)?;
    let endgame = options.endgame_min.max((options.endgame_fraction * n as f64) as usize);
    let mut rounds = 0;

    if n > endgame && n >= 2 {
        let a = p.rng.random_range(0..n);
        let mut b = p.rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let c = p.coin();
        p.color_vertex(a, c)?;
        p.color_vertex(b, c.flip())?;
    }
    p.apply_table()?;

    let mut survivors: Vec<u32> = (0..n as u32).collect();
    loop {
        survivors.retain(|&v| p.alive[v as usize]);
        if survivors.len() <= endgame {
            break;
        }
        if options.check_invariants {
            p.check_shapes()?;
        }
        rounds += 1;
        if p.query_round(&survivors, options.query_probability)? == 0 {
            let v = survivors[p.rng.random_range(0..survivors.len())] as usize;
            let c = p.coin();
            p.color_vertex(v, c)?;
            p.apply_table()?;
        }
    }
    p.finish(g, rounds)
}
