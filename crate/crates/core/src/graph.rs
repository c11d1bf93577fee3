//! Graph state, subgraph patterns, and homomorphism-density computations.
//!
//! Densities here are *homomorphism* densities: every map of the pattern's
//! vertices counts, injective or not. For a star with p leaves this collapses
//! to the degree-power sum `sum_v d_v^p / n^(p+1)`, which the engines rely on.
//! All counts are carried in integer arithmetic and converted to f64 once, at
//! the final division, so incremental updates and from-scratch recomputation
//! land on bit-identical values.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A small simple graph used as a statistic pattern.
///
/// Vertices are named 1..=vertex_count, matching the text form
/// `subgraph:v;i-j,i-j,...`; edges are stored normalized (i < j, sorted).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgraphSpec {
    vertex_count: u32,
    edges: Vec<(u32, u32)>,
}

/// Shape classification used to pick fast evaluation paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatShape {
    /// Star with p leaves (p = 1 is a single edge).
    Star(u32),
    Triangle,
    General,
}

impl SubgraphSpec {
    pub fn new(vertex_count: u32, edges: &[(u32, u32)]) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidSubgraph("vertex count must be at least 1".into()));
        }
        let mut norm: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidSubgraph(format!("self-pair {a}-{b} not allowed")));
            }
            if a == 0 || b == 0 || a > vertex_count || b > vertex_count {
                return Err(Error::InvalidSubgraph(format!(
                    "edge {a}-{b} outside vertex range 1..={vertex_count}"
                )));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        if norm.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSubgraph("duplicate edge".into()));
        }
        Ok(SubgraphSpec { vertex_count, edges: norm })
    }

    /// Star with `p` leaves: p+1 vertices, center 1.
    pub fn star(p: u32) -> Self {
        assert!(p >= 1, "star needs at least one leaf");
        let edges: Vec<(u32, u32)> = (2..=p + 1).map(|leaf| (1, leaf)).collect();
        SubgraphSpec { vertex_count: p + 1, edges }
    }

    pub fn vertex_count(&self) -> u32 {
        self.vertex_count
    }

    /// Normalized 1-based edge pairs.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn classify(&self) -> StatShape {
        let v = self.vertex_count;
        let e = self.edges.len() as u32;
        if v == 3 && e == 3 {
            return StatShape::Triangle;
        }
        // Star: v = e + 1 and some vertex lies on every edge. No isolated
        // vertices are possible then, since e edges cover e distinct leaves.
        if e >= 1 && v == e + 1 {
            'center: for c in 1..=v {
                let mut leaves = 0u32;
                for &(a, b) in &self.edges {
                    if a != c && b != c {
                        continue 'center;
                    }
                    leaves += 1;
                }
                if leaves == e {
                    return StatShape::Star(e);
                }
            }
        }
        StatShape::General
    }

    /// Connectivity over all vertex_count vertices (isolated vertices make a
    /// multi-vertex pattern disconnected).
    pub fn is_connected(&self) -> bool {
        let v = self.vertex_count as usize;
        if v == 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); v];
        for &(a, b) in &self.edges {
            adj[(a - 1) as usize].push((b - 1) as usize);
            adj[(b - 1) as usize].push((a - 1) as usize);
        }
        let mut seen = vec![false; v];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == v
    }
}

impl fmt::Display for SubgraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "subgraph:{}", self.vertex_count)?;
        if !self.edges.is_empty() {
            write!(f, ";")?;
            for (k, &(a, b)) in self.edges.iter().enumerate() {
                if k > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}-{b}")?;
            }
        }
        Ok(())
    }
}

/// One model statistic. `Star(p)` doubles as the undirected p-star pattern
/// and the directed p-out-star, depending on the model flavor; general
/// patterns are undirected-only. Parsing normalizes star-shaped subgraph
/// forms to `Star`, so equality is insensitive to how a star was written.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Statistic {
    Star(u32),
    Subgraph(SubgraphSpec),
}

impl Statistic {
    pub fn shape(&self) -> StatShape {
        match self {
            Statistic::Star(p) => StatShape::Star(*p),
            Statistic::Subgraph(s) => s.classify(),
        }
    }

    /// The pattern as an explicit subgraph (stars are materialized).
    pub fn subgraph(&self) -> SubgraphSpec {
        match self {
            Statistic::Star(p) => SubgraphSpec::star(*p),
            Statistic::Subgraph(s) => s.clone(),
        }
    }

    pub fn vertex_count(&self) -> u32 {
        match self {
            Statistic::Star(p) => p + 1,
            Statistic::Subgraph(s) => s.vertex_count(),
        }
    }

    pub fn star_order(&self) -> Option<u32> {
        match self {
            Statistic::Star(p) => Some(*p),
            Statistic::Subgraph(_) => None,
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::Star(p) => write!(f, "star:{p}"),
            Statistic::Subgraph(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;

    /// Accepts `star:p` or `subgraph:v;i-j,i-j,...` (edge list optional for
    /// a single-vertex pattern). A subgraph that happens to be a star is
    /// normalized to `Star(p)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("star:") {
            let p: u32 = rest
                .parse()
                .map_err(|_| Error::InvalidSubgraph(format!("bad star order {rest:?}")))?;
            if p == 0 {
                return Err(Error::InvalidSubgraph("star order must be at least 1".into()));
            }
            return Ok(Statistic::Star(p));
        }
        if let Some(rest) = s.strip_prefix("subgraph:") {
            let (v_part, edge_part) = match rest.split_once(';') {
                Some((v, e)) => (v, Some(e)),
                None => (rest, None),
            };
            let v: u32 = v_part
                .trim()
                .parse()
                .map_err(|_| Error::InvalidSubgraph(format!("bad vertex count {v_part:?}")))?;
            let mut edges = Vec::new();
            if let Some(edge_part) = edge_part {
                for tok in edge_part.split(',') {
                    let tok = tok.trim();
                    if tok.is_empty() {
                        continue;
                    }
                    let (a, b) = tok.split_once('-').ok_or_else(|| {
                        Error::InvalidSubgraph(format!("bad edge token {tok:?}"))
                    })?;
                    let a: u32 = a.trim().parse().map_err(|_| {
                        Error::InvalidSubgraph(format!("bad edge endpoint {a:?}"))
                    })?;
                    let b: u32 = b.trim().parse().map_err(|_| {
                        Error::InvalidSubgraph(format!("bad edge endpoint {b:?}"))
                    })?;
                    edges.push((a, b));
                }
            }
            let spec = SubgraphSpec::new(v, &edges)?;
            return Ok(match spec.classify() {
                StatShape::Star(p) => Statistic::Star(p),
                _ => Statistic::Subgraph(spec),
            });
        }
        Err(Error::InvalidSubgraph(format!(
            "{s:?} is neither star:p nor subgraph:v;i-j,..."
        )))
    }
}

impl Serialize for Statistic {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Statistic {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(|e: Error| D::Error::custom(e.to_string()))
    }
}

/// Simple undirected graph on vertices 0..n, adjacency kept as an
/// upper-triangular bit array in lexicographic pair order:
/// (0,1), (0,2), ..., (0,n-1), (1,2), ...
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: u32,
    bits: Vec<u64>,
}

impl UndirectedGraph {
    pub fn empty(n: u32) -> Self {
        assert!(n >= 1, "graph needs at least one vertex");
        let words = (Self::pair_count_of(n) as usize + 63) / 64;
        UndirectedGraph { n, bits: vec![0; words.max(1)] }
    }

    pub fn complete(n: u32) -> Self {
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                g.set_edge(i, j, true);
            }
        }
        g
    }

    pub fn from_edges(n: u32, edges: &[(u32, u32)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({i},{j}) invalid for n = {n}"
                )));
            }
            g.set_edge(i.min(j), i.max(j), true);
        }
        Ok(g)
    }

    /// Builds the graph whose bit array equals `code` (low bit = pair (0,1)).
    /// Only supported while all pairs fit one code word.
    pub fn from_code(n: u32, code: u128) -> Self {
        let pairs = Self::pair_count_of(n);
        assert!(pairs <= 128, "code form only supported for C(n,2) <= 128");
        assert!(pairs == 128 || code < (1u128 << pairs), "code out of range");
        let mut g = Self::empty(n);
        g.bits[0] = (code & u64::MAX as u128) as u64;
        if g.bits.len() > 1 {
            g.bits[1] = (code >> 64) as u64;
        }
        g
    }

    /// The bit array as an integer, when it fits.
    pub fn code(&self) -> Option<u128> {
        if Self::pair_count_of(self.n) > 128 {
            return None;
        }
        let lo = self.bits[0] as u128;
        let hi = if self.bits.len() > 1 { (self.bits[1] as u128) << 64 } else { 0 };
        Some(lo | hi)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    fn pair_count_of(n: u32) -> u64 {
        (n as u64) * (n as u64 - 1) / 2
    }

    pub fn pair_count(&self) -> u64 {
        Self::pair_count_of(self.n)
    }

    /// Lexicographic index of pair (i, j), i < j.
    pub fn pair_index(&self, i: u32, j: u32) -> u64 {
        debug_assert!(i < j && j < self.n);
        let n = self.n as u64;
        let i = i as u64;
        let j = j as u64;
        i * n - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Inverse of `pair_index`.
    pub fn pair_of_index(n: u32, idx: u64) -> (u32, u32) {
        debug_assert!(idx < Self::pair_count_of(n));
        let mut i = 0u64;
        let mut idx = idx;
        let mut row = n as u64 - 1;
        while idx >= row {
            idx -= row;
            row -= 1;
            i += 1;
        }
        (i as u32, (i + 1 + idx) as u32)
    }

    pub fn has_edge(&self, i: u32, j: u32) -> bool {
        if i == j {
            return false;
        }
        let idx = self.pair_index(i.min(j), i.max(j));
        self.bits[(idx / 64) as usize] >> (idx % 64) & 1 == 1
    }

    pub fn set_edge(&mut self, i: u32, j: u32, on: bool) {
        assert!(i != j && i < self.n && j < self.n);
        let idx = self.pair_index(i.min(j), i.max(j));
        let (w, b) = ((idx / 64) as usize, idx % 64);
        if on {
            self.bits[w] |= 1 << b;
        } else {
            self.bits[w] &= !(1 << b);
        }
    }

    pub fn edge_count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n as usize];
        for idx in 0..self.pair_count() {
            if self.bits[(idx / 64) as usize] >> (idx % 64) & 1 == 1 {
                let (i, j) = Self::pair_of_index(self.n, idx);
                deg[i as usize] += 1;
                deg[j as usize] += 1;
            }
        }
        deg
    }

    /// Number of common neighbors of i and j (the edge i-j itself is
    /// irrelevant to this count).
    pub fn common_neighbors(&self, i: u32, j: u32) -> u32 {
        let mut c = 0;
        for k in 0..self.n {
            if k != i && k != j && self.has_edge(i, k) && self.has_edge(j, k) {
                c += 1;
            }
        }
        c
    }
}

/// Directed graph on vertices 0..n with per-row out-edge bit vectors.
/// When `allow_diagonal` is false the (i, i) bit is rejected at `set`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    n: u32,
    allow_diagonal: bool,
    blocks_per_row: usize,
    rows: Vec<u64>,
}

impl DirectedGraph {
    pub fn empty(n: u32, allow_diagonal: bool) -> Self {
        assert!(n >= 1);
        let blocks_per_row = (n as usize + 63) / 64;
        DirectedGraph {
            n,
            allow_diagonal,
            blocks_per_row,
            rows: vec![0; blocks_per_row * n as usize],
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn allow_diagonal(&self) -> bool {
        self.allow_diagonal
    }

    pub fn has(&self, i: u32, j: u32) -> bool {
        debug_assert!(i < self.n && j < self.n);
        let w = i as usize * self.blocks_per_row + (j / 64) as usize;
        self.rows[w] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, i: u32, j: u32, on: bool) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::InvalidInput(format!(
                "position ({i},{j}) invalid for n = {}",
                self.n
            )));
        }
        if i == j && !self.allow_diagonal {
            return Err(Error::InvalidInput(
                "diagonal positions are disabled for this graph".into(),
            ));
        }
        let w = i as usize * self.blocks_per_row + (j / 64) as usize;
        if on {
            self.rows[w] |= 1 << (j % 64);
        } else {
            self.rows[w] &= !(1 << (j % 64));
        }
        Ok(())
    }

    /// Out-degree of row i.
    pub fn row_degree(&self, i: u32) -> u32 {
        let start = i as usize * self.blocks_per_row;
        self.rows[start..start + self.blocks_per_row]
            .iter()
            .map(|w| w.count_ones())
            .sum()
    }

    pub fn degrees(&self) -> Vec<u32> {
        (0..self.n).map(|i| self.row_degree(i)).collect()
    }
}

/// Adjacency state of either flavor, for flavor-generic entry points.
#[derive(Clone, Debug)]
pub enum GraphState {
    Undirected(UndirectedGraph),
    Directed(DirectedGraph),
}

// ---------------------------------------------------------------------------
// Homomorphism counting and densities
// ---------------------------------------------------------------------------

/// Number of homomorphisms (all maps, not only injective ones) from `h`
/// into `g`. Counted by depth-first assignment with early pruning.
pub fn hom_count(h: &SubgraphSpec, g: &UndirectedGraph) -> u128 {
    let v = h.vertex_count() as usize;
    // Neighbors of vertex k among vertices already assigned (indices < k).
    let mut prior: Vec<Vec<usize>> = vec![Vec::new(); v];
    for &(a, b) in h.edges() {
        let (lo, hi) = ((a - 1) as usize, (b - 1) as usize);
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        prior[hi].push(lo);
    }
    let mut assign = vec![0u32; v];
    assign_rec(g, &prior, &mut assign, 0)
}

fn assign_rec(g: &UndirectedGraph, prior: &[Vec<usize>], assign: &mut [u32], k: usize) -> u128 {
    if k == prior.len() {
        return 1;
    }
    let mut total = 0u128;
    'cand: for cand in 0..g.n() {
        for &earlier in &prior[k] {
            if !g.has_edge(cand, assign[earlier]) {
                continue 'cand;
            }
        }
        assign[k] = cand;
        total += assign_rec(g, prior, assign, k + 1);
    }
    total
}

/// `hom_count(h, g) / n^v(h)`.
pub fn hom_density(h: &SubgraphSpec, g: &UndirectedGraph) -> f64 {
    let count = hom_count(h, g);
    count as f64 / (g.n() as f64).powi(h.vertex_count() as i32)
}

/// Homomorphism density of `h` into a symmetric edge-weight matrix `x`
/// (row-major n*n, entries in [0,1], zero diagonal).
pub fn weighted_hom_density(h: &SubgraphSpec, x: &[f64], n: u32) -> Result<f64> {
    let nn = n as usize;
    if x.len() != nn * nn {
        return Err(Error::InvalidInput(format!(
            "weight matrix has {} entries, expected {}",
            x.len(),
            nn * nn
        )));
    }
    for i in 0..nn {
        if x[i * nn + i] != 0.0 {
            return Err(Error::InvalidInput("weight matrix must have zero diagonal".into()));
        }
        for j in 0..nn {
            let v = x[i * nn + j];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput("weight entries must lie in [0,1]".into()));
            }
            if v != x[j * nn + i] {
                return Err(Error::InvalidInput("weight matrix must be symmetric".into()));
            }
        }
    }
    let v = h.vertex_count() as usize;
    let mut prior: Vec<Vec<usize>> = vec![Vec::new(); v];
    for &(a, b) in h.edges() {
        let (lo, hi) = ((a - 1) as usize, (b - 1) as usize);
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        prior[hi].push(lo);
    }
    let mut assign = vec![0usize; v];
    let total = weighted_rec(x, nn, &prior, &mut assign, 0, 1.0);
    Ok(total / (n as f64).powi(v as i32))
}

fn weighted_rec(
    x: &[f64],
    n: usize,
    prior: &[Vec<usize>],
    assign: &mut [usize],
    k: usize,
    partial: f64,
) -> f64 {
    if k == prior.len() {
        return partial;
    }
    let mut total = 0.0;
    for cand in 0..n {
        let mut product = partial;
        for &earlier in &prior[k] {
            product *= x[cand * n + assign[earlier]];
            if product == 0.0 {
                break;
            }
        }
        if product == 0.0 {
            continue;
        }
        assign[k] = cand;
        total += weighted_rec(x, n, prior, assign, k + 1, product);
    }
    total
}

/// Star density via the degree-power identity: `sum_v d_v^p / n^(p+1)`.
/// Equals `hom_density(star(p), g)` exactly (same integer count, same
/// final division).
pub fn star_density_undirected(p: u32, g: &UndirectedGraph) -> f64 {
    let sum: u128 = g.degrees().iter().map(|&d| (d as u128).pow(p)).sum();
    sum as f64 / (g.n() as f64).powi(p as i32 + 1)
}

/// Triangle homomorphism count: ordered closed triples, i.e. 6 per
/// unordered triangle.
pub fn triangle_hom_count(g: &UndirectedGraph) -> u128 {
    let mut total = 0u128;
    for i in 0..g.n() {
        for j in i + 1..g.n() {
            if g.has_edge(i, j) {
                total += 2 * g.common_neighbors(i, j) as u128;
            }
        }
    }
    total
}

/// Density of one undirected statistic, routed through the fast path its
/// shape admits.
pub fn statistic_density(stat: &Statistic, g: &UndirectedGraph) -> f64 {
    match stat.shape() {
        StatShape::Star(p) => star_density_undirected(p, g),
        StatShape::Triangle => triangle_hom_count(g) as f64 / (g.n() as f64).powi(3),
        StatShape::General => hom_density(&stat.subgraph(), g),
    }
}

/// Directed out-star density: `sum_i d_i^p / n^(p+1)` with d_i the row
/// out-degrees. Identical to the direct (p+1)-fold summation.
pub fn directed_star_density(p: u32, x: &DirectedGraph) -> f64 {
    let sum: u128 = (0..x.n()).map(|i| (x.row_degree(i) as u128).pow(p)).sum();
    sum as f64 / (x.n() as f64).powi(p as i32 + 1)
}

// ---------------------------------------------------------------------------
// Flip deltas
// ---------------------------------------------------------------------------

/// Density changes from flipping the pair with lexicographic index
/// `pair_idx`, one entry per statistic. Each delta equals
/// `density(flipped) - density(current)` bit-for-bit: both densities are
/// formed from integer counts and divided by the same power of n, so the
/// subtraction reproduces a from-scratch recomputation exactly.
pub fn undirected_flip_deltas(
    g: &UndirectedGraph,
    stats: &[Statistic],
    pair_idx: u64,
) -> Result<Vec<f64>> {
    if pair_idx >= g.pair_count() {
        return Err(Error::InvalidInput(format!(
            "pair index {pair_idx} out of range for n = {}",
            g.n()
        )));
    }
    let (i, j) = UndirectedGraph::pair_of_index(g.n(), pair_idx);
    let present = g.has_edge(i, j);
    let n = g.n() as f64;
    let deg = g.degrees();
    let (di, dj) = (deg[i as usize] as i128, deg[j as usize] as i128);
    let step: i128 = if present { -1 } else { 1 };

    let mut deltas = Vec::with_capacity(stats.len());
    for stat in stats {
        let delta = match stat.shape() {
            StatShape::Star(p) => {
                let s_old: i128 = deg.iter().map(|&d| (d as i128).pow(p)).sum();
                let s_new = s_old - di.pow(p) - dj.pow(p)
                    + (di + step).pow(p)
                    + (dj + step).pow(p);
                let npow = n.powi(p as i32 + 1);
                s_new as f64 / npow - s_old as f64 / npow
            }
            StatShape::Triangle => {
                let hom_old = triangle_hom_count(g) as i128;
                let hom_new = hom_old + step * 6 * g.common_neighbors(i, j) as i128;
                let npow = n.powi(3);
                hom_new as f64 / npow - hom_old as f64 / npow
            }
            StatShape::General => {
                let spec = stat.subgraph();
                let mut flipped = g.clone();
                flipped.set_edge(i, j, !present);
                hom_density(&spec, &flipped) - hom_density(&spec, g)
            }
        };
        deltas.push(delta);
    }
    Ok(deltas)
}

/// Directed analogue: flipping bit (i, j) changes only row i's out-degree.
pub fn directed_flip_deltas(
    x: &DirectedGraph,
    stats: &[Statistic],
    i: u32,
    j: u32,
) -> Result<Vec<f64>> {
    if i >= x.n() || j >= x.n() || (i == j && !x.allow_diagonal()) {
        return Err(Error::InvalidInput(format!(
            "position ({i},{j}) invalid for this graph"
        )));
    }
    let n = x.n() as f64;
    let deg = x.degrees();
    let di = deg[i as usize] as i128;
    let step: i128 = if x.has(i, j) { -1 } else { 1 };

    let mut deltas = Vec::with_capacity(stats.len());
    for stat in stats {
        let p = stat.star_order().ok_or_else(|| {
            Error::InvalidInput("directed statistics must be stars".into())
        })?;
        let s_old: i128 = deg.iter().map(|&d| (d as i128).pow(p)).sum();
        let s_new = s_old - di.pow(p) + (di + step).pow(p);
        let npow = n.powi(p as i32 + 1);
        deltas.push(s_new as f64 / npow - s_old as f64 / npow);
    }
    Ok(deltas)
}

/// Flavor-generic wrapper. For undirected state `pos` is the pair index;
/// for directed state it is the flattened position `i * n + j`.
pub fn edge_flip_delta(g: &GraphState, stats: &[Statistic], pos: u64) -> Result<Vec<f64>> {
    match g {
        GraphState::Undirected(g) => undirected_flip_deltas(g, stats, pos),
        GraphState::Directed(x) => {
            let n = x.n() as u64;
            if pos >= n * n {
                return Err(Error::InvalidInput(format!("position {pos} out of range")));
            }
            directed_flip_deltas(x, stats, (pos / n) as u32, (pos % n) as u32)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand_chacha::ChaCha12Rng;
    use rand::{Rng, SeedableRng};

    fn single_edge(n: u32) -> UndirectedGraph {
        UndirectedGraph::from_edges(n, &[(0, 1)]).unwrap()
    }

    /// Independent oracle: count maps by explicit nested iteration over all
    /// n^v assignments, no pruning, no shared code with hom_count.
    fn hom_count_oracle(h: &SubgraphSpec, g: &UndirectedGraph) -> u128 {
        let v = h.vertex_count() as usize;
        let n = g.n() as usize;
        let mut total = 0u128;
        let mut assign = vec![0usize; v];
        loop {
            let ok = h.edges().iter().all(|&(a, b)| {
                let (x, y) = (assign[(a - 1) as usize] as u32, assign[(b - 1) as usize] as u32);
                x != y && g.has_edge(x, y)
            });
            if ok {
                total += 1;
            }
            // odometer increment
            let mut k = 0;
            loop {
                if k == v {
                    return total;
                }
                assign[k] += 1;
                if assign[k] < n {
                    break;
                }
                assign[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn pair_index_roundtrip() {
        for n in 2..=9u32 {
            let g = UndirectedGraph::empty(n);
            let mut idx = 0u64;
            for i in 0..n {
                for j in i + 1..n {
                    assert_eq!(g.pair_index(i, j), idx);
                    assert_eq!(UndirectedGraph::pair_of_index(n, idx), (i, j));
                    idx += 1;
                }
            }
            assert_eq!(idx, g.pair_count());
        }
    }

    #[test]
    fn subgraph_spec_rejects_bad_input() {
        assert!(SubgraphSpec::new(3, &[(1, 1)]).is_err());
        assert!(SubgraphSpec::new(3, &[(1, 4)]).is_err());
        assert!(SubgraphSpec::new(3, &[(1, 2), (2, 1)]).is_err());
        assert!(SubgraphSpec::new(0, &[]).is_err());
    }

    #[test]
    fn statistic_text_form_roundtrip() {
        for text in ["star:1", "star:2", "star:5", "subgraph:3;1-2,1-3,2-3", "subgraph:4;1-2,3-4"] {
            let stat: Statistic = text.parse().unwrap();
            let again: Statistic = stat.to_string().parse().unwrap();
            assert_eq!(stat, again);
        }
        // A star written in subgraph form normalizes to the star form.
        let s: Statistic = "subgraph:3;1-2,1-3".parse().unwrap();
        assert_eq!(s, Statistic::Star(2));
        assert!("star:0".parse::<Statistic>().is_err());
        assert!("path:3".parse::<Statistic>().is_err());
        assert!("subgraph:3;1-2,2-5".parse::<Statistic>().is_err());
    }

    #[test]
    fn classify_recognizes_shapes() {
        assert_eq!(SubgraphSpec::star(1).classify(), StatShape::Star(1));
        assert_eq!(SubgraphSpec::star(4).classify(), StatShape::Star(4));
        let tri = SubgraphSpec::new(3, &[(1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(tri.classify(), StatShape::Triangle);
        let path4 = SubgraphSpec::new(4, &[(1, 2), (2, 3), (3, 4)]).unwrap();
        assert_eq!(path4.classify(), StatShape::General);
        // Isolated vertex disqualifies the star shape.
        let padded = SubgraphSpec::new(3, &[(1, 2)]).unwrap();
        assert_eq!(padded.classify(), StatShape::General);
        assert!(!padded.is_connected());
        assert!(tri.is_connected());
    }

    #[test]
    fn hom_count_edge_into_triangle_is_six() {
        let edge = SubgraphSpec::star(1);
        let k3 = UndirectedGraph::complete(3);
        assert_eq!(hom_count(&edge, &k3), 6);
        assert_eq!(hom_count_oracle(&edge, &k3), 6);
    }

    #[test]
    fn hom_count_into_empty_graph_is_zero() {
        let edge = SubgraphSpec::star(1);
        let empty = UndirectedGraph::empty(5);
        assert_eq!(hom_count(&edge, &empty), 0);
    }

    #[test]
    fn hom_count_two_star_into_single_edge() {
        // All 27 maps checked by the oracle; exactly two survive
        // (center on either endpoint, both leaves on the other).
        let two_star = SubgraphSpec::star(2);
        let g = single_edge(3);
        assert_eq!(hom_count_oracle(&two_star, &g), 2);
        assert_eq!(hom_count(&two_star, &g), 2);
    }

    #[test]
    fn hom_count_matches_oracle_on_random_graphs() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let patterns = [
            SubgraphSpec::star(1),
            SubgraphSpec::star(2),
            SubgraphSpec::star(3),
            SubgraphSpec::new(3, &[(1, 2), (1, 3), (2, 3)]).unwrap(),
            SubgraphSpec::new(4, &[(1, 2), (2, 3), (3, 4)]).unwrap(),
            SubgraphSpec::new(4, &[(1, 2), (2, 3), (3, 4), (1, 4)]).unwrap(),
        ];
        for _ in 0..20 {
            let n = rng.gen_range(2..=5);
            let code: u128 = rng.gen_range(0..(1u128 << (n * (n - 1) / 2)));
            let g = UndirectedGraph::from_code(n, code);
            for h in &patterns {
                assert_eq!(hom_count(h, &g), hom_count_oracle(h, &g), "h={h} code={code}");
            }
        }
    }

    #[test]
    fn hom_density_edge_cases() {
        for n in 2..=6u32 {
            let kn = UndirectedGraph::complete(n);
            let d = hom_density(&SubgraphSpec::star(1), &kn);
            assert_abs_diff_eq!(d, 1.0 - 1.0 / n as f64, epsilon = 1e-15);
        }
        let g = single_edge(3);
        assert_abs_diff_eq!(hom_density(&SubgraphSpec::star(1), &g), 2.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hom_density(&SubgraphSpec::star(2), &g), 2.0 / 27.0, epsilon = 1e-15);
    }

    #[test]
    fn star_density_identity_and_examples() {
        // Oracle: explicit degree powers.
        let g = single_edge(3);
        assert_abs_diff_eq!(star_density_undirected(2, &g), 2.0 / 27.0, epsilon = 1e-15);
        let k4 = UndirectedGraph::complete(4);
        assert_abs_diff_eq!(star_density_undirected(3, &k4), 27.0 / 64.0, epsilon = 1e-15);
        // The degree-power fast path and the generic hom path agree exactly.
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..30 {
            let n = rng.gen_range(2..=6);
            let code: u128 = rng.gen_range(0..(1u128 << (n * (n - 1) / 2)));
            let g = UndirectedGraph::from_code(n, code);
            for p in 1..=4 {
                let fast = star_density_undirected(p, &g);
                let slow = hom_density(&SubgraphSpec::star(p), &g);
                assert_eq!(fast.to_bits(), slow.to_bits());
            }
        }
    }

    #[test]
    fn edge_density_is_two_e_over_n_squared() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.gen_range(2..=7);
            let code: u128 = rng.gen_range(0..(1u128 << (n * (n - 1) / 2)));
            let g = UndirectedGraph::from_code(n, code);
            let expect = 2.0 * g.edge_count() as f64 / (n as f64 * n as f64);
            assert_abs_diff_eq!(star_density_undirected(1, &g), expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn weighted_density_constant_matrix() {
        // x = q off the diagonal: edge density q * (1 - 1/n).
        for n in [2u32, 3, 5] {
            let q = 0.37;
            let nn = n as usize;
            let mut x = vec![q; nn * nn];
            for i in 0..nn {
                x[i * nn + i] = 0.0;
            }
            let d = weighted_hom_density(&SubgraphSpec::star(1), &x, n).unwrap();
            assert_abs_diff_eq!(d, q * (1.0 - 1.0 / n as f64), epsilon = 1e-14);
        }
    }

    #[test]
    fn weighted_density_two_star_half_matrix() {
        // Direct 27-term oracle: only maps with distinct pair endpoints
        // contribute; 12 maps survive, each worth 1/4, over n^3 = 27.
        let n = 3usize;
        let mut x = vec![0.5; 9];
        for i in 0..n {
            x[i * n + i] = 0.0;
        }
        let mut oracle = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    oracle += x[a * n + b] * x[b * n + c];
                }
            }
        }
        oracle /= 27.0;
        let d = weighted_hom_density(&SubgraphSpec::star(2), &x, 3).unwrap();
        assert_abs_diff_eq!(d, oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(d, 1.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn weighted_density_matches_hom_density_on_adjacency() {
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let patterns = [
            SubgraphSpec::star(1),
            SubgraphSpec::star(2),
            SubgraphSpec::new(3, &[(1, 2), (1, 3), (2, 3)]).unwrap(),
            SubgraphSpec::new(4, &[(1, 2), (2, 3), (3, 4)]).unwrap(),
        ];
        for _ in 0..10 {
            let n = rng.gen_range(2..=5u32);
            let code: u128 = rng.gen_range(0..(1u128 << (n * (n - 1) / 2)));
            let g = UndirectedGraph::from_code(n, code);
            let nn = n as usize;
            let mut x = vec![0.0; nn * nn];
            for i in 0..n {
                for j in 0..n {
                    if i != j && g.has_edge(i, j) {
                        x[i as usize * nn + j as usize] = 1.0;
                    }
                }
            }
            for h in &patterns {
                let w = weighted_hom_density(h, &x, n).unwrap();
                let d = hom_density(h, &g);
                assert_abs_diff_eq!(w, d, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn weighted_density_rejects_bad_matrices() {
        let h = SubgraphSpec::star(1);
        // non-symmetric
        let x = vec![0.0, 0.2, 0.3, 0.0];
        assert!(weighted_hom_density(&h, &x, 2).is_err());
        // nonzero diagonal
        let x = vec![0.1, 0.2, 0.2, 0.0];
        assert!(weighted_hom_density(&h, &x, 2).is_err());
        // out of range
        let x = vec![0.0, 1.5, 1.5, 0.0];
        assert!(weighted_hom_density(&h, &x, 2).is_err());
        // wrong size
        let x = vec![0.0; 3];
        assert!(weighted_hom_density(&h, &x, 2).is_err());
    }

    #[test]
    fn directed_star_density_examples() {
        // All-ones matrix, diagonal allowed: every density is 1.
        let n = 3u32;
        let mut x = DirectedGraph::empty(n, true);
        for i in 0..n {
            for j in 0..n {
                x.set(i, j, true).unwrap();
            }
        }
        for p in 1..=3 {
            assert_abs_diff_eq!(directed_star_density(p, &x), 1.0, epsilon = 1e-15);
        }
        // Single bit (0,1) at n = 2, p = 1: 1/4.
        let mut y = DirectedGraph::empty(2, true);
        y.set(0, 1, true).unwrap();
        assert_abs_diff_eq!(directed_star_density(1, &y), 0.25, epsilon = 1e-15);
        // Row degrees (2,0) at n = 2, p = 2: 4/8.
        y.set(0, 0, true).unwrap();
        assert_abs_diff_eq!(directed_star_density(2, &y), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn directed_star_density_equals_multi_index_sum() {
        // Direct (p+1)-fold summation oracle, integer count then one divide.
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for _ in 0..10 {
            let n = rng.gen_range(2..=4u32);
            let mut x = DirectedGraph::empty(n, true);
            for i in 0..n {
                for j in 0..n {
                    if rng.gen_bool(0.5) {
                        x.set(i, j, true).unwrap();
                    }
                }
            }
            for p in 1..=3u32 {
                let mut count = 0u128;
                let mut idx = vec![0u32; p as usize];
                for i in 0..n {
                    // iterate all p-tuples (j_1..j_p)
                    idx.iter_mut().for_each(|v| *v = 0);
                    loop {
                        if idx.iter().all(|&j| x.has(i, j)) {
                            count += 1;
                        }
                        let mut k = 0usize;
                        loop {
                            if k == p as usize {
                                break;
                            }
                            idx[k] += 1;
                            if idx[k] < n {
                                break;
                            }
                            idx[k] = 0;
                            k += 1;
                        }
                        if k == p as usize {
                            break;
                        }
                    }
                }
                let direct = count as f64 / (n as f64).powi(p as i32 + 1);
                let fast = directed_star_density(p, &x);
                assert_eq!(fast.to_bits(), direct.to_bits());
            }
        }
    }

    #[test]
    fn flip_delta_single_edge_removal() {
        let g = single_edge(3);
        let stats = [Statistic::Star(1)];
        let d = undirected_flip_deltas(&g, &stats, g.pair_index(0, 1)).unwrap();
        assert_abs_diff_eq!(d[0], -2.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn flip_delta_onto_empty_graph() {
        let g = UndirectedGraph::empty(3);
        let stats = [
            Statistic::Star(1),
            Statistic::Star(2),
            Statistic::Subgraph(SubgraphSpec::new(3, &[(1, 2), (1, 3), (2, 3)]).unwrap()),
        ];
        let d = undirected_flip_deltas(&g, &stats, 0).unwrap();
        assert_abs_diff_eq!(d[0], 2.0 / 9.0, epsilon = 1e-15);
        // both endpoints go from degree 0 to 1, so sum d^2 rises by 2
        assert_abs_diff_eq!(d[1], 2.0 / 27.0, epsilon = 1e-15);
        assert_eq!(d[2], 0.0);
    }

    #[test]
    fn flip_deltas_match_recomputation_exactly() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let stats = [
            Statistic::Star(1),
            Statistic::Star(2),
            Statistic::Star(3),
            Statistic::Subgraph(SubgraphSpec::new(3, &[(1, 2), (1, 3), (2, 3)]).unwrap()),
            Statistic::Subgraph(SubgraphSpec::new(4, &[(1, 2), (2, 3), (3, 4)]).unwrap()),
        ];
        for _ in 0..40 {
            let n = rng.gen_range(3..=6u32);
            let code: u128 = rng.gen_range(0..(1u128 << (n * (n - 1) / 2)));
            let g = UndirectedGraph::from_code(n, code);
            let pos = rng.gen_range(0..g.pair_count());
            let deltas = undirected_flip_deltas(&g, &stats, pos).unwrap();
            let (i, j) = UndirectedGraph::pair_of_index(n, pos);
            let mut flipped = g.clone();
            flipped.set_edge(i, j, !g.has_edge(i, j));
            for (k, stat) in stats.iter().enumerate() {
                let expect = statistic_density(stat, &flipped) - statistic_density(stat, &g);
                assert_eq!(deltas[k].to_bits(), expect.to_bits(), "stat {stat}");
            }
            // Flipping twice restores every density exactly.
            let back = undirected_flip_deltas(&flipped, &stats, pos).unwrap();
            for k in 0..stats.len() {
                assert_eq!(deltas[k], -back[k]);
            }
        }
    }

    #[test]
    fn directed_flip_deltas_match_recomputation() {
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let stats = [Statistic::Star(1), Statistic::Star(2), Statistic::Star(3)];
        for _ in 0..40 {
            let n = rng.gen_range(2..=4u32);
            let mut x = DirectedGraph::empty(n, true);
            for i in 0..n {
                for j in 0..n {
                    if rng.gen_bool(0.4) {
                        x.set(i, j, true).unwrap();
                    }
                }
            }
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let deltas = directed_flip_deltas(&x, &stats, i, j).unwrap();
            let mut flipped = x.clone();
            flipped.set(i, j, !x.has(i, j)).unwrap();
            for (k, stat) in stats.iter().enumerate() {
                let p = stat.star_order().unwrap();
                let expect = directed_star_density(p, &flipped) - directed_star_density(p, &x);
                assert_eq!(deltas[k].to_bits(), expect.to_bits());
            }
        }
    }

    #[test]
    fn flip_delta_rejects_bad_positions() {
        let g = UndirectedGraph::empty(3);
        assert!(undirected_flip_deltas(&g, &[Statistic::Star(1)], 3).is_err());
        let x = DirectedGraph::empty(3, false);
        assert!(directed_flip_deltas(&x, &[Statistic::Star(1)], 1, 1).is_err());
        assert!(directed_flip_deltas(&x, &[Statistic::Star(1)], 0, 3).is_err());
    }

    #[test]
    fn directed_graph_respects_diagonal_flag() {
        let mut x = DirectedGraph::empty(3, false);
        assert!(x.set(1, 1, true).is_err());
        assert!(x.set(0, 1, true).is_ok());
        let mut y = DirectedGraph::empty(3, true);
        assert!(y.set(1, 1, true).is_ok());
        assert_eq!(y.row_degree(1), 1);
    }
}
