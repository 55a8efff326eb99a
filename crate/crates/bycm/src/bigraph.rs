//! Bipartite graphs that carry correlated messages.
//!
//! A message pair `(W1, W2)` is restricted to the edge set of a bipartite
//! graph and is uniform over that edge set. The graph used by the random
//! binning scheme is *nearly semi-regular*: every first-side degree lies
//! within a multiplicative slack `μ` of a nominal `Δ₂′`, and every
//! second-side degree within `μ` of `Δ₁′`.
//!
//! Under edge-uniform sampling the individual messages are uniform only
//! when the graph is semi-regular; in general the first-side marginal of
//! vertex `u` is `deg(u) / |E|`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};

/// Immutable bipartite graph with sorted edges and per-side adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    n1: usize,
    n2: usize,
    edges: Vec<(u32, u32)>,
    offsets1: Vec<usize>,
    offsets2: Vec<usize>,
    adj2: Vec<u32>,
}

impl BipartiteGraph {
    /// Builds a graph, rejecting out-of-range vertices and duplicate edges.
    pub fn new(n1: usize, n2: usize, mut edges: Vec<(u32, u32)>) -> Result<Self> {
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return arg("duplicate edge");
        }
        Self::from_sorted(n1, n2, edges)
    }

    /// Builds a graph from an edge list that may contain duplicates.
    pub fn from_edges_dedup(n1: usize, n2: usize, mut edges: Vec<(u32, u32)>) -> Result<Self> {
        edges.sort_unstable();
        edges.dedup();
        Self::from_sorted(n1, n2, edges)
    }

    fn from_sorted(n1: usize, n2: usize, edges: Vec<(u32, u32)>) -> Result<Self> {
        if n1 > u32::MAX as usize || n2 > u32::MAX as usize {
            return arg("vertex sets above 2^32 are not supported");
        }
        if let Some(&(i, j)) = edges
            .iter()
            .find(|&&(i, j)| i as usize >= n1 || j as usize >= n2)
        {
            return arg(format!("edge ({i}, {j}) outside a {n1} x {n2} graph"));
        }
        let mut offsets1 = vec![0usize; n1 + 1];
        let mut offsets2 = vec![0usize; n2 + 1];
        for &(i, j) in &edges {
            offsets1[i as usize + 1] += 1;
            offsets2[j as usize + 1] += 1;
        }
        for k in 0..n1 {
            offsets1[k + 1] += offsets1[k];
        }
        for k in 0..n2 {
            offsets2[k + 1] += offsets2[k];
        }
        let mut fill = offsets2.clone();
        let mut adj2 = vec![0u32; edges.len()];
        for &(i, j) in &edges {
            adj2[fill[j as usize]] = i;
            fill[j as usize] += 1;
        }
        Ok(Self {
            n1,
            n2,
            edges,
            offsets1,
            offsets2,
            adj2,
        })
    }

    pub fn complete(n1: usize, n2: usize) -> Self {
        let edges = (0..n1 as u32)
            .flat_map(|i| (0..n2 as u32).map(move |j| (i, j)))
            .collect();
        Self::from_sorted(n1, n2, edges).expect("complete graph is well formed")
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Second-side neighbours of first-side vertex `i`, sorted.
    pub fn neighbours1(&self, i: usize) -> impl Iterator<Item = u32> + '_ {
        self.edges[self.offsets1[i]..self.offsets1[i + 1]]
            .iter()
            .map(|e| e.1)
    }

    /// First-side neighbours of second-side vertex `j`, sorted.
    pub fn neighbours2(&self, j: usize) -> &[u32] {
        &self.adj2[self.offsets2[j]..self.offsets2[j + 1]]
    }

    pub fn contains(&self, i: u32, j: u32) -> bool {
        if i as usize >= self.n1 {
            return false;
        }
        let row = &self.edges[self.offsets1[i as usize]..self.offsets1[i as usize + 1]];
        row.binary_search_by_key(&j, |e| e.1).is_ok()
    }

    pub fn degree1(&self, i: usize) -> usize {
        self.offsets1[i + 1] - self.offsets1[i]
    }

    pub fn degree2(&self, j: usize) -> usize {
        self.offsets2[j + 1] - self.offsets2[j]
    }

    /// Degree lists for both sides.
    pub fn degrees(&self) -> (Vec<usize>, Vec<usize>) {
        (
            (0..self.n1).map(|i| self.degree1(i)).collect(),
            (0..self.n2).map(|j| self.degree2(j)).collect(),
        )
    }

    pub fn summary(&self) -> GraphSummary {
        let (d1, d2) = self.degrees();
        GraphSummary {
            n1: self.n1,
            n2: self.n2,
            edges: self.edge_count(),
            min_degree1: d1.iter().copied().min().unwrap_or(0),
            max_degree1: d1.iter().copied().max().unwrap_or(0),
            min_degree2: d2.iter().copied().min().unwrap_or(0),
            max_degree2: d2.iter().copied().max().unwrap_or(0),
        }
    }

    /// CSV edge dump with header `side1,side2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("side1,side2\n");
        for (i, j) in &self.edges {
            out.push_str(&format!("{i},{j}\n"));
        }
        out
    }

    /// Parses the CSV edge dump; vertex counts must be supplied.
    pub fn from_csv(n1: usize, n2: usize, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        match lines.next().map(str::trim) {
            Some("side1,side2") => {}
            other => return arg(format!("expected header side1,side2, found {other:?}")),
        }
        let edges = lines
            .map(|l| {
                let mut parts = l.split(',').map(str::trim);
                let parse = |s: Option<&str>| {
                    s.and_then(|s| s.parse::<u32>().ok())
                        .ok_or_else(|| crate::Error::Argument(format!("bad edge line {l:?}")))
                };
                Ok((parse(parts.next())?, parse(parts.next())?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n1, n2, edges)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n1: usize,
    pub n2: usize,
    pub edges: usize,
    pub min_degree1: usize,
    pub max_degree1: usize,
    pub min_degree2: usize,
    pub max_degree2: usize,
}

/// Parameters `(Δ₁, Δ₂, Δ₁′, Δ₂′, μ)` of a nearly semi-regular graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiRegularParams {
    pub delta1: f64,
    pub delta2: f64,
    pub delta1p: f64,
    pub delta2p: f64,
    pub mu: f64,
}

impl SemiRegularParams {
    pub fn new(delta1: f64, delta2: f64, delta1p: f64, delta2p: f64, mu: f64) -> Result<Self> {
        if !(mu >= 1.0) {
            return arg(format!("slackness mu must be at least 1, got {mu}"));
        }
        if [delta1, delta2, delta1p, delta2p].iter().any(|&d| !(d >= 1.0)) {
            return arg("all vertex-set sizes and nominal degrees must be at least 1");
        }
        Ok(Self {
            delta1,
            delta2,
            delta1p,
            delta2p,
            mu,
        })
    }

    /// Parameters `(2^{e1}, 2^{e2}, 2^{e1p}, 2^{e2p}, 2^{emu})` from base-2
    /// exponents, e.g. `n R₁` and `n ε′`.
    pub fn from_exponents(e1: f64, e2: f64, e1p: f64, e2p: f64, emu: f64) -> Result<Self> {
        Self::new(e1.exp2(), e2.exp2(), e1p.exp2(), e2p.exp2(), emu.exp2())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    VertexCount { side: Side, actual: usize, expected: f64 },
    Degree { side: Side, vertex: usize, degree: usize, low: f64, high: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiRegularReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

const LOG_SLACK: f64 = 1e-9;

/// `low <= degree <= high` compared on the log2 scale, which is exact for
/// powers of two and carries a 1e-9 slack otherwise.
fn within(degree: usize, nominal: f64, mu: f64) -> bool {
    if degree == 0 {
        return false;
    }
    let d = (degree as f64).log2();
    let (c, w) = (nominal.log2(), mu.log2());
    d >= c - w - LOG_SLACK && d <= c + w + LOG_SLACK
}

/// Checks near semi-regularity and lists every violation.
pub fn check_nearly_semi_regular(g: &BipartiteGraph, p: &SemiRegularParams) -> SemiRegularReport {
    let (d1, d2) = g.degrees();
    check_degree_sequences(&d1, &d2, p)
}

/// Same check on bare degree sequences; the side sizes are the sequence
/// lengths. Useful when the edge set is too large to hold.
pub fn check_degree_sequences(deg1: &[usize], deg2: &[usize], p: &SemiRegularParams) -> SemiRegularReport {
    let mut violations = Vec::new();
    for (side, actual, expected) in [(Side::First, deg1.len(), p.delta1), (Side::Second, deg2.len(), p.delta2)] {
        if (actual as f64 - expected).abs() > 1e-9 * expected.max(1.0) {
            violations.push(Violation::VertexCount {
                side,
                actual,
                expected,
            });
        }
    }
    for (side, degrees, nominal) in [(Side::First, deg1, p.delta2p), (Side::Second, deg2, p.delta1p)] {
        for (v, &degree) in degrees.iter().enumerate() {
            if !within(degree, nominal, p.mu) {
                violations.push(Violation::Degree {
                    side,
                    vertex: v,
                    degree,
                    low: nominal / p.mu,
                    high: nominal * p.mu,
                });
            }
        }
    }
    SemiRegularReport {
        passed: violations.is_empty(),
        violations,
    }
}

/// Draws message pairs uniformly over the edge set of a graph.
#[derive(Debug, Clone)]
pub struct EdgeSampler<'g> {
    graph: &'g BipartiteGraph,
    rng: ChaCha8Rng,
}

impl<'g> EdgeSampler<'g> {
    pub fn new(graph: &'g BipartiteGraph, seed: u64) -> Result<Self> {
        if graph.edge_count() == 0 {
            return arg("cannot sample from an empty edge set");
        }
        Ok(Self {
            graph,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn sample(&mut self) -> (u32, u32) {
        let k = self.rng.gen_range(0..self.graph.edge_count());
        self.graph.edges[k]
    }
}

/// One edge drawn uniformly, determined by `seed`.
pub fn uniform_edge_sampler(g: &BipartiteGraph, seed: u64) -> Result<(u32, u32)> {
    Ok(EdgeSampler::new(g, seed)?.sample())
}

/// The three message graphs on `{0,1,2} x {0,1,2}`: complete, the 6-edge
/// cycle `{(0,0),(0,1),(1,1),(1,2),(2,2),(2,0)}`, and the perfect matching.
pub fn three_by_three_examples() -> [BipartiteGraph; 3] {
    let cycle = vec![(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 0)];
    let matching = vec![(0, 0), (1, 1), (2, 2)];
    [
        BipartiteGraph::complete(3, 3),
        BipartiteGraph::new(3, 3, cycle).expect("cycle"),
        BipartiteGraph::new(3, 3, matching).expect("matching"),
    ]
}
