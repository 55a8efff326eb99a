//! The rate-distortion region for a lossless `X1` and a lossy `X2`
//! described over correlated messages.
//!
//! For a test channel `p(v | x2)` (so `X1 -> X2 -> V`) and a reconstruction
//! `x̂2 = φ(x1, v)` with `E d(X2, X̂2) <= D`, the tuple `(R1, R2, R1', R2')`
//! is achievable when
//!
//! ```text
//! R1 >= R1' >= 0,   R2 >= R2' >= 0,
//! R1' >= H(X1 | V),   R2' >= I(V; X2 | X1),
//! R1 + R2' = R1' + R2 >= H(X1) + I(V; X2 | X1).
//! ```
//!
//! # Solver
//!
//! The channel is searched on a simplex grid of resolution `1/g` per
//! column. Write `a_v(x2) = p(v | x2)` for the column of symbol `v`. Both
//! the sum rate and the smallest distortion reachable for a fixed channel
//! split over columns:
//!
//! ```text
//! H(X1) + I(V; X2 | X1) = Σ_v φ(a_v),  φ(a) = -Σ_x1 q log q + Σ_x2 p(x2) a log a
//! min E d               = Σ_v δ(a_v),  δ(a) = Σ_x1 min_x̂ Σ_x2 p(x1, x2) a(x2) d(x2, x̂)
//! ```
//!
//! with `q(x1) = Σ_x2 p(x1, x2) a(x2)`. Choosing `x̂` per `(x1, v)` cell is
//! the same as minimizing over every deterministic reconstruction map, and
//! randomized maps never do better because distortion is linear in them.
//! The solver therefore enumerates multisets of grid columns that sum to
//! the all-ones vector, with branch and bound. `φ` and `δ` are both
//! superadditive (merging two symbols of `V` can only lower each), which
//! gives the bounds used for pruning.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::prob::{self, Alphabet, CondPmf, JointPmf};

/// Slack on the distortion budget.
pub const DISTORTION_TOLERANCE: f64 = 1e-9;
/// Slack on the rate inequalities in membership tests.
pub const RATE_TOLERANCE: f64 = 1e-9;
/// Sum rates closer than this are treated as ties.
const TIE: f64 = 1e-12;

/// Per-letter distortion `d(x2, x̂2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DistortionMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DistortionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return arg("distortion matrix must be nonempty");
        }
        if rows.iter().any(|r| r.len() != cols) {
            return arg("distortion matrix rows differ in length");
        }
        if rows.iter().flatten().any(|&v| !(v >= 0.0) || v.is_infinite()) {
            return arg("distortion entries must be finite and nonnegative");
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn hamming(k: usize) -> Self {
        Self {
            rows: k,
            cols: k,
            values: (0..k * k)
                .map(|i| if i / k == i % k { 0.0 } else { 1.0 })
                .collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, x2: usize, xhat: usize) -> f64 {
        self.values[x2 * self.cols + xhat]
    }

    /// Largest entry.
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<Vec<f64>>> for DistortionMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<DistortionMatrix> for Vec<Vec<f64>> {
    fn from(m: DistortionMatrix) -> Self {
        m.values.chunks(m.cols).map(<[f64]>::to_vec).collect()
    }
}

/// Deterministic reconstruction `x̂2 = table[x1][v]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconMap {
    pub table: Vec<Vec<usize>>,
}

impl ReconMap {
    pub fn new(table: Vec<Vec<usize>>) -> Result<Self> {
        let width = table.first().map_or(0, Vec::len);
        if table.is_empty() || width == 0 || table.iter().any(|r| r.len() != width) {
            return arg("reconstruction table must be a nonempty rectangle");
        }
        Ok(Self { table })
    }

    /// `x̂2 = v`, for `V` and `X̂2` sharing an alphabet.
    pub fn from_v(n_x1: usize, n_v: usize) -> Self {
        Self {
            table: vec![(0..n_v).collect(); n_x1],
        }
    }

    pub fn get(&self, x1: usize, v: usize) -> usize {
        self.table[x1][v]
    }

    pub fn n_x1(&self) -> usize {
        self.table.len()
    }

    pub fn n_v(&self) -> usize {
        self.table[0].len()
    }
}

/// A rate tuple `(R1, R2, R1', R2')` in bits per sample with distortion `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub r1: f64,
    pub r2: f64,
    pub r1p: f64,
    pub r2p: f64,
    pub d: f64,
}

impl RatePoint {
    /// `R1 + R2' - R1' - R2`; zero for a consistent tuple.
    pub fn sum_mismatch(&self) -> f64 {
        self.r1 + self.r2p - self.r1p - self.r2
    }

    pub fn sum_rate(&self) -> f64 {
        self.r1 + self.r2p
    }

    /// Structural constraints that do not depend on the source.
    pub fn is_well_formed(&self) -> bool {
        let t = RATE_TOLERANCE;
        [self.r1, self.r2, self.r1p, self.r2p, self.d]
            .iter()
            .all(|v| v.is_finite())
            && self.d >= 0.0
            && self.r1p >= -t
            && self.r2p >= -t
            && self.r1 >= self.r1p - t
            && self.r2 >= self.r2p - t
            && self.sum_mismatch().abs() <= t
    }
}

/// Information quantities of a composed joint `p(x1, x2) p(v | x2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoMeasures {
    pub h_x1: f64,
    pub h_x1_given_v: f64,
    pub i_v_x2: f64,
    pub i_x1_v: f64,
    pub i_v_x2_given_x1: f64,
}

impl InfoMeasures {
    pub fn of(source: &JointPmf, aux: &CondPmf) -> Result<Self> {
        let joint = prob::compose_markov(source, aux)?;
        Ok(Self {
            h_x1: prob::entropy(&joint, &[0])?,
            h_x1_given_v: prob::conditional_entropy(&joint, &[0], &[2])?,
            i_v_x2: prob::mutual_information(&joint, &[2], &[1])?,
            i_x1_v: prob::mutual_information(&joint, &[0], &[2])?,
            i_v_x2_given_x1: prob::conditional_mutual_information(&joint, &[2], &[1], &[0])?,
        })
    }

    /// `H(X1) + I(V; X2) - I(X1; V)`.
    pub fn sum_rate(&self) -> f64 {
        self.h_x1 + self.i_v_x2 - self.i_x1_v
    }

    /// `H(X1) + I(V; X2 | X1)`, equal to [`Self::sum_rate`] under `X1 -> X2 -> V`.
    pub fn sum_rate_chain(&self) -> f64 {
        self.h_x1 + self.i_v_x2_given_x1
    }
}

/// The four corner points A-D of the region for one auxiliary channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerPoints {
    pub a: RatePoint,
    pub b: RatePoint,
    pub c: RatePoint,
    pub d: RatePoint,
    pub alpha: f64,
}

impl CornerPoints {
    pub fn from_measures(m: &InfoMeasures, d: f64, alpha: Option<f64>) -> Result<Self> {
        let alpha = alpha.unwrap_or(m.i_x1_v / 2.0);
        if !(0.0..=m.i_x1_v + RATE_TOLERANCE).contains(&alpha) {
            return arg(format!(
                "alpha = {alpha} outside [0, I(X1;V) = {}]",
                m.i_x1_v
            ));
        }
        let sym = |r1: f64, r2: f64| RatePoint {
            r1,
            r2,
            r1p: r1,
            r2p: r2,
            d,
        };
        let r2a = m.i_v_x2 - m.i_x1_v;
        Ok(Self {
            a: sym(m.h_x1, r2a),
            b: sym(m.h_x1 - alpha, r2a + alpha),
            c: sym(m.h_x1 - m.i_x1_v, m.i_v_x2),
            d: RatePoint {
                r1: m.h_x1,
                r2: m.i_v_x2,
                r1p: m.h_x1 - m.i_x1_v,
                r2p: r2a,
                d,
            },
            alpha,
        })
    }

    pub fn as_array(&self) -> [(&'static str, RatePoint); 4] {
        [("A", self.a), ("B", self.b), ("C", self.c), ("D", self.d)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Grid resolution `g`; channel entries are multiples of `1/g`.
    pub grid: u32,
    /// `|V|`; defaults to `|X2| + 2`.
    pub aux_size: Option<usize>,
    /// Only allow symbols of `V` whose preimage lies inside one class of
    /// `X2` values sharing `p(x1 | x2)`, which makes `X2 -> V -> X1` hold.
    pub restrict_to_x1_classes: bool,
    /// Refuse searches whose estimated node count exceeds this.
    pub node_cap: f64,
    /// Point B parameter; `None` means `I(X1; V) / 2`.
    pub alpha: Option<f64>,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            grid: 32,
            aux_size: None,
            restrict_to_x1_classes: false,
            node_cap: 1e10,
            alpha: None,
        }
    }
}

impl SolverParams {
    pub fn with_grid(grid: u32) -> Self {
        Self {
            grid,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSolution {
    pub aux: CondPmf,
    pub recon: ReconMap,
    pub sum_rate: f64,
    pub achieved_d: f64,
    pub distortion_budget: f64,
    /// `|X̂2|`, the number of reconstruction symbols.
    pub recon_size: usize,
    pub grid: u32,
    pub measures: InfoMeasures,
    pub corner_points: CornerPoints,
}

fn check_source(source: &JointPmf, d: &DistortionMatrix) -> Result<()> {
    if source.arity() != 2 {
        return arg("source must be a two-axis joint p(x1, x2)");
    }
    if d.rows() != source.axis(1).size() {
        return arg(format!(
            "distortion matrix has {} rows but |X2| = {}",
            d.rows(),
            source.axis(1).size()
        ));
    }
    Ok(())
}

/// `H(X1) + I(V; X2) - I(X1; V)` for the joint `p(x1, x2) p(v | x2)`.
pub fn sum_rate(source: &JointPmf, aux: &CondPmf) -> Result<f64> {
    Ok(InfoMeasures::of(source, aux)?.sum_rate())
}

/// `Σ p(x1, x2) p(v | x2) d(x2, recon(x1, v))`.
pub fn expected_distortion(
    source: &JointPmf,
    aux: &CondPmf,
    recon: &ReconMap,
    d: &DistortionMatrix,
) -> Result<f64> {
    check_source(source, d)?;
    let (n1, n2) = (source.axis(0).size(), source.axis(1).size());
    let nv = aux.to_len();
    if aux.rows() != n2 {
        return arg("auxiliary channel must condition on X2");
    }
    if recon.n_x1() != n1 || recon.n_v() != nv {
        return arg("reconstruction table shape must be |X1| x |V|");
    }
    if recon.table.iter().flatten().any(|&x| x >= d.cols()) {
        return arg("reconstruction symbol outside the distortion matrix");
    }
    let mut total = 0.0;
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            let p = source.prob(&[x1, x2]);
            for v in 0..nv {
                total += p * aux.prob(x2, v) * d.get(x2, recon.get(x1, v));
            }
        }
    }
    Ok(total)
}

/// Every grid column `a ∈ {0, 1/g, …, 1}^{|X2|}` with its additive scores.
/// Index `i` encodes the counts in base `g + 1`, coordinate 0 most
/// significant, so subtracting a componentwise-smaller column never borrows.
struct AtomTable {
    dim: usize,
    g: u32,
    radix: Vec<usize>,
    counts: Vec<u32>,
    phi: Vec<f64>,
    psi: Vec<f64>,
    delta: Vec<f64>,
    recon: Vec<u32>,
    allowed: Vec<bool>,
    n1: usize,
    /// Per-unit-column lower bounds for δ and ψ.
    unit_delta: Vec<f64>,
    unit_psi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    phi: f64,
    psi: f64,
    delta: f64,
}

impl AtomTable {
    fn build(source: &JointPmf, d: &DistortionMatrix, g: u32, restrict: bool) -> Self {
        let (n1, dim) = (source.axis(0).size(), source.axis(1).size());
        let side = g as usize + 1;
        let total = side.pow(dim as u32);
        let mut radix = vec![1usize; dim];
        for k in (0..dim.saturating_sub(1)).rev() {
            radix[k] = radix[k + 1] * side;
        }
        let p2: Vec<f64> = (0..dim)
            .map(|x2| (0..n1).map(|x1| source.prob(&[x1, x2])).sum())
            .collect();
        // Classes of x2 by their conditional law of x1.
        let mut class = vec![usize::MAX; dim];
        let mut reps: Vec<usize> = Vec::new();
        for x2 in 0..dim {
            if p2[x2] <= 0.0 {
                continue;
            }
            let same = |y: usize| {
                (0..n1).all(|x1| {
                    (source.prob(&[x1, x2]) / p2[x2] - source.prob(&[x1, y]) / p2[y]).abs() <= 1e-12
                })
            };
            class[x2] = match reps.iter().position(|&y| same(y)) {
                Some(c) => c,
                None => {
                    reps.push(x2);
                    reps.len() - 1
                }
            };
        }

        let mut t = Self {
            dim,
            g,
            radix,
            counts: vec![0; total * dim],
            phi: vec![0.0; total],
            psi: vec![0.0; total],
            delta: vec![0.0; total],
            recon: vec![0; total * n1],
            allowed: vec![true; total],
            n1,
            unit_delta: vec![0.0; dim],
            unit_psi: vec![0.0; dim],
        };
        let mut a = vec![0.0; dim];
        let mut q = vec![0.0; n1];
        for idx in 0..total {
            let mut rest = idx;
            for k in 0..dim {
                let c = (rest / t.radix[k]) as u32;
                rest %= t.radix[k];
                t.counts[idx * dim + k] = c;
                a[k] = c as f64 / g as f64;
            }
            let mut m = 0.0;
            let mut h_joint = 0.0;
            let mut dist = 0.0;
            for x1 in 0..n1 {
                q[x1] = (0..dim).map(|x2| source.prob(&[x1, x2]) * a[x2]).sum();
                m += q[x1];
                h_joint -= prob::plogp(q[x1]);
                let (best, val) = (0..d.cols())
                    .map(|xh| {
                        let s: f64 = (0..dim).map(|x2| source.prob(&[x1, x2]) * a[x2] * d.get(x2, xh)).sum();
                        (xh, s)
                    })
                    .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
                t.recon[idx * n1 + x1] = best as u32;
                dist += val;
            }
            let h_v_given_x2: f64 = -(0..dim).map(|x2| p2[x2] * prob::plogp(a[x2])).sum::<f64>();
            t.phi[idx] = h_joint - h_v_given_x2;
            t.psi[idx] = h_joint + prob::plogp(m);
            t.delta[idx] = dist;
            if restrict {
                let mut seen = None;
                for x2 in 0..dim {
                    if a[x2] > 0.0 && class[x2] != usize::MAX {
                        match seen {
                            None => seen = Some(class[x2]),
                            Some(c) if c != class[x2] => t.allowed[idx] = false,
                            _ => {}
                        }
                    }
                }
            }
        }
        for x2 in 0..dim {
            let unit = g as usize * t.radix[x2];
            t.unit_delta[x2] = t.delta[unit] / g as f64;
            t.unit_psi[x2] = t.psi[unit] / g as f64;
        }
        t
    }

    fn atom(&self, idx: usize) -> &[u32] {
        &self.counts[idx * self.dim..(idx + 1) * self.dim]
    }

    fn full(&self) -> usize {
        self.radix.iter().map(|r| r * self.g as usize).sum()
    }

    fn delta_lb(&self, residual: usize) -> f64 {
        self.atom(residual)
            .iter()
            .zip(&self.unit_delta)
            .map(|(&c, &u)| c as f64 * u)
            .sum()
    }

    fn psi_lb(&self, residual: usize) -> f64 {
        self.atom(residual)
            .iter()
            .zip(&self.unit_psi)
            .map(|(&c, &u)| c as f64 * u)
            .sum()
    }

    /// Columns `c <= r` componentwise with `c <=_lex bound`, in descending
    /// lexicographic order.
    fn sub_atoms(&self, r: usize, bound: usize, out: &mut Vec<usize>) {
        out.clear();
        let r = self.atom(r).to_vec();
        let b = self.atom(bound).to_vec();
        self.sub_rec(0, &r, &b, true, 0, out);
    }

    fn sub_rec(&self, k: usize, r: &[u32], b: &[u32], tight: bool, acc: usize, out: &mut Vec<usize>) {
        if k == self.dim {
            out.push(acc);
            return;
        }
        let top = if tight { r[k].min(b[k]) } else { r[k] };
        for c in (0..=top).rev() {
            self.sub_rec(k + 1, r, b, tight && c == b[k], acc + c as usize * self.radix[k], out);
        }
    }

    fn lex_le(&self, a: usize, b: usize) -> bool {
        // Index order is lexicographic order.
        a <= b
    }

    fn add(&self, acc: Acc, idx: usize) -> Acc {
        Acc {
            phi: acc.phi + self.phi[idx],
            psi: acc.psi + self.psi[idx],
            delta: acc.delta + self.delta[idx],
        }
    }

    /// Depth-first walk over canonical multisets of `slots` allowed columns
    /// summing to `residual`, each no larger (lexicographically) than
    /// `bound`. `prune(acc, residual)` cuts a subtree; `leaf` sees complete
    /// multisets and returns `true` to stop the walk.
    fn walk<P, L>(&self, slots: usize, residual: usize, bound: usize, acc: Acc, path: &mut Vec<usize>, prune: &P, leaf: &mut L) -> bool
    where
        P: Fn(&Acc, usize) -> bool,
        L: FnMut(&[usize], &Acc) -> bool,
    {
        if slots == 1 {
            if !self.allowed[residual] || !self.lex_le(residual, bound) {
                return false;
            }
            let acc = self.add(acc, residual);
            if prune(&acc, 0) {
                return false;
            }
            path.push(residual);
            let stop = leaf(path, &acc);
            path.pop();
            return stop;
        }
        let first = self.atom(residual)[0];
        let mut buf = Vec::new();
        self.sub_atoms(residual, bound, &mut buf);
        for &c in &buf {
            if !self.allowed[c] {
                continue;
            }
            let c0 = self.atom(c)[0];
            // The remaining slots hold columns whose first count is at most c0.
            if first - c0 > (slots as u32 - 1) * c0 {
                break;
            }
            let next = self.add(acc, c);
            let rest = residual - c;
            if prune(&next, rest) {
                continue;
            }
            path.push(c);
            let stop = self.walk(slots - 1, rest, c, next, path, prune, leaf);
            path.pop();
            if stop {
                return true;
            }
        }
        false
    }

    /// First-level choices, in walk order.
    fn first_choices(&self, slots: usize) -> Vec<usize> {
        let full = self.full();
        let mut buf = Vec::new();
        self.sub_atoms(full, full, &mut buf);
        buf.retain(|&c| self.allowed[c] && self.g - self.atom(c)[0] <= (slots as u32 - 1) * self.atom(c)[0]);
        buf
    }

    /// Minimizes `key` over canonical multisets with `δ <= budget`.
    /// Returns the best value and multiset; ties go to the earliest in walk order.
    fn minimize<K, B>(&self, slots: usize, budget: f64, incumbent: f64, key: K, lb: B) -> Option<(f64, Vec<usize>)>
    where
        K: Fn(&Acc) -> f64 + Sync,
        B: Fn(usize) -> f64 + Sync,
    {
        let full = self.full();
        let per_first: Vec<Option<(f64, Vec<usize>)>> = self
            .first_choices(slots)
            .into_par_iter()
            .map(|c| {
                let mut best: Option<(f64, Vec<usize>)> = None;
                let mut bound = incumbent + TIE;
                let start = self.add(Acc::default(), c);
                let rest = full - c;
                let prune_first = start.delta + self.delta_lb(rest) > budget + DISTORTION_TOLERANCE
                    || key(&start) + lb(rest) > bound;
                if prune_first {
                    return None;
                }
                let mut path = vec![c];
                let cell = std::cell::Cell::new(bound);
                let prune = |a: &Acc, r: usize| {
                    a.delta + self.delta_lb(r) > budget + DISTORTION_TOLERANCE || key(a) + lb(r) > cell.get()
                };
                let mut leaf = |p: &[usize], a: &Acc| {
                    let v = key(a);
                    if best.as_ref().map_or(true, |b| v < b.0 - TIE) {
                        best = Some((v, p.to_vec()));
                        bound = bound.min(v + TIE);
                        cell.set(bound);
                    }
                    false
                };
                if slots == 1 {
                    if rest == 0 {
                        leaf(&path, &start);
                    }
                } else {
                    self.walk(slots - 1, rest, c, start, &mut path, &prune, &mut leaf);
                }
                best
            })
            .collect();
        let mut best: Option<(f64, Vec<usize>)> = None;
        for cand in per_first.into_iter().flatten() {
            if best.as_ref().map_or(true, |b| cand.0 < b.0 - TIE) {
                best = Some(cand);
            }
        }
        best
    }

    /// Rough node count of an unpruned walk.
    fn estimated_nodes(&self, slots: usize) -> f64 {
        let per_coord = binomial(self.g as u64 + slots as u64 - 1, slots as u64 - 1);
        let factorial: f64 = (1..=slots).map(|k| k as f64).product();
        per_coord.powi(self.dim as i32) / factorial
    }

    fn channel(&self, multiset: &[usize], slots: usize, x2_axis: &Alphabet) -> Result<CondPmf> {
        let mut mass = vec![0.0; self.dim * slots];
        for (v, &idx) in multiset.iter().enumerate() {
            for (x2, &c) in self.atom(idx).iter().enumerate() {
                mass[x2 * slots + v] = c as f64 / self.g as f64;
            }
        }
        CondPmf::new(vec![x2_axis.clone()], vec![aux_alphabet(slots)], mass)
    }

    fn recon_map(&self, multiset: &[usize], slots: usize) -> ReconMap {
        let mut table = vec![vec![0usize; slots]; self.n1];
        for (v, &idx) in multiset.iter().enumerate() {
            for (x1, row) in table.iter_mut().enumerate() {
                row[v] = self.recon[idx * self.n1 + x1] as usize;
            }
        }
        ReconMap { table }
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Alphabet `v0, v1, …` for the auxiliary variable.
pub fn aux_alphabet(size: usize) -> Alphabet {
    Alphabet::new((0..size).map(|v| format!("v{v}"))).expect("distinct labels")
}

struct Prepared {
    table: AtomTable,
    slots: usize,
}

fn prepare(source: &JointPmf, d: &DistortionMatrix, params: &SolverParams) -> Result<Prepared> {
    check_source(source, d)?;
    if params.grid == 0 {
        return arg("grid resolution must be at least 1");
    }
    let dim = source.axis(1).size();
    let slots = params.aux_size.unwrap_or(dim + 2);
    if slots == 0 {
        return arg("auxiliary alphabet must be nonempty");
    }
    let side = params.grid as f64 + 1.0;
    if side.powi(dim as i32) > 1e7 {
        return Err(Error::Capacity {
            what: "grid column table".into(),
            needed: side.powi(dim as i32),
            cap: 1e7,
        });
    }
    let table = AtomTable::build(source, d, params.grid, params.restrict_to_x1_classes);
    let nodes = table.estimated_nodes(slots);
    if nodes > params.node_cap {
        return Err(Error::Capacity {
            what: format!("grid search over |V| = {slots} at resolution 1/{}", params.grid),
            needed: nodes,
            cap: params.node_cap,
        });
    }
    Ok(Prepared { table, slots })
}

/// Smallest expected distortion over the grid, with the optimal
/// reconstruction per cell.
pub fn min_distortion(source: &JointPmf, d: &DistortionMatrix, params: &SolverParams) -> Result<f64> {
    let Prepared { table, slots } = prepare(source, d, params)?;
    Ok(table
        .minimize(slots, f64::INFINITY, f64::INFINITY, |a| a.delta, |r| table.delta_lb(r))
        .map_or(f64::INFINITY, |b| b.0))
}

/// Minimum of `H(X1) + I(V; X2 | X1)` over grid channels `p(v | x2)` and
/// reconstruction maps with `E d <= budget`.
pub fn minimize_sum_rate(
    source: &JointPmf,
    d: &DistortionMatrix,
    budget: f64,
    params: &SolverParams,
) -> Result<RegionSolution> {
    if !(budget >= 0.0) {
        return arg(format!("distortion budget must be nonnegative, got {budget}"));
    }
    let Prepared { table, slots } = prepare(source, d, params)?;

    // V constant is always admissible and bounds the search from above.
    let full = table.full();
    let incumbent = if table.allowed[full] && table.delta[full] <= budget + DISTORTION_TOLERANCE {
        table.phi[full]
    } else {
        f64::INFINITY
    };
    let found = table.minimize(slots, budget, incumbent, |a| a.phi, |r| table.phi[r]);
    let Some((_, multiset)) = found else {
        let best = table
            .minimize(slots, f64::INFINITY, f64::INFINITY, |a| a.delta, |r| table.delta_lb(r))
            .map_or(f64::INFINITY, |b| b.0);
        return Err(Error::Infeasible {
            reason: format!("no grid channel reaches distortion {budget}"),
            best_achievable: best,
        });
    };
    let aux = table.channel(&multiset, slots, source.axis(1))?;
    let recon = table.recon_map(&multiset, slots);
    let achieved_d = expected_distortion(source, &aux, &recon, d)?;
    let measures = InfoMeasures::of(source, &aux)?;
    Ok(RegionSolution {
        corner_points: CornerPoints::from_measures(&measures, achieved_d, params.alpha)?,
        sum_rate: measures.sum_rate(),
        aux,
        recon,
        achieved_d,
        distortion_budget: budget,
        recon_size: d.cols(),
        grid: params.grid,
        measures,
    })
}

/// Corner points recomputed from the source and the solution's channel.
pub fn corner_points(source: &JointPmf, solution: &RegionSolution, alpha: Option<f64>) -> Result<CornerPoints> {
    let m = InfoMeasures::of(source, &solution.aux)?;
    CornerPoints::from_measures(&m, solution.achieved_d, alpha)
}

/// Whether `pt` satisfies every region inequality for some grid channel
/// and reconstruction with `E d <= pt.d`.
pub fn in_region(source: &JointPmf, d: &DistortionMatrix, pt: &RatePoint, params: &SolverParams) -> Result<bool> {
    if !pt.is_well_formed() {
        return Ok(false);
    }
    let Prepared { table, slots } = prepare(source, d, params)?;
    let h_x1 = prob::entropy(source, &[0])?;
    // Σφ = H(X1) + I(V;X2|X1) must stay below both R2' + H(X1) and the sum rate.
    let phi_cap = (pt.r2p + h_x1).min(pt.sum_rate()) + RATE_TOLERANCE;
    let psi_cap = pt.r1p + RATE_TOLERANCE;
    let full = table.full();
    let budget = pt.d + DISTORTION_TOLERANCE;
    let prune = |a: &Acc, r: usize| {
        a.delta + table.delta_lb(r) > budget || a.phi + table.phi[r] > phi_cap || a.psi + table.psi_lb(r) > psi_cap
    };
    let found = table.first_choices(slots).into_par_iter().any(|c| {
        let start = table.add(Acc::default(), c);
        let rest = full - c;
        if prune(&start, rest) {
            return false;
        }
        if slots == 1 {
            return rest == 0;
        }
        table.walk(slots - 1, rest, c, start, &mut vec![c], &prune, &mut |_, _| true)
    });
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;

    #[test]
    fn sum_rate_special_channels() {
        let src = JointPmf::dsbs(0.2).unwrap();
        let constant = CondPmf::constant(Alphabet::binary(), aux_alphabet(1));
        assert!((sum_rate(&src, &constant).unwrap() - 1.0).abs() < 1e-12);
        let ident = CondPmf::identity(Alphabet::binary());
        assert!((sum_rate(&src, &ident).unwrap() - (1.0 + binary_entropy(0.2))).abs() < 1e-12);
        let m = InfoMeasures::of(&src, &CondPmf::bsc(0.1).unwrap()).unwrap();
        assert!((m.sum_rate() - m.sum_rate_chain()).abs() < 1e-10);
    }

    #[test]
    fn expected_distortion_examples() {
        let src = JointPmf::dsbs(0.2).unwrap();
        let ham = DistortionMatrix::hamming(2);
        let ident = CondPmf::identity(Alphabet::binary());
        let e = expected_distortion(&src, &ident, &ReconMap::from_v(2, 2), &ham).unwrap();
        assert_eq!(e, 0.0);
        let bsc = CondPmf::bsc(0.1).unwrap();
        let e = expected_distortion(&src, &bsc, &ReconMap::from_v(2, 2), &ham).unwrap();
        assert!((e - 0.1).abs() < 1e-12);
    }

    #[test]
    fn atom_scores_add_up() {
        let src = JointPmf::dsbs(0.25).unwrap();
        let ham = DistortionMatrix::hamming(2);
        let t = AtomTable::build(&src, &ham, 8, false);
        // Columns (3/8, 5/8) and (5/8, 3/8) form a valid two-symbol channel.
        let a = 3 * t.radix[0] + 5;
        let b = 5 * t.radix[0] + 3;
        assert_eq!(a + b, t.full());
        let aux = t.channel(&[b, a], 2, src.axis(1)).unwrap();
        let m = InfoMeasures::of(&src, &aux).unwrap();
        assert!((t.phi[a] + t.phi[b] - m.sum_rate()).abs() < 1e-12);
        assert!((t.psi[a] + t.psi[b] - m.h_x1_given_v).abs() < 1e-12);
        let recon = t.recon_map(&[b, a], 2);
        let e = expected_distortion(&src, &aux, &recon, &ham).unwrap();
        assert!((t.delta[a] + t.delta[b] - e).abs() < 1e-12);
    }

    #[test]
    fn large_budget_collapses_v() {
        let src = JointPmf::dsbs(0.2).unwrap();
        let sol = minimize_sum_rate(&src, &DistortionMatrix::hamming(2), 0.5, &SolverParams::with_grid(8)).unwrap();
        assert!((sol.sum_rate - 1.0).abs() < 1e-12);
        assert!(sol.measures.i_v_x2 < 1e-12);
    }

    #[test]
    fn zero_budget_recovers_joint_entropy() {
        let src = JointPmf::dsbs(0.2).unwrap();
        let sol = minimize_sum_rate(&src, &DistortionMatrix::hamming(2), 0.0, &SolverParams::with_grid(8)).unwrap();
        assert!((sol.sum_rate - (1.0 + binary_entropy(0.2))).abs() < 1e-9);
        assert!(sol.achieved_d <= 1e-12);
    }

    #[test]
    fn infeasible_budget_reports_best() {
        let src = JointPmf::dsbs(0.2).unwrap();
        let d = DistortionMatrix::new(vec![vec![0.5, 1.0], vec![1.0, 0.5]]).unwrap();
        match minimize_sum_rate(&src, &d, 0.1, &SolverParams::with_grid(4)) {
            Err(Error::Infeasible { best_achievable, .. }) => assert!((best_achievable - 0.5).abs() < 1e-12),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn corner_point_patterns() {
        let src = JointPmf::dsbs(0.2).unwrap();
        let m = InfoMeasures::of(&src, &CondPmf::identity(Alphabet::binary())).unwrap();
        let cp = CornerPoints::from_measures(&m, 0.0, None).unwrap();
        let h = binary_entropy(0.2);
        for (got, want) in [(cp.a.r1, 1.0), (cp.a.r2, h), (cp.a.r1p, 1.0), (cp.a.r2p, h)] {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((cp.d.r1 - cp.d.r1p - m.i_x1_v).abs() < 1e-12);
        assert!((cp.d.r2 - cp.d.r2p - m.i_x1_v).abs() < 1e-12);

        let indep = JointPmf::from_fn(vec![Alphabet::binary(), Alphabet::binary()], |_| 0.25).unwrap();
        let m = InfoMeasures::of(&indep, &CondPmf::bsc(0.1).unwrap()).unwrap();
        let cp = CornerPoints::from_measures(&m, 0.0, None).unwrap();
        for p in [cp.b, cp.c, cp.d] {
            assert!((p.r1 - cp.a.r1).abs() < 1e-12 && (p.r2p - cp.a.r2p).abs() < 1e-12);
        }
    }

    #[test]
    fn membership_examples() {
        let src = JointPmf::dsbs(0.25).unwrap();
        let ham = DistortionMatrix::hamming(2);
        let params = SolverParams::with_grid(8);
        let sol = minimize_sum_rate(&src, &ham, 0.1, &params).unwrap();
        let a = sol.corner_points.a;
        assert!(in_region(&src, &ham, &a, &params).unwrap());
        let mut lower = a;
        lower.r2p -= 0.1;
        lower.r2 -= 0.1;
        assert!(!in_region(&src, &ham, &lower, &params).unwrap());
        let mut skew = a;
        skew.r1 += 0.01;
        assert!(!in_region(&src, &ham, &skew, &params).unwrap());
    }
}
