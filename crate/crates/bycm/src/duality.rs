//! Duality between the lossy source problem and a semi-deterministic
//! broadcast channel (SBC).
//!
//! Forward: a solved source problem with joint `p*(x1, x2, v, x̂2)` induces
//! a channel `p*(x2 | x)` with input `x = (x1, x̂2)`, deterministic output
//! `x1 = f(x)`, and input cost
//!
//! ```text
//! w(x) = c1 D(p*(x1, x2 | x) || p̄(x1, x2)) + θ.
//! ```
//!
//! Backward: a solved SBC with joint `p*(v, x, x2)` induces the source
//! `p*(x1, x2)` and distortion `d(x1, x2, x̂2) = -c2 log p̄(x2 | x) + d0(x1, x2)`.
//!
//! At matched instances the minimum sum rate of the source problem equals
//! the maximum sum rate of the channel, `H(X1) + I(V; X2) - I(X1; V)` on
//! both sides.
//!
//! # Channel optimizer
//!
//! The constraint `X2 -> V -> X` forces every input in the support of
//! `p(x | v)` to share one channel row. Write `[x]` for the class of inputs
//! with the same row. For a fixed input law `p(x)`, splitting a class over
//! several values of `V` leaves `H(X2)` and `H(X2 | V)` unchanged and can
//! only lower `H(X1 | V)` (concavity), so `V = [X]` is optimal and
//!
//! ```text
//! H(X1) + I(V; X2) - I(X1; V) = H(X2) + Σ_c p(c) [H(X1 | c) - H(p(x2 | c))].
//! ```
//!
//! The optimizer therefore scans a simplex grid over `p(x)` only.

use serde::{Deserialize, Serialize};

use crate::bigraph::SemiRegularParams;
use crate::error::{arg, Error, Result};
use crate::prob::{self, Alphabet, CondPmf, JointPmf};
use crate::region::{aux_alphabet, RatePoint, RegionSolution};

/// Markov tolerance for instances whose optimum lies on the grid.
pub const EXACT_MARKOV_TOLERANCE: f64 = 1e-8;
/// Markov tolerance for grid-approximate optima.
pub const APPROX_MARKOV_TOLERANCE: f64 = 1e-3;
const COST_TOLERANCE: f64 = 1e-9;

/// Serializes `f64` vectors with `null` standing for `+∞`.
mod sentinel {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|&x| if x.is_infinite() { None } else { Some(x) })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Option<f64>>::deserialize(d)?
            .into_iter()
            .map(|x| x.unwrap_or(f64::INFINITY))
            .collect())
    }
}

/// Channel `p(x2 | x)` with a deterministic second output `x1 = f(x)`.
/// Each input is tagged with a pair `(x1, x̂2)`; in the forward construction
/// the input alphabet is `X1 × X̂2`, otherwise `x̂2` is the input itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbcChannel {
    pub x1: Alphabet,
    pub xhat: Alphabet,
    pub channel: CondPmf,
    pub pairs: Vec<(usize, usize)>,
}

impl SbcChannel {
    /// Generic channel with input alphabet `channel.from`, `f` given per input.
    pub fn new(x1: Alphabet, channel: CondPmf, f: Vec<usize>) -> Result<Self> {
        if channel.from_axes().len() != 1 || channel.to_axes().len() != 1 {
            return arg("channel must map one input axis to one output axis");
        }
        if f.len() != channel.rows() || f.iter().any(|&a| a >= x1.size()) {
            return arg("deterministic map must send every input into X1");
        }
        let xhat = channel.from_axes()[0].clone();
        let pairs = f.into_iter().enumerate().map(|(x, a)| (a, x)).collect();
        Ok(Self {
            x1,
            xhat,
            channel,
            pairs,
        })
    }

    pub fn input(&self) -> &Alphabet {
        &self.channel.from_axes()[0]
    }

    pub fn output(&self) -> &Alphabet {
        &self.channel.to_axes()[0]
    }

    pub fn f(&self, x: usize) -> usize {
        self.pairs[x].0
    }

    /// Same channel with `amount` added to the least likely entry of row
    /// `x`, then renormalized.
    pub fn perturbed(&self, x: usize, amount: f64) -> Result<Self> {
        if x >= self.channel.rows() {
            return arg("row index out of range");
        }
        let k = self.channel.to_len();
        let mut mass = self.channel.mass().to_vec();
        let row = &mut mass[x * k..(x + 1) * k];
        let target = (0..k).fold(0, |best, j| if row[j] < row[best] { j } else { best });
        row[target] += amount;
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|m| *m /= total);
        let channel = CondPmf::new(self.channel.from_axes().to_vec(), self.channel.to_axes().to_vec(), mass)?;
        Ok(Self {
            channel,
            ..self.clone()
        })
    }

    /// Inputs grouped by identical channel rows; `classes[x]` is the group.
    pub fn row_classes(&self) -> Vec<usize> {
        let k = self.channel.to_len();
        let mut reps: Vec<usize> = Vec::new();
        (0..self.channel.rows())
            .map(|x| {
                let same = |y: usize| (0..k).all(|j| (self.channel.prob(x, j) - self.channel.prob(y, j)).abs() <= 1e-12);
                match reps.iter().position(|&y| same(y)) {
                    Some(c) => c,
                    None => {
                        reps.push(x);
                        reps.len() - 1
                    }
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    /// Per-input cost; `+∞` marks inputs that must get zero mass.
    #[serde(with = "sentinel")]
    pub w: Vec<f64>,
    pub budget: f64,
    pub c1: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    /// `d(x1, x2, x̂2)` flattened in that axis order; `+∞` off the channel support.
    #[serde(with = "sentinel")]
    pub d: Vec<f64>,
    pub shape: [usize; 3],
    pub budget: f64,
    pub c2: f64,
    /// `d0(x1, x2)` flattened.
    pub d0: Vec<f64>,
}

impl DistortionSpec {
    pub fn get(&self, x1: usize, x2: usize, xhat: usize) -> f64 {
        let [_, n2, nh] = self.shape;
        self.d[(x1 * n2 + x2) * nh + xhat]
    }
}

/// Joint `p*(x1, x2, v, x̂2)` of a solved source problem.
pub fn byp_joint(source: &JointPmf, solution: &RegionSolution) -> Result<JointPmf> {
    let joint = prob::compose_markov(source, &solution.aux)?;
    let xhat = Alphabet::indexed(solution.recon_size);
    let axes = vec![
        source.axis(0).clone(),
        source.axis(1).clone(),
        solution.aux.to_axes()[0].clone(),
        xhat,
    ];
    JointPmf::from_fn(axes, |i| {
        if solution.recon.get(i[0], i[2]) == i[3] {
            joint.prob(&i[..3])
        } else {
            0.0
        }
    })
}

/// Forward construction: the channel `p*(x2 | x1, x̂2)` and its cost.
pub fn byp_to_sbc(source: &JointPmf, solution: &RegionSolution, c1: f64, theta: f64) -> Result<(SbcChannel, CostSpec)> {
    byp_to_sbc_with_tolerance(source, solution, c1, theta, EXACT_MARKOV_TOLERANCE)
}

pub fn byp_to_sbc_with_tolerance(
    source: &JointPmf,
    solution: &RegionSolution,
    c1: f64,
    theta: f64,
    tolerance: f64,
) -> Result<(SbcChannel, CostSpec)> {
    if !(c1 > 0.0) || !theta.is_finite() {
        return arg("cost constants need c1 > 0 and finite theta");
    }
    let joint = byp_joint(source, solution)?;
    let violation = prob::markov_violation(&joint, &[2], &[0, 3], &[1])?;
    if violation > tolerance {
        return Err(Error::Precondition {
            what: "V -> (X1, X̂2) -> (X1, X2)".into(),
            violation,
            tolerance,
        });
    }
    let (n1, n2, nh) = (source.axis(0).size(), source.axis(1).size(), solution.recon_size);
    let input = Alphabet::product(&[source.axis(0).clone(), joint.axis(3).clone()]);
    let p_x = joint.marginal(&[0, 3])?;
    let channel_joint = joint.marginal(&[0, 3, 1])?;
    let ch = channel_joint.conditional(&[2], &[0, 1])?;
    let channel = CondPmf::new(vec![input], vec![source.axis(1).clone()], ch.mass().to_vec())?;
    let pairs: Vec<(usize, usize)> = (0..n1).flat_map(|a| (0..nh).map(move |b| (a, b))).collect();

    let mut w = vec![f64::INFINITY; n1 * nh];
    for (x, &(a, b)) in pairs.iter().enumerate() {
        let px = p_x.prob(&[a, b]);
        if px <= 0.0 {
            continue;
        }
        // p*(x1, x2 | x) puts all X1 mass on f(x) = a.
        let mut cond = vec![0.0; n1 * n2];
        for x2 in 0..n2 {
            cond[a * n2 + x2] = channel.prob(x, x2);
        }
        w[x] = c1 * prob::kl_slices(&cond, source.mass()) + theta;
    }
    let budget = pairs
        .iter()
        .enumerate()
        .map(|(x, &(a, b))| {
            let px = p_x.prob(&[a, b]);
            if px > 0.0 {
                px * w[x]
            } else {
                0.0
            }
        })
        .sum();
    Ok((
        SbcChannel {
            x1: source.axis(0).clone(),
            xhat: joint.axis(3).clone(),
            channel,
            pairs,
        },
        CostSpec { w, budget, c1, theta },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbcSolution {
    /// `H(X1) + I(V; X2) - I(X1; V)` at the optimum.
    pub value: f64,
    /// `H(X1 | V) + I(V; X2)` at the same distribution.
    pub value_alt: f64,
    pub p_x: Vec<f64>,
    pub p_v: Vec<f64>,
    pub p_x_given_v: CondPmf,
    /// `classes[x]` is the value of `V` attached to input `x`.
    pub classes: Vec<usize>,
    pub expected_cost: f64,
    pub grid: u32,
}

fn compositions(total: u32, parts: usize, visit: &mut impl FnMut(&[u32])) {
    fn rec(left: u32, k: usize, parts: usize, cur: &mut Vec<u32>, visit: &mut impl FnMut(&[u32])) {
        if k + 1 == parts {
            cur.push(left);
            visit(cur);
            cur.pop();
            return;
        }
        for c in (0..=left).rev() {
            cur.push(c);
            rec(left - c, k + 1, parts, cur, visit);
            cur.pop();
        }
    }
    rec(total, 0, parts, &mut Vec::with_capacity(parts), visit);
}

fn shannon(v: &[f64]) -> f64 {
    -v.iter().map(|&p| prob::plogp(p)).sum::<f64>()
}

/// Maximum of `H(X1) + I(V; X2) - I(X1; V)` over grid input laws with
/// `E w <= budget`, `X2 -> V -> X` and `V -> X -> (X1, X2)`.
pub fn sbc_sum_capacity(ch: &SbcChannel, cost: &CostSpec, grid: u32) -> Result<SbcSolution> {
    let nx = ch.channel.rows();
    if cost.w.len() != nx {
        return arg("cost vector length differs from the input alphabet");
    }
    if grid == 0 {
        return arg("grid resolution must be at least 1");
    }
    let points = binomial(grid as u64 + nx as u64 - 1, nx as u64 - 1);
    if points > 1e9 {
        return Err(Error::Capacity {
            what: "input-law grid".into(),
            needed: points,
            cap: 1e9,
        });
    }
    let classes = ch.row_classes();
    let nc = classes.iter().max().map_or(0, |&c| c + 1);
    let n1 = ch.x1.size();
    let n2 = ch.channel.to_len();
    let rep: Vec<usize> = (0..nc).map(|c| classes.iter().position(|&k| k == c).unwrap()).collect();
    let row_entropy: Vec<f64> = rep.iter().map(|&x| shannon(ch.channel.row(x))).collect();
    let allowed: Vec<bool> = cost.w.iter().map(|w| w.is_finite()).collect();

    let mut best: Option<(f64, Vec<u32>)> = None;
    let mut p = vec![0.0; nx];
    let mut p2 = vec![0.0; n2];
    let mut cls = vec![0.0; nc * n1];
    compositions(grid, nx, &mut |counts| {
        if counts.iter().zip(&allowed).any(|(&c, &ok)| c > 0 && !ok) {
            return;
        }
        let mut e = 0.0;
        for x in 0..nx {
            p[x] = counts[x] as f64 / grid as f64;
            if counts[x] > 0 {
                e += p[x] * cost.w[x];
            }
        }
        if e > cost.budget + COST_TOLERANCE {
            return;
        }
        p2.iter_mut().for_each(|v| *v = 0.0);
        cls.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..nx {
            if counts[x] == 0 {
                continue;
            }
            for (j, v) in p2.iter_mut().enumerate() {
                *v += p[x] * ch.channel.prob(x, j);
            }
            cls[classes[x] * n1 + ch.f(x)] += p[x];
        }
        let mut value = shannon(&p2);
        for c in 0..nc {
            let block = &cls[c * n1..(c + 1) * n1];
            let m: f64 = block.iter().sum();
            if m > 0.0 {
                // m H(X1 | c) = -Σ q log q + m log m
                value += shannon(block) + prob::plogp(m) - m * row_entropy[c];
            }
        }
        if best.as_ref().map_or(true, |b| value > b.0 + 1e-12) {
            best = Some((value, counts.to_vec()));
        }
    });
    let Some((_, counts)) = best else {
        let min_cost = cost.w.iter().copied().fold(f64::INFINITY, f64::min);
        return Err(Error::Infeasible {
            reason: format!("no input law meets cost budget {}", cost.budget),
            best_achievable: min_cost,
        });
    };
    let p_x: Vec<f64> = counts.iter().map(|&c| c as f64 / grid as f64).collect();
    let p_v: Vec<f64> = (0..nc)
        .map(|c| (0..nx).filter(|&x| classes[x] == c).map(|x| p_x[x]).sum())
        .collect();
    let p_x_given_v = CondPmf::from_fn(vec![aux_alphabet(nc)], vec![ch.input().clone()], |v, x| {
        let members = classes.iter().filter(|&&c| c == v[0]).count() as f64;
        match (classes[x[0]] == v[0], p_v[v[0]] > 0.0) {
            (false, _) => 0.0,
            (true, true) => p_x[x[0]] / p_v[v[0]],
            (true, false) => 1.0 / members,
        }
    })?;
    let sol = SbcSolution {
        value: 0.0,
        value_alt: 0.0,
        expected_cost: p_x
            .iter()
            .zip(&cost.w)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, w)| p * w)
            .sum(),
        p_x,
        p_v,
        p_x_given_v,
        classes,
        grid,
    };
    let joint = sbc_joint(ch, &sol)?;
    let value = prob::entropy(&joint, &[0])? + prob::mutual_information(&joint, &[2], &[1])?
        - prob::mutual_information(&joint, &[0], &[2])?;
    let value_alt = prob::conditional_entropy(&joint, &[0], &[2])? + prob::mutual_information(&joint, &[2], &[1])?;
    Ok(SbcSolution { value, value_alt, ..sol })
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Joint `p*(x1, x2, v, x̂2)` induced by an SBC solution, same axis order
/// as [`byp_joint`].
pub fn sbc_joint(ch: &SbcChannel, sol: &SbcSolution) -> Result<JointPmf> {
    let nv = sol.p_v.len();
    let axes = vec![ch.x1.clone(), ch.output().clone(), aux_alphabet(nv), ch.xhat.clone()];
    let mut mass = vec![0.0; ch.x1.size() * ch.channel.to_len() * nv * ch.xhat.size()];
    let shape = [ch.x1.size(), ch.channel.to_len(), nv, ch.xhat.size()];
    for (x, &(a, b)) in ch.pairs.iter().enumerate() {
        let v = sol.classes[x];
        for x2 in 0..shape[1] {
            let idx = ((a * shape[1] + x2) * shape[2] + v) * shape[3] + b;
            mass[idx] += sol.p_x[x] * ch.channel.prob(x, x2);
        }
    }
    JointPmf::new(axes, mass)
}

/// Backward construction: the source `p*(x1, x2)` and distortion
/// `d = -c2 log p̄(x2 | x) + d0(x1, x2)` with budget `E d`.
pub fn sbc_to_byp(ch: &SbcChannel, sol: &SbcSolution, c2: f64, d0: Option<Vec<f64>>) -> Result<(JointPmf, DistortionSpec)> {
    sbc_to_byp_with_tolerance(ch, sol, c2, d0, EXACT_MARKOV_TOLERANCE)
}

pub fn sbc_to_byp_with_tolerance(
    ch: &SbcChannel,
    sol: &SbcSolution,
    c2: f64,
    d0: Option<Vec<f64>>,
    tolerance: f64,
) -> Result<(JointPmf, DistortionSpec)> {
    if !(c2 > 0.0) {
        return arg("c2 must be positive");
    }
    let (n1, n2, nh) = (ch.x1.size(), ch.channel.to_len(), ch.xhat.size());
    let d0 = d0.unwrap_or_else(|| vec![0.0; n1 * n2]);
    if d0.len() != n1 * n2 || d0.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return arg("d0 must hold |X1| x |X2| finite nonnegative entries");
    }
    let joint = sbc_joint(ch, sol)?;
    let violation = prob::markov_violation(&joint, &[0], &[1], &[2])?;
    if violation > tolerance {
        return Err(Error::Precondition {
            what: "X1 -> X2 -> V".into(),
            violation,
            tolerance,
        });
    }
    let mut d = vec![f64::INFINITY; n1 * n2 * nh];
    for (x, &(a, b)) in ch.pairs.iter().enumerate() {
        for x2 in 0..n2 {
            let p = ch.channel.prob(x, x2);
            if p > 0.0 {
                // -c2 log p is 0 for p = 1; keep it nonnegative.
                d[(a * n2 + x2) * nh + b] = (-c2 * p.log2()).max(0.0) + d0[a * n2 + x2];
            }
        }
    }
    let source = joint.marginal(&[0, 1])?;
    let mut budget = 0.0;
    for a in 0..n1 {
        for x2 in 0..n2 {
            for b in 0..nh {
                let m: f64 = (0..joint.axis(2).size()).map(|v| joint.prob(&[a, x2, v, b])).sum();
                if m > 0.0 {
                    budget += m * d[(a * n2 + x2) * nh + b];
                }
            }
        }
    }
    Ok((
        source,
        DistortionSpec {
            d,
            shape: [n1, n2, nh],
            budget,
            c2,
            d0,
        },
    ))
}

/// Log-domain graph parameters `(log Δ1, log Δ2, log Δ1', log Δ2', log μ)`
/// of a rate tuple at block length `n` and slackness `ε'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphExponents {
    pub n: usize,
    pub log_delta1: f64,
    pub log_delta2: f64,
    pub log_delta1p: f64,
    pub log_delta2p: f64,
    pub log_mu: f64,
}

impl GraphExponents {
    pub fn from_rates(pt: &RatePoint, n: usize, eps_prime: f64) -> Self {
        let n_f = n as f64;
        Self {
            n,
            log_delta1: n_f * pt.r1,
            log_delta2: n_f * pt.r2,
            log_delta1p: n_f * pt.r1p,
            log_delta2p: n_f * pt.r2p,
            log_mu: n_f * eps_prime,
        }
    }

    pub fn params(&self) -> Result<SemiRegularParams> {
        SemiRegularParams::from_exponents(
            self.log_delta1,
            self.log_delta2,
            self.log_delta1p,
            self.log_delta2p,
            self.log_mu,
        )
    }

    pub fn max_difference(&self, other: &Self) -> f64 {
        [
            self.log_delta1 - other.log_delta1,
            self.log_delta2 - other.log_delta2,
            self.log_delta1p - other.log_delta1p,
            self.log_delta2p - other.log_delta2p,
            self.log_mu - other.log_mu,
        ]
        .iter()
        .fold(if self.n == other.n { 0.0 } else { f64::INFINITY }, |m, d| m.max(d.abs()))
    }
}

/// The corner point `(H(X1), I(V;X2), H(X1|V), I(V;X2) - I(X1;V))` of a joint
/// in the `[X1, X2, V, X̂2]` layout.
pub fn point_d(joint: &JointPmf) -> Result<RatePoint> {
    let h1 = prob::entropy(joint, &[0])?;
    let i_v2 = prob::mutual_information(joint, &[2], &[1])?;
    let i_1v = prob::mutual_information(joint, &[0], &[2])?;
    Ok(RatePoint {
        r1: h1,
        r2: i_v2,
        r1p: h1 - i_1v,
        r2p: i_v2 - i_1v,
        d: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityTolerances {
    pub gap: f64,
    pub markov: f64,
    pub n: usize,
    pub eps_prime: f64,
    /// Largest allowed difference between carried and recomputed graph exponents.
    pub graph: f64,
}

impl Default for DualityTolerances {
    fn default() -> Self {
        Self {
            gap: 0.03,
            markov: APPROX_MARKOV_TOLERANCE,
            n: 16,
            eps_prime: 0.1,
            graph: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovCheck {
    pub name: String,
    pub side: String,
    pub violation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub byp_sum_rate: f64,
    pub sbc_sum_rate: f64,
    pub sbc_sum_rate_alt: f64,
    pub form_discrepancy: f64,
    pub gap: f64,
    pub gap_ok: bool,
    pub markov_checks: Vec<MarkovCheck>,
    pub byp_graph: GraphExponents,
    pub sbc_graph: GraphExponents,
    pub correlation_match: bool,
    pub cost_budget: f64,
    pub sbc_expected_cost: f64,
    /// `R1 <= H(X1)` and `R2 <= I(V; X2)` at the carried point on the channel side.
    pub sbc_point_ok: bool,
    pub passed: bool,
}

/// Compares a solved source problem with a solved dual channel.
pub fn verify_duality(
    source: &JointPmf,
    byp: &RegionSolution,
    ch: &SbcChannel,
    cost: &CostSpec,
    sbc: &SbcSolution,
    tol: &DualityTolerances,
) -> Result<DualityReport> {
    let bj = byp_joint(source, byp)?;
    let sj = sbc_joint(ch, sbc)?;
    let specs: [(&str, &[usize], &[usize], &[usize]); 4] = [
        ("X1 -> X2 -> V", &[0], &[1], &[2]),
        ("X2 -> V -> (X1, X^2)", &[1], &[2], &[0, 3]),
        ("V -> X -> (X1, X2)", &[2], &[0, 3], &[1]),
        ("X2 -> V -> X", &[1], &[2], &[0, 3]),
    ];
    let mut markov_checks = Vec::new();
    for (side, joint) in [("byp", &bj), ("sbc", &sj)] {
        for (name, a, b, c) in specs {
            let violation = prob::markov_violation(joint, a, b, c)?;
            markov_checks.push(MarkovCheck {
                name: name.to_string(),
                side: side.to_string(),
                violation,
                passed: violation <= tol.markov,
            });
        }
    }
    let byp_point = point_d(&bj)?;
    let sbc_point = point_d(&sj)?;
    let byp_graph = GraphExponents::from_rates(&byp_point, tol.n, tol.eps_prime);
    let sbc_graph = GraphExponents::from_rates(&sbc_point, tol.n, tol.eps_prime);
    let correlation_match = byp_graph.max_difference(&sbc_graph) <= tol.graph;
    let h1 = prob::entropy(&sj, &[0])?;
    let i_v2 = prob::mutual_information(&sj, &[2], &[1])?;
    let sbc_point_ok = byp_point.r1 <= h1 + tol.gap && byp_point.r2 <= i_v2 + tol.gap;
    let gap = (byp.sum_rate - sbc.value).abs();
    let gap_ok = gap < tol.gap;
    let passed = gap_ok && correlation_match && markov_checks.iter().all(|m| m.passed);
    Ok(DualityReport {
        byp_sum_rate: byp.sum_rate,
        sbc_sum_rate: sbc.value,
        sbc_sum_rate_alt: sbc.value_alt,
        form_discrepancy: (sbc.value - sbc.value_alt).abs(),
        gap,
        gap_ok,
        markov_checks,
        byp_graph,
        sbc_graph,
        correlation_match,
        cost_budget: cost.budget,
        sbc_expected_cost: sbc.expected_cost,
        sbc_point_ok,
        passed,
    })
}
