//! Strong typicality, exhaustive typical-set enumeration, and the measured
//! `ε₁(ε)` that makes the typical-set cardinality bounds hold.
//!
//! A tuple of aligned sequences is strongly ε-typical for a joint PMF `p`
//! when every joint symbol `a` satisfies
//!
//! ```text
//! | N(a) / n - p(a) | <= ε · p(a)        and   N(a) = 0 whenever p(a) = 0
//! ```
//!
//! which is the *relative* form ([`TypicalityRule::Relative`], the default).
//! The relative form excludes zero-probability symbols automatically and
//! makes the band narrow for rare symbols. The additive variant
//! `|N(a)/n - p(a)| <= ε/|A|` ([`TypicalityRule::Additive`]) is available
//! for comparison; it changes set sizes at the same ε.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::prob::{self, Alphabet, JointPmf};

/// Default cap on `|product alphabet|^n` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 26;

const BAND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypicalityRule {
    /// `|N(a)/n - p(a)| <= ε p(a)`.
    #[default]
    Relative,
    /// `|N(a)/n - p(a)| <= ε / |A|` over the (joint) alphabet `A`, plus
    /// `N(a) = 0` when `p(a) = 0`.
    Additive,
}

impl TypicalityRule {
    /// Inclusive range of counts admitted for a symbol of probability `p`
    /// in an alphabet of `size` symbols. `None` when no count in `0..=n`
    /// qualifies.
    pub fn count_window(self, p: f64, eps: f64, n: usize, size: usize) -> Option<(u32, u32)> {
        if p <= 0.0 {
            return Some((0, 0));
        }
        let nf = n as f64;
        let half_width = match self {
            TypicalityRule::Relative => eps * p,
            TypicalityRule::Additive => eps / size as f64,
        };
        let lo = (nf * (p - half_width) - BAND_SLACK).ceil().max(0.0);
        let hi = (nf * (p + half_width) + BAND_SLACK).floor().min(nf);
        (lo <= hi).then_some((lo as u32, hi as u32))
    }
}

/// Block length and ε for a typicality test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypicalityParams {
    pub epsilon: f64,
    pub n: usize,
    #[serde(default)]
    pub rule: TypicalityRule,
}

impl TypicalityParams {
    pub fn new(epsilon: f64, n: usize) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return arg(format!("epsilon must be nonnegative, got {epsilon}"));
        }
        if n == 0 {
            return arg("block length n must be positive");
        }
        Ok(Self {
            epsilon,
            n,
            rule: TypicalityRule::Relative,
        })
    }

    pub fn with_rule(mut self, rule: TypicalityRule) -> Self {
        self.rule = rule;
        self
    }
}

/// A length-n sequence of symbol indices over an alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolSequence {
    alphabet: Arc<Alphabet>,
    symbols: Vec<u8>,
}

impl SymbolSequence {
    pub fn new(alphabet: Alphabet, symbols: Vec<u8>) -> Result<Self> {
        Self::with_shared(Arc::new(alphabet), symbols)
    }

    pub fn with_shared(alphabet: Arc<Alphabet>, symbols: Vec<u8>) -> Result<Self> {
        if symbols.is_empty() {
            return arg("sequence length must be positive");
        }
        if alphabet.size() > 256 {
            return arg("alphabets above 256 symbols are not supported for sequences");
        }
        if let Some(s) = symbols.iter().find(|&&s| s as usize >= alphabet.size()) {
            return arg(format!("symbol index {s} outside alphabet {alphabet}"));
        }
        Ok(Self { alphabet, symbols })
    }

    /// Parses a string of single-character labels, e.g. `"0011"`.
    pub fn parse(alphabet: Alphabet, text: &str) -> Result<Self> {
        let symbols = text
            .chars()
            .map(|c| {
                alphabet
                    .index_of(&c.to_string())
                    .map(|i| i as u8)
                    .ok_or_else(|| Error::Argument(format!("symbol {c:?} not in {alphabet}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, symbols)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Count windows for every joint symbol of a PMF at fixed (n, ε).
///
/// Checking a tuple of aligned sequences is then a single pass that counts
/// joint symbols and compares against the windows.
#[derive(Debug, Clone)]
pub struct TypicalityChecker {
    n: usize,
    shape: Vec<usize>,
    strides: Vec<usize>,
    windows: Option<Vec<(u32, u32)>>,
}

impl TypicalityChecker {
    pub fn new(p: &JointPmf, epsilon: f64, n: usize, rule: TypicalityRule) -> Self {
        let windows: Option<Vec<_>> = p
            .mass()
            .iter()
            .map(|&m| rule.count_window(m, epsilon, n, p.mass().len()))
            .collect();
        // The windows must also be able to add up to n.
        let windows = windows.filter(|w| {
            let lo: u64 = w.iter().map(|x| x.0 as u64).sum();
            let hi: u64 = w.iter().map(|x| x.1 as u64).sum();
            lo <= n as u64 && n as u64 <= hi
        });
        let shape = p.shape();
        Self {
            n,
            strides: prob::strides(&shape),
            shape,
            windows,
        }
    }

    pub fn from_params(p: &JointPmf, params: &TypicalityParams) -> Self {
        Self::new(p, params.epsilon, params.n, params.rule)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// False when no sequence of length n can be typical.
    pub fn is_satisfiable(&self) -> bool {
        self.windows.is_some()
    }

    pub fn windows(&self) -> Option<&[(u32, u32)]> {
        self.windows.as_deref()
    }

    pub fn admits_counts(&self, counts: &[u32]) -> bool {
        match &self.windows {
            None => false,
            Some(w) => counts
                .iter()
                .zip(w)
                .all(|(&c, &(lo, hi))| lo <= c && c <= hi),
        }
    }

    /// Typicality of aligned raw symbol slices, one per axis. `counts` is
    /// scratch space, resized as needed.
    pub fn admits_with(&self, seqs: &[&[u8]], counts: &mut Vec<u32>) -> bool {
        let Some(w) = &self.windows else { return false };
        counts.clear();
        counts.resize(w.len(), 0);
        for m in 0..self.n {
            let mut idx = 0;
            for (k, s) in seqs.iter().enumerate() {
                idx += s[m] as usize * self.strides[k];
            }
            let c = &mut counts[idx];
            *c += 1;
            if *c > w[idx].1 {
                return false;
            }
        }
        counts.iter().zip(w).all(|(&c, &(lo, _))| c >= lo)
    }

    pub fn admits(&self, seqs: &[&[u8]]) -> bool {
        self.admits_with(seqs, &mut Vec::new())
    }

    fn check_shape(&self, seqs: &[SymbolSequence]) -> Result<()> {
        if seqs.len() != self.shape.len() {
            return arg(format!(
                "expected {} aligned sequences, got {}",
                self.shape.len(),
                seqs.len()
            ));
        }
        for (s, &k) in seqs.iter().zip(&self.shape) {
            if s.alphabet.size() != k {
                return arg("sequence alphabet size does not match the PMF axis");
            }
            if s.len() != self.n {
                return arg(format!("sequence length {} differs from n = {}", s.len(), self.n));
            }
        }
        Ok(())
    }
}

/// Joint type (empirical PMF) of one or more aligned sequences.
pub fn empirical_pmf(seqs: &[SymbolSequence]) -> Result<JointPmf> {
    let Some(first) = seqs.first() else {
        return arg("empirical PMF of zero sequences");
    };
    let n = first.len();
    if seqs.iter().any(|s| s.len() != n) {
        return arg("aligned sequences must share one length");
    }
    let axes: Vec<Alphabet> = seqs.iter().map(|s| (*s.alphabet).clone()).collect();
    let shape: Vec<usize> = axes.iter().map(Alphabet::size).collect();
    let st = prob::strides(&shape);
    let mut counts = vec![0usize; shape.iter().product()];
    for m in 0..n {
        let idx: usize = seqs
            .iter()
            .zip(&st)
            .map(|(s, &k)| s.symbols[m] as usize * k)
            .sum();
        counts[idx] += 1;
    }
    JointPmf::new(axes, counts.iter().map(|&c| c as f64 / n as f64).collect())
}

/// Relative-form strong typicality of aligned sequences under `p`.
pub fn is_strongly_typical(seqs: &[SymbolSequence], p: &JointPmf, epsilon: f64) -> Result<bool> {
    is_typical_under(seqs, p, epsilon, TypicalityRule::Relative)
}

pub fn is_typical_under(
    seqs: &[SymbolSequence],
    p: &JointPmf,
    epsilon: f64,
    rule: TypicalityRule,
) -> Result<bool> {
    let n = seqs.first().map_or(0, SymbolSequence::len);
    let checker = TypicalityChecker::new(p, epsilon, n, rule);
    checker.check_shape(seqs)?;
    let raw: Vec<&[u8]> = seqs.iter().map(|s| s.symbols()).collect();
    Ok(checker.admits(&raw))
}

fn scan_size(base: usize, n: usize) -> f64 {
    (base as f64).powi(n as i32)
}

/// Depth-first walk over sequences of the product alphabet in lexicographic
/// order, pruning prefixes that cannot complete to a typical sequence.
/// `visit` receives the joint-symbol index at every position.
fn walk_typical(checker: &TypicalityChecker, mut visit: impl FnMut(&[u16])) {
    let Some(windows) = checker.windows.as_ref() else {
        return;
    };
    let n = checker.n;
    let k = windows.len();
    let mut counts = vec![0u32; k];
    let mut seq = vec![0u16; n];
    // deficit = Σ max(0, lo - count): symbols still owed to reach lower bounds.
    let mut deficit: u32 = windows.iter().map(|w| w.0).sum();
    let mut pos = 0usize;
    let mut next = vec![0u16; n + 1];
    loop {
        if pos == n {
            visit(&seq);
            pos -= 1;
            let s = seq[pos] as usize;
            counts[s] -= 1;
            if counts[s] < windows[s].0 {
                deficit += 1;
            }
            next[pos] = seq[pos] + 1;
            continue;
        }
        let mut advanced = false;
        let remaining_after = (n - pos - 1) as u32;
        let mut s = next[pos] as usize;
        while s < k {
            if counts[s] < windows[s].1 {
                let owed = if counts[s] < windows[s].0 { deficit - 1 } else { deficit };
                if owed <= remaining_after {
                    if counts[s] < windows[s].0 {
                        deficit -= 1;
                    }
                    counts[s] += 1;
                    seq[pos] = s as u16;
                    pos += 1;
                    next[pos] = 0;
                    advanced = true;
                    break;
                }
            }
            s += 1;
        }
        if advanced {
            continue;
        }
        if pos == 0 {
            return;
        }
        pos -= 1;
        let s = seq[pos] as usize;
        counts[s] -= 1;
        if counts[s] < windows[s].0 {
            deficit += 1;
        }
        next[pos] = seq[pos] + 1;
    }
}

fn check_cap(p: &JointPmf, n: usize, cap: u64) -> Result<()> {
    let base = p.mass().len();
    let size = scan_size(base, n);
    if size > cap as f64 {
        return Err(Error::Capacity {
            what: format!("typical-set scan over {base}^{n} sequences"),
            needed: size,
            cap: cap as f64,
        });
    }
    Ok(())
}

/// Every tuple of aligned sequences that is strongly typical for `p`, in
/// lexicographic order of the joint-symbol sequence.
pub fn enumerate_typical_set(
    p: &JointPmf,
    params: &TypicalityParams,
) -> Result<Vec<Vec<SymbolSequence>>> {
    enumerate_typical_set_capped(p, params, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_typical_set_capped(
    p: &JointPmf,
    params: &TypicalityParams,
    cap: u64,
) -> Result<Vec<Vec<SymbolSequence>>> {
    check_cap(p, params.n, cap)?;
    let shape = p.shape();
    let alphabets: Vec<Arc<Alphabet>> = p.axes().iter().cloned().map(Arc::new).collect();
    let checker = TypicalityChecker::from_params(p, params);
    let mut out = Vec::new();
    let mut idx = vec![0usize; shape.len()];
    walk_typical(&checker, |joint| {
        let mut per_axis: Vec<Vec<u8>> = vec![Vec::with_capacity(params.n); shape.len()];
        for &j in joint {
            prob::unravel(j as usize, &shape, &mut idx);
            for (k, &i) in idx.iter().enumerate() {
                per_axis[k].push(i as u8);
            }
        }
        out.push(
            per_axis
                .into_iter()
                .zip(&alphabets)
                .map(|(symbols, a)| SymbolSequence {
                    alphabet: Arc::clone(a),
                    symbols,
                })
                .collect(),
        );
    });
    Ok(out)
}

/// Size of the typical set, by the same exhaustive walk as
/// [`enumerate_typical_set`] but without materializing it.
pub fn count_typical_set(p: &JointPmf, params: &TypicalityParams, cap: u64) -> Result<u64> {
    check_cap(p, params.n, cap)?;
    let checker = TypicalityChecker::from_params(p, params);
    let mut count = 0u64;
    walk_typical(&checker, |_| count += 1);
    Ok(count)
}

/// Joint-symbol sequences of the typical set, each packed as a base-|A|
/// integer with position 0 most significant. Used by the codec.
pub(crate) fn typical_packed(p: &JointPmf, params: &TypicalityParams, cap: u64) -> Result<Vec<u64>> {
    check_cap(p, params.n, cap)?;
    let base = p.mass().len() as u64;
    let checker = TypicalityChecker::from_params(p, params);
    let mut out = Vec::new();
    walk_typical(&checker, |seq| {
        out.push(seq.iter().fold(0u64, |acc, &s| acc * base + s as u64));
    });
    Ok(out)
}

/// Cardinality bounds at one (n, ε): the observed set size against
/// `2^{n(H ± ε₁)}` for one marginal or the joint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CardinalityCheck {
    pub axes: Vec<usize>,
    pub entropy: f64,
    pub size: u64,
    /// Smallest ε₁ for which both bounds hold for this set.
    pub epsilon1: f64,
}

/// Typical-set sizes for each single-axis marginal and for the full joint.
pub fn cardinality_checks(
    p: &JointPmf,
    params: &TypicalityParams,
    cap: u64,
) -> Result<Vec<CardinalityCheck>> {
    let mut subsets: Vec<Vec<usize>> = (0..p.arity()).map(|k| vec![k]).collect();
    if p.arity() > 1 {
        subsets.push((0..p.arity()).collect());
    }
    subsets
        .into_iter()
        .map(|axes| {
            let q = p.marginal(&axes)?;
            let h = prob::entropy(&q, &(0..q.arity()).collect::<Vec<_>>())?;
            let size = count_typical_set(&q, params, cap)?;
            let epsilon1 = if size == 0 {
                f64::INFINITY
            } else {
                ((size as f64).log2() / params.n as f64 - h).abs()
            };
            Ok(CardinalityCheck {
                axes,
                entropy: h,
                size,
                epsilon1,
            })
        })
        .collect()
}

/// Smallest ε₁ such that `2^{n(H-ε₁)} <= |A| <= 2^{n(H+ε₁)}` holds for the
/// typical set of every single-axis marginal and of the joint at (n, ε).
/// Infinite when some typical set is empty.
pub fn measure_epsilon1(p: &JointPmf, params: &TypicalityParams) -> Result<f64> {
    measure_epsilon1_capped(p, params, DEFAULT_ENUMERATION_CAP)
}

pub fn measure_epsilon1_capped(p: &JointPmf, params: &TypicalityParams, cap: u64) -> Result<f64> {
    Ok(cardinality_checks(p, params, cap)?
        .iter()
        .map(|c| c.epsilon1)
        .fold(0.0, f64::max))
}
