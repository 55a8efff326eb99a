//! Random-binning codec over correlated messages, at desk scale.
//!
//! Encoder 1 looks its source block up in a codebook `C1` of typical
//! `X1`-sequences and sends the bin `B(i)` of the match. Encoder 2 looks for
//! a codeword of `C2` (typical `V`-sequences) jointly typical with its block
//! and sends the bin `C(j)`. The decoder searches `B(i) × C(j)` for the
//! unique pair that is jointly typical under `p(x1, v)` with the widened
//! `ε̃ = K ε`, returns `x1` exactly and reconstructs `x̂2` letter by letter.
//!
//! The bin indices define a bipartite graph: `(i, j)` is an edge when some
//! pair in `B(i) × C(j)` is jointly `ε`-typical. Its degrees are checked
//! against the nominal `2^{n R2'}` and `2^{n R1'}`.
//!
//! Sequences are packed into `u64` (mixed radix, position 0 most
//! significant), so `|alphabet|^n` must fit in 64 bits.

use std::ops::ControlFlow;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use crate::bigraph::{check_degree_sequences, BipartiteGraph, SemiRegularParams, SemiRegularReport};
use crate::error::{Error, Result};
use crate::prob::{self, CondPmf, JointPmf};
use crate::region::{expected_distortion, DistortionMatrix, RatePoint, ReconMap};
use crate::seed::{derive_seed, splitmix64};
use crate::typicality::{self, TypicalityChecker, TypicalityParams, TypicalityRule};

const STREAM_CODEBOOK1: u64 = 1;
const STREAM_CODEBOOK2: u64 = 2;
const STREAM_SHUFFLE1: u64 = 3;
const STREAM_SHUFFLE2: u64 = 4;
const STREAM_TRIAL: u64 = 5;

/// Typical sets up to this size are listed exhaustively and sampled
/// exactly; larger ones are sampled by rejection from i.i.d. draws.
pub const EXACT_SAMPLING_LIMIT: u64 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub r1: f64,
    pub r2: f64,
    pub r1p: f64,
    pub r2p: f64,
}

impl Rates {
    /// Every coordinate of `pt` raised by `margin`.
    pub fn from_point(pt: &RatePoint, margin: f64) -> Self {
        Self {
            r1: pt.r1 + margin,
            r2: pt.r2 + margin,
            r1p: pt.r1p + margin,
            r2p: pt.r2p + margin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodecLimits {
    /// Largest codebook, in codewords.
    pub codebook: u64,
    /// Largest number of bins per side.
    pub bins: u64,
    /// Largest number of typicality lookups per side for graph induction.
    pub graph_work: f64,
    /// Largest edge set [`induce_graph`] will materialize.
    pub graph_edges: u64,
}

impl Default for CodecLimits {
    fn default() -> Self {
        Self {
            codebook: 1 << 22,
            bins: 1 << 24,
            graph_work: 1e8,
            graph_edges: 1 << 24,
        }
    }
}

fn default_k() -> f64 {
    3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    pub n: usize,
    pub eps: f64,
    pub eps_prime: f64,
    pub rates: Rates,
    #[serde(default = "default_k")]
    pub markov_k: f64,
    pub seed: u64,
    #[serde(default)]
    pub rule: TypicalityRule,
    #[serde(default)]
    pub limits: CodecLimits,
}

impl CodecConfig {
    pub fn new(n: usize, eps: f64, eps_prime: f64, rates: Rates, seed: u64) -> Self {
        Self {
            n,
            eps,
            eps_prime,
            rates,
            markov_k: default_k(),
            seed,
            rule: TypicalityRule::default(),
            limits: CodecLimits::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return bad(format!("eps must be finite and nonnegative, got {}", self.eps));
        }
        if !(self.eps_prime > 0.0) {
            return bad(format!("eps_prime must be positive, got {}", self.eps_prime));
        }
        if !(self.markov_k > 0.0) {
            return bad(format!("markov_k must be positive, got {}", self.markov_k));
        }
        let r = &self.rates;
        for (name, v) in [("r1", r.r1), ("r2", r.r2), ("r1p", r.r1p), ("r2p", r.r2p)] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("rate {name} must be finite and nonnegative, got {v}"));
            }
        }
        if (r.r1 + r.r2p - r.r1p - r.r2).abs() > 1e-9 {
            return bad(format!(
                "rates violate r1 + r2p = r1p + r2 ({} vs {})",
                r.r1 + r.r2p,
                r.r1p + r.r2
            ));
        }
        Ok(())
    }

    pub fn eps_tilde(&self) -> f64 {
        self.markov_k * self.eps
    }

    fn params(&self, eps: f64) -> TypicalityParams {
        TypicalityParams {
            epsilon: eps,
            n: self.n,
            rule: self.rule,
        }
    }
}

/// Source, test channel, reconstruction and distortion of one experiment.
#[derive(Debug, Clone)]
pub struct SourceModel {
    pub source: JointPmf,
    pub aux: CondPmf,
    pub recon: ReconMap,
    pub distortion: DistortionMatrix,
    /// `p(x1, x2, v)`.
    pub joint: JointPmf,
}

impl SourceModel {
    pub fn new(source: JointPmf, aux: CondPmf, recon: ReconMap, distortion: DistortionMatrix) -> Result<Self> {
        let joint = prob::compose_markov(&source, &aux)?;
        // Validates shapes.
        expected_distortion(&source, &aux, &recon, &distortion)?;
        Ok(Self {
            source,
            aux,
            recon,
            distortion,
            joint,
        })
    }

    /// `E d(X2, X̂2)` under the composed joint.
    pub fn expected_distortion(&self) -> f64 {
        expected_distortion(&self.source, &self.aux, &self.recon, &self.distortion).expect("validated")
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.joint.axis(0).size(), self.joint.axis(1).size(), self.joint.axis(2).size())
    }
}

/// Packed word to distinct word id: a direct table when the sequence space
/// is small, a hash map otherwise.
#[derive(Debug, Clone)]
enum WordIndex {
    Dense(Vec<u32>),
    Sparse(FxHashMap<u64, u32>),
}

const DENSE_INDEX_LIMIT: u128 = 1 << 24;

impl WordIndex {
    fn new(map: FxHashMap<u64, u32>, base: usize, n: usize) -> Self {
        let space = (base as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if space > DENSE_INDEX_LIMIT {
            return WordIndex::Sparse(map);
        }
        let mut table = vec![u32::MAX; space as usize];
        for (w, d) in map {
            table[w as usize] = d;
        }
        WordIndex::Dense(table)
    }

    fn get(&self, word: u64) -> Option<u32> {
        match self {
            WordIndex::Dense(t) => t.get(word as usize).copied().filter(|&d| d != u32::MAX),
            WordIndex::Sparse(m) => m.get(&word).copied(),
        }
    }
}

/// A codebook with its bin partition. Codeword `k` sits in bin `bin_of[k]`.
#[derive(Debug, Clone)]
pub struct Codebook {
    n: usize,
    base: usize,
    words: Vec<u64>,
    bin_of: Vec<u32>,
    n_bins: usize,
    /// Codeword indices ordered by (bin, index), with their bins alongside.
    bin_members: Vec<u32>,
    bin_keys: Vec<u32>,
    /// Distinct word id of each codeword.
    word_id: Vec<u32>,
    /// Distinct words, unpacked, `n` symbols each.
    distinct: Vec<u8>,
    distinct_index: WordIndex,
    /// Codeword indices per distinct word (CSR).
    occ_offsets: Vec<usize>,
    occ_members: Vec<u32>,
}

impl Codebook {
    fn build(n: usize, base: usize, words: Vec<u64>, n_bins: usize, shuffle_seed: u64) -> Self {
        let size = words.len();
        let mut order: Vec<u32> = (0..size as u32).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let mut bin_of = vec![0u32; size];
        for (pos, &k) in order.iter().enumerate() {
            bin_of[k as usize] = ((pos as u128 * n_bins as u128) / size as u128) as u32;
        }
        Self::with_bins(n, base, words, bin_of, n_bins)
    }

    fn with_bins(n: usize, base: usize, words: Vec<u64>, bin_of: Vec<u32>, n_bins: usize) -> Self {
        let size = words.len();
        let mut bin_members: Vec<u32> = (0..size as u32).collect();
        bin_members.sort_by_key(|&k| (bin_of[k as usize], k));
        let bin_keys = bin_members.iter().map(|&k| bin_of[k as usize]).collect();
        let mut word_id = Vec::with_capacity(size);
        let mut distinct_words = Vec::new();
        let mut ids: FxHashMap<u64, u32> = FxHashMap::default();
        for &w in &words {
            let next = ids.len() as u32;
            let id = *ids.entry(w).or_insert_with(|| {
                distinct_words.push(w);
                next
            });
            word_id.push(id);
        }
        let mut distinct = vec![0u8; distinct_words.len() * n];
        for (d, &w) in distinct_words.iter().enumerate() {
            unpack(w, base, &mut distinct[d * n..(d + 1) * n]);
        }
        let (occ_offsets, occ_members) = csr(distinct_words.len(), word_id.iter().map(|&d| d as usize));
        Self {
            n,
            base,
            words,
            bin_of,
            n_bins,
            bin_members,
            bin_keys,
            word_id,
            distinct,
            distinct_index: WordIndex::new(ids, base, n),
            occ_offsets,
            occ_members,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn distinct_count(&self) -> usize {
        self.occ_offsets.len() - 1
    }

    /// Codeword `k` as symbol indices.
    pub fn word(&self, k: usize) -> Vec<u8> {
        let mut out = vec![0u8; self.n];
        unpack(self.words[k], self.base, &mut out);
        out
    }

    pub fn bin_of(&self, k: usize) -> u32 {
        self.bin_of[k]
    }

    /// Codeword indices in bin `b`, ascending.
    pub fn bin(&self, b: usize) -> &[u32] {
        let b = b as u32;
        let lo = self.bin_keys.partition_point(|&k| k < b);
        let hi = lo + self.bin_keys[lo..].partition_point(|&k| k == b);
        &self.bin_members[lo..hi]
    }

    /// Whether some bin holds two distinct words.
    fn has_mixed_bins(&self) -> bool {
        self.bin_members.windows(2).zip(self.bin_keys.windows(2)).any(|(m, k)| {
            k[0] == k[1] && self.word_id[m[0] as usize] != self.word_id[m[1] as usize]
        })
    }

    fn distinct_word(&self, d: usize) -> &[u8] {
        &self.distinct[d * self.n..(d + 1) * self.n]
    }

    fn occurrences(&self, d: usize) -> &[u32] {
        &self.occ_members[self.occ_offsets[d]..self.occ_offsets[d + 1]]
    }

    /// Distinct word ids present in bin `b`, ascending.
    fn bin_distinct(&self, b: usize) -> Vec<u32> {
        let mut ids: Vec<u32> = self.bin(b).iter().map(|&k| self.word_id[k as usize]).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Bins holding distinct word `d`, ascending.
    fn bins_of_distinct(&self, d: usize) -> Vec<u32> {
        let mut bins: Vec<u32> = self.occurrences(d).iter().map(|&k| self.bin_of[k as usize]).collect();
        bins.sort_unstable();
        bins.dedup();
        bins
    }
}

fn csr(rows: usize, keys: impl Iterator<Item = usize> + Clone) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0usize; rows + 1];
    for k in keys.clone() {
        offsets[k + 1] += 1;
    }
    for r in 0..rows {
        offsets[r + 1] += offsets[r];
    }
    let mut fill = offsets.clone();
    let mut members = vec![0u32; offsets[rows]];
    for (i, k) in keys.enumerate() {
        members[fill[k]] = i as u32;
        fill[k] += 1;
    }
    (offsets, members)
}

pub(crate) fn pack(symbols: &[u8], base: usize) -> u64 {
    symbols.iter().fold(0u64, |acc, &s| acc * base as u64 + s as u64)
}

pub(crate) fn unpack(mut w: u64, base: usize, out: &mut [u8]) {
    for slot in out.iter_mut().rev() {
        *slot = (w % base as u64) as u8;
        w /= base as u64;
    }
}

/// The two codebooks with their bins, plus the typicality checkers the
/// encoders and decoder share.
#[derive(Debug, Clone)]
pub struct CodebookPair {
    pub c1: Codebook,
    pub c2: Codebook,
    x2_size: usize,
    check_x1x2: TypicalityChecker,
    check_x2v: TypicalityChecker,
    check_x1v: TypicalityChecker,
    check_x1v_wide: TypicalityChecker,
    check_triple_wide: TypicalityChecker,
}

fn exponent(n: usize, rate: f64) -> u32 {
    (n as f64 * rate - 1e-9).ceil().max(0.0) as u32
}

fn capped(what: &str, exp: u32, cap: u64) -> Result<usize> {
    let needed = 2f64.powi(exp as i32);
    if exp >= 63 || needed > cap as f64 {
        return Err(Error::Capacity {
            what: what.to_string(),
            needed,
            cap: cap as f64,
        });
    }
    Ok(1usize << exp)
}

/// `count` sequences drawn independently and uniformly from the typical
/// set of a single-axis PMF.
fn sample_typical(p: &JointPmf, params: &TypicalityParams, count: usize, rng: &mut ChaCha8Rng, what: &str) -> Result<Vec<u64>> {
    let base = p.mass().len();
    let checker = TypicalityChecker::from_params(p, params);
    if !checker.is_satisfiable() {
        return Err(Error::Config(format!(
            "the typical set of {what} is empty at n = {}, eps = {}",
            params.n, params.epsilon
        )));
    }
    let exact = typicality::count_typical_set(p, params, typicality::DEFAULT_ENUMERATION_CAP)
        .ok()
        .filter(|&c| c <= EXACT_SAMPLING_LIMIT);
    if exact.is_some() {
        let set = typicality::typical_packed(p, params, typicality::DEFAULT_ENUMERATION_CAP)?;
        return Ok((0..count).map(|_| set[rng.gen_range(0..set.len())]).collect());
    }
    let dist = WeightedIndex::new(p.mass()).map_err(|e| Error::Config(e.to_string()))?;
    let mut buf = vec![0u8; params.n];
    let mut out = Vec::with_capacity(count);
    let limit = (count as u64).saturating_mul(10_000).max(1_000_000);
    let mut attempts = 0u64;
    while out.len() < count {
        attempts += 1;
        if attempts > limit {
            return Err(Error::Config(format!(
                "rejection sampling of typical {what} sequences accepted {} of {attempts} draws",
                out.len()
            )));
        }
        for s in buf.iter_mut() {
            *s = dist.sample(rng) as u8;
        }
        if checker.admits(&[&buf]) {
            out.push(pack(&buf, base));
        }
    }
    Ok(out)
}

/// Draws `C1` from the typical `X1`-sequences and `C2` from the typical
/// `V`-sequences, `2^{⌈n(H(X1)+ε)⌉}` and `2^{⌈n(I(V;X2)+ε)⌉}` codewords,
/// and bins each into `2^{⌈n R⌉}` contiguous blocks after a seeded shuffle.
pub fn generate_codebooks(model: &SourceModel, cfg: &CodecConfig) -> Result<CodebookPair> {
    cfg.validate()?;
    let (n1, n2, nv) = model.sizes();
    for (name, k) in [("X1", n1), ("X2", n2), ("V", nv)] {
        if (cfg.n as f64) * (k as f64).log2() > 64.0 || k > 255 {
            return Err(Error::Config(format!(
                "sequences over {name} (|{name}| = {k}) of length {} do not fit in 64 bits",
                cfg.n
            )));
        }
    }
    let p_x1 = model.joint.marginal(&[0])?;
    let p_v = model.joint.marginal(&[2])?;
    let h_x1 = prob::entropy(&model.joint, &[0])?;
    let i_vx2 = prob::mutual_information(&model.joint, &[2], &[1])?;
    let e1 = exponent(cfg.n, h_x1 + cfg.eps);
    let e2 = exponent(cfg.n, i_vx2 + cfg.eps);
    let b1 = exponent(cfg.n, cfg.rates.r1);
    let b2 = exponent(cfg.n, cfg.rates.r2);
    let size1 = capped("codebook C1", e1, cfg.limits.codebook)?;
    let size2 = capped("codebook C2", e2, cfg.limits.codebook)?;
    let bins1 = capped("bins of C1", b1, cfg.limits.bins)?;
    let bins2 = capped("bins of C2", b2, cfg.limits.bins)?;
    let params = cfg.params(cfg.eps);
    let mut rng1 = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_CODEBOOK1, 0));
    let mut rng2 = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_CODEBOOK2, 0));
    let words1 = sample_typical(&p_x1, &params, size1, &mut rng1, "X1")?;
    let words2 = sample_typical(&p_v, &params, size2, &mut rng2, "V")?;
    let c1 = Codebook::build(cfg.n, n1, words1, bins1, derive_seed(cfg.seed, STREAM_SHUFFLE1, 0));
    let c2 = Codebook::build(cfg.n, nv, words2, bins2, derive_seed(cfg.seed, STREAM_SHUFFLE2, 0));
    CodebookPair::assemble(model, cfg, c1, c2, n2)
}

impl CodebookPair {
    /// Codebooks with explicit contents and bin assignments, for worked
    /// examples and tests. Each entry is `(sequence, bin)`; codewords need
    /// not be typical.
    pub fn from_parts(model: &SourceModel, cfg: &CodecConfig, c1: &[(Vec<u8>, u32)], bins1: usize, c2: &[(Vec<u8>, u32)], bins2: usize) -> Result<Self> {
        cfg.validate()?;
        let (n1, n2, nv) = model.sizes();
        let book = |entries: &[(Vec<u8>, u32)], base: usize, bins: usize, what: &str| -> Result<Codebook> {
            for (w, b) in entries {
                if w.len() != cfg.n || w.iter().any(|&s| s as usize >= base) || *b as usize >= bins {
                    return Err(Error::Config(format!("malformed {what} entry {w:?} in bin {b}")));
                }
            }
            let words = entries.iter().map(|(w, _)| pack(w, base)).collect();
            let bin_of = entries.iter().map(|(_, b)| *b).collect();
            Ok(Codebook::with_bins(cfg.n, base, words, bin_of, bins))
        };
        let c1 = book(c1, n1, bins1, "C1")?;
        let c2 = book(c2, nv, bins2, "C2")?;
        Self::assemble(model, cfg, c1, c2, n2)
    }

    fn assemble(model: &SourceModel, cfg: &CodecConfig, c1: Codebook, c2: Codebook, x2_size: usize) -> Result<Self> {
        let params = cfg.params(cfg.eps);
        let wide = cfg.params(cfg.eps_tilde());
        let x1v = model.joint.marginal(&[0, 2])?;
        Ok(Self {
            c1,
            c2,
            x2_size,
            check_x1x2: TypicalityChecker::from_params(&model.source, &params),
            check_x2v: TypicalityChecker::from_params(&model.joint.marginal(&[1, 2])?, &params),
            check_x1v: TypicalityChecker::from_params(&x1v, &params),
            check_x1v_wide: TypicalityChecker::from_params(&x1v, &wide),
            check_triple_wide: TypicalityChecker::from_params(&model.joint, &wide),
        })
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Jointly typical partners of a fixed sequence among the distinct words of
/// a codebook, under a two-axis PMF whose axis `given` holds the fixed
/// sequence. Either walks the conditionally typical sequences and looks
/// them up, or scans the codebook, whichever is cheaper.
struct PartnerFinder<'a> {
    checker: &'a TypicalityChecker,
    given: usize,
    n_given: usize,
    n_other: usize,
    other: &'a Codebook,
    /// Per distinct word of `other`, one position mask per symbol.
    masks: Vec<u64>,
}

impl<'a> PartnerFinder<'a> {
    fn new(checker: &'a TypicalityChecker, given: usize, n_given: usize, other: &'a Codebook) -> Self {
        let n_other = other.base;
        let mut masks = vec![0u64; other.distinct_count() * n_other];
        for d in 0..other.distinct_count() {
            for (m, &o) in other.distinct_word(d).iter().enumerate() {
                masks[d * n_other + o as usize] |= 1 << m;
            }
        }
        Self {
            checker,
            given,
            n_given,
            n_other,
            other,
            masks,
        }
    }

    fn symbol_masks(x: &[u8], size: usize) -> Vec<u64> {
        let mut out = vec![0u64; size];
        for (m, &g) in x.iter().enumerate() {
            out[g as usize] |= 1 << m;
        }
        out
    }

    fn cell(&self, g: usize, o: usize) -> usize {
        if self.given == 0 {
            g * self.n_other + o
        } else {
            o * self.n_given + g
        }
    }

    fn rows(&self, x: &[u8]) -> Vec<u32> {
        let mut rows = vec![0u32; self.n_given];
        for &s in x {
            rows[s as usize] += 1;
        }
        rows
    }

    /// Number of sequences (codewords or not) jointly typical with `x`.
    fn conditional_count(&self, x: &[u8]) -> f64 {
        let Some(w) = self.checker.windows() else { return 0.0 };
        let mut total = 1.0;
        for (g, &r) in self.rows(x).iter().enumerate() {
            let r = r as usize;
            let mut f = vec![0.0; r + 1];
            f[0] = 1.0;
            for o in 0..self.n_other {
                let (lo, hi) = w[self.cell(g, o)];
                let mut next = vec![0.0; r + 1];
                for s in 0..=r {
                    if f[s] == 0.0 {
                        continue;
                    }
                    for k in lo as usize..=(hi as usize).min(r - s) {
                        next[s + k] += f[s] * binomial(s + k, k);
                    }
                }
                f = next;
            }
            total *= f[r];
        }
        total
    }

    fn cost(&self, x: &[u8]) -> f64 {
        self.conditional_count(x).min(self.other.distinct_count() as f64)
    }

    /// Distinct word ids of the other codebook, in no particular order.
    fn find(&self, x: &[u8], out: &mut Vec<u32>) {
        let mut hits = Vec::new();
        self.visit(x, out, |d| {
            hits.push(d);
            ControlFlow::Continue(())
        });
        *out = hits;
    }

    /// Calls `visit` on each partner id until it returns `Break`. The scan
    /// path stops early; the walk path materializes its (small) set first.
    fn visit(&self, x: &[u8], out: &mut Vec<u32>, mut visit: impl FnMut(u32) -> ControlFlow<()>) {
        out.clear();
        let Some(w) = self.checker.windows() else { return };
        if self.conditional_count(x) <= self.other.distinct_count() as f64 {
            self.walk(w, x, out);
            for &d in out.iter() {
                if visit(d).is_break() {
                    return;
                }
            }
            return;
        }
        let xm = Self::symbol_masks(x, self.n_given);
        let cells: Vec<(usize, usize, u32, u32)> = (0..self.n_given)
            .flat_map(|g| (0..self.n_other).map(move |o| (g, o)))
            .map(|(g, o)| {
                let (lo, hi) = w[self.cell(g, o)];
                (g, o, lo, hi)
            })
            .collect();
        for (d, ym) in self.masks.chunks_exact(self.n_other).enumerate() {
            let ok = cells.iter().all(|&(g, o, lo, hi)| {
                let c = (xm[g] & ym[o]).count_ones();
                lo <= c && c <= hi
            });
            if ok && visit(d as u32).is_break() {
                return;
            }
        }
    }

    /// The conditionally typical set is a product over the rows `{m : x_m = g}`;
    /// each row is enumerated on its own as packed-word contributions.
    fn walk(&self, w: &[(u32, u32)], x: &[u8], out: &mut Vec<u32>) {
        let n = x.len();
        let base = self.n_other as u64;
        let mut place = vec![1u64; n];
        for m in (0..n.saturating_sub(1)).rev() {
            place[m] = place[m + 1] * base;
        }
        let mut rows = Vec::with_capacity(self.n_given);
        for g in 0..self.n_given {
            let positions: Vec<usize> = (0..n).filter(|&m| x[m] as usize == g).collect();
            let windows: Vec<(u32, u32)> = (0..self.n_other).map(|o| w[self.cell(g, o)]).collect();
            let mut sums = Vec::new();
            let mut cnt = vec![0u32; self.n_other];
            row_walk(&positions, &place, &windows, 0, 0, &mut cnt, &mut sums);
            if sums.is_empty() {
                return;
            }
            rows.push(sums);
        }
        self.combine(&rows, out);
    }

    fn combine(&self, rows: &[Vec<u64>], out: &mut Vec<u32>) {
        let (last, head) = rows.split_last().expect("at least one row");
        let mut idx = vec![0usize; head.len()];
        loop {
            let prefix: u64 = head.iter().zip(&idx).map(|(r, &i)| r[i]).sum();
            out.extend(last.iter().filter_map(|&c| self.other.distinct_index.get(prefix + c)));
            let mut k = head.len();
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < head[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

/// Assignments of other-axis symbols to `positions` whose symbol counts
/// land in `windows`, as sums of `symbol * place[position]`.
fn row_walk(positions: &[usize], place: &[u64], windows: &[(u32, u32)], k: usize, sum: u64, cnt: &mut [u32], out: &mut Vec<u64>) {
    let rem = (positions.len() - k) as u32;
    let (mut need, mut room) = (0u32, 0u32);
    for (c, &(lo, hi)) in cnt.iter().zip(windows) {
        need += lo.saturating_sub(*c);
        room += hi.saturating_sub(*c);
    }
    if need > rem || rem > room {
        return;
    }
    if k == positions.len() {
        out.push(sum);
        return;
    }
    for o in 0..windows.len() {
        if cnt[o] >= windows[o].1 {
            continue;
        }
        cnt[o] += 1;
        row_walk(positions, place, windows, k + 1, sum + o as u64 * place[positions[k]], cnt, out);
        cnt[o] -= 1;
    }
}

struct BitSet {
    words: Vec<u64>,
    touched: Vec<usize>,
}

impl BitSet {
    fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            touched: Vec::new(),
        }
    }

    /// Sets bit `i`; true if it was clear.
    fn insert(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, 1u64 << (i % 64));
        if self.words[w] & b != 0 {
            return false;
        }
        if self.words[w] == 0 {
            self.touched.push(w);
        }
        self.words[w] |= b;
        true
    }

    fn drain_sorted(&mut self, out: &mut Vec<u32>) {
        self.touched.sort_unstable();
        for &w in &self.touched {
            let mut bits = self.words[w];
            while bits != 0 {
                out.push((w * 64 + bits.trailing_zeros() as usize) as u32);
                bits &= bits - 1;
            }
            self.words[w] = 0;
        }
        self.touched.clear();
    }

    fn clear(&mut self) {
        for &w in &self.touched {
            self.words[w] = 0;
        }
        self.touched.clear();
    }
}

/// Degree sequence of one side of the induced graph, optionally with the
/// neighbour lists.
fn check_work(given: &Codebook, finder: &PartnerFinder, work_cap: f64, what: &str) -> Result<()> {
    let work: f64 = (0..given.distinct_count()).map(|d| finder.cost(given.distinct_word(d))).sum();
    if work > work_cap {
        return Err(Error::Capacity {
            what: format!("graph induction ({what})"),
            needed: work,
            cap: work_cap,
        });
    }
    Ok(())
}

fn side_degrees(given: &Codebook, finder: &PartnerFinder, work_cap: f64, what: &str, neighbours: Option<&mut Vec<Vec<u32>>>) -> Result<Vec<usize>> {
    check_work(given, finder, work_cap, what)?;
    let other = finder.other;
    let other_bins: Vec<Vec<u32>> = (0..other.distinct_count()).map(|d| other.bins_of_distinct(d)).collect();
    // Pure: no bin of the other codebook holds two distinct words, so the
    // bin sets of distinct partners are disjoint.
    let pure = !other.has_mixed_bins();
    let full = other.n_bins();
    // Adds the bins of word `d`; breaks once all bins are hit. With pure
    // bins the sets are disjoint and only their sizes matter.
    let add = |d: u32, bits: &mut BitSet, count: &mut usize, track: bool| {
        if pure && !track {
            *count += other_bins[d as usize].len();
        } else {
            for &b in &other_bins[d as usize] {
                *count += bits.insert(b as usize) as usize;
            }
        }
        if *count == full { ControlFlow::Break(()) } else { ControlFlow::Continue(()) }
    };
    let finish = |bits: &mut BitSet, list: Option<&mut Vec<u32>>| match list {
        Some(l) => bits.drain_sorted(l),
        None => bits.clear(),
    };
    let solo: Vec<usize> = (0..given.distinct_count())
        .into_par_iter()
        .map_init(
            || (Vec::new(), BitSet::new(full)),
            |(out, bits), d| {
                let mut count = 0;
                finder.visit(given.distinct_word(d), out, |p| add(p, bits, &mut count, false));
                bits.clear();
                count
            },
        )
        .collect();
    struct Scratch {
        bits: BitSet,
        seen: BitSet,
        out: Vec<u32>,
    }
    let bin_degree = |i: usize, s: &mut Scratch, list: Option<&mut Vec<u32>>| -> usize {
        let members = given.bin(i);
        let Some(&first) = members.first() else { return 0 };
        if list.is_none() {
            let w0 = given.word_id[first as usize];
            if members.iter().all(|&k| given.word_id[k as usize] == w0) {
                return solo[w0 as usize];
            }
            if members.iter().any(|&k| solo[given.word_id[k as usize] as usize] == full) {
                return full;
            }
        }
        // Partners shared by several members contribute their bins once.
        let mut count = 0;
        let Scratch { bits, seen, out } = s;
        let mut step = |p: u32, bits: &mut BitSet| {
            if seen.insert(p as usize) {
                add(p, bits, &mut count, true)
            } else {
                ControlFlow::Continue(())
            }
        };
        for w in given.bin_distinct(i) {
            let mut saturated = false;
            finder.visit(given.distinct_word(w as usize), out, |p| {
                let flow = step(p, bits);
                saturated = flow.is_break();
                flow
            });
            if saturated {
                break;
            }
        }
        seen.clear();
        finish(bits, list);
        count
    };
    let scratch = || Scratch {
        bits: BitSet::new(full),
        seen: BitSet::new(other.distinct_count()),
        out: Vec::new(),
    };
    match neighbours {
        None => Ok((0..given.n_bins())
            .into_par_iter()
            .map_init(scratch, |s, i| bin_degree(i, s, None))
            .collect()),
        Some(out) => {
            let rows: Vec<(usize, Vec<u32>)> = (0..given.n_bins())
                .into_par_iter()
                .map_init(scratch, |s, i| {
                    let mut list = Vec::new();
                    (bin_degree(i, s, Some(&mut list)), list)
                })
                .collect();
            let (degrees, lists): (Vec<usize>, Vec<Vec<u32>>) = rows.into_iter().unzip();
            *out = lists;
            Ok(degrees)
        }
    }
}

impl CodebookPair {
    fn finders(&self) -> (PartnerFinder<'_>, PartnerFinder<'_>) {
        (
            PartnerFinder::new(&self.check_x1v, 0, self.c1.base, &self.c2),
            PartnerFinder::new(&self.check_x1v, 1, self.c2.base, &self.c1),
        )
    }
}

/// Typicality lookups [`induced_degrees`] would perform.
pub fn graph_work(cb: &CodebookPair) -> f64 {
    let (f1, f2) = cb.finders();
    let side = |given: &Codebook, f: &PartnerFinder| -> f64 { (0..given.distinct_count()).map(|d| f.cost(given.distinct_word(d))).sum() };
    side(&cb.c1, &f1) + side(&cb.c2, &f2)
}

/// Degrees of both sides of the induced graph, without building its edge
/// set. `(i, j)` is an edge iff some pair in `B(i) × C(j)` is jointly
/// `ε`-typical under `p(x1, v)`.
pub fn induced_degrees(cb: &CodebookPair, cfg: &CodecConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    let (f1, f2) = cb.finders();
    if !cb.c1.has_mixed_bins() && !cb.c2.has_mixed_bins() {
        check_work(&cb.c1, &f1, cfg.limits.graph_work, "first side")?;
        check_work(&cb.c2, &f2, cfg.limits.graph_work, "second side")?;
        return Ok(unmixed_degrees(cb, &f1));
    }
    let d1 = side_degrees(&cb.c1, &f1, cfg.limits.graph_work, "first side", None)?;
    let d2 = side_degrees(&cb.c2, &f2, cfg.limits.graph_work, "second side", None)?;
    Ok((d1, d2))
}

/// Both degree sequences from one pass over the partner relation. Valid
/// when every bin holds copies of a single word: the bins of distinct words
/// are then disjoint, and a bin's degree is the number of bins its word's
/// partners occupy.
fn unmixed_degrees(cb: &CodebookPair, f1: &PartnerFinder) -> (Vec<usize>, Vec<usize>) {
    let spread = |c: &Codebook| -> Vec<usize> { (0..c.distinct_count()).map(|d| c.bins_of_distinct(d).len()).collect() };
    let (spread1, spread2) = (spread(&cb.c1), spread(&cb.c2));
    let n2 = cb.c2.distinct_count();
    let (solo1, solo2) = (0..cb.c1.distinct_count())
        .into_par_iter()
        .fold(
            || (Vec::new(), vec![0usize; n2], Vec::new()),
            |(mut solo1, mut solo2, mut out), d| {
                let mut count = 0;
                f1.visit(cb.c1.distinct_word(d), &mut out, |p| {
                    count += spread2[p as usize];
                    solo2[p as usize] += spread1[d];
                    ControlFlow::Continue(())
                });
                solo1.push((d, count));
                (solo1, solo2, out)
            },
        )
        .map(|(a, b, _)| (a, b))
        .reduce(
            || (Vec::new(), vec![0usize; n2]),
            |(mut a1, mut a2), (b1, b2)| {
                a1.extend(b1);
                a2.iter_mut().zip(b2).for_each(|(x, y)| *x += y);
                (a1, a2)
            },
        );
    let mut by_word = vec![0usize; cb.c1.distinct_count()];
    for (d, c) in solo1 {
        by_word[d] = c;
    }
    let per_bin = |c: &Codebook, solo: &[usize]| -> Vec<usize> {
        (0..c.n_bins())
            .map(|i| c.bin(i).first().map_or(0, |&k| solo[c.word_id[k as usize] as usize]))
            .collect()
    };
    (per_bin(&cb.c1, &by_word), per_bin(&cb.c2, &solo2))
}

/// The induced bin-index graph itself.
pub fn induce_graph(cb: &CodebookPair, cfg: &CodecConfig) -> Result<BipartiteGraph> {
    let (f1, _) = cb.finders();
    let degrees = side_degrees(&cb.c1, &f1, cfg.limits.graph_work, "first side", None)?;
    let edges: usize = degrees.iter().sum();
    if edges as f64 > cfg.limits.graph_edges as f64 {
        return Err(Error::Capacity {
            what: "induced graph edges".into(),
            needed: edges as f64,
            cap: cfg.limits.graph_edges as f64,
        });
    }
    let mut lists = Vec::with_capacity(cb.c1.n_bins());
    side_degrees(&cb.c1, &f1, cfg.limits.graph_work, "first side", Some(&mut lists))?;
    let edges = lists
        .iter()
        .enumerate()
        .flat_map(|(i, l)| l.iter().map(move |&j| (i as u32, j)))
        .collect();
    BipartiteGraph::new(cb.c1.n_bins(), cb.c2.n_bins(), edges)
}

fn degree_ok(degree: usize, n: usize, rate: f64, eps_prime: f64) -> bool {
    degree > 0 && ((degree as f64).log2() / n as f64 - rate).abs() <= eps_prime + 1e-12
}

/// `(E1, E2)` from degree sequences: some first-side degree strays from
/// `2^{n R2'}` by more than a factor `2^{n ε'}`, or some second-side degree
/// from `2^{n R1'}`. Degree 0 always counts as a violation.
pub fn degree_events(deg1: &[usize], deg2: &[usize], cfg: &CodecConfig) -> (bool, bool) {
    let e1 = deg1.iter().any(|&d| !degree_ok(d, cfg.n, cfg.rates.r2p, cfg.eps_prime));
    let e2 = deg2.iter().any(|&d| !degree_ok(d, cfg.n, cfg.rates.r1p, cfg.eps_prime));
    (e1, e2)
}

pub fn check_degree_events(g: &BipartiteGraph, cfg: &CodecConfig) -> (bool, bool) {
    let (d1, d2) = g.degrees();
    degree_events(&d1, &d2, cfg)
}

/// Nearly semi-regular parameters `(2^{nR1}, 2^{nR2}, 2^{nR1'}, 2^{nR2'}, 2^{nε'})`,
/// with vertex counts taken from the quantized bin counts.
pub fn semi_regular_params(cb: &CodebookPair, cfg: &CodecConfig) -> Result<SemiRegularParams> {
    let n = cfg.n as f64;
    SemiRegularParams::from_exponents(
        (cb.c1.n_bins() as f64).log2(),
        (cb.c2.n_bins() as f64).log2(),
        n * cfg.rates.r1p,
        n * cfg.rates.r2p,
        n * cfg.eps_prime,
    )
}

/// Output of one encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Encoded {
    pub bin: u32,
    /// Matching codeword, or `None` when the index was drawn at random.
    pub codeword: Option<u32>,
}

/// Bin of the first codeword equal to `x1`; a uniformly random bin if none.
pub fn encode1<R: Rng>(x1: &[u8], cb: &CodebookPair, rng: &mut R) -> Encoded {
    match cb.c1.distinct_index.get(pack(x1, cb.c1.base)) {
        Some(d) => {
            let k = cb.c1.occurrences(d as usize)[0];
            Encoded {
                bin: cb.c1.bin_of(k as usize),
                codeword: Some(k),
            }
        }
        None => Encoded {
            bin: rng.gen_range(0..cb.c1.n_bins() as u32),
            codeword: None,
        },
    }
}

/// Bin of the jointly typical codeword that comes first in the scan order
/// fixed by `salt`; a uniformly random bin if there is none.
///
/// The scan order ranks codeword `k` by `splitmix64(salt ^ k)`, which is a
/// seeded permutation of the codebook.
pub fn encode2<R: Rng>(x2: &[u8], cb: &CodebookPair, salt: u64, rng: &mut R) -> Encoded {
    let finder = PartnerFinder::new(&cb.check_x2v, 0, cb.x2_size, &cb.c2);
    let mut partners = Vec::new();
    finder.find(x2, &mut partners);
    let mut best: Option<(u64, u32)> = None;
    for &d in &partners {
        for &k in cb.c2.occurrences(d as usize) {
            let rank = splitmix64(salt ^ k as u64);
            if best.map_or(true, |b| (rank, k) < b) {
                best = Some((rank, k));
            }
        }
    }
    match best {
        Some((_, k)) => Encoded {
            bin: cb.c2.bin_of(k as usize),
            codeword: Some(k),
        },
        None => Encoded {
            bin: rng.gen_range(0..cb.c2.n_bins() as u32),
            codeword: None,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ThisError, Serialize)]
pub enum DecodeError {
    #[error("no jointly typical pair in the bin product")]
    NoCandidate,
    #[error("{0} jointly typical pairs in the bin product")]
    Ambiguous(usize),
}

/// Reconstruction `(x̂1, x̂2)` from the bin pair `(i, j)`.
pub fn decode(i: u32, j: u32, cb: &CodebookPair, model: &SourceModel) -> std::result::Result<(Vec<u8>, Vec<u8>), DecodeError> {
    let a = cb.c1.bin_distinct(i as usize);
    let b = cb.c2.bin_distinct(j as usize);
    let mut found = None;
    let mut count = 0usize;
    let mut counts = Vec::new();
    for &d1 in &a {
        for &d2 in &b {
            let x1 = cb.c1.distinct_word(d1 as usize);
            let v = cb.c2.distinct_word(d2 as usize);
            if cb.check_x1v_wide.admits_with(&[x1, v], &mut counts) {
                count += 1;
                found.get_or_insert((d1, d2));
            }
        }
    }
    match (count, found) {
        (1, Some((d1, d2))) => {
            let x1 = cb.c1.distinct_word(d1 as usize).to_vec();
            let v = cb.c2.distinct_word(d2 as usize);
            let x2 = x1.iter().zip(v).map(|(&a, &b)| model.recon.get(a as usize, b as usize) as u8).collect();
            Ok((x1, x2))
        }
        (0, _) => Err(DecodeError::NoCandidate),
        (c, _) => Err(DecodeError::Ambiguous(c)),
    }
}

/// Per-trial record. `e6` and `e7` are only evaluated when both encoders
/// found codewords.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub e3: bool,
    pub e4: bool,
    pub e5: bool,
    pub e6: Option<bool>,
    pub e7: Option<bool>,
    pub decode: std::result::Result<(), DecodeError>,
    /// Both encoders matched and the decoder returned a pair.
    pub success: bool,
    /// Decoded `x̂1` equals the source block.
    pub lossless: bool,
    pub distortion_x1: f64,
    pub distortion_x2: f64,
}

fn trial(t: u64, cb: &CodebookPair, model: &SourceModel, cfg: &CodecConfig, source_dist: &WeightedIndex<f64>) -> TrialResult {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_TRIAL, t));
    let n = cfg.n;
    let n2 = model.source.axis(1).size();
    let (mut x1, mut x2) = (vec![0u8; n], vec![0u8; n]);
    for m in 0..n {
        let s = source_dist.sample(&mut rng);
        x1[m] = (s / n2) as u8;
        x2[m] = (s % n2) as u8;
    }
    let salt = rng.gen::<u64>();
    let e3 = !cb.check_x1x2.admits(&[&x1, &x2]);
    let enc1 = encode1(&x1, cb, &mut rng);
    let enc2 = encode2(&x2, cb, salt, &mut rng);
    let (e4, e5) = (enc1.codeword.is_none(), enc2.codeword.is_none());

    let (mut e6, mut e7) = (None, None);
    if let (Some(_), Some(l)) = (enc1.codeword, enc2.codeword) {
        let v = cb.c2.word(l as usize);
        let mut counts = Vec::new();
        e6 = Some(!cb.check_triple_wide.admits_with(&[&x1, &x2, &v], &mut counts));
        let own = (cb.c1.word_id[enc1.codeword.unwrap() as usize], cb.c2.word_id[l as usize]);
        let mut other = false;
        'outer: for &d1 in &cb.c1.bin_distinct(enc1.bin as usize) {
            for &d2 in &cb.c2.bin_distinct(enc2.bin as usize) {
                if (d1, d2) == own {
                    continue;
                }
                let a = cb.c1.distinct_word(d1 as usize);
                let b = cb.c2.distinct_word(d2 as usize);
                if cb.check_triple_wide.admits_with(&[a, &x2, b], &mut counts) {
                    other = true;
                    break 'outer;
                }
            }
        }
        e7 = Some(other);
    }

    let decoded = decode(enc1.bin, enc2.bin, cb, model);
    let (hat1, hat2) = match &decoded {
        Ok((a, b)) => (a.clone(), b.clone()),
        Err(_) => (vec![0u8; n], vec![0u8; n]),
    };
    let distortion_x1 = x1.iter().zip(&hat1).filter(|(a, b)| a != b).count() as f64 / n as f64;
    let distortion_x2 = x2
        .iter()
        .zip(&hat2)
        .map(|(&a, &b)| model.distortion.get(a as usize, b as usize))
        .sum::<f64>()
        / n as f64;
    let success = !e4 && !e5 && decoded.is_ok();
    TrialResult {
        e3,
        e4,
        e5,
        e6,
        e7,
        lossless: decoded.is_ok() && hat1 == x1,
        decode: decoded.map(|_| ()),
        success,
        distortion_x1,
        distortion_x2,
    }
}

/// Degree statistics of the induced graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub edges: usize,
    pub min_degree1: usize,
    pub max_degree1: usize,
    pub min_degree2: usize,
    pub max_degree2: usize,
    pub e1: bool,
    pub e2: bool,
    pub semi_regular: bool,
}

impl GraphStats {
    pub fn from_degrees(deg1: &[usize], deg2: &[usize], cb: &CodebookPair, cfg: &CodecConfig) -> Result<(Self, SemiRegularReport)> {
        let (e1, e2) = degree_events(deg1, deg2, cfg);
        let report = check_degree_sequences(deg1, deg2, &semi_regular_params(cb, cfg)?);
        let lo = |d: &[usize]| d.iter().copied().min().unwrap_or(0);
        let hi = |d: &[usize]| d.iter().copied().max().unwrap_or(0);
        Ok((
            Self {
                edges: deg1.iter().sum(),
                min_degree1: lo(deg1),
                max_degree1: hi(deg1),
                min_degree2: lo(deg2),
                max_degree2: hi(deg2),
                e1,
                e2,
                semi_regular: report.passed,
            },
            report,
        ))
    }
}

/// Aggregate of a Monte-Carlo run. Event frequencies are fractions of all
/// trials; `e1`/`e2` are 0 or 1 for the run's single graph, or NaN when the
/// graph was too large to induce.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub e5: f64,
    pub e6: f64,
    pub e7: f64,
    pub decode_error_rate: f64,
    pub success_rate: f64,
    /// Successful trials whose `x̂1` differs from the source block.
    pub lossless_violations: usize,
    pub tau_x1: f64,
    pub tau_x2: f64,
    /// Mean `τ_x1` over successful trials only.
    pub tau_x1_on_success: f64,
    pub expected_distortion: f64,
    pub d_max: f64,
    /// Largest `|Σ type · d - D|` over jointly `ε̃`-typical types.
    pub eps_star: f64,
    /// `(1 - P̂(E)) (D + ε*) + P̂(E) d_max`.
    pub distortion_bound: f64,
    pub codebook_sizes: (usize, usize),
    pub bin_counts: (usize, usize),
    pub graph: Option<GraphStats>,
}

/// Extreme distortions over the joint types of `(x1, x2, v)` admitted at
/// `ε̃`, as `(min, max)`; `None` if no type is admitted.
pub fn typical_distortion_range(model: &SourceModel, cfg: &CodecConfig) -> Option<(f64, f64)> {
    let checker = TypicalityChecker::from_params(&model.joint, &cfg.params(cfg.eps_tilde()));
    let windows = checker.windows()?;
    let shape = model.joint.shape();
    let mut idx = vec![0usize; 3];
    let cost: Vec<f64> = (0..windows.len())
        .map(|c| {
            prob::unravel(c, &shape, &mut idx);
            model.distortion.get(idx[1], model.recon.get(idx[0], idx[2]))
        })
        .collect();
    let n = cfg.n;
    // best[s] = (min, max) total cost over cells so far with count sum s.
    let mut best = vec![None::<(f64, f64)>; n + 1];
    best[0] = Some((0.0, 0.0));
    for (c, &(lo, hi)) in windows.iter().enumerate() {
        let mut next = vec![None::<(f64, f64)>; n + 1];
        for s in 0..=n {
            let Some((a, b)) = best[s] else { continue };
            for k in lo as usize..=hi as usize {
                if s + k > n {
                    break;
                }
                let add = k as f64 * cost[c];
                let e = next[s + k].get_or_insert((f64::INFINITY, f64::NEG_INFINITY));
                e.0 = e.0.min(a + add);
                e.1 = e.1.max(b + add);
            }
        }
        best = next;
    }
    best[n].map(|(a, b)| (a / n as f64, b / n as f64))
}

/// Builds codebooks once and runs `trials` independent source blocks.
pub fn run_monte_carlo(model: &SourceModel, cfg: &CodecConfig, trials: usize) -> Result<MonteCarloSummary> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let cb = generate_codebooks(model, cfg)?;
    let graph = match induced_degrees(&cb, cfg) {
        Ok((d1, d2)) => Some(GraphStats::from_degrees(&d1, &d2, &cb, cfg)?.0),
        Err(Error::Capacity { .. }) => None,
        Err(e) => return Err(e),
    };
    let results = run_trials(model, cfg, &cb, trials)?;
    Ok(summarize(model, cfg, &cb, graph, &results))
}

/// Per-trial records for `trials` source blocks against fixed codebooks.
/// Trial `t` draws its block and encoder randomness from a seed derived
/// from `(cfg.seed, t)` alone.
pub fn run_trials(model: &SourceModel, cfg: &CodecConfig, cb: &CodebookPair, trials: usize) -> Result<Vec<TrialResult>> {
    let dist = WeightedIndex::new(model.source.mass()).map_err(|e| Error::Config(e.to_string()))?;
    Ok((0..trials as u64)
        .into_par_iter()
        .map(|t| trial(t, cb, model, cfg, &dist))
        .collect())
}

fn summarize(model: &SourceModel, cfg: &CodecConfig, cb: &CodebookPair, graph: Option<GraphStats>, results: &[TrialResult]) -> MonteCarloSummary {
    let t = results.len() as f64;
    let freq = |f: &dyn Fn(&TrialResult) -> bool| results.iter().filter(|r| f(r)).count() as f64 / t;
    let correct = results.iter().filter(|r| r.success && r.lossless).count() as f64;
    let successes: Vec<&TrialResult> = results.iter().filter(|r| r.success).collect();
    let decode_error_rate = 1.0 - correct / t;
    let d = model.expected_distortion();
    let d_max = model.distortion.max();
    let eps_star = typical_distortion_range(model, cfg).map_or(f64::NAN, |(lo, hi)| (hi - d).max(d - lo));
    let flag = |v: Option<bool>| v.map_or(f64::NAN, |b| if b { 1.0 } else { 0.0 });
    MonteCarloSummary {
        n: cfg.n,
        trials: results.len(),
        seed: cfg.seed,
        e1: flag(graph.as_ref().map(|g| g.e1)),
        e2: flag(graph.as_ref().map(|g| g.e2)),
        e3: freq(&|r| r.e3),
        e4: freq(&|r| r.e4),
        e5: freq(&|r| r.e5),
        e6: freq(&|r| r.e6 == Some(true)),
        e7: freq(&|r| r.e7 == Some(true)),
        decode_error_rate,
        success_rate: successes.len() as f64 / t,
        lossless_violations: successes.iter().filter(|r| !r.lossless).count(),
        tau_x1: results.iter().map(|r| r.distortion_x1).sum::<f64>() / t,
        tau_x2: results.iter().map(|r| r.distortion_x2).sum::<f64>() / t,
        tau_x1_on_success: if successes.is_empty() {
            f64::NAN
        } else {
            successes.iter().map(|r| r.distortion_x1).sum::<f64>() / successes.len() as f64
        },
        expected_distortion: d,
        d_max,
        eps_star,
        distortion_bound: (1.0 - decode_error_rate) * (d + eps_star) + decode_error_rate * d_max,
        codebook_sizes: (cb.c1.len(), cb.c2.len()),
        bin_counts: (cb.c1.n_bins(), cb.c2.n_bins()),
        graph,
    }
}

/// One codebook draw: induced graph, degree events and the semi-regular
/// check with `μ = 2^{n ε'}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeOutcome {
    pub stats: GraphStats,
    pub violations: usize,
}

pub fn degree_experiment(model: &SourceModel, cfg: &CodecConfig) -> Result<DegreeOutcome> {
    let cb = generate_codebooks(model, cfg)?;
    let (d1, d2) = induced_degrees(&cb, cfg)?;
    let (stats, report) = GraphStats::from_degrees(&d1, &d2, &cb, cfg)?;
    Ok(DegreeOutcome {
        stats,
        violations: report.violations.len(),
    })
}
