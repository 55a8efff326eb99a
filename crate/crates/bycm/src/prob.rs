//! Finite-alphabet probability mass functions and the information measures
//! built on them.
//!
//! All logarithms are base 2, so every entropy and mutual information is in
//! bits. The convention `0 · log 0 = 0` is used throughout.
//!
//! A [`JointPmf`] is a dense row-major array over a list of axes, each axis
//! carrying an [`Alphabet`]. Information measures take *axis subsets*
//! (slices of axis positions) so that one joint distribution can answer
//! every question about its marginals:
//!
//! ```
//! use bycm::prob::{self, JointPmf};
//!
//! let p = JointPmf::dsbs(0.2).unwrap();
//! let h_joint = prob::entropy(&p, &[0, 1]).unwrap();
//! let mi = prob::mutual_information(&p, &[0], &[1]).unwrap();
//! assert!((h_joint - (1.0 + prob::binary_entropy(0.2))).abs() < 1e-12);
//! assert!((mi - (1.0 - prob::binary_entropy(0.2))).abs() < 1e-12);
//! ```

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{arg, Error, Result};

/// Entries of a PMF must sum to one within this tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;
/// Deviations from one below this bound are silently renormalized.
pub const RENORMALIZE_LIMIT: f64 = 1e-9;
/// Information quantities in `[-CLAMP_TOLERANCE, 0)` are reported as 0.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

/// Ordered, duplicate-free list of symbol labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return arg("alphabet must contain at least one symbol");
        }
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return arg(format!("alphabet labels must be distinct: {labels:?}"));
        }
        Ok(Self { labels })
    }

    /// Alphabet `{"0", "1", ..., "size-1"}`.
    pub fn indexed(size: usize) -> Self {
        assert!(size >= 1, "alphabet size must be positive");
        Self {
            labels: (0..size).map(|i| i.to_string()).collect(),
        }
    }

    pub fn binary() -> Self {
        Self::indexed(2)
    }

    /// Cartesian product of several alphabets, labels joined with `,`.
    /// Index order is row-major (last factor fastest).
    pub fn product(factors: &[Alphabet]) -> Self {
        let mut labels = vec![String::new()];
        for (k, factor) in factors.iter().enumerate() {
            let mut next = Vec::with_capacity(labels.len() * factor.size());
            for prefix in &labels {
                for l in &factor.labels {
                    if k == 0 {
                        next.push(l.clone());
                    } else {
                        next.push(format!("{prefix},{l}"));
                    }
                }
            }
            labels = next;
        }
        Self { labels }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = Error;
    fn try_from(labels: Vec<String>) -> Result<Self> {
        Alphabet::new(labels)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.labels
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.labels.join(","))
    }
}

pub(crate) fn shape_of(axes: &[Alphabet]) -> Vec<usize> {
    axes.iter().map(Alphabet::size).collect()
}

/// Row-major strides for `shape`.
pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

pub(crate) fn unravel(mut flat: usize, shape: &[usize], out: &mut [usize]) {
    for k in (0..shape.len()).rev() {
        out[k] = flat % shape[k];
        flat /= shape[k];
    }
}

fn ravel(index: &[usize], shape: &[usize]) -> usize {
    index
        .iter()
        .zip(shape)
        .fold(0, |acc, (&i, &s)| acc * s + i)
}

/// Validates mass and returns it renormalized when the deviation is small.
fn normalized(mut mass: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if let Some(bad) = mass.iter().find(|m| !m.is_finite() || **m < 0.0) {
        return arg(format!("{what}: entries must be finite and nonnegative, found {bad}"));
    }
    let total: f64 = mass.iter().sum();
    let dev = (total - 1.0).abs();
    if dev > RENORMALIZE_LIMIT {
        return arg(format!("{what}: entries sum to {total}, expected 1"));
    }
    if dev > NORMALIZATION_TOLERANCE {
        mass.iter_mut().for_each(|m| *m /= total);
    }
    Ok(mass)
}

/// Joint probability mass function over one or more finite alphabets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfRepr", into = "PmfRepr")]
pub struct JointPmf {
    axes: Vec<Alphabet>,
    mass: Vec<f64>,
}

impl JointPmf {
    /// Builds a joint PMF from row-major mass (last axis fastest).
    pub fn new(axes: Vec<Alphabet>, mass: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return arg("a joint PMF needs at least one axis");
        }
        let len: usize = shape_of(&axes).iter().product();
        if mass.len() != len {
            return arg(format!(
                "mass has {} entries, axes require {len}",
                mass.len()
            ));
        }
        let mass = normalized(mass, "joint PMF")?;
        Ok(Self { axes, mass })
    }

    pub fn from_fn(axes: Vec<Alphabet>, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let shape = shape_of(&axes);
        let len: usize = shape.iter().product();
        let mut idx = vec![0; shape.len()];
        let mass = (0..len)
            .map(|flat| {
                unravel(flat, &shape, &mut idx);
                f(&idx)
            })
            .collect();
        Self::new(axes, mass)
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let k = alphabet.size();
        Self {
            axes: vec![alphabet],
            mass: vec![1.0 / k as f64; k],
        }
    }

    /// Single binary axis with `P(1) = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![Alphabet::binary()], vec![1.0 - p, p])
    }

    /// Doubly symmetric binary source: uniform `X1`, `X2 = X1 xor Z` with
    /// `Z ~ Bernoulli(q)`.
    pub fn dsbs(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return arg(format!("crossover must lie in [0, 1], got {q}"));
        }
        Self::new(
            vec![Alphabet::binary(), Alphabet::binary()],
            vec![(1.0 - q) / 2.0, q / 2.0, q / 2.0, (1.0 - q) / 2.0],
        )
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Alphabet {
        &self.axes[k]
    }

    pub fn arity(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        shape_of(&self.axes)
    }

    /// Row-major probabilities.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn prob(&self, index: &[usize]) -> f64 {
        self.mass[ravel(index, &self.shape())]
    }

    fn check_axes(&self, axes: &[usize], what: &str) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &a in axes {
            if a >= self.arity() {
                return arg(format!("{what}: axis {a} out of range (arity {})", self.arity()));
            }
            if !seen.insert(a) {
                return arg(format!("{what}: axis {a} listed twice"));
            }
        }
        Ok(())
    }

    /// Marginal over `axes`, in the order given.
    pub fn marginal(&self, axes: &[usize]) -> Result<JointPmf> {
        if axes.is_empty() {
            return arg("marginal over an empty axis set");
        }
        self.check_axes(axes, "marginal")?;
        let shape = self.shape();
        let sub_axes: Vec<Alphabet> = axes.iter().map(|&a| self.axes[a].clone()).collect();
        let sub_shape = shape_of(&sub_axes);
        let sub_strides = strides(&sub_shape);
        let mut out = vec![0.0; sub_shape.iter().product()];
        let mut idx = vec![0; shape.len()];
        for (flat, &m) in self.mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            unravel(flat, &shape, &mut idx);
            let target: usize = axes.iter().zip(&sub_strides).map(|(&a, &s)| idx[a] * s).sum();
            out[target] += m;
        }
        Ok(JointPmf {
            axes: sub_axes,
            mass: out,
        })
    }

    /// Appends the axes of `cond` to this joint, where `cond` conditions on
    /// the axes listed in `given`: `p(..., y) = p(...) cond(y | given)`.
    pub fn extend(&self, given: &[usize], cond: &CondPmf) -> Result<JointPmf> {
        self.check_axes(given, "extend")?;
        if given.len() != cond.from.len()
            || given.iter().zip(&cond.from).any(|(&g, a)| &self.axes[g] != a)
        {
            return arg("conditional's conditioning alphabets do not match the given axes");
        }
        let shape = self.shape();
        let from_shape = shape_of(&cond.from);
        let to_len = cond.to_len();
        let mut idx = vec![0; shape.len()];
        let mut from_idx = vec![0; given.len()];
        let mut mass = Vec::with_capacity(self.mass.len() * to_len);
        for (flat, &m) in self.mass.iter().enumerate() {
            unravel(flat, &shape, &mut idx);
            for (k, &g) in given.iter().enumerate() {
                from_idx[k] = idx[g];
            }
            let row = cond.row(ravel(&from_idx, &from_shape));
            mass.extend(row.iter().map(|c| m * c));
        }
        let mut axes = self.axes.clone();
        axes.extend(cond.to.iter().cloned());
        Ok(JointPmf { axes, mass })
    }

    /// Conditional `p(target | given)`. Rows whose conditioning mass is zero
    /// are set uniform so that the result is always a valid [`CondPmf`].
    pub fn conditional(&self, target: &[usize], given: &[usize]) -> Result<CondPmf> {
        if target.is_empty() {
            return arg("conditional with an empty target");
        }
        let mut all = given.to_vec();
        all.extend_from_slice(target);
        self.check_axes(&all, "conditional")?;
        let joint = self.marginal(&all)?;
        let from: Vec<Alphabet> = given.iter().map(|&a| self.axes[a].clone()).collect();
        let to: Vec<Alphabet> = target.iter().map(|&a| self.axes[a].clone()).collect();
        let to_len: usize = shape_of(&to).iter().product();
        let mut mass = joint.mass;
        for row in mass.chunks_mut(to_len) {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|m| *m /= total);
            } else {
                row.iter_mut().for_each(|m| *m = 1.0 / to_len as f64);
            }
        }
        Ok(CondPmf { from, to, mass })
    }

    /// Reorders axes so that new axis `k` is old axis `order[k]`.
    pub fn permute(&self, order: &[usize]) -> Result<JointPmf> {
        if order.len() != self.arity() {
            return arg("permutation must list every axis exactly once");
        }
        self.marginal(order)
    }

    pub fn total_variation(&self, other: &JointPmf) -> Result<f64> {
        if self.axes != other.axes {
            return arg("total variation between PMFs with different axes");
        }
        Ok(0.5
            * self
                .mass
                .iter()
                .zip(&other.mass)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Flat indices (row-major) of entries with positive mass.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(|(i, _)| i)
    }
}

/// Conditional PMF `p(to | from)`, stored row-major with the conditioning
/// axes outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CondRepr", into = "CondRepr")]
pub struct CondPmf {
    from: Vec<Alphabet>,
    to: Vec<Alphabet>,
    mass: Vec<f64>,
}

impl CondPmf {
    pub fn new(from: Vec<Alphabet>, to: Vec<Alphabet>, mass: Vec<f64>) -> Result<Self> {
        if to.is_empty() {
            return arg("conditional PMF needs at least one target axis");
        }
        let rows: usize = shape_of(&from).iter().product();
        let cols: usize = shape_of(&to).iter().product();
        if mass.len() != rows * cols {
            return arg(format!(
                "conditional mass has {} entries, expected {}",
                mass.len(),
                rows * cols
            ));
        }
        let mut out = Vec::with_capacity(mass.len());
        for (r, row) in mass.chunks(cols).enumerate() {
            let row = normalized(row.to_vec(), &format!("conditional row {r}"))?;
            out.extend(row);
        }
        Ok(Self { from, to, mass: out })
    }

    /// `f(from_index, to_index)` gives each entry.
    pub fn from_fn(
        from: Vec<Alphabet>,
        to: Vec<Alphabet>,
        f: impl Fn(&[usize], &[usize]) -> f64,
    ) -> Result<Self> {
        let fs = shape_of(&from);
        let ts = shape_of(&to);
        let rows: usize = fs.iter().product();
        let cols: usize = ts.iter().product();
        let mut fi = vec![0; fs.len()];
        let mut ti = vec![0; ts.len()];
        let mut mass = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            unravel(r, &fs, &mut fi);
            for c in 0..cols {
                unravel(c, &ts, &mut ti);
                mass.push(f(&fi, &ti));
            }
        }
        Self::new(from, to, mass)
    }

    /// `V = X` on the given alphabet.
    pub fn identity(alphabet: Alphabet) -> Self {
        let k = alphabet.size();
        let mut mass = vec![0.0; k * k];
        for i in 0..k {
            mass[i * k + i] = 1.0;
        }
        Self {
            from: vec![alphabet.clone()],
            to: vec![alphabet],
            mass,
        }
    }

    /// Output fixed to the first symbol of `to`, whatever the input.
    pub fn constant(from: Alphabet, to: Alphabet) -> Self {
        let (r, c) = (from.size(), to.size());
        let mut mass = vec![0.0; r * c];
        for i in 0..r {
            mass[i * c] = 1.0;
        }
        Self {
            from: vec![from],
            to: vec![to],
            mass,
        }
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(
            vec![Alphabet::binary()],
            vec![Alphabet::binary()],
            vec![1.0 - p, p, p, 1.0 - p],
        )
    }

    pub fn from_axes(&self) -> &[Alphabet] {
        &self.from
    }

    pub fn to_axes(&self) -> &[Alphabet] {
        &self.to
    }

    pub fn rows(&self) -> usize {
        shape_of(&self.from).iter().product()
    }

    pub fn to_len(&self) -> usize {
        shape_of(&self.to).iter().product()
    }

    pub fn row(&self, from_flat: usize) -> &[f64] {
        let c = self.to_len();
        &self.mass[from_flat * c..(from_flat + 1) * c]
    }

    pub fn prob(&self, from_flat: usize, to_flat: usize) -> f64 {
        self.row(from_flat)[to_flat]
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }
}

#[inline]
pub(crate) fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Binary entropy function `h(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    -plogp(p) - plogp(1.0 - p)
}

fn shannon(mass: &[f64]) -> f64 {
    -mass.iter().map(|&m| plogp(m)).sum::<f64>()
}

fn clamp_nonnegative(x: f64) -> f64 {
    if (-CLAMP_TOLERANCE..0.0).contains(&x) {
        0.0
    } else {
        x
    }
}

fn disjoint(sets: &[&[usize]]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for set in sets {
        for a in set.iter() {
            if !seen.insert(*a) {
                return arg(format!("axis subsets overlap on axis {a}"));
            }
        }
    }
    Ok(())
}

fn union(sets: &[&[usize]]) -> Vec<usize> {
    sets.iter().flat_map(|s| s.iter().copied()).collect()
}

/// Entropy of the marginal on `axes`, in bits.
pub fn entropy(p: &JointPmf, axes: &[usize]) -> Result<f64> {
    Ok(shannon(&p.marginal(axes)?.mass))
}

/// `H(target | given) = H(target, given) - H(given)`. An empty `given`
/// yields the plain entropy.
pub fn conditional_entropy(p: &JointPmf, target: &[usize], given: &[usize]) -> Result<f64> {
    if target.is_empty() {
        return arg("conditional entropy of an empty target");
    }
    disjoint(&[target, given])?;
    if given.is_empty() {
        return entropy(p, target);
    }
    let both = entropy(p, &union(&[target, given]))?;
    Ok(clamp_nonnegative(both - entropy(p, given)?))
}

/// `I(a; b) = H(a) + H(b) - H(a, b)`.
pub fn mutual_information(p: &JointPmf, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return arg("mutual information needs nonempty axis subsets");
    }
    disjoint(&[a, b])?;
    let joint = entropy(p, &union(&[a, b]))?;
    Ok(clamp_nonnegative(entropy(p, a)? + entropy(p, b)? - joint))
}

/// `I(a; b | given) = H(a | given) - H(a | b, given)`.
pub fn conditional_mutual_information(
    p: &JointPmf,
    a: &[usize],
    b: &[usize],
    given: &[usize],
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return arg("conditional mutual information needs nonempty a and b");
    }
    disjoint(&[a, b, given])?;
    let h_a_given = conditional_entropy(p, a, given)?;
    let h_a_bgiven = conditional_entropy(p, a, &union(&[b, given]))?;
    Ok(clamp_nonnegative(h_a_given - h_a_bgiven))
}

/// Kullback-Leibler divergence `D(p || q)` in bits.
///
/// Returns `f64::INFINITY` when `p` puts mass where `q` does not.
pub fn relative_entropy(p: &JointPmf, q: &JointPmf) -> Result<f64> {
    if p.shape() != q.shape() {
        return arg(format!(
            "relative entropy between shapes {:?} and {:?}",
            p.shape(),
            q.shape()
        ));
    }
    Ok(kl_slices(&p.mass, &q.mass))
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    clamp_nonnegative(d)
}

/// Composes a two-axis source `p(x1, x2)` with a test channel `p(v | x2)`,
/// giving `p(x1, x2, v)` with `X1 -> X2 -> V`.
pub fn compose_markov(source: &JointPmf, aux: &CondPmf) -> Result<JointPmf> {
    if source.arity() != 2 {
        return arg("source must be a two-axis joint p(x1, x2)");
    }
    if aux.from.len() != 1 || aux.to.len() != 1 {
        return arg("auxiliary channel must map one axis to one axis");
    }
    if aux.from[0] != source.axes[1] {
        return arg("auxiliary channel must condition on the X2 alphabet");
    }
    source.extend(&[1], aux)
}

/// Largest total-variation distance, over conditioning cells `b` with
/// positive mass, between `p(a, c | b)` and `p(a | b) p(c | b)`.
/// Zero exactly when `a -> b -> c` is a Markov chain.
pub fn markov_violation(p: &JointPmf, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return arg("Markov check needs three nonempty axis subsets");
    }
    disjoint(&[a, b, c])?;
    let order = union(&[b, a, c]);
    let joint = p.marginal(&order)?;
    let shape = joint.shape();
    let nb: usize = shape[..b.len()].iter().product();
    let na: usize = shape[b.len()..b.len() + a.len()].iter().product();
    let nc: usize = shape[b.len() + a.len()..].iter().product();
    let mut worst: f64 = 0.0;
    for block in joint.mass.chunks(na * nc).take(nb) {
        let pb: f64 = block.iter().sum();
        if pb <= 0.0 {
            continue;
        }
        let pa: Vec<f64> = (0..na)
            .map(|i| block[i * nc..(i + 1) * nc].iter().sum::<f64>() / pb)
            .collect();
        let pc: Vec<f64> = (0..nc)
            .map(|k| (0..na).map(|i| block[i * nc + k]).sum::<f64>() / pb)
            .collect();
        let mut tv = 0.0;
        for i in 0..na {
            for k in 0..nc {
                tv += (block[i * nc + k] / pb - pa[i] * pc[k]).abs();
            }
        }
        worst = worst.max(0.5 * tv);
    }
    Ok(worst)
}

/// True when the bipartite support graph of `p(x1, x2)` is connected over
/// the symbols with positive marginal mass, i.e. the pair has no common part.
pub fn check_no_common_part(p: &JointPmf) -> Result<bool> {
    if p.arity() != 2 {
        return arg("common-part check needs a two-axis joint");
    }
    let (n1, n2) = (p.axes[0].size(), p.axes[1].size());
    let mut parent: Vec<usize> = (0..n1 + n2).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut active = vec![false; n1 + n2];
    for i in 0..n1 {
        for j in 0..n2 {
            if p.mass[i * n2 + j] > 0.0 {
                active[i] = true;
                active[n1 + j] = true;
                let (a, b) = (find(&mut parent, i), find(&mut parent, n1 + j));
                parent[a] = b;
            }
        }
    }
    let roots: BTreeSet<usize> = (0..n1 + n2)
        .filter(|&v| active[v])
        .map(|v| find(&mut parent, v))
        .collect();
    Ok(roots.len() == 1)
}

// JSON representation: {"axes": [[labels]...], "mass": nested row-major arrays}.

#[derive(Serialize, Deserialize)]
struct PmfRepr {
    axes: Vec<Alphabet>,
    mass: Value,
}

#[derive(Serialize, Deserialize)]
struct CondRepr {
    from: Vec<Alphabet>,
    to: Vec<Alphabet>,
    mass: Value,
}

fn flatten_nested(value: &Value, shape: &[usize], out: &mut Vec<f64>) -> Result<()> {
    match shape.split_first() {
        None => match value.as_f64() {
            Some(x) => {
                out.push(x);
                Ok(())
            }
            None => arg(format!("expected a number, found {value}")),
        },
        Some((&len, rest)) => match value.as_array() {
            Some(items) if items.len() == len => {
                items.iter().try_for_each(|v| flatten_nested(v, rest, out))
            }
            _ => arg(format!("expected an array of length {len}, found {value}")),
        },
    }
}

fn nest(flat: &[f64], shape: &[usize]) -> Value {
    match shape.split_first() {
        None => Value::from(flat[0]),
        Some((&len, rest)) => {
            let chunk = rest.iter().product::<usize>();
            Value::Array((0..len).map(|i| nest(&flat[i * chunk..], rest)).collect())
        }
    }
}

impl TryFrom<PmfRepr> for JointPmf {
    type Error = Error;
    fn try_from(r: PmfRepr) -> Result<Self> {
        let mut flat = Vec::new();
        flatten_nested(&r.mass, &shape_of(&r.axes), &mut flat)?;
        JointPmf::new(r.axes, flat)
    }
}

impl From<JointPmf> for PmfRepr {
    fn from(p: JointPmf) -> Self {
        let mass = nest(&p.mass, &p.shape());
        PmfRepr { axes: p.axes, mass }
    }
}

impl TryFrom<CondRepr> for CondPmf {
    type Error = Error;
    fn try_from(r: CondRepr) -> Result<Self> {
        let mut shape = shape_of(&r.from);
        shape.extend(shape_of(&r.to));
        let mut flat = Vec::new();
        flatten_nested(&r.mass, &shape, &mut flat)?;
        CondPmf::new(r.from, r.to, flat)
    }
}

impl From<CondPmf> for CondRepr {
    fn from(c: CondPmf) -> Self {
        let mut shape = shape_of(&c.from);
        shape.extend(shape_of(&c.to));
        let mass = nest(&c.mass, &shape);
        CondRepr {
            from: c.from,
            to: c.to,
            mass,
        }
    }
}
