//! Quasi-invariant sampling over the fibered parameter space.
//!
//! A point of the fibered space is a pair (c̄, N): an injective parameter
//! tuple and a structure in the freeze language of c̄, re-indexed to ℕ. The
//! sampled law is the mixture λ = ∫ δ_c̄ ⊗ μ_c̄ dν(c̄), where each fiber
//! measure μ_c̄ is invariant under permutations fixing the parameters and ν
//! is the fully supported mixing measure on parameter tuples. All
//! non-invariance of λ lives in ν, so the Radon–Nikodym cocycle of a
//! finite-support permutation is the exact rational ν(g c̄)/ν(c̄).
//!
//! Samplers are pure functions of a seed: membership of each tuple is
//! decided by comparing a SHA-256 PRF value against the exact rational
//! probability, which makes draws deterministic, independent across tuples,
//! and consistent across window sizes.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::perm::FinSupPermutation;
use crate::signature::{
    embed_tuple, freeze_signature, unembed_tuple, ParamSignature, RelSignature, Signature, Symbol,
};
use crate::structure::{
    act_window, frozen_to_original, original_to_frozen, tuples_over, StructureWindow,
};

/// Derive a stream seed from a root seed: first eight bytes of
/// `SHA-256(root || label || index)`. This is the splitting rule every
/// parallel or repeated draw uses; no ambient entropy enters anywhere.
pub fn derive_seed(root: u64, label: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(index.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

fn prf_u64(seed: u64, symbol: &str, tuple: &[usize]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((symbol.len() as u64).to_le_bytes());
    h.update(symbol.as_bytes());
    for &e in tuple {
        h.update((e as u64).to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

/// `true` with probability `p`, decided by the PRF value of the tuple.
fn prf_bernoulli(seed: u64, symbol: &str, tuple: &[usize], p: &BigRational) -> bool {
    // u < p·2^64  ⟺  u·den < num·2^64, in exact integer arithmetic
    let u = BigUint::from(prf_u64(seed, symbol, tuple));
    let num = p.numer().magnitude().clone();
    let den = p.denom().magnitude().clone();
    u * den < (num << 64)
}

fn check_probability(p: &BigRational) -> Result<()> {
    if p.is_negative() || *p > BigRational::one() {
        return Err(Error::InvalidProbability(p.to_string()));
    }
    Ok(())
}

/// The per-symbol law of an i.i.d.-per-tuple invariant sampler.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TupleLaw {
    /// Independent membership per ordered tuple.
    Bernoulli(BigRational),
    /// Membership decided on the sorted tuple (both orders agree); tuples
    /// with repeated entries are always out.
    SymmetricBernoulli(BigRational),
    Constant(bool),
    /// Same decision as another (non-Copy) symbol of equal arity.
    Copy(String),
}

/// A deterministic sampler for a domain-permutation-invariant law: every
/// tuple's membership is an independent Bernoulli draw as declared per
/// symbol. Invariance holds by construction since the law treats all
/// domain elements alike.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantSampler {
    sig: RelSignature,
    laws: BTreeMap<String, TupleLaw>,
    /// The anchor tuple b̄ this sampler's fiber is attached to; transport
    /// re-anchors it. In re-indexed coordinates the law itself does not
    /// depend on the anchor.
    anchor: Vec<usize>,
}

impl InvariantSampler {
    pub fn new(sig: RelSignature, laws: BTreeMap<String, TupleLaw>) -> Result<Self> {
        for (name, law) in &laws {
            let arity = sig.arity_of(name)?;
            match law {
                TupleLaw::Bernoulli(p) | TupleLaw::SymmetricBernoulli(p) => check_probability(p)?,
                TupleLaw::Constant(_) => {}
                TupleLaw::Copy(other) => {
                    let other_law = laws
                        .get(other)
                        .ok_or_else(|| Error::UnknownRelation(other.clone()))?;
                    if matches!(other_law, TupleLaw::Copy(_)) {
                        return Err(Error::InvalidInput(format!(
                            "law of {name} copies {other}, which is itself a copy"
                        )));
                    }
                    let other_arity = sig.arity_of(other)?;
                    if other_arity != arity {
                        return Err(Error::ArityMismatch {
                            relation: other.clone(),
                            expected: arity,
                            got: other_arity,
                        });
                    }
                }
            }
        }
        for rel in sig.relations() {
            if !laws.contains_key(&rel.name) {
                return Err(Error::InvalidInput(format!(
                    "no law declared for symbol {}",
                    rel.name
                )));
            }
        }
        Ok(InvariantSampler {
            sig,
            laws,
            anchor: Vec::new(),
        })
    }

    pub fn sig(&self) -> &RelSignature {
        &self.sig
    }

    pub fn anchor(&self) -> &[usize] {
        &self.anchor
    }

    pub fn law(&self, symbol: &str) -> Option<&TupleLaw> {
        self.laws.get(symbol)
    }

    /// Membership of a tuple under this sampler's law at the given seed.
    pub fn membership(&self, seed: u64, symbol: &str, tuple: &[usize]) -> Result<bool> {
        let law = self
            .laws
            .get(symbol)
            .ok_or_else(|| Error::UnknownRelation(symbol.to_string()))?;
        Ok(match law {
            TupleLaw::Constant(b) => *b,
            TupleLaw::Bernoulli(p) => prf_bernoulli(seed, symbol, tuple, p),
            TupleLaw::SymmetricBernoulli(p) => {
                let mut sorted = tuple.to_vec();
                sorted.sort_unstable();
                let distinct: BTreeSet<usize> = sorted.iter().copied().collect();
                distinct.len() == tuple.len() && prf_bernoulli(seed, symbol, &sorted, p)
            }
            TupleLaw::Copy(other) => self.membership(seed, other, tuple)?,
        })
    }

    /// The sampled structure restricted to `{0..n-1}`. Deterministic in the
    /// seed; windows of different sizes at one seed agree on their overlap.
    pub fn sample_window(&self, seed: u64, n: usize) -> Result<StructureWindow> {
        let mut w = StructureWindow::empty(self.sig.clone(), n);
        for rel in self.sig.relations() {
            for t in tuples_over(n, rel.arity) {
                if self.membership(seed, &rel.name, &t)? {
                    w.insert_fact(&rel.name, t)?;
                }
            }
        }
        Ok(w)
    }
}

/// Declare an i.i.d.-per-tuple law: one `(probability, symmetric)` pair per
/// relation symbol.
pub fn iid_relation_sampler(
    sig: RelSignature,
    probs: &BTreeMap<String, (BigRational, bool)>,
) -> Result<InvariantSampler> {
    let mut laws = BTreeMap::new();
    for rel in sig.relations() {
        let (p, symmetric) = probs
            .get(&rel.name)
            .ok_or_else(|| Error::InvalidInput(format!("no probability for {}", rel.name)))?;
        let law = if *symmetric {
            TupleLaw::SymmetricBernoulli(p.clone())
        } else {
            TupleLaw::Bernoulli(p.clone())
        };
        laws.insert(rel.name.clone(), law);
    }
    InvariantSampler::new(sig, laws)
}

/// The Erdős–Rényi graph sampler: one symmetric edge relation `E`.
pub fn erdos_renyi(p: BigRational) -> Result<InvariantSampler> {
    let sig = RelSignature::new(vec![Symbol::new("E", 2)])?;
    let probs = BTreeMap::from([("E".to_string(), (p, true))]);
    iid_relation_sampler(sig, &probs)
}

/// Re-anchor a fiber sampler from `b̄` to `c̄` along the order-preserving
/// bijection ℕ∖{b̄} → ℕ∖{c̄}. In re-indexed coordinates that bijection is
/// the identity, so the law is unchanged; only the anchor record moves.
pub fn transport_sampler(
    base: &InvariantSampler,
    b_bar: &[usize],
    c_bar: &[usize],
) -> Result<InvariantSampler> {
    if b_bar.len() != c_bar.len() {
        return Err(Error::LengthMismatch(format!(
            "anchor tuples of lengths {} and {}",
            b_bar.len(),
            c_bar.len()
        )));
    }
    for t in [b_bar, c_bar] {
        let set: BTreeSet<usize> = t.iter().copied().collect();
        if set.len() != t.len() {
            return Err(Error::NotInjective(t.to_vec()));
        }
    }
    let mut out = base.clone();
    out.anchor = c_bar.to_vec();
    Ok(out)
}

/// The default fully supported mixing measure on injective ℓ-tuples:
/// unnormalized weight ∏_i 2^{−(c_i+1)}, sampled by independent geometric
/// draws with rejection of collisions. Only weight ratios are ever used, so
/// the normalizing constant never appears.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixingMeasure {
    pub ell: usize,
}

pub fn nu_default(ell: usize) -> MixingMeasure {
    MixingMeasure { ell }
}

impl MixingMeasure {
    fn check_tuple(&self, c: &[usize]) -> Result<()> {
        if c.len() != self.ell {
            return Err(Error::LengthMismatch(format!(
                "tuple of length {} against ℓ = {}",
                c.len(),
                self.ell
            )));
        }
        let set: BTreeSet<usize> = c.iter().copied().collect();
        if set.len() != c.len() {
            return Err(Error::NotInjective(c.to_vec()));
        }
        Ok(())
    }

    /// Unnormalized weight 2^{−Σ(c_i+1)}.
    pub fn weight(&self, c: &[usize]) -> Result<BigRational> {
        self.check_tuple(c)?;
        let exp: usize = c.iter().map(|&x| x + 1).sum();
        Ok(BigRational::new(
            BigInt::one(),
            BigInt::one() << exp,
        ))
    }

    /// Exact ratio weight(c1)/weight(c2).
    pub fn ratio(&self, c1: &[usize], c2: &[usize]) -> Result<BigRational> {
        Ok(self.weight(c1)? / self.weight(c2)?)
    }

    /// Draw an injective tuple, rejecting collisions and tuples with an
    /// entry outside the window budget. Returns the tuple and the number of
    /// rejected draws (the recorded tail-truncation bias).
    pub fn sample(&self, rng: &mut impl Rng, budget: usize) -> Result<(Vec<usize>, u32)> {
        if self.ell > 0 && budget < self.ell {
            return Err(Error::InvalidInput(format!(
                "window budget {budget} below tuple length {}",
                self.ell
            )));
        }
        let mut rejections = 0u32;
        loop {
            let mut c = Vec::with_capacity(self.ell);
            for _ in 0..self.ell {
                let mut k = 0usize;
                while rng.r#gen::<bool>() {
                    k += 1;
                }
                c.push(k);
            }
            let distinct: BTreeSet<usize> = c.iter().copied().collect();
            if distinct.len() == c.len() && c.iter().all(|&x| x < budget) {
                return Ok((c, rejections));
            }
            rejections += 1;
            if rejections > 100_000 {
                return Err(Error::SearchExhausted(
                    "mixing-measure rejection sampling did not terminate".into(),
                ));
            }
        }
    }
}

/// Exact ratio ν(c1)/ν(c2) of the mixing measure.
pub fn nu_ratio(nu: &MixingMeasure, c1: &[usize], c2: &[usize]) -> Result<BigRational> {
    nu.ratio(c1, c2)
}

/// A sampled point of the fibered space: the parameter tuple, the frozen
/// structure window over the re-indexed domain, and the recorded
/// re-indexing (frozen index → original element).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberedSample {
    pub c_bar: Vec<usize>,
    pub frozen: StructureWindow,
    pub reindex: Vec<usize>,
    /// Rejected ν-draws before this sample fit the window budget.
    pub rejections: u32,
}

/// Assemble a frozen window into a window over the base language: `R(ā)`
/// holds iff the derived symbol of the unique freeze map of `ā` over `c̄`
/// holds at the re-indexed free part.
pub fn beta_assemble(
    c_bar: &[usize],
    frozen: &StructureWindow,
    base: &Signature,
    out_size: usize,
) -> Result<StructureWindow> {
    let set: BTreeSet<usize> = c_bar.iter().copied().collect();
    if set.len() != c_bar.len() {
        return Err(Error::NotInjective(c_bar.to_vec()));
    }
    if let Some(&cmax) = set.iter().next_back() {
        if cmax >= out_size {
            return Err(Error::InvalidInput(format!(
                "assembled window of size {out_size} must contain parameter {cmax}"
            )));
        }
    }
    let psig = freeze_signature(base, c_bar.len())?;
    let base_rel = base.relational()?;
    let mut out = StructureWindow::empty(base_rel.clone(), out_size);
    for rel in base_rel.relations() {
        for t in tuples_over(out_size, rel.arity) {
            let (free, fmap) = unembed_tuple(&t, c_bar);
            let name = psig
                .symbols
                .iter()
                .find(|s| s.base == rel.name && s.freeze == fmap)
                .map(|s| s.name.clone())
                .ok_or_else(|| Error::UnknownRelation(format!("{}{:?}", rel.name, fmap)))?;
            let mut idx = Vec::with_capacity(free.len());
            for &x in &free {
                let k = original_to_frozen(c_bar, x).expect("free part avoids parameters");
                if k >= frozen.size() {
                    return Err(Error::FrozenWindowTooSmall {
                        size: frozen.size(),
                        needed: k,
                        symbol: name.clone(),
                    });
                }
                idx.push(k);
            }
            if frozen.holds(&name, &idx)? {
                out.insert_fact(&rel.name, t)?;
            }
        }
    }
    Ok(out)
}

/// The adapted action on a fibered point: move the parameter tuple and
/// rewrite the frozen window so that assembly commutes with the logic
/// action. Fails if a needed query escapes the frozen window.
pub fn act_fibered(
    g: &FinSupPermutation,
    fs: &FiberedSample,
    base: &Signature,
) -> Result<FiberedSample> {
    let c_new = g.apply_tuple(&fs.c_bar);
    let psig = freeze_signature(base, fs.c_bar.len())?;
    let g_inv = g.invert();
    let n = fs.frozen.size();
    let mut frozen_new = StructureWindow::empty(fs.frozen.sig().clone(), n);
    for sym in &psig.symbols {
        let arity = sym.freeze.free_arity();
        for idx in tuples_over(n, arity) {
            // originals in the moved structure, then pull back through g
            let originals: Vec<usize> = idx
                .iter()
                .map(|&k| frozen_to_original(&c_new, k))
                .collect();
            let full = embed_tuple(&originals, &sym.freeze, &c_new)?;
            let pre = g_inv.apply_tuple(&full);
            let (free, fmap) = unembed_tuple(&pre, &fs.c_bar);
            let pre_sym = psig
                .symbols
                .iter()
                .find(|s| s.base == sym.base && s.freeze == fmap)
                .ok_or_else(|| Error::UnknownRelation(format!("{}{:?}", sym.base, fmap)))?;
            let mut pre_idx = Vec::with_capacity(free.len());
            let mut in_range = true;
            for &x in &free {
                let k = original_to_frozen(&fs.c_bar, x).expect("free part avoids parameters");
                if k >= n {
                    in_range = false;
                    break;
                }
                pre_idx.push(k);
            }
            if !in_range {
                return Err(Error::FrozenWindowTooSmall {
                    size: n,
                    needed: n,
                    symbol: pre_sym.name.clone(),
                });
            }
            if fs.frozen.holds(&pre_sym.name, &pre_idx)? {
                frozen_new.insert_fact(&sym.name, idx)?;
            }
        }
    }
    Ok(FiberedSample {
        reindex: (0..n).map(|k| frozen_to_original(&c_new, k)).collect(),
        c_bar: c_new,
        frozen: frozen_new,
        rejections: fs.rejections,
    })
}

/// One draw from the windowed mixture law λ: a parameter tuple from ν, a
/// frozen window from the transported fiber sampler, and the assembled
/// base-language window of size `n`.
pub fn quasi_sample(
    nu: &MixingMeasure,
    base_sampler: &InvariantSampler,
    base_sig: &Signature,
    b_bar: &[usize],
    n: usize,
    seed: u64,
) -> Result<(FiberedSample, StructureWindow)> {
    if n < nu.ell {
        return Err(Error::InvalidInput(format!(
            "window size {n} below parameter count {}",
            nu.ell
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "nu", 0));
    let (c_bar, rejections) = nu.sample(&mut rng, n)?;
    let transported = transport_sampler(base_sampler, b_bar, &c_bar)?;
    let frozen = transported.sample_window(derive_seed(seed, "mu", 0), n - nu.ell)?;
    let assembled = beta_assemble(&c_bar, &frozen, base_sig, n)?;
    let fs = FiberedSample {
        reindex: (0..frozen.size())
            .map(|k| frozen_to_original(&c_bar, k))
            .collect(),
        c_bar,
        frozen,
        rejections,
    };
    Ok((fs, assembled))
}

/// The exact Radon–Nikodym cocycle value of `g` at the fiber index `c̄`,
/// together with the set of moved points it depended on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CocycleValue {
    pub ratio: BigRational,
    pub dependency_support: BTreeSet<usize>,
}

impl CocycleValue {
    pub fn log2_ratio(&self) -> f64 {
        let num = self.ratio.numer().to_f64().unwrap_or(f64::NAN);
        let den = self.ratio.denom().to_f64().unwrap_or(f64::NAN);
        num.log2() - den.log2()
    }

    /// Canonical `num/den` rendering used by reports.
    pub fn ratio_string(&self) -> String {
        format!("{}/{}", self.ratio.numer(), self.ratio.denom())
    }
}

/// `c_μ(g, c̄) = ν(g c̄)/ν(c̄)`: the fiber measures transport exactly, so
/// the entire derivative is the ν-factor.
pub fn fibered_cocycle(
    nu: &MixingMeasure,
    g: &FinSupPermutation,
    c_bar: &[usize],
) -> Result<CocycleValue> {
    let moved = g.apply_tuple(c_bar);
    let ratio = nu.ratio(&moved, c_bar)?;
    let dependency_support: BTreeSet<usize> = c_bar
        .iter()
        .copied()
        .filter(|&c| g.apply(c) != c)
        .collect();
    Ok(CocycleValue {
        ratio,
        dependency_support,
    })
}

/// Desk-scale proxy for continuity of the cocycle in `g`: the value depends
/// on `g` only through its restriction to `{c̄}`, so permutations agreeing
/// there must produce equal values. Returns the comparison of the two
/// values.
pub fn cocycle_locality_check(
    nu: &MixingMeasure,
    g1: &FinSupPermutation,
    g2: &FinSupPermutation,
    c_bar: &[usize],
) -> Result<bool> {
    let v1 = fibered_cocycle(nu, g1, c_bar)?;
    let v2 = fibered_cocycle(nu, g2, c_bar)?;
    Ok(v1.ratio == v2.ratio)
}

/// A cylinder event on fibered samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventSpec {
    /// `c_index = value`.
    CbarCoord { index: usize, value: usize },
    /// An atomic fact of the assembled window (negated if requested).
    WindowFact {
        relation: String,
        tuple: Vec<usize>,
        negated: bool,
    },
}

fn eval_event(e: &EventSpec, fs: &FiberedSample, w: &StructureWindow) -> Result<bool> {
    Ok(match e {
        EventSpec::CbarCoord { index, value } => fs.c_bar.get(*index) == Some(value),
        EventSpec::WindowFact {
            relation,
            tuple,
            negated,
        } => w.holds(relation, tuple)? != *negated,
    })
}

/// Evaluate the event on the translated sample g·X without re-assembling:
/// the moved window satisfies `R(t)` iff the original satisfies `R(g⁻¹t)`.
fn eval_event_translated(
    e: &EventSpec,
    g: &FinSupPermutation,
    g_inv: &FinSupPermutation,
    fs: &FiberedSample,
    w: &StructureWindow,
) -> Result<bool> {
    Ok(match e {
        EventSpec::CbarCoord { index, value } => {
            fs.c_bar.get(*index).map(|&c| g.apply(c)) == Some(*value)
        }
        EventSpec::WindowFact {
            relation,
            tuple,
            negated,
        } => {
            let pre = g_inv.apply_tuple(tuple);
            for &x in &pre {
                if x >= w.size() {
                    return Err(Error::OutOfRange {
                        entry: x,
                        size: w.size(),
                    });
                }
            }
            w.holds(relation, &pre)? != *negated
        }
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventStat {
    pub event: EventSpec,
    pub freq: f64,
    pub freq_translated: f64,
    /// Mean of 1_E(gX) − 1_E(X)·c_μ(g⁻¹, c̄(X)); zero in expectation under
    /// quasi-invariance with the exact cocycle weights.
    pub weighted_mean_diff: f64,
    pub z_score: Option<f64>,
    pub vacuous: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasiInvarianceReport {
    pub alpha: f64,
    pub z_crit: f64,
    pub sample_count: usize,
    pub events: Vec<EventStat>,
    pub pass: bool,
}

/// Importance-weighted two-sample test of null-set preservation: for each
/// event, the frequency under the translated samples must match the
/// cocycle-weighted frequency under the original samples.
pub fn quasi_invariance_test(
    samples: &[(FiberedSample, StructureWindow)],
    nu: &MixingMeasure,
    g: &FinSupPermutation,
    events: &[EventSpec],
    alpha: f64,
) -> Result<QuasiInvarianceReport> {
    if !(0.0..1.0).contains(&alpha) || alpha <= 0.0 {
        return Err(Error::InvalidProbability(alpha.to_string()));
    }
    let n = samples.len();
    if (n as f64) * alpha < 10.0 {
        return Err(Error::InsufficientSamples(format!(
            "{n} samples cannot resolve level {alpha}; need at least {}",
            (10.0 / alpha).ceil()
        )));
    }
    let g_inv = g.invert();
    let z_crit = Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - alpha / 2.0);
    let mut stats = Vec::new();
    let mut pass = true;
    for e in events {
        let mut diffs = Vec::with_capacity(n);
        let mut hits = 0usize;
        let mut hits_translated = 0usize;
        for (fs, w) in samples {
            let base = eval_event(e, fs, w)?;
            let moved = eval_event_translated(e, g, &g_inv, fs, w)?;
            if base {
                hits += 1;
            }
            if moved {
                hits_translated += 1;
            }
            let weight = if base {
                fibered_cocycle(nu, &g_inv, &fs.c_bar)?
                    .ratio
                    .to_f64()
                    .unwrap_or(f64::NAN)
            } else {
                0.0
            };
            diffs.push((moved as u8 as f64) - weight);
        }
        let vacuous = hits == 0 && hits_translated == 0;
        let mean = diffs.iter().sum::<f64>() / n as f64;
        let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0);
        let sd = var.sqrt();
        let (z, event_pass) = if vacuous {
            (None, true)
        } else if sd == 0.0 {
            (None, mean == 0.0)
        } else {
            let z = mean / (sd / (n as f64).sqrt());
            (Some(z), z.abs() <= z_crit)
        };
        pass &= event_pass;
        stats.push(EventStat {
            event: e.clone(),
            freq: hits as f64 / n as f64,
            freq_translated: hits_translated as f64 / n as f64,
            weighted_mean_diff: mean,
            z_score: z,
            vacuous,
            pass: event_pass,
        });
    }
    Ok(QuasiInvarianceReport {
        alpha,
        z_crit,
        sample_count: n,
        events: stats,
        pass,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChiSquareReport {
    pub cells: usize,
    pub dof: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub sample_count: usize,
}

/// Goodness-of-fit of the `g`-permuted samples of a symmetric binary
/// relation against the exact product law on the unordered-pair cells of an
/// `m`-window. Invariance of the base law makes the permuted law identical,
/// so the exact cell probabilities are the oracle.
pub fn base_invariance_chi_square(
    sampler: &InvariantSampler,
    relation: &str,
    m: usize,
    g: &FinSupPermutation,
    count: usize,
    seed: u64,
) -> Result<ChiSquareReport> {
    let p = match sampler.law(relation) {
        Some(TupleLaw::SymmetricBernoulli(p)) => p.to_f64().unwrap_or(f64::NAN),
        _ => {
            return Err(Error::InvalidInput(format!(
                "chi-square oracle needs a symmetric Bernoulli law for {relation}"
            )))
        }
    };
    if !g.preserves_window(m) {
        return Err(Error::WindowNotClosed {
            size: m,
            point: *g.support().iter().find(|&&x| x < m).unwrap_or(&0),
            image: 0,
        });
    }
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
        .collect();
    let cells = 1usize << pairs.len();
    let mut observed = vec![0usize; cells];
    for i in 0..count {
        let w = sampler.sample_window(derive_seed(seed, "chi", i as u64), m)?;
        let moved = act_window(g, &w)?;
        let mut cell = 0usize;
        for (bit, &(a, b)) in pairs.iter().enumerate() {
            if moved.holds(relation, &[a, b])? {
                cell |= 1 << bit;
            }
        }
        observed[cell] += 1;
    }
    let mut statistic = 0.0;
    for (cell, &o) in observed.iter().enumerate() {
        let mut prob = 1.0;
        for bit in 0..pairs.len() {
            prob *= if cell & (1 << bit) != 0 { p } else { 1.0 - p };
        }
        let expected = prob * count as f64;
        if expected > 0.0 {
            statistic += (o as f64 - expected).powi(2) / expected;
        }
    }
    let dof = cells - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(statistic);
    Ok(ChiSquareReport {
        cells,
        dof,
        statistic,
        p_value,
        sample_count: count,
    })
}

/// The frozen-law pipeline for a graph with one marked vertex: base
/// language {E/2, U/1}, one parameter carrying the mark, and an
/// Erdős–Rényi(p) fiber.
pub struct MarkedPipeline {
    pub base_sig: Signature,
    pub nu: MixingMeasure,
    pub sampler: InvariantSampler,
}

pub fn marked_pipeline(p: BigRational) -> Result<MarkedPipeline> {
    let base_sig = Signature::relational_only(vec![Symbol::new("E", 2), Symbol::new("U", 1)])?;
    let psig: ParamSignature = freeze_signature(&base_sig, 1)?;
    let frozen_sig = psig.relational();
    let laws = BTreeMap::from([
        ("E[c0,c0]".to_string(), TupleLaw::Constant(false)),
        ("E[c0,z]".to_string(), TupleLaw::Bernoulli(p.clone())),
        ("E[z,c0]".to_string(), TupleLaw::Copy("E[c0,z]".to_string())),
        ("E[z,z]".to_string(), TupleLaw::SymmetricBernoulli(p)),
        ("U[c0]".to_string(), TupleLaw::Constant(true)),
        ("U[z]".to_string(), TupleLaw::Constant(false)),
    ]);
    Ok(MarkedPipeline {
        base_sig,
        nu: nu_default(1),
        sampler: InvariantSampler::new(frozen_sig, laws)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn half() -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(2))
    }

    #[test]
    fn nu_weights_and_ratios() {
        let nu = nu_default(2);
        let r = nu.ratio(&[0, 2], &[1, 2]).unwrap();
        assert_eq!(r, BigRational::from(BigInt::from(2)));
        assert_eq!(
            nu.ratio(&[0, 2], &[0, 2]).unwrap(),
            BigRational::one()
        );
        let nu1 = nu_default(1);
        assert_eq!(
            nu1.ratio(&[5], &[0]).unwrap(),
            BigRational::new(BigInt::one(), BigInt::from(32))
        );
        assert!(nu.weight(&[1, 1]).is_err());
        let nu0 = nu_default(0);
        assert_eq!(nu0.weight(&[]).unwrap(), BigRational::one());
    }

    #[test]
    fn nu_samples_injective() {
        let nu = nu_default(3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (c, _) = nu.sample(&mut rng, 64).unwrap();
            let set: BTreeSet<usize> = c.iter().copied().collect();
            assert_eq!(set.len(), 3);
            assert!(c.iter().all(|&x| x < 64));
        }
    }

    #[test]
    fn sampler_determinism_and_consistency() {
        let s = erdos_renyi(half()).unwrap();
        let w1 = s.sample_window(7, 8).unwrap();
        let w2 = s.sample_window(7, 8).unwrap();
        assert_eq!(w1, w2);
        let big = s.sample_window(7, 12).unwrap();
        assert!(w1.embeds_in(&big));
        assert_ne!(w1, s.sample_window(8, 8).unwrap());
    }

    #[test]
    fn sampler_symmetric_and_loopless() {
        let s = erdos_renyi(half()).unwrap();
        let w = s.sample_window(3, 16).unwrap();
        for i in 0..16 {
            assert!(!w.holds("E", &[i, i]).unwrap());
            for j in 0..16 {
                assert_eq!(w.holds("E", &[i, j]).unwrap(), w.holds("E", &[j, i]).unwrap());
            }
        }
    }

    #[test]
    fn degenerate_probabilities() {
        let empty = erdos_renyi(BigRational::zero()).unwrap();
        assert!(empty.sample_window(1, 10).unwrap().facts().is_empty());
        let full = erdos_renyi(BigRational::one()).unwrap();
        let w = full.sample_window(1, 5).unwrap();
        assert_eq!(w.facts().get("E").unwrap().len(), 20);
        assert!(erdos_renyi(BigRational::from(BigInt::from(2))).is_err());
    }

    #[test]
    fn transport_checks_and_preserves_law() {
        let s = erdos_renyi(half()).unwrap();
        let t = transport_sampler(&s, &[0], &[5]).unwrap();
        assert_eq!(t.anchor(), &[5]);
        assert_eq!(t.sample_window(3, 8).unwrap(), s.sample_window(3, 8).unwrap());
        assert!(transport_sampler(&s, &[0], &[1, 2]).is_err());
        assert!(transport_sampler(&s, &[0, 0], &[1, 2]).is_err());
    }

    #[test]
    fn marked_pipeline_assembly() {
        let mp = marked_pipeline(half()).unwrap();
        let (fs, w) = quasi_sample(&mp.nu, &mp.sampler, &mp.base_sig, &[0], 16, 42).unwrap();
        // exactly one marked vertex, at the parameter
        let marked: Vec<Vec<usize>> = w
            .facts()
            .get("U")
            .map(|s| s.iter().cloned().collect())
            .unwrap_or_default();
        assert_eq!(marked, vec![vec![fs.c_bar[0]]]);
        // no loops, symmetric edges
        for i in 0..16 {
            assert!(!w.holds("E", &[i, i]).unwrap());
        }
        // determinism
        let (fs2, w2) = quasi_sample(&mp.nu, &mp.sampler, &mp.base_sig, &[0], 16, 42).unwrap();
        assert_eq!(fs, fs2);
        assert_eq!(w, w2);
    }

    #[test]
    fn beta_assembly_frozen_example() {
        // unary base relation held at re-indexed 0 with c̄=(5) assembles to
        // a fact at original 0
        let base = Signature::relational_only(vec![Symbol::new("E", 2)]).unwrap();
        let psig = freeze_signature(&base, 1).unwrap();
        let mut frozen = StructureWindow::empty(psig.relational(), 5);
        frozen.insert_fact("E[c0,z]", vec![0]).unwrap();
        let w = beta_assemble(&[5], &frozen, &base, 6).unwrap();
        assert!(w.holds("E", &[5, 0]).unwrap());
        assert!(!w.holds("E", &[5, 1]).unwrap());
        assert!(!w.holds("E", &[0, 5]).unwrap());
    }

    #[test]
    fn beta_size_errors() {
        let base = Signature::relational_only(vec![Symbol::new("E", 2)]).unwrap();
        let psig = freeze_signature(&base, 1).unwrap();
        let frozen = StructureWindow::empty(psig.relational(), 2);
        assert!(matches!(
            beta_assemble(&[0], &frozen, &base, 6),
            Err(Error::FrozenWindowTooSmall { .. })
        ));
        assert!(beta_assemble(&[9], &frozen, &base, 3).is_err());
    }

    #[test]
    fn beta_equivariance_instances() {
        let mp = marked_pipeline(half()).unwrap();
        for seed in 0..20u64 {
            let (fs, w) = quasi_sample(&mp.nu, &mp.sampler, &mp.base_sig, &[0], 12, seed).unwrap();
            for g in [
                FinSupPermutation::swap(0, 1),
                FinSupPermutation::from_cycles(&[vec![0, 3, 5]]).unwrap(),
                FinSupPermutation::parse_cycles("(1 2)(4 7)").unwrap(),
            ] {
                let direct = act_window(&g, &w).unwrap();
                let moved = act_fibered(&g, &fs, &mp.base_sig).unwrap();
                let assembled =
                    beta_assemble(&moved.c_bar, &moved.frozen, &mp.base_sig, 12).unwrap();
                assert_eq!(direct, assembled);
            }
        }
    }

    #[test]
    fn cocycle_values_and_identity() {
        let nu = nu_default(2);
        let g = FinSupPermutation::swap(0, 1);
        let v = fibered_cocycle(&nu, &g, &[0, 2]).unwrap();
        assert_eq!(v.ratio, BigRational::new(BigInt::one(), BigInt::from(2)));
        assert_eq!(v.ratio_string(), "1/2");
        assert_eq!(v.dependency_support, BTreeSet::from([0]));
        assert_eq!(v.log2_ratio(), -1.0);

        let fix = FinSupPermutation::swap(7, 9);
        assert_eq!(
            fibered_cocycle(&nu, &fix, &[0, 2]).unwrap().ratio,
            BigRational::one()
        );

        let h = FinSupPermutation::from_cycles(&[vec![0, 2, 4]]).unwrap();
        let gh = g.compose(&h);
        let lhs = fibered_cocycle(&nu, &gh, &[0, 2]).unwrap().ratio;
        let rhs = fibered_cocycle(&nu, &g, &h.apply_tuple(&[0, 2])).unwrap().ratio
            * fibered_cocycle(&nu, &h, &[0, 2]).unwrap().ratio;
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn cocycle_locality() {
        let nu = nu_default(2);
        let g1 = FinSupPermutation::swap(0, 1);
        let g2 = g1.compose(&FinSupPermutation::swap(30, 31));
        assert!(cocycle_locality_check(&nu, &g1, &g1, &[0, 2]).unwrap());
        assert!(cocycle_locality_check(&nu, &g1, &g2, &[0, 2]).unwrap());
        let g3 = FinSupPermutation::swap(0, 3);
        assert!(!cocycle_locality_check(&nu, &g1, &g3, &[0, 2]).unwrap());
    }

    #[test]
    fn quasi_invariance_identity_passes() {
        let mp = marked_pipeline(half()).unwrap();
        let samples: Vec<_> = (0..400u64)
            .map(|i| {
                quasi_sample(
                    &mp.nu,
                    &mp.sampler,
                    &mp.base_sig,
                    &[0],
                    8,
                    derive_seed(5, "sample", i),
                )
                .unwrap()
            })
            .collect();
        let events = vec![
            EventSpec::CbarCoord { index: 0, value: 0 },
            EventSpec::WindowFact {
                relation: "E".into(),
                tuple: vec![2, 3],
                negated: false,
            },
        ];
        let report = quasi_invariance_test(
            &samples,
            &mp.nu,
            &FinSupPermutation::identity(),
            &events,
            0.05,
        )
        .unwrap();
        assert!(report.pass);
        for e in &report.events {
            assert_eq!(e.weighted_mean_diff, 0.0);
        }
    }

    #[test]
    fn quasi_invariance_vacuous_and_insufficient() {
        let mp = marked_pipeline(half()).unwrap();
        let samples: Vec<_> = (0..300u64)
            .map(|i| {
                quasi_sample(
                    &mp.nu,
                    &mp.sampler,
                    &mp.base_sig,
                    &[0],
                    8,
                    derive_seed(6, "sample", i),
                )
                .unwrap()
            })
            .collect();
        let impossible = EventSpec::CbarCoord {
            index: 0,
            value: 7_000,
        };
        let report = quasi_invariance_test(
            &samples,
            &mp.nu,
            &FinSupPermutation::swap(0, 1),
            &[impossible],
            0.05,
        )
        .unwrap();
        assert!(report.events[0].vacuous);
        assert!(report.pass);
        assert!(matches!(
            quasi_invariance_test(
                &samples,
                &mp.nu,
                &FinSupPermutation::identity(),
                &[],
                0.0001
            ),
            Err(Error::InsufficientSamples(_))
        ));
    }

    #[test]
    fn chi_square_sanity() {
        let s = erdos_renyi(half()).unwrap();
        let g = FinSupPermutation::parse_cycles("(0 1)(2 3)").unwrap();
        let report = base_invariance_chi_square(&s, "E", 4, &g, 2000, 99).unwrap();
        assert_eq!(report.cells, 64);
        assert!(report.p_value > 0.001, "p = {}", report.p_value);
        // permutation must preserve the window
        assert!(base_invariance_chi_square(&s, "E", 4, &FinSupPermutation::swap(0, 9), 10, 1)
            .is_err());
    }

    #[test]
    fn seed_derivation_is_stable_and_split() {
        assert_eq!(derive_seed(1, "a", 0), derive_seed(1, "a", 0));
        assert_ne!(derive_seed(1, "a", 0), derive_seed(1, "a", 1));
        assert_ne!(derive_seed(1, "a", 0), derive_seed(1, "b", 0));
        assert_ne!(derive_seed(1, "a", 0), derive_seed(2, "a", 0));
    }
}
