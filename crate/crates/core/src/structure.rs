//! Countable structures given by decidable oracles, their finite windows,
//! quantifier-free types, and the logic action of finite-support
//! permutations.
//!
//! A [`StructureOracle`] answers atomic membership questions over domain ℕ;
//! a [`StructureWindow`] is its restriction to an initial segment. The
//! built-in families are:
//!
//! * `matching` — the disjoint union of countably many edges,
//!   `R(n,m)` iff `{n,m} = {2k, 2k+1}`;
//! * `star-forest` — countably many infinite stars on domain ℕ², placed on
//!   ℕ by the Cantor pairing bijection (element `pair(x,y)` is the center
//!   of star `x` when `y = 0` and a leaf of star `x` otherwise);
//! * `pure-set` — the empty signature;
//! * `marked` — a pure set with a unary predicate `U` holding on a fixed
//!   finite set.
//!
//! Built-in families carry closed-form algebraic-closure and orbit oracles.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::perm::FinSupPermutation;
use crate::signature::{embed_tuple, freeze_signature, ParamSignature, RelSignature, Signature, Symbol};

/// Cantor pairing bijection ℕ² → ℕ.
pub fn pair(x: usize, y: usize) -> usize {
    (x + y) * (x + y + 1) / 2 + y
}

/// Inverse of [`pair`].
pub fn unpair(z: usize) -> (usize, usize) {
    let mut s = 0usize;
    while (s + 1) * (s + 2) / 2 <= z {
        s += 1;
    }
    let y = z - s * (s + 1) / 2;
    (s - y, y)
}

/// The restriction of a structure to `{0..n-1}`: for each relation, the set
/// of tuples satisfying it. Fact lists are kept sorted and deduplicated so
/// windows compare and serialize canonically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureWindow {
    sig: RelSignature,
    size: usize,
    facts: BTreeMap<String, BTreeSet<Vec<usize>>>,
}

impl StructureWindow {
    pub fn new(
        sig: RelSignature,
        size: usize,
        facts: BTreeMap<String, BTreeSet<Vec<usize>>>,
    ) -> Result<Self> {
        for (rel, tuples) in &facts {
            let arity = sig.arity_of(rel)?;
            for t in tuples {
                if t.len() != arity {
                    return Err(Error::ArityMismatch {
                        relation: rel.clone(),
                        expected: arity,
                        got: t.len(),
                    });
                }
                for &e in t {
                    if e >= size {
                        return Err(Error::OutOfRange { entry: e, size });
                    }
                }
            }
        }
        Ok(StructureWindow { sig, size, facts })
    }

    pub fn empty(sig: RelSignature, size: usize) -> Self {
        StructureWindow {
            sig,
            size,
            facts: BTreeMap::new(),
        }
    }

    pub fn sig(&self) -> &RelSignature {
        &self.sig
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn facts(&self) -> &BTreeMap<String, BTreeSet<Vec<usize>>> {
        &self.facts
    }

    pub fn holds(&self, relation: &str, tuple: &[usize]) -> Result<bool> {
        let arity = self.sig.arity_of(relation)?;
        if tuple.len() != arity {
            return Err(Error::ArityMismatch {
                relation: relation.to_string(),
                expected: arity,
                got: tuple.len(),
            });
        }
        for &e in tuple {
            if e >= self.size {
                return Err(Error::OutOfRange {
                    entry: e,
                    size: self.size,
                });
            }
        }
        Ok(self
            .facts
            .get(relation)
            .map(|s| s.contains(tuple))
            .unwrap_or(false))
    }

    pub fn insert_fact(&mut self, relation: &str, tuple: Vec<usize>) -> Result<()> {
        let arity = self.sig.arity_of(relation)?;
        if tuple.len() != arity {
            return Err(Error::ArityMismatch {
                relation: relation.to_string(),
                expected: arity,
                got: tuple.len(),
            });
        }
        for &e in &tuple {
            if e >= self.size {
                return Err(Error::OutOfRange {
                    entry: e,
                    size: self.size,
                });
            }
        }
        self.facts.entry(relation.to_string()).or_default().insert(tuple);
        Ok(())
    }

    /// Whether this window's facts are exactly reproduced by the larger one
    /// on the common segment.
    pub fn embeds_in(&self, larger: &StructureWindow) -> bool {
        if larger.size < self.size || self.sig != larger.sig {
            return false;
        }
        for rel in self.sig.relations() {
            let empty = BTreeSet::new();
            let small = self.facts.get(&rel.name).unwrap_or(&empty);
            let big = larger.facts.get(&rel.name).unwrap_or(&empty);
            let restricted: BTreeSet<Vec<usize>> = big
                .iter()
                .filter(|t| t.iter().all(|&e| e < self.size))
                .cloned()
                .collect();
            if *small != restricted {
                return false;
            }
        }
        true
    }
}

/// Pushforward of a window under a finite-support permutation that maps the
/// window onto itself.
pub fn act_window(g: &FinSupPermutation, w: &StructureWindow) -> Result<StructureWindow> {
    for p in g.support() {
        let image = g.apply(p);
        if (p < w.size) != (image < w.size) {
            return Err(Error::WindowNotClosed {
                size: w.size,
                point: p,
                image,
            });
        }
    }
    let mut facts: BTreeMap<String, BTreeSet<Vec<usize>>> = BTreeMap::new();
    for (rel, tuples) in &w.facts {
        let moved = tuples.iter().map(|t| g.apply_tuple(t)).collect();
        facts.insert(rel.clone(), moved);
    }
    StructureWindow::new(w.sig.clone(), w.size, facts)
}

/// Which built-in family (if any) an oracle derives from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyTag {
    Matching,
    StarForest,
    PureSet,
    MarkedFamily(BTreeSet<usize>),
    SampledWindowBacked,
    UserRule,
}

#[derive(Clone)]
enum EvalRule {
    Matching,
    StarForest,
    PureSet,
    Marked(BTreeSet<usize>),
    /// Facts from a window; false outside it.
    Window(StructureWindow),
    /// Pushforward of another oracle: eval at t is inner eval at g⁻¹(t).
    Pushforward {
        inner: Box<StructureOracle>,
        g_inv: FinSupPermutation,
    },
    /// Parameter-frozen view of another oracle, re-indexed to ℕ.
    Frozen {
        inner: Box<StructureOracle>,
        params: Vec<usize>,
        psig: ParamSignature,
    },
    User(Arc<dyn Fn(&str, &[usize]) -> bool + Send + Sync>),
}

/// Canonical invariant of a tuple's automorphism orbit, available in closed
/// form for the built-in families.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OrbitClass(pub Vec<String>);

/// A countable structure given by a total decidable atomic-fact rule.
#[derive(Clone)]
pub struct StructureOracle {
    sig: RelSignature,
    family: FamilyTag,
    rule: EvalRule,
}

impl std::fmt::Debug for StructureOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StructureOracle")
            .field("family", &self.family)
            .field("sig", &self.sig)
            .finish()
    }
}

fn graph_sig() -> RelSignature {
    RelSignature::new(vec![Symbol::new("R", 2)]).unwrap()
}

fn marked_sig() -> RelSignature {
    RelSignature::new(vec![Symbol::new("U", 1)]).unwrap()
}

impl StructureOracle {
    /// Build one of the built-in families.
    pub fn builtin(tag: &str, params: &[usize]) -> Result<Self> {
        match tag {
            "matching" => Ok(StructureOracle {
                sig: graph_sig(),
                family: FamilyTag::Matching,
                rule: EvalRule::Matching,
            }),
            "star-forest" => Ok(StructureOracle {
                sig: graph_sig(),
                family: FamilyTag::StarForest,
                rule: EvalRule::StarForest,
            }),
            "pure-set" => Ok(StructureOracle {
                sig: RelSignature::empty(),
                family: FamilyTag::PureSet,
                rule: EvalRule::PureSet,
            }),
            "marked" => {
                let marks: BTreeSet<usize> = params.iter().copied().collect();
                Ok(StructureOracle {
                    sig: marked_sig(),
                    family: FamilyTag::MarkedFamily(marks.clone()),
                    rule: EvalRule::Marked(marks),
                })
            }
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    /// An oracle backed by a finite window; all facts outside the window are
    /// false.
    pub fn from_window(w: StructureWindow) -> Self {
        StructureOracle {
            sig: w.sig().clone(),
            family: FamilyTag::SampledWindowBacked,
            rule: EvalRule::Window(w),
        }
    }

    /// An oracle defined by an arbitrary total rule.
    pub fn from_rule(
        sig: RelSignature,
        rule: Arc<dyn Fn(&str, &[usize]) -> bool + Send + Sync>,
    ) -> Self {
        StructureOracle {
            sig,
            family: FamilyTag::UserRule,
            rule: EvalRule::User(rule),
        }
    }

    pub fn sig(&self) -> &RelSignature {
        &self.sig
    }

    pub fn family(&self) -> &FamilyTag {
        &self.family
    }

    /// Atomic membership.
    pub fn eval(&self, relation: &str, tuple: &[usize]) -> Result<bool> {
        let arity = self.sig.arity_of(relation)?;
        if tuple.len() != arity {
            return Err(Error::ArityMismatch {
                relation: relation.to_string(),
                expected: arity,
                got: tuple.len(),
            });
        }
        Ok(self.eval_unchecked(relation, tuple))
    }

    fn eval_unchecked(&self, relation: &str, tuple: &[usize]) -> bool {
        match &self.rule {
            EvalRule::Matching => {
                let (n, m) = (tuple[0], tuple[1]);
                n != m && n / 2 == m / 2
            }
            EvalRule::StarForest => {
                let (n0, n1) = unpair(tuple[0]);
                let (m0, m1) = unpair(tuple[1]);
                n0 == m0 && ((n1 == 0 && m1 > 0) || (m1 == 0 && n1 > 0))
            }
            EvalRule::PureSet => false,
            EvalRule::Marked(marks) => marks.contains(&tuple[0]),
            EvalRule::Window(w) => w.holds(relation, tuple).unwrap_or(false),
            EvalRule::Pushforward { inner, g_inv } => {
                inner.eval_unchecked(relation, &g_inv.apply_tuple(tuple))
            }
            EvalRule::Frozen {
                inner,
                params,
                psig,
            } => {
                let sym = match psig.symbol(relation) {
                    Some(s) => s,
                    None => return false,
                };
                let originals: Vec<usize> = tuple
                    .iter()
                    .map(|&k| frozen_to_original(params, k))
                    .collect();
                let full = match embed_tuple(&originals, &sym.freeze, params) {
                    Ok(t) => t,
                    Err(_) => return false,
                };
                inner.eval_unchecked(&sym.base, &full)
            }
            EvalRule::User(f) => f(relation, tuple),
        }
    }

    /// The restriction to `{0..n-1}`.
    pub fn window_of(&self, n: usize) -> StructureWindow {
        let mut w = StructureWindow::empty(self.sig.clone(), n);
        for rel in self.sig.relations() {
            for t in tuples_over(n, rel.arity) {
                if self.eval_unchecked(&rel.name, &t) {
                    w.facts.entry(rel.name.clone()).or_default().insert(t);
                }
            }
        }
        w
    }

    /// Closed-form algebraic closure, present on built-in families.
    pub fn exact_acl(&self, a_bar: &[usize]) -> Option<BTreeSet<usize>> {
        let mut out: BTreeSet<usize> = a_bar.iter().copied().collect();
        match &self.family {
            FamilyTag::Matching => {
                for &a in a_bar {
                    out.insert(a ^ 1);
                }
                Some(out)
            }
            FamilyTag::StarForest => {
                for &a in a_bar {
                    let (x, y) = unpair(a);
                    if y > 0 {
                        out.insert(pair(x, 0));
                    }
                }
                Some(out)
            }
            FamilyTag::PureSet => Some(out),
            FamilyTag::MarkedFamily(marks) => {
                out.extend(marks.iter().copied());
                Some(out)
            }
            _ => None,
        }
    }

    /// For built-in families, the finite `B` with `acl(ā) ⊆ {ā} ∪ B` for
    /// every tuple, when one exists.
    pub fn exact_acl_bound(&self) -> Option<Option<BTreeSet<usize>>> {
        match &self.family {
            FamilyTag::Matching | FamilyTag::StarForest => Some(None),
            FamilyTag::PureSet => Some(Some(BTreeSet::new())),
            FamilyTag::MarkedFamily(marks) => Some(Some(marks.clone())),
            _ => None,
        }
    }

    /// Canonical invariant of the automorphism orbit of a tuple, in closed
    /// form for built-in families. Tuples have the same invariant iff some
    /// automorphism of the full structure maps one to the other.
    pub fn orbit_class(&self, tuple: &[usize]) -> Option<OrbitClass> {
        let eq: Vec<String> = equality_pattern(tuple)
            .into_iter()
            .map(|c| format!("e{c}"))
            .collect();
        let mut parts = eq;
        match &self.family {
            FamilyTag::Matching => {
                for (i, &a) in tuple.iter().enumerate() {
                    let partner = a ^ 1;
                    match tuple.iter().position(|&b| b == partner) {
                        Some(j) => parts.push(format!("p{i}:{j}")),
                        None => parts.push(format!("p{i}:-")),
                    }
                }
                Some(OrbitClass(parts))
            }
            FamilyTag::StarForest => {
                // role of each entry plus the same-star partition
                let stars: Vec<usize> = tuple.iter().map(|&a| unpair(a).0).collect();
                for (i, &a) in tuple.iter().enumerate() {
                    let (_, y) = unpair(a);
                    parts.push(format!("r{i}:{}", if y == 0 { "c" } else { "l" }));
                    let first = stars.iter().position(|&s| s == stars[i]).unwrap();
                    parts.push(format!("s{i}:{first}"));
                }
                Some(OrbitClass(parts))
            }
            FamilyTag::PureSet => Some(OrbitClass(parts)),
            FamilyTag::MarkedFamily(marks) => {
                for (i, &a) in tuple.iter().enumerate() {
                    parts.push(format!("m{i}:{}", marks.contains(&a)));
                }
                Some(OrbitClass(parts))
            }
            _ => None,
        }
    }
}

/// Pushforward of an oracle: `eval(result, R, t) = eval(s, R, g⁻¹(t))`.
pub fn act_oracle(g: &FinSupPermutation, s: &StructureOracle) -> StructureOracle {
    let family = match &s.family {
        FamilyTag::SampledWindowBacked => FamilyTag::SampledWindowBacked,
        _ => FamilyTag::UserRule,
    };
    StructureOracle {
        sig: s.sig.clone(),
        family,
        rule: EvalRule::Pushforward {
            inner: Box::new(s.clone()),
            g_inv: g.invert(),
        },
    }
}

/// The k-th element of ℕ∖{params} in increasing order.
pub fn frozen_to_original(params: &[usize], k: usize) -> usize {
    let mut sorted: Vec<usize> = params.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut x = k;
    for &p in &sorted {
        if p <= x {
            x += 1;
        }
    }
    x
}

/// Position of an element of ℕ∖{params} in the increasing enumeration.
pub fn original_to_frozen(params: &[usize], x: usize) -> Option<usize> {
    if params.contains(&x) {
        return None;
    }
    Some(x - params.iter().filter(|&&p| p < x).count())
}

/// The parameter-frozen view of an oracle: a structure over the freeze
/// language of `sig` with domain ℕ∖{c̄}, re-indexed to ℕ by the
/// order-preserving bijection.
pub fn freeze_structure(s: &StructureOracle, c_bar: &[usize]) -> Result<StructureOracle> {
    let set: BTreeSet<usize> = c_bar.iter().copied().collect();
    if set.len() != c_bar.len() {
        return Err(Error::NotInjective(c_bar.to_vec()));
    }
    let base = Signature::relational_only(s.sig.relations().to_vec())?;
    let psig = freeze_signature(&base, c_bar.len())?;
    Ok(StructureOracle {
        sig: psig.relational(),
        family: FamilyTag::UserRule,
        rule: EvalRule::Frozen {
            inner: Box::new(s.clone()),
            params: c_bar.to_vec(),
            psig,
        },
    })
}

/// All tuples over `{0..n-1}` of the given arity, in lexicographic order.
pub fn tuples_over(n: usize, arity: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        let mut next = Vec::with_capacity(out.len() * n);
        for t in &out {
            for v in 0..n {
                let mut t2 = t.clone();
                t2.push(v);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

fn equality_pattern(tuple: &[usize]) -> Vec<usize> {
    tuple
        .iter()
        .enumerate()
        .map(|(i, &v)| tuple.iter().position(|&w| w == v).unwrap().min(i))
        .collect()
}

/// The atomic diagram of a tuple: its equality pattern together with every
/// atomic fact among its positions (all relations, all position patterns).
/// Over a finite relational signature this is negation-complete, so value
/// equality of two `QfType`s means the tuples satisfy the same atomic
/// formulas.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QfType {
    equality_pattern: Vec<usize>,
    hits: BTreeSet<(String, Vec<usize>)>,
}

impl QfType {
    pub fn len(&self) -> usize {
        self.equality_pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equality_pattern.is_empty()
    }

    pub fn hits(&self) -> &BTreeSet<(String, Vec<usize>)> {
        &self.hits
    }
}

/// Compute the atomic diagram of a tuple in an oracle.
pub fn qftype(s: &StructureOracle, a_bar: &[usize]) -> QfType {
    let m = a_bar.len();
    let mut hits = BTreeSet::new();
    for rel in s.sig.relations() {
        for pattern in tuples_over(m, rel.arity) {
            let concrete: Vec<usize> = pattern.iter().map(|&i| a_bar[i]).collect();
            if s.eval_unchecked(&rel.name, &concrete) {
                hits.insert((rel.name.clone(), pattern));
            }
        }
    }
    QfType {
        equality_pattern: equality_pattern(a_bar),
        hits,
    }
}

/// Atomic diagram of a tuple inside a window.
pub fn qftype_window(w: &StructureWindow, a_bar: &[usize]) -> Result<QfType> {
    let m = a_bar.len();
    let mut hits = BTreeSet::new();
    for rel in w.sig.relations() {
        for pattern in tuples_over(m, rel.arity) {
            let concrete: Vec<usize> = pattern.iter().map(|&i| a_bar[i]).collect();
            if w.holds(&rel.name, &concrete)? {
                hits.insert((rel.name.clone(), pattern));
            }
        }
    }
    Ok(QfType {
        equality_pattern: equality_pattern(a_bar),
        hits,
    })
}

/// Value equality of atomic diagrams of equal length over one signature.
pub fn qftype_equal(t1: &QfType, t2: &QfType) -> Result<bool> {
    if t1.len() != t2.len() {
        return Err(Error::LengthMismatch(format!(
            "types of lengths {} and {}",
            t1.len(),
            t2.len()
        )));
    }
    Ok(t1 == t2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_round_trip() {
        for z in 0..500 {
            let (x, y) = unpair(z);
            assert_eq!(pair(x, y), z);
        }
        assert_eq!(pair(0, 0), 0);
    }

    #[test]
    fn matching_eval() {
        let m = StructureOracle::builtin("matching", &[]).unwrap();
        assert!(m.eval("R", &[0, 1]).unwrap());
        assert!(!m.eval("R", &[0, 2]).unwrap());
        assert!(m.eval("R", &[3, 2]).unwrap());
        assert!(!m.eval("R", &[1, 1]).unwrap());
        assert!(m.eval("R", &[0, 1, 2]).is_err());
    }

    #[test]
    fn pure_set_has_no_relations() {
        let p = StructureOracle::builtin("pure-set", &[]).unwrap();
        assert!(p.eval("R", &[0, 1]).is_err());
        assert_eq!(p.window_of(5).facts().len(), 0);
    }

    #[test]
    fn matching_window() {
        let m = StructureOracle::builtin("matching", &[]).unwrap();
        let w = m.window_of(2);
        assert_eq!(
            w.facts().get("R").unwrap(),
            &BTreeSet::from([vec![0, 1], vec![1, 0]])
        );
    }

    #[test]
    fn star_forest_structure() {
        let s = StructureOracle::builtin("star-forest", &[]).unwrap();
        // element 0 = center of star 0; element 2 = pair(0,1), its first leaf
        assert_eq!(pair(0, 1), 2);
        assert!(s.eval("R", &[0, 2]).unwrap());
        assert!(s.eval("R", &[2, 0]).unwrap());
        // element 1 = pair(1,0) = center of star 1
        assert!(!s.eval("R", &[0, 1]).unwrap());
        let w = s.window_of(3);
        assert_eq!(
            w.facts().get("R").unwrap(),
            &BTreeSet::from([vec![0, 2], vec![2, 0]])
        );
    }

    #[test]
    fn qftype_examples() {
        let m = StructureOracle::builtin("matching", &[]).unwrap();
        let t01 = qftype(&m, &[0, 1]);
        assert_eq!(t01.hits.len(), 2); // R(0,1) and R(1,0)
        let t02 = qftype(&m, &[0, 2]);
        assert!(t02.hits.is_empty());
        let t23 = qftype(&m, &[2, 3]);
        assert!(qftype_equal(&t01, &t23).unwrap());
        assert!(!qftype_equal(&t01, &t02).unwrap());
        let taa = qftype(&m, &[4, 4]);
        assert_eq!(taa.equality_pattern, vec![0, 0]);
    }

    #[test]
    fn act_window_examples() {
        let m = StructureOracle::builtin("matching", &[]).unwrap();
        let w = m.window_of(4);
        let id = FinSupPermutation::identity();
        assert_eq!(act_window(&id, &w).unwrap(), w);
        let sw = FinSupPermutation::swap(0, 1);
        let once = act_window(&sw, &w).unwrap();
        assert_eq!(act_window(&sw, &once).unwrap(), w);
        let g = FinSupPermutation::swap(0, 2);
        let moved = act_window(&g, &w).unwrap();
        assert_eq!(
            moved.facts().get("R").unwrap(),
            &BTreeSet::from([vec![2, 1], vec![1, 2], vec![0, 3], vec![3, 0]])
        );
        let out = FinSupPermutation::swap(0, 9);
        assert!(act_window(&out, &w).is_err());
    }

    #[test]
    fn act_oracle_matches_act_window() {
        let m = StructureOracle::builtin("matching", &[]).unwrap();
        let g = FinSupPermutation::from_cycles(&[vec![0, 2, 3]]).unwrap();
        let pushed = act_oracle(&g, &m);
        let direct = act_window(&g, &m.window_of(6)).unwrap();
        assert_eq!(pushed.window_of(6), direct);
    }

    #[test]
    fn window_monotone() {
        let s = StructureOracle::builtin("star-forest", &[]).unwrap();
        assert!(s.window_of(4).embeds_in(&s.window_of(9)));
    }

    #[test]
    fn reindex_bijection() {
        let params = [2usize, 6];
        for k in 0..30 {
            let x = frozen_to_original(&params, k);
            assert!(!params.contains(&x));
            assert_eq!(original_to_frozen(&params, x), Some(k));
        }
        assert_eq!(original_to_frozen(&params, 2), None);
        assert_eq!(frozen_to_original(&params, 0), 0);
        assert_eq!(frozen_to_original(&params, 2), 3);
    }

    #[test]
    fn freeze_matching_at_zero() {
        let m = StructureOracle::builtin("matching", &[]).unwrap();
        let frozen = freeze_structure(&m, &[0]).unwrap();
        // unary symbol R[c0,z] holds exactly where the original partner of 0
        // sits, i.e. original element 1 = frozen index 0
        assert!(frozen.eval("R[c0,z]", &[0]).unwrap());
        for k in 1..20 {
            assert!(!frozen.eval("R[c0,z]", &[k]).unwrap());
        }
        // binary symbol R[z,z] holds on re-indexed matched pairs off 0/1:
        // originals (2,3) are frozen indices (1,2)
        assert!(frozen.eval("R[z,z]", &[1, 2]).unwrap());
        assert!(!frozen.eval("R[z,z]", &[0, 1]).unwrap());
    }

    #[test]
    fn freeze_marked_family() {
        let s = StructureOracle::builtin("marked", &[0]).unwrap();
        let frozen = freeze_structure(&s, &[0]).unwrap();
        // U[z] holds nowhere off-parameter; U[c0] (nullary) holds
        for k in 0..20 {
            assert!(!frozen.eval("U[z]", &[k]).unwrap());
        }
        assert!(frozen.eval("U[c0]", &[]).unwrap());
    }

    #[test]
    fn freeze_pure_set_empty_signature() {
        let p = StructureOracle::builtin("pure-set", &[]).unwrap();
        let frozen = freeze_structure(&p, &[3]).unwrap();
        assert!(frozen.sig().relations().is_empty());
    }

    #[test]
    fn exact_acl_closed_forms() {
        let m = StructureOracle::builtin("matching", &[]).unwrap();
        assert_eq!(m.exact_acl(&[0]).unwrap(), BTreeSet::from([0, 1]));
        let s = StructureOracle::builtin("star-forest", &[]).unwrap();
        // 2 = pair(0,1) is a leaf of the star centered at pair(0,0) = 0
        assert_eq!(s.exact_acl(&[2]).unwrap(), BTreeSet::from([0, 2]));
        let p = StructureOracle::builtin("pure-set", &[]).unwrap();
        assert_eq!(p.exact_acl(&[3, 5]).unwrap(), BTreeSet::from([3, 5]));
        let mk = StructureOracle::builtin("marked", &[0, 3]).unwrap();
        assert_eq!(mk.exact_acl(&[7]).unwrap(), BTreeSet::from([0, 3, 7]));
    }

    #[test]
    fn orbit_class_distinguishes_roles() {
        let s = StructureOracle::builtin("star-forest", &[]).unwrap();
        let center = s.orbit_class(&[0]).unwrap();
        let leaf = s.orbit_class(&[2]).unwrap();
        assert_ne!(center, leaf);
        let other_center = s.orbit_class(&[1]).unwrap();
        assert_eq!(center, other_center);
        // two leaves of one star vs leaves of different stars
        let same_star = s.orbit_class(&[pair(0, 1), pair(0, 2)]).unwrap();
        let diff_star = s.orbit_class(&[pair(0, 1), pair(1, 1)]).unwrap();
        assert_ne!(same_star, diff_star);
    }
}
