//! Separated translates of a compact cylinder-described set.
//!
//! Given a highly algebraic built-in structure and a compact set `K` of
//! structures described by a forced initial window plus explicit numerical
//! moduli, this module builds a binary tree of permutation prefixes
//! `(ℓ_s, γ_s)` such that the translates of `K` under any two permutations
//! extending distinct leaves are disjoint — and certifies each leaf pair
//! with a replayable forced-fact conflict.
//!
//! Compactness itself is not computable from a cylinder description, so
//! [`CompactSetSpec`] carries the numbers a compactness argument would
//! extract: an affine bound `w` on the reach of algebraicity witnesses, and
//! (for star forests) gap moduli guaranteeing centers and leaves recur.
//! All searches enumerate `K`-consistent completions of bounded segments
//! and fail loudly at their horizons rather than fabricate certificates.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::perm::FinSupPermutation;
use crate::structure::{qftype_window, FamilyTag, QfType, StructureOracle, StructureWindow};

/// The monotone rule `w(n) = slope·n + offset`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineBound {
    pub slope: usize,
    pub offset: usize,
}

impl AffineBound {
    pub fn apply(&self, n: usize) -> usize {
        self.slope * n + self.offset
    }
}

/// Gap moduli for star-forest members of `K`: every window `[n, cg(n))`
/// contains a center, and every center `c` has a leaf in
/// `[n, slope_n·n + slope_c·c + offset)` for every `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarBounds {
    pub center_gap: AffineBound,
    pub leaf_slope_n: usize,
    pub leaf_slope_c: usize,
    pub leaf_offset: usize,
}

impl StarBounds {
    pub fn leaf_gap(&self, n: usize, c: usize) -> usize {
        self.leaf_slope_n * n + self.leaf_slope_c * c + self.leaf_offset
    }
}

/// A compact set of structures: everything isomorphic to the named family
/// that extends the forced window (positively and negatively complete on
/// its segment) and respects the numerical moduli. `bound` certifies that
/// every algebraicity witness of an element `< n` lies `< w(n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompactSetSpec {
    pub family: String,
    pub forced: StructureWindow,
    pub bound: AffineBound,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub star: Option<StarBounds>,
}

impl CompactSetSpec {
    pub fn oracle(&self) -> Result<StructureOracle> {
        StructureOracle::builtin(&self.family, &[])
    }

    /// Forced partner map of the matching segment (both directions).
    fn forced_partner(&self) -> Result<BTreeMap<usize, usize>> {
        let mut partner = BTreeMap::new();
        if let Some(edges) = self.forced.facts().get("R") {
            for e in edges {
                let (x, y) = (e[0], e[1]);
                if x == y {
                    return Err(Error::InvalidCompactSet(format!("loop at {x}")));
                }
                if let Some(&p) = partner.get(&x) {
                    if p != y {
                        return Err(Error::InvalidCompactSet(format!(
                            "{x} matched to both {p} and {y}"
                        )));
                    }
                }
                partner.insert(x, y);
            }
        }
        // symmetry of the forced facts
        for (&x, &y) in &partner {
            if partner.get(&y) != Some(&x) {
                return Err(Error::InvalidCompactSet(format!(
                    "forced edge ({x},{y}) lacks its converse"
                )));
            }
        }
        Ok(partner)
    }

    /// Check the invariants: family known, forced window consistent with
    /// the family's shape, bounds monotone and respected by forced facts.
    pub fn validate(&self) -> Result<()> {
        if self.bound.slope == 0 {
            return Err(Error::InvalidCompactSet("bound slope must be ≥ 1".into()));
        }
        match self.family.as_str() {
            "matching" => {
                let partner = self.forced_partner()?;
                for (&x, &y) in &partner {
                    if x < y && y >= self.bound.apply(x + 1) {
                        return Err(Error::InvalidCompactSet(format!(
                            "forced edge ({x},{y}) exceeds the reach bound w({}) = {}",
                            x + 1,
                            self.bound.apply(x + 1)
                        )));
                    }
                }
                Ok(())
            }
            "star-forest" => {
                let star = self
                    .star
                    .as_ref()
                    .ok_or_else(|| Error::InvalidCompactSet("star moduli required".into()))?;
                if star.center_gap.slope == 0 {
                    return Err(Error::InvalidCompactSet(
                        "center gap slope must be ≥ 1".into(),
                    ));
                }
                // forced graph must be a partial star forest: neighbors of a
                // multi-degree vertex must have degree 1 back to it
                let mut nbrs: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
                if let Some(edges) = self.forced.facts().get("R") {
                    for e in edges {
                        if e[0] == e[1] {
                            return Err(Error::InvalidCompactSet(format!("loop at {}", e[0])));
                        }
                        nbrs.entry(e[0]).or_default().insert(e[1]);
                        if !edges.contains(&vec![e[1], e[0]]) {
                            return Err(Error::InvalidCompactSet(format!(
                                "forced edge ({},{}) lacks its converse",
                                e[0], e[1]
                            )));
                        }
                    }
                }
                for (&v, vn) in &nbrs {
                    if vn.len() >= 2 {
                        for &u in vn {
                            if nbrs.get(&u).map(|s| s.len()).unwrap_or(0) != 1 {
                                return Err(Error::InvalidCompactSet(format!(
                                    "vertices {v} and {u} are both multi-degree"
                                )));
                            }
                        }
                    }
                }
                Ok(())
            }
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    /// Elements of the forced segment that every member must interpret as
    /// centers (degree ≥ 2 in the forced window).
    fn forced_centers(&self) -> BTreeSet<usize> {
        let mut deg: BTreeMap<usize, usize> = BTreeMap::new();
        if let Some(edges) = self.forced.facts().get("R") {
            for e in edges {
                if e[0] < e[1] {
                    *deg.entry(e[0]).or_default() += 1;
                    *deg.entry(e[1]).or_default() += 1;
                }
            }
        }
        deg.into_iter().filter(|&(_, d)| d >= 2).map(|(v, _)| v).collect()
    }
}

/// How a segment element is matched in a local completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Matched to another segment element.
    In(usize),
    /// Matched to some element left of the segment (feasibility certified
    /// by greedy slot assignment).
    OutLeft,
    /// Matched to some element right of the segment.
    OutRight,
}

/// Smallest `y` whose reach `w(y+1)` goes past `x`, i.e. that could be the
/// lower endpoint of an edge ending at `x`.
fn y_min(bound: &AffineBound, x: usize) -> usize {
    // minimal y with slope·(y+1) + offset ≥ x + 1
    let need = (x + 1).saturating_sub(bound.offset);
    let y1 = need.div_ceil(bound.slope).max(1);
    y1 - 1
}

const ENUMERATION_CAP: usize = 500_000;

struct MatchingEnumerator<'a> {
    spec: &'a CompactSetSpec,
    lo: usize,
    hi: usize,
    forced_partner: BTreeMap<usize, usize>,
    fsize: usize,
    count: usize,
}

impl<'a> MatchingEnumerator<'a> {
    fn new(spec: &'a CompactSetSpec, lo: usize, hi: usize) -> Result<Self> {
        Ok(MatchingEnumerator {
            forced_partner: spec.forced_partner()?,
            fsize: spec.forced.size(),
            spec,
            lo,
            hi,
            count: 0,
        })
    }

    /// Pre-assign forced matches; `None` if the forced facts already
    /// contradict the segment.
    fn seed(&self) -> Option<Vec<Option<Slot>>> {
        let mut slots: Vec<Option<Slot>> = vec![None; self.hi - self.lo];
        for x in self.lo..self.hi {
            if let Some(&p) = self.forced_partner.get(&x) {
                let s = if (self.lo..self.hi).contains(&p) {
                    Slot::In(p)
                } else if p < self.lo {
                    Slot::OutLeft
                } else {
                    Slot::OutRight
                };
                slots[x - self.lo] = Some(s);
            }
        }
        Some(slots)
    }

    /// Distinct off-segment partners must exist for all boundary-flagged
    /// elements: greedy smallest-slot assignment, which is optimal since
    /// admissible ranges are nested by the monotone bound.
    fn boundary_feasible(&self, slots: &[Option<Slot>]) -> bool {
        // left: x needs an unmatched y ∈ [y_min(x), lo), and an edge inside
        // the forced segment would have been forced
        let mut used: BTreeSet<usize> = BTreeSet::new();
        for x in self.lo..self.hi {
            if slots[x - self.lo] != Some(Slot::OutLeft) {
                continue;
            }
            if self.forced_partner.contains_key(&x) {
                continue; // concrete forced partner, nothing to assign
            }
            let found = (y_min(&self.spec.bound, x)..self.lo).find(|y| {
                !used.contains(y)
                    && !self.forced_partner.contains_key(y)
                    && !(x < self.fsize && *y < self.fsize)
            });
            match found {
                Some(y) => {
                    used.insert(y);
                }
                None => return false,
            }
        }
        // right: slots counted upward from hi, skipping forced partners
        let reserved: BTreeSet<usize> = self
            .forced_partner
            .iter()
            .filter(|&(&x, &p)| (self.lo..self.hi).contains(&x) && p >= self.hi)
            .map(|(_, &p)| p)
            .collect();
        let mut anonymous: Vec<usize> = (self.lo..self.hi)
            .filter(|&x| {
                slots[x - self.lo] == Some(Slot::OutRight) && !self.forced_partner.contains_key(&x)
            })
            .collect();
        anonymous.sort_by_key(|&x| self.spec.bound.apply(x + 1));
        let mut next = self.hi;
        for x in anonymous {
            while reserved.contains(&next) {
                next += 1;
            }
            if next >= self.spec.bound.apply(x + 1) {
                return false;
            }
            next += 1;
        }
        true
    }

    fn run(&mut self, visit: &mut dyn FnMut(&[Option<Slot>])) -> Result<usize> {
        let mut slots = match self.seed() {
            Some(s) => s,
            None => return Ok(0),
        };
        self.count = 0;
        self.recurse(&mut slots, visit)?;
        Ok(self.count)
    }

    fn recurse(
        &mut self,
        slots: &mut Vec<Option<Slot>>,
        visit: &mut dyn FnMut(&[Option<Slot>]),
    ) -> Result<()> {
        let x = match (self.lo..self.hi).find(|&x| slots[x - self.lo].is_none()) {
            Some(x) => x,
            None => {
                if self.boundary_feasible(slots) {
                    self.count += 1;
                    if self.count > ENUMERATION_CAP {
                        return Err(Error::SearchExhausted(format!(
                            "more than {ENUMERATION_CAP} completions on segment [{}, {})",
                            self.lo, self.hi
                        )));
                    }
                    visit(slots);
                }
                return Ok(());
            }
        };
        // partner inside the segment
        for y in (x + 1)..self.hi.min(self.spec.bound.apply(x + 1)) {
            if slots[y - self.lo].is_some() {
                continue;
            }
            // an unforced edge inside the complete forced segment is illegal
            if x < self.fsize && y < self.fsize {
                continue;
            }
            slots[x - self.lo] = Some(Slot::In(y));
            slots[y - self.lo] = Some(Slot::In(x));
            self.recurse(slots, visit)?;
            slots[x - self.lo] = None;
            slots[y - self.lo] = None;
        }
        // partner left of the segment
        if self.lo > y_min(&self.spec.bound, x) && x >= self.fsize {
            slots[x - self.lo] = Some(Slot::OutLeft);
            self.recurse(slots, visit)?;
            slots[x - self.lo] = None;
        }
        // partner right of the segment
        if self.spec.bound.apply(x + 1) > self.hi {
            slots[x - self.lo] = Some(Slot::OutRight);
            self.recurse(slots, visit)?;
            slots[x - self.lo] = None;
        }
        Ok(())
    }
}

/// Enumerate all `K`-consistent matchings of the segment `[lo, hi)`,
/// calling `visit` with the slot vector of each. Returns the count.
pub fn enumerate_matchings(
    spec: &CompactSetSpec,
    lo: usize,
    hi: usize,
    visit: &mut dyn FnMut(&[Option<Slot>]),
) -> Result<usize> {
    MatchingEnumerator::new(spec, lo, hi)?.run(visit)
}

/// The atomic types of the initial segment `(0..ℓ_s)` realized across
/// members of `K`. Over these exactly captured families, type equality of
/// segments is atomic-diagram equality, so the returned diagrams are the
/// capture predicates.
pub fn capture_relations(
    s: &StructureOracle,
    spec: &CompactSetSpec,
    ell_s: usize,
) -> Result<Vec<QfType>> {
    match s.family() {
        FamilyTag::Matching | FamilyTag::StarForest | FamilyTag::PureSet => {}
        _ => {
            return Err(Error::InvalidInput(
                "capture relations exist only for exactly captured built-in families".into(),
            ))
        }
    }
    if ell_s == 0 {
        let w = StructureWindow::empty(s.sig().clone(), 0);
        return Ok(vec![qftype_window(&w, &[])?]);
    }
    if *s.family() != FamilyTag::Matching {
        return Err(Error::InvalidInput(
            "segment-type enumeration implemented for the matching family".into(),
        ));
    }
    let tuple: Vec<usize> = (0..ell_s).collect();
    let mut types: BTreeSet<QfType> = BTreeSet::new();
    enumerate_matchings(spec, 0, ell_s, &mut |slots| {
        let mut w = StructureWindow::empty(s.sig().clone(), ell_s);
        for x in 0..ell_s {
            if let Some(Slot::In(y)) = slots[x] {
                w.insert_fact("R", vec![x, y]).unwrap();
            }
        }
        types.insert(qftype_window(&w, &tuple).unwrap());
    })?;
    Ok(types.into_iter().collect())
}

/// Per-edge construction data: the bounds extracted at this node, from
/// which both children's permutations are determined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtensionCert {
    /// A guaranteed relation instance inside `[ℓ_s, ℓ)` and a relation-free
    /// landing set `Z` of the same size.
    Case1 {
        ell: usize,
        z: Vec<usize>,
        /// Completions enumerated when certifying the guaranteed instance.
        completions: usize,
    },
    /// A guaranteed witness point in `[ℓ_s, ℓ)`, its algebraicity support
    /// in `[ℓ, ℓ′)`, and the horizon `ℓ″` beyond which that support has no
    /// further relation instances.
    Case2 {
        ell: usize,
        ell_prime: usize,
        ell_dprime: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub ell: usize,
    /// One-line permutation of `{0..ell-1}`.
    pub gamma: Vec<usize>,
    /// Present on internal nodes: how the children extend this node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtensionCert>,
}

/// The binary tree of permutation prefixes. Node keys are bitstrings
/// (`""`, `"0"`, `"01"`, …).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermTree {
    pub spec: CompactSetSpec,
    pub depth: usize,
    pub nodes: BTreeMap<String, TreeNode>,
}

fn extend_identity(gamma: &[usize], ell_new: usize) -> Vec<usize> {
    let mut g: Vec<usize> = gamma.to_vec();
    g.extend(gamma.len()..ell_new);
    g
}

fn involution_from_pairs(gamma: &[usize], pairs: &[(usize, usize)], ell_new: usize) -> Vec<usize> {
    let mut g = extend_identity(gamma, ell_new);
    for &(a, b) in pairs {
        g[a] = b;
        g[b] = a;
    }
    g
}

/// Whether every `K`-consistent completion has an in-segment edge with both
/// endpoints in `[ell_s, ell)`.
fn every_completion_has_edge(spec: &CompactSetSpec, ell_s: usize, ell: usize) -> Result<bool> {
    let lo = y_min(&spec.bound, ell_s).min(ell_s);
    let mut all = true;
    enumerate_matchings(spec, lo, ell, &mut |slots| {
        let has = (ell_s..ell).any(|x| match slots[x - lo] {
            Some(Slot::In(y)) => (ell_s..ell).contains(&y),
            _ => false,
        });
        all &= has;
    })?;
    Ok(all)
}

/// Extend a node by the mutually-algebraic-pair construction: find the
/// least `ℓ` such that every member of `K` has an edge inside `[ℓ_s, ℓ)`,
/// and a landing set `Z` whose gaps exceed the reach bound so that no
/// member has an edge inside `Z`.
pub fn case1_extend(
    spec: &CompactSetSpec,
    ell_s: usize,
    gamma_s: &[usize],
) -> Result<(TreeNode, TreeNode, ExtensionCert)> {
    let horizon = spec
        .bound
        .apply(spec.bound.apply(spec.bound.apply(ell_s + 1) + 1) + 1);
    let mut found = None;
    for ell in (ell_s + 2)..=horizon {
        if every_completion_has_edge(spec, ell_s, ell)? {
            found = Some(ell);
            break;
        }
    }
    let ell = found.ok_or_else(|| {
        Error::SearchExhausted(format!(
            "no guaranteed edge interval above {ell_s} within horizon {horizon}"
        ))
    })?;
    let lo = y_min(&spec.bound, ell_s).min(ell_s);
    let completions = enumerate_matchings(spec, lo, ell, &mut |_| {})?;
    let mut z = Vec::with_capacity(ell - ell_s);
    let mut next = ell;
    for _ in 0..(ell - ell_s) {
        z.push(next);
        next = spec.bound.apply(next + 1);
    }
    let ell_new = z.last().unwrap() + 1;
    let pairs: Vec<(usize, usize)> = (ell_s..ell).map(|k| (k, z[k - ell_s])).collect();
    let cert = ExtensionCert::Case1 {
        ell,
        z: z.clone(),
        completions,
    };
    let child0 = TreeNode {
        ell: ell_new,
        gamma: extend_identity(gamma_s, ell_new),
        extension: None,
    };
    let child1 = TreeNode {
        ell: ell_new,
        gamma: involution_from_pairs(gamma_s, &pairs, ell_new),
        extension: None,
    };
    Ok((child0, child1, cert))
}

/// Extend a node by the algebraic-over-a-tuple construction: `ℓ` so that
/// every member has a center in `[ℓ_s, ℓ)`, `ℓ′` so that every center
/// below `ℓ` has a leaf in `[ℓ, ℓ′)`, and `ℓ″` past the reach of any leaf
/// in `[ℓ, ℓ′)`.
pub fn case2_extend(
    spec: &CompactSetSpec,
    ell_s: usize,
    gamma_s: &[usize],
) -> Result<(TreeNode, TreeNode, ExtensionCert)> {
    let star = spec
        .star
        .as_ref()
        .ok_or_else(|| Error::InvalidCompactSet("star moduli required for case 2".into()))?;
    let forced_center = spec
        .forced_centers()
        .into_iter()
        .find(|&c| c >= ell_s)
        .map(|c| c + 1);
    let modulus_ell = star.center_gap.apply(ell_s).max(ell_s + 1);
    let ell = forced_center.map_or(modulus_ell, |f| f.min(modulus_ell));
    let ell_prime = (ell + 1).max(star.leaf_gap(ell, ell - 1));
    let ell_dprime = (ell_prime + 1).max(spec.bound.apply(ell_prime));
    let ell_new = ell_dprime + ell;
    let pairs: Vec<(usize, usize)> = (ell_s..ell).map(|k| (k, k + ell_dprime)).collect();
    let cert = ExtensionCert::Case2 {
        ell,
        ell_prime,
        ell_dprime,
    };
    let child0 = TreeNode {
        ell: ell_new,
        gamma: extend_identity(gamma_s, ell_new),
        extension: None,
    };
    let child1 = TreeNode {
        ell: ell_new,
        gamma: involution_from_pairs(gamma_s, &pairs, ell_new),
        extension: None,
    };
    Ok((child0, child1, cert))
}

/// Build the depth-`d` tree of permutation prefixes for the family of the
/// spec, choosing the extension shape from the family's algebraicity case.
pub fn build_tree(spec: &CompactSetSpec, depth: usize) -> Result<PermTree> {
    spec.validate()?;
    let case1 = match spec.family.as_str() {
        "matching" => true,
        "star-forest" => false,
        other => return Err(Error::UnknownFamily(other.to_string())),
    };
    let mut nodes = BTreeMap::new();
    nodes.insert(
        String::new(),
        TreeNode {
            ell: 0,
            gamma: Vec::new(),
            extension: None,
        },
    );
    let mut frontier = vec![String::new()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for key in frontier {
            let node = nodes.get(&key).unwrap().clone();
            let (c0, c1, cert) = if case1 {
                case1_extend(spec, node.ell, &node.gamma)?
            } else {
                case2_extend(spec, node.ell, &node.gamma)?
            };
            nodes.get_mut(&key).unwrap().extension = Some(cert);
            let k0 = format!("{key}0");
            let k1 = format!("{key}1");
            nodes.insert(k0.clone(), c0);
            nodes.insert(k1.clone(), c1);
            next.push(k0);
            next.push(k1);
        }
        frontier = next;
    }
    Ok(PermTree {
        spec: spec.clone(),
        depth,
        nodes,
    })
}

impl PermTree {
    pub fn node(&self, key: &str) -> Result<&TreeNode> {
        self.nodes
            .get(key)
            .ok_or_else(|| Error::InvalidInput(format!("no node {key:?} in tree")))
    }

    pub fn leaf_keys(&self) -> Vec<String> {
        (0..(1usize << self.depth))
            .map(|i| {
                (0..self.depth)
                    .rev()
                    .map(|b| if i & (1 << b) != 0 { '1' } else { '0' })
                    .collect()
            })
            .collect()
    }
}

/// The prefix representatives of the leaves: each leaf's permutation
/// extended by the identity.
pub fn leaf_permutations(tree: &PermTree) -> Result<Vec<FinSupPermutation>> {
    tree.leaf_keys()
        .iter()
        .map(|k| FinSupPermutation::from_window_perm(&tree.node(k)?.gamma))
        .collect()
}

/// The replayable conflict separating two leaf translates: a relation
/// instance forced inside `[ℓ_s, ℓ)` at the first branching node whose
/// image under `g = γ_1⁻¹ ∘ γ_0` lands in a region where `K` forbids it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointnessCertificate {
    pub leaf0: String,
    pub leaf1: String,
    /// The common prefix where the two branches split.
    pub node: String,
    pub relation: String,
    pub cert: ExtensionCert,
    /// `g` restricted to `[ℓ_s, ℓ)` in one-line form (domain offset ℓ_s).
    pub interval_image: Vec<usize>,
}

fn branch_point(a: &str, b: &str) -> Option<usize> {
    a.bytes().zip(b.bytes()).position(|(x, y)| x != y)
}

fn check_case1_claims(spec: &CompactSetSpec, ell_s: usize, cert: &ExtensionCert) -> Result<()> {
    let ExtensionCert::Case1 { ell, z, .. } = cert else {
        return Err(Error::InvalidInput("case-1 certificate expected".into()));
    };
    if z.len() != ell - ell_s || z.iter().any(|&p| p < *ell) {
        return Err(Error::CertificateFailure {
            node: format!("ℓ_s={ell_s}"),
            reason: "landing set has wrong size or meets the interval".into(),
        });
    }
    // (b): gaps beyond the reach bound mean no member relates two Z-points
    for (i, &p) in z.iter().enumerate() {
        for &q in &z[i + 1..] {
            if q < spec.bound.apply(p + 1) {
                return Err(Error::CertificateFailure {
                    node: format!("ℓ_s={ell_s}"),
                    reason: format!("landing points {p},{q} are within reach of each other"),
                });
            }
        }
    }
    // (a): every K-consistent completion has an edge inside the interval
    if !every_completion_has_edge(spec, ell_s, *ell)? {
        return Err(Error::CertificateFailure {
            node: format!("ℓ_s={ell_s}"),
            reason: format!("some member of K has no edge inside [{ell_s}, {ell})"),
        });
    }
    Ok(())
}

fn check_case2_claims(spec: &CompactSetSpec, ell_s: usize, cert: &ExtensionCert) -> Result<()> {
    let ExtensionCert::Case2 {
        ell,
        ell_prime,
        ell_dprime,
    } = cert
    else {
        return Err(Error::InvalidInput("case-2 certificate expected".into()));
    };
    let star = spec
        .star
        .as_ref()
        .ok_or_else(|| Error::InvalidCompactSet("star moduli required".into()))?;
    let fail = |reason: String| Error::CertificateFailure {
        node: format!("ℓ_s={ell_s}"),
        reason,
    };
    if !(ell_s < *ell && ell < ell_prime && ell_prime < ell_dprime) {
        return Err(fail("bounds are not strictly increasing".into()));
    }
    // (a): a center is guaranteed in [ℓ_s, ℓ) — by a forced center or by
    // the center-gap modulus
    let by_forced = spec.forced_centers().iter().any(|&c| (ell_s..*ell).contains(&c));
    let by_modulus = *ell >= star.center_gap.apply(ell_s);
    if !by_forced && !by_modulus {
        return Err(fail(format!("no center guaranteed in [{ell_s}, {ell})")));
    }
    // (b): the leaf-gap modulus puts a leaf of every center < ℓ in [ℓ, ℓ′)
    if *ell_prime < star.leaf_gap(*ell, *ell - 1) {
        return Err(fail(format!(
            "leaf horizon {ell_prime} below the leaf-gap modulus {}",
            star.leaf_gap(*ell, *ell - 1)
        )));
    }
    // (c): the reach bound keeps the center of any leaf in [ℓ, ℓ′) below ℓ″
    if *ell_dprime < spec.bound.apply(*ell_prime) {
        return Err(fail(format!(
            "reach horizon {ell_dprime} below w({ell_prime}) = {}",
            spec.bound.apply(*ell_prime)
        )));
    }
    Ok(())
}

/// Produce and replay the conflict for one leaf pair.
pub fn verify_disjoint(tree: &PermTree, leaf0: &str, leaf1: &str) -> Result<DisjointnessCertificate> {
    if leaf0 == leaf1 {
        return Err(Error::InvalidInput("leaf pair must be distinct".into()));
    }
    let pos = branch_point(leaf0, leaf1)
        .ok_or_else(|| Error::InvalidInput("leaves of unequal prefix".into()))?;
    let node_key = &leaf0[..pos];
    let node = tree.node(node_key)?;
    let cert = node.extension.clone().ok_or_else(|| Error::CertificateFailure {
        node: node_key.to_string(),
        reason: "branching node carries no extension certificate".into(),
    })?;
    let (zero_leaf, one_leaf) = if leaf0.as_bytes()[pos] == b'0' {
        (leaf0, leaf1)
    } else {
        (leaf1, leaf0)
    };
    let g0 = FinSupPermutation::from_window_perm(&tree.node(zero_leaf)?.gamma)?;
    let g1 = FinSupPermutation::from_window_perm(&tree.node(one_leaf)?.gamma)?;
    let g = g1.invert().compose(&g0);
    let ell_s = node.ell;
    let fail = |reason: String| Error::CertificateFailure {
        node: node_key.to_string(),
        reason,
    };
    match &cert {
        ExtensionCert::Case1 { ell, z, .. } => {
            check_case1_claims(&tree.spec, ell_s, &cert)?;
            // the interval with its guaranteed edge lands inside Z, where
            // no member of K has an edge
            let zset: BTreeSet<usize> = z.iter().copied().collect();
            let image: Vec<usize> = (ell_s..*ell).map(|x| g.apply(x)).collect();
            for (x, &gx) in (ell_s..*ell).zip(&image) {
                if !zset.contains(&gx) {
                    return Err(fail(format!("g({x}) = {gx} misses the landing set")));
                }
            }
            Ok(DisjointnessCertificate {
                leaf0: leaf0.into(),
                leaf1: leaf1.into(),
                node: node_key.into(),
                relation: "R".into(),
                cert,
                interval_image: image,
            })
        }
        ExtensionCert::Case2 {
            ell,
            ell_prime,
            ell_dprime,
        } => {
            check_case2_claims(&tree.spec, ell_s, &cert)?;
            // the guaranteed center is pushed past ℓ″ while its leaf
            // support in [ℓ, ℓ′) stays fixed — beyond the reach bound
            let image: Vec<usize> = (ell_s..*ell).map(|x| g.apply(x)).collect();
            for (x, &gx) in (ell_s..*ell).zip(&image) {
                if gx < *ell_dprime {
                    return Err(fail(format!("g({x}) = {gx} stays below ℓ″ = {ell_dprime}")));
                }
            }
            for x in *ell..*ell_prime {
                if g.apply(x) != x {
                    return Err(fail(format!("g moves the pinned support point {x}")));
                }
            }
            Ok(DisjointnessCertificate {
                leaf0: leaf0.into(),
                leaf1: leaf1.into(),
                node: node_key.into(),
                relation: "R".into(),
                cert,
                interval_image: image,
            })
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub nodes_checked: usize,
    pub pairs_checked: usize,
    pub certificates: Vec<DisjointnessCertificate>,
}

/// Check the structural tree invariants and replay every leaf-pair
/// certificate.
pub fn verify_tree(tree: &PermTree) -> Result<VerifyReport> {
    tree.spec.validate()?;
    let root = tree.node("")?;
    if root.ell != 0 || !root.gamma.is_empty() {
        return Err(Error::CertificateFailure {
            node: String::new(),
            reason: "root must carry the empty permutation on ℓ = 0".into(),
        });
    }
    let mut nodes_checked = 0;
    for (key, node) in &tree.nodes {
        FinSupPermutation::from_window_perm(&node.gamma)?;
        if node.gamma.len() != node.ell {
            return Err(Error::CertificateFailure {
                node: key.clone(),
                reason: "permutation length differs from ℓ".into(),
            });
        }
        if key.len() < tree.depth {
            let c0 = tree.node(&format!("{key}0"))?;
            let c1 = tree.node(&format!("{key}1"))?;
            if c0.ell != c1.ell || c0.ell <= node.ell {
                return Err(Error::CertificateFailure {
                    node: key.clone(),
                    reason: "children must share an ℓ strictly above the parent's".into(),
                });
            }
            for child in [c0, c1] {
                if child.gamma[..node.ell] != node.gamma[..] {
                    return Err(Error::CertificateFailure {
                        node: key.clone(),
                        reason: "child permutation does not extend the parent's".into(),
                    });
                }
            }
            // the certificate determines both children exactly
            let pairs: Vec<(usize, usize)> = match node.extension.as_ref() {
                Some(cert @ ExtensionCert::Case1 { ell, z, .. }) => {
                    check_case1_claims(&tree.spec, node.ell, cert)?;
                    (node.ell..*ell).map(|k| (k, z[k - node.ell])).collect()
                }
                Some(cert @ ExtensionCert::Case2 { ell, ell_dprime, .. }) => {
                    check_case2_claims(&tree.spec, node.ell, cert)?;
                    (node.ell..*ell).map(|k| (k, k + ell_dprime)).collect()
                }
                None => {
                    return Err(Error::CertificateFailure {
                        node: key.clone(),
                        reason: "internal node lacks an extension certificate".into(),
                    })
                }
            };
            if c0.gamma != extend_identity(&node.gamma, c0.ell)
                || c1.gamma != involution_from_pairs(&node.gamma, &pairs, c1.ell)
            {
                return Err(Error::CertificateFailure {
                    node: key.clone(),
                    reason: "child permutations differ from the certified construction".into(),
                });
            }
        }
        nodes_checked += 1;
    }
    let leaves = tree.leaf_keys();
    let mut certificates = Vec::new();
    for i in 0..leaves.len() {
        for j in (i + 1)..leaves.len() {
            certificates.push(verify_disjoint(tree, &leaves[i], &leaves[j])?);
        }
    }
    Ok(VerifyReport {
        nodes_checked,
        pairs_checked: certificates.len(),
        certificates,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExhaustiveReport {
    pub pairs: usize,
    pub completions_checked: usize,
}

/// Localized exhaustive check that no structure lies in two leaf
/// translates. A common point of `g_αK ∩ g_βK` would restrict, at the
/// first branching node, to a `K`-consistent completion of the local
/// segment whose guaranteed edge `g` maps into the forbidden region; the
/// branch data below the node cannot disturb that segment, so enumerating
/// the completions of the segment for every pair is equivalent to
/// enumerating all `K`-consistent windows of leaf size.
pub fn exhaustive_pairwise_check(tree: &PermTree) -> Result<ExhaustiveReport> {
    if tree.spec.family != "matching" {
        return Err(Error::InvalidInput(
            "exhaustive check implemented for the matching family".into(),
        ));
    }
    let leaves = tree.leaf_keys();
    let mut pairs = 0;
    let mut completions_checked = 0;
    for i in 0..leaves.len() {
        for j in (i + 1)..leaves.len() {
            let cert = verify_disjoint(tree, &leaves[i], &leaves[j])?;
            let node = tree.node(&cert.node)?;
            let Some(ExtensionCert::Case1 { ell, z, .. }) = &node.extension else {
                return Err(Error::InvalidInput("matching trees are case 1".into()));
            };
            let ell_s = node.ell;
            let spec = &tree.spec;
            let zset: BTreeSet<usize> = z.iter().copied().collect();
            let lo = y_min(&spec.bound, ell_s).min(ell_s);
            let mut all_conflict = true;
            let n = enumerate_matchings(spec, lo, *ell, &mut |slots| {
                // each completion must carry an edge whose g-image lies in
                // the edge-free landing set
                let conflicted = (ell_s..*ell).any(|x| match slots[x - lo] {
                    Some(Slot::In(y)) if (ell_s..*ell).contains(&y) => {
                        let gx = cert.interval_image[x - ell_s];
                        let gy = cert.interval_image[y - ell_s];
                        zset.contains(&gx) && zset.contains(&gy)
                    }
                    _ => false,
                });
                all_conflict &= conflicted;
            })?;
            if !all_conflict {
                return Err(Error::CertificateFailure {
                    node: cert.node.clone(),
                    reason: "a completion escapes the forced-fact conflict".into(),
                });
            }
            completions_checked += n;
            pairs += 1;
        }
    }
    Ok(ExhaustiveReport {
        pairs,
        completions_checked,
    })
}

/// The documented compact set for the matching family: forced edges
/// `R(0,1)`, `R(2,3)` and reach bound `w(n) = n + 3`.
pub fn matching_k_spec() -> Result<CompactSetSpec> {
    let oracle = StructureOracle::builtin("matching", &[])?;
    let spec = CompactSetSpec {
        family: "matching".into(),
        forced: oracle.window_of(4),
        bound: AffineBound { slope: 1, offset: 3 },
        star: None,
    };
    spec.validate()?;
    Ok(spec)
}

/// A compact set for the star-forest family: a forced center at 0 with
/// leaves 1 and 2, reach bound `w(n) = n + 1` (a leaf's center precedes
/// it), and gap moduli valid for the canonical enumeration.
pub fn star_forest_k_spec() -> Result<CompactSetSpec> {
    let sig = StructureOracle::builtin("star-forest", &[])?.sig().clone();
    let mut forced = StructureWindow::empty(sig, 3);
    for (a, b) in [(0, 1), (0, 2), (1, 0), (2, 0)] {
        forced.insert_fact("R", vec![a, b])?;
    }
    let spec = CompactSetSpec {
        family: "star-forest".into(),
        forced,
        bound: AffineBound { slope: 1, offset: 1 },
        star: Some(StarBounds {
            center_gap: AffineBound { slope: 2, offset: 2 },
            leaf_slope_n: 2,
            leaf_slope_c: 1,
            leaf_offset: 3,
        }),
    };
    spec.validate()?;
    Ok(spec)
}
