//! Finite signatures, relationalization of function symbols, the
//! parameter-freeze language, and the tuple-embedding combinatorics that
//! connect a frozen structure back to the original one.
//!
//! Derived symbol names follow a fixed grammar so that signatures are
//! comparable by value:
//!
//! * relationalized function symbol `f` of arity `r` becomes relation `R_f`
//!   of arity `r + 1`;
//! * the freeze of relation `R` under an assignment is named
//!   `R[a0,...,an-1]` where each slot is `c<j>` (the j-th parameter) or `z`
//!   (a free position), e.g. `E[c0,z]`.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// A named symbol with an arity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

impl Symbol {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Symbol {
            name: name.into(),
            arity,
        }
    }
}

/// A finite first-order signature: relation symbols (arity >= 1) and
/// function symbols (arity >= 0; arity 0 is a constant).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    relations: Vec<Symbol>,
    functions: Vec<Symbol>,
}

impl Signature {
    pub fn new(relations: Vec<Symbol>, functions: Vec<Symbol>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for s in relations.iter().chain(functions.iter()) {
            if !names.insert(s.name.clone()) {
                return Err(Error::InvalidSignature(format!(
                    "duplicate symbol name {}",
                    s.name
                )));
            }
        }
        for r in &relations {
            if r.arity == 0 {
                return Err(Error::InvalidSignature(format!(
                    "relation {} has arity 0",
                    r.name
                )));
            }
        }
        Ok(Signature {
            relations,
            functions,
        })
    }

    pub fn relational_only(relations: Vec<Symbol>) -> Result<Self> {
        Signature::new(relations, Vec::new())
    }

    pub fn relations(&self) -> &[Symbol] {
        &self.relations
    }

    pub fn functions(&self) -> &[Symbol] {
        &self.functions
    }

    pub fn is_relational(&self) -> bool {
        self.functions.is_empty()
    }

    /// The purely relational view of a relational signature.
    pub fn relational(&self) -> Result<RelSignature> {
        if !self.is_relational() {
            return Err(Error::InvalidSignature(
                "signature contains function symbols".into(),
            ));
        }
        Ok(RelSignature {
            relations: self.relations.clone(),
        })
    }
}

/// A relational signature as used by windows and oracles. Unlike
/// [`Signature`], arity 0 is allowed here: freezing produces nullary
/// symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelSignature {
    relations: Vec<Symbol>,
}

impl RelSignature {
    pub fn new(relations: Vec<Symbol>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for s in &relations {
            if !names.insert(s.name.clone()) {
                return Err(Error::InvalidSignature(format!(
                    "duplicate symbol name {}",
                    s.name
                )));
            }
        }
        Ok(RelSignature { relations })
    }

    pub fn empty() -> Self {
        RelSignature {
            relations: Vec::new(),
        }
    }

    pub fn relations(&self) -> &[Symbol] {
        &self.relations
    }

    pub fn arity_of(&self, name: &str) -> Result<usize> {
        self.relations
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.arity)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.iter().any(|s| s.name == name)
    }
}

/// Replace every function symbol `f` of arity `r` by a relation `R_f` of
/// arity `r + 1` holding on `(x0..x{r-1}, y)` iff `f(x0..x{r-1}) = y`.
/// Relations of the input are kept untouched; the operation is the identity
/// on relational signatures.
pub fn relationalize(sig: &Signature) -> Result<Signature> {
    let mut relations = sig.relations().to_vec();
    for f in sig.functions() {
        relations.push(Symbol::new(format!("R_{}", f.name), f.arity + 1));
    }
    Signature::new(relations, Vec::new())
}

/// One position of a freeze assignment: either the j-th parameter of the
/// frozen tuple, or the free atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Atom {
    Param(usize),
    Z,
}

/// An assignment of the positions of an n-ary relation to parameters or the
/// free atom. The derived arity is the number of free positions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FreezeMap {
    assignment: Vec<Atom>,
}

impl FreezeMap {
    pub fn new(assignment: Vec<Atom>) -> Self {
        FreezeMap { assignment }
    }

    pub fn arity(&self) -> usize {
        self.assignment.len()
    }

    /// The number of free positions, i.e. the arity of the derived symbol.
    pub fn free_arity(&self) -> usize {
        self.assignment.iter().filter(|a| **a == Atom::Z).count()
    }

    pub fn assignment(&self) -> &[Atom] {
        &self.assignment
    }

    fn label(&self) -> String {
        let parts: Vec<String> = self
            .assignment
            .iter()
            .map(|a| match a {
                Atom::Param(j) => format!("c{j}"),
                Atom::Z => "z".to_string(),
            })
            .collect();
        format!("[{}]", parts.join(","))
    }
}

/// A derived symbol of the parameter-freeze language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSymbol {
    pub base: String,
    pub freeze: FreezeMap,
    pub name: String,
}

/// The language obtained from a relational signature by freezing a tuple of
/// `param_arity` parameters: one symbol per (relation, assignment) pair.
/// Parameter positions are stored as indices, so freeze languages for
/// different parameter tuples of equal length coincide.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSignature {
    pub base: Signature,
    pub param_arity: usize,
    pub symbols: Vec<ParamSymbol>,
}

impl ParamSignature {
    /// The relational view: each derived symbol as a plain relation.
    pub fn relational(&self) -> RelSignature {
        RelSignature {
            relations: self
                .symbols
                .iter()
                .map(|s| Symbol::new(s.name.clone(), s.freeze.free_arity()))
                .collect(),
        }
    }

    pub fn symbol(&self, name: &str) -> Option<&ParamSymbol> {
        self.symbols.iter().find(|s| s.name == name)
    }
}

/// Build the parameter-freeze language of a relational signature: for each
/// relation `R` of arity `n`, one symbol per assignment of the n positions
/// to `{c0..c{ell-1}} ∪ {z}`, with arity the number of `z` positions. The
/// total symbol count is `Σ_R (ell+1)^{arity(R)}`.
pub fn freeze_signature(sig: &Signature, ell: usize) -> Result<ParamSignature> {
    if !sig.is_relational() {
        return Err(Error::InvalidSignature(
            "freeze_signature requires a relational signature".into(),
        ));
    }
    let mut symbols = Vec::new();
    for rel in sig.relations() {
        let n = rel.arity;
        // enumerate assignments in base-(ell+1), digit 0 = Z, digit j+1 = Param(j)
        let total = (ell as u64 + 1).pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let mut assignment = Vec::with_capacity(n);
            for _ in 0..n {
                let digit = (c % (ell as u64 + 1)) as usize;
                c /= ell as u64 + 1;
                assignment.push(if digit == 0 {
                    Atom::Z
                } else {
                    Atom::Param(digit - 1)
                });
            }
            let fm = FreezeMap::new(assignment);
            let name = format!("{}{}", rel.name, fm.label());
            symbols.push(ParamSymbol {
                base: rel.name.clone(),
                freeze: fm,
                name,
            });
        }
    }
    symbols.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(ParamSignature {
        base: sig.clone(),
        param_arity: ell,
        symbols,
    })
}

/// Interleave a free tuple with parameter entries according to a freeze
/// assignment: position `i` of the result is `c[j]` when the assignment maps
/// `i` to the j-th parameter, and the free entries fill the `z` positions in
/// order.
pub fn embed_tuple(a_bar: &[usize], f: &FreezeMap, c_bar: &[usize]) -> Result<Vec<usize>> {
    if a_bar.len() != f.free_arity() {
        return Err(Error::LengthMismatch(format!(
            "free tuple has length {}, assignment has {} free positions",
            a_bar.len(),
            f.free_arity()
        )));
    }
    for &a in a_bar {
        if c_bar.contains(&a) {
            return Err(Error::ParameterCollision(a));
        }
    }
    let mut out = Vec::with_capacity(f.arity());
    let mut free = a_bar.iter();
    for atom in f.assignment() {
        match atom {
            Atom::Param(j) => {
                let c = c_bar.get(*j).ok_or_else(|| {
                    Error::LengthMismatch(format!(
                        "assignment references parameter {j} but tuple has length {}",
                        c_bar.len()
                    ))
                })?;
                out.push(*c);
            }
            Atom::Z => out.push(*free.next().expect("free arity checked")),
        }
    }
    Ok(out)
}

/// The unique decomposition of a full tuple over the parameters: entries
/// lying in the parameter tuple become parameter positions, the rest become
/// free positions. Inverse of [`embed_tuple`]; total on all tuples.
pub fn unembed_tuple(full: &[usize], c_bar: &[usize]) -> (Vec<usize>, FreezeMap) {
    let mut a_bar = Vec::new();
    let mut assignment = Vec::with_capacity(full.len());
    for &x in full {
        match c_bar.iter().position(|&c| c == x) {
            Some(j) => assignment.push(Atom::Param(j)),
            None => {
                assignment.push(Atom::Z);
                a_bar.push(x);
            }
        }
    }
    (a_bar, FreezeMap::new(assignment))
}
