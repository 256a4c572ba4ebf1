//! Permutations of the natural numbers with finite support. These carry the
//! logic action and the tree prefixes of the separation construction.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// A bijection of the naturals moving only finitely many points. Stored as
/// the graph restricted to the moved points.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FinSupPermutation {
    map: BTreeMap<usize, usize>,
}

impl FinSupPermutation {
    pub fn identity() -> Self {
        FinSupPermutation::default()
    }

    /// Build from an explicit finite graph; fixed points are dropped. The
    /// graph must be injective and its image must equal its domain.
    pub fn from_map(map: BTreeMap<usize, usize>) -> Result<Self> {
        let mut dropped = map;
        dropped.retain(|k, v| k != v);
        let domain: BTreeSet<usize> = dropped.keys().copied().collect();
        let image: BTreeSet<usize> = dropped.values().copied().collect();
        if domain.len() != image.len() || domain != image {
            return Err(Error::NotBijective(format!(
                "domain {domain:?} vs image {image:?}"
            )));
        }
        Ok(FinSupPermutation { map: dropped })
    }

    /// The transposition of two points.
    pub fn swap(a: usize, b: usize) -> Self {
        if a == b {
            return Self::identity();
        }
        let mut map = BTreeMap::new();
        map.insert(a, b);
        map.insert(b, a);
        FinSupPermutation { map }
    }

    /// Interpret a permutation of `{0..l-1}` given in one-line notation as a
    /// finite-support permutation of the naturals.
    pub fn from_window_perm(one_line: &[usize]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, &v) in one_line.iter().enumerate() {
            if v >= one_line.len() {
                return Err(Error::NotBijective(format!(
                    "value {v} out of range for window of size {}",
                    one_line.len()
                )));
            }
            map.insert(i, v);
        }
        Self::from_map(map)
    }

    /// Build from disjoint cycles.
    pub fn from_cycles(cycles: &[Vec<usize>]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for cycle in cycles {
            for w in 0..cycle.len() {
                let from = cycle[w];
                let to = cycle[(w + 1) % cycle.len()];
                if map.insert(from, to).is_some() {
                    return Err(Error::NotBijective(format!(
                        "point {from} appears in two cycles"
                    )));
                }
            }
        }
        Self::from_map(map)
    }

    /// Parse cycle notation such as `"(0 1)(2 3)"`. Whitespace or commas
    /// separate the points of a cycle; `"()"` or the empty string is the
    /// identity.
    pub fn parse_cycles(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() || text == "id" {
            return Ok(Self::identity());
        }
        let mut cycles = Vec::new();
        let mut rest = text;
        while !rest.is_empty() {
            let rest2 = rest.trim_start();
            if !rest2.starts_with('(') {
                return Err(Error::InvalidInput(format!(
                    "expected '(' in cycle notation at {rest2:?}"
                )));
            }
            let close = rest2.find(')').ok_or_else(|| {
                Error::InvalidInput("unbalanced parenthesis in cycle notation".into())
            })?;
            let inner = &rest2[1..close];
            let points: Vec<usize> = inner
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|_| Error::InvalidInput(format!("bad point {s:?} in cycle")))
                })
                .collect::<Result<_>>()?;
            if !points.is_empty() {
                cycles.push(points);
            }
            rest = &rest2[close + 1..];
        }
        Self::from_cycles(&cycles)
    }

    pub fn apply(&self, x: usize) -> usize {
        *self.map.get(&x).unwrap_or(&x)
    }

    pub fn apply_tuple(&self, t: &[usize]) -> Vec<usize> {
        t.iter().map(|&x| self.apply(x)).collect()
    }

    pub fn invert(&self) -> Self {
        FinSupPermutation {
            map: self.map.iter().map(|(&k, &v)| (v, k)).collect(),
        }
    }

    /// Composition `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut points: BTreeSet<usize> = self.map.keys().copied().collect();
        points.extend(other.map.keys().copied());
        let mut map = BTreeMap::new();
        for p in points {
            let v = self.apply(other.apply(p));
            if v != p {
                map.insert(p, v);
            }
        }
        FinSupPermutation { map }
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.map.keys().copied().collect()
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    /// Largest moved point, if any.
    pub fn max_moved(&self) -> Option<usize> {
        self.map.keys().next_back().copied()
    }

    /// Whether this permutation restricted to `{0..l-1}` equals the given
    /// window permutation (one-line notation) and maps that set onto itself.
    pub fn extends(&self, window_perm: &[usize]) -> bool {
        window_perm
            .iter()
            .enumerate()
            .all(|(i, &v)| self.apply(i) == v)
    }

    /// Whether `{0..n-1}` is closed under the permutation.
    pub fn preserves_window(&self, n: usize) -> bool {
        self.map.iter().all(|(&k, &v)| (k < n) == (v < n))
    }

    /// Render as cycle notation.
    pub fn to_cycles_string(&self) -> String {
        if self.map.is_empty() {
            return "id".to_string();
        }
        let mut seen = BTreeSet::new();
        let mut out = String::new();
        for &start in self.map.keys() {
            if seen.contains(&start) {
                continue;
            }
            let mut cycle = vec![start];
            seen.insert(start);
            let mut x = self.apply(start);
            while x != start {
                cycle.push(x);
                seen.insert(x);
                x = self.apply(x);
            }
            out.push('(');
            out.push_str(
                &cycle
                    .iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            );
            out.push(')');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_laws() {
        let g = FinSupPermutation::from_cycles(&[vec![0, 1, 2], vec![5, 7]]).unwrap();
        assert_eq!(g.compose(&g.invert()), FinSupPermutation::identity());
        assert_eq!(g.invert().compose(&g), FinSupPermutation::identity());
        let h = FinSupPermutation::swap(2, 9);
        let x = 2;
        assert_eq!(g.compose(&h).apply(x), g.apply(h.apply(x)));
    }

    #[test]
    fn window_perm_support() {
        let g = FinSupPermutation::from_window_perm(&[1, 0]).unwrap();
        assert_eq!(g.support(), BTreeSet::from([0, 1]));
        assert!(FinSupPermutation::from_window_perm(&[1, 1]).is_err());
    }

    #[test]
    fn extends_identity() {
        let id = FinSupPermutation::identity();
        let gamma: Vec<usize> = (0..7).collect();
        assert!(id.extends(&gamma));
        let g = FinSupPermutation::swap(3, 4);
        assert!(!g.extends(&gamma));
    }

    #[test]
    fn parse_and_print() {
        let g = FinSupPermutation::parse_cycles("(0 1)(2 3)").unwrap();
        assert_eq!(g.apply(0), 1);
        assert_eq!(g.apply(3), 2);
        assert_eq!(g.apply(4), 4);
        assert_eq!(
            FinSupPermutation::parse_cycles(&g.to_cycles_string()).unwrap(),
            g
        );
        assert!(FinSupPermutation::parse_cycles("id").unwrap().is_identity());
        assert!(FinSupPermutation::parse_cycles("(0 1 0)").is_err());
    }

    #[test]
    fn preserves_window() {
        let g = FinSupPermutation::swap(1, 5);
        assert!(!g.preserves_window(4));
        assert!(g.preserves_window(6));
    }
}
