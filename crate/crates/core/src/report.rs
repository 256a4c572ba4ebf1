//! Report envelope and argument parsing shared by the CLI.
//!
//! Every report embeds the library version and the verbatim run
//! configuration; all maps are ordered, so serialization is byte-stable
//! for a fixed (config, seed).

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::VERSION;

#[derive(Debug, Clone, Serialize)]
pub struct Envelope<T: Serialize> {
    pub version: &'static str,
    pub config: serde_json::Value,
    pub report: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(config: &impl Serialize, report: T) -> Result<Self> {
        Ok(Envelope {
            version: VERSION,
            config: serde_json::to_value(config)?,
            report,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Comma-separated naturals: `"0,2,5"` (empty string → empty tuple).
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad entry {p:?} in list {s:?}")))
        })
        .collect()
}

/// An exact probability: `"p/q"` or a non-negative integer.
pub fn parse_probability(s: &str) -> Result<BigRational> {
    let mk_err = || Error::InvalidProbability(s.to_string());
    let parse_int = |t: &str| t.trim().parse::<BigInt>().map_err(|_| mk_err());
    let r = match s.split_once('/') {
        Some((num, den)) => {
            let d = parse_int(den)?;
            if d == BigInt::from(0) {
                return Err(mk_err());
            }
            BigRational::new(parse_int(num)?, d)
        }
        None => BigRational::from_integer(parse_int(s)?),
    };
    if r < BigRational::from_integer(0.into()) || r > BigRational::from_integer(1.into()) {
        return Err(mk_err());
    }
    Ok(r)
}
