//! Python bindings: thin JSON-bridged wrappers over the core library.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use quasirand::algebraicity::{
    acl_of, dichotomy_case, in_acl, is_highly_algebraic, AclParams, DichotomyBounds, HAParams,
};
use quasirand::measures::{fibered_cocycle, marked_pipeline, nu_default, quasi_sample};
use quasirand::perm::FinSupPermutation;
use quasirand::report::parse_probability;
use quasirand::separation::{build_tree, verify_tree, CompactSetSpec, PermTree};
use quasirand::structure::{qftype, StructureOracle};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn oracle(family: &str, params: Vec<usize>) -> PyResult<StructureOracle> {
    StructureOracle::builtin(family, &params).map_err(err)
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string_pretty(v).map_err(err)
}

/// Library version string.
#[pyfunction]
fn version() -> &'static str {
    quasirand::VERSION
}

/// Classify a built-in family; returns the verdict and dichotomy case as
/// JSON.
#[pyfunction]
#[pyo3(signature = (family, params=vec![]))]
fn analyze(family: &str, params: Vec<usize>) -> PyResult<String> {
    let s = oracle(family, params)?;
    let verdict = is_highly_algebraic(&s, &HAParams::default());
    let dichotomy = dichotomy_case(&s, &[], &DichotomyBounds::default());
    to_json(&serde_json::json!({ "verdict": verdict, "dichotomy": dichotomy }))
}

/// The atomic diagram of a tuple, as JSON.
#[pyfunction]
#[pyo3(signature = (family, a_bar, params=vec![]))]
fn tuple_qftype(family: &str, a_bar: Vec<usize>, params: Vec<usize>) -> PyResult<String> {
    let s = oracle(family, params)?;
    to_json(&qftype(&s, &a_bar))
}

/// Membership verdict for `b ∈ acl(ā)`, as JSON.
#[pyfunction]
#[pyo3(signature = (family, a_bar, b, params=vec![]))]
fn acl_verdict(family: &str, a_bar: Vec<usize>, b: usize, params: Vec<usize>) -> PyResult<String> {
    let s = oracle(family, params)?;
    to_json(&in_acl(&s, &a_bar, b, &AclParams::default()))
}

/// The definite members of `acl(ā)` below `domain`.
#[pyfunction]
#[pyo3(signature = (family, a_bar, domain, params=vec![]))]
fn acl_members(
    family: &str,
    a_bar: Vec<usize>,
    domain: usize,
    params: Vec<usize>,
) -> PyResult<Vec<usize>> {
    let s = oracle(family, params)?;
    Ok(acl_of(&s, &a_bar, domain, &AclParams::default())
        .members()
        .into_iter()
        .collect())
}

/// Exact cocycle `ν(g c̄)/ν(c̄)` under the default mixing measure, as a
/// `num/den` string. `g` is in cycle notation, e.g. `"(0 1)"`.
#[pyfunction]
fn cocycle(g: &str, c_bar: Vec<usize>) -> PyResult<String> {
    let g = FinSupPermutation::parse_cycles(g).map_err(err)?;
    let nu = nu_default(c_bar.len());
    Ok(fibered_cocycle(&nu, &g, &c_bar).map_err(err)?.ratio_string())
}

/// One draw from the marked-family mixture law: `(c̄, assembled window)`
/// as JSON.
#[pyfunction]
#[pyo3(signature = (p, n, seed))]
fn marked_sample(p: &str, n: usize, seed: u64) -> PyResult<String> {
    let pipeline = marked_pipeline(parse_probability(p).map_err(err)?).map_err(err)?;
    let (fs, window) = quasi_sample(&pipeline.nu, &pipeline.sampler, &pipeline.base_sig, &[0], n, seed)
        .map_err(err)?;
    to_json(&serde_json::json!({ "c_bar": fs.c_bar, "window": window }))
}

/// Build the separation tree for a built-in family's documented compact
/// set; returns the tree as JSON.
#[pyfunction]
fn separation_tree(family: &str, depth: usize) -> PyResult<String> {
    let spec: CompactSetSpec = match family {
        "matching" => quasirand::separation::matching_k_spec().map_err(err)?,
        "star-forest" => quasirand::separation::star_forest_k_spec().map_err(err)?,
        other => return Err(err(format!("unknown family {other:?}"))),
    };
    to_json(&build_tree(&spec, depth).map_err(err)?)
}

/// Replay every certificate of a separation tree given as JSON; returns
/// the verification report as JSON.
#[pyfunction]
fn verify_separation_tree(tree_json: &str) -> PyResult<String> {
    let tree: PermTree = serde_json::from_str(tree_json).map_err(err)?;
    to_json(&verify_tree(&tree).map_err(err)?)
}

#[pymodule]
fn quasirand_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(tuple_qftype, m)?)?;
    m.add_function(wrap_pyfunction!(acl_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(acl_members, m)?)?;
    m.add_function(wrap_pyfunction!(cocycle, m)?)?;
    m.add_function(wrap_pyfunction!(marked_sample, m)?)?;
    m.add_function(wrap_pyfunction!(separation_tree, m)?)?;
    m.add_function(wrap_pyfunction!(verify_separation_tree, m)?)?;
    Ok(())
}
