//! Command-line entry point: algebraicity analysis, quasi-invariant
//! sampling, exact cocycles, statistical invariance testing, and
//! separation certificate workflows.
//!
//! Exit codes: 0 definite verdict / success, 2 unknown or statistically
//! inconclusive, 1 error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use quasirand::algebraicity::{
    acl_of, dichotomy_case, is_highly_algebraic, AclParams, DichotomyBounds, DichotomyCase,
    HAParams, HAStatus, Membership,
};
use quasirand::error::{Error, Result};
use quasirand::measures::{
    fibered_cocycle, marked_pipeline, quasi_invariance_test, quasi_sample, EventSpec,
};
use quasirand::perm::FinSupPermutation;
use quasirand::report::{parse_probability, parse_usize_list, Envelope};
use quasirand::separation::{
    build_tree, exhaustive_pairwise_check, leaf_permutations, matching_k_spec,
    star_forest_k_spec, verify_disjoint, verify_tree, CompactSetSpec, PermTree,
};
use quasirand::structure::StructureOracle;

#[derive(Parser, Serialize)]
#[command(name = "quasirand", version, about = "Quasi-randomness analysis for countable relational structures")]
struct Cli {
    /// Report format: json or text.
    #[arg(long, global = true, default_value = "json")]
    format: String,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    #[serde(flatten)]
    cmd: Cmd,
}

#[derive(Subcommand, Serialize)]
enum Cmd {
    /// Classify a built-in structure: highly algebraic (with its case) or
    /// quasi-random.
    Analyze(AnalyzeArgs),
    /// Estimate the algebraic closure of a tuple.
    Acl(AclArgs),
    /// Draw windowed samples from the marked-family mixture law.
    Sample(SampleArgs),
    /// Exact Radon–Nikodym cocycle of a permutation at a parameter tuple.
    Cocycle(CocycleArgs),
    /// Importance-weighted statistical test of quasi-invariance.
    TestQuasi(TestQuasiArgs),
    /// Build a tree of permutations with pairwise disjoint K-translates.
    Separate(SeparateArgs),
    /// Replay the certificates of a separation tree.
    Verify(VerifyArgs),
}

#[derive(Args, Serialize)]
struct AnalyzeArgs {
    /// Built-in family: matching, star-forest, pure-set, marked.
    #[arg(long)]
    family: String,
    /// Family parameters (marked points), e.g. "0,3".
    #[arg(long, default_value = "")]
    params: String,
    #[arg(long, default_value_t = 6)]
    cbar_bound: usize,
    #[arg(long, default_value_t = 48)]
    search_bound: usize,
}

#[derive(Args, Serialize)]
struct AclArgs {
    #[arg(long)]
    family: String,
    #[arg(long, default_value = "")]
    params: String,
    /// The tuple ā, e.g. "0" or "0,1".
    #[arg(long)]
    abar: String,
    /// Estimate membership for every point below this bound.
    #[arg(long, default_value_t = 16)]
    domain: usize,
    #[arg(long, default_value = "16,32,64,128")]
    windows: String,
    #[arg(long, default_value_t = 32)]
    threshold: usize,
    /// Disable the exact closed-form route; counting evidence only.
    #[arg(long, default_value_t = false)]
    counting_only: bool,
}

#[derive(Args, Serialize)]
struct SampleArgs {
    /// Only the marked pipeline is built in.
    #[arg(long, default_value = "marked")]
    family: String,
    /// Number of frozen parameters.
    #[arg(long, default_value_t = 1)]
    ell: usize,
    /// Fiber edge probability, e.g. "1/2".
    #[arg(long, default_value = "1/2")]
    p: String,
    /// Window size of each sample.
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct CocycleArgs {
    /// Permutation in cycle notation, e.g. "(0 1)".
    #[arg(long)]
    g: String,
    /// Parameter tuple c̄, e.g. "0,2".
    #[arg(long)]
    cbar: String,
}

#[derive(Args, Serialize)]
struct TestQuasiArgs {
    #[arg(long)]
    g: String,
    /// JSON file holding an array of event specs.
    #[arg(long)]
    events: PathBuf,
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value = "1/2")]
    p: String,
}

#[derive(Args, Serialize)]
struct SeparateArgs {
    /// JSON file holding a CompactSetSpec; omit to use the documented
    /// default for --family.
    #[arg(long)]
    k_spec: Option<PathBuf>,
    #[arg(long, default_value = "matching")]
    family: String,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Write the full tree here (the report is a summary).
    #[arg(long)]
    tree_out: Option<PathBuf>,
    /// Also run the localized exhaustive completion check.
    #[arg(long, default_value_t = false)]
    exhaustive: bool,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// Tree JSON produced by `separate`.
    #[arg(long)]
    tree: PathBuf,
    /// Verify a single leaf pair, e.g. "000,111"; omit for all pairs.
    #[arg(long)]
    pair: Option<String>,
}

fn emit(cli: &Cli, json: String, text: String) -> Result<()> {
    let body = match cli.format.as_str() {
        "json" => json,
        "text" => {
            let mut t = text;
            if !t.ends_with('\n') {
                t.push('\n');
            }
            t
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown format {other:?} (expected json or text)"
            )))
        }
    };
    match &cli.out {
        Some(path) => fs::write(path, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn oracle_from(family: &str, params: &str) -> Result<StructureOracle> {
    StructureOracle::builtin(family, &parse_usize_list(params)?)
}

fn cmd_analyze(cli: &Cli, a: &AnalyzeArgs) -> Result<u8> {
    let s = oracle_from(&a.family, &a.params)?;
    let params = HAParams {
        cbar_bound: a.cbar_bound,
        search_bound: a.search_bound,
        ..HAParams::default()
    };
    let verdict = is_highly_algebraic(&s, &params);
    let bounds = DichotomyBounds::default();
    let dichotomy = dichotomy_case(&s, &[], &bounds);
    let (headline, code) = match &verdict.status {
        HAStatus::HighlyAlgebraic { case, .. } => {
            (format!("highly algebraic (case {case}): not quasi-random"), 0)
        }
        HAStatus::NotHighlyAlgebraic { .. } => {
            ("not highly algebraic: quasi-random (measure constructible)".to_string(), 0)
        }
        HAStatus::Unknown { .. } => ("unknown at these bounds".to_string(), 2),
    };
    #[derive(Serialize)]
    struct Report {
        headline: String,
        verdict: quasirand::algebraicity::HAVerdict,
        dichotomy: DichotomyCase,
    }
    let report = Report {
        headline: headline.clone(),
        verdict,
        dichotomy,
    };
    let env = Envelope::new(a, report)?;
    emit(cli, env.to_json()?, headline)?;
    Ok(code)
}

fn cmd_acl(cli: &Cli, a: &AclArgs) -> Result<u8> {
    let s = oracle_from(&a.family, &a.params)?;
    let a_bar = parse_usize_list(&a.abar)?;
    let params = AclParams {
        windows: parse_usize_list(&a.windows)?,
        threshold: a.threshold,
        use_exact: !a.counting_only,
    };
    let estimate = acl_of(&s, &a_bar, a.domain, &params);
    let members = estimate.members();
    let unknown: Vec<usize> = estimate
        .verdicts
        .iter()
        .filter(|(_, v)| v.member == Membership::Unknown)
        .map(|(&b, _)| b)
        .collect();
    let code = if unknown.is_empty() { 0 } else { 2 };
    #[derive(Serialize)]
    struct Report {
        members: Vec<usize>,
        unknown: Vec<usize>,
        estimate: quasirand::algebraicity::AclEstimate,
    }
    let text = format!(
        "acl({:?}) ∩ [0,{}) = {:?}; unknown: {:?}",
        a_bar, a.domain, members, unknown
    );
    let report = Report {
        members: members.into_iter().collect(),
        unknown,
        estimate,
    };
    emit(cli, Envelope::new(a, report)?.to_json()?, text)?;
    Ok(code)
}

fn cmd_sample(cli: &Cli, a: &SampleArgs) -> Result<u8> {
    if a.family != "marked" {
        return Err(Error::UnknownFamily(a.family.clone()));
    }
    if a.ell != 1 {
        return Err(Error::InvalidInput(
            "the marked pipeline carries exactly one parameter".into(),
        ));
    }
    let pipeline = marked_pipeline(parse_probability(&a.p)?)?;
    let anchor: Vec<usize> = (0..a.ell).collect();
    let mut digest = Sha256::new();
    let mut rejections = 0u64;
    let mut preview = Vec::new();
    for i in 0..a.count {
        let seed = quasirand::measures::derive_seed(a.seed, "sample", i as u64);
        let (fs, window) = quasi_sample(
            &pipeline.nu,
            &pipeline.sampler,
            &pipeline.base_sig,
            &anchor,
            a.n,
            seed,
        )?;
        rejections += fs.rejections as u64;
        let blob = serde_json::to_vec(&(&fs, &window))?;
        digest.update(&blob);
        if a.count <= 32 {
            preview.push((fs.c_bar.clone(), window));
        }
    }
    #[derive(Serialize)]
    struct Report {
        count: usize,
        window: usize,
        total_rejections: u64,
        digest: String,
        #[serde(skip_serializing_if = "Vec::is_empty")]
        samples: Vec<(Vec<usize>, quasirand::structure::StructureWindow)>,
    }
    let report = Report {
        count: a.count,
        window: a.n,
        total_rejections: rejections,
        digest: format!("{:x}", digest.finalize()),
        samples: preview,
    };
    let text = format!(
        "{} samples of window {} — digest {}",
        report.count, report.window, report.digest
    );
    emit(cli, Envelope::new(a, report)?.to_json()?, text)?;
    Ok(0)
}

fn cmd_cocycle(cli: &Cli, a: &CocycleArgs) -> Result<u8> {
    let g = FinSupPermutation::parse_cycles(&a.g)?;
    let c_bar = parse_usize_list(&a.cbar)?;
    let nu = quasirand::measures::nu_default(c_bar.len());
    let value = fibered_cocycle(&nu, &g, &c_bar)?;
    #[derive(Serialize)]
    struct Report {
        cocycle: String,
        log2: f64,
        dependency_support: Vec<usize>,
    }
    let report = Report {
        cocycle: value.ratio_string(),
        log2: value.log2_ratio(),
        dependency_support: value.dependency_support.iter().copied().collect(),
    };
    let text = report.cocycle.clone();
    emit(cli, Envelope::new(a, report)?.to_json()?, text)?;
    Ok(0)
}

fn cmd_test_quasi(cli: &Cli, a: &TestQuasiArgs) -> Result<u8> {
    let g = FinSupPermutation::parse_cycles(&a.g)?;
    let events: Vec<EventSpec> = serde_json::from_str(&fs::read_to_string(&a.events)?)?;
    let pipeline = marked_pipeline(parse_probability(&a.p)?)?;
    let mut samples = Vec::with_capacity(a.count);
    for i in 0..a.count {
        let seed = quasirand::measures::derive_seed(a.seed, "sample", i as u64);
        samples.push(quasi_sample(
            &pipeline.nu,
            &pipeline.sampler,
            &pipeline.base_sig,
            &[0],
            a.n,
            seed,
        )?);
    }
    let report = quasi_invariance_test(&samples, &pipeline.nu, &g, &events, a.alpha)?;
    let code = if report.pass { 0 } else { 2 };
    let text = format!(
        "quasi-invariance {} at α = {} over {} samples",
        if report.pass { "passes" } else { "is rejected" },
        report.alpha,
        report.sample_count
    );
    emit(cli, Envelope::new(a, report)?.to_json()?, text)?;
    Ok(code)
}

fn default_k_spec(family: &str) -> Result<CompactSetSpec> {
    match family {
        "matching" => matching_k_spec(),
        "star-forest" => star_forest_k_spec(),
        other => Err(Error::UnknownFamily(other.to_string())),
    }
}

fn cmd_separate(cli: &Cli, a: &SeparateArgs) -> Result<u8> {
    let spec: CompactSetSpec = match &a.k_spec {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => default_k_spec(&a.family)?,
    };
    let tree = build_tree(&spec, a.depth)?;
    let perms = leaf_permutations(&tree)?;
    let exhaustive = if a.exhaustive {
        Some(exhaustive_pairwise_check(&tree)?)
    } else {
        None
    };
    if let Some(path) = &a.tree_out {
        let mut json = serde_json::to_string_pretty(&tree)?;
        json.push('\n');
        fs::write(path, json)?;
    }
    #[derive(Serialize)]
    struct Report {
        nodes: usize,
        leaves: usize,
        leaf_ell: usize,
        leaf_permutations: Vec<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        exhaustive: Option<quasirand::separation::ExhaustiveReport>,
    }
    let leaf_ell = tree.node(&tree.leaf_keys()[0])?.ell;
    let report = Report {
        nodes: tree.nodes.len(),
        leaves: perms.len(),
        leaf_ell,
        leaf_permutations: perms.iter().map(|p| p.to_cycles_string()).collect(),
        exhaustive,
    };
    let text = format!(
        "tree of depth {} with {} nodes; {} leaves at ℓ = {}",
        a.depth, report.nodes, report.leaves, report.leaf_ell
    );
    emit(cli, Envelope::new(a, report)?.to_json()?, text)?;
    Ok(0)
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs) -> Result<u8> {
    let tree: PermTree = serde_json::from_str(&fs::read_to_string(&a.tree)?)?;
    match &a.pair {
        Some(pair) => {
            let (l0, l1) = pair
                .split_once(',')
                .ok_or_else(|| Error::InvalidInput(format!("bad pair {pair:?}")))?;
            let cert = verify_disjoint(&tree, l0.trim(), l1.trim())?;
            let text = format!(
                "translates of leaves {} and {} are disjoint (conflict at node {:?})",
                cert.leaf0, cert.leaf1, cert.node
            );
            emit(cli, Envelope::new(a, cert)?.to_json()?, text)?;
        }
        None => {
            let report = verify_tree(&tree)?;
            let text = format!(
                "verified {} nodes and {} leaf pairs",
                report.nodes_checked, report.pairs_checked
            );
            emit(cli, Envelope::new(a, report)?.to_json()?, text)?;
        }
    }
    Ok(0)
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.cmd {
        Cmd::Analyze(a) => cmd_analyze(cli, a),
        Cmd::Acl(a) => cmd_acl(cli, a),
        Cmd::Sample(a) => cmd_sample(cli, a),
        Cmd::Cocycle(a) => cmd_cocycle(cli, a),
        Cmd::TestQuasi(a) => cmd_test_quasi(cli, a),
        Cmd::Separate(a) => cmd_separate(cli, a),
        Cmd::Verify(a) => cmd_verify(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
