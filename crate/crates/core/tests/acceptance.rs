//! Acceptance gate: one pass/fail line per criterion.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::Instant;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quasirand::algebraicity::{
    acl_of, dichotomy_case, is_highly_algebraic, stabilizer_orbits, AclParams, DichotomyBounds,
    DichotomyCase, HAParams, HAStatus,
};
use quasirand::measures::{
    act_fibered, base_invariance_chi_square, beta_assemble, erdos_renyi, fibered_cocycle,
    marked_pipeline, nu_default, quasi_invariance_test, quasi_sample, EventSpec, FiberedSample,
};
use quasirand::perm::FinSupPermutation;
use quasirand::separation::{build_tree, exhaustive_pairwise_check, matching_k_spec, verify_tree};
use quasirand::signature::{freeze_signature, Signature, Symbol};
use quasirand::structure::{
    act_window, freeze_structure, frozen_to_original, qftype_window, StructureOracle,
    StructureWindow,
};

fn half() -> BigRational {
    BigRational::new(1.into(), 2.into())
}

/// 1. Classification suite for the four built-in families.
fn criterion_1() -> Result<(), String> {
    let cases = [
        ("matching", vec![], "case 1"),
        ("star-forest", vec![], "case 2"),
        ("pure-set", vec![], "not-ha"),
        ("marked", vec![0usize, 3], "not-ha"),
    ];
    for (family, params, expected) in cases {
        let start = Instant::now();
        let s = StructureOracle::builtin(family, &params).map_err(|e| e.to_string())?;
        let verdict = is_highly_algebraic(&s, &HAParams::default());
        let elapsed = start.elapsed();
        if elapsed.as_secs() >= 10 {
            return Err(format!("{family}: classification took {elapsed:?}"));
        }
        match (&verdict.status, expected) {
            (HAStatus::HighlyAlgebraic { case: 1, .. }, "case 1") => {}
            (HAStatus::HighlyAlgebraic { case: 2, .. }, "case 2") => {}
            (HAStatus::NotHighlyAlgebraic { bound_set }, "not-ha") => {
                let want: BTreeSet<usize> = params.iter().copied().collect();
                if *bound_set != want {
                    return Err(format!("{family}: bound set {bound_set:?}, wanted {want:?}"));
                }
            }
            (status, _) => return Err(format!("{family}: {status:?}, wanted {expected}")),
        }
    }
    Ok(())
}

fn tuples_up_to_two(domain: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for a in 0..domain {
        out.push(vec![a]);
        for b in 0..domain {
            out.push(vec![a, b]);
        }
    }
    out
}

/// 2. Counting-route acl agrees exactly with the family closed forms.
fn criterion_2() -> Result<(), String> {
    let params = AclParams::counting_only();
    for family in ["matching", "star-forest"] {
        let s = StructureOracle::builtin(family, &[]).map_err(|e| e.to_string())?;
        for a_bar in tuples_up_to_two(16) {
            let exact: BTreeSet<usize> = s
                .exact_acl(&a_bar)
                .ok_or("closed form missing")?
                .into_iter()
                .filter(|&b| b < 16)
                .collect();
            let counted = acl_of(&s, &a_bar, 16, &params).members();
            if counted != exact {
                return Err(format!(
                    "{family} ā={a_bar:?}: counted {counted:?}, closed form {exact:?}"
                ));
            }
        }
    }
    Ok(())
}

/// 3. Stabilizer orbits match atomic-type classes on padded windows.
fn criterion_3() -> Result<(), String> {
    let families: [(&str, Vec<usize>); 3] =
        [("matching", vec![]), ("pure-set", vec![]), ("marked", vec![0, 3])];
    for (family, params) in families {
        let s = StructureOracle::builtin(family, &params).map_err(|e| e.to_string())?;
        for n in [6usize, 8] {
            let w = s.window_of(n);
            let interior = n - 2;
            for a_bar in [vec![], vec![0], vec![0, 1]] {
                let orbits = stabilizer_orbits(&w, &a_bar).map_err(|e| e.to_string())?;
                let orbit_of = |b: usize| orbits.iter().position(|o| o.contains(&b)).unwrap();
                for b in 0..interior {
                    for b2 in (b + 1)..interior {
                        if a_bar.contains(&b) || a_bar.contains(&b2) {
                            continue;
                        }
                        let mut t1 = a_bar.clone();
                        t1.push(b);
                        let mut t2 = a_bar.clone();
                        t2.push(b2);
                        let same_type = qftype_window(&w, &t1).map_err(|e| e.to_string())?
                            == qftype_window(&w, &t2).map_err(|e| e.to_string())?;
                        let same_orbit = orbit_of(b) == orbit_of(b2);
                        if same_type != same_orbit {
                            return Err(format!(
                                "{family} n={n} ā={a_bar:?} b={b},{b2}: type {same_type} vs orbit {same_orbit}"
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn random_window_perm(rng: &mut ChaCha8Rng, n: usize, max_support: usize) -> FinSupPermutation {
    let k = rng.gen_range(0..=max_support.min(n));
    let mut points: Vec<usize> = Vec::new();
    while points.len() < k {
        let p = rng.gen_range(0..n);
        if !points.contains(&p) {
            points.push(p);
        }
    }
    let mut images = points.clone();
    for i in (1..images.len()).rev() {
        images.swap(i, rng.gen_range(0..=i));
    }
    let map = points.iter().copied().zip(images).collect();
    FinSupPermutation::from_map(map).unwrap()
}

/// 4. Exact equivariance of the assembly map on 1000 random instances.
fn criterion_4() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let base_sig = Signature::relational_only(vec![Symbol::new("E", 2), Symbol::new("U", 1)])
        .map_err(|e| e.to_string())?;
    for i in 0..1000 {
        let ell = rng.gen_range(1..=2usize);
        let n = rng.gen_range((ell + 2)..=32);
        let mut c_bar: Vec<usize> = Vec::new();
        while c_bar.len() < ell {
            let c = rng.gen_range(0..n);
            if !c_bar.contains(&c) {
                c_bar.push(c);
            }
        }
        let psig = freeze_signature(&base_sig, ell).map_err(|e| e.to_string())?;
        let frozen_sig = psig.relational();
        let mut frozen = StructureWindow::empty(frozen_sig.clone(), n - ell);
        for sym in frozen_sig.relations() {
            let mut tuple = vec![0usize; sym.arity];
            loop {
                if rng.r#gen::<bool>() {
                    frozen
                        .insert_fact(&sym.name, tuple.clone())
                        .map_err(|e| e.to_string())?;
                }
                let mut pos = 0;
                loop {
                    if pos == sym.arity {
                        break;
                    }
                    tuple[pos] += 1;
                    if tuple[pos] < n - ell {
                        break;
                    }
                    tuple[pos] = 0;
                    pos += 1;
                }
                if tuple.iter().all(|&e| e == 0) {
                    break;
                }
            }
        }
        let g = random_window_perm(&mut rng, n, 6);
        let fs = FiberedSample {
            reindex: (0..(n - ell)).map(|k| frozen_to_original(&c_bar, k)).collect(),
            c_bar: c_bar.clone(),
            frozen: frozen.clone(),
            rejections: 0,
        };
        let assembled = beta_assemble(&c_bar, &frozen, &base_sig, n).map_err(|e| e.to_string())?;
        let direct = act_window(&g, &assembled).map_err(|e| e.to_string())?;
        let moved = act_fibered(&g, &fs, &base_sig).map_err(|e| e.to_string())?;
        let reassembled = beta_assemble(&moved.c_bar, &moved.frozen, &base_sig, n)
            .map_err(|e| e.to_string())?;
        if direct != reassembled {
            return Err(format!("instance {i}: assembly orders disagree"));
        }
    }
    Ok(())
}

/// 5. Exact cocycle identity on 1000 random triples, and the CLI value.
fn criterion_5() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..1000 {
        let ell = rng.gen_range(1..=3usize);
        let nu = nu_default(ell);
        let mut c_bar: Vec<usize> = Vec::new();
        while c_bar.len() < ell {
            let c = rng.gen_range(0..24);
            if !c_bar.contains(&c) {
                c_bar.push(c);
            }
        }
        let g = random_window_perm(&mut rng, 24, 8);
        let h = random_window_perm(&mut rng, 24, 8);
        let gh = g.compose(&h);
        let lhs = fibered_cocycle(&nu, &gh, &c_bar).map_err(|e| e.to_string())?;
        let hc = h.apply_tuple(&c_bar);
        let rhs = fibered_cocycle(&nu, &g, &hc).map_err(|e| e.to_string())?.ratio
            * fibered_cocycle(&nu, &h, &c_bar).map_err(|e| e.to_string())?.ratio;
        if lhs.ratio != rhs {
            return Err(format!("triple {i}: cocycle identity violated"));
        }
    }
    let out = Command::new(env!("CARGO_BIN_EXE_quasirand"))
        .args(["cocycle", "--g", "(0 1)", "--cbar", "0,2", "--format", "text"])
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    if text.trim() != "1/2" {
        return Err(format!("cocycle CLI printed {text:?}, wanted 1/2"));
    }
    Ok(())
}

/// 6. Statistical quasi-invariance of the marked pipeline at 3σ.
fn criterion_6() -> Result<(), String> {
    let start = Instant::now();
    let mp = marked_pipeline(half()).map_err(|e| e.to_string())?;
    // exact ν-ratio oracle for the first event pair
    let w0 = mp.nu.weight(&[0]).map_err(|e| e.to_string())?;
    let w1 = mp.nu.weight(&[1]).map_err(|e| e.to_string())?;
    if w0 != BigRational::from_integer(2.into()) * w1.clone() {
        return Err("ν weights of c0=0 and c0=1 are not in exact ratio 2".into());
    }
    let count = 100_000;
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        samples.push(
            quasi_sample(&mp.nu, &mp.sampler, &mp.base_sig, &[0], 8, i as u64)
                .map_err(|e| e.to_string())?,
        );
    }
    let g = FinSupPermutation::swap(0, 1);
    let events = vec![
        EventSpec::CbarCoord { index: 0, value: 0 },
        EventSpec::CbarCoord { index: 0, value: 1 },
        EventSpec::WindowFact {
            relation: "E".into(),
            tuple: vec![2, 3],
            negated: false,
        },
    ];
    // α chosen so the two-sided critical value is 3σ
    let report = quasi_invariance_test(&samples, &mp.nu, &g, &events, 0.0027)
        .map_err(|e| e.to_string())?;
    if !report.pass {
        return Err(format!("quasi-invariance rejected: {:?}", report.events));
    }
    // sampled frequencies of the first pair track the exact ratio 2
    let diffs: Vec<f64> = samples
        .iter()
        .map(|(fs, _)| {
            (fs.c_bar[0] == 0) as u8 as f64 - 2.0 * ((fs.c_bar[0] == 1) as u8 as f64)
        })
        .collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    let z = mean / (var.sqrt() / n.sqrt());
    if z.abs() > 3.0 {
        return Err(format!("frequency ratio deviates from 2: z = {z:.2}"));
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 120 {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(())
}

/// 7. Base-sampler invariance by chi-square against the exact product law.
fn criterion_7() -> Result<(), String> {
    let sampler = erdos_renyi(half()).map_err(|e| e.to_string())?;
    let g = FinSupPermutation::parse_cycles("(0 1)(2 3)").map_err(|e| e.to_string())?;
    let report =
        base_invariance_chi_square(&sampler, "E", 4, &g, 10_000, 7).map_err(|e| e.to_string())?;
    if report.p_value <= 0.001 {
        return Err(format!("chi-square p = {}", report.p_value));
    }
    Ok(())
}

/// 8. The parameter-frozen marked structure has no algebraicity.
fn criterion_8() -> Result<(), String> {
    let s = StructureOracle::builtin("marked", &[0, 3]).map_err(|e| e.to_string())?;
    let frozen = freeze_structure(&s, &[0, 3]).map_err(|e| e.to_string())?;
    let params = AclParams {
        windows: vec![16, 32, 64],
        threshold: 32,
        use_exact: false,
    };
    for a_bar in tuples_up_to_two(16) {
        let want: BTreeSet<usize> = a_bar.iter().copied().collect();
        let got = acl_of(&frozen, &a_bar, 16, &params).members();
        if got != want {
            return Err(format!("ā={a_bar:?}: acl {got:?}, wanted {want:?}"));
        }
    }
    Ok(())
}

/// 9. Separation end-to-end on the documented matching compact set.
fn criterion_9() -> Result<(), String> {
    let start = Instant::now();
    let spec = matching_k_spec().map_err(|e| e.to_string())?;
    let tree = build_tree(&spec, 3).map_err(|e| e.to_string())?;
    if tree.nodes.len() != 15 {
        return Err(format!("{} nodes, wanted 15", tree.nodes.len()));
    }
    let report = verify_tree(&tree).map_err(|e| e.to_string())?;
    if report.nodes_checked != 15 || report.pairs_checked != 28 {
        return Err(format!(
            "verified {} nodes / {} pairs",
            report.nodes_checked, report.pairs_checked
        ));
    }
    let ex = exhaustive_pairwise_check(&tree).map_err(|e| e.to_string())?;
    if ex.pairs != 28 {
        return Err(format!("exhaustive check covered {} pairs", ex.pairs));
    }
    // the tree follows the family's algebraicity case
    let s = StructureOracle::builtin("matching", &[]).map_err(|e| e.to_string())?;
    match dichotomy_case(&s, &[], &DichotomyBounds::default()) {
        DichotomyCase::Case1 { .. } => {}
        other => return Err(format!("dichotomy gave {other:?}")),
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 60 {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(())
}

/// 10. Byte-identical CLI reports for identical (config, seed).
fn criterion_10() -> Result<(), String> {
    let runs: [&[&str]; 4] = [
        &["analyze", "--family", "matching"],
        &["cocycle", "--g", "(0 1)(4 6)", "--cbar", "0,2,5"],
        &["sample", "--count", "5", "--seed", "11", "--n", "12"],
        &["separate", "--family", "matching", "--depth", "2"],
    ];
    for args in runs {
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_quasirand"))
                .args(args)
                .output()
                .map_err(|e| e.to_string())
        };
        let (a, b) = (run()?, run()?);
        if a.stdout != b.stdout || a.status != b.status {
            return Err(format!("non-deterministic output for {args:?}"));
        }
        if a.stdout.is_empty() {
            return Err(format!("empty report for {args:?}"));
        }
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn() -> Result<(), String>)> = vec![
        ("1 classification suite", criterion_1),
        ("2 acl oracle equivalence", criterion_2),
        ("3 orbit cross-check", criterion_3),
        ("4 assembly equivariance", criterion_4),
        ("5 cocycle identity and exactness", criterion_5),
        ("6 statistical quasi-invariance", criterion_6),
        ("7 base-sampler invariance", criterion_7),
        ("8 frozen no-algebraicity", criterion_8),
        ("9 separation end-to-end", criterion_9),
        ("10 CLI determinism", criterion_10),
    ];
    let mut failures = Vec::new();
    for (name, f) in criteria {
        match f() {
            Ok(()) => println!("criterion {name}: PASS"),
            Err(e) => {
                println!("criterion {name}: FAIL — {e}");
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
