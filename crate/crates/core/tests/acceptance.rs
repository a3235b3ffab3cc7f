//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).

mod common;

use common::simulate_reference;
use hdlmutant_core::ast::{BinaryOp, ModuleAst};
use hdlmutant_core::design_gen::{generate_bounded_module, generate_module, GenConfig};
use hdlmutant_core::fragment::{
    element_probability, sample_start_element, transition_probability, CorpusStats, Element,
    FragmentModel,
};
use hdlmutant_core::harness::{
    reduce_case, run_campaign, BugClass, BugRecord, CampaignConfig, FirstDivergence,
    ReductionStatus, TriggerSide,
};
use hdlmutant_core::mutate::{
    delete_statement, gen_variant, EquivalenceStatus, GenContext, MutationConfig,
};
use hdlmutant_core::rng::{mix, SplitMix64};
use hdlmutant_core::synth::{
    synthesize, FaultProfile, SynthOutput, SynthStatus, ToolKind, ToolSpec,
};
use hdlmutant_core::testbench::testbench_for;
use hdlmutant_core::zombie::mark_zombie;
use hdlmutant_core::{compare_traces, emit, parse, simulate, StepLimit, StimulusConfig, Verdict};
use std::path::Path;
use std::time::{Duration, Instant};

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {n:02} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn quick_stimulus(seed: u64) -> StimulusConfig {
    StimulusConfig {
        rng_seed: seed,
        vector_count: 20,
        ..Default::default()
    }
}

// ----------------------------------------------------------------------------
// 1. Parser round-trip over ≥1,000 generated modules, < 60 s.
// ----------------------------------------------------------------------------
#[test]
fn criterion_01_parser_roundtrip() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(0xC1);
    let mut failures = 0usize;
    const N: usize = 1000;
    for _ in 0..N {
        let module = generate_module(&mut rng, &GenConfig::default());
        let source = emit(&module);
        let p1 = parse(&source).expect("generated module must parse");
        let p2 = parse(&emit(&p1)).expect("re-emission must parse");
        if !p1.structurally_equal(&p2) {
            failures += 1;
        }
    }
    let elapsed = started.elapsed();
    let pass = failures == 0 && elapsed < Duration::from_secs(60);
    report(
        1,
        "parser round-trip",
        pass,
        &format!("{N} modules, {failures} failures, {elapsed:.2?}"),
    );
}

// ----------------------------------------------------------------------------
// 2. Simulator vs brute-force reference on 200 designs ≤ 20 statements, <120 s.
// ----------------------------------------------------------------------------
#[test]
fn criterion_02_simulator_oracle() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(0xC2);
    let mut mismatches = 0usize;
    const N: usize = 200;
    for i in 0..N {
        let module = generate_bounded_module(&mut rng, &GenConfig::small(), 20);
        let tb = testbench_for(&module, &StimulusConfig::with_seed(i as u64)).unwrap();
        let (engine_trace, _) = simulate(&module, &tb, StepLimit::default())
            .unwrap_or_else(|e| panic!("engine failed on design {i}: {e}\n{}", emit(&module)));
        let reference_trace = simulate_reference(&module, &tb)
            .unwrap_or_else(|e| panic!("reference failed on design {i}: {e}"));
        if engine_trace != reference_trace {
            mismatches += 1;
            eprintln!("oracle mismatch on design {i}:\n{}", emit(&module));
        }
    }
    let elapsed = started.elapsed();
    let pass = mismatches == 0 && elapsed < Duration::from_secs(120);
    report(
        2,
        "simulator oracle",
        pass,
        &format!("{N} designs, {mismatches} trace mismatches, {elapsed:.2?}"),
    );
}

// ----------------------------------------------------------------------------
// 3. Coverage soundness: pruning any zero-hit site leaves the trace unchanged.
// ----------------------------------------------------------------------------
#[test]
fn criterion_03_coverage_soundness() {
    let mut rng = SplitMix64::new(0xC3);
    let cfg = GenConfig {
        zombie_bias: 1.0,
        ..Default::default()
    };
    let mut designs = 0usize;
    let mut sites = 0usize;
    let mut violations = 0usize;
    while designs < 100 {
        let module = generate_module(&mut rng, &cfg);
        let tb = testbench_for(&module, &quick_stimulus(designs as u64)).unwrap();
        let Ok((base_trace, cov)) = simulate(&module, &tb, StepLimit::default()) else {
            continue;
        };
        let annotation = mark_zombie(&module, &cov).unwrap();
        designs += 1;
        for &site in annotation.zombie_nodes.keys() {
            sites += 1;
            let mut pruned = module.clone();
            assert!(
                delete_statement(&mut pruned, site),
                "site must be deletable"
            );
            match simulate(&pruned, &tb, StepLimit::default()) {
                Ok((trace, _)) if trace == base_trace => {}
                _ => {
                    violations += 1;
                    eprintln!("pruning {site} changed the trace:\n{}", emit(&module));
                }
            }
        }
    }
    report(
        3,
        "coverage soundness",
        violations == 0,
        &format!("100 designs, {sites} zombie sites pruned, {violations} trace changes"),
    );
}

// ----------------------------------------------------------------------------
// 4. Sampler start distribution ±1% on the 0.6/0.4 model; Bayes identity 1e-9.
// ----------------------------------------------------------------------------
#[test]
fn criterion_04_sampler_distribution_and_bayes() {
    // Weighted model: f(+)=3 with C(+)=2 → 6; f(if-else)=1 with C(if-else)=4 → 4.
    let mut model = FragmentModel::default();
    let plus = Element::Binary(BinaryOp::Add);
    let if_else = Element::IfElse;
    model.freq.insert(plus, 3);
    model.weight.insert(plus, 2.0);
    model.freq.insert(if_else, 1);
    model.weight.insert(if_else, 4.0);

    let dist = element_probability(&model).unwrap();
    assert!((dist[&plus] - 0.6).abs() < 1e-12);
    assert!((dist[&if_else] - 0.4).abs() < 1e-12);

    const N: u32 = 100_000;
    let mut rng = SplitMix64::new(0xC4);
    let mut plus_count = 0u32;
    for _ in 0..N {
        if sample_start_element(&model, &mut rng).unwrap() == plus {
            plus_count += 1;
        }
    }
    let freq_plus = plus_count as f64 / N as f64;
    let freq_if = 1.0 - freq_plus;
    let dist_ok = (freq_plus - 0.6).abs() <= 0.01 && (freq_if - 0.4).abs() <= 0.01;

    // Bayes identity on the hand-counted sequence [+, if-else, +, <<].
    let seq = vec![plus, if_else, plus, Element::Binary(BinaryOp::Shl)];
    let stats = CorpusStats {
        files_ingested: 1,
        files_rejected: 0,
        sequences: vec![seq],
    };
    let counted = FragmentModel::from_corpus(&stats);
    let total: u64 = counted.transition_counts.values().sum();
    let mut bayes_max_err: f64 = 0.0;
    for (&(prev, next), &count) in &counted.transition_counts {
        let direct = transition_probability(&counted, next, prev).unwrap();
        let c_in_next: u64 = counted
            .transition_counts
            .iter()
            .filter(|((_, n), _)| *n == next)
            .map(|(_, c)| *c)
            .sum();
        let c_out_prev: u64 = counted
            .transition_counts
            .iter()
            .filter(|((p, _), _)| *p == prev)
            .map(|(_, c)| *c)
            .sum();
        // P(prev|next) · P(next) / P(prev) with count-based marginals.
        let p_prev_given_next = count as f64 / c_in_next as f64;
        let p_next = c_in_next as f64 / total as f64;
        let p_prev = c_out_prev as f64 / total as f64;
        let bayes = p_prev_given_next * p_next / p_prev;
        bayes_max_err = bayes_max_err.max((direct - bayes).abs());
    }
    // Spec'd spot values for the same sequence.
    assert!((transition_probability(&counted, plus, if_else).unwrap() - 1.0).abs() < 1e-12);
    assert!((transition_probability(&counted, if_else, plus).unwrap() - 0.5).abs() < 1e-12);

    let pass = dist_ok && bayes_max_err < 1e-9;
    report(
        4,
        "sampler distribution + Bayes identity",
        pass,
        &format!("start freq {freq_plus:.4}/{freq_if:.4}, bayes max err {bayes_max_err:.2e}"),
    );
}

// ----------------------------------------------------------------------------
// 5. Equivalence guarantee over a 10,000-variant run; ≥60% attempts survive.
// ----------------------------------------------------------------------------
#[test]
fn criterion_05_equivalence_guarantee() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(0xC5);
    let gen_cfg = GenConfig {
        zombie_bias: 1.0,
        max_stmts: 18,
        ..Default::default()
    };
    const SEEDS: usize = 25;
    const TOTAL_VARIANTS: usize = 10_000;

    // Seed corpus plus a fragment model mined from it.
    let mut seeds = Vec::new();
    for _ in 0..SEEDS {
        seeds.push(generate_module(&mut rng, &gen_cfg));
    }
    let stats = CorpusStats {
        files_ingested: SEEDS,
        files_rejected: 0,
        sequences: seeds
            .iter()
            .map(hdlmutant_core::fragment::linearize)
            .collect(),
    };
    let model = FragmentModel::from_corpus(&stats);

    // Preprocess each seed once.
    let mut prepared = Vec::new();
    for (i, seed) in seeds.iter().enumerate() {
        let stim = quick_stimulus(i as u64);
        let tb = testbench_for(seed, &stim).unwrap();
        let Ok((_, cov)) = simulate(seed, &tb, StepLimit::default()) else {
            continue;
        };
        prepared.push((seed, cov, stim));
    }
    assert!(!prepared.is_empty());

    let mcfg = MutationConfig::default();
    let mut attempts = 0u64;
    let mut survived = 0u64;
    let mut unverified_reached_harness = 0u64;
    for v in 0..TOTAL_VARIANTS {
        let (seed, cov, stim) = &prepared[v % prepared.len()];
        let ctx = GenContext {
            model: Some(&model),
            mcfg: &mcfg,
            stim,
            limits: StepLimit::default(),
        };
        let mut vrng = SplitMix64::new(mix(0xC5C5 ^ v as u64));
        let (variant, stats) = gen_variant(seed, cov, &ctx, &mut vrng);
        attempts += stats.attempts as u64;
        if stats.survived {
            survived += 1;
        }
        if variant.equivalence != EquivalenceStatus::Verified {
            unverified_reached_harness += 1;
        }
    }
    let ratio = survived as f64 / attempts.max(1) as f64;
    let elapsed = started.elapsed();
    let pass = unverified_reached_harness == 0 && attempts > 1000 && ratio >= 0.60;
    report(
        5,
        "equivalence guarantee",
        pass,
        &format!(
            "{TOTAL_VARIANTS} variants, {attempts} attempts, survival {:.1}%, {unverified_reached_harness} unverified, {elapsed:.2?}",
            ratio * 100.0
        ),
    );
}

// ----------------------------------------------------------------------------
// 6. No false positives: identity adapter over 100 seeds × 5 variants.
// ----------------------------------------------------------------------------
#[test]
fn criterion_06_no_false_positives() {
    let seeds_dir = tempfile::tempdir().unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    let mut rng = SplitMix64::new(0xC6);
    let cfg = GenConfig {
        zombie_bias: 0.8,
        ..Default::default()
    };
    for i in 0..100 {
        let m = generate_module(&mut rng, &cfg);
        std::fs::write(seeds_dir.path().join(format!("seed{i:03}.v")), emit(&m)).unwrap();
    }
    let config = CampaignConfig {
        seeds_dir: seeds_dir.path().to_path_buf(),
        tools: vec![ToolSpec::identity()],
        fragment_model_path: None,
        rng_seed: 0xC6,
        variants_per_seed: 5,
        max_iterations: Some(100),
        wall_clock_budget_secs: None,
        workers: 2,
        output_dir: out_dir.path().to_path_buf(),
        stimulus: quick_stimulus(0),
        seed_pool_capacity: 512,
        mutation: None,
    };
    let outcome = run_campaign(&config).unwrap();
    let pass = outcome.bugs.is_empty() && outcome.iterations_run == 100;
    report(
        6,
        "no false positives",
        pass,
        &format!(
            "{} iterations, {} variants, {} bug records",
            outcome.iterations_run,
            outcome.variants_generated,
            outcome.bugs.len()
        ),
    );
}

// ----------------------------------------------------------------------------
// 7. Injected-bug detection: each faulty profile yields a reproduced M within
//    200 variant trials; hang and crash classify on the first trial.
// ----------------------------------------------------------------------------

/// Seeds with one live occurrence of the faulted construct and a dead region
/// dense with more, so the content-hashed fault site lands asymmetrically
/// between seed and pruned variant.
fn profile_seed(profile: FaultProfile) -> &'static str {
    match profile {
        FaultProfile::AndToOr => {
            "module top(input clk, input [7:0] a, input [7:0] b, output reg [7:0] y);\n\
             always @(posedge clk) begin\n\
               y <= a & b;\n\
               if (1'h0) begin\n\
                 y <= a & 8'h0f;\n\
                 y <= b & 8'hf0;\n\
                 y <= (a & 8'h01) + (b & 8'h02);\n\
               end\n\
             end\nendmodule"
        }
        FaultProfile::DropSigned => {
            "module top(input clk, input [7:0] a, input [7:0] b, output reg [7:0] y);\n\
             always @(posedge clk) begin\n\
               y <= $signed(a[3:0]);\n\
               if (1'h0) begin\n\
                 y <= $signed(b[3:0]);\n\
                 y <= $signed(a[5:0]);\n\
                 y <= $signed(a) - $signed(b);\n\
               end\n\
             end\nendmodule"
        }
        FaultProfile::OffByOneShift => {
            "module top(input clk, input [7:0] a, input [7:0] b, output reg [7:0] y);\n\
             always @(posedge clk) begin\n\
               y <= a << 1;\n\
               if (1'h0) begin\n\
                 y <= a << 2;\n\
                 y <= b >> 1;\n\
                 y <= (a >> 3) + (b << 2);\n\
               end\n\
             end\nendmodule"
        }
    }
}

fn faulty_campaign(profile: FaultProfile) -> (u64, usize, bool) {
    let seeds_dir = tempfile::tempdir().unwrap();
    let out_dir = tempfile::tempdir().unwrap();
    std::fs::write(seeds_dir.path().join("seed.v"), profile_seed(profile)).unwrap();
    let config = CampaignConfig {
        seeds_dir: seeds_dir.path().to_path_buf(),
        tools: vec![ToolSpec::faulty(profile)],
        fragment_model_path: None,
        rng_seed: 0xC7,
        variants_per_seed: 5,
        max_iterations: Some(40), // 40 × 5 = 200 variant trials at most
        wall_clock_budget_secs: None,
        workers: 1,
        output_dir: out_dir.path().to_path_buf(),
        stimulus: quick_stimulus(7),
        seed_pool_capacity: 128,
        mutation: None,
    };
    let outcome = run_campaign(&config).unwrap();
    let m_bugs = outcome
        .bugs
        .iter()
        .filter(|b| b.class == BugClass::M && b.reproduced)
        .count();
    (outcome.variants_generated, m_bugs, !outcome.bugs.is_empty())
}

#[test]
fn criterion_07_injected_bug_detection() {
    let mut detail = String::new();
    let mut pass = true;
    for profile in [
        FaultProfile::AndToOr,
        FaultProfile::DropSigned,
        FaultProfile::OffByOneShift,
    ] {
        let (trials, m_bugs, _) = faulty_campaign(profile);
        detail.push_str(&format!("{profile:?}: {m_bugs} M in ≤{trials} trials; "));
        if m_bugs == 0 || trials > 200 {
            pass = false;
        }
    }

    // Hang and crash must classify on the first trial.
    for (kind, class) in [
        (ToolKind::BuiltinHang, BugClass::H),
        (ToolKind::BuiltinCrash, BugClass::C),
    ] {
        let seeds_dir = tempfile::tempdir().unwrap();
        let out_dir = tempfile::tempdir().unwrap();
        std::fs::write(
            seeds_dir.path().join("seed.v"),
            profile_seed(FaultProfile::AndToOr),
        )
        .unwrap();
        let mut tool = ToolSpec::builtin("t", kind);
        tool.timeout_secs = 1;
        let config = CampaignConfig {
            seeds_dir: seeds_dir.path().to_path_buf(),
            tools: vec![tool],
            fragment_model_path: None,
            rng_seed: 1,
            variants_per_seed: 1,
            max_iterations: Some(1),
            wall_clock_budget_secs: None,
            workers: 1,
            output_dir: out_dir.path().to_path_buf(),
            stimulus: quick_stimulus(7),
            seed_pool_capacity: 8,
            mutation: None,
        };
        let outcome = run_campaign(&config).unwrap();
        let got = outcome.bugs.first().map(|b| (b.class, b.reproduced));
        detail.push_str(&format!("{kind:?}: {got:?}; "));
        if got != Some((class, true)) {
            pass = false;
        }
    }
    report(7, "injected-bug detection", pass, &detail);
}

// ----------------------------------------------------------------------------
// 8. Reduction: reproduces, never grows, deletion-minimal; ≥10 cases.
// ----------------------------------------------------------------------------

fn constructed_case(dir: &Path, junk: usize, salt: u64) -> (BugRecord, ToolSpec, ModuleAst) {
    // Exactly one live `&` so the content-hashed fault site is stable under
    // deletions; `junk` extra statements are noise the reducer should strip.
    let mut body = String::from("  y <= a & b;\n");
    let mut decls = String::new();
    for k in 0..junk {
        decls.push_str(&format!("reg [7:0] s{k};\n"));
        match k % 3 {
            0 => body.push_str(&format!("  s{k} <= a + 8'h{:02x};\n", k + 1)),
            1 => body.push_str(&format!("  s{k} <= b ^ 8'h{:02x};\n", salt & 0xff)),
            _ => body.push_str(&format!(
                "  if (1'h0) begin s{k} <= 8'h{:02x}; end\n",
                (salt >> 8) & 0xff
            )),
        }
    }
    let src = format!(
        "module top(input clk, input [7:0] a, input [7:0] b, output reg [7:0] y);\n\
         {decls}always @(posedge clk) begin\n{body}end\nendmodule"
    );
    let design = parse(&src).unwrap();
    let tool = ToolSpec::faulty(FaultProfile::AndToOr);
    let case_dir = dir.join(format!("case{junk}_{salt}"));
    std::fs::create_dir_all(&case_dir).unwrap();
    let seed_file = case_dir.join("seed.v");
    let variant_file = case_dir.join("variant.v");
    std::fs::write(&seed_file, emit(&design)).unwrap();
    std::fs::write(&variant_file, emit(&design)).unwrap();
    std::fs::write(case_dir.join("testbench.v"), "// constructed\n").unwrap();
    let record = BugRecord {
        id: format!("case{junk}"),
        class: BugClass::M,
        tool: tool.name.clone(),
        fingerprint: format!("M:{}:y", tool.name),
        seed_file,
        variant_file,
        testbench_file: case_dir.join("testbench.v"),
        first_divergence: Some(FirstDivergence {
            time: 0,
            port: "y".into(),
        }),
        reproduced: true,
        reduced_ref: None,
        trigger: TriggerSide::Variant,
        iteration: 0,
        variant_index: 0,
        rng_seed: salt,
        stimulus: quick_stimulus(salt),
        mutation_log: Vec::new(),
        tool_spec: tool.clone(),
        created_at_epoch_secs: 0,
    };
    (record, tool, design)
}

/// Independent mismatch oracle used to verify reduction results: the design,
/// synthesized by the tool, must diverge from itself on `port`.
fn mismatch_fires(
    design: &ModuleAst,
    tool: &ToolSpec,
    stim: &StimulusConfig,
    port: &str,
    scratch: &Path,
) -> bool {
    std::fs::create_dir_all(scratch).unwrap();
    let path = scratch.join("check.v");
    std::fs::write(&path, emit(design)).unwrap();
    let Ok(result) = synthesize(tool, &path, &scratch.join("synth")) else {
        return false;
    };
    let SynthStatus::Ok(SynthOutput::Design(netlist)) = result.status else {
        return false;
    };
    let Ok(tb) = testbench_for(design, stim) else {
        return false;
    };
    let Ok((a, _)) = simulate(design, &tb, StepLimit::default()) else {
        return false;
    };
    let Ok((b, _)) = simulate(&netlist, &tb, StepLimit::default()) else {
        return false;
    };
    match compare_traces(&a, &b) {
        Ok(Verdict::Mismatch { .. }) => a
            .outputs
            .iter()
            .zip(b.outputs.iter())
            .any(|((name, va), (_, vb))| name == port && va != vb),
        _ => false,
    }
}

#[test]
fn criterion_08_reduction() {
    let dir = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut detail = String::new();
    let mut cases = 0;
    for junk in 1..=10usize {
        let (record, tool, original) = constructed_case(dir.path(), junk, junk as u64 * 7919);
        // Precondition: the constructed case fires at all.
        if !mismatch_fires(
            &original,
            &tool,
            &record.stimulus,
            "y",
            &dir.path().join("pre"),
        ) {
            // A case whose live `&` the content hash happened to miss would
            // be vacuous; the single-& construction prevents that.
            pass = false;
            detail.push_str(&format!("case {junk}: never fired; "));
            continue;
        }
        cases += 1;
        let reduced = reduce_case(&record, &tool).unwrap();
        let shrunk = reduced.design.statement_count() <= original.statement_count();
        let still_fires = mismatch_fires(
            &reduced.design,
            &tool,
            &record.stimulus,
            "y",
            &dir.path().join("post"),
        );
        // 1-minimality at statement granularity: no single further deletion
        // may keep the oracle alive.
        let mut minimal = reduced.status == ReductionStatus::Minimal;
        let mut ids = Vec::new();
        reduced.design.walk_statements(&mut |_, s| ids.push(s.id()));
        for id in ids {
            let mut candidate = reduced.design.clone();
            if !delete_statement(&mut candidate, id) {
                continue;
            }
            if parse(&emit(&candidate)).is_err() {
                continue;
            }
            if mismatch_fires(
                &candidate,
                &tool,
                &record.stimulus,
                "y",
                &dir.path().join("min"),
            ) {
                minimal = false;
                detail.push_str(&format!("case {junk}: not minimal (id {id}); "));
                break;
            }
        }
        if !(shrunk && still_fires && minimal) {
            pass = false;
            detail.push_str(&format!(
                "case {junk}: shrunk={shrunk} fires={still_fires} minimal={minimal}; "
            ));
        }
    }
    if cases < 10 {
        pass = false;
    }
    report(
        8,
        "reduction",
        pass,
        &format!("{cases} constructed cases verified; {detail}"),
    );
}

// ----------------------------------------------------------------------------
// 9. Timeout discipline at 1 s and 5 s.
// ----------------------------------------------------------------------------
#[test]
fn criterion_09_timeout_discipline() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("d.v");
    std::fs::write(
        &design,
        "module t(input a, output y); assign y = a; endmodule",
    )
    .unwrap();
    let mut detail = String::new();
    let mut pass = true;
    for timeout in [1u64, 5] {
        let mut tool = ToolSpec::builtin("hang", ToolKind::BuiltinHang);
        tool.timeout_secs = timeout;
        let started = Instant::now();
        let result = synthesize(&tool, &design, &dir.path().join(format!("w{timeout}"))).unwrap();
        let elapsed = started.elapsed();
        let hang = matches!(result.status, SynthStatus::Hang { .. });
        let bounded =
            elapsed >= Duration::from_secs(timeout) && elapsed <= Duration::from_secs(timeout + 2);
        detail.push_str(&format!("{timeout}s → {elapsed:.2?}; "));
        if !(hang && bounded) {
            pass = false;
        }
    }
    report(9, "timeout discipline", pass, &detail);
}

// ----------------------------------------------------------------------------
// 10. Determinism: identical configs produce identical fingerprints and logs.
// ----------------------------------------------------------------------------
#[test]
fn criterion_10_determinism() {
    let seeds_dir = tempfile::tempdir().unwrap();
    std::fs::write(
        seeds_dir.path().join("seed.v"),
        profile_seed(FaultProfile::AndToOr),
    )
    .unwrap();
    let mut outcomes = Vec::new();
    for run in 0..2 {
        let out_dir = tempfile::tempdir().unwrap();
        let config = CampaignConfig {
            seeds_dir: seeds_dir.path().to_path_buf(),
            tools: vec![ToolSpec::faulty(FaultProfile::AndToOr)],
            fragment_model_path: None,
            rng_seed: 0xD0,
            variants_per_seed: 3,
            max_iterations: Some(12),
            wall_clock_budget_secs: None,
            workers: 1,
            output_dir: out_dir.path().to_path_buf(),
            stimulus: quick_stimulus(3),
            seed_pool_capacity: 64,
            mutation: None,
        };
        let outcome = run_campaign(&config).unwrap();
        let _ = run;
        outcomes.push(outcome);
    }
    let fp0: Vec<String> = outcomes[0]
        .bugs
        .iter()
        .map(|b| b.fingerprint.clone())
        .collect();
    let fp1: Vec<String> = outcomes[1]
        .bugs
        .iter()
        .map(|b| b.fingerprint.clone())
        .collect();
    let logs0: Vec<_> = outcomes[0]
        .bugs
        .iter()
        .map(|b| b.mutation_log.clone())
        .collect();
    let logs1: Vec<_> = outcomes[1]
        .bugs
        .iter()
        .map(|b| b.mutation_log.clone())
        .collect();
    let pass = fp0 == fp1 && logs0 == logs1 && !fp0.is_empty();
    report(
        10,
        "campaign determinism",
        pass,
        &format!("{} bug(s), fingerprints match: {}", fp0.len(), fp0 == fp1),
    );
}

// ----------------------------------------------------------------------------
// 11. Feedback monotonicity with normalization to 1e-12.
// ----------------------------------------------------------------------------
#[test]
fn criterion_11_feedback_monotonicity() {
    let mut model = FragmentModel::default();
    let boosted = Element::Binary(BinaryOp::Add);
    let untouched = Element::Binary(BinaryOp::BitXor);
    model.freq.insert(boosted, 5);
    model.weight.insert(boosted, 2.0);
    model.freq.insert(untouched, 5);
    model.weight.insert(untouched, 2.0);

    let before = element_probability(&model).unwrap();
    let updated = hdlmutant_core::fragment::feedback_update(&model, &[(vec![boosted], true)]);
    let after = element_probability(&updated).unwrap();

    let rel_before = before[&boosted] / before[&untouched];
    let rel_after = after[&boosted] / after[&untouched];
    let sum: f64 = after.values().sum();
    let pass = rel_after > rel_before && (sum - 1.0).abs() < 1e-12;
    report(
        11,
        "feedback monotonicity",
        pass,
        &format!("relative P {rel_before:.4} → {rel_after:.4}, Σ = {sum:.15}"),
    );
}
