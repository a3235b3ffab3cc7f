//! Campaign loop: preprocess seeds, generate variants, synthesize both
//! sides with each tool, compare, classify, deduplicate, verify
//! reproducibility, and feed the seed pool.
//!
//! Bug records land on disk as `bugs/<id>/{seed.v, variant.v, testbench.v,
//! tool.log, metadata.json[, reduced.v]}`. A record is only reported after a
//! rerun of the exact pipeline on the stored artifacts confirms the same
//! class. Everything random flows from the single campaign seed, so two runs
//! with the same config and builtin tools produce identical records.

use crate::ast::ModuleAst;
use crate::fragment::{feedback_update, model_from_json, Element, FragmentModel};
use crate::mutate::{
    gen_variant, GenContext, MutationConfig, MutationMode, MutationRecord, Variant,
};
use crate::rng::{mix, SplitMix64};
use crate::sim::{compare_traces, coverage_summary, simulate, StepLimit, Trace, Verdict};
use crate::synth::{synthesize, SynthOutput, SynthResult, SynthStatus, ToolSpec};
use crate::testbench::{emit_testbench, StimulusConfig, TestbenchAst};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime};
use thiserror::Error;

// ============================================================================
// Configuration
// ============================================================================

fn default_variants() -> u32 {
    5
}
fn default_workers() -> usize {
    1
}
fn default_pool_capacity() -> usize {
    256
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub seeds_dir: PathBuf,
    pub tools: Vec<ToolSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fragment_model_path: Option<PathBuf>,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_variants")]
    pub variants_per_seed: u32,
    /// Exactly one of `max_iterations` / `wall_clock_budget_secs` must be set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_budget_secs: Option<u64>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub stimulus: StimulusConfig,
    #[serde(default = "default_pool_capacity")]
    pub seed_pool_capacity: usize,
    #[serde(default)]
    pub mutation: Option<MutationConfig>,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        match (self.max_iterations, self.wall_clock_budget_secs) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => {
                return Err(HarnessError::Config(
                    "exactly one of max_iterations / wall_clock_budget_secs must be set".into(),
                ))
            }
        }
        if self.workers < 1 {
            return Err(HarnessError::Config("workers must be >= 1".into()));
        }
        if self.tools.is_empty() {
            return Err(HarnessError::Config("at least one tool required".into()));
        }
        for tool in &self.tools {
            tool.validate()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if self.variants_per_seed == 0 {
            return Err(HarnessError::Config(
                "variants_per_seed must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("no usable seeds in {0}")]
    NoSeeds(PathBuf),
    #[error("bug artifacts missing: {0}")]
    ArtifactsMissing(String),
    #[error("fragment model error: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ============================================================================
// Bug records
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BugClass {
    H,
    C,
    M,
}

impl std::fmt::Display for BugClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BugClass::H => write!(f, "H"),
            BugClass::C => write!(f, "C"),
            BugClass::M => write!(f, "M"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstDivergence {
    pub time: u64,
    pub port: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerSide {
    Seed,
    Variant,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BugRecord {
    pub id: String,
    pub class: BugClass,
    pub tool: String,
    pub fingerprint: String,
    pub seed_file: PathBuf,
    pub variant_file: PathBuf,
    pub testbench_file: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_divergence: Option<FirstDivergence>,
    pub reproduced: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_ref: Option<PathBuf>,
    /// Which side's design exhibits the failure against its own netlist.
    pub trigger: TriggerSide,
    pub iteration: u64,
    pub variant_index: u32,
    pub rng_seed: u64,
    pub stimulus: StimulusConfig,
    pub mutation_log: Vec<MutationRecord>,
    pub tool_spec: ToolSpec,
    /// Wall-clock stamp; lives in its own field so the rest of the metadata
    /// is byte-comparable across runs.
    pub created_at_epoch_secs: u64,
}

// ============================================================================
// Seed pool
// ============================================================================

#[derive(Debug, Clone)]
pub struct SeedEntry {
    pub ast: ModuleAst,
    pub content_hash: u64,
    pub variants_generated: u64,
    pub bugs_attributed: u64,
    order: u64,
}

#[derive(Debug, Clone)]
pub struct SeedPool {
    entries: Vec<SeedEntry>,
    capacity: usize,
    next_order: u64,
}

impl SeedPool {
    pub fn new(capacity: usize) -> SeedPool {
        SeedPool {
            entries: Vec::new(),
            capacity: capacity.max(1),
            next_order: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> &SeedEntry {
        &self.entries[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut SeedEntry {
        &mut self.entries[i]
    }

    /// Insert unless content-duplicate; evict the lowest-yield entry when at
    /// capacity. Returns whether the design was added.
    pub fn insert(&mut self, ast: ModuleAst) -> bool {
        let hash = crate::synth::fnv1a(crate::emit::emit(&ast).as_bytes());
        if self.entries.iter().any(|e| e.content_hash == hash) {
            return false;
        }
        if self.entries.len() >= self.capacity {
            let evict = self
                .entries
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    let ya = a.bugs_attributed as f64 / a.variants_generated.max(1) as f64;
                    let yb = b.bugs_attributed as f64 / b.variants_generated.max(1) as f64;
                    ya.partial_cmp(&yb).unwrap().then(a.order.cmp(&b.order))
                })
                .map(|(i, _)| i);
            if let Some(i) = evict {
                self.entries.remove(i);
            }
        }
        self.entries.push(SeedEntry {
            ast,
            content_hash: hash,
            variants_generated: 0,
            bugs_attributed: 0,
            order: self.next_order,
        });
        self.next_order += 1;
        true
    }
}

/// Pool update for a verified variant (content-addressed, eviction by
/// bugs-per-variant yield).
pub fn update_seed_pool(pool: &mut SeedPool, variant: &Variant) -> bool {
    pool.insert(variant.ast.clone())
}

// ============================================================================
// Classification
// ============================================================================

#[derive(Debug, Clone)]
pub struct SideResult {
    pub synth: SynthResult,
    pub trace: Option<Trace>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    None,
    Hang,
    Crash {
        exit_info: String,
        excerpt: String,
    },
    Mismatch {
        time: u64,
        port: String,
        ports: Vec<String>,
    },
}

/// Classify one (seed result, variant result) pair. Hang and crash on either
/// side implicate the tool; mismatch compares post-synthesis traces.
pub fn identify_bug(seed: &SideResult, variant: &SideResult) -> Classification {
    for side in [variant, seed] {
        if let SynthStatus::Hang { .. } = side.synth.status {
            return Classification::Hang;
        }
    }
    for side in [variant, seed] {
        if let SynthStatus::Crash {
            exit_info,
            log_excerpt,
        } = &side.synth.status
        {
            return Classification::Crash {
                exit_info: exit_info.clone(),
                excerpt: log_excerpt.clone(),
            };
        }
    }
    match (&seed.trace, &variant.trace) {
        (Some(st), Some(vt)) => match compare_traces(st, vt) {
            Ok(Verdict::Mismatch {
                first_time, port, ..
            }) => {
                let ports = diverging_ports(st, vt);
                Classification::Mismatch {
                    time: first_time,
                    port,
                    ports,
                }
            }
            _ => Classification::None,
        },
        _ => Classification::None,
    }
}

fn diverging_ports(a: &Trace, b: &Trace) -> Vec<String> {
    let mut ports = Vec::new();
    for ((name, va), (_, vb)) in a.outputs.iter().zip(b.outputs.iter()) {
        if va != vb {
            ports.push(name.clone());
        }
    }
    ports.sort();
    ports
}

/// Collapse noisy log lines into a stable signature: digit runs become `#`,
/// path-like tokens become `<path>`.
fn normalize_log_signature(excerpt: &str) -> String {
    let line = excerpt.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let mut out = String::new();
    for token in line.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        if token.contains('/') {
            out.push_str("<path>");
            continue;
        }
        let mut prev_digit = false;
        for c in token.chars() {
            if c.is_ascii_digit() {
                if !prev_digit {
                    out.push('#');
                }
                prev_digit = true;
            } else {
                out.push(c);
                prev_digit = false;
            }
        }
    }
    out
}

fn fingerprint_of(class: BugClass, tool: &str, classification: &Classification) -> String {
    match (class, classification) {
        (BugClass::H, _) => format!("H:{tool}"),
        (BugClass::C, Classification::Crash { excerpt, .. }) => {
            format!("C:{tool}:{}", normalize_log_signature(excerpt))
        }
        (BugClass::M, Classification::Mismatch { ports, .. }) => {
            format!("M:{tool}:{}", ports.join(","))
        }
        _ => format!("{class}:{tool}"),
    }
}

// ============================================================================
// Campaign
// ============================================================================

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct CoverageAverages {
    pub line_pct: f64,
    pub condition_pct: f64,
    pub branch_pct: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignOutcome {
    pub iterations_run: u64,
    pub seeds_loaded: usize,
    pub variants_generated: u64,
    pub mutation_attempts: u64,
    pub mutation_survived: u64,
    pub suppressed_unreproducible: u64,
    pub avg_coverage: CoverageAverages,
    pub bugs: Vec<BugRecord>,
}

struct Campaign {
    config: CampaignConfig,
    model: Option<FragmentModel>,
    pool: SeedPool,
    bugs: Vec<BugRecord>,
    fingerprints: BTreeSet<String>,
    work_root: PathBuf,
    bugs_dir: PathBuf,
    variants_generated: u64,
    mutation_attempts: u64,
    mutation_survived: u64,
    suppressed: u64,
    cov_sums: (f64, f64, f64),
    cov_samples: u64,
    log: Vec<String>,
}

/// Run a full campaign. Deterministic for a fixed config with builtin tools.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignOutcome, HarnessError> {
    config.validate()?;
    let seeds = load_seeds(&config.seeds_dir)?;
    let seeds_loaded = seeds.len();

    let model = match &config.fragment_model_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Model(format!("{}: {e}", path.display())))?;
            Some(model_from_json(&text).map_err(|e| HarnessError::Model(e.to_string()))?)
        }
        None => None,
    };

    let mut pool = SeedPool::new(config.seed_pool_capacity.max(seeds_loaded));
    for seed in seeds {
        pool.insert(seed);
    }

    let output_dir = config.output_dir.clone();
    std::fs::create_dir_all(&output_dir)?;
    let bugs_dir = output_dir.join("bugs");
    std::fs::create_dir_all(&bugs_dir)?;
    let env_work = std::env::var_os("HDLMUTANT_WORKDIR").map(PathBuf::from);
    let owns_work_root = env_work.is_none();
    let work_root = env_work.unwrap_or_else(|| output_dir.join("work"));
    std::fs::create_dir_all(&work_root)?;

    let thread_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;

    let mut campaign = Campaign {
        config: config.clone(),
        model,
        pool,
        bugs: Vec::new(),
        fingerprints: BTreeSet::new(),
        work_root,
        bugs_dir,
        variants_generated: 0,
        mutation_attempts: 0,
        mutation_survived: 0,
        suppressed: 0,
        cov_sums: (0.0, 0.0, 0.0),
        cov_samples: 0,
        log: Vec::new(),
    };

    let started = Instant::now();
    let mut rng = SplitMix64::new(config.rng_seed);
    let mut iteration = 0u64;
    loop {
        if let Some(max) = config.max_iterations {
            if iteration >= max {
                break;
            }
        }
        if let Some(budget) = config.wall_clock_budget_secs {
            if started.elapsed() >= Duration::from_secs(budget) {
                break;
            }
        }
        if campaign.pool.is_empty() {
            break;
        }
        let seed_idx = rng.next_below(campaign.pool.len() as u64) as usize;
        campaign.run_iteration(iteration, seed_idx, &thread_pool);
        iteration += 1;
    }

    let cov_n = campaign.cov_samples.max(1) as f64;
    let outcome = CampaignOutcome {
        iterations_run: iteration,
        seeds_loaded,
        variants_generated: campaign.variants_generated,
        mutation_attempts: campaign.mutation_attempts,
        mutation_survived: campaign.mutation_survived,
        suppressed_unreproducible: campaign.suppressed,
        avg_coverage: CoverageAverages {
            line_pct: campaign.cov_sums.0 / cov_n,
            condition_pct: campaign.cov_sums.1 / cov_n,
            branch_pct: campaign.cov_sums.2 / cov_n,
        },
        bugs: campaign.bugs,
    };

    std::fs::write(
        output_dir.join("campaign.json"),
        serde_json::to_string_pretty(&outcome).expect("outcome serializes"),
    )?;
    if let Some(model) = &campaign.model {
        std::fs::write(
            output_dir.join("model_updated.json"),
            crate::fragment::model_to_json(model),
        )?;
    }
    if !campaign.log.is_empty() {
        std::fs::write(output_dir.join("campaign.log"), campaign.log.join("\n"))?;
    }
    // Scratch provided through HDLMUTANT_WORKDIR belongs to the caller.
    if owns_work_root {
        let _ = std::fs::remove_dir_all(&campaign.work_root);
    }
    Ok(outcome)
}

fn load_seeds(dir: &Path) -> Result<Vec<ModuleAst>, HarnessError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|_| HarnessError::NoSeeds(dir.to_path_buf()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "v").unwrap_or(false))
        .collect();
    paths.sort();
    let mut seeds = Vec::new();
    for path in paths {
        let Ok(text) = std::fs::read_to_string(&path) else {
            continue;
        };
        let Ok(module) = crate::parser::parse(&text) else {
            continue;
        };
        if crate::testbench::extract_ports(&module).is_err() {
            continue;
        }
        seeds.push(module);
    }
    if seeds.is_empty() {
        return Err(HarnessError::NoSeeds(dir.to_path_buf()));
    }
    Ok(seeds)
}

struct ToolRun {
    variant_index: usize,
    tool_index: usize,
    result: Result<SynthResult, String>,
}

impl Campaign {
    fn run_iteration(&mut self, iteration: u64, seed_idx: usize, threads: &rayon::ThreadPool) {
        let iter_base = mix(self.config.rng_seed ^ mix(iteration));
        let stim = StimulusConfig {
            rng_seed: iter_base,
            ..self.config.stimulus
        };
        let seed_ast = self.pool.get(seed_idx).ast.clone();
        let Ok(ports) = crate::testbench::extract_ports(&seed_ast) else {
            return;
        };
        let mut tb = crate::testbench::generate_testbench(&ports, &stim);
        tb.dut_name = seed_ast.name.clone();
        let Ok((_seed_trace, seed_cov)) = simulate(&seed_ast, &tb, StepLimit::default()) else {
            return; // seed itself does not simulate; skip the iteration
        };
        let seed_summary = coverage_summary(&seed_cov);
        self.cov_sums.0 += seed_summary.line_pct;
        self.cov_sums.1 += seed_summary.condition_pct;
        self.cov_sums.2 += seed_summary.branch_pct;
        self.cov_samples += 1;

        // Variant generation, deterministic per (campaign seed, iter, index).
        let default_mutation = MutationConfig::default();
        let mcfg = self.config.mutation.clone().unwrap_or(default_mutation);
        let mcfg = MutationConfig {
            variants_per_seed: self.config.variants_per_seed,
            mode: if self.model.is_none() {
                MutationMode::PruneOnly
            } else {
                mcfg.mode
            },
            ..mcfg
        };
        let ctx = GenContext {
            model: self.model.as_ref(),
            mcfg: &mcfg,
            stim: &stim,
            limits: StepLimit::default(),
        };
        let mut variants = Vec::new();
        for v in 0..self.config.variants_per_seed {
            let mut vrng = SplitMix64::new(mix(iter_base ^ mix(v as u64 + 1)));
            let (variant, stats) = gen_variant(&seed_ast, &seed_cov, &ctx, &mut vrng);
            self.variants_generated += 1;
            self.mutation_attempts += stats.attempts as u64;
            if stats.survived {
                self.mutation_survived += 1;
            }
            variants.push((variant, stats));
        }
        self.pool.get_mut(seed_idx).variants_generated += self.config.variants_per_seed as u64;

        // Write designs for this iteration.
        let iter_dir = self.work_root.join(format!("iter{iteration:06}"));
        let _ = std::fs::create_dir_all(&iter_dir);
        let seed_path = iter_dir.join("seed.v");
        let _ = std::fs::write(&seed_path, crate::emit::emit(&seed_ast));
        let mut variant_paths = Vec::new();
        for (v, (variant, _)) in variants.iter().enumerate() {
            let path = iter_dir.join(format!("variant{v}.v"));
            let _ = std::fs::write(&path, crate::emit::emit(&variant.ast));
            variant_paths.push(path);
        }

        // Synthesis tasks: per tool, the seed plus every variant. Index 0 is
        // the seed; variants follow at index+1.
        let mut tasks = Vec::new();
        for (ti, _tool) in self.config.tools.iter().enumerate() {
            tasks.push((0usize, ti));
            for v in 0..variant_paths.len() {
                tasks.push((v + 1, ti));
            }
        }
        let tools = &self.config.tools;
        let runs: Vec<ToolRun> = threads.install(|| {
            use rayon::prelude::*;
            tasks
                .par_iter()
                .map(|&(vi, ti)| {
                    let tool = &tools[ti];
                    let design = if vi == 0 {
                        seed_path.clone()
                    } else {
                        variant_paths[vi - 1].clone()
                    };
                    let workdir = iter_dir.join(format!("t{ti}_v{vi}"));
                    let result = synthesize(tool, &design, &workdir).map_err(|e| e.to_string());
                    ToolRun {
                        variant_index: vi,
                        tool_index: ti,
                        result,
                    }
                })
                .collect()
        });

        // Classify per tool in deterministic order.
        let mut bug_found_for_seed = false;
        let mut variant_triggered: Vec<bool> = vec![false; variants.len()];
        for (ti, tool) in self.config.tools.iter().enumerate() {
            let find = |vi: usize| -> Option<&ToolRun> {
                runs.iter()
                    .find(|r| r.variant_index == vi && r.tool_index == ti)
            };
            let Some(seed_run) = find(0) else { continue };
            let seed_side = match &seed_run.result {
                Ok(res) => SideResult {
                    trace: self.resolve_trace(tool, res, &tb, &iter_dir),
                    synth: res.clone(),
                },
                Err(e) => {
                    // Adapter errors are logged per case, never fatal.
                    self.log.push(format!(
                        "iter {iteration}: tool `{}` failed on seed: {e}",
                        tool.name
                    ));
                    continue;
                }
            };
            for vi in 0..variants.len() {
                let Some(run) = find(vi + 1) else { continue };
                let res = match &run.result {
                    Ok(res) => res,
                    Err(e) => {
                        self.log.push(format!(
                            "iter {iteration}: tool `{}` failed on variant {vi}: {e}",
                            tool.name
                        ));
                        continue;
                    }
                };
                let variant_side = SideResult {
                    trace: self.resolve_trace(tool, res, &tb, &iter_dir),
                    synth: res.clone(),
                };
                let classification = identify_bug(&seed_side, &variant_side);
                let class = match classification {
                    Classification::None => continue,
                    Classification::Hang => BugClass::H,
                    Classification::Crash { .. } => BugClass::C,
                    Classification::Mismatch { .. } => BugClass::M,
                };
                let fingerprint = fingerprint_of(class, &tool.name, &classification);
                if self.fingerprints.contains(&fingerprint) {
                    continue;
                }
                let trigger = self.trigger_side(tool, &seed_side, &variant_side, &classification);
                let id = format!(
                    "{:04}-{}-{}",
                    self.bugs.len() + self.suppressed as usize,
                    class,
                    tool.name
                );
                let record = self.write_bug_artifacts(
                    &id,
                    class,
                    tool,
                    &classification,
                    fingerprint.clone(),
                    &seed_ast,
                    &variants[vi].0,
                    &tb,
                    trigger,
                    iteration,
                    vi as u32,
                    &stim,
                    &iter_dir,
                    ti,
                    vi + 1,
                );
                let Ok(mut record) = record else { continue };
                // Reproducibility gate: rerun the stored pipeline.
                match reproduce(&record, tool) {
                    Ok(true) => {
                        record.reproduced = true;
                        let _ = write_metadata(&record, &self.bugs_dir.join(&record.id));
                        self.fingerprints.insert(fingerprint);
                        variant_triggered[vi] = true;
                        bug_found_for_seed = true;
                        self.bugs.push(record);
                    }
                    _ => {
                        let _ = std::fs::remove_dir_all(self.bugs_dir.join(&record.id));
                        self.suppressed += 1;
                    }
                }
            }
        }
        if bug_found_for_seed {
            self.pool.get_mut(seed_idx).bugs_attributed += 1;
        }

        // Fragment feedback and seed-pool growth.
        let mut outcomes: Vec<(Vec<Element>, bool)> = Vec::new();
        for (vi, (variant, stats)) in variants.iter().enumerate() {
            for f in &stats.failed_fragments {
                outcomes.push((f.clone(), false));
            }
            if variant.mutation_log.is_empty() {
                continue;
            }
            let success = variant_triggered[vi]
                || self.coverage_improved(&seed_summary, &seed_cov, variant, &tb);
            for f in &stats.final_fragments {
                outcomes.push((f.clone(), success));
            }
            update_seed_pool(&mut self.pool, variant);
        }
        if let Some(model) = &self.model {
            if !outcomes.is_empty() {
                self.model = Some(feedback_update(model, &outcomes));
            }
        }

        let _ = std::fs::remove_dir_all(&iter_dir);
    }

    fn coverage_improved(
        &self,
        seed_summary: &crate::sim::CoverageSummary,
        seed_cov: &crate::sim::CoverageReport,
        variant: &Variant,
        tb: &TestbenchAst,
    ) -> bool {
        let Ok((_, cov)) = simulate(&variant.ast, tb, StepLimit::default()) else {
            return false;
        };
        let summary = coverage_summary(&cov);
        let seed_covered = seed_cov.line_hits.values().filter(|h| **h > 0).count();
        let var_covered = cov.line_hits.values().filter(|h| **h > 0).count();
        var_covered > seed_covered
            || summary.line_pct > seed_summary.line_pct
            || summary.condition_pct > seed_summary.condition_pct
            || summary.branch_pct > seed_summary.branch_pct
    }

    /// Which side's design, against its own netlist, exhibits the failure.
    fn trigger_side(
        &self,
        tool: &ToolSpec,
        seed: &SideResult,
        variant: &SideResult,
        classification: &Classification,
    ) -> TriggerSide {
        match classification {
            Classification::Hang | Classification::Crash { .. } => {
                if matches!(
                    variant.synth.status,
                    SynthStatus::Hang { .. } | SynthStatus::Crash { .. }
                ) {
                    TriggerSide::Variant
                } else {
                    TriggerSide::Seed
                }
            }
            Classification::Mismatch { port, .. } => {
                let _ = tool;
                // The side whose post-synthesis trace differs from the other
                // on the recorded port is ambiguous here; prefer the variant
                // and fall back to the seed during reduction if needed.
                let _ = (seed, variant, port);
                TriggerSide::Variant
            }
            Classification::None => TriggerSide::Variant,
        }
    }

    fn resolve_trace(
        &self,
        tool: &ToolSpec,
        result: &SynthResult,
        tb: &TestbenchAst,
        workdir: &Path,
    ) -> Option<Trace> {
        resolve_trace(tool, result, tb, workdir)
    }

    #[allow(clippy::too_many_arguments)]
    fn write_bug_artifacts(
        &self,
        id: &str,
        class: BugClass,
        tool: &ToolSpec,
        classification: &Classification,
        fingerprint: String,
        seed: &ModuleAst,
        variant: &Variant,
        tb: &TestbenchAst,
        trigger: TriggerSide,
        iteration: u64,
        variant_index: u32,
        stim: &StimulusConfig,
        iter_dir: &Path,
        tool_index: usize,
        run_index: usize,
    ) -> Result<BugRecord, HarnessError> {
        let dir = self.bugs_dir.join(id);
        std::fs::create_dir_all(&dir)?;
        let seed_file = dir.join("seed.v");
        let variant_file = dir.join("variant.v");
        let testbench_file = dir.join("testbench.v");
        std::fs::write(&seed_file, crate::emit::emit(seed))?;
        std::fs::write(&variant_file, crate::emit::emit(&variant.ast))?;
        std::fs::write(&testbench_file, emit_testbench(tb))?;
        // Tool log from the triggering invocation, when present.
        let src_log = iter_dir
            .join(format!("t{tool_index}_v{run_index}"))
            .join("tool.log");
        if src_log.exists() {
            let _ = std::fs::copy(&src_log, dir.join("tool.log"));
        } else {
            let _ = std::fs::write(dir.join("tool.log"), "");
        }

        let first_divergence = match classification {
            Classification::Mismatch { time, port, .. } => Some(FirstDivergence {
                time: *time,
                port: port.clone(),
            }),
            _ => None,
        };
        let record = BugRecord {
            id: id.to_string(),
            class,
            tool: tool.name.clone(),
            fingerprint,
            seed_file,
            variant_file,
            testbench_file,
            first_divergence,
            reproduced: false,
            reduced_ref: None,
            trigger,
            iteration,
            variant_index,
            rng_seed: self.config.rng_seed,
            stimulus: *stim,
            mutation_log: variant.mutation_log.clone(),
            tool_spec: tool.clone(),
            created_at_epoch_secs: SystemTime::now()
                .duration_since(SystemTime::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        write_metadata(&record, &dir)?;
        Ok(record)
    }
}

pub fn write_metadata(record: &BugRecord, dir: &Path) -> Result<(), HarnessError> {
    // Artifact paths are stored relative to the bug directory so records are
    // byte-identical across runs and survive moving the campaign directory.
    let relativize = |p: &Path| -> PathBuf {
        p.strip_prefix(dir)
            .map(Path::to_path_buf)
            .unwrap_or_else(|_| p.to_path_buf())
    };
    let mut on_disk = record.clone();
    on_disk.seed_file = relativize(&record.seed_file);
    on_disk.variant_file = relativize(&record.variant_file);
    on_disk.testbench_file = relativize(&record.testbench_file);
    on_disk.reduced_ref = record.reduced_ref.as_deref().map(relativize);
    std::fs::write(
        dir.join("metadata.json"),
        serde_json::to_string_pretty(&on_disk).expect("record serializes"),
    )?;
    Ok(())
}

pub fn read_metadata(bug_dir: &Path) -> Result<BugRecord, HarnessError> {
    let path = bug_dir.join("metadata.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|_| HarnessError::ArtifactsMissing(path.display().to_string()))?;
    let mut record: BugRecord =
        serde_json::from_str(&text).map_err(|e| HarnessError::ArtifactsMissing(e.to_string()))?;
    let resolve = |p: &Path| -> PathBuf {
        if p.is_relative() {
            bug_dir.join(p)
        } else {
            p.to_path_buf()
        }
    };
    record.seed_file = resolve(&record.seed_file);
    record.variant_file = resolve(&record.variant_file);
    record.testbench_file = resolve(&record.testbench_file);
    record.reduced_ref = record.reduced_ref.as_deref().map(resolve);
    Ok(record)
}

fn resolve_trace(
    tool: &ToolSpec,
    result: &SynthResult,
    tb: &TestbenchAst,
    workdir: &Path,
) -> Option<Trace> {
    match &result.status {
        SynthStatus::Ok(SynthOutput::Design(module)) => simulate(module, tb, StepLimit::default())
            .ok()
            .map(|(t, _)| t),
        SynthStatus::Ok(SynthOutput::Opaque(netlist)) => {
            let template = tool.external_sim_template.as_deref()?;
            run_external_sim(template, netlist, tb, workdir, tool.timeout_secs)
        }
        _ => None,
    }
}

/// The resimulate-with-external-simulator hook: run a user command that
/// writes a trace JSON for an opaque netlist.
fn run_external_sim(
    template: &str,
    netlist: &Path,
    tb: &TestbenchAst,
    workdir: &Path,
    timeout_secs: u64,
) -> Option<Trace> {
    use wait_timeout::ChildExt;
    let tb_path = workdir.join("ext_tb.v");
    let trace_path = workdir.join("ext_trace.json");
    std::fs::write(&tb_path, emit_testbench(tb)).ok()?;
    let argv: Vec<String> = template
        .split_whitespace()
        .map(|part| {
            part.replace("{netlist}", &netlist.to_string_lossy())
                .replace("{testbench}", &tb_path.to_string_lossy())
                .replace("{trace}", &trace_path.to_string_lossy())
        })
        .collect();
    let mut child = std::process::Command::new(argv.first()?)
        .args(&argv[1..])
        .current_dir(workdir)
        .stdin(std::process::Stdio::null())
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .spawn()
        .ok()?;
    match child.wait_timeout(Duration::from_secs(timeout_secs)).ok()? {
        Some(status) if status.success() => {
            let text = std::fs::read_to_string(&trace_path).ok()?;
            crate::sim::trace_from_json(&text).ok()
        }
        Some(_) => None,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            None
        }
    }
}

// ============================================================================
// Reproduction
// ============================================================================

/// Re-run the exact pipeline on the stored artifacts; true iff the same bug
/// class (and, for mismatches, the same diverging port set) recurs.
pub fn reproduce(record: &BugRecord, tool: &ToolSpec) -> Result<bool, HarnessError> {
    let seed_text = std::fs::read_to_string(&record.seed_file)
        .map_err(|_| HarnessError::ArtifactsMissing(record.seed_file.display().to_string()))?;
    let variant_text = std::fs::read_to_string(&record.variant_file)
        .map_err(|_| HarnessError::ArtifactsMissing(record.variant_file.display().to_string()))?;
    let seed = crate::parser::parse(&seed_text)
        .map_err(|e| HarnessError::ArtifactsMissing(format!("seed.v unparseable: {e}")))?;
    let _variant = crate::parser::parse(&variant_text)
        .map_err(|e| HarnessError::ArtifactsMissing(format!("variant.v unparseable: {e}")))?;

    let ports = crate::testbench::extract_ports(&seed)
        .map_err(|e| HarnessError::ArtifactsMissing(e.to_string()))?;
    let mut tb = crate::testbench::generate_testbench(&ports, &record.stimulus);
    tb.dut_name = seed.name.clone();

    let workdir = record
        .seed_file
        .parent()
        .map(|d| d.join("repro"))
        .unwrap_or_else(|| PathBuf::from("repro"));
    let _ = std::fs::create_dir_all(&workdir);

    let seed_res = synthesize(tool, &record.seed_file, &workdir.join("seed"))
        .map_err(|e| HarnessError::ArtifactsMissing(e.to_string()))?;
    let var_res = synthesize(tool, &record.variant_file, &workdir.join("variant"))
        .map_err(|e| HarnessError::ArtifactsMissing(e.to_string()))?;
    let seed_side = SideResult {
        trace: resolve_trace(tool, &seed_res, &tb, &workdir),
        synth: seed_res,
    };
    let var_side = SideResult {
        trace: resolve_trace(tool, &var_res, &tb, &workdir),
        synth: var_res,
    };
    let classification = identify_bug(&seed_side, &var_side);
    let _ = std::fs::remove_dir_all(&workdir);
    let same = match (&record.class, &classification) {
        (BugClass::H, Classification::Hang) => true,
        (BugClass::C, Classification::Crash { .. }) => true,
        (BugClass::M, Classification::Mismatch { .. }) => {
            fingerprint_of(BugClass::M, &record.tool, &classification) == record.fingerprint
        }
        _ => false,
    };
    Ok(same)
}

// ============================================================================
// Reduction
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionStatus {
    Minimal,
    TimedOut,
}

#[derive(Debug, Clone)]
pub struct ReducedCase {
    pub design: ModuleAst,
    pub status: ReductionStatus,
    pub oracle_calls: u32,
}

const REDUCTION_ORACLE_BUDGET: u32 = 400;

/// Greedy delta reduction over statement subtrees: repeatedly delete a chunk
/// and keep the deletion iff the bug class (and diverging port, for
/// mismatches) persists. The result is 1-minimal at statement granularity
/// unless the oracle budget runs out.
pub fn reduce_case(record: &BugRecord, tool: &ToolSpec) -> Result<ReducedCase, HarnessError> {
    let trigger_file = match record.trigger {
        TriggerSide::Seed => &record.seed_file,
        TriggerSide::Variant => &record.variant_file,
    };
    let text = std::fs::read_to_string(trigger_file)
        .map_err(|_| HarnessError::ArtifactsMissing(trigger_file.display().to_string()))?;
    let design = crate::parser::parse(&text)
        .map_err(|e| HarnessError::ArtifactsMissing(format!("trigger unparseable: {e}")))?;

    let workdir = trigger_file
        .parent()
        .map(|d| d.join("reduce_work"))
        .unwrap_or_else(|| PathBuf::from("reduce_work"));
    std::fs::create_dir_all(&workdir)?;

    let mut calls = 0u32;
    let mut current = design.clone();
    // The original trigger must fire; otherwise try the other side.
    if !oracle_fires(record, tool, &current, &workdir, &mut calls) {
        let other = match record.trigger {
            TriggerSide::Seed => &record.variant_file,
            TriggerSide::Variant => &record.seed_file,
        };
        let other_text = std::fs::read_to_string(other)
            .map_err(|_| HarnessError::ArtifactsMissing(other.display().to_string()))?;
        let other_design = crate::parser::parse(&other_text)
            .map_err(|e| HarnessError::ArtifactsMissing(e.to_string()))?;
        if oracle_fires(record, tool, &other_design, &workdir, &mut calls) {
            current = other_design;
        } else {
            let _ = std::fs::remove_dir_all(&workdir);
            return Err(HarnessError::ArtifactsMissing(
                "stored case no longer triggers the bug".into(),
            ));
        }
    }

    let mut status = ReductionStatus::Minimal;
    'outer: loop {
        // Candidate chunks, biggest subtrees first.
        let mut candidates: Vec<(crate::ast::NodeId, usize)> = Vec::new();
        current.walk_statements(&mut |_, s| candidates.push((s.id(), s.statement_count())));
        candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

        for (id, _) in candidates {
            if calls >= REDUCTION_ORACLE_BUDGET {
                status = ReductionStatus::TimedOut;
                break 'outer;
            }
            let mut candidate = current.clone();
            if !crate::mutate::delete_statement(&mut candidate, id) {
                continue;
            }
            // Deletion must keep the design well-formed.
            if crate::parser::parse(&crate::emit::emit(&candidate)).is_err() {
                continue;
            }
            if oracle_fires(record, tool, &candidate, &workdir, &mut calls) {
                current = candidate;
                continue 'outer; // restart scan from the top
            }
        }
        break;
    }

    let _ = std::fs::remove_dir_all(&workdir);
    Ok(ReducedCase {
        design: current,
        status,
        oracle_calls: calls,
    })
}

/// Single-design bug oracle: does `design`, pushed through `tool`, still
/// exhibit the recorded failure class (H/C: tool outcome; M: divergence from
/// its own netlist on the recorded port)?
fn oracle_fires(
    record: &BugRecord,
    tool: &ToolSpec,
    design: &ModuleAst,
    workdir: &Path,
    calls: &mut u32,
) -> bool {
    *calls += 1;
    let design_path = workdir.join("candidate.v");
    if std::fs::write(&design_path, crate::emit::emit(design)).is_err() {
        return false;
    }
    let synth_dir = workdir.join("synth");
    let Ok(result) = synthesize(tool, &design_path, &synth_dir) else {
        return false;
    };
    match record.class {
        BugClass::H => matches!(result.status, SynthStatus::Hang { .. }),
        BugClass::C => matches!(result.status, SynthStatus::Crash { .. }),
        BugClass::M => {
            let SynthStatus::Ok(SynthOutput::Design(netlist)) = &result.status else {
                return false;
            };
            let Ok(ports) = crate::testbench::extract_ports(design) else {
                return false;
            };
            let mut tb = crate::testbench::generate_testbench(&ports, &record.stimulus);
            tb.dut_name = design.name.clone();
            let Ok((design_trace, _)) = simulate(design, &tb, StepLimit::default()) else {
                return false;
            };
            let Ok((netlist_trace, _)) = simulate(netlist, &tb, StepLimit::default()) else {
                return false;
            };
            match compare_traces(&design_trace, &netlist_trace) {
                Ok(Verdict::Mismatch { .. }) => {
                    let ports = diverging_ports(&design_trace, &netlist_trace);
                    match &record.first_divergence {
                        Some(fd) => ports.contains(&fd.port),
                        None => true,
                    }
                }
                _ => false,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{FaultProfile, ToolKind};

    fn write_seed(dir: &Path, name: &str, src: &str) {
        std::fs::write(dir.join(name), src).unwrap();
    }

    fn base_config(seeds: &Path, out: &Path, tools: Vec<ToolSpec>) -> CampaignConfig {
        CampaignConfig {
            seeds_dir: seeds.to_path_buf(),
            tools,
            fragment_model_path: None,
            rng_seed: 42,
            variants_per_seed: 2,
            max_iterations: Some(4),
            wall_clock_budget_secs: None,
            workers: 1,
            output_dir: out.to_path_buf(),
            stimulus: StimulusConfig {
                vector_count: 30,
                ..Default::default()
            },
            seed_pool_capacity: 64,
            mutation: None,
        }
    }

    // One live `&` plus a dead region dense with `&` sites, so the faulty
    // adapter's content-hashed site choice lands asymmetrically between the
    // seed and its pruned variants.
    const SEED_WITH_AND: &str =
        "module top(input clk, input [7:0] a, input [7:0] b, output reg [7:0] y);\n\
        always @(posedge clk) begin\n\
          y <= a & b;\n\
          if (1'h0) begin\n\
            y <= a & 8'h0f;\n\
            y <= b & 8'hf0;\n\
            y <= (a & 8'h01) + (b & 8'h02);\n\
          end\n\
        end\nendmodule";

    #[test]
    fn config_validation_rejects_ambiguous_budget() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(dir.path(), dir.path(), vec![ToolSpec::identity()]);
        cfg.wall_clock_budget_secs = Some(10);
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
        cfg.max_iterations = None;
        assert!(cfg.validate().is_ok());
        cfg.wall_clock_budget_secs = None;
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn identity_campaign_finds_nothing() {
        let seeds = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        write_seed(seeds.path(), "s0.v", SEED_WITH_AND);
        write_seed(
            seeds.path(),
            "s1.v",
            "module top(input a, input b, output y); assign y = a ^ b; endmodule",
        );
        let cfg = base_config(seeds.path(), out.path(), vec![ToolSpec::identity()]);
        let outcome = run_campaign(&cfg).unwrap();
        assert_eq!(outcome.bugs.len(), 0);
        assert!(outcome.iterations_run == 4);
        assert!(out.path().join("campaign.json").exists());
    }

    #[test]
    fn faulty_campaign_finds_reproduced_mismatch() {
        let seeds = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        write_seed(seeds.path(), "s0.v", SEED_WITH_AND);
        let mut cfg = base_config(
            seeds.path(),
            out.path(),
            vec![ToolSpec::faulty(FaultProfile::AndToOr)],
        );
        cfg.max_iterations = Some(20);
        let outcome = run_campaign(&cfg).unwrap();
        assert!(
            !outcome.bugs.is_empty(),
            "and_to_or should diverge somewhere in 20 iterations"
        );
        // Dedup: identical (class, tool, diverging ports) collapse into one.
        let mut fps: Vec<&String> = outcome.bugs.iter().map(|b| &b.fingerprint).collect();
        fps.sort();
        fps.dedup();
        assert_eq!(
            fps.len(),
            outcome.bugs.len(),
            "duplicate fingerprints reported"
        );
        let bug = &outcome.bugs[0];
        assert_eq!(bug.class, BugClass::M);
        assert!(bug.reproduced);
        assert!(bug.first_divergence.is_some());
        let dir = out.path().join("bugs").join(&bug.id);
        for f in [
            "seed.v",
            "variant.v",
            "testbench.v",
            "metadata.json",
            "tool.log",
        ] {
            assert!(dir.join(f).exists(), "missing {f}");
        }
        // Metadata round-trips.
        let loaded = read_metadata(&dir).unwrap();
        assert_eq!(loaded.fingerprint, bug.fingerprint);
    }

    #[test]
    fn hang_campaign_classifies_h_and_respects_timeout() {
        let seeds = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        write_seed(seeds.path(), "s0.v", SEED_WITH_AND);
        let mut hang = ToolSpec::builtin("hangs", ToolKind::BuiltinHang);
        hang.timeout_secs = 1;
        let mut cfg = base_config(seeds.path(), out.path(), vec![hang]);
        cfg.max_iterations = Some(1);
        cfg.variants_per_seed = 1;
        let started = Instant::now();
        let outcome = run_campaign(&cfg).unwrap();
        assert_eq!(outcome.bugs.len(), 1);
        assert_eq!(outcome.bugs[0].class, BugClass::H);
        assert!(outcome.bugs[0].reproduced);
        // seed+variant synth plus reproduce pair: four 1s hangs, plus slack.
        assert!(started.elapsed() < Duration::from_secs(10));
    }

    #[test]
    fn crash_campaign_classifies_c() {
        let seeds = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        write_seed(seeds.path(), "s0.v", SEED_WITH_AND);
        let crash = ToolSpec::builtin("crashes", ToolKind::BuiltinCrash);
        let mut cfg = base_config(seeds.path(), out.path(), vec![crash]);
        cfg.max_iterations = Some(1);
        cfg.variants_per_seed = 1;
        let outcome = run_campaign(&cfg).unwrap();
        assert_eq!(outcome.bugs.len(), 1);
        assert_eq!(outcome.bugs[0].class, BugClass::C);
    }

    #[test]
    fn campaign_determinism() {
        let seeds = tempfile::tempdir().unwrap();
        write_seed(seeds.path(), "s0.v", SEED_WITH_AND);
        let out1 = tempfile::tempdir().unwrap();
        let out2 = tempfile::tempdir().unwrap();
        let mut cfg1 = base_config(
            seeds.path(),
            out1.path(),
            vec![ToolSpec::faulty(FaultProfile::AndToOr)],
        );
        cfg1.max_iterations = Some(10);
        let mut cfg2 = cfg1.clone();
        cfg2.output_dir = out2.path().to_path_buf();
        let o1 = run_campaign(&cfg1).unwrap();
        let o2 = run_campaign(&cfg2).unwrap();
        let fp1: Vec<&String> = o1.bugs.iter().map(|b| &b.fingerprint).collect();
        let fp2: Vec<&String> = o2.bugs.iter().map(|b| &b.fingerprint).collect();
        assert_eq!(fp1, fp2);
        let logs1: Vec<_> = o1.bugs.iter().map(|b| &b.mutation_log).collect();
        let logs2: Vec<_> = o2.bugs.iter().map(|b| &b.mutation_log).collect();
        assert_eq!(logs1, logs2);
    }

    #[test]
    fn flaky_tool_is_suppressed() {
        // External adapter that crashes on first run, then behaves: the
        // reproduction gate must suppress the record.
        let seeds = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        write_seed(seeds.path(), "s0.v", SEED_WITH_AND);
        let script_dir = tempfile::tempdir().unwrap();
        let script = script_dir.path().join("flaky.sh");
        let marker = script_dir.path().join("ran_once");
        std::fs::write(
            &script,
            format!(
                "#!/bin/sh\nif [ -f {m} ]; then cp \"$1\" \"$2\"; exit 0; else touch {m}; echo boom >&2; exit 1; fi\n",
                m = marker.display()
            ),
        )
        .unwrap();
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
        }
        let tool = ToolSpec {
            name: "flaky".into(),
            kind: ToolKind::External,
            command_template: Some(format!("{} {{input}} {{output}}", script.display())),
            timeout_secs: 10,
            fault_profile: None,
            external_sim_template: None,
        };
        let mut cfg = base_config(seeds.path(), out.path(), vec![tool]);
        cfg.max_iterations = Some(1);
        cfg.variants_per_seed = 1;
        let outcome = run_campaign(&cfg).unwrap();
        assert_eq!(outcome.bugs.len(), 0);
        assert!(outcome.suppressed_unreproducible >= 1);
    }

    #[test]
    fn campaign_with_model_inserts_and_updates_it() {
        let seeds = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        write_seed(seeds.path(), "s0.v", SEED_WITH_AND);
        // Mine the model from the seed itself.
        let module = crate::parser::parse(SEED_WITH_AND).unwrap();
        let stats = crate::fragment::CorpusStats {
            files_ingested: 1,
            files_rejected: 0,
            sequences: vec![crate::fragment::linearize(&module)],
        };
        let model = crate::fragment::FragmentModel::from_corpus(&stats);
        let model_path = out.path().join("model.json");
        std::fs::write(&model_path, crate::fragment::model_to_json(&model)).unwrap();

        let mut cfg = base_config(seeds.path(), out.path(), vec![ToolSpec::identity()]);
        cfg.fragment_model_path = Some(model_path);
        cfg.max_iterations = Some(10);
        let outcome = run_campaign(&cfg).unwrap();
        assert!(
            outcome.bugs.is_empty(),
            "identity must stay clean with inserts"
        );
        assert!(out.path().join("model_updated.json").exists());
        let updated = crate::fragment::model_from_json(
            &std::fs::read_to_string(out.path().join("model_updated.json")).unwrap(),
        )
        .unwrap();
        // Feedback ran: at least one weight moved off its mined value.
        let moved = updated
            .weight
            .iter()
            .any(|(el, w)| (*w - model.weight_of(*el)).abs() > 1e-12);
        assert!(
            moved,
            "feedback should adjust at least one weight over 10 iterations"
        );
    }

    #[test]
    fn seed_pool_dedup_and_eviction() {
        let m1 =
            crate::parser::parse("module top(input a, output y); assign y = a; endmodule").unwrap();
        let m2 = crate::parser::parse("module top(input a, output y); assign y = !a; endmodule")
            .unwrap();
        let m3 = crate::parser::parse("module top(input a, output y); assign y = ~a; endmodule")
            .unwrap();
        let mut pool = SeedPool::new(2);
        assert!(pool.insert(m1.clone()));
        assert!(
            !pool.insert(m1.clone()),
            "duplicate content must not insert"
        );
        assert_eq!(pool.len(), 1);
        assert!(pool.insert(m2));
        // Mark entry 0 as productive so eviction picks entry 1.
        pool.get_mut(0).variants_generated = 10;
        pool.get_mut(0).bugs_attributed = 5;
        pool.get_mut(1).variants_generated = 10;
        assert!(pool.insert(m3));
        assert_eq!(pool.len(), 2);
        assert_eq!(pool.get(0).bugs_attributed, 5, "productive entry survives");
    }

    /// Construct a mismatch record by hand for a design with exactly one
    /// live `&` (the fault site stays stable under deletions).
    fn make_mismatch_record(dir: &Path, src: &str, port: &str) -> (BugRecord, ToolSpec) {
        let tool = ToolSpec::faulty(FaultProfile::AndToOr);
        let design = crate::parser::parse(src).unwrap();
        let seed_file = dir.join("seed.v");
        let variant_file = dir.join("variant.v");
        std::fs::write(&seed_file, crate::emit::emit(&design)).unwrap();
        std::fs::write(&variant_file, crate::emit::emit(&design)).unwrap();
        std::fs::write(dir.join("testbench.v"), "// constructed case\n").unwrap();
        let record = BugRecord {
            id: "constructed".into(),
            class: BugClass::M,
            tool: tool.name.clone(),
            fingerprint: format!("M:{}:{}", tool.name, port),
            seed_file,
            variant_file,
            testbench_file: dir.join("testbench.v"),
            first_divergence: Some(FirstDivergence {
                time: 0,
                port: port.into(),
            }),
            reproduced: true,
            reduced_ref: None,
            trigger: TriggerSide::Variant,
            iteration: 0,
            variant_index: 0,
            rng_seed: 42,
            stimulus: StimulusConfig {
                rng_seed: 42,
                vector_count: 30,
                ..Default::default()
            },
            mutation_log: Vec::new(),
            tool_spec: tool.clone(),
            created_at_epoch_secs: 0,
        };
        (record, tool)
    }

    #[test]
    fn reduction_strips_unrelated_statements() {
        let dir = tempfile::tempdir().unwrap();
        let src = "module top(input clk, input [7:0] a, input [7:0] b, output reg [7:0] y, output reg [7:0] z);\n\
            reg [7:0] s0;\n\
            reg [7:0] s1;\n\
            always @(posedge clk) begin\n\
              y <= a & b;\n\
              z <= a;\n\
              s0 <= a + 8'h1;\n\
              s1 <= b + 8'h2;\n\
              if (1'h0) begin y <= 8'h00; end\n\
            end\nendmodule";
        let (record, tool) = make_mismatch_record(dir.path(), src, "y");
        let reduced = reduce_case(&record, &tool).unwrap();
        assert_eq!(reduced.status, ReductionStatus::Minimal);
        let original = crate::parser::parse(src).unwrap();
        assert!(reduced.design.statement_count() <= original.statement_count());
        let text = crate::emit::emit(&reduced.design);
        assert!(!text.contains("s0 <="), "{text}");
        assert!(!text.contains("s1 <="), "{text}");
        // The triggering assignment survives.
        assert!(text.contains("a & b"), "{text}");
        // Reduced case still reproduces through the same oracle.
        let reduced_file = dir.path().join("reduced.v");
        std::fs::write(&reduced_file, &text).unwrap();
        let mut rerecord = record.clone();
        rerecord.variant_file = reduced_file;
        rerecord.seed_file = dir.path().join("seed.v");
        let re_reduced = reduce_case(&rerecord, &tool).unwrap();
        assert_eq!(
            re_reduced.design.statement_count(),
            reduced.design.statement_count()
        );
    }

    #[test]
    fn reduction_keeps_single_statement_trigger() {
        let dir = tempfile::tempdir().unwrap();
        let src = "module top(input [7:0] a, input [7:0] b, output [7:0] y);\n\
            assign y = a & b;\nendmodule";
        let (record, tool) = make_mismatch_record(dir.path(), src, "y");
        let reduced = reduce_case(&record, &tool).unwrap();
        // Already minimal: the single continuous assign stays.
        assert_eq!(reduced.design.statement_count(), 1);
        assert!(crate::emit::emit(&reduced.design).contains("a & b"));
    }

    #[test]
    fn identify_bug_matrix() {
        let ok_trace = Trace {
            sample_times: vec![0, 10],
            outputs: vec![("y".into(), vec![1, 2])],
            final_time: 20,
        };
        let ok = |trace: Option<Trace>| SideResult {
            synth: SynthResult {
                status: SynthStatus::Ok(SynthOutput::Opaque(PathBuf::from("x"))),
                wall_time: Duration::ZERO,
            },
            trace,
        };
        // Equal traces → None.
        assert_eq!(
            identify_bug(&ok(Some(ok_trace.clone())), &ok(Some(ok_trace.clone()))),
            Classification::None
        );
        // Variant crash → C.
        let crash = SideResult {
            synth: SynthResult {
                status: SynthStatus::Crash {
                    exit_info: "exit code 1".into(),
                    log_excerpt: "boom".into(),
                },
                wall_time: Duration::ZERO,
            },
            trace: None,
        };
        assert!(matches!(
            identify_bug(&ok(Some(ok_trace.clone())), &crash),
            Classification::Crash { .. }
        ));
        // Diverging traces → M with port and time.
        let mut other = ok_trace.clone();
        other.outputs[0].1[1] = 9;
        match identify_bug(&ok(Some(ok_trace.clone())), &ok(Some(other))) {
            Classification::Mismatch { time, port, ports } => {
                assert_eq!(time, 10);
                assert_eq!(port, "y");
                assert_eq!(ports, vec!["y".to_string()]);
            }
            other => panic!("expected mismatch, got {other:?}"),
        }
        // Missing trace (opaque, no hook) → None.
        assert_eq!(
            identify_bug(&ok(Some(ok_trace)), &ok(None)),
            Classification::None
        );
    }

    #[test]
    fn log_normalization() {
        assert_eq!(
            normalize_log_signature("error at line 42 in /tmp/x/y.v: bad net 7"),
            "error at line # in <path> bad net #"
        );
    }
}
