//! hdlmutant: fuzz Verilog logic-synthesis tools with equivalent variants.
//!
//! Exit codes: 0 success (fuzz: no bugs), 1 bugs found (fuzz), 2 usage or
//! configuration error.

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use hdlmutant_core::fragment::{ingest_corpus, model_to_json, FragmentModel};
use hdlmutant_core::harness::{
    read_metadata, reduce_case, run_campaign, write_metadata, CampaignConfig, CampaignOutcome,
    ReductionStatus,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

mod report;

#[derive(Parser)]
#[command(
    name = "hdlmutant",
    version,
    about = "Differential fuzzer for Verilog logic-synthesis tools: mutates seeds only inside behaviorally dead regions and compares synthesized behavior"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine a Verilog corpus into a fragment model
    Mine {
        /// Directory scanned recursively for .v files
        corpus_dir: PathBuf,
        #[arg(short, long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Run a fuzzing campaign described by a JSON config
    Fuzz {
        #[arg(short, long)]
        config: PathBuf,
        /// Override the campaign rng seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the worker count
        #[arg(long)]
        workers: Option<usize>,
        /// Override every tool's timeout
        #[arg(long)]
        timeout_secs: Option<u64>,
        #[arg(long)]
        variants_per_seed: Option<u32>,
        /// Override the output directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run and minimize a recorded bug
    Reduce {
        /// A bugs/<id> directory containing metadata.json
        bug_dir: PathBuf,
    },
    /// Render a Markdown report from a campaign output directory
    Report {
        /// Campaign output directory (where campaign.json lives)
        #[arg(default_value = "hdlmutant-out")]
        dir: PathBuf,
        #[arg(short, long, default_value = "report.md")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Mine { corpus_dir, out } => {
            let paths = collect_verilog_files(&corpus_dir)?;
            if paths.is_empty() {
                return Err(anyhow!("no .v files under {}", corpus_dir.display()));
            }
            let stats = ingest_corpus(&paths).map_err(|e| anyhow!("{e}"))?;
            let model = FragmentModel::from_corpus(&stats);
            std::fs::write(&out, model_to_json(&model))
                .with_context(|| format!("writing {}", out.display()))?;
            println!(
                "mined {} files ({} rejected): {} elements, {} transitions, T = {:.4}",
                stats.files_ingested,
                stats.files_rejected,
                model.freq.len(),
                model.transition_counts.len(),
                model.threshold_t
            );
            println!("model written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Fuzz {
            config,
            seed,
            workers,
            timeout_secs,
            variants_per_seed,
            out,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut cfg: CampaignConfig =
                serde_json::from_str(&text).with_context(|| "parsing campaign config")?;
            if let Some(s) = seed {
                cfg.rng_seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(t) = timeout_secs {
                for tool in &mut cfg.tools {
                    tool.timeout_secs = t;
                }
            }
            if let Some(v) = variants_per_seed {
                cfg.variants_per_seed = v;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let outcome = run_campaign(&cfg).map_err(|e| anyhow!("{e}"))?;
            print_fuzz_summary(&outcome);
            if outcome.bugs.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        Command::Reduce { bug_dir } => {
            let record = read_metadata(&bug_dir).map_err(|e| anyhow!("{e}"))?;
            let tool = record.tool_spec.clone();
            let reduced = reduce_case(&record, &tool).map_err(|e| anyhow!("{e}"))?;
            let reduced_path = bug_dir.join("reduced.v");
            std::fs::write(&reduced_path, hdlmutant_core::emit(&reduced.design))
                .with_context(|| format!("writing {}", reduced_path.display()))?;
            let mut record = record;
            record.reduced_ref = Some(reduced_path.clone());
            write_metadata(&record, &bug_dir).map_err(|e| anyhow!("{e}"))?;
            println!(
                "reduced to {} statements in {} oracle calls ({})",
                reduced.design.statement_count(),
                reduced.oracle_calls,
                match reduced.status {
                    ReductionStatus::Minimal => "1-minimal",
                    ReductionStatus::TimedOut => "oracle budget exhausted, best effort",
                }
            );
            println!("wrote {}", reduced_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { dir, out } => {
            let markdown = report::render(&dir).map_err(|e| anyhow!("{e}"))?;
            std::fs::write(&out, markdown).with_context(|| format!("writing {}", out.display()))?;
            println!("report written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_fuzz_summary(outcome: &CampaignOutcome) {
    println!(
        "{} iterations, {} variants generated ({} mutation attempts, {} survived)",
        outcome.iterations_run,
        outcome.variants_generated,
        outcome.mutation_attempts,
        outcome.mutation_survived
    );
    println!(
        "seed coverage averages: line {:.2}%  condition {:.2}%  branch {:.2}%",
        outcome.avg_coverage.line_pct,
        outcome.avg_coverage.condition_pct,
        outcome.avg_coverage.branch_pct
    );
    if outcome.bugs.is_empty() {
        println!("no bugs found");
    } else {
        println!("{} reproduced bug(s):", outcome.bugs.len());
        for bug in &outcome.bugs {
            let divergence = bug
                .first_divergence
                .as_ref()
                .map(|d| format!(" first divergence t={} port={}", d.time, d.port))
                .unwrap_or_default();
            println!("  [{}] {} via {}{divergence}", bug.class, bug.id, bug.tool);
        }
    }
}

fn collect_verilog_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let entries = std::fs::read_dir(&d).with_context(|| format!("reading {}", d.display()))?;
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().map(|x| x == "v").unwrap_or(false) {
                files.push(path);
            }
        }
    }
    files.sort();
    Ok(files)
}
