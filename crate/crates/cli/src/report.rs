//! Markdown report rendering for a finished campaign directory.

use hdlmutant_core::harness::{read_metadata, BugClass, BugRecord, CampaignOutcome};
use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

pub fn render(dir: &Path) -> Result<String, String> {
    let summary_path = dir.join("campaign.json");
    let text = std::fs::read_to_string(&summary_path)
        .map_err(|e| format!("{}: {e}", summary_path.display()))?;
    let outcome: CampaignOutcome =
        serde_json::from_str(&text).map_err(|e| format!("campaign.json malformed: {e}"))?;

    // Prefer on-disk metadata (it reflects later reductions).
    let mut bugs: Vec<BugRecord> = Vec::new();
    let bugs_dir = dir.join("bugs");
    if bugs_dir.is_dir() {
        let mut entries: Vec<_> = std::fs::read_dir(&bugs_dir)
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        entries.sort();
        for entry in entries {
            if let Ok(record) = read_metadata(&entry) {
                bugs.push(record);
            }
        }
    }
    if bugs.is_empty() {
        bugs = outcome.bugs.clone();
    }

    let mut out = String::new();
    let _ = writeln!(out, "# hdlmutant campaign report\n");
    let _ = writeln!(out, "## Summary\n");
    let _ = writeln!(out, "- iterations: {}", outcome.iterations_run);
    let _ = writeln!(out, "- seeds loaded: {}", outcome.seeds_loaded);
    let _ = writeln!(out, "- variants generated: {}", outcome.variants_generated);
    let survival = if outcome.mutation_attempts > 0 {
        outcome.mutation_survived as f64 * 100.0 / outcome.mutation_attempts as f64
    } else {
        0.0
    };
    let _ = writeln!(
        out,
        "- mutation attempts: {} ({:.1}% survived validation + equivalence)",
        outcome.mutation_attempts, survival
    );
    let _ = writeln!(
        out,
        "- unreproducible findings suppressed: {}",
        outcome.suppressed_unreproducible
    );
    let _ = writeln!(out, "\n## Seed coverage\n");
    let _ = writeln!(out, "| metric | average |");
    let _ = writeln!(out, "|---|---|");
    let _ = writeln!(out, "| line | {:.2}% |", outcome.avg_coverage.line_pct);
    let _ = writeln!(
        out,
        "| condition | {:.2}% |",
        outcome.avg_coverage.condition_pct
    );
    let _ = writeln!(out, "| branch | {:.2}% |", outcome.avg_coverage.branch_pct);

    let _ = writeln!(out, "\n## Bugs by class and tool\n");
    let mut by_tool: BTreeMap<&str, (u32, u32, u32)> = BTreeMap::new();
    for bug in &bugs {
        let row = by_tool.entry(bug.tool.as_str()).or_default();
        match bug.class {
            BugClass::H => row.0 += 1,
            BugClass::C => row.1 += 1,
            BugClass::M => row.2 += 1,
        }
    }
    let _ = writeln!(out, "| tool | H | C | M | total |");
    let _ = writeln!(out, "|---|---|---|---|---|");
    for (tool, (h, c, m)) in &by_tool {
        let _ = writeln!(out, "| {tool} | {h} | {c} | {m} | {} |", h + c + m);
    }
    if by_tool.is_empty() {
        let _ = writeln!(out, "| _none_ | 0 | 0 | 0 | 0 |");
    }

    let _ = writeln!(out, "\n## Bug index\n");
    if bugs.is_empty() {
        let _ = writeln!(out, "No reproduced bugs.");
    } else {
        let _ = writeln!(
            out,
            "| id | class | tool | first divergence | reduced | fingerprint |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|");
        for bug in &bugs {
            let divergence = bug
                .first_divergence
                .as_ref()
                .map(|d| format!("t={} {}", d.time, d.port))
                .unwrap_or_else(|| "-".into());
            let reduced = if bug.reduced_ref.is_some() {
                "yes"
            } else {
                "no"
            };
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | `{}` |",
                bug.id, bug.class, bug.tool, divergence, reduced, bug.fingerprint
            );
        }
    }
    Ok(out)
}
