//! End-to-end tests of the `hdlmutant` binary: exit-code contract, artifact
//! layout, and cross-run determinism of recorded metadata.

use std::path::Path;
use std::process::{Command, Output};

fn hdlmutant(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdlmutant"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

const FAULT_SEED: &str =
    "module top(input clk, input [7:0] a, input [7:0] b, output reg [7:0] y);\n\
    always @(posedge clk) begin\n\
      y <= a & b;\n\
      if (1'h0) begin\n\
        y <= a & 8'h0f;\n\
        y <= b & 8'hf0;\n\
        y <= (a & 8'h01) + (b & 8'h02);\n\
      end\n\
    end\nendmodule";

fn write_campaign_config(
    dir: &Path,
    seeds: &Path,
    out_dir: &Path,
    tool_json: &str,
    iterations: u32,
) -> std::path::PathBuf {
    let config = format!(
        r#"{{
  "seeds_dir": "{seeds}",
  "tools": [{tool_json}],
  "rng_seed": 11,
  "variants_per_seed": 3,
  "max_iterations": {iterations},
  "workers": 1,
  "output_dir": "{out}",
  "stimulus": {{ "vector_count": 20 }}
}}"#,
        seeds = seeds.display(),
        out = out_dir.display(),
    );
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    path
}

#[test]
fn mine_writes_hand_countable_model() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir_all(&corpus).unwrap();
    std::fs::write(
        corpus.join("one.v"),
        "module m1(input [3:0] a, input [3:0] b, output [3:0] y); assign y = a + b; endmodule",
    )
    .unwrap();
    std::fs::write(
        corpus.join("two.v"),
        "module m2(input [3:0] a, input [3:0] b, output reg [3:0] y);\n\
         always @* begin if (a < b) begin y = a + b; end else begin y = a - b; end end\nendmodule",
    )
    .unwrap();
    let model_path = dir.path().join("model.json");
    let out = hdlmutant(
        &[
            "mine",
            corpus.to_str().unwrap(),
            "-o",
            model_path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(
        exit_code(&out),
        0,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&model_path).unwrap()).unwrap();
    let elements = model["elements"].as_array().unwrap();
    let freq_of = |name: &str| -> u64 {
        elements
            .iter()
            .find(|e| e["name"] == name)
            .map(|e| e["freq"].as_u64().unwrap())
            .unwrap_or(0)
    };
    // Hand count: `+` appears in both files, `<`, `-`, `if-else` once each.
    assert_eq!(freq_of("+"), 2);
    assert_eq!(freq_of("<"), 1);
    assert_eq!(freq_of("-"), 1);
    assert_eq!(freq_of("if-else"), 1);
}

#[test]
fn fuzz_identity_exits_zero_with_empty_bugs() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds");
    std::fs::create_dir_all(&seeds).unwrap();
    std::fs::write(seeds.join("s.v"), FAULT_SEED).unwrap();
    let out_dir = dir.path().join("out");
    let config = write_campaign_config(
        dir.path(),
        &seeds,
        &out_dir,
        r#"{ "name": "identity", "kind": "builtin_identity" }"#,
        4,
    );
    let out = hdlmutant(&["fuzz", "-c", config.to_str().unwrap()], dir.path());
    assert_eq!(
        exit_code(&out),
        0,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let bug_entries = std::fs::read_dir(out_dir.join("bugs")).unwrap().count();
    assert_eq!(bug_entries, 0);
    assert!(out_dir.join("campaign.json").exists());
}

#[test]
fn fuzz_faulty_exits_one_with_bug_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds");
    std::fs::create_dir_all(&seeds).unwrap();
    std::fs::write(seeds.join("s.v"), FAULT_SEED).unwrap();
    let out_dir = dir.path().join("out");
    let config = write_campaign_config(
        dir.path(),
        &seeds,
        &out_dir,
        r#"{ "name": "faulty", "kind": "builtin_faulty", "fault_profile": "and_to_or" }"#,
        25,
    );
    let out = hdlmutant(&["fuzz", "-c", config.to_str().unwrap()], dir.path());
    assert_eq!(
        exit_code(&out),
        1,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let bug_dirs: Vec<_> = std::fs::read_dir(out_dir.join("bugs"))
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    assert!(!bug_dirs.is_empty());
    for f in [
        "seed.v",
        "variant.v",
        "testbench.v",
        "metadata.json",
        "tool.log",
    ] {
        assert!(bug_dirs[0].join(f).exists(), "missing {f}");
    }

    // Reduce the recorded bug.
    let reduce_out = hdlmutant(&["reduce", bug_dirs[0].to_str().unwrap()], dir.path());
    assert_eq!(
        exit_code(&reduce_out),
        0,
        "{}",
        String::from_utf8_lossy(&reduce_out.stderr)
    );
    assert!(bug_dirs[0].join("reduced.v").exists());

    // Render the report.
    let report_path = dir.path().join("report.md");
    let report_out = hdlmutant(
        &[
            "report",
            out_dir.to_str().unwrap(),
            "-o",
            report_path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&report_out), 0);
    let report = std::fs::read_to_string(&report_path).unwrap();
    assert!(report.contains("## Bugs by class and tool"));
    assert!(report.contains("| faulty |"));
    assert!(report.contains("## Seed coverage"));
}

#[test]
fn fuzz_runs_are_byte_identical_modulo_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds");
    std::fs::create_dir_all(&seeds).unwrap();
    std::fs::write(seeds.join("s.v"), FAULT_SEED).unwrap();

    let mut metadata_sets = Vec::new();
    for run in 0..2 {
        let out_dir = dir.path().join(format!("out{run}"));
        let config = write_campaign_config(
            &dir.path().join("."),
            &seeds,
            &out_dir,
            r#"{ "name": "faulty", "kind": "builtin_faulty", "fault_profile": "and_to_or" }"#,
            15,
        );
        let out = hdlmutant(&["fuzz", "-c", config.to_str().unwrap()], dir.path());
        assert_eq!(
            exit_code(&out),
            1,
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let mut per_bug = Vec::new();
        let mut dirs: Vec<_> = std::fs::read_dir(out_dir.join("bugs"))
            .unwrap()
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        dirs.sort();
        for bug_dir in dirs {
            let mut v: serde_json::Value = serde_json::from_str(
                &std::fs::read_to_string(bug_dir.join("metadata.json")).unwrap(),
            )
            .unwrap();
            // The timestamp lives in its own field; everything else must be
            // byte-identical across runs.
            v.as_object_mut().unwrap().remove("created_at_epoch_secs");
            per_bug.push(serde_json::to_string_pretty(&v).unwrap());
        }
        metadata_sets.push(per_bug);
    }
    assert!(!metadata_sets[0].is_empty());
    assert_eq!(metadata_sets[0], metadata_sets[1]);
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, "{ not json").unwrap();
    let out = hdlmutant(&["fuzz", "-c", config.to_str().unwrap()], dir.path());
    assert_eq!(exit_code(&out), 2);

    // Structurally valid JSON but invalid campaign (both budgets set).
    let seeds = dir.path().join("seeds");
    std::fs::create_dir_all(&seeds).unwrap();
    std::fs::write(seeds.join("s.v"), FAULT_SEED).unwrap();
    let bad = format!(
        r#"{{ "seeds_dir": "{}", "tools": [{{ "name": "identity", "kind": "builtin_identity" }}],
             "max_iterations": 1, "wall_clock_budget_secs": 1, "output_dir": "{}" }}"#,
        seeds.display(),
        dir.path().join("o").display()
    );
    std::fs::write(&config, bad).unwrap();
    let out = hdlmutant(&["fuzz", "-c", config.to_str().unwrap()], dir.path());
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn usage_error_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = hdlmutant(&["frobnicate"], dir.path());
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn workdir_env_var_is_honored_and_preserved() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds");
    std::fs::create_dir_all(&seeds).unwrap();
    std::fs::write(seeds.join("s.v"), FAULT_SEED).unwrap();
    let scratch = dir.path().join("scratch");
    std::fs::create_dir_all(&scratch).unwrap();
    std::fs::write(scratch.join("keep.txt"), "mine").unwrap();
    let out_dir = dir.path().join("out");
    let config = write_campaign_config(
        dir.path(),
        &seeds,
        &out_dir,
        r#"{ "name": "identity", "kind": "builtin_identity" }"#,
        2,
    );
    let out = Command::new(env!("CARGO_BIN_EXE_hdlmutant"))
        .args(["fuzz", "-c", config.to_str().unwrap()])
        .env("HDLMUTANT_WORKDIR", &scratch)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        exit_code(&out),
        0,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // The caller-provided scratch dir survives, and no default work dir was
    // created inside the output dir.
    assert!(scratch.join("keep.txt").exists());
    assert!(!out_dir.join("work").exists());
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds");
    std::fs::create_dir_all(&seeds).unwrap();
    std::fs::write(seeds.join("s.v"), FAULT_SEED).unwrap();
    let out_dir = dir.path().join("ignored");
    let override_dir = dir.path().join("actual");
    let config = write_campaign_config(
        dir.path(),
        &seeds,
        &out_dir,
        r#"{ "name": "identity", "kind": "builtin_identity" }"#,
        2,
    );
    let out = hdlmutant(
        &[
            "fuzz",
            "-c",
            config.to_str().unwrap(),
            "--out",
            override_dir.to_str().unwrap(),
            "--variants-per-seed",
            "1",
            "--seed",
            "99",
        ],
        dir.path(),
    );
    assert_eq!(
        exit_code(&out),
        0,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(override_dir.join("campaign.json").exists());
    assert!(!out_dir.exists());
}
