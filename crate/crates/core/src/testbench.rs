//! Deterministic-by-seed testbench construction.
//!
//! Every non-clock input receives a fresh splitmix64 draw at each schedule
//! step (masked to port width). Reset-shaped inputs (`rst`/`reset` in the
//! name) are held active for the first two steps and then deasserted, so
//! sequential logic actually leaves reset. The clock input, when present, is
//! owned by a dedicated toggle driver.

use crate::ast::{Direction, ModuleAst, PortSpec};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use std::fmt::Write;
use thiserror::Error;

fn default_vector_count() -> u32 {
    100
}
fn default_step_delay() -> u64 {
    10
}
fn default_half_period() -> u64 {
    5
}
fn default_margin() -> u64 {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulusConfig {
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_vector_count")]
    pub vector_count: u32,
    #[serde(default = "default_step_delay")]
    pub step_delay: u64,
    #[serde(default = "default_half_period")]
    pub clock_half_period: u64,
    /// Extra time simulated past the last vector.
    #[serde(default = "default_margin")]
    pub margin: u64,
}

impl Default for StimulusConfig {
    fn default() -> Self {
        StimulusConfig {
            rng_seed: 0,
            vector_count: 100,
            step_delay: 10,
            clock_half_period: 5,
            margin: 10,
        }
    }
}

impl StimulusConfig {
    pub fn with_seed(seed: u64) -> Self {
        StimulusConfig {
            rng_seed: seed,
            ..Default::default()
        }
    }

    pub fn total_horizon(&self) -> u64 {
        self.vector_count as u64 * self.step_delay + self.margin
    }
}

/// One schedule entry: input values applied at `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct StimStep {
    pub time: u64,
    pub assigns: Vec<(String, u64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClockDriver {
    pub signal: String,
    pub half_period: u64,
}

/// In-memory testbench: schedule, clock process, horizon. Passed straight to
/// the simulator; [`emit_testbench`] renders it as Verilog for external use.
#[derive(Debug, Clone, PartialEq)]
pub struct TestbenchAst {
    pub dut_name: String,
    pub ports: Vec<PortSpec>,
    pub stimulus_schedule: Vec<StimStep>,
    pub clock_driver: Option<ClockDriver>,
    pub finish_time: u64,
    pub config: StimulusConfig,
}

#[derive(Debug, Error, PartialEq)]
pub enum TestbenchError {
    #[error("design `{0}` has no output ports")]
    NoOutputs(String),
}

/// Extract the port list, flagging at most one clock input: the first
/// width-1 input named `clk` or `clock` (case-insensitive).
pub fn extract_ports(ast: &ModuleAst) -> Result<Vec<PortSpec>, TestbenchError> {
    if !ast.ports.iter().any(|p| p.direction == Direction::Output) {
        return Err(TestbenchError::NoOutputs(ast.name.clone()));
    }
    let mut ports = ast.ports.clone();
    let mut clock_taken = false;
    for p in &mut ports {
        let lower = p.name.to_ascii_lowercase();
        p.is_clock = !clock_taken
            && p.direction == Direction::Input
            && p.width == 1
            && (lower == "clk" || lower == "clock");
        if p.is_clock {
            clock_taken = true;
        }
    }
    Ok(ports)
}

fn is_reset_name(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    lower.contains("rst") || lower.contains("reset")
}

fn reset_active_low(name: &str) -> bool {
    name.to_ascii_lowercase().ends_with('n')
}

fn width_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Build the stimulus schedule. Pure in (ports, cfg): identical arguments
/// give a bit-identical testbench.
pub fn generate_testbench(ports: &[PortSpec], cfg: &StimulusConfig) -> TestbenchAst {
    let mut rng = SplitMix64::new(cfg.rng_seed);
    let inputs: Vec<&PortSpec> = ports
        .iter()
        .filter(|p| p.direction == Direction::Input && !p.is_clock)
        .collect();

    let mut schedule = Vec::new();
    if cfg.vector_count == 0 {
        // Time-0 initialization only: all inputs driven to zero.
        schedule.push(StimStep {
            time: 0,
            assigns: inputs.iter().map(|p| (p.name.clone(), 0u64)).collect(),
        });
    } else {
        for step in 0..cfg.vector_count {
            let mut assigns = Vec::with_capacity(inputs.len());
            for p in &inputs {
                // Each input consumes one draw per step; reset overrides keep
                // the stream layout independent of reset naming.
                let draw = rng.next_u64() & width_mask(p.width);
                let value = if is_reset_name(&p.name) {
                    let active_low = reset_active_low(&p.name);
                    let in_reset = step < 2;
                    match (in_reset, active_low) {
                        (true, true) => 0,
                        (true, false) => width_mask(p.width),
                        (false, true) => width_mask(p.width),
                        (false, false) => 0,
                    }
                } else {
                    draw
                };
                assigns.push((p.name.clone(), value));
            }
            schedule.push(StimStep {
                time: step as u64 * cfg.step_delay,
                assigns,
            });
        }
    }

    let clock_driver = ports.iter().find(|p| p.is_clock).map(|p| ClockDriver {
        signal: p.name.clone(),
        half_period: cfg.clock_half_period,
    });

    TestbenchAst {
        dut_name: String::new(),
        ports: ports.to_vec(),
        stimulus_schedule: schedule,
        clock_driver,
        finish_time: cfg.total_horizon(),
        config: *cfg,
    }
}

/// Convenience: extract ports and build the testbench for a design.
pub fn testbench_for(
    ast: &ModuleAst,
    cfg: &StimulusConfig,
) -> Result<TestbenchAst, TestbenchError> {
    let ports = extract_ports(ast)?;
    let mut tb = generate_testbench(&ports, cfg);
    tb.dut_name = ast.name.clone();
    Ok(tb)
}

/// Render the testbench as a standalone Verilog file for external
/// simulators. Sample lines are printed one time unit after each schedule
/// step so every same-time event has settled.
pub fn emit_testbench(tb: &TestbenchAst) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "module tb;");
    for p in &tb.ports {
        let range = if p.width > 1 {
            format!(" [{}:0]", p.width - 1)
        } else {
            String::new()
        };
        match p.direction {
            Direction::Input => {
                let _ = writeln!(out, "  reg{range} {};", p.name);
            }
            Direction::Output => {
                let _ = writeln!(out, "  wire{range} {};", p.name);
            }
        }
    }
    let conns: Vec<String> = tb
        .ports
        .iter()
        .map(|p| format!(".{}({})", p.name, p.name))
        .collect();
    let _ = writeln!(out, "  {} dut ({});", tb.dut_name, conns.join(", "));

    if let Some(clock) = &tb.clock_driver {
        let _ = writeln!(out, "  initial {} = 1'b0;", clock.signal);
        let _ = writeln!(
            out,
            "  always #{} {} = ~{};",
            clock.half_period, clock.signal, clock.signal
        );
    }

    let outputs: Vec<&PortSpec> = tb
        .ports
        .iter()
        .filter(|p| p.direction == Direction::Output)
        .collect();
    let fmt = outputs
        .iter()
        .map(|p| format!("{}=%h", p.name))
        .collect::<Vec<_>>()
        .join(" ");
    let args = outputs
        .iter()
        .map(|p| p.name.as_str())
        .collect::<Vec<_>>()
        .join(", ");

    out.push_str("  initial begin\n");
    let mut now = 0u64;
    for step in &tb.stimulus_schedule {
        if step.time > now {
            let _ = writeln!(out, "    #{};", step.time - now);
            now = step.time;
        }
        for (name, value) in &step.assigns {
            let width = tb
                .ports
                .iter()
                .find(|p| p.name == *name)
                .map(|p| p.width)
                .unwrap_or(1);
            let _ = writeln!(out, "    {name} = {width}'h{value:x};");
        }
    }
    if tb.finish_time > now {
        let _ = writeln!(out, "    #{};", tb.finish_time - now);
    }
    out.push_str("    $finish;\n");
    out.push_str("  end\n");

    if !tb.stimulus_schedule.is_empty() {
        let step_delay = tb.config.step_delay.max(2);
        out.push_str("  initial begin\n    #1;\n    forever begin\n");
        let _ = writeln!(out, "      $display(\"t=%0d {fmt}\", $time - 1, {args});");
        let _ = writeln!(out, "      #{step_delay};");
        out.push_str("    end\n  end\n");
    }
    out.push_str("endmodule\n");
    out
}
