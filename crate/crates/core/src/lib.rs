//! hdlmutant: a fuzzing toolkit for Verilog logic-synthesis tools.
//!
//! The pipeline: parse a seed design, simulate it under a seeded random
//! testbench to find behaviorally inactive ("zombie") statements, generate
//! semantically equivalent variants by pruning or inserting logic only at
//! those sites, run seed and variant through the same synthesis tool, and
//! compare the synthesized behaviors under identical stimuli. Any divergence,
//! crash, or hang implicates the tool.

pub mod ast;
pub mod design_gen;
pub mod emit;
pub mod fragment;
pub mod harness;
pub mod lexer;
pub mod mutate;
pub mod parser;
pub mod rng;
pub mod sema;
pub mod sim;
pub mod synth;
pub mod testbench;
pub mod zombie;

pub use ast::{ModuleAst, NodeClass, NodeId, PortSpec};
pub use emit::emit;
pub use parser::{parse, ParseError};
pub use sim::{
    compare_traces, coverage_summary, simulate, CoverageReport, StepLimit, Trace, Verdict,
};
pub use testbench::{extract_ports, generate_testbench, StimulusConfig, TestbenchAst};
