//! Synthesis-tool adapters: a uniform contract over external processes and
//! built-in reference tools, with a hard timeout.
//!
//! Builtins exist so the whole pipeline can run hermetically: `identity`
//! passes designs through, `faulty` plants one deterministic miscompile per
//! design (chosen by a content-derived seed so reruns reproduce it), `hang`
//! blocks until the timeout, `crash` exits abnormally. External tools run as
//! shell-less subprocesses, killed at `timeout_secs`, with stdout/stderr
//! captured to `tool.log` in the invocation workdir.

use crate::ast::*;
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};
use thiserror::Error;
use wait_timeout::ChildExt;

fn default_timeout() -> u64 {
    60
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolKind {
    External,
    BuiltinIdentity,
    BuiltinFaulty,
    BuiltinHang,
    BuiltinCrash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultProfile {
    /// Rewrite one bitwise `&` into `|`.
    AndToOr,
    /// Remove one `$signed(...)` cast.
    DropSigned,
    /// Add one to the amount of one shift.
    OffByOneShift,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub kind: ToolKind,
    /// External only: command with `{input}` `{output}` `{top}` placeholders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command_template: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault_profile: Option<FaultProfile>,
    /// Optional resimulation hook for external netlists: command with
    /// `{netlist}` `{testbench}` `{trace}` placeholders producing a trace
    /// JSON file at `{trace}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_sim_template: Option<String>,
}

impl ToolSpec {
    pub fn builtin(name: &str, kind: ToolKind) -> ToolSpec {
        ToolSpec {
            name: name.into(),
            kind,
            command_template: None,
            timeout_secs: default_timeout(),
            fault_profile: None,
            external_sim_template: None,
        }
    }

    pub fn identity() -> ToolSpec {
        Self::builtin("identity", ToolKind::BuiltinIdentity)
    }

    pub fn faulty(profile: FaultProfile) -> ToolSpec {
        let name = match profile {
            FaultProfile::AndToOr => "faulty-and-to-or",
            FaultProfile::DropSigned => "faulty-drop-signed",
            FaultProfile::OffByOneShift => "faulty-off-by-one-shift",
        };
        ToolSpec {
            fault_profile: Some(profile),
            ..Self::builtin(name, ToolKind::BuiltinFaulty)
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        match self.kind {
            ToolKind::External => {
                let Some(tpl) = &self.command_template else {
                    return Err(SynthError::InvalidSpec(format!(
                        "tool `{}` is external but has no command template",
                        self.name
                    )));
                };
                if !tpl.contains("{input}") || !tpl.contains("{output}") {
                    return Err(SynthError::InvalidSpec(format!(
                        "tool `{}` template must contain {{input}} and {{output}}",
                        self.name
                    )));
                }
                Ok(())
            }
            ToolKind::BuiltinFaulty => {
                if self.fault_profile.is_none() {
                    return Err(SynthError::InvalidSpec(format!(
                        "tool `{}` is builtin_faulty but has no fault profile",
                        self.name
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SynthOutput {
    /// Netlist inside the supported subset, ready for resimulation.
    Design(Box<ModuleAst>),
    /// Netlist retained as an opaque file (external tools).
    Opaque(PathBuf),
}

#[derive(Debug, Clone)]
pub enum SynthStatus {
    Ok(SynthOutput),
    Crash {
        exit_info: String,
        log_excerpt: String,
    },
    Hang {
        elapsed: Duration,
    },
}

#[derive(Debug, Clone)]
pub struct SynthResult {
    pub status: SynthStatus,
    pub wall_time: Duration,
}

impl SynthResult {
    pub fn is_ok(&self) -> bool {
        matches!(self.status, SynthStatus::Ok(_))
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("tool not found: {0}")]
    ToolNotFound(String),
    #[error("workdir error: {0}")]
    WorkdirError(#[from] std::io::Error),
    #[error("invalid tool spec: {0}")]
    InvalidSpec(String),
    #[error("input design unreadable: {0}")]
    InvalidInput(String),
}

/// 64-bit FNV-1a, used to derive the faulty adapter's per-design seed.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Run one synthesis invocation. Never blocks past `timeout_secs` plus a
/// small grace period.
pub fn synthesize(
    tool: &ToolSpec,
    design_path: &Path,
    workdir: &Path,
) -> Result<SynthResult, SynthError> {
    tool.validate()?;
    std::fs::create_dir_all(workdir)?;
    let started = Instant::now();
    match tool.kind {
        ToolKind::BuiltinIdentity => {
            let module = read_design(design_path)?;
            Ok(SynthResult {
                status: SynthStatus::Ok(SynthOutput::Design(Box::new(module))),
                wall_time: started.elapsed(),
            })
        }
        ToolKind::BuiltinFaulty => {
            let module = read_design(design_path)?;
            let profile = tool.fault_profile.expect("validated above");
            let text = std::fs::read_to_string(design_path)?;
            let seed = fnv1a(text.as_bytes()) ^ fnv1a(tool.name.as_bytes());
            let mut rng = SplitMix64::new(seed);
            let mutated = apply_fault(module, profile, &mut rng);
            Ok(SynthResult {
                status: SynthStatus::Ok(SynthOutput::Design(Box::new(mutated))),
                wall_time: started.elapsed(),
            })
        }
        ToolKind::BuiltinHang => {
            let deadline = Duration::from_secs(tool.timeout_secs);
            while started.elapsed() < deadline {
                std::thread::sleep(Duration::from_millis(20).min(deadline - started.elapsed()));
            }
            Ok(SynthResult {
                status: SynthStatus::Hang {
                    elapsed: started.elapsed(),
                },
                wall_time: started.elapsed(),
            })
        }
        ToolKind::BuiltinCrash => {
            let excerpt = "fatal: internal assertion failed during netlist mapping".to_string();
            std::fs::write(workdir.join("tool.log"), &excerpt)?;
            Ok(SynthResult {
                status: SynthStatus::Crash {
                    exit_info: "exit code 134".into(),
                    log_excerpt: excerpt,
                },
                wall_time: started.elapsed(),
            })
        }
        ToolKind::External => run_external(tool, design_path, workdir, started),
    }
}

fn read_design(path: &Path) -> Result<ModuleAst, SynthError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SynthError::InvalidInput(format!("{}: {e}", path.display())))?;
    crate::parser::parse(&text)
        .map_err(|e| SynthError::InvalidInput(format!("{}: {e}", path.display())))
}

fn run_external(
    tool: &ToolSpec,
    design_path: &Path,
    workdir: &Path,
    started: Instant,
) -> Result<SynthResult, SynthError> {
    let template = tool.command_template.as_deref().expect("validated");
    let output_path = workdir.join("netlist.v");
    let top = std::fs::read_to_string(design_path)
        .ok()
        .and_then(|t| crate::parser::parse(&t).ok())
        .map(|m| m.name)
        .unwrap_or_else(|| "top".into());

    let argv: Vec<String> = template
        .split_whitespace()
        .map(|part| {
            part.replace("{input}", &design_path.to_string_lossy())
                .replace("{output}", &output_path.to_string_lossy())
                .replace("{top}", &top)
        })
        .collect();
    if argv.is_empty() {
        return Err(SynthError::InvalidSpec("empty command".into()));
    }

    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .current_dir(workdir)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                SynthError::ToolNotFound(argv[0].clone())
            } else {
                SynthError::WorkdirError(e)
            }
        })?;

    // Drain pipes on reader threads: grandchildren of a killed tool can keep
    // the pipe ends open, and a blocking read here would defeat the timeout.
    let (tx, rx) = std::sync::mpsc::channel::<String>();
    for pipe in [
        child
            .stdout
            .take()
            .map(|p| Box::new(p) as Box<dyn Read + Send>),
        child
            .stderr
            .take()
            .map(|p| Box::new(p) as Box<dyn Read + Send>),
    ]
    .into_iter()
    .flatten()
    {
        let tx = tx.clone();
        std::thread::spawn(move || {
            let mut pipe = pipe;
            let mut buf = String::new();
            let _ = pipe.read_to_string(&mut buf);
            let _ = tx.send(buf);
        });
    }
    drop(tx);

    let timeout = Duration::from_secs(tool.timeout_secs);
    let status = child.wait_timeout(timeout)?;
    let (status, hang) = match status {
        Some(s) => (Some(s), false),
        None => {
            let _ = child.kill();
            let _ = child.wait();
            (None, true)
        }
    };

    let mut log = String::new();
    for _ in 0..2 {
        match rx.recv_timeout(Duration::from_millis(200)) {
            Ok(chunk) => log.push_str(&chunk),
            Err(_) => break,
        }
    }
    let _ = std::fs::write(workdir.join("tool.log"), &log);

    let wall_time = started.elapsed();
    if hang {
        return Ok(SynthResult {
            status: SynthStatus::Hang { elapsed: wall_time },
            wall_time,
        });
    }
    let status = status.expect("non-hang has a status");
    if !status.success() {
        let excerpt: String = log.lines().take(5).collect::<Vec<_>>().join("\n");
        return Ok(SynthResult {
            status: SynthStatus::Crash {
                exit_info: format!("{status}"),
                log_excerpt: excerpt,
            },
            wall_time,
        });
    }
    if !output_path.exists() {
        return Ok(SynthResult {
            status: SynthStatus::Crash {
                exit_info: format!("{status}"),
                log_excerpt: "tool exited 0 but produced no netlist".into(),
            },
            wall_time,
        });
    }
    // Netlists inside the subset can be resimulated directly; anything else
    // stays opaque for the external-simulator hook.
    let output = match std::fs::read_to_string(&output_path)
        .ok()
        .and_then(|t| crate::parser::parse(&t).ok())
    {
        Some(module) => SynthOutput::Design(Box::new(module)),
        None => SynthOutput::Opaque(output_path),
    };
    Ok(SynthResult {
        status: SynthStatus::Ok(output),
        wall_time,
    })
}

// ============================================================================
// Fault profiles
// ============================================================================

fn apply_fault(module: ModuleAst, profile: FaultProfile, rng: &mut SplitMix64) -> ModuleAst {
    let mut module = module;
    match profile {
        FaultProfile::AndToOr => {
            let sites = collect_expr_sites(&module, &|e| {
                matches!(
                    e,
                    Expression::Binary {
                        op: BinaryOp::BitAnd,
                        ..
                    }
                )
            });
            if sites.is_empty() {
                return module;
            }
            let target = sites[rng.next_below(sites.len() as u64) as usize];
            rewrite_exprs(&mut module, &mut |e| {
                if e.id() == target {
                    if let Expression::Binary { op, .. } = e {
                        *op = BinaryOp::BitOr;
                    }
                }
            });
        }
        FaultProfile::DropSigned => {
            let sites = collect_expr_sites(&module, &|e| {
                matches!(e, Expression::SignCast { signed: true, .. })
            });
            if sites.is_empty() {
                return module;
            }
            let target = sites[rng.next_below(sites.len() as u64) as usize];
            rewrite_exprs(&mut module, &mut |e| {
                if e.id() == target {
                    if let Expression::SignCast { operand, .. } = e {
                        *e = (**operand).clone();
                    }
                }
            });
        }
        FaultProfile::OffByOneShift => {
            let sites = collect_expr_sites(&module, &|e| {
                matches!(
                    e,
                    Expression::Binary {
                        op: BinaryOp::Shl | BinaryOp::Shr,
                        ..
                    }
                )
            });
            if sites.is_empty() {
                return module;
            }
            let target = sites[rng.next_below(sites.len() as u64) as usize];
            let add_id = module.alloc_id();
            let one_id = module.alloc_id();
            let hole_id = module.alloc_id();
            rewrite_exprs(&mut module, &mut |e| {
                if e.id() == target {
                    if let Expression::Binary { rhs, .. } = e {
                        let old = std::mem::replace(
                            rhs,
                            Box::new(Expression::Literal {
                                id: hole_id,
                                span: SourceSpan::default(),
                                width: 32,
                                value: 0,
                            }),
                        );
                        **rhs = Expression::Binary {
                            id: add_id,
                            span: SourceSpan::default(),
                            op: BinaryOp::Add,
                            lhs: old,
                            rhs: Box::new(Expression::Literal {
                                id: one_id,
                                span: SourceSpan::default(),
                                width: 32,
                                value: 1,
                            }),
                        };
                    }
                }
            });
        }
    }
    module
}

fn collect_expr_sites(module: &ModuleAst, pred: &dyn Fn(&Expression) -> bool) -> Vec<NodeId> {
    let mut sites = Vec::new();
    for item in &module.items {
        match item {
            ModuleItem::Assign(a) => {
                collect_in_expr(&a.rhs, pred, &mut sites);
                if let LValue::BitSelect { index, .. } = &a.lhs {
                    collect_in_expr(index, pred, &mut sites);
                }
            }
            ModuleItem::Always(al) => collect_in_stmt(&al.body, pred, &mut sites),
            ModuleItem::Initial(i) => collect_in_stmt(&i.body, pred, &mut sites),
        }
    }
    sites
}

fn collect_in_stmt(stmt: &Statement, pred: &dyn Fn(&Expression) -> bool, out: &mut Vec<NodeId>) {
    stmt.walk(&mut |s| {
        for e in s.own_expressions() {
            collect_in_expr(e, pred, out);
        }
        if let Statement::Blocking(a) | Statement::NonBlocking(a) = s {
            if let LValue::BitSelect { index, .. } = &a.lhs {
                collect_in_expr(index, pred, out);
            }
        }
    });
}

fn collect_in_expr(e: &Expression, pred: &dyn Fn(&Expression) -> bool, out: &mut Vec<NodeId>) {
    if pred(e) {
        out.push(e.id());
    }
    match e {
        Expression::Literal { .. } | Expression::Ref { .. } | Expression::PartSelect { .. } => {}
        Expression::BitSelect { index, .. } => collect_in_expr(index, pred, out),
        Expression::Concat { parts, .. } => {
            for p in parts {
                collect_in_expr(p, pred, out);
            }
        }
        Expression::Unary { operand, .. } | Expression::SignCast { operand, .. } => {
            collect_in_expr(operand, pred, out)
        }
        Expression::Binary { lhs, rhs, .. } => {
            collect_in_expr(lhs, pred, out);
            collect_in_expr(rhs, pred, out);
        }
        Expression::Ternary {
            cond,
            then_expr,
            else_expr,
            ..
        } => {
            collect_in_expr(cond, pred, out);
            collect_in_expr(then_expr, pred, out);
            collect_in_expr(else_expr, pred, out);
        }
    }
}

fn rewrite_exprs(module: &mut ModuleAst, f: &mut dyn FnMut(&mut Expression)) {
    for item in &mut module.items {
        match item {
            ModuleItem::Assign(a) => {
                rewrite_expr(&mut a.rhs, f);
                if let LValue::BitSelect { index, .. } = &mut a.lhs {
                    rewrite_expr(index, f);
                }
            }
            ModuleItem::Always(al) => rewrite_stmt(&mut al.body, f),
            ModuleItem::Initial(i) => rewrite_stmt(&mut i.body, f),
        }
    }
}

fn rewrite_stmt(stmt: &mut Statement, f: &mut dyn FnMut(&mut Expression)) {
    match stmt {
        Statement::Blocking(a) | Statement::NonBlocking(a) => {
            rewrite_expr(&mut a.rhs, f);
            if let LValue::BitSelect { index, .. } = &mut a.lhs {
                rewrite_expr(index, f);
            }
        }
        Statement::If(s) => {
            rewrite_expr(&mut s.cond, f);
            rewrite_stmt(&mut s.then_branch, f);
            if let Some(e) = &mut s.else_branch {
                rewrite_stmt(e, f);
            }
        }
        Statement::Case(s) => {
            rewrite_expr(&mut s.subject, f);
            for arm in &mut s.arms {
                rewrite_expr(&mut arm.label, f);
                rewrite_stmt(&mut arm.body, f);
            }
            if let Some(d) = &mut s.default_arm {
                rewrite_stmt(d, f);
            }
        }
        Statement::For(s) => {
            rewrite_expr(&mut s.init, f);
            rewrite_expr(&mut s.cond, f);
            rewrite_expr(&mut s.step, f);
            rewrite_stmt(&mut s.body, f);
        }
        Statement::Block(b) => {
            for s in &mut b.statements {
                rewrite_stmt(s, f);
            }
        }
    }
}

fn rewrite_expr(e: &mut Expression, f: &mut dyn FnMut(&mut Expression)) {
    f(e);
    match e {
        Expression::Literal { .. } | Expression::Ref { .. } | Expression::PartSelect { .. } => {}
        Expression::BitSelect { index, .. } => rewrite_expr(index, f),
        Expression::Concat { parts, .. } => {
            for p in parts {
                rewrite_expr(p, f);
            }
        }
        Expression::Unary { operand, .. } | Expression::SignCast { operand, .. } => {
            rewrite_expr(operand, f)
        }
        Expression::Binary { lhs, rhs, .. } => {
            rewrite_expr(lhs, f);
            rewrite_expr(rhs, f);
        }
        Expression::Ternary {
            cond,
            then_expr,
            else_expr,
            ..
        } => {
            rewrite_expr(cond, f);
            rewrite_expr(then_expr, f);
            rewrite_expr(else_expr, f);
        }
    }
}
