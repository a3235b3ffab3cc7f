//! Event-driven two-state simulator with line/condition/branch coverage.
//!
//! Semantics contract (shared with the reference interpreter used in tests):
//! - all signals start at 0; no X/Z
//! - at each event time: apply initial blocks (t=0 only), then scheduled
//!   stimulus, then the clock toggle, then settle: combinational processes
//!   re-evaluate to fixpoint, edge-triggered batches run with non-blocking
//!   commits at batch end, repeating until quiet
//! - outputs are sampled at each schedule step after full settling
//! - a time step that exceeds `StepLimit::max_deltas` rounds is reported as
//!   a combinational loop
//!
//! Value model: every expression evaluates to `(bits, width, signed)` with
//! bits masked to width. Arithmetic is performed in 128 bits after
//! sign/zero-extension, then masked back. Division and modulo by zero give 0.

use crate::ast::*;
use crate::testbench::TestbenchAst;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

// ============================================================================
// Public types
// ============================================================================

/// Sampled output values, one row per schedule step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub sample_times: Vec<u64>,
    /// (output port name, one value per sample time), in port order.
    pub outputs: Vec<(String, Vec<u64>)>,
    pub final_time: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CondOutcome {
    pub saw_true: bool,
    pub saw_false: bool,
}

/// Identifies one branch arm of an If or Case statement. If: arm 0 = then,
/// arm 1 = else (implicit else included). Case: arm i per label, last arm =
/// default (implicit default included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct BranchKey {
    pub stmt: NodeId,
    pub arm: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoverageReport {
    pub line_hits: BTreeMap<NodeId, u64>,
    pub condition_outcomes: BTreeMap<NodeId, CondOutcome>,
    pub branch_taken: BTreeMap<BranchKey, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageSummary {
    pub line_pct: f64,
    pub condition_pct: f64,
    pub branch_pct: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct StepLimit {
    /// Settle rounds allowed within one time step.
    pub max_deltas: u32,
    /// Iterations allowed for a single for-loop execution.
    pub max_loop_iters: u32,
}

impl Default for StepLimit {
    fn default() -> Self {
        StepLimit {
            max_deltas: 1000,
            max_loop_iters: 10_000,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("combinational loop: no fixpoint within {max_deltas} rounds at t={time}")]
    CombinationalLoop { time: u64, max_deltas: u32 },
    #[error("step limit exceeded at t={time}")]
    StepLimitExceeded { time: u64 },
    #[error("testbench drives unknown port `{0}`")]
    PortMismatch(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Equivalent,
    Mismatch {
        first_time: u64,
        port: String,
        value_a: u64,
        value_b: u64,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum CompareError {
    #[error("traces have different shape: {0}")]
    ShapeMismatch(String),
}

// ============================================================================
// Value primitives (shared by the simulator and constant folding)
// ============================================================================

pub(crate) fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

fn to_i128(bits: u64, width: u32, signed: bool) -> i128 {
    if signed && width > 0 {
        let sign_bit = 1u64 << (width - 1);
        if bits & sign_bit != 0 {
            (bits as i128) - (1i128 << width)
        } else {
            bits as i128
        }
    } else {
        bits as i128
    }
}

pub(crate) type Val = (u64, u32, bool);

pub(crate) fn apply_unary(op: UnaryOp, v: Val) -> Val {
    let (bits, w, s) = v;
    match op {
        UnaryOp::Plus => (bits, w, s),
        UnaryOp::Minus => ((bits.wrapping_neg()) & mask(w), w, s),
        UnaryOp::LogNot => ((bits == 0) as u64, 1, false),
        UnaryOp::BitNot => ((!bits) & mask(w), w, s),
    }
}

pub(crate) fn apply_binary(op: BinaryOp, a: Val, b: Val) -> Val {
    let (va, wa, sa) = a;
    let (vb, wb, sb) = b;
    let w = wa.max(wb);
    let s = sa && sb;
    let ia = to_i128(va, wa, sa);
    let ib = to_i128(vb, wb, sb);
    match op {
        BinaryOp::Add => (((ia + ib) as u64) & mask(w), w, s),
        BinaryOp::Sub => (((ia - ib) as u64) & mask(w), w, s),
        BinaryOp::Mul => ((ia.wrapping_mul(ib) as u64) & mask(w), w, s),
        BinaryOp::Div => {
            let q = if ib == 0 { 0 } else { ia.wrapping_div(ib) };
            ((q as u64) & mask(w), w, s)
        }
        BinaryOp::Mod => {
            let r = if ib == 0 { 0 } else { ia.wrapping_rem(ib) };
            ((r as u64) & mask(w), w, s)
        }
        BinaryOp::LogAnd => (((va != 0 && vb != 0) as u64), 1, false),
        BinaryOp::LogOr => (((va != 0 || vb != 0) as u64), 1, false),
        BinaryOp::BitAnd => {
            let (ea, eb) = extend_pair(a, b, w);
            (ea & eb & mask(w), w, s)
        }
        BinaryOp::BitXor => {
            let (ea, eb) = extend_pair(a, b, w);
            ((ea ^ eb) & mask(w), w, s)
        }
        BinaryOp::BitOr => {
            let (ea, eb) = extend_pair(a, b, w);
            ((ea | eb) & mask(w), w, s)
        }
        // Two-state semantics: === is ==, !== is !=.
        BinaryOp::Eq | BinaryOp::CaseEq => (((ia == ib) as u64), 1, false),
        BinaryOp::Ne | BinaryOp::CaseNe => (((ia != ib) as u64), 1, false),
        BinaryOp::Lt => (((ia < ib) as u64), 1, false),
        BinaryOp::Le => (((ia <= ib) as u64), 1, false),
        BinaryOp::Gt => (((ia > ib) as u64), 1, false),
        BinaryOp::Ge => (((ia >= ib) as u64), 1, false),
        BinaryOp::Shl => {
            if vb >= wa as u64 {
                (0, wa, sa)
            } else {
                ((va << vb) & mask(wa), wa, sa)
            }
        }
        BinaryOp::Shr => {
            // Logical shift regardless of signedness (>>> is out of subset).
            if vb >= wa as u64 {
                (0, wa, sa)
            } else {
                (va >> vb, wa, sa)
            }
        }
    }
}

/// Extend both operands to a common width for bitwise ops, honoring each
/// operand's own signedness.
fn extend_pair(a: Val, b: Val, w: u32) -> (u64, u64) {
    (extend_to(a, w), extend_to(b, w))
}

pub(crate) fn extend_to(v: Val, target: u32) -> u64 {
    let (bits, w, s) = v;
    if target <= w {
        return bits & mask(target);
    }
    if s && w > 0 && bits & (1u64 << (w - 1)) != 0 {
        (bits | (!mask(w))) & mask(target)
    } else {
        bits
    }
}

/// Evaluate a closed expression (no signal references). `None` if a signal
/// leaks in.
pub(crate) fn eval_const(e: &Expression) -> Option<u64> {
    eval_const_val(e).map(|(v, _, _)| v)
}

fn eval_const_val(e: &Expression) -> Option<Val> {
    match e {
        Expression::Literal { width, value, .. } => Some((*value, *width, false)),
        Expression::Ref { .. } | Expression::BitSelect { .. } | Expression::PartSelect { .. } => {
            None
        }
        Expression::Concat { parts, .. } => {
            let mut bits = 0u64;
            let mut width = 0u32;
            for p in parts {
                let (v, w, _) = eval_const_val(p)?;
                bits = (bits << w) | v;
                width += w;
            }
            Some((bits & mask(width.min(64)), width.min(64), false))
        }
        Expression::Unary { op, operand, .. } => Some(apply_unary(*op, eval_const_val(operand)?)),
        Expression::Binary { op, lhs, rhs, .. } => Some(apply_binary(
            *op,
            eval_const_val(lhs)?,
            eval_const_val(rhs)?,
        )),
        Expression::Ternary {
            cond,
            then_expr,
            else_expr,
            ..
        } => {
            let (c, _, _) = eval_const_val(cond)?;
            let t = eval_const_val(then_expr)?;
            let f = eval_const_val(else_expr)?;
            let w = t.1.max(f.1);
            let s = t.2 && f.2;
            let chosen = if c != 0 { t } else { f };
            Some((extend_to(chosen, w), w, s))
        }
        Expression::SignCast {
            signed, operand, ..
        } => {
            let (v, w, _) = eval_const_val(operand)?;
            Some((v, w, *signed))
        }
    }
}

// ============================================================================
// Elaboration
// ============================================================================

#[derive(Debug, Clone)]
enum Process {
    /// Continuous assign or always @* — re-evaluated when any read changes.
    Comb { item: usize },
    /// Edge-triggered always block.
    Seq {
        item: usize,
        triggers: Vec<(usize, EdgeKind)>,
    },
    /// Initial block, run once at t=0.
    Init { item: usize },
}

struct Engine<'a> {
    module: &'a ModuleAst,
    names: HashMap<String, usize>,
    widths: Vec<u32>,
    signs: Vec<bool>,
    values: Vec<u64>,
    processes: Vec<Process>,
    /// signal index → comb process indices that read it.
    comb_deps: Vec<Vec<usize>>,
    /// Comb processes dirty for the next settle round.
    dirty: BTreeSet<usize>,
    /// Edges recorded since the last sequential-trigger collection.
    edges: Vec<(usize, EdgeKind)>,
    nba: Vec<(usize, u64, u64)>,
    cov: CoverageReport,
    limits: StepLimit,
    time: u64,
}

/// Run one simulation and return the output trace and coverage counters.
pub fn simulate(
    design: &ModuleAst,
    tb: &TestbenchAst,
    limits: StepLimit,
) -> Result<(Trace, CoverageReport), SimError> {
    let mut engine = Engine::elaborate(design, limits);
    for step in &tb.stimulus_schedule {
        for (name, _) in &step.assigns {
            if !engine.names.contains_key(name) {
                return Err(SimError::PortMismatch(name.clone()));
            }
        }
    }
    if let Some(c) = &tb.clock_driver {
        if !engine.names.contains_key(&c.signal) {
            return Err(SimError::PortMismatch(c.signal.clone()));
        }
    }

    // Event timeline: schedule steps, clock toggles, horizon end.
    let mut times: BTreeSet<u64> = BTreeSet::new();
    let sample_times: Vec<u64> = tb.stimulus_schedule.iter().map(|s| s.time).collect();
    times.extend(sample_times.iter().copied());
    if let Some(clock) = &tb.clock_driver {
        let mut t = clock.half_period;
        while t <= tb.finish_time {
            times.insert(t);
            t += clock.half_period;
        }
    }
    times.insert(tb.finish_time);

    let mut schedule_iter: HashMap<u64, &crate::testbench::StimStep> =
        tb.stimulus_schedule.iter().map(|s| (s.time, s)).collect();
    let sample_set: BTreeSet<u64> = sample_times.iter().copied().collect();

    let output_ports: Vec<&PortSpec> = design
        .ports
        .iter()
        .filter(|p| p.direction == Direction::Output)
        .collect();
    let mut samples: Vec<Vec<u64>> = vec![Vec::new(); output_ports.len()];
    let mut sampled_times = Vec::new();

    let mut first = true;
    for &t in &times {
        engine.time = t;
        if first {
            // Initial blocks run once before any stimulus.
            engine.run_initials()?;
            first = false;
        }
        if let Some(step) = schedule_iter.remove(&t) {
            for (name, value) in &step.assigns {
                let idx = engine.names[name];
                engine.drive(idx, *value);
            }
        }
        if let Some(clock) = &tb.clock_driver {
            if t > 0 && t % clock.half_period == 0 {
                let idx = engine.names[&clock.signal];
                let new = engine.values[idx] ^ 1;
                engine.drive(idx, new);
            }
        }
        engine.settle()?;
        if sample_set.contains(&t) {
            sampled_times.push(t);
            for (i, p) in output_ports.iter().enumerate() {
                let idx = engine.names[&p.name];
                samples[i].push(engine.values[idx]);
            }
        }
    }

    let trace = Trace {
        sample_times: sampled_times,
        outputs: output_ports
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), std::mem::take(&mut samples[i])))
            .collect(),
        final_time: tb.finish_time,
    };
    Ok((trace, engine.cov))
}

impl<'a> Engine<'a> {
    fn elaborate(module: &'a ModuleAst, limits: StepLimit) -> Engine<'a> {
        let mut names = HashMap::new();
        let mut widths = Vec::new();
        let mut signs = Vec::new();
        for p in &module.ports {
            names.insert(p.name.clone(), widths.len());
            widths.push(p.width);
            signs.push(p.signed);
        }
        for d in &module.declarations {
            names.insert(d.name.clone(), widths.len());
            widths.push(d.width);
            signs.push(d.signed);
        }
        let values = vec![0u64; widths.len()];

        let mut processes = Vec::new();
        let mut comb_deps: Vec<Vec<usize>> = vec![Vec::new(); widths.len()];
        for (item_idx, item) in module.items.iter().enumerate() {
            match item {
                ModuleItem::Assign(a) => {
                    let pid = processes.len();
                    processes.push(Process::Comb { item: item_idx });
                    let mut reads = Vec::new();
                    a.rhs.collect_reads(&mut reads);
                    if let LValue::BitSelect { index, .. } = &a.lhs {
                        index.collect_reads(&mut reads);
                    }
                    for r in reads {
                        if let Some(&s) = names.get(&r) {
                            if !comb_deps[s].contains(&pid) {
                                comb_deps[s].push(pid);
                            }
                        }
                    }
                }
                ModuleItem::Always(al) => match &al.sensitivity {
                    Sensitivity::Star => {
                        let pid = processes.len();
                        processes.push(Process::Comb { item: item_idx });
                        let mut reads = Vec::new();
                        al.body.collect_reads(&mut reads);
                        for r in reads {
                            if let Some(&s) = names.get(&r) {
                                if !comb_deps[s].contains(&pid) {
                                    comb_deps[s].push(pid);
                                }
                            }
                        }
                    }
                    Sensitivity::Edges(edges) => {
                        let triggers = edges
                            .iter()
                            .filter_map(|e| names.get(&e.signal).map(|&s| (s, e.edge)))
                            .collect();
                        processes.push(Process::Seq {
                            item: item_idx,
                            triggers,
                        });
                    }
                },
                ModuleItem::Initial(_) => {
                    processes.push(Process::Init { item: item_idx });
                }
            }
        }

        // Coverage keys exist up front so zero-hit entries are visible.
        let mut cov = CoverageReport::default();
        for item in &module.items {
            match item {
                ModuleItem::Assign(a) => {
                    cov.line_hits.insert(a.id, 0);
                    init_expr_conditions(&a.rhs, &mut cov);
                    if let LValue::BitSelect { index, .. } = &a.lhs {
                        init_expr_conditions(index, &mut cov);
                    }
                }
                ModuleItem::Always(al) => init_stmt_coverage(&al.body, &mut cov),
                ModuleItem::Initial(i) => init_stmt_coverage(&i.body, &mut cov),
            }
        }

        // Everything combinational evaluates at least once at startup.
        let dirty: BTreeSet<usize> = processes
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Process::Comb { .. }))
            .map(|(i, _)| i)
            .collect();

        Engine {
            module,
            names,
            widths,
            signs,
            values,
            processes,
            comb_deps,
            dirty,
            edges: Vec::new(),
            nba: Vec::new(),
            cov,
            limits,
            time: 0,
        }
    }

    /// External drive (stimulus or clock): committed immediately, change and
    /// edge recorded against the previous committed value.
    fn drive(&mut self, idx: usize, value: u64) {
        let old = self.values[idx];
        let new = value & mask(self.widths[idx]);
        if new == old {
            return;
        }
        self.values[idx] = new;
        self.note_committed_change(idx, old, new);
    }

    fn write_now(&mut self, idx: usize, bit_mask: u64, value: u64) {
        let old = self.values[idx];
        self.values[idx] = (old & !bit_mask) | (value & bit_mask);
    }

    fn note_committed_change(&mut self, idx: usize, old: u64, new: u64) {
        for &p in &self.comb_deps[idx] {
            self.dirty.insert(p);
        }
        if (old ^ new) & 1 != 0 {
            self.edges.push((
                idx,
                if new & 1 == 1 {
                    EdgeKind::Posedge
                } else {
                    EdgeKind::Negedge
                },
            ));
        }
    }

    /// Run a batch of processes and treat the aggregate state delta as the
    /// committed change set. Transient values inside a batch (e.g. the
    /// clear-then-accumulate idiom in an @* block) do not generate events,
    /// matching fixpoint-over-committed-state semantics.
    fn run_batch(&mut self, pids: &[usize]) -> Result<(), SimError> {
        let snapshot = self.values.clone();
        for &pid in pids {
            self.run_process(pid)?;
        }
        self.commit_nba();
        for idx in 0..self.values.len() {
            if self.values[idx] != snapshot[idx] {
                self.note_committed_change(idx, snapshot[idx], self.values[idx]);
            }
        }
        Ok(())
    }

    fn run_initials(&mut self) -> Result<(), SimError> {
        let inits: Vec<usize> = (0..self.processes.len())
            .filter(|&i| matches!(self.processes[i], Process::Init { .. }))
            .collect();
        self.run_batch(&inits)
    }

    /// Settle the current time step: combinational fixpoint, then any
    /// triggered sequential batches, repeating until quiet.
    fn settle(&mut self) -> Result<(), SimError> {
        let mut rounds = 0u32;
        loop {
            // Combinational fixpoint.
            while !self.dirty.is_empty() {
                rounds += 1;
                if rounds > self.limits.max_deltas {
                    return Err(SimError::CombinationalLoop {
                        time: self.time,
                        max_deltas: self.limits.max_deltas,
                    });
                }
                let batch: Vec<usize> = self.dirty.iter().copied().collect();
                self.dirty.clear();
                self.run_batch(&batch)?;
            }
            // Sequential processes triggered by edges recorded so far.
            let edges = std::mem::take(&mut self.edges);
            if edges.is_empty() {
                return Ok(());
            }
            let mut triggered = Vec::new();
            for (pid, proc_) in self.processes.iter().enumerate() {
                if let Process::Seq { triggers, .. } = proc_ {
                    if triggers
                        .iter()
                        .any(|(sig, kind)| edges.iter().any(|(s, k)| s == sig && k == kind))
                    {
                        triggered.push(pid);
                    }
                }
            }
            if triggered.is_empty() {
                // Edges with no listeners are dropped.
                continue;
            }
            rounds += 1;
            if rounds > self.limits.max_deltas {
                return Err(SimError::CombinationalLoop {
                    time: self.time,
                    max_deltas: self.limits.max_deltas,
                });
            }
            self.run_batch(&triggered)?;
        }
    }

    fn commit_nba(&mut self) {
        let queue = std::mem::take(&mut self.nba);
        for (idx, bit_mask, value) in queue {
            self.write_now(idx, bit_mask, value);
        }
    }

    fn run_process(&mut self, pid: usize) -> Result<(), SimError> {
        match self.processes[pid].clone() {
            Process::Comb { item } | Process::Init { item } | Process::Seq { item, .. } => {
                match &self.module.items[item] {
                    ModuleItem::Assign(a) => {
                        *self.cov.line_hits.entry(a.id).or_insert(0) += 1;
                        let rhs = self.eval(&a.rhs);
                        let lhs = a.lhs.clone();
                        self.assign(&lhs, rhs, false);
                        Ok(())
                    }
                    ModuleItem::Always(al) => {
                        let body = al.body.clone();
                        self.exec_stmt(&body)
                    }
                    ModuleItem::Initial(i) => {
                        let body = i.body.clone();
                        self.exec_stmt(&body)
                    }
                }
            }
        }
    }

    fn exec_stmt(&mut self, stmt: &Statement) -> Result<(), SimError> {
        *self.cov.line_hits.entry(stmt.id()).or_insert(0) += 1;
        match stmt {
            Statement::Blocking(a) => {
                let rhs = self.eval(&a.rhs);
                self.assign(&a.lhs, rhs, false);
                Ok(())
            }
            Statement::NonBlocking(a) => {
                let rhs = self.eval(&a.rhs);
                self.assign(&a.lhs, rhs, true);
                Ok(())
            }
            Statement::If(s) => {
                let (c, _, _) = self.eval(&s.cond);
                let taken = c != 0;
                self.record_condition(s.cond.id(), taken);
                let key = BranchKey {
                    stmt: s.id,
                    arm: if taken { 0 } else { 1 },
                };
                *self.cov.branch_taken.entry(key).or_insert(0) += 1;
                if taken {
                    self.exec_stmt(&s.then_branch)
                } else if let Some(e) = &s.else_branch {
                    self.exec_stmt(e)
                } else {
                    Ok(())
                }
            }
            Statement::Case(s) => {
                let subject = self.eval(&s.subject);
                for (i, arm) in s.arms.iter().enumerate() {
                    let label = self.eval(&arm.label);
                    let (m, _, _) = apply_binary(BinaryOp::Eq, subject, label);
                    let matched = m != 0;
                    self.record_condition(arm.label.id(), matched);
                    if matched {
                        let key = BranchKey {
                            stmt: s.id,
                            arm: i as u32,
                        };
                        *self.cov.branch_taken.entry(key).or_insert(0) += 1;
                        return self.exec_stmt(&arm.body);
                    }
                }
                let key = BranchKey {
                    stmt: s.id,
                    arm: s.arms.len() as u32,
                };
                *self.cov.branch_taken.entry(key).or_insert(0) += 1;
                if let Some(d) = &s.default_arm {
                    self.exec_stmt(d)
                } else {
                    Ok(())
                }
            }
            Statement::For(s) => {
                let var_idx = self.names[&s.var];
                let init = self.eval(&s.init);
                let target_w = self.widths[var_idx];
                self.write_now(var_idx, mask(target_w), extend_to(init, target_w));
                let mut iters = 0u32;
                loop {
                    let (c, _, _) = self.eval(&s.cond);
                    if c == 0 {
                        break;
                    }
                    iters += 1;
                    if iters > self.limits.max_loop_iters {
                        return Err(SimError::StepLimitExceeded { time: self.time });
                    }
                    self.exec_stmt(&s.body)?;
                    let step = self.eval(&s.step);
                    let cur = (
                        self.values[var_idx],
                        self.widths[var_idx],
                        self.signs[var_idx],
                    );
                    let next = apply_binary(s.step_op, cur, step);
                    self.write_now(var_idx, mask(target_w), extend_to(next, target_w));
                }
                Ok(())
            }
            Statement::Block(b) => {
                for s in &b.statements {
                    self.exec_stmt(s)?;
                }
                Ok(())
            }
        }
    }

    fn record_condition(&mut self, id: NodeId, outcome: bool) {
        let entry = self.cov.condition_outcomes.entry(id).or_default();
        if outcome {
            entry.saw_true = true;
        } else {
            entry.saw_false = true;
        }
    }

    fn assign(&mut self, lhs: &LValue, rhs: Val, non_blocking: bool) {
        let idx = match self.names.get(lhs.name()) {
            Some(&i) => i,
            None => return,
        };
        let width = self.widths[idx];
        let (bit_mask, value) = match lhs {
            LValue::Ref { .. } => (mask(width), extend_to(rhs, width)),
            LValue::BitSelect { index, .. } => {
                let (i, _, _) = self.eval(index);
                if i >= width as u64 {
                    return; // out-of-range dynamic select: dropped
                }
                (1u64 << i, (rhs.0 & 1) << i)
            }
            LValue::PartSelect { msb, lsb, .. } => {
                let w = msb - lsb + 1;
                let m = mask(w) << lsb;
                (m, (extend_to(rhs, w) & mask(w)) << lsb)
            }
        };
        if non_blocking {
            self.nba.push((idx, bit_mask, value));
        } else {
            self.write_now(idx, bit_mask, value);
        }
    }

    fn eval(&mut self, e: &Expression) -> Val {
        match e {
            Expression::Literal { width, value, .. } => (*value, *width, false),
            Expression::Ref { name, .. } => {
                let idx = self.names[name];
                (self.values[idx], self.widths[idx], self.signs[idx])
            }
            Expression::BitSelect { name, index, .. } => {
                let idx = self.names[name];
                let (i, _, _) = self.eval(index);
                if i >= self.widths[idx] as u64 {
                    (0, 1, false)
                } else {
                    ((self.values[idx] >> i) & 1, 1, false)
                }
            }
            Expression::PartSelect { name, msb, lsb, .. } => {
                let idx = self.names[name];
                let w = msb - lsb + 1;
                ((self.values[idx] >> lsb) & mask(w), w, false)
            }
            Expression::Concat { parts, .. } => {
                let mut bits = 0u64;
                let mut width = 0u32;
                for p in parts {
                    let (v, w, _) = self.eval(p);
                    bits = (bits << w) | v;
                    width += w;
                }
                (bits & mask(width.min(64)), width.min(64), false)
            }
            Expression::Unary { op, operand, .. } => {
                let v = self.eval(operand);
                apply_unary(*op, v)
            }
            Expression::Binary { op, lhs, rhs, .. } => {
                let a = self.eval(lhs);
                let b = self.eval(rhs);
                apply_binary(*op, a, b)
            }
            Expression::Ternary {
                cond,
                then_expr,
                else_expr,
                ..
            } => {
                let (c, _, _) = self.eval(cond);
                let taken = c != 0;
                self.record_condition(cond.id(), taken);
                let t = self.eval(then_expr);
                let f = self.eval(else_expr);
                let w = t.1.max(f.1);
                let s = t.2 && f.2;
                let chosen = if taken { t } else { f };
                (extend_to(chosen, w), w, s)
            }
            Expression::SignCast {
                signed, operand, ..
            } => {
                let (v, w, _) = self.eval(operand);
                (v, w, *signed)
            }
        }
    }
}

fn init_stmt_coverage(stmt: &Statement, cov: &mut CoverageReport) {
    stmt.walk(&mut |s| {
        cov.line_hits.insert(s.id(), 0);
        match s {
            Statement::If(i) => {
                cov.condition_outcomes.entry(i.cond.id()).or_default();
                cov.branch_taken.insert(BranchKey { stmt: i.id, arm: 0 }, 0);
                cov.branch_taken.insert(BranchKey { stmt: i.id, arm: 1 }, 0);
            }
            Statement::Case(c) => {
                for (idx, arm) in c.arms.iter().enumerate() {
                    cov.condition_outcomes.entry(arm.label.id()).or_default();
                    cov.branch_taken.insert(
                        BranchKey {
                            stmt: c.id,
                            arm: idx as u32,
                        },
                        0,
                    );
                }
                cov.branch_taken.insert(
                    BranchKey {
                        stmt: c.id,
                        arm: c.arms.len() as u32,
                    },
                    0,
                );
            }
            _ => {}
        }
        for e in s.own_expressions() {
            init_expr_conditions(e, cov);
        }
    });
}

fn init_expr_conditions(e: &Expression, cov: &mut CoverageReport) {
    match e {
        Expression::Ternary {
            cond,
            then_expr,
            else_expr,
            ..
        } => {
            cov.condition_outcomes.entry(cond.id()).or_default();
            init_expr_conditions(cond, cov);
            init_expr_conditions(then_expr, cov);
            init_expr_conditions(else_expr, cov);
        }
        Expression::BitSelect { index, .. } => init_expr_conditions(index, cov),
        Expression::Concat { parts, .. } => {
            for p in parts {
                init_expr_conditions(p, cov);
            }
        }
        Expression::Unary { operand, .. } | Expression::SignCast { operand, .. } => {
            init_expr_conditions(operand, cov)
        }
        Expression::Binary { lhs, rhs, .. } => {
            init_expr_conditions(lhs, cov);
            init_expr_conditions(rhs, cov);
        }
        _ => {}
    }
}

// ============================================================================
// Coverage summary and trace comparison
// ============================================================================

pub fn coverage_summary(report: &CoverageReport) -> CoverageSummary {
    let pct = |covered: usize, total: usize| -> f64 {
        if total == 0 {
            100.0
        } else {
            covered as f64 * 100.0 / total as f64
        }
    };
    let line_total = report.line_hits.len();
    let line_cov = report.line_hits.values().filter(|h| **h > 0).count();
    let cond_total = report.condition_outcomes.len();
    let cond_cov = report
        .condition_outcomes
        .values()
        .filter(|o| o.saw_true && o.saw_false)
        .count();
    let br_total = report.branch_taken.len();
    let br_cov = report.branch_taken.values().filter(|h| **h > 0).count();
    CoverageSummary {
        line_pct: pct(line_cov, line_total),
        condition_pct: pct(cond_cov, cond_total),
        branch_pct: pct(br_cov, br_total),
    }
}

/// Compare two traces sample by sample; earliest divergence wins.
pub fn compare_traces(a: &Trace, b: &Trace) -> Result<Verdict, CompareError> {
    if a.sample_times != b.sample_times {
        return Err(CompareError::ShapeMismatch("sample times differ".into()));
    }
    let names_a: Vec<&String> = a.outputs.iter().map(|(n, _)| n).collect();
    let names_b: Vec<&String> = b.outputs.iter().map(|(n, _)| n).collect();
    if names_a != names_b {
        return Err(CompareError::ShapeMismatch("output ports differ".into()));
    }
    for (ti, &t) in a.sample_times.iter().enumerate() {
        for ((name, va), (_, vb)) in a.outputs.iter().zip(b.outputs.iter()) {
            if va.len() != b.sample_times.len() || vb.len() != b.sample_times.len() {
                return Err(CompareError::ShapeMismatch("ragged trace".into()));
            }
            if va[ti] != vb[ti] {
                return Ok(Verdict::Mismatch {
                    first_time: t,
                    port: name.clone(),
                    value_a: va[ti],
                    value_b: vb[ti],
                });
            }
        }
    }
    Ok(Verdict::Equivalent)
}

// ============================================================================
// Coverage JSON export
// ============================================================================

#[derive(Serialize)]
struct LineEntry {
    id: u32,
    hits: u64,
}

#[derive(Serialize)]
struct CondEntry {
    id: u32,
    saw_true: bool,
    saw_false: bool,
}

#[derive(Serialize)]
struct BranchEntry {
    stmt: u32,
    arm: u32,
    hits: u64,
}

#[derive(Serialize)]
struct CoverageExport {
    lines: Vec<LineEntry>,
    conditions: Vec<CondEntry>,
    branches: Vec<BranchEntry>,
}

#[derive(Serialize, serde::Deserialize)]
struct TracePort {
    port: String,
    values: Vec<u64>,
}

#[derive(Serialize, serde::Deserialize)]
struct TraceExport {
    sample_times: Vec<u64>,
    outputs: Vec<TracePort>,
    final_time: u64,
}

/// Serialize a trace for external-simulator interchange.
pub fn trace_to_json(trace: &Trace) -> String {
    let export = TraceExport {
        sample_times: trace.sample_times.clone(),
        outputs: trace
            .outputs
            .iter()
            .map(|(port, values)| TracePort {
                port: port.clone(),
                values: values.clone(),
            })
            .collect(),
        final_time: trace.final_time,
    };
    serde_json::to_string_pretty(&export).expect("trace serializes")
}

pub fn trace_from_json(text: &str) -> Result<Trace, String> {
    let export: TraceExport = serde_json::from_str(text).map_err(|e| e.to_string())?;
    Ok(Trace {
        sample_times: export.sample_times,
        outputs: export
            .outputs
            .into_iter()
            .map(|p| (p.port, p.values))
            .collect(),
        final_time: export.final_time,
    })
}

pub fn coverage_to_json(report: &CoverageReport) -> String {
    let export = CoverageExport {
        lines: report
            .line_hits
            .iter()
            .map(|(id, hits)| LineEntry {
                id: id.0,
                hits: *hits,
            })
            .collect(),
        conditions: report
            .condition_outcomes
            .iter()
            .map(|(id, o)| CondEntry {
                id: id.0,
                saw_true: o.saw_true,
                saw_false: o.saw_false,
            })
            .collect(),
        branches: report
            .branch_taken
            .iter()
            .map(|(k, hits)| BranchEntry {
                stmt: k.stmt.0,
                arm: k.arm,
                hits: *hits,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&export).expect("coverage export is serializable")
}
