//! Shared test infrastructure: a brute-force reference interpreter used as
//! an independent oracle for the event-driven simulator.
//!
//! The reference keeps no event queue and no dependency tracking: at every
//! event time it re-evaluates every combinational process in item order
//! until a full pass leaves the state unchanged, then runs every
//! edge-triggered block whose edges fired, and repeats until quiet. Values
//! are (bits, width, signed) with 128-bit intermediate arithmetic, mirroring
//! the documented semantics contract rather than the simulator's code.

#![allow(dead_code)]

use hdlmutant_core::ast::*;
use hdlmutant_core::testbench::TestbenchAst;
use hdlmutant_core::Trace;
use std::collections::HashMap;

type Val = (u64, u32, bool);

struct RefSim<'a> {
    module: &'a ModuleAst,
    widths: HashMap<String, (u32, bool)>,
    state: HashMap<String, u64>,
    nba: Vec<(String, u64, u64)>,
    edges: Vec<(String, bool)>, // (signal, rose)
}

pub fn simulate_reference(module: &ModuleAst, tb: &TestbenchAst) -> Result<Trace, String> {
    let mut widths = HashMap::new();
    for p in &module.ports {
        widths.insert(p.name.clone(), (p.width, p.signed));
    }
    for d in &module.declarations {
        widths.insert(d.name.clone(), (d.width, d.signed));
    }
    let state: HashMap<String, u64> = widths.keys().map(|k| (k.clone(), 0u64)).collect();
    let mut sim = RefSim {
        module,
        widths,
        state,
        nba: Vec::new(),
        edges: Vec::new(),
    };

    let mut times: Vec<u64> = tb.stimulus_schedule.iter().map(|s| s.time).collect();
    if let Some(clock) = &tb.clock_driver {
        let mut t = clock.half_period;
        while t <= tb.finish_time {
            times.push(t);
            t += clock.half_period;
        }
    }
    times.push(tb.finish_time);
    times.sort();
    times.dedup();

    let schedule: HashMap<u64, &hdlmutant_core::testbench::StimStep> =
        tb.stimulus_schedule.iter().map(|s| (s.time, s)).collect();
    let sample_times: Vec<u64> = tb.stimulus_schedule.iter().map(|s| s.time).collect();

    let outputs: Vec<&PortSpec> = module
        .ports
        .iter()
        .filter(|p| p.direction == Direction::Output)
        .collect();
    let mut samples: Vec<(String, Vec<u64>)> = outputs
        .iter()
        .map(|p| (p.name.clone(), Vec::new()))
        .collect();

    let mut first = true;
    for &t in &times {
        if first {
            sim.run_initials()?;
            first = false;
        }
        if let Some(step) = schedule.get(&t) {
            for (name, value) in &step.assigns {
                sim.drive(name, *value);
            }
        }
        if let Some(clock) = &tb.clock_driver {
            if t > 0 && t % clock.half_period == 0 {
                let cur = *sim.state.get(&clock.signal).unwrap_or(&0);
                sim.drive(&clock.signal, cur ^ 1);
            }
        }
        sim.settle(t)?;
        if sample_times.contains(&t) {
            for (i, p) in outputs.iter().enumerate() {
                samples[i].1.push(*sim.state.get(&p.name).unwrap_or(&0));
            }
        }
    }

    Ok(Trace {
        sample_times,
        outputs: samples,
        final_time: tb.finish_time,
    })
}

impl<'a> RefSim<'a> {
    fn width_of(&self, name: &str) -> (u32, bool) {
        *self.widths.get(name).unwrap_or(&(1, false))
    }

    fn drive(&mut self, name: &str, value: u64) {
        let (w, _) = self.width_of(name);
        let old = *self.state.get(name).unwrap_or(&0);
        let new = value & ref_mask(w);
        if old != new {
            self.state.insert(name.to_string(), new);
            if (old ^ new) & 1 != 0 {
                self.edges.push((name.to_string(), new & 1 == 1));
            }
        }
    }

    fn run_initials(&mut self) -> Result<(), String> {
        let before = self.state.clone();
        for item in &self.module.items {
            if let ModuleItem::Initial(i) = item {
                self.exec_stmt(&i.body)?;
            }
        }
        self.commit_nba();
        self.diff_edges(&before);
        Ok(())
    }

    fn settle(&mut self, t: u64) -> Result<(), String> {
        let mut guard = 0;
        loop {
            // Combinational fixpoint: full passes over every comb process.
            loop {
                guard += 1;
                if guard > 2000 {
                    return Err(format!("no fixpoint at t={t}"));
                }
                let before = self.state.clone();
                for item in &self.module.items {
                    match item {
                        ModuleItem::Assign(a) => {
                            let v = self.eval(&a.rhs);
                            self.write(&a.lhs, v, false);
                        }
                        ModuleItem::Always(al) if matches!(al.sensitivity, Sensitivity::Star) => {
                            self.exec_stmt(&al.body)?;
                        }
                        _ => {}
                    }
                }
                self.commit_nba();
                if self.state == before {
                    break;
                }
                self.diff_edges(&before);
            }
            // Edge-triggered batch.
            let edges = std::mem::take(&mut self.edges);
            if edges.is_empty() {
                return Ok(());
            }
            let mut any = false;
            let before = self.state.clone();
            for item in &self.module.items {
                if let ModuleItem::Always(al) = item {
                    if let Sensitivity::Edges(specs) = &al.sensitivity {
                        let fired = specs.iter().any(|spec| {
                            edges.iter().any(|(name, rose)| {
                                *name == spec.signal
                                    && match spec.edge {
                                        EdgeKind::Posedge => *rose,
                                        EdgeKind::Negedge => !*rose,
                                    }
                            })
                        });
                        if fired {
                            any = true;
                            self.exec_stmt(&al.body)?;
                        }
                    }
                }
            }
            if any {
                self.commit_nba();
                self.diff_edges(&before);
            }
            guard += 1;
            if guard > 2000 {
                return Err(format!("no fixpoint at t={t}"));
            }
        }
    }

    fn diff_edges(&mut self, before: &HashMap<String, u64>) {
        let mut changed: Vec<(String, u64, u64)> = Vec::new();
        for (name, new) in &self.state {
            let old = before.get(name).copied().unwrap_or(0);
            if old != *new {
                changed.push((name.clone(), old, *new));
            }
        }
        changed.sort();
        for (name, old, new) in changed {
            if (old ^ new) & 1 != 0 {
                self.edges.push((name, new & 1 == 1));
            }
        }
    }

    fn commit_nba(&mut self) {
        let queue = std::mem::take(&mut self.nba);
        for (name, bit_mask, value) in queue {
            let old = *self.state.get(&name).unwrap_or(&0);
            self.state
                .insert(name, (old & !bit_mask) | (value & bit_mask));
        }
    }

    fn write(&mut self, lhs: &LValue, rhs: Val, non_blocking: bool) {
        let name = lhs.name().to_string();
        let (width, _) = self.width_of(&name);
        let (bit_mask, value) = match lhs {
            LValue::Ref { .. } => (ref_mask(width), ref_extend(rhs, width)),
            LValue::BitSelect { index, .. } => {
                let (i, _, _) = self.eval(index);
                if i >= width as u64 {
                    return;
                }
                (1u64 << i, (rhs.0 & 1) << i)
            }
            LValue::PartSelect { msb, lsb, .. } => {
                let w = msb - lsb + 1;
                (
                    ref_mask(w) << lsb,
                    (ref_extend(rhs, w) & ref_mask(w)) << lsb,
                )
            }
        };
        if non_blocking {
            self.nba.push((name, bit_mask, value));
        } else {
            let old = *self.state.get(&name).unwrap_or(&0);
            self.state
                .insert(name, (old & !bit_mask) | (value & bit_mask));
        }
    }

    fn exec_stmt(&mut self, stmt: &Statement) -> Result<(), String> {
        match stmt {
            Statement::Blocking(a) => {
                let v = self.eval(&a.rhs);
                self.write(&a.lhs, v, false);
                Ok(())
            }
            Statement::NonBlocking(a) => {
                let v = self.eval(&a.rhs);
                self.write(&a.lhs, v, true);
                Ok(())
            }
            Statement::If(s) => {
                let (c, _, _) = self.eval(&s.cond);
                if c != 0 {
                    self.exec_stmt(&s.then_branch)
                } else if let Some(e) = &s.else_branch {
                    self.exec_stmt(e)
                } else {
                    Ok(())
                }
            }
            Statement::Case(s) => {
                let subject = self.eval(&s.subject);
                for arm in &s.arms {
                    let label = self.eval(&arm.label);
                    if ref_to_i128(subject) == ref_to_i128(label) {
                        return self.exec_stmt(&arm.body);
                    }
                }
                if let Some(d) = &s.default_arm {
                    self.exec_stmt(d)
                } else {
                    Ok(())
                }
            }
            Statement::For(s) => {
                let (w, _) = self.width_of(&s.var);
                let init = self.eval(&s.init);
                self.state.insert(s.var.clone(), ref_extend(init, w));
                let mut iters = 0;
                loop {
                    let (c, _, _) = self.eval(&s.cond);
                    if c == 0 {
                        return Ok(());
                    }
                    iters += 1;
                    if iters > 100_000 {
                        return Err("runaway loop".into());
                    }
                    self.exec_stmt(&s.body)?;
                    let step = self.eval(&s.step);
                    let (vw, vs) = self.width_of(&s.var);
                    let cur = (*self.state.get(&s.var).unwrap_or(&0), vw, vs);
                    let next = ref_binary(s.step_op, cur, step);
                    self.state.insert(s.var.clone(), ref_extend(next, vw));
                }
            }
            Statement::Block(b) => {
                for s in &b.statements {
                    self.exec_stmt(s)?;
                }
                Ok(())
            }
        }
    }

    fn eval(&self, e: &Expression) -> Val {
        match e {
            Expression::Literal { width, value, .. } => (*value, *width, false),
            Expression::Ref { name, .. } => {
                let (w, s) = self.width_of(name);
                (*self.state.get(name).unwrap_or(&0), w, s)
            }
            Expression::BitSelect { name, index, .. } => {
                let (w, _) = self.width_of(name);
                let (i, _, _) = self.eval(index);
                if i >= w as u64 {
                    (0, 1, false)
                } else {
                    ((self.state.get(name).unwrap_or(&0) >> i) & 1, 1, false)
                }
            }
            Expression::PartSelect { name, msb, lsb, .. } => {
                let w = msb - lsb + 1;
                (
                    (self.state.get(name).unwrap_or(&0) >> lsb) & ref_mask(w),
                    w,
                    false,
                )
            }
            Expression::Concat { parts, .. } => {
                let mut bits = 0u64;
                let mut width = 0u32;
                for p in parts {
                    let (v, w, _) = self.eval(p);
                    bits = (bits << w) | v;
                    width += w;
                }
                (bits & ref_mask(width.min(64)), width.min(64), false)
            }
            Expression::Unary { op, operand, .. } => {
                let (v, w, s) = self.eval(operand);
                match op {
                    UnaryOp::Plus => (v, w, s),
                    UnaryOp::Minus => (v.wrapping_neg() & ref_mask(w), w, s),
                    UnaryOp::LogNot => ((v == 0) as u64, 1, false),
                    UnaryOp::BitNot => (!v & ref_mask(w), w, s),
                }
            }
            Expression::Binary { op, lhs, rhs, .. } => {
                let a = self.eval(lhs);
                let b = self.eval(rhs);
                ref_binary(*op, a, b)
            }
            Expression::Ternary {
                cond,
                then_expr,
                else_expr,
                ..
            } => {
                let (c, _, _) = self.eval(cond);
                let t = self.eval(then_expr);
                let f = self.eval(else_expr);
                let w = t.1.max(f.1);
                let s = t.2 && f.2;
                let chosen = if c != 0 { t } else { f };
                (ref_extend(chosen, w), w, s)
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

fn ref_mask(w: u32) -> u64 {
    if w >= 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

fn ref_to_i128(v: Val) -> i128 {
    let (bits, w, signed) = v;
    if signed && w > 0 && bits & (1u64 << (w - 1)) != 0 {
        bits as i128 - (1i128 << w)
    } else {
        bits as i128
    }
}

fn ref_extend(v: Val, target: u32) -> u64 {
    let (bits, w, s) = v;
    if target <= w {
        return bits & ref_mask(target);
    }
    if s && w > 0 && bits & (1u64 << (w - 1)) != 0 {
        (bits | !ref_mask(w)) & ref_mask(target)
    } else {
        bits
    }
}

fn ref_binary(op: BinaryOp, a: Val, b: Val) -> Val {
    let (va, wa, sa) = a;
    let (vb, wb, sb) = b;
    let w = wa.max(wb);
    let s = sa && sb;
    let ia = ref_to_i128(a);
    let ib = ref_to_i128(b);
    let arith = |x: i128| ((x as u64) & ref_mask(w), w, s);
    match op {
        BinaryOp::Add => arith(ia.wrapping_add(ib)),
        BinaryOp::Sub => arith(ia.wrapping_sub(ib)),
        BinaryOp::Mul => arith(ia.wrapping_mul(ib)),
        BinaryOp::Div => arith(if ib == 0 { 0 } else { ia.wrapping_div(ib) }),
        BinaryOp::Mod => arith(if ib == 0 { 0 } else { ia.wrapping_rem(ib) }),
        BinaryOp::LogAnd => ((va != 0 && vb != 0) as u64, 1, false),
        BinaryOp::LogOr => ((va != 0 || vb != 0) as u64, 1, false),
        BinaryOp::BitAnd => ((ref_extend(a, w) & ref_extend(b, w)) & ref_mask(w), w, s),
        BinaryOp::BitXor => ((ref_extend(a, w) ^ ref_extend(b, w)) & ref_mask(w), w, s),
        BinaryOp::BitOr => ((ref_extend(a, w) | ref_extend(b, w)) & ref_mask(w), w, s),
        BinaryOp::Eq | BinaryOp::CaseEq => ((ia == ib) as u64, 1, false),
        BinaryOp::Ne | BinaryOp::CaseNe => ((ia != ib) as u64, 1, false),
        BinaryOp::Lt => ((ia < ib) as u64, 1, false),
        BinaryOp::Le => ((ia <= ib) as u64, 1, false),
        BinaryOp::Gt => ((ia > ib) as u64, 1, false),
        BinaryOp::Ge => ((ia >= ib) as u64, 1, false),
        BinaryOp::Shl => {
            if vb >= wa as u64 {
                (0, wa, sa)
            } else {
                ((va << vb) & ref_mask(wa), wa, sa)
            }
        }
        BinaryOp::Shr => {
            if vb >= wa as u64 {
                (0, wa, sa)
            } else {
                (va >> vb, wa, sa)
            }
        }
    }
}
