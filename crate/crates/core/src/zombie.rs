//! Zombie-logic annotation from coverage.
//!
//! A zombie site is a maximal statement subtree that never executed under
//! the testbench. Sites whose guarding path condition folds to constant
//! false are static (unreachable under any input); the rest are dynamic
//! (merely unexercised by the current stimuli) and may reactivate under
//! other stimuli, which is why the mutation engine re-checks equivalence
//! behind this analysis.

use crate::ast::*;
use crate::sema;
use crate::sim::CoverageReport;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZombieKind {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ZombieAnnotation {
    pub zombie_nodes: BTreeMap<NodeId, ZombieKind>,
    pub protected_nodes: BTreeSet<NodeId>,
}

impl ZombieAnnotation {
    pub fn is_zombie(&self, id: NodeId) -> bool {
        self.zombie_nodes.contains_key(&id)
    }
    pub fn is_protected(&self, id: NodeId) -> bool {
        self.protected_nodes.contains(&id)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ZombieError {
    #[error("coverage report does not match design: {0}")]
    CoverageMismatch(String),
    #[error("node {0} is not a zombie site")]
    NotZombie(NodeId),
}

/// Annotate zombie sites. `cov` must come from a simulation of this exact
/// `ast` (node-id keyed).
pub fn mark_zombie(ast: &ModuleAst, cov: &CoverageReport) -> Result<ZombieAnnotation, ZombieError> {
    let stmt_ids: BTreeSet<NodeId> = ast.statement_ids().into_iter().collect();
    let cov_ids: BTreeSet<NodeId> = cov.line_hits.keys().copied().collect();
    if stmt_ids != cov_ids {
        return Err(ZombieError::CoverageMismatch(format!(
            "coverage has {} statement keys, design has {}",
            cov_ids.len(),
            stmt_ids.len()
        )));
    }

    let usage = SignalUsage::of(ast);
    let mut annotation = ZombieAnnotation::default();

    // Protected: statements whose subtree holds the only writes to a signal
    // that is read elsewhere. Pruning them would leave readers referencing a
    // never-driven signal.
    ast.walk_statements(&mut |_, s| {
        if is_protected(s, &usage) {
            annotation.protected_nodes.insert(s.id());
        }
    });

    // Zombie: outermost zero-hit subtrees, descending through protected
    // nodes so the two sets stay disjoint.
    let protected = annotation.protected_nodes.clone();
    for item in &ast.items {
        let body = match item {
            ModuleItem::Always(a) => &a.body,
            ModuleItem::Initial(i) => &i.body,
            ModuleItem::Assign(_) => continue,
        };
        mark_stmt(body, cov, &protected, &mut annotation, &[]);
    }
    Ok(annotation)
}

/// One guard on the path from a module item to a statement.
#[derive(Debug, Clone)]
enum Guard {
    /// If condition, with the polarity the path requires.
    Cond {
        expr: Expression,
        must_be_true: bool,
    },
    /// Case arm: subject must equal label.
    CaseArm {
        subject: Expression,
        label: Expression,
    },
    /// For body: loop entered iff cond holds with var = init.
    ForEntry {
        cond: Expression,
        var: String,
        init: Expression,
    },
}

impl Guard {
    /// Some(false) when the guard provably never holds.
    fn feasible(&self) -> Option<bool> {
        match self {
            Guard::Cond { expr, must_be_true } => sema::const_value(expr).map(|v| {
                let truth = v != 0;
                truth == *must_be_true
            }),
            Guard::CaseArm { subject, label } => {
                let s = sema::const_fold(subject)?;
                let l = sema::const_fold(label)?;
                Some(s.0 == l.0)
            }
            Guard::ForEntry { cond, var, init } => {
                let folded = substitute(cond, var, init);
                sema::const_value(&folded).map(|v| v != 0)
            }
        }
    }
}

fn substitute(e: &Expression, var: &str, value: &Expression) -> Expression {
    match e {
        Expression::Ref { name, .. } if name == var => value.clone(),
        Expression::Unary {
            id,
            span,
            op,
            operand,
        } => Expression::Unary {
            id: *id,
            span: *span,
            op: *op,
            operand: Box::new(substitute(operand, var, value)),
        },
        Expression::Binary {
            id,
            span,
            op,
            lhs,
            rhs,
        } => Expression::Binary {
            id: *id,
            span: *span,
            op: *op,
            lhs: Box::new(substitute(lhs, var, value)),
            rhs: Box::new(substitute(rhs, var, value)),
        },
        Expression::Ternary {
            id,
            span,
            cond,
            then_expr,
            else_expr,
        } => Expression::Ternary {
            id: *id,
            span: *span,
            cond: Box::new(substitute(cond, var, value)),
            then_expr: Box::new(substitute(then_expr, var, value)),
            else_expr: Box::new(substitute(else_expr, var, value)),
        },
        Expression::SignCast {
            id,
            span,
            signed,
            operand,
        } => Expression::SignCast {
            id: *id,
            span: *span,
            signed: *signed,
            operand: Box::new(substitute(operand, var, value)),
        },
        other => other.clone(),
    }
}

fn mark_stmt(
    stmt: &Statement,
    cov: &CoverageReport,
    protected: &BTreeSet<NodeId>,
    annotation: &mut ZombieAnnotation,
    guards: &[Guard],
) {
    let hits = cov.line_hits.get(&stmt.id()).copied().unwrap_or(0);
    if hits == 0 && subtree_all_zero(stmt, cov) {
        // Begin-end wrappers are transparent: sites are the assignments and
        // control structures inside, so a leaf prune can drop one dead
        // assignment while the enclosing structure survives. Protected
        // nodes are likewise skipped in favor of their children.
        if matches!(stmt, Statement::Block(_)) || protected.contains(&stmt.id()) {
            descend(stmt, cov, protected, annotation, guards);
            return;
        }
        let kind = if guards.iter().any(|g| g.feasible() == Some(false)) {
            ZombieKind::Static
        } else {
            ZombieKind::Dynamic
        };
        annotation.zombie_nodes.insert(stmt.id(), kind);
        return; // maximality: never descend into a marked site
    }
    descend(stmt, cov, protected, annotation, guards);
}

fn descend(
    stmt: &Statement,
    cov: &CoverageReport,
    protected: &BTreeSet<NodeId>,
    annotation: &mut ZombieAnnotation,
    guards: &[Guard],
) {
    match stmt {
        Statement::Blocking(_) | Statement::NonBlocking(_) => {}
        Statement::If(s) => {
            let mut g_then = guards.to_vec();
            g_then.push(Guard::Cond {
                expr: s.cond.clone(),
                must_be_true: true,
            });
            mark_stmt(&s.then_branch, cov, protected, annotation, &g_then);
            if let Some(e) = &s.else_branch {
                let mut g_else = guards.to_vec();
                g_else.push(Guard::Cond {
                    expr: s.cond.clone(),
                    must_be_true: false,
                });
                mark_stmt(e, cov, protected, annotation, &g_else);
            }
        }
        Statement::Case(s) => {
            for arm in &s.arms {
                let mut g = guards.to_vec();
                g.push(Guard::CaseArm {
                    subject: s.subject.clone(),
                    label: arm.label.clone(),
                });
                mark_stmt(&arm.body, cov, protected, annotation, &g);
            }
            if let Some(d) = &s.default_arm {
                mark_stmt(d, cov, protected, annotation, guards);
            }
        }
        Statement::For(s) => {
            let mut g = guards.to_vec();
            g.push(Guard::ForEntry {
                cond: s.cond.clone(),
                var: s.var.clone(),
                init: s.init.clone(),
            });
            mark_stmt(&s.body, cov, protected, annotation, &g);
        }
        Statement::Block(b) => {
            for s in &b.statements {
                mark_stmt(s, cov, protected, annotation, guards);
            }
        }
    }
}

fn subtree_all_zero(stmt: &Statement, cov: &CoverageReport) -> bool {
    let mut all_zero = true;
    stmt.walk(&mut |s| {
        if cov.line_hits.get(&s.id()).copied().unwrap_or(0) != 0 {
            all_zero = false;
        }
    });
    all_zero
}

/// Kind of an already-marked zombie site.
pub fn classify_zombie(
    node: NodeId,
    _ast: &ModuleAst,
    annotation: &ZombieAnnotation,
) -> Result<ZombieKind, ZombieError> {
    annotation
        .zombie_nodes
        .get(&node)
        .copied()
        .ok_or(ZombieError::NotZombie(node))
}

struct SignalUsage {
    reads: HashMap<String, u64>,
    writes: HashMap<String, u64>,
}

impl SignalUsage {
    fn of(ast: &ModuleAst) -> Self {
        let mut reads: HashMap<String, u64> = HashMap::new();
        let mut writes: HashMap<String, u64> = HashMap::new();
        let bump = |map: &mut HashMap<String, u64>, names: Vec<String>| {
            for n in names {
                *map.entry(n).or_insert(0) += 1;
            }
        };
        for item in &ast.items {
            match item {
                ModuleItem::Assign(a) => {
                    let mut r = Vec::new();
                    a.rhs.collect_reads(&mut r);
                    if let LValue::BitSelect { index, .. } = &a.lhs {
                        index.collect_reads(&mut r);
                    }
                    bump(&mut reads, r);
                    bump(&mut writes, vec![a.lhs.name().to_string()]);
                }
                ModuleItem::Always(al) => {
                    if let Sensitivity::Edges(edges) = &al.sensitivity {
                        bump(&mut reads, edges.iter().map(|e| e.signal.clone()).collect());
                    }
                    let mut r = Vec::new();
                    al.body.collect_reads(&mut r);
                    bump(&mut reads, r);
                    let mut w = Vec::new();
                    al.body.collect_writes(&mut w);
                    bump(&mut writes, w);
                }
                ModuleItem::Initial(i) => {
                    let mut r = Vec::new();
                    i.body.collect_reads(&mut r);
                    bump(&mut reads, r);
                    let mut w = Vec::new();
                    i.body.collect_writes(&mut w);
                    bump(&mut writes, w);
                }
            }
        }
        SignalUsage { reads, writes }
    }
}

/// A statement is protected when its subtree contains every write to some
/// signal that is read outside the subtree.
fn is_protected(stmt: &Statement, usage: &SignalUsage) -> bool {
    let mut writes_in = Vec::new();
    stmt.collect_writes(&mut writes_in);
    if writes_in.is_empty() {
        return false;
    }
    let mut reads_in = Vec::new();
    stmt.collect_reads(&mut reads_in);

    let mut per_signal_writes: HashMap<&str, u64> = HashMap::new();
    for w in &writes_in {
        *per_signal_writes.entry(w.as_str()).or_insert(0) += 1;
    }
    let mut per_signal_reads: HashMap<&str, u64> = HashMap::new();
    for r in &reads_in {
        *per_signal_reads.entry(r.as_str()).or_insert(0) += 1;
    }

    for (name, w_in) in &per_signal_writes {
        let w_total = usage.writes.get(*name).copied().unwrap_or(0);
        let r_total = usage.reads.get(*name).copied().unwrap_or(0);
        let r_in = per_signal_reads.get(*name).copied().unwrap_or(0);
        let sole_writer = w_total == *w_in;
        let read_outside = r_total > r_in;
        if sole_writer && read_outside {
            return true;
        }
    }
    false
}
