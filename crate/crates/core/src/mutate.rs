//! Equivalent-variant generation: coin-flip pruning and insertion at zombie
//! sites, syntactic validation, and behavioral equivalence checking.
//!
//! Each prune/insert pass draws its own leaf/parent probabilities fresh from
//! U[0,1] (unless pinned in the config), walks the target subtree
//! breadth-first, and applies at most one edit at the first zombie node
//! whose coin lands. Candidates that fail re-parse or trace equivalence are
//! discarded and regenerated, never repaired.

use crate::ast::*;
use crate::fragment::{sample_fragment, Element, Fragment, FragmentModel, ScopeSignal};
use crate::rng::{mix, SplitMix64};
use crate::sim::{compare_traces, simulate, StepLimit, Trace, Verdict};
use crate::testbench::{testbench_for, StimulusConfig, TestbenchAst};
use crate::zombie::{mark_zombie, ZombieAnnotation};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MutationMode {
    #[default]
    Both,
    PruneOnly,
    InsertOnly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MutationConfig {
    /// Pinned pass probabilities; `None` means redraw uniformly per pass.
    pub p_parent_prune: Option<f64>,
    pub p_leaf_prune: Option<f64>,
    pub p_parent_insert: Option<f64>,
    pub p_leaf_insert: Option<f64>,
    pub variants_per_seed: u32,
    pub max_retries: u32,
    #[serde(default)]
    pub mode: MutationMode,
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig {
            p_parent_prune: None,
            p_leaf_prune: None,
            p_parent_insert: None,
            p_leaf_insert: None,
            variants_per_seed: 5,
            max_retries: 20,
            mode: MutationMode::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationAction {
    PruneLeaf,
    PruneSubtree,
    InsertBefore,
    InsertAfter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub site: NodeId,
    pub action: MutationAction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fragment: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceStatus {
    Verified,
    Failed,
    Unchecked,
}

#[derive(Debug, Clone)]
pub struct Variant {
    pub ast: ModuleAst,
    pub mutation_log: Vec<MutationRecord>,
    pub equivalence: EquivalenceStatus,
}

#[derive(Debug, Error)]
pub enum MutateError {
    #[error("simulation of {which} failed: {cause}")]
    SimulationFailed { which: String, cause: String },
}

/// True with probability `p`.
pub fn flip_coin(p: f64, rng: &mut SplitMix64) -> bool {
    rng.next_bool(p)
}

// ============================================================================
// Tree edits
// ============================================================================

/// Breadth-first statement ids of the subtree rooted at `root`.
fn bfs_order(root: &Statement) -> Vec<NodeId> {
    let mut order = Vec::new();
    let mut queue: VecDeque<&Statement> = VecDeque::new();
    queue.push_back(root);
    while let Some(s) = queue.pop_front() {
        order.push(s.id());
        for c in s.children() {
            queue.push_back(c);
        }
    }
    order
}

fn empty_block(id: NodeId) -> Statement {
    Statement::Block(BlockStmt {
        id,
        span: SourceSpan::default(),
        statements: Vec::new(),
    })
}

/// Remove the statement `target` (with its subtree). List positions are
/// removed outright; body slots are replaced with an empty begin-end block.
pub fn delete_statement(module: &mut ModuleAst, target: NodeId) -> bool {
    let spare_id = module.alloc_id();
    for item in &mut module.items {
        let body = match item {
            ModuleItem::Always(a) => &mut a.body,
            ModuleItem::Initial(i) => &mut i.body,
            ModuleItem::Assign(_) => continue,
        };
        if body.id() == target {
            *body = empty_block(spare_id);
            return true;
        }
        if delete_in(body, target, spare_id) {
            return true;
        }
    }
    false
}

fn delete_in(stmt: &mut Statement, target: NodeId, spare_id: NodeId) -> bool {
    match stmt {
        Statement::Blocking(_) | Statement::NonBlocking(_) => false,
        Statement::Block(b) => {
            if let Some(pos) = b.statements.iter().position(|s| s.id() == target) {
                b.statements.remove(pos);
                return true;
            }
            b.statements
                .iter_mut()
                .any(|s| delete_in(s, target, spare_id))
        }
        Statement::If(s) => {
            if s.then_branch.id() == target {
                *s.then_branch = empty_block(spare_id);
                return true;
            }
            if delete_in(&mut s.then_branch, target, spare_id) {
                return true;
            }
            if let Some(e) = &mut s.else_branch {
                if e.id() == target {
                    **e = empty_block(spare_id);
                    return true;
                }
                return delete_in(e, target, spare_id);
            }
            false
        }
        Statement::Case(s) => {
            for arm in &mut s.arms {
                if arm.body.id() == target {
                    arm.body = empty_block(spare_id);
                    return true;
                }
                if delete_in(&mut arm.body, target, spare_id) {
                    return true;
                }
            }
            if let Some(d) = &mut s.default_arm {
                if d.id() == target {
                    **d = empty_block(spare_id);
                    return true;
                }
                return delete_in(d, target, spare_id);
            }
            false
        }
        Statement::For(s) => {
            if s.body.id() == target {
                *s.body = empty_block(spare_id);
                return true;
            }
            delete_in(&mut s.body, target, spare_id)
        }
    }
}

fn remap_expr_ids(e: &mut Expression, alloc: &mut dyn FnMut() -> NodeId) {
    match e {
        Expression::Literal { id, .. }
        | Expression::Ref { id, .. }
        | Expression::PartSelect { id, .. } => *id = alloc(),
        Expression::BitSelect { id, index, .. } => {
            *id = alloc();
            remap_expr_ids(index, alloc);
        }
        Expression::Concat { id, parts, .. } => {
            *id = alloc();
            for p in parts {
                remap_expr_ids(p, alloc);
            }
        }
        Expression::Unary { id, operand, .. } | Expression::SignCast { id, operand, .. } => {
            *id = alloc();
            remap_expr_ids(operand, alloc);
        }
        Expression::Binary { id, lhs, rhs, .. } => {
            *id = alloc();
            remap_expr_ids(lhs, alloc);
            remap_expr_ids(rhs, alloc);
        }
        Expression::Ternary {
            id,
            cond,
            then_expr,
            else_expr,
            ..
        } => {
            *id = alloc();
            remap_expr_ids(cond, alloc);
            remap_expr_ids(then_expr, alloc);
            remap_expr_ids(else_expr, alloc);
        }
    }
}

fn remap_stmt_ids(stmt: &mut Statement, alloc: &mut dyn FnMut() -> NodeId) {
    match stmt {
        Statement::Blocking(a) | Statement::NonBlocking(a) => {
            a.id = alloc();
            if let LValue::BitSelect { index, .. } = &mut a.lhs {
                remap_expr_ids(index, alloc);
            }
            remap_expr_ids(&mut a.rhs, alloc);
        }
        Statement::If(s) => {
            s.id = alloc();
            remap_expr_ids(&mut s.cond, alloc);
            remap_stmt_ids(&mut s.then_branch, alloc);
            if let Some(e) = &mut s.else_branch {
                remap_stmt_ids(e, alloc);
            }
        }
        Statement::Case(s) => {
            s.id = alloc();
            remap_expr_ids(&mut s.subject, alloc);
            for arm in &mut s.arms {
                remap_expr_ids(&mut arm.label, alloc);
                remap_stmt_ids(&mut arm.body, alloc);
            }
            if let Some(d) = &mut s.default_arm {
                remap_stmt_ids(d, alloc);
            }
        }
        Statement::For(s) => {
            s.id = alloc();
            remap_expr_ids(&mut s.init, alloc);
            remap_expr_ids(&mut s.cond, alloc);
            remap_expr_ids(&mut s.step, alloc);
            remap_stmt_ids(&mut s.body, alloc);
        }
        Statement::Block(b) => {
            b.id = alloc();
            for s in &mut b.statements {
                remap_stmt_ids(s, alloc);
            }
        }
    }
}

/// Splice fragment statements next to `site`. If the site sits in a block
/// list the fragment becomes its sibling; a body-slot site is first promoted
/// to a begin-end block so both share a parent.
fn insert_at(
    module: &mut ModuleAst,
    site: NodeId,
    mut frag_stmts: Vec<Statement>,
    before: bool,
) -> bool {
    // Give fragment nodes module-unique ids.
    {
        let mut alloc = || module.alloc_id();
        // Work around the borrow: allocate through a collected closure.
        let mut ids_needed = 0usize;
        for s in &frag_stmts {
            let mut tmp = Vec::new();
            s.subtree_node_ids(&mut tmp);
            ids_needed += tmp.len();
        }
        let mut pool: Vec<NodeId> = (0..ids_needed).map(|_| alloc()).collect();
        pool.reverse();
        let mut next = move || pool.pop().expect("id pool sized exactly");
        for s in &mut frag_stmts {
            remap_stmt_ids(s, &mut next);
        }
    }
    let wrap_id = module.alloc_id();
    for item in &mut module.items {
        let body = match item {
            ModuleItem::Always(a) => &mut a.body,
            ModuleItem::Initial(i) => &mut i.body,
            ModuleItem::Assign(_) => continue,
        };
        if body.id() == site {
            *body = promote(
                std::mem::replace(body, empty_block(wrap_id)),
                frag_stmts,
                before,
                wrap_id,
            );
            return true;
        }
        if insert_in(body, site, &frag_stmts, before, wrap_id) {
            return true;
        }
    }
    false
}

fn promote(site_stmt: Statement, frag: Vec<Statement>, before: bool, wrap_id: NodeId) -> Statement {
    let mut statements = Vec::with_capacity(frag.len() + 1);
    if before {
        statements.extend(frag);
        statements.push(site_stmt);
    } else {
        statements.push(site_stmt);
        statements.extend(frag);
    }
    Statement::Block(BlockStmt {
        id: wrap_id,
        span: SourceSpan::default(),
        statements,
    })
}

fn insert_in(
    stmt: &mut Statement,
    site: NodeId,
    frag: &[Statement],
    before: bool,
    wrap_id: NodeId,
) -> bool {
    match stmt {
        Statement::Blocking(_) | Statement::NonBlocking(_) => false,
        Statement::Block(b) => {
            if let Some(pos) = b.statements.iter().position(|s| s.id() == site) {
                let at = if before { pos } else { pos + 1 };
                for (k, s) in frag.iter().enumerate() {
                    b.statements.insert(at + k, s.clone());
                }
                return true;
            }
            b.statements
                .iter_mut()
                .any(|s| insert_in(s, site, frag, before, wrap_id))
        }
        Statement::If(s) => {
            if s.then_branch.id() == site {
                let old = std::mem::replace(&mut *s.then_branch, empty_block(wrap_id));
                *s.then_branch = promote(old, frag.to_vec(), before, wrap_id);
                return true;
            }
            if insert_in(&mut s.then_branch, site, frag, before, wrap_id) {
                return true;
            }
            if let Some(e) = &mut s.else_branch {
                if e.id() == site {
                    let old = std::mem::replace(&mut **e, empty_block(wrap_id));
                    **e = promote(old, frag.to_vec(), before, wrap_id);
                    return true;
                }
                return insert_in(e, site, frag, before, wrap_id);
            }
            false
        }
        Statement::Case(s) => {
            for arm in &mut s.arms {
                if arm.body.id() == site {
                    let old = std::mem::replace(&mut arm.body, empty_block(wrap_id));
                    arm.body = promote(old, frag.to_vec(), before, wrap_id);
                    return true;
                }
                if insert_in(&mut arm.body, site, frag, before, wrap_id) {
                    return true;
                }
            }
            if let Some(d) = &mut s.default_arm {
                if d.id() == site {
                    let old = std::mem::replace(&mut **d, empty_block(wrap_id));
                    **d = promote(old, frag.to_vec(), before, wrap_id);
                    return true;
                }
                return insert_in(d, site, frag, before, wrap_id);
            }
            false
        }
        Statement::For(s) => {
            if s.body.id() == site {
                let old = std::mem::replace(&mut *s.body, empty_block(wrap_id));
                *s.body = promote(old, frag.to_vec(), before, wrap_id);
                return true;
            }
            insert_in(&mut s.body, site, frag, before, wrap_id)
        }
    }
}

// ============================================================================
// Visits
// ============================================================================

fn draw_p(pinned: Option<f64>, rng: &mut SplitMix64) -> f64 {
    match pinned {
        Some(p) => p,
        None => rng.next_f64(),
    }
}

fn prune_visit_mut(
    module: &mut ModuleAst,
    root: NodeId,
    annotation: &ZombieAnnotation,
    cfg: &MutationConfig,
    rng: &mut SplitMix64,
) -> Option<MutationRecord> {
    let order = {
        let s = module.find_statement(root)?;
        bfs_order(s)
    };
    // Pass probabilities are redrawn before every pruning operation.
    let p_parent = draw_p(cfg.p_parent_prune, rng);
    let p_leaf = draw_p(cfg.p_leaf_prune, rng);
    for id in order {
        if !annotation.is_zombie(id) || annotation.is_protected(id) {
            continue;
        }
        let class = match module.classify_node(id) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let (p, action) = match class {
            NodeClass::Leaf => (p_leaf, MutationAction::PruneLeaf),
            NodeClass::Parent => (p_parent, MutationAction::PruneSubtree),
        };
        if flip_coin(p, rng) && delete_statement(module, id) {
            return Some(MutationRecord {
                site: id,
                action,
                fragment: None,
            });
        }
    }
    None
}

fn module_scope(module: &ModuleAst) -> Vec<ScopeSignal> {
    let mut scope: Vec<ScopeSignal> = module
        .ports
        .iter()
        .map(|p| ScopeSignal {
            name: p.name.clone(),
            width: p.width,
        })
        .collect();
    scope.extend(module.declarations.iter().map(|d| ScopeSignal {
        name: d.name.clone(),
        width: d.width,
    }));
    scope
}

fn insert_visit_mut(
    module: &mut ModuleAst,
    root: NodeId,
    annotation: &ZombieAnnotation,
    model: &FragmentModel,
    cfg: &MutationConfig,
    rng: &mut SplitMix64,
) -> Option<(MutationRecord, Fragment)> {
    let order = {
        let s = module.find_statement(root)?;
        bfs_order(s)
    };
    let p_parent = draw_p(cfg.p_parent_insert, rng);
    let p_leaf = draw_p(cfg.p_leaf_insert, rng);
    for id in order {
        if !annotation.is_zombie(id) {
            continue;
        }
        let class = match module.classify_node(id) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let p = match class {
            NodeClass::Leaf => p_leaf,
            NodeClass::Parent => p_parent,
        };
        if !flip_coin(p, rng) {
            continue;
        }
        let scope = module_scope(module);
        let frag = match sample_fragment(model, &scope, rng) {
            Ok(f) => f,
            Err(_) => continue, // site skipped
        };
        // Equal probability for the insertion position.
        let before = flip_coin(0.5, rng);
        let stmts = frag.statements.clone();
        if insert_at(module, id, stmts, before) {
            module.declarations.extend(frag.temp_decls.clone());
            let record = MutationRecord {
                site: id,
                action: if before {
                    MutationAction::InsertBefore
                } else {
                    MutationAction::InsertAfter
                },
                fragment: Some(frag.summary()),
            };
            return Some((record, frag));
        }
    }
    None
}

/// Prune pass rooted at `stmt`: at most one zombie deletion; non-pruning
/// traversals return the tree unchanged.
pub fn prune_visit(
    ast: &ModuleAst,
    stmt: NodeId,
    annotation: &ZombieAnnotation,
    cfg: &MutationConfig,
    rng: &mut SplitMix64,
) -> (ModuleAst, Option<MutationRecord>) {
    let mut module = ast.clone();
    let record = prune_visit_mut(&mut module, stmt, annotation, cfg, rng);
    (module, record)
}

/// Insert pass rooted at `stmt`: at most one fragment insertion.
pub fn insert_visit(
    ast: &ModuleAst,
    stmt: NodeId,
    annotation: &ZombieAnnotation,
    model: &FragmentModel,
    cfg: &MutationConfig,
    rng: &mut SplitMix64,
) -> (ModuleAst, Option<MutationRecord>) {
    let mut module = ast.clone();
    let record = insert_visit_mut(&mut module, stmt, annotation, model, cfg, rng).map(|(r, _)| r);
    (module, record)
}

// ============================================================================
// Variant generation
// ============================================================================

#[derive(Debug, Clone, Default)]
pub struct GenStats {
    /// Candidates that actually carried at least one edit.
    pub attempts: u32,
    pub survived: bool,
    pub parse_failures: u32,
    pub equivalence_failures: u32,
    pub no_edit_rounds: u32,
    /// Fragments of discarded candidates (feedback failures).
    pub failed_fragments: Vec<Vec<Element>>,
    /// Fragments of the returned variant; the harness decides their final
    /// feedback polarity from coverage and tool outcomes.
    pub final_fragments: Vec<Vec<Element>>,
}

pub struct GenContext<'a> {
    pub model: Option<&'a FragmentModel>,
    pub mcfg: &'a MutationConfig,
    pub stim: &'a StimulusConfig,
    pub limits: StepLimit,
}

fn second_config(stim: &StimulusConfig) -> StimulusConfig {
    StimulusConfig {
        rng_seed: mix(stim.rng_seed),
        ..*stim
    }
}

fn degenerate(seed: &ModuleAst) -> Variant {
    Variant {
        ast: seed.clone(),
        mutation_log: Vec::new(),
        equivalence: EquivalenceStatus::Verified,
    }
}

fn logic_roots(module: &ModuleAst) -> Vec<NodeId> {
    module
        .items
        .iter()
        .filter_map(|item| match item {
            ModuleItem::Always(a) => Some(a.body.id()),
            ModuleItem::Initial(i) => Some(i.body.id()),
            ModuleItem::Assign(_) => None,
        })
        .collect()
}

/// Generate one equivalent variant of `seed`. Always returns a variant with
/// `equivalence = Verified`; when the zombie set is empty or retries
/// exhaust, the degenerate variant (the seed itself) is returned.
pub fn gen_variant(
    seed: &ModuleAst,
    cov: &crate::sim::CoverageReport,
    ctx: &GenContext,
    rng: &mut SplitMix64,
) -> (Variant, GenStats) {
    let mut stats = GenStats::default();
    let annotation = match mark_zombie(seed, cov) {
        Ok(a) => a,
        Err(_) => return (degenerate(seed), stats),
    };
    if annotation.zombie_nodes.is_empty() {
        return (degenerate(seed), stats);
    }
    let Ok(tb1) = testbench_for(seed, ctx.stim) else {
        return (degenerate(seed), stats);
    };
    let cfg2 = second_config(ctx.stim);
    let Ok(tb2) = testbench_for(seed, &cfg2) else {
        return (degenerate(seed), stats);
    };
    let Ok((seed_t1, _)) = simulate(seed, &tb1, ctx.limits) else {
        return (degenerate(seed), stats);
    };
    let Ok((seed_t2, _)) = simulate(seed, &tb2, ctx.limits) else {
        return (degenerate(seed), stats);
    };

    let roots = logic_roots(seed);

    for _ in 0..ctx.mcfg.max_retries {
        let mut candidate = seed.clone();
        let mut log = Vec::new();
        let mut fragments: Vec<Vec<Element>> = Vec::new();
        for &root in &roots {
            let do_prune = match ctx.mcfg.mode {
                MutationMode::PruneOnly => true,
                MutationMode::InsertOnly => false,
                MutationMode::Both => flip_coin(0.5, rng),
            };
            if do_prune || ctx.model.is_none() {
                if let Some(rec) = prune_visit_mut(&mut candidate, root, &annotation, ctx.mcfg, rng)
                {
                    log.push(rec);
                }
            } else if let Some(model) = ctx.model {
                if let Some((rec, frag)) =
                    insert_visit_mut(&mut candidate, root, &annotation, model, ctx.mcfg, rng)
                {
                    log.push(rec);
                    fragments.push(frag.elements);
                }
            }
        }
        if log.is_empty() {
            stats.no_edit_rounds += 1;
            continue;
        }
        stats.attempts += 1;

        // Validation: the candidate must re-parse from its own emission.
        let text = crate::emit::emit(&candidate);
        if crate::parser::parse(&text).is_err() {
            stats.parse_failures += 1;
            for f in fragments.drain(..) {
                stats.failed_fragments.push(f);
            }
            continue;
        }

        // Equivalence under the campaign testbench and a fresh-seed one.
        let equal = simulate(&candidate, &tb1, ctx.limits)
            .ok()
            .and_then(|(t, _)| compare_traces(&seed_t1, &t).ok())
            .map(|v| v == Verdict::Equivalent)
            .unwrap_or(false)
            && simulate(&candidate, &tb2, ctx.limits)
                .ok()
                .and_then(|(t, _)| compare_traces(&seed_t2, &t).ok())
                .map(|v| v == Verdict::Equivalent)
                .unwrap_or(false);
        if !equal {
            stats.equivalence_failures += 1;
            for f in fragments.drain(..) {
                stats.failed_fragments.push(f);
            }
            continue;
        }

        stats.survived = true;
        for f in fragments.drain(..) {
            stats.final_fragments.push(f);
        }
        return (
            Variant {
                ast: candidate,
                mutation_log: log,
                equivalence: EquivalenceStatus::Verified,
            },
            stats,
        );
    }
    (degenerate(seed), stats)
}

/// Behavioral equivalence under `tb` plus one independently seeded second
/// testbench derived from it.
pub fn check_equivalence(
    seed: &ModuleAst,
    variant: &ModuleAst,
    tb: &TestbenchAst,
) -> Result<bool, MutateError> {
    let run =
        |design: &ModuleAst, bench: &TestbenchAst, which: &str| -> Result<Trace, MutateError> {
            simulate(design, bench, StepLimit::default())
                .map(|(t, _)| t)
                .map_err(|e| MutateError::SimulationFailed {
                    which: which.to_string(),
                    cause: e.to_string(),
                })
        };
    let cfg2 = second_config(&tb.config);
    let tb2 = testbench_for(seed, &cfg2).map_err(|e| MutateError::SimulationFailed {
        which: "seed".into(),
        cause: e.to_string(),
    })?;

    let s1 = run(seed, tb, "seed")?;
    let v1 = run(variant, tb, "variant")?;
    if compare_traces(&s1, &v1)
        .map(|v| v != Verdict::Equivalent)
        .unwrap_or(true)
    {
        return Ok(false);
    }
    let s2 = run(seed, &tb2, "seed")?;
    let v2 = run(variant, &tb2, "variant")?;
    Ok(compare_traces(&s2, &v2)
        .map(|v| v == Verdict::Equivalent)
        .unwrap_or(false))
}
