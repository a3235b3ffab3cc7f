//! Corpus mining and complexity-weighted fragment sampling.
//!
//! Designs are linearized into pre-order streams of syntax elements
//! (operators and control structures). The model keeps per-element
//! frequencies f(z), complexity weights C(z), and first-order transition
//! counts. Element probabilities are complexity-weighted:
//!
//!   P(z) = C(z)·f(z) / Σ C(w)·f(w)
//!
//! and successor probabilities are count-based:
//!
//!   P(next | prev) = count(prev, next) / Σ count(prev, ·)
//!
//! which agrees with the Bayes form P(prev|next)·P(next)/P(prev) when the
//! marginals are taken from the same transition counts. Sampling draws a
//! start element from P(z), then extends with successors whose conditional
//! probability clears the acceptance threshold T, stopping at the length
//! cap. A feedback step scales weights of elements seen in successful or
//! failed mutations.

use crate::ast::*;
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use thiserror::Error;

// ============================================================================
// Elements
// ============================================================================

/// A syntax element: an operator or a control structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Unary(UnaryOp),
    Binary(BinaryOp),
    Ternary,
    IfElse,
    Case,
    For,
    While,
}

impl Element {
    /// Canonical name used in the persisted model. Unary plus/minus are
    /// prefixed to keep them distinct from their binary forms.
    pub fn name(&self) -> String {
        match self {
            Element::Unary(UnaryOp::Plus) => "u+".into(),
            Element::Unary(UnaryOp::Minus) => "u-".into(),
            Element::Unary(op) => op.token().into(),
            Element::Binary(op) => op.token().into(),
            Element::Ternary => "?:".into(),
            Element::IfElse => "if-else".into(),
            Element::Case => "case".into(),
            Element::For => "for".into(),
            Element::While => "while".into(),
        }
    }

    pub fn from_name(name: &str) -> Option<Element> {
        match name {
            "u+" => Some(Element::Unary(UnaryOp::Plus)),
            "u-" => Some(Element::Unary(UnaryOp::Minus)),
            "!" => Some(Element::Unary(UnaryOp::LogNot)),
            "~" => Some(Element::Unary(UnaryOp::BitNot)),
            "?:" => Some(Element::Ternary),
            "if-else" => Some(Element::IfElse),
            "case" => Some(Element::Case),
            "for" => Some(Element::For),
            "while" => Some(Element::While),
            other => {
                for op in [
                    BinaryOp::Add,
                    BinaryOp::Sub,
                    BinaryOp::Mul,
                    BinaryOp::Div,
                    BinaryOp::Mod,
                    BinaryOp::LogAnd,
                    BinaryOp::LogOr,
                    BinaryOp::BitAnd,
                    BinaryOp::BitXor,
                    BinaryOp::BitOr,
                    BinaryOp::Eq,
                    BinaryOp::Ne,
                    BinaryOp::CaseEq,
                    BinaryOp::CaseNe,
                    BinaryOp::Lt,
                    BinaryOp::Le,
                    BinaryOp::Gt,
                    BinaryOp::Ge,
                    BinaryOp::Shl,
                    BinaryOp::Shr,
                ] {
                    if op.token() == other {
                        return Some(Element::Binary(op));
                    }
                }
                None
            }
        }
    }

    /// Complexity weight of the element's class.
    pub fn default_weight(&self) -> f64 {
        match self {
            Element::Unary(_) => 1.0,
            Element::Binary(op) => match op {
                BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => {
                    2.0
                }
                BinaryOp::LogAnd | BinaryOp::LogOr => 2.0,
                BinaryOp::BitAnd | BinaryOp::BitXor | BinaryOp::BitOr => 2.0,
                BinaryOp::Eq | BinaryOp::Ne => 2.0,
                BinaryOp::CaseEq | BinaryOp::CaseNe => 3.0,
                BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 3.0,
                BinaryOp::Shl | BinaryOp::Shr => 3.0,
            },
            Element::Ternary => 4.0,
            Element::IfElse | Element::Case => 4.0,
            Element::For | Element::While => 5.0,
        }
    }
}

// ============================================================================
// Linearization
// ============================================================================

/// Pre-order element stream of one design.
pub fn linearize(module: &ModuleAst) -> Vec<Element> {
    let mut out = Vec::new();
    for item in &module.items {
        match item {
            ModuleItem::Assign(a) => {
                lin_expr(&a.rhs, &mut out);
                if let LValue::BitSelect { index, .. } = &a.lhs {
                    lin_expr(index, &mut out);
                }
            }
            ModuleItem::Always(al) => lin_stmt(&al.body, &mut out),
            ModuleItem::Initial(i) => lin_stmt(&i.body, &mut out),
        }
    }
    out
}

fn lin_stmt(stmt: &Statement, out: &mut Vec<Element>) {
    match stmt {
        Statement::Blocking(a) | Statement::NonBlocking(a) => {
            if let LValue::BitSelect { index, .. } = &a.lhs {
                lin_expr(index, out);
            }
            lin_expr(&a.rhs, out);
        }
        Statement::If(s) => {
            out.push(Element::IfElse);
            lin_expr(&s.cond, out);
            lin_stmt(&s.then_branch, out);
            if let Some(e) = &s.else_branch {
                lin_stmt(e, out);
            }
        }
        Statement::Case(s) => {
            out.push(Element::Case);
            lin_expr(&s.subject, out);
            for arm in &s.arms {
                lin_expr(&arm.label, out);
                lin_stmt(&arm.body, out);
            }
            if let Some(d) = &s.default_arm {
                lin_stmt(d, out);
            }
        }
        Statement::For(s) => {
            out.push(Element::For);
            lin_expr(&s.init, out);
            lin_expr(&s.cond, out);
            lin_expr(&s.step, out);
            lin_stmt(&s.body, out);
        }
        Statement::Block(b) => {
            for s in &b.statements {
                lin_stmt(s, out);
            }
        }
    }
}

fn lin_expr(e: &Expression, out: &mut Vec<Element>) {
    match e {
        Expression::Literal { .. } | Expression::Ref { .. } | Expression::PartSelect { .. } => {}
        Expression::BitSelect { index, .. } => lin_expr(index, out),
        Expression::Concat { parts, .. } => {
            for p in parts {
                lin_expr(p, out);
            }
        }
        Expression::Unary { op, operand, .. } => {
            out.push(Element::Unary(*op));
            lin_expr(operand, out);
        }
        Expression::Binary { op, lhs, rhs, .. } => {
            out.push(Element::Binary(*op));
            lin_expr(lhs, out);
            lin_expr(rhs, out);
        }
        Expression::Ternary {
            cond,
            then_expr,
            else_expr,
            ..
        } => {
            out.push(Element::Ternary);
            lin_expr(cond, out);
            lin_expr(then_expr, out);
            lin_expr(else_expr, out);
        }
        Expression::SignCast { operand, .. } => lin_expr(operand, out),
    }
}

// ============================================================================
// Corpus statistics and the model
// ============================================================================

#[derive(Debug, Clone, Default)]
pub struct CorpusStats {
    pub files_ingested: usize,
    pub files_rejected: usize,
    pub sequences: Vec<Vec<Element>>,
}

#[derive(Debug, Error)]
pub enum FragmentError {
    #[error("corpus contains no parseable files")]
    EmptyCorpus,
    #[error("model has no observed elements")]
    EmptyModel,
    #[error("element `{0}` was never observed as a predecessor")]
    UnseenContext(String),
    #[error("cannot realize any fragment: {0}")]
    NoViableFragment(String),
    #[error("model file error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file malformed: {0}")]
    Malformed(String),
}

/// Parse every readable file; rejected files contribute nothing.
pub fn ingest_corpus(paths: &[PathBuf]) -> Result<CorpusStats, FragmentError> {
    let mut stats = CorpusStats::default();
    for path in paths {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(_) => {
                stats.files_rejected += 1;
                continue;
            }
        };
        match crate::parser::parse(&text) {
            Ok(module) => {
                stats.sequences.push(linearize(&module));
                stats.files_ingested += 1;
            }
            Err(_) => {
                stats.files_rejected += 1;
            }
        }
    }
    if stats.files_ingested == 0 {
        return Err(FragmentError::EmptyCorpus);
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragmentModel {
    pub freq: BTreeMap<Element, u64>,
    pub weight: BTreeMap<Element, f64>,
    pub transition_counts: BTreeMap<(Element, Element), u64>,
    pub threshold_t: f64,
    pub max_len_l: usize,
    pub end_tokens: BTreeSet<String>,
}

impl Default for FragmentModel {
    fn default() -> Self {
        FragmentModel {
            freq: BTreeMap::new(),
            weight: BTreeMap::new(),
            transition_counts: BTreeMap::new(),
            threshold_t: 0.0,
            max_len_l: 8,
            end_tokens: ["end", "endmodule"].iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl FragmentModel {
    /// Accumulate corpus sequences into frequencies and transitions, then fix
    /// the acceptance threshold at the median observed conditional
    /// probability.
    pub fn from_corpus(stats: &CorpusStats) -> FragmentModel {
        let mut model = FragmentModel::default();
        for seq in &stats.sequences {
            for &el in seq {
                *model.freq.entry(el).or_insert(0) += 1;
                model
                    .weight
                    .entry(el)
                    .or_insert_with(|| el.default_weight());
            }
            for pair in seq.windows(2) {
                *model
                    .transition_counts
                    .entry((pair[0], pair[1]))
                    .or_insert(0) += 1;
            }
        }
        model.threshold_t = model.median_conditional_probability();
        model
    }

    fn median_conditional_probability(&self) -> f64 {
        let mut probs: Vec<f64> = Vec::new();
        for &(prev, next) in self.transition_counts.keys() {
            if let Ok(p) = transition_probability(self, next, prev) {
                probs.push(p);
            }
        }
        if probs.is_empty() {
            return 0.0;
        }
        probs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = probs.len();
        if n % 2 == 1 {
            probs[n / 2]
        } else {
            (probs[n / 2 - 1] + probs[n / 2]) / 2.0
        }
    }

    pub fn weight_of(&self, el: Element) -> f64 {
        self.weight
            .get(&el)
            .copied()
            .unwrap_or_else(|| el.default_weight())
    }

    pub fn is_empty(&self) -> bool {
        self.freq.values().all(|f| *f == 0)
    }
}

// ============================================================================
// Probabilities
// ============================================================================

/// Complexity-weighted occurrence distribution over all observed elements.
pub fn element_probability(model: &FragmentModel) -> Result<BTreeMap<Element, f64>, FragmentError> {
    let total: f64 = model
        .freq
        .iter()
        .map(|(el, f)| model.weight_of(*el) * *f as f64)
        .sum();
    if total <= 0.0 {
        return Err(FragmentError::EmptyModel);
    }
    Ok(model
        .freq
        .iter()
        .map(|(el, f)| (*el, model.weight_of(*el) * *f as f64 / total))
        .collect())
}

/// P(next | prev) from transition counts.
pub fn transition_probability(
    model: &FragmentModel,
    next: Element,
    prev: Element,
) -> Result<f64, FragmentError> {
    let denom: u64 = model
        .transition_counts
        .iter()
        .filter(|((p, _), _)| *p == prev)
        .map(|(_, c)| *c)
        .sum();
    if denom == 0 {
        return Err(FragmentError::UnseenContext(prev.name()));
    }
    let count = model
        .transition_counts
        .get(&(prev, next))
        .copied()
        .unwrap_or(0);
    Ok(count as f64 / denom as f64)
}

/// Draw a start element from the weighted occurrence distribution.
pub fn sample_start_element(
    model: &FragmentModel,
    rng: &mut SplitMix64,
) -> Result<Element, FragmentError> {
    let dist = element_probability(model)?;
    let elements: Vec<Element> = dist.keys().copied().collect();
    let weights: Vec<f64> = dist.values().copied().collect();
    let idx = rng
        .pick_weighted(&weights)
        .ok_or(FragmentError::EmptyModel)?;
    Ok(elements[idx])
}

/// Sample an element sequence: start from P(z), extend with successors whose
/// conditional probability is at least `threshold_t`, stop at `max_len_l`,
/// an end token, or when no successor qualifies.
pub fn sample_sequence(
    model: &FragmentModel,
    rng: &mut SplitMix64,
) -> Result<Vec<Element>, FragmentError> {
    let mut seq = vec![sample_start_element(model, rng)?];
    while seq.len() < model.max_len_l {
        let prev = *seq.last().unwrap();
        let candidates: Vec<(Element, f64)> = model
            .transition_counts
            .iter()
            .filter(|((p, _), c)| *p == prev && **c > 0)
            .map(|((_, n), _)| (*n, transition_probability(model, *n, prev).unwrap_or(0.0)))
            .filter(|(_, p)| *p >= model.threshold_t)
            .collect();
        if candidates.is_empty() {
            break;
        }
        let weights: Vec<f64> = candidates.iter().map(|(_, p)| *p).collect();
        let Some(idx) = rng.pick_weighted(&weights) else {
            break;
        };
        let next = candidates[idx].0;
        if model.end_tokens.contains(&next.name()) {
            break;
        }
        seq.push(next);
    }
    Ok(seq)
}

// ============================================================================
// Fragment realization
// ============================================================================

/// An identifier readable by sampled fragments.
#[derive(Debug, Clone, PartialEq)]
pub struct ScopeSignal {
    pub name: String,
    pub width: u32,
}

/// A realized fragment: statements plus the fresh temporaries they write.
/// Node ids are fragment-local (0-based) and must be remapped into the
/// destination module on insertion.
#[derive(Debug, Clone)]
pub struct Fragment {
    pub statements: Vec<Statement>,
    pub temp_decls: Vec<NetDecl>,
    pub elements: Vec<Element>,
}

impl Fragment {
    pub fn summary(&self) -> String {
        self.elements
            .iter()
            .map(|e| e.name())
            .collect::<Vec<_>>()
            .join(",")
    }
}

struct Realizer<'a> {
    scope: &'a [ScopeSignal],
    rng: &'a mut SplitMix64,
    next_id: u32,
    temps: Vec<NetDecl>,
    taken: BTreeSet<String>,
}

impl<'a> Realizer<'a> {
    fn id(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    fn fresh_temp(&mut self, width: u32) -> String {
        let mut n = self.temps.len();
        loop {
            let name = format!("frag_t{n}");
            if !self.taken.contains(&name) {
                self.taken.insert(name.clone());
                self.temps.push(NetDecl {
                    kind: NetKind::Reg,
                    name: name.clone(),
                    width,
                    signed: false,
                });
                return name;
            }
            n += 1;
        }
    }

    fn scope_ref(&mut self) -> Expression {
        let pick = self.rng.next_below(self.scope.len() as u64) as usize;
        let sig = &self.scope[pick];
        let id = self.id();
        Expression::Ref {
            id,
            span: SourceSpan::default(),
            name: sig.name.clone(),
        }
    }

    fn literal(&mut self) -> Expression {
        let width = [1u32, 4, 8][self.rng.next_below(3) as usize];
        let value = self.rng.next_u64() & crate::sim::mask(width);
        let id = self.id();
        Expression::Literal {
            id,
            span: SourceSpan::default(),
            width,
            value,
        }
    }

    fn terminal(&mut self) -> Expression {
        if self.rng.next_bool(0.7) {
            self.scope_ref()
        } else {
            self.literal()
        }
    }

    /// Build an expression, consuming operator elements from the queue
    /// depth-first up to a small depth.
    fn expr(&mut self, queue: &mut Vec<Element>, depth: u32) -> Expression {
        if depth >= 2 {
            return self.terminal();
        }
        let front_is_op = matches!(
            queue.first(),
            Some(Element::Unary(_)) | Some(Element::Binary(_)) | Some(Element::Ternary)
        );
        if !front_is_op {
            return self.terminal();
        }
        match queue.remove(0) {
            Element::Unary(op) => {
                let operand = self.expr(queue, depth + 1);
                let id = self.id();
                Expression::Unary {
                    id,
                    span: SourceSpan::default(),
                    op,
                    operand: Box::new(operand),
                }
            }
            Element::Binary(op) => {
                let lhs = self.expr(queue, depth + 1);
                let rhs = self.expr(queue, depth + 1);
                let id = self.id();
                Expression::Binary {
                    id,
                    span: SourceSpan::default(),
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                }
            }
            Element::Ternary => {
                let cond = self.expr(queue, depth + 1);
                let t = self.expr(queue, depth + 1);
                let f = self.expr(queue, depth + 1);
                let id = self.id();
                Expression::Ternary {
                    id,
                    span: SourceSpan::default(),
                    cond: Box::new(cond),
                    then_expr: Box::new(t),
                    else_expr: Box::new(f),
                }
            }
            _ => unreachable!("filtered above"),
        }
    }

    fn temp_assign(&mut self, rhs: Expression) -> Statement {
        let name = self.fresh_temp(8);
        let id = self.id();
        Statement::Blocking(Assign {
            id,
            span: SourceSpan::default(),
            lhs: LValue::Ref { name },
            rhs,
        })
    }

    fn block(&mut self, statements: Vec<Statement>) -> Statement {
        let id = self.id();
        Statement::Block(BlockStmt {
            id,
            span: SourceSpan::default(),
            statements,
        })
    }

    /// One nested statement for a control-structure body: take the next
    /// element from the queue if any, else a plain temp assignment.
    fn body_stmt(&mut self, queue: &mut Vec<Element>) -> Statement {
        if let Some(el) = queue.first().copied() {
            queue.remove(0);
            self.stmt(el, queue)
        } else {
            let rhs = self.terminal();
            self.temp_assign(rhs)
        }
    }

    fn stmt(&mut self, el: Element, queue: &mut Vec<Element>) -> Statement {
        match el {
            Element::Unary(op) => {
                queue.insert(0, Element::Unary(op));
                let rhs = self.expr(queue, 0);
                self.temp_assign(rhs)
            }
            Element::Binary(op) => {
                queue.insert(0, Element::Binary(op));
                let rhs = self.expr(queue, 0);
                self.temp_assign(rhs)
            }
            Element::Ternary => {
                queue.insert(0, Element::Ternary);
                let rhs = self.expr(queue, 0);
                self.temp_assign(rhs)
            }
            Element::IfElse => {
                let cond = self.expr(queue, 1);
                let then_stmt = self.body_stmt(queue);
                let then_branch = self.block(vec![then_stmt]);
                let else_stmt = self.body_stmt(queue);
                let else_branch = self.block(vec![else_stmt]);
                let id = self.id();
                Statement::If(IfStmt {
                    id,
                    span: SourceSpan::default(),
                    cond,
                    then_branch: Box::new(then_branch),
                    else_branch: Some(Box::new(else_branch)),
                })
            }
            Element::Case => {
                let subject = self.expr(queue, 1);
                let mut arms = Vec::new();
                for value in [0u64, 1] {
                    let label_id = self.id();
                    let body_stmt = self.body_stmt(queue);
                    let body = self.block(vec![body_stmt]);
                    arms.push(CaseArm {
                        label: Expression::Literal {
                            id: label_id,
                            span: SourceSpan::default(),
                            width: 8,
                            value,
                        },
                        body,
                    });
                }
                let default_stmt = self.body_stmt(queue);
                let default_arm = self.block(vec![default_stmt]);
                let id = self.id();
                Statement::Case(CaseStmt {
                    id,
                    span: SourceSpan::default(),
                    subject,
                    arms,
                    default_arm: Some(Box::new(default_arm)),
                })
            }
            // `while` is outside the synthesizable subset; realize both loop
            // elements as statically bounded for-loops.
            Element::For | Element::While => {
                let var = self.fresh_temp(8);
                let bound = 2 + self.rng.next_below(4);
                let init_id = self.id();
                let cond_id = self.id();
                let cond_var_id = self.id();
                let cond_lit_id = self.id();
                let step_id = self.id();
                let body_stmt = self.body_stmt(queue);
                let body = self.block(vec![body_stmt]);
                let id = self.id();
                Statement::For(ForStmt {
                    id,
                    span: SourceSpan::default(),
                    var: var.clone(),
                    init: Expression::Literal {
                        id: init_id,
                        span: SourceSpan::default(),
                        width: 8,
                        value: 0,
                    },
                    cond: Expression::Binary {
                        id: cond_id,
                        span: SourceSpan::default(),
                        op: BinaryOp::Lt,
                        lhs: Box::new(Expression::Ref {
                            id: cond_var_id,
                            span: SourceSpan::default(),
                            name: var,
                        }),
                        rhs: Box::new(Expression::Literal {
                            id: cond_lit_id,
                            span: SourceSpan::default(),
                            width: 8,
                            value: bound,
                        }),
                    },
                    step_op: BinaryOp::Add,
                    step: Expression::Literal {
                        id: step_id,
                        span: SourceSpan::default(),
                        width: 8,
                        value: 1,
                    },
                    body: Box::new(body),
                })
            }
        }
    }
}

/// Sample and realize one fragment. Reads come from `scope` (or literals);
/// writes go only to fresh `reg` temporaries declared in the result.
pub fn sample_fragment(
    model: &FragmentModel,
    scope: &[ScopeSignal],
    rng: &mut SplitMix64,
) -> Result<Fragment, FragmentError> {
    if scope.is_empty() {
        return Err(FragmentError::NoViableFragment("empty scope".into()));
    }
    let elements = sample_sequence(model, rng)?;
    let mut realizer = Realizer {
        scope,
        rng,
        next_id: 0,
        temps: Vec::new(),
        taken: scope.iter().map(|s| s.name.clone()).collect(),
    };
    let mut queue = elements.clone();
    let mut statements = Vec::new();
    while !queue.is_empty() {
        let el = queue.remove(0);
        let stmt = realizer.stmt(el, &mut queue);
        statements.push(stmt);
    }
    if statements.is_empty() {
        return Err(FragmentError::NoViableFragment("empty sequence".into()));
    }
    Ok(Fragment {
        statements,
        temp_decls: realizer.temps,
        elements,
    })
}

// ============================================================================
// Feedback
// ============================================================================

pub const FEEDBACK_ETA: f64 = 0.1;
pub const WEIGHT_FLOOR: f64 = 0.1;

/// Produce an updated model snapshot: weights of elements in successful
/// outcomes scaled up by (1+eta), failed ones scaled down with a floor, and
/// transition counts of successful fragments incremented.
pub fn feedback_update(model: &FragmentModel, outcomes: &[(Vec<Element>, bool)]) -> FragmentModel {
    let mut next = model.clone();
    for (elements, success) in outcomes {
        let distinct: BTreeSet<Element> = elements.iter().copied().collect();
        for el in distinct {
            let w = next.weight_of(el);
            let updated = if *success {
                w * (1.0 + FEEDBACK_ETA)
            } else {
                (w * (1.0 - FEEDBACK_ETA)).max(WEIGHT_FLOOR)
            };
            next.weight.insert(el, updated);
        }
        if *success {
            for pair in elements.windows(2) {
                *next
                    .transition_counts
                    .entry((pair[0], pair[1]))
                    .or_insert(0) += 1;
            }
        }
    }
    next
}

// ============================================================================
// Persistence
// ============================================================================

#[derive(Serialize, Deserialize)]
struct ElementEntry {
    name: String,
    freq: u64,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct TransitionEntry {
    prev: String,
    next: String,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    elements: Vec<ElementEntry>,
    transitions: Vec<TransitionEntry>,
    #[serde(rename = "threshold_T")]
    threshold_t: f64,
    #[serde(rename = "max_len_L")]
    max_len_l: usize,
    #[serde(default)]
    end_tokens: Vec<String>,
}

pub fn model_to_json(model: &FragmentModel) -> String {
    let file = ModelFile {
        version: 1,
        elements: model
            .freq
            .iter()
            .map(|(el, f)| ElementEntry {
                name: el.name(),
                freq: *f,
                weight: model.weight_of(*el),
            })
            .collect(),
        transitions: model
            .transition_counts
            .iter()
            .map(|((p, n), c)| TransitionEntry {
                prev: p.name(),
                next: n.name(),
                count: *c,
            })
            .collect(),
        threshold_t: model.threshold_t,
        max_len_l: model.max_len_l,
        end_tokens: model.end_tokens.iter().cloned().collect(),
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<FragmentModel, FragmentError> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| FragmentError::Malformed(e.to_string()))?;
    if file.version != 1 {
        return Err(FragmentError::Malformed(format!(
            "unsupported model version {}",
            file.version
        )));
    }
    let mut model = FragmentModel {
        threshold_t: file.threshold_t,
        max_len_l: file.max_len_l,
        ..Default::default()
    };
    if !file.end_tokens.is_empty() {
        model.end_tokens = file.end_tokens.into_iter().collect();
    }
    for e in file.elements {
        let el = Element::from_name(&e.name)
            .ok_or_else(|| FragmentError::Malformed(format!("unknown element `{}`", e.name)))?;
        model.freq.insert(el, e.freq);
        model.weight.insert(el, e.weight);
    }
    for t in file.transitions {
        let p = Element::from_name(&t.prev)
            .ok_or_else(|| FragmentError::Malformed(format!("unknown element `{}`", t.prev)))?;
        let n = Element::from_name(&t.next)
            .ok_or_else(|| FragmentError::Malformed(format!("unknown element `{}`", t.next)))?;
        model.transition_counts.insert((p, n), t.count);
    }
    Ok(model)
}
