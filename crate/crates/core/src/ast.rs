//! AST for the supported synthesizable Verilog subset.
//!
//! Every statement and expression node carries a [`NodeId`] that is unique
//! within its module and a [`SourceSpan`] locating it in the source text.
//! Structural equality ([`ModuleAst::structurally_equal`]) ignores both, so
//! mutated trees and re-parsed trees compare by shape and content alone.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Stable identity of a statement or expression node within one module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Line/column range covered by a node, 1-based, end-inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourceSpan {
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Input,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NetKind {
    Wire,
    Reg,
}

/// A module port. `is_clock` is a heuristic flag set during port extraction;
/// `is_reg` records whether an output was declared `output reg`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortSpec {
    pub name: String,
    pub direction: Direction,
    pub width: u32,
    pub signed: bool,
    pub is_clock: bool,
    pub is_reg: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDecl {
    pub kind: NetKind,
    pub name: String,
    pub width: u32,
    pub signed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnaryOp {
    Plus,
    Minus,
    LogNot,
    BitNot,
}

impl UnaryOp {
    pub fn token(self) -> &'static str {
        match self {
            UnaryOp::Plus => "+",
            UnaryOp::Minus => "-",
            UnaryOp::LogNot => "!",
            UnaryOp::BitNot => "~",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    LogAnd,
    LogOr,
    BitAnd,
    BitXor,
    BitOr,
    Eq,
    Ne,
    CaseEq,
    CaseNe,
    Lt,
    Le,
    Gt,
    Ge,
    Shl,
    Shr,
}

impl BinaryOp {
    pub fn token(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::LogAnd => "&&",
            BinaryOp::LogOr => "||",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitXor => "^",
            BinaryOp::BitOr => "|",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::CaseEq => "===",
            BinaryOp::CaseNe => "!==",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
        }
    }

    /// True for operators whose result is a 1-bit flag.
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::LogAnd
                | BinaryOp::LogOr
                | BinaryOp::Eq
                | BinaryOp::Ne
                | BinaryOp::CaseEq
                | BinaryOp::CaseNe
                | BinaryOp::Lt
                | BinaryOp::Le
                | BinaryOp::Gt
                | BinaryOp::Ge
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Literal {
        id: NodeId,
        span: SourceSpan,
        width: u32,
        value: u64,
    },
    Ref {
        id: NodeId,
        span: SourceSpan,
        name: String,
    },
    BitSelect {
        id: NodeId,
        span: SourceSpan,
        name: String,
        index: Box<Expression>,
    },
    PartSelect {
        id: NodeId,
        span: SourceSpan,
        name: String,
        msb: u32,
        lsb: u32,
    },
    Concat {
        id: NodeId,
        span: SourceSpan,
        parts: Vec<Expression>,
    },
    Unary {
        id: NodeId,
        span: SourceSpan,
        op: UnaryOp,
        operand: Box<Expression>,
    },
    Binary {
        id: NodeId,
        span: SourceSpan,
        op: BinaryOp,
        lhs: Box<Expression>,
        rhs: Box<Expression>,
    },
    Ternary {
        id: NodeId,
        span: SourceSpan,
        cond: Box<Expression>,
        then_expr: Box<Expression>,
        else_expr: Box<Expression>,
    },
    /// `$signed(e)` / `$unsigned(e)`.
    SignCast {
        id: NodeId,
        span: SourceSpan,
        signed: bool,
        operand: Box<Expression>,
    },
}

impl Expression {
    pub fn id(&self) -> NodeId {
        match self {
            Expression::Literal { id, .. }
            | Expression::Ref { id, .. }
            | Expression::BitSelect { id, .. }
            | Expression::PartSelect { id, .. }
            | Expression::Concat { id, .. }
            | Expression::Unary { id, .. }
            | Expression::Binary { id, .. }
            | Expression::Ternary { id, .. }
            | Expression::SignCast { id, .. } => *id,
        }
    }

    pub fn span(&self) -> SourceSpan {
        match self {
            Expression::Literal { span, .. }
            | Expression::Ref { span, .. }
            | Expression::BitSelect { span, .. }
            | Expression::PartSelect { span, .. }
            | Expression::Concat { span, .. }
            | Expression::Unary { span, .. }
            | Expression::Binary { span, .. }
            | Expression::Ternary { span, .. }
            | Expression::SignCast { span, .. } => *span,
        }
    }

    /// Names of signals this expression reads.
    pub fn collect_reads(&self, out: &mut Vec<String>) {
        match self {
            Expression::Literal { .. } => {}
            Expression::Ref { name, .. } => out.push(name.clone()),
            Expression::BitSelect { name, index, .. } => {
                out.push(name.clone());
                index.collect_reads(out);
            }
            Expression::PartSelect { name, .. } => out.push(name.clone()),
            Expression::Concat { parts, .. } => {
                for p in parts {
                    p.collect_reads(out);
                }
            }
            Expression::Unary { operand, .. } | Expression::SignCast { operand, .. } => {
                operand.collect_reads(out)
            }
            Expression::Binary { lhs, rhs, .. } => {
                lhs.collect_reads(out);
                rhs.collect_reads(out);
            }
            Expression::Ternary {
                cond,
                then_expr,
                else_expr,
                ..
            } => {
                cond.collect_reads(out);
                then_expr.collect_reads(out);
                else_expr.collect_reads(out);
            }
        }
    }
}

/// Assignment target: whole signal, one bit, or a constant slice.
#[derive(Debug, Clone, PartialEq)]
pub enum LValue {
    Ref {
        name: String,
    },
    BitSelect {
        name: String,
        index: Box<Expression>,
    },
    PartSelect {
        name: String,
        msb: u32,
        lsb: u32,
    },
}

impl LValue {
    pub fn name(&self) -> &str {
        match self {
            LValue::Ref { name }
            | LValue::BitSelect { name, .. }
            | LValue::PartSelect { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assign {
    pub id: NodeId,
    pub span: SourceSpan,
    pub lhs: LValue,
    pub rhs: Expression,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfStmt {
    pub id: NodeId,
    pub span: SourceSpan,
    pub cond: Expression,
    /// Always a `Statement::Block` after parsing (canonical form).
    pub then_branch: Box<Statement>,
    pub else_branch: Option<Box<Statement>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseArm {
    /// Constant label expression (validated const-foldable at parse time).
    pub label: Expression,
    /// Always a `Statement::Block`.
    pub body: Statement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseStmt {
    pub id: NodeId,
    pub span: SourceSpan,
    pub subject: Expression,
    pub arms: Vec<CaseArm>,
    pub default_arm: Option<Box<Statement>>,
}

/// `for (var = init; var <op> bound; var = var <step_op> step)` with
/// compile-time-constant `init`, `bound` and `step` (subset restriction).
#[derive(Debug, Clone, PartialEq)]
pub struct ForStmt {
    pub id: NodeId,
    pub span: SourceSpan,
    pub var: String,
    pub init: Expression,
    pub cond: Expression,
    pub step_op: BinaryOp,
    pub step: Expression,
    pub body: Box<Statement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockStmt {
    pub id: NodeId,
    pub span: SourceSpan,
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Blocking(Assign),
    NonBlocking(Assign),
    If(IfStmt),
    Case(CaseStmt),
    For(ForStmt),
    Block(BlockStmt),
}

impl Statement {
    pub fn id(&self) -> NodeId {
        match self {
            Statement::Blocking(a) | Statement::NonBlocking(a) => a.id,
            Statement::If(s) => s.id,
            Statement::Case(s) => s.id,
            Statement::For(s) => s.id,
            Statement::Block(s) => s.id,
        }
    }

    pub fn span(&self) -> SourceSpan {
        match self {
            Statement::Blocking(a) | Statement::NonBlocking(a) => a.span,
            Statement::If(s) => s.span,
            Statement::Case(s) => s.span,
            Statement::For(s) => s.span,
            Statement::Block(s) => s.span,
        }
    }

    /// Direct child statements (branch bodies, block members, loop body).
    pub fn children(&self) -> Vec<&Statement> {
        match self {
            Statement::Blocking(_) | Statement::NonBlocking(_) => Vec::new(),
            Statement::If(s) => {
                let mut v = vec![s.then_branch.as_ref()];
                if let Some(e) = &s.else_branch {
                    v.push(e.as_ref());
                }
                v
            }
            Statement::Case(s) => {
                let mut v: Vec<&Statement> = s.arms.iter().map(|a| &a.body).collect();
                if let Some(d) = &s.default_arm {
                    v.push(d.as_ref());
                }
                v
            }
            Statement::For(s) => vec![s.body.as_ref()],
            Statement::Block(s) => s.statements.iter().collect(),
        }
    }

    /// Pre-order walk over this statement and all nested statements.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Statement)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// All NodeIds in this subtree: the statements plus every expression.
    pub fn subtree_node_ids(&self, out: &mut Vec<NodeId>) {
        self.walk(&mut |s| {
            out.push(s.id());
            for e in s.own_expressions() {
                collect_expr_ids(e, out);
            }
        });
    }

    /// Expressions held directly by this statement (not by nested statements).
    pub fn own_expressions(&self) -> Vec<&Expression> {
        match self {
            Statement::Blocking(a) | Statement::NonBlocking(a) => {
                let mut v = vec![&a.rhs];
                if let LValue::BitSelect { index, .. } = &a.lhs {
                    v.push(index.as_ref());
                }
                v
            }
            Statement::If(s) => vec![&s.cond],
            Statement::Case(s) => {
                let mut v = vec![&s.subject];
                v.extend(s.arms.iter().map(|a| &a.label));
                v
            }
            Statement::For(s) => vec![&s.init, &s.cond, &s.step],
            Statement::Block(_) => Vec::new(),
        }
    }

    /// Signal names written anywhere in this subtree (assignment targets and
    /// for-loop variables).
    pub fn collect_writes(&self, out: &mut Vec<String>) {
        self.walk(&mut |s| match s {
            Statement::Blocking(a) | Statement::NonBlocking(a) => {
                out.push(a.lhs.name().to_string())
            }
            Statement::For(f) => out.push(f.var.clone()),
            _ => {}
        });
    }

    /// Signal names read anywhere in this subtree.
    pub fn collect_reads(&self, out: &mut Vec<String>) {
        self.walk(&mut |s| {
            for e in s.own_expressions() {
                e.collect_reads(out);
            }
        });
    }

    /// Number of statement nodes in this subtree (self included).
    pub fn statement_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

fn collect_expr_ids(e: &Expression, out: &mut Vec<NodeId>) {
    out.push(e.id());
    match e {
        Expression::Literal { .. } | Expression::Ref { .. } | Expression::PartSelect { .. } => {}
        Expression::BitSelect { index, .. } => collect_expr_ids(index, out),
        Expression::Concat { parts, .. } => {
            for p in parts {
                collect_expr_ids(p, out);
            }
        }
        Expression::Unary { operand, .. } | Expression::SignCast { operand, .. } => {
            collect_expr_ids(operand, out)
        }
        Expression::Binary { lhs, rhs, .. } => {
            collect_expr_ids(lhs, out);
            collect_expr_ids(rhs, out);
        }
        Expression::Ternary {
            cond,
            then_expr,
            else_expr,
            ..
        } => {
            collect_expr_ids(cond, out);
            collect_expr_ids(then_expr, out);
            collect_expr_ids(else_expr, out);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Posedge,
    Negedge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub edge: EdgeKind,
    pub signal: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sensitivity {
    /// `always @*` — combinational.
    Star,
    /// `always @(posedge a or negedge b ...)`.
    Edges(Vec<EdgeSpec>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContAssign {
    pub id: NodeId,
    pub span: SourceSpan,
    pub lhs: LValue,
    pub rhs: Expression,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlwaysBlock {
    pub id: NodeId,
    pub span: SourceSpan,
    pub sensitivity: Sensitivity,
    /// Always a `Statement::Block`.
    pub body: Statement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialBlock {
    pub id: NodeId,
    pub span: SourceSpan,
    pub body: Statement,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModuleItem {
    Assign(ContAssign),
    Always(AlwaysBlock),
    Initial(InitialBlock),
}

impl ModuleItem {
    pub fn id(&self) -> NodeId {
        match self {
            ModuleItem::Assign(a) => a.id,
            ModuleItem::Always(a) => a.id,
            ModuleItem::Initial(i) => i.id,
        }
    }
}

/// A parsed single-module design.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleAst {
    pub name: String,
    pub ports: Vec<PortSpec>,
    pub declarations: Vec<NetDecl>,
    pub items: Vec<ModuleItem>,
    next_id: u32,
}

/// Statement classification used by the mutation engine: control structures
/// are parents, individual assignments are leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Leaf,
    Parent,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AstError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

impl ModuleAst {
    pub fn new(name: String) -> Self {
        ModuleAst {
            name,
            ports: Vec::new(),
            declarations: Vec::new(),
            items: Vec::new(),
            next_id: 0,
        }
    }

    pub fn alloc_id(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Bump the allocator past `id` (used by the parser, which numbers nodes
    /// itself and installs the high-water mark afterwards).
    pub fn set_next_id(&mut self, next: u32) {
        self.next_id = self.next_id.max(next);
    }

    /// Declared width and signedness of `name`, searching ports then nets.
    pub fn signal_decl(&self, name: &str) -> Option<(u32, bool)> {
        for p in &self.ports {
            if p.name == name {
                return Some((p.width, p.signed));
            }
        }
        for d in &self.declarations {
            if d.name == name {
                return Some((d.width, d.signed));
            }
        }
        None
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.signal_decl(name).is_some()
    }

    /// Pre-order over every statement in the module, with the index of the
    /// containing item.
    pub fn walk_statements<'a>(&'a self, f: &mut dyn FnMut(usize, &'a Statement)) {
        for (idx, item) in self.items.iter().enumerate() {
            match item {
                ModuleItem::Assign(_) => {}
                ModuleItem::Always(a) => a.body.walk(&mut |s| f(idx, s)),
                ModuleItem::Initial(i) => i.body.walk(&mut |s| f(idx, s)),
            }
        }
    }

    /// NodeIds that count as statements for coverage: continuous assigns plus
    /// every procedural statement.
    pub fn statement_ids(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        for item in &self.items {
            if let ModuleItem::Assign(a) = item {
                out.push(a.id);
            }
        }
        self.walk_statements(&mut |_, s| out.push(s.id()));
        out
    }

    /// Total number of coverage statements.
    pub fn statement_count(&self) -> usize {
        self.statement_ids().len()
    }

    /// Look up a statement by id. Continuous assigns are module items, not
    /// statements, so they are not returned here.
    pub fn find_statement(&self, id: NodeId) -> Option<&Statement> {
        let mut found: Option<&Statement> = None;
        self.walk_statements(&mut |_, s| {
            if s.id() == id && found.is_none() {
                found = Some(s);
            }
        });
        found
    }

    pub fn classify_node(&self, id: NodeId) -> Result<NodeClass, AstError> {
        match self.find_statement(id) {
            Some(Statement::Blocking(_)) | Some(Statement::NonBlocking(_)) => Ok(NodeClass::Leaf),
            Some(_) => Ok(NodeClass::Parent),
            None => Err(AstError::UnknownNode(id)),
        }
    }

    /// Every identifier declared in the module (ports and nets).
    pub fn declared_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.ports.iter().map(|p| p.name.clone()).collect();
        v.extend(self.declarations.iter().map(|d| d.name.clone()));
        v
    }

    /// Shape-and-content equality, ignoring NodeIds and SourceSpans.
    pub fn structurally_equal(&self, other: &ModuleAst) -> bool {
        self.name == other.name
            && self.ports == other.ports
            && self.declarations == other.declarations
            && self.items.len() == other.items.len()
            && self
                .items
                .iter()
                .zip(other.items.iter())
                .all(|(a, b)| item_eq(a, b))
    }

    /// Map of NodeId → statement ids of the direct statement children, for
    /// every statement in the module. Used by coverage and zombie analysis.
    pub fn statement_children(&self) -> HashMap<NodeId, Vec<NodeId>> {
        let mut map = HashMap::new();
        self.walk_statements(&mut |_, s| {
            map.insert(s.id(), s.children().iter().map(|c| c.id()).collect());
        });
        map
    }
}

fn item_eq(a: &ModuleItem, b: &ModuleItem) -> bool {
    match (a, b) {
        (ModuleItem::Assign(x), ModuleItem::Assign(y)) => {
            lvalue_eq(&x.lhs, &y.lhs) && expr_eq(&x.rhs, &y.rhs)
        }
        (ModuleItem::Always(x), ModuleItem::Always(y)) => {
            x.sensitivity == y.sensitivity && stmt_eq(&x.body, &y.body)
        }
        (ModuleItem::Initial(x), ModuleItem::Initial(y)) => stmt_eq(&x.body, &y.body),
        _ => false,
    }
}

fn lvalue_eq(a: &LValue, b: &LValue) -> bool {
    match (a, b) {
        (LValue::Ref { name: n1 }, LValue::Ref { name: n2 }) => n1 == n2,
        (
            LValue::BitSelect {
                name: n1,
                index: i1,
            },
            LValue::BitSelect {
                name: n2,
                index: i2,
            },
        ) => n1 == n2 && expr_eq(i1, i2),
        (
            LValue::PartSelect {
                name: n1,
                msb: m1,
                lsb: l1,
            },
            LValue::PartSelect {
                name: n2,
                msb: m2,
                lsb: l2,
            },
        ) => n1 == n2 && m1 == m2 && l1 == l2,
        _ => false,
    }
}

pub(crate) fn expr_eq(a: &Expression, b: &Expression) -> bool {
    use Expression::*;
    match (a, b) {
        (
            Literal {
                width: w1,
                value: v1,
                ..
            },
            Literal {
                width: w2,
                value: v2,
                ..
            },
        ) => w1 == w2 && v1 == v2,
        (Ref { name: n1, .. }, Ref { name: n2, .. }) => n1 == n2,
        (
            BitSelect {
                name: n1,
                index: i1,
                ..
            },
            BitSelect {
                name: n2,
                index: i2,
                ..
            },
        ) => n1 == n2 && expr_eq(i1, i2),
        (
            PartSelect {
                name: n1,
                msb: m1,
                lsb: l1,
                ..
            },
            PartSelect {
                name: n2,
                msb: m2,
                lsb: l2,
                ..
            },
        ) => n1 == n2 && m1 == m2 && l1 == l2,
        (Concat { parts: p1, .. }, Concat { parts: p2, .. }) => {
            p1.len() == p2.len() && p1.iter().zip(p2.iter()).all(|(x, y)| expr_eq(x, y))
        }
        (
            Unary {
                op: o1,
                operand: e1,
                ..
            },
            Unary {
                op: o2,
                operand: e2,
                ..
            },
        ) => o1 == o2 && expr_eq(e1, e2),
        (
            Binary {
                op: o1,
                lhs: l1,
                rhs: r1,
                ..
            },
            Binary {
                op: o2,
                lhs: l2,
                rhs: r2,
                ..
            },
        ) => o1 == o2 && expr_eq(l1, l2) && expr_eq(r1, r2),
        (
            Ternary {
                cond: c1,
                then_expr: t1,
                else_expr: e1,
                ..
            },
            Ternary {
                cond: c2,
                then_expr: t2,
                else_expr: e2,
                ..
            },
        ) => expr_eq(c1, c2) && expr_eq(t1, t2) && expr_eq(e1, e2),
        (
            SignCast {
                signed: s1,
                operand: e1,
                ..
            },
            SignCast {
                signed: s2,
                operand: e2,
                ..
            },
        ) => s1 == s2 && expr_eq(e1, e2),
        _ => false,
    }
}

pub(crate) fn stmt_eq(a: &Statement, b: &Statement) -> bool {
    use Statement::*;
    match (a, b) {
        (Blocking(x), Blocking(y)) | (NonBlocking(x), NonBlocking(y)) => {
            lvalue_eq(&x.lhs, &y.lhs) && expr_eq(&x.rhs, &y.rhs)
        }
        (If(x), If(y)) => {
            expr_eq(&x.cond, &y.cond)
                && stmt_eq(&x.then_branch, &y.then_branch)
                && match (&x.else_branch, &y.else_branch) {
                    (None, None) => true,
                    (Some(p), Some(q)) => stmt_eq(p, q),
                    _ => false,
                }
        }
        (Case(x), Case(y)) => {
            expr_eq(&x.subject, &y.subject)
                && x.arms.len() == y.arms.len()
                && x.arms
                    .iter()
                    .zip(y.arms.iter())
                    .all(|(p, q)| expr_eq(&p.label, &q.label) && stmt_eq(&p.body, &q.body))
                && match (&x.default_arm, &y.default_arm) {
                    (None, None) => true,
                    (Some(p), Some(q)) => stmt_eq(p, q),
                    _ => false,
                }
        }
        (For(x), For(y)) => {
            x.var == y.var
                && expr_eq(&x.init, &y.init)
                && expr_eq(&x.cond, &y.cond)
                && x.step_op == y.step_op
                && expr_eq(&x.step, &y.step)
                && stmt_eq(&x.body, &y.body)
        }
        (Block(x), Block(y)) => {
            x.statements.len() == y.statements.len()
                && x.statements
                    .iter()
                    .zip(y.statements.iter())
                    .all(|(p, q)| stmt_eq(p, q))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(id: u32, w: u32, v: u64) -> Expression {
        Expression::Literal {
            id: NodeId(id),
            span: SourceSpan::default(),
            width: w,
            value: v,
        }
    }

    #[test]
    fn structural_eq_ignores_ids_and_spans() {
        assert!(expr_eq(&lit(0, 8, 5), &lit(99, 8, 5)));
        assert!(!expr_eq(&lit(0, 8, 5), &lit(0, 8, 6)));
        assert!(!expr_eq(&lit(0, 8, 5), &lit(0, 4, 5)));
    }

    #[test]
    fn classify_assign_vs_control() {
        let mut m = ModuleAst::new("t".into());
        let a_id = m.alloc_id();
        let rhs_id = m.alloc_id();
        let blk_id = m.alloc_id();
        let alw_id = m.alloc_id();
        let body = Statement::Block(BlockStmt {
            id: blk_id,
            span: SourceSpan::default(),
            statements: vec![Statement::NonBlocking(Assign {
                id: a_id,
                span: SourceSpan::default(),
                lhs: LValue::Ref { name: "y".into() },
                rhs: Expression::Literal {
                    id: rhs_id,
                    span: SourceSpan::default(),
                    width: 1,
                    value: 0,
                },
            })],
        });
        m.items.push(ModuleItem::Always(AlwaysBlock {
            id: alw_id,
            span: SourceSpan::default(),
            sensitivity: Sensitivity::Star,
            body,
        }));
        assert_eq!(m.classify_node(a_id), Ok(NodeClass::Leaf));
        assert_eq!(m.classify_node(blk_id), Ok(NodeClass::Parent));
        assert_eq!(
            m.classify_node(NodeId(999)),
            Err(AstError::UnknownNode(NodeId(999)))
        );
    }
}
