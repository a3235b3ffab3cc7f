//! Static checks and expression typing for the subset.
//!
//! Width/signedness rules (two-state, max 64 bits):
//! - literals: given width, unsigned; plain decimals are 32-bit
//! - arithmetic and bitwise: width = max(operand widths); signed iff both
//!   operands signed
//! - comparisons, logical ops, reductions of `!`: width 1, unsigned
//! - shifts: width and signedness of the left operand, amount unsigned
//! - concat: sum of part widths, unsigned; bit-select: 1 bit; part-select:
//!   msb-lsb+1 bits, unsigned
//! - ternary: width = max(branch widths), signed iff both branches signed
//! - `$signed`/`$unsigned`: same bits, flipped interpretation

use crate::ast::*;
use crate::parser::ParseError;
use std::collections::{HashMap, HashSet};

/// Declared signals of one module: name → (width, signed).
#[derive(Debug, Clone)]
pub struct SymbolTable {
    map: HashMap<String, (u32, bool)>,
}

impl SymbolTable {
    pub fn of(module: &ModuleAst) -> Self {
        let mut map = HashMap::new();
        for p in &module.ports {
            map.insert(p.name.clone(), (p.width, p.signed));
        }
        for d in &module.declarations {
            map.insert(d.name.clone(), (d.width, d.signed));
        }
        SymbolTable { map }
    }

    pub fn lookup(&self, name: &str) -> Option<(u32, bool)> {
        self.map.get(name).copied()
    }
}

/// Width and signedness of an expression under the table. `None` only when a
/// referenced signal is missing (callers validate declarations separately).
pub fn type_of(e: &Expression, syms: &SymbolTable) -> Option<(u32, bool)> {
    match e {
        Expression::Literal { width, .. } => Some((*width, false)),
        Expression::Ref { name, .. } => syms.lookup(name),
        Expression::BitSelect { .. } => Some((1, false)),
        Expression::PartSelect { msb, lsb, .. } => Some((msb - lsb + 1, false)),
        Expression::Concat { parts, .. } => {
            let mut total = 0u32;
            for p in parts {
                total += type_of(p, syms)?.0;
            }
            Some((total.min(64), false))
        }
        Expression::Unary { op, operand, .. } => {
            let (w, s) = type_of(operand, syms)?;
            match op {
                UnaryOp::LogNot => Some((1, false)),
                _ => Some((w, s)),
            }
        }
        Expression::Binary { op, lhs, rhs, .. } => {
            let (wl, sl) = type_of(lhs, syms)?;
            let (wr, sr) = type_of(rhs, syms)?;
            if op.is_comparison() {
                Some((1, false))
            } else if matches!(op, BinaryOp::Shl | BinaryOp::Shr) {
                Some((wl, sl))
            } else {
                Some((wl.max(wr), sl && sr))
            }
        }
        Expression::Ternary {
            then_expr,
            else_expr,
            ..
        } => {
            let (wt, st) = type_of(then_expr, syms)?;
            let (we, se) = type_of(else_expr, syms)?;
            Some((wt.max(we), st && se))
        }
        Expression::SignCast {
            signed, operand, ..
        } => {
            let (w, _) = type_of(operand, syms)?;
            Some((w, *signed))
        }
    }
}

/// True when the expression contains no signal references.
pub fn is_const_expr(e: &Expression) -> bool {
    match e {
        Expression::Literal { .. } => true,
        Expression::Ref { .. } | Expression::BitSelect { .. } | Expression::PartSelect { .. } => {
            false
        }
        Expression::Concat { parts, .. } => parts.iter().all(is_const_expr),
        Expression::Unary { operand, .. } | Expression::SignCast { operand, .. } => {
            is_const_expr(operand)
        }
        Expression::Binary { lhs, rhs, .. } => is_const_expr(lhs) && is_const_expr(rhs),
        Expression::Ternary {
            cond,
            then_expr,
            else_expr,
            ..
        } => is_const_expr(cond) && is_const_expr(then_expr) && is_const_expr(else_expr),
    }
}

/// Fold a closed expression to its value. `None` when any leaf is a signal.
pub fn const_value(e: &Expression) -> Option<u64> {
    const_fold(e).map(|(v, _, _)| v)
}

/// Fold to (value, width, signed) with the same semantics the simulator uses.
pub fn const_fold(e: &Expression) -> Option<(u64, u32, bool)> {
    let empty = SymbolTable {
        map: HashMap::new(),
    };
    if !is_const_expr(e) {
        return None;
    }
    let (w, s) = type_of(e, &empty)?;
    let v = crate::sim::eval_const(e)?;
    Some((v, w, s))
}

/// Validate module-level invariants after parsing:
/// duplicate declarations, undeclared references, select bounds, widths.
pub fn validate(module: &ModuleAst) -> Result<(), ParseError> {
    let mut seen: HashSet<&str> = HashSet::new();
    for p in &module.ports {
        if !seen.insert(&p.name) {
            return Err(ParseError::DuplicateIdentifier {
                name: p.name.clone(),
                line: 1,
                col: 1,
            });
        }
    }
    for d in &module.declarations {
        if !seen.insert(&d.name) {
            return Err(ParseError::DuplicateIdentifier {
                name: d.name.clone(),
                line: 1,
                col: 1,
            });
        }
    }

    let syms = SymbolTable::of(module);

    for item in &module.items {
        match item {
            ModuleItem::Assign(a) => {
                validate_lvalue(&a.lhs, a.span, &syms)?;
                check_expression(&a.rhs, &syms)?;
            }
            ModuleItem::Always(al) => {
                if let Sensitivity::Edges(edges) = &al.sensitivity {
                    for e in edges {
                        if syms.lookup(&e.signal).is_none() {
                            return Err(ParseError::UndeclaredIdentifier {
                                name: e.signal.clone(),
                                line: al.span.start_line,
                                col: al.span.start_col,
                            });
                        }
                    }
                }
                validate_stmt(&al.body, &syms)?;
            }
            ModuleItem::Initial(i) => validate_stmt(&i.body, &syms)?,
        }
    }
    Ok(())
}

fn validate_stmt(stmt: &Statement, syms: &SymbolTable) -> Result<(), ParseError> {
    let span = stmt.span();
    match stmt {
        Statement::Blocking(a) | Statement::NonBlocking(a) => {
            validate_lvalue(&a.lhs, a.span, syms)?;
            check_expression(&a.rhs, syms)?;
        }
        Statement::If(s) => {
            check_expression(&s.cond, syms)?;
            validate_stmt(&s.then_branch, syms)?;
            if let Some(e) = &s.else_branch {
                validate_stmt(e, syms)?;
            }
        }
        Statement::Case(s) => {
            check_expression(&s.subject, syms)?;
            for arm in &s.arms {
                check_expression(&arm.label, syms)?;
                validate_stmt(&arm.body, syms)?;
            }
            if let Some(d) = &s.default_arm {
                validate_stmt(d, syms)?;
            }
        }
        Statement::For(s) => {
            if syms.lookup(&s.var).is_none() {
                return Err(ParseError::UndeclaredIdentifier {
                    name: s.var.clone(),
                    line: span.start_line,
                    col: span.start_col,
                });
            }
            check_expression(&s.init, syms)?;
            check_expression(&s.cond, syms)?;
            check_expression(&s.step, syms)?;
            validate_stmt(&s.body, syms)?;
        }
        Statement::Block(b) => {
            for s in &b.statements {
                validate_stmt(s, syms)?;
            }
        }
    }
    Ok(())
}

fn validate_lvalue(lv: &LValue, span: SourceSpan, syms: &SymbolTable) -> Result<(), ParseError> {
    let name = lv.name();
    let Some((width, _)) = syms.lookup(name) else {
        return Err(ParseError::UndeclaredIdentifier {
            name: name.to_string(),
            line: span.start_line,
            col: span.start_col,
        });
    };
    match lv {
        LValue::Ref { .. } => Ok(()),
        LValue::BitSelect { index, .. } => {
            check_expression(index, syms)?;
            if let Some(i) = const_value(index) {
                if i >= width as u64 {
                    return Err(ParseError::SelectOutOfRange {
                        name: name.to_string(),
                        line: span.start_line,
                        col: span.start_col,
                    });
                }
            }
            Ok(())
        }
        LValue::PartSelect { msb, .. } => {
            if *msb >= width {
                return Err(ParseError::SelectOutOfRange {
                    name: name.to_string(),
                    line: span.start_line,
                    col: span.start_col,
                });
            }
            Ok(())
        }
    }
}

fn check_expression(e: &Expression, syms: &SymbolTable) -> Result<(), ParseError> {
    let span = e.span();
    match e {
        Expression::Literal { .. } => Ok(()),
        Expression::Ref { name, .. } => {
            if syms.lookup(name).is_none() {
                return Err(ParseError::UndeclaredIdentifier {
                    name: name.clone(),
                    line: span.start_line,
                    col: span.start_col,
                });
            }
            Ok(())
        }
        Expression::BitSelect { name, index, .. } => {
            let Some((width, _)) = syms.lookup(name) else {
                return Err(ParseError::UndeclaredIdentifier {
                    name: name.clone(),
                    line: span.start_line,
                    col: span.start_col,
                });
            };
            check_expression(index, syms)?;
            if let Some(i) = const_value(index) {
                if i >= width as u64 {
                    return Err(ParseError::SelectOutOfRange {
                        name: name.clone(),
                        line: span.start_line,
                        col: span.start_col,
                    });
                }
            }
            Ok(())
        }
        Expression::PartSelect { name, msb, .. } => {
            let Some((width, _)) = syms.lookup(name) else {
                return Err(ParseError::UndeclaredIdentifier {
                    name: name.clone(),
                    line: span.start_line,
                    col: span.start_col,
                });
            };
            if *msb >= width {
                return Err(ParseError::SelectOutOfRange {
                    name: name.clone(),
                    line: span.start_line,
                    col: span.start_col,
                });
            }
            Ok(())
        }
        Expression::Concat { parts, .. } => {
            for p in parts {
                check_expression(p, syms)?;
            }
            // Reject concats wider than the 64-bit value model.
            let mut total = 0u32;
            for p in parts {
                total = total.saturating_add(type_of(p, syms).map(|t| t.0).unwrap_or(0));
            }
            if total > 64 {
                return Err(ParseError::Syntax {
                    line: span.start_line,
                    col: span.start_col,
                    expected: "concat width <= 64".into(),
                });
            }
            Ok(())
        }
        Expression::Unary { operand, .. } | Expression::SignCast { operand, .. } => {
            check_expression(operand, syms)
        }
        Expression::Binary { lhs, rhs, .. } => {
            check_expression(lhs, syms)?;
            check_expression(rhs, syms)
        }
        Expression::Ternary {
            cond,
            then_expr,
            else_expr,
            ..
        } => {
            check_expression(cond, syms)?;
            check_expression(then_expr, syms)?;
            check_expression(else_expr, syms)
        }
    }
}
