//! Canonical source emission.
//!
//! One statement per line, explicit begin-end on every body, every compound
//! operand parenthesized, literals printed as `<width>'h<hex>`. The output of
//! `emit` always re-parses, and re-parsing reproduces the tree including node
//! numbering, so textual diffs localize mutations exactly.

use crate::ast::*;
use std::fmt::Write;

pub fn emit(module: &ModuleAst) -> String {
    let mut out = String::new();
    let _ = write!(out, "module {} (", module.name);
    out.push('\n');
    for (i, p) in module.ports.iter().enumerate() {
        let dir = match p.direction {
            Direction::Input => "input",
            Direction::Output => "output",
        };
        let kind = if p.is_reg { " reg" } else { "" };
        let signed = if p.signed { " signed" } else { "" };
        let range = range_str(p.width);
        let comma = if i + 1 < module.ports.len() { "," } else { "" };
        let _ = writeln!(out, "  {dir}{kind}{signed}{range} {}{comma}", p.name);
    }
    out.push_str(");\n");

    for d in &module.declarations {
        let kind = match d.kind {
            NetKind::Wire => "wire",
            NetKind::Reg => "reg",
        };
        let signed = if d.signed { " signed" } else { "" };
        let range = range_str(d.width);
        let _ = writeln!(out, "  {kind}{signed}{range} {};", d.name);
    }

    for item in &module.items {
        match item {
            ModuleItem::Assign(a) => {
                let _ = writeln!(
                    out,
                    "  assign {} = {};",
                    lvalue_str(&a.lhs),
                    expr_str(&a.rhs)
                );
            }
            ModuleItem::Always(al) => {
                let sens = match &al.sensitivity {
                    Sensitivity::Star => "*".to_string(),
                    Sensitivity::Edges(edges) => {
                        let parts: Vec<String> = edges
                            .iter()
                            .map(|e| {
                                let kw = match e.edge {
                                    EdgeKind::Posedge => "posedge",
                                    EdgeKind::Negedge => "negedge",
                                };
                                format!("{kw} {}", e.signal)
                            })
                            .collect();
                        format!("({})", parts.join(" or "))
                    }
                };
                let _ = writeln!(out, "  always @{sens}");
                emit_stmt(&mut out, &al.body, 1);
            }
            ModuleItem::Initial(i) => {
                out.push_str("  initial\n");
                emit_stmt(&mut out, &i.body, 1);
            }
        }
    }
    out.push_str("endmodule\n");
    out
}

fn range_str(width: u32) -> String {
    if width <= 1 {
        String::new()
    } else {
        format!(" [{}:0]", width - 1)
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..=level {
        out.push_str("  ");
    }
}

fn emit_stmt(out: &mut String, stmt: &Statement, level: usize) {
    match stmt {
        Statement::Blocking(a) => {
            indent(out, level);
            let _ = writeln!(out, "{} = {};", lvalue_str(&a.lhs), expr_str(&a.rhs));
        }
        Statement::NonBlocking(a) => {
            indent(out, level);
            let _ = writeln!(out, "{} <= {};", lvalue_str(&a.lhs), expr_str(&a.rhs));
        }
        Statement::If(s) => {
            indent(out, level);
            let _ = writeln!(out, "if ({})", expr_str(&s.cond));
            emit_stmt(out, &s.then_branch, level + 1);
            if let Some(e) = &s.else_branch {
                indent(out, level);
                out.push_str("else\n");
                emit_stmt(out, e, level + 1);
            }
        }
        Statement::Case(s) => {
            indent(out, level);
            let _ = writeln!(out, "case ({})", expr_str(&s.subject));
            for arm in &s.arms {
                indent(out, level + 1);
                let _ = writeln!(out, "{}:", expr_str(&arm.label));
                emit_stmt(out, &arm.body, level + 2);
            }
            if let Some(d) = &s.default_arm {
                indent(out, level + 1);
                out.push_str("default:\n");
                emit_stmt(out, d, level + 2);
            }
            indent(out, level);
            out.push_str("endcase\n");
        }
        Statement::For(s) => {
            indent(out, level);
            let _ = writeln!(
                out,
                "for ({} = {}; {}; {} = {} {} {})",
                s.var,
                expr_str(&s.init),
                expr_str(&s.cond),
                s.var,
                s.var,
                s.step_op.token(),
                expr_str(&s.step)
            );
            emit_stmt(out, &s.body, level + 1);
        }
        Statement::Block(b) => {
            indent(out, level);
            out.push_str("begin\n");
            for s in &b.statements {
                emit_stmt(out, s, level + 1);
            }
            indent(out, level);
            out.push_str("end\n");
        }
    }
}

fn lvalue_str(lv: &LValue) -> String {
    match lv {
        LValue::Ref { name } => name.clone(),
        LValue::BitSelect { name, index } => format!("{name}[{}]", expr_str(index)),
        LValue::PartSelect { name, msb, lsb } => format!("{name}[{msb}:{lsb}]"),
    }
}

/// Canonical expression text. Compound operands are parenthesized, so
/// precedence never depends on the reader.
pub fn expr_str(e: &Expression) -> String {
    match e {
        Expression::Literal { width, value, .. } => format!("{width}'h{value:x}"),
        Expression::Ref { name, .. } => name.clone(),
        Expression::BitSelect { name, index, .. } => format!("{name}[{}]", expr_str(index)),
        Expression::PartSelect { name, msb, lsb, .. } => format!("{name}[{msb}:{lsb}]"),
        Expression::Concat { parts, .. } => {
            let inner: Vec<String> = parts.iter().map(expr_str).collect();
            format!("{{{}}}", inner.join(", "))
        }
        Expression::Unary { op, operand, .. } => {
            format!("{}{}", op.token(), operand_str(operand))
        }
        Expression::Binary { op, lhs, rhs, .. } => {
            format!("{} {} {}", operand_str(lhs), op.token(), operand_str(rhs))
        }
        Expression::Ternary {
            cond,
            then_expr,
            else_expr,
            ..
        } => format!(
            "{} ? {} : {}",
            operand_str(cond),
            operand_str(then_expr),
            operand_str(else_expr)
        ),
        Expression::SignCast {
            signed, operand, ..
        } => {
            let f = if *signed { "$signed" } else { "$unsigned" };
            format!("{f}({})", expr_str(operand))
        }
    }
}

fn operand_str(e: &Expression) -> String {
    match e {
        Expression::Binary { .. } | Expression::Ternary { .. } | Expression::Unary { .. } => {
            format!("({})", expr_str(e))
        }
        _ => expr_str(e),
    }
}
