//! Random generator for subset designs.
//!
//! Used to bootstrap seed corpora and to drive the property/acceptance
//! suites. Generated modules are valid by construction: every identifier is
//! declared, every signal has exactly one writer, combinational logic reads
//! only signals from earlier stages (no loops), and loops are statically
//! bounded. With `zombie_bias > 0` the generator plants behaviorally dead
//! regions: branches guarded by constant-false or astronomically unlikely
//! conditions.

use crate::ast::*;
use crate::rng::SplitMix64;

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Approximate cap on generated statement count.
    pub max_stmts: usize,
    /// Probability of planting a dead region per sequential block.
    pub zombie_bias: f64,
    pub allow_for: bool,
    pub allow_case: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_stmts: 24,
            zombie_bias: 0.6,
            allow_for: true,
            allow_case: true,
        }
    }
}

impl GenConfig {
    /// Small designs for oracle comparison runs.
    pub fn small() -> Self {
        GenConfig {
            max_stmts: 14,
            zombie_bias: 0.4,
            allow_for: true,
            allow_case: true,
        }
    }
}

const WIDTHS: &[u32] = &[1, 2, 4, 8, 16, 32];

struct Gen<'a> {
    rng: &'a mut SplitMix64,
    module: ModuleAst,
    /// Signals readable by combinational logic generated so far.
    avail: Vec<(String, u32)>,
    stmt_budget: usize,
}

/// Generate one valid subset module, deterministic in the rng stream.
pub fn generate_module(rng: &mut SplitMix64, cfg: &GenConfig) -> ModuleAst {
    let mut g = Gen {
        rng,
        module: ModuleAst::new("top".into()),
        avail: Vec::new(),
        stmt_budget: cfg.max_stmts,
    };
    g.build(cfg);
    g.module
}

/// Generate a module with at most `max_stmts` coverage statements,
/// regenerating until the bound holds (wrapper blocks make the budget
/// approximate).
pub fn generate_bounded_module(
    rng: &mut SplitMix64,
    cfg: &GenConfig,
    max_stmts: usize,
) -> ModuleAst {
    loop {
        let m = generate_module(rng, cfg);
        if m.statement_count() <= max_stmts {
            return m;
        }
    }
}

impl<'a> Gen<'a> {
    fn build(&mut self, cfg: &GenConfig) {
        let has_reset = self.rng.next_bool(0.5);

        self.module.ports.push(PortSpec {
            name: "clk".into(),
            direction: Direction::Input,
            width: 1,
            signed: false,
            is_clock: false,
            is_reg: false,
        });
        if has_reset {
            self.module.ports.push(PortSpec {
                name: "rst_n".into(),
                direction: Direction::Input,
                width: 1,
                signed: false,
                is_clock: false,
                is_reg: false,
            });
        }
        let n_inputs = 1 + self.rng.next_below(3) as usize;
        for i in 0..n_inputs {
            let width = WIDTHS[self.rng.next_below(WIDTHS.len() as u64) as usize];
            let signed = self.rng.next_bool(0.2);
            let name = format!("in{i}");
            self.module.ports.push(PortSpec {
                name: name.clone(),
                direction: Direction::Input,
                width,
                signed,
                is_clock: false,
                is_reg: false,
            });
            self.avail.push((name, width));
        }

        // State registers, readable everywhere (clock breaks any cycle).
        let n_regs = 1 + self.rng.next_below(2) as usize;
        let mut state_regs = Vec::new();
        for i in 0..n_regs {
            let width = WIDTHS[1 + self.rng.next_below(4) as usize];
            let name = format!("r{i}");
            self.module.declarations.push(NetDecl {
                kind: NetKind::Reg,
                name: name.clone(),
                width,
                signed: false,
            });
            self.avail.push((name.clone(), width));
            state_regs.push((name, width));
        }

        // Combinational wire stages.
        let n_wires = self.rng.next_below(3) as usize;
        for i in 0..n_wires {
            if self.stmt_budget == 0 {
                break;
            }
            let width = WIDTHS[1 + self.rng.next_below(4) as usize];
            let name = format!("w{i}");
            self.module.declarations.push(NetDecl {
                kind: NetKind::Wire,
                name: name.clone(),
                width,
                signed: self.rng.next_bool(0.15),
            });
            let rhs = self.expr(2);
            let id = self.module.alloc_id();
            self.module.items.push(ModuleItem::Assign(ContAssign {
                id,
                span: SourceSpan::default(),
                lhs: LValue::Ref { name: name.clone() },
                rhs,
            }));
            self.stmt_budget = self.stmt_budget.saturating_sub(1);
            self.avail.push((name, width));
        }

        // Outputs: a combinational one and possibly a registered one.
        let n_outputs = 1 + self.rng.next_below(2) as usize;
        let mut seq_outputs = Vec::new();
        for i in 0..n_outputs {
            let width = WIDTHS[1 + self.rng.next_below(4) as usize];
            let name = format!("out{i}");
            let registered = i > 0 || self.rng.next_bool(0.4);
            self.module.ports.push(PortSpec {
                name: name.clone(),
                direction: Direction::Output,
                width,
                signed: false,
                is_clock: false,
                is_reg: registered,
            });
            if registered {
                seq_outputs.push((name, width));
            } else {
                let rhs = self.expr(2);
                let id = self.module.alloc_id();
                self.module.items.push(ModuleItem::Assign(ContAssign {
                    id,
                    span: SourceSpan::default(),
                    lhs: LValue::Ref { name },
                    rhs,
                }));
                self.stmt_budget = self.stmt_budget.saturating_sub(1);
            }
        }

        // The sequential block owns state regs and registered outputs.
        let mut owned: Vec<(String, u32)> = state_regs;
        owned.extend(seq_outputs);
        self.gen_seq_block(cfg, has_reset, &owned);
    }

    fn pick_avail(&mut self) -> (String, u32) {
        let i = self.rng.next_below(self.avail.len() as u64) as usize;
        self.avail[i].clone()
    }

    fn literal(&mut self) -> Expression {
        let width = WIDTHS[self.rng.next_below(WIDTHS.len() as u64) as usize];
        let value = self.rng.next_u64() & crate::sim::mask(width);
        let id = self.module.alloc_id();
        Expression::Literal {
            id,
            span: SourceSpan::default(),
            width,
            value,
        }
    }

    fn reference(&mut self) -> Expression {
        let (name, width) = self.pick_avail();
        let id = self.module.alloc_id();
        let base = Expression::Ref {
            id,
            span: SourceSpan::default(),
            name: name.clone(),
        };
        if width > 1 && self.rng.next_bool(0.25) {
            // Bit or part select within declared bounds.
            if self.rng.next_bool(0.5) {
                let bit = self.rng.next_below(width as u64) as u32;
                let lit_id = self.module.alloc_id();
                let sel_id = self.module.alloc_id();
                return Expression::BitSelect {
                    id: sel_id,
                    span: SourceSpan::default(),
                    name,
                    index: Box::new(Expression::Literal {
                        id: lit_id,
                        span: SourceSpan::default(),
                        width: 32,
                        value: bit as u64,
                    }),
                };
            }
            let msb = self.rng.next_below(width as u64) as u32;
            let lsb = self.rng.next_below(msb as u64 + 1) as u32;
            let sel_id = self.module.alloc_id();
            return Expression::PartSelect {
                id: sel_id,
                span: SourceSpan::default(),
                name,
                msb,
                lsb,
            };
        }
        base
    }

    fn terminal(&mut self) -> Expression {
        if self.rng.next_bool(0.75) {
            self.reference()
        } else {
            self.literal()
        }
    }

    fn expr(&mut self, depth: u32) -> Expression {
        if depth == 0 || self.rng.next_bool(0.25) {
            return self.terminal();
        }
        match self.rng.next_below(10) {
            0 => {
                let op = [
                    UnaryOp::Plus,
                    UnaryOp::Minus,
                    UnaryOp::LogNot,
                    UnaryOp::BitNot,
                ][self.rng.next_below(4) as usize];
                let operand = self.expr(depth - 1);
                let id = self.module.alloc_id();
                Expression::Unary {
                    id,
                    span: SourceSpan::default(),
                    op,
                    operand: Box::new(operand),
                }
            }
            1 => {
                let signed = self.rng.next_bool(0.6);
                let operand = self.expr(depth - 1);
                let id = self.module.alloc_id();
                Expression::SignCast {
                    id,
                    span: SourceSpan::default(),
                    signed,
                    operand: Box::new(operand),
                }
            }
            2 => {
                let cond = self.expr(depth - 1);
                let t = self.expr(depth - 1);
                let f = self.expr(depth - 1);
                let id = self.module.alloc_id();
                Expression::Ternary {
                    id,
                    span: SourceSpan::default(),
                    cond: Box::new(cond),
                    then_expr: Box::new(t),
                    else_expr: Box::new(f),
                }
            }
            3 => {
                // Concat of two narrow references, bounded to 64 bits total.
                let a = self.reference();
                let b = self.reference();
                let id = self.module.alloc_id();
                let syms = crate::sema::SymbolTable::of(&self.module);
                let wa = crate::sema::type_of(&a, &syms).map(|t| t.0).unwrap_or(64);
                let wb = crate::sema::type_of(&b, &syms).map(|t| t.0).unwrap_or(64);
                if wa + wb > 64 {
                    return a;
                }
                Expression::Concat {
                    id,
                    span: SourceSpan::default(),
                    parts: vec![a, b],
                }
            }
            _ => {
                const OPS: &[BinaryOp] = &[
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
                ];
                let op = OPS[self.rng.next_below(OPS.len() as u64) as usize];
                let lhs = self.expr(depth - 1);
                let rhs = self.expr(depth - 1);
                let id = self.module.alloc_id();
                Expression::Binary {
                    id,
                    span: SourceSpan::default(),
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                }
            }
        }
    }

    fn nba(&mut self, target: &(String, u32)) -> Statement {
        let rhs = self.expr(2);
        let id = self.module.alloc_id();
        Statement::NonBlocking(Assign {
            id,
            span: SourceSpan::default(),
            lhs: LValue::Ref {
                name: target.0.clone(),
            },
            rhs,
        })
    }

    fn block_of(&mut self, statements: Vec<Statement>) -> Statement {
        let id = self.module.alloc_id();
        Statement::Block(BlockStmt {
            id,
            span: SourceSpan::default(),
            statements,
        })
    }

    /// A guard that never (or almost never) holds under random stimuli.
    fn dead_guard(&mut self) -> Expression {
        let wide: Vec<(String, u32)> = self
            .avail
            .iter()
            .filter(|(n, w)| *w >= 12 && n.starts_with("in"))
            .cloned()
            .collect();
        if !wide.is_empty() && self.rng.next_bool(0.5) {
            // Dynamically dead: a wide input pinned to one exact value.
            let (name, width) = wide[self.rng.next_below(wide.len() as u64) as usize].clone();
            let value = self.rng.next_u64() & crate::sim::mask(width);
            let ref_id = self.module.alloc_id();
            let lit_id = self.module.alloc_id();
            let id = self.module.alloc_id();
            return Expression::Binary {
                id,
                span: SourceSpan::default(),
                op: BinaryOp::Eq,
                lhs: Box::new(Expression::Ref {
                    id: ref_id,
                    span: SourceSpan::default(),
                    name,
                }),
                rhs: Box::new(Expression::Literal {
                    id: lit_id,
                    span: SourceSpan::default(),
                    width,
                    value,
                }),
            };
        }
        if self.rng.next_bool(0.5) {
            let id = self.module.alloc_id();
            Expression::Literal {
                id,
                span: SourceSpan::default(),
                width: 1,
                value: 0,
            }
        } else {
            // Statically false comparison of constants.
            let lo_id = self.module.alloc_id();
            let hi_id = self.module.alloc_id();
            let id = self.module.alloc_id();
            Expression::Binary {
                id,
                span: SourceSpan::default(),
                op: BinaryOp::Gt,
                lhs: Box::new(Expression::Literal {
                    id: lo_id,
                    span: SourceSpan::default(),
                    width: 4,
                    value: 3,
                }),
                rhs: Box::new(Expression::Literal {
                    id: hi_id,
                    span: SourceSpan::default(),
                    width: 4,
                    value: 7,
                }),
            }
        }
    }

    fn gen_seq_stmt(&mut self, cfg: &GenConfig, owned: &[(String, u32)]) -> Statement {
        if self.stmt_budget > 4 && cfg.allow_case && self.rng.next_bool(0.15) {
            self.stmt_budget = self.stmt_budget.saturating_sub(4);
            let subject = self.reference();
            let mut arms = Vec::new();
            let n_arms = 2;
            for v in 0..n_arms {
                let label_id = self.module.alloc_id();
                let target = owned[self.rng.next_below(owned.len() as u64) as usize].clone();
                let body_stmt = self.nba(&target);
                let body = self.block_of(vec![body_stmt]);
                arms.push(CaseArm {
                    label: Expression::Literal {
                        id: label_id,
                        span: SourceSpan::default(),
                        width: 4,
                        value: v,
                    },
                    body,
                });
            }
            let target = owned[self.rng.next_below(owned.len() as u64) as usize].clone();
            let dflt_stmt = self.nba(&target);
            let default_arm = self.block_of(vec![dflt_stmt]);
            let id = self.module.alloc_id();
            return Statement::Case(CaseStmt {
                id,
                span: SourceSpan::default(),
                subject,
                arms,
                default_arm: Some(Box::new(default_arm)),
            });
        }
        if self.stmt_budget > 3 && self.rng.next_bool(0.3) {
            self.stmt_budget = self.stmt_budget.saturating_sub(3);
            let cond = self.expr(1);
            let t_target = owned[self.rng.next_below(owned.len() as u64) as usize].clone();
            let e_target = owned[self.rng.next_below(owned.len() as u64) as usize].clone();
            let t_stmt = self.nba(&t_target);
            let then_branch = self.block_of(vec![t_stmt]);
            let e_stmt = self.nba(&e_target);
            let else_branch = self.block_of(vec![e_stmt]);
            let id = self.module.alloc_id();
            return Statement::If(IfStmt {
                id,
                span: SourceSpan::default(),
                cond,
                then_branch: Box::new(then_branch),
                else_branch: Some(Box::new(else_branch)),
            });
        }
        self.stmt_budget = self.stmt_budget.saturating_sub(1);
        let target = owned[self.rng.next_below(owned.len() as u64) as usize].clone();
        self.nba(&target)
    }

    fn gen_for_loop(&mut self, owned: &[(String, u32)]) -> Statement {
        // Dedicated loop variable and accumulator, blocking assigns.
        let idx_name = format!("idx{}", self.module.declarations.len());
        self.module.declarations.push(NetDecl {
            kind: NetKind::Reg,
            name: idx_name.clone(),
            width: 8,
            signed: false,
        });
        let bound = 2 + self.rng.next_below(5);
        let target = owned[self.rng.next_below(owned.len() as u64) as usize].clone();
        let src = self.reference();
        let idx_ref_id = self.module.alloc_id();
        let body_rhs_id = self.module.alloc_id();
        let tgt_ref_id = self.module.alloc_id();
        let body_assign_id = self.module.alloc_id();
        let body_stmt = Statement::Blocking(Assign {
            id: body_assign_id,
            span: SourceSpan::default(),
            lhs: LValue::Ref {
                name: target.0.clone(),
            },
            rhs: Expression::Binary {
                id: body_rhs_id,
                span: SourceSpan::default(),
                op: BinaryOp::BitXor,
                lhs: Box::new(Expression::Ref {
                    id: tgt_ref_id,
                    span: SourceSpan::default(),
                    name: target.0.clone(),
                }),
                rhs: Box::new(Expression::Binary {
                    id: self.module.alloc_id(),
                    span: SourceSpan::default(),
                    op: BinaryOp::Shr,
                    lhs: Box::new(src),
                    rhs: Box::new(Expression::Ref {
                        id: idx_ref_id,
                        span: SourceSpan::default(),
                        name: idx_name.clone(),
                    }),
                }),
            },
        });
        let body = self.block_of(vec![body_stmt]);
        let init_id = self.module.alloc_id();
        let cond_var_id = self.module.alloc_id();
        let cond_lit_id = self.module.alloc_id();
        let cond_id = self.module.alloc_id();
        let step_id = self.module.alloc_id();
        let id = self.module.alloc_id();
        self.stmt_budget = self.stmt_budget.saturating_sub(3);
        Statement::For(ForStmt {
            id,
            span: SourceSpan::default(),
            var: idx_name.clone(),
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
                    name: idx_name,
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

    fn gen_seq_block(&mut self, cfg: &GenConfig, has_reset: bool, owned: &[(String, u32)]) {
        if owned.is_empty() {
            return;
        }
        let mut live_stmts = Vec::new();
        let n = 1 + self.rng.next_below(3) as usize;
        for _ in 0..n {
            if self.stmt_budget == 0 {
                break;
            }
            live_stmts.push(self.gen_seq_stmt(cfg, owned));
        }
        if cfg.allow_for && self.stmt_budget >= 3 && self.rng.next_bool(0.3) {
            // Loop accumulates into a dedicated blocking-assigned register.
            let acc_name = format!("acc{}", self.module.declarations.len());
            self.module.declarations.push(NetDecl {
                kind: NetKind::Reg,
                name: acc_name.clone(),
                width: 8,
                signed: false,
            });
            let acc = (acc_name, 8u32);
            live_stmts.push(self.gen_for_loop(std::slice::from_ref(&acc)));
        }

        // Plant a dead region writing block-owned shadow registers.
        if self.rng.next_bool(cfg.zombie_bias) && self.stmt_budget >= 2 {
            let guard = self.dead_guard();
            let n_dead = 1 + self.rng.next_below(2) as usize;
            let mut dead_stmts = Vec::new();
            for _ in 0..n_dead {
                let target = owned[self.rng.next_below(owned.len() as u64) as usize].clone();
                dead_stmts.push(self.nba(&target));
            }
            self.stmt_budget = self.stmt_budget.saturating_sub(n_dead + 1);
            let dead_block = self.block_of(dead_stmts);
            let id = self.module.alloc_id();
            live_stmts.push(Statement::If(IfStmt {
                id,
                span: SourceSpan::default(),
                cond: guard,
                then_branch: Box::new(dead_block),
                else_branch: None,
            }));
        }

        let main_block = self.block_of(live_stmts);
        let body = if has_reset {
            // if (!rst_n) reset everything; else run the main block.
            let mut resets = Vec::new();
            for (name, _) in owned {
                let lit_id = self.module.alloc_id();
                let id = self.module.alloc_id();
                resets.push(Statement::NonBlocking(Assign {
                    id,
                    span: SourceSpan::default(),
                    lhs: LValue::Ref { name: name.clone() },
                    rhs: Expression::Literal {
                        id: lit_id,
                        span: SourceSpan::default(),
                        width: 1,
                        value: 0,
                    },
                }));
            }
            let reset_block = self.block_of(resets);
            let rst_ref_id = self.module.alloc_id();
            let not_id = self.module.alloc_id();
            let if_id = self.module.alloc_id();
            let if_stmt = Statement::If(IfStmt {
                id: if_id,
                span: SourceSpan::default(),
                cond: Expression::Unary {
                    id: not_id,
                    span: SourceSpan::default(),
                    op: UnaryOp::LogNot,
                    operand: Box::new(Expression::Ref {
                        id: rst_ref_id,
                        span: SourceSpan::default(),
                        name: "rst_n".into(),
                    }),
                },
                then_branch: Box::new(reset_block),
                else_branch: Some(Box::new(main_block)),
            });
            self.block_of(vec![if_stmt])
        } else {
            main_block
        };

        let sensitivity = if has_reset {
            Sensitivity::Edges(vec![
                EdgeSpec {
                    edge: EdgeKind::Posedge,
                    signal: "clk".into(),
                },
                EdgeSpec {
                    edge: EdgeKind::Negedge,
                    signal: "rst_n".into(),
                },
            ])
        } else {
            Sensitivity::Edges(vec![EdgeSpec {
                edge: EdgeKind::Posedge,
                signal: "clk".into(),
            }])
        };
        let id = self.module.alloc_id();
        self.module.items.push(ModuleItem::Always(AlwaysBlock {
            id,
            span: SourceSpan::default(),
            sensitivity,
            body,
        }));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emit::emit;
    use crate::parser::parse;
    use crate::sim::{simulate, StepLimit};
    use crate::testbench::{testbench_for, StimulusConfig};

    #[test]
    fn generated_modules_parse_and_simulate() {
        let mut rng = SplitMix64::new(1234);
        for i in 0..50 {
            let m = generate_module(&mut rng, &GenConfig::default());
            let text = emit(&m);
            let parsed = parse(&text).unwrap_or_else(|e| panic!("gen {i} failed: {e}\n{text}"));
            assert!(parsed.structurally_equal(&parse(&emit(&parsed)).unwrap()));
            let tb = testbench_for(&parsed, &StimulusConfig::with_seed(i)).unwrap();
            simulate(&parsed, &tb, StepLimit::default())
                .unwrap_or_else(|e| panic!("gen {i} failed to simulate: {e}\n{text}"));
        }
    }

    #[test]
    fn small_designs_stay_small() {
        let mut rng = SplitMix64::new(77);
        for _ in 0..30 {
            let m = generate_bounded_module(&mut rng, &GenConfig::small(), 20);
            assert!(m.statement_count() <= 20, "got {}", m.statement_count());
        }
    }

    #[test]
    fn deterministic_generation() {
        let a = generate_module(&mut SplitMix64::new(42), &GenConfig::default());
        let b = generate_module(&mut SplitMix64::new(42), &GenConfig::default());
        assert_eq!(emit(&a), emit(&b));
    }

    #[test]
    fn zombie_bias_produces_dead_sites() {
        let mut rng = SplitMix64::new(5);
        let mut with_sites = 0;
        for i in 0..30 {
            let cfg = GenConfig {
                zombie_bias: 1.0,
                ..Default::default()
            };
            let m = generate_module(&mut rng, &cfg);
            let tb = testbench_for(&m, &StimulusConfig::with_seed(i)).unwrap();
            let (_, cov) = simulate(&m, &tb, StepLimit::default()).unwrap();
            let ann = crate::zombie::mark_zombie(&m, &cov).unwrap();
            if !ann.zombie_nodes.is_empty() {
                with_sites += 1;
            }
        }
        assert!(
            with_sites >= 20,
            "only {with_sites}/30 designs had zombie sites"
        );
    }
}
