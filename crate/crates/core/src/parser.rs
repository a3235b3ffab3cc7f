//! Recursive-descent parser for the supported subset.
//!
//! The parser canonicalizes as it builds: every if/else branch, case arm,
//! for body and always/initial body becomes an explicit begin-end block.
//! That makes emission one-to-one with the tree and keeps sibling insertion
//! during mutation trivial.

use crate::ast::*;
use crate::lexer::{lex, Tok, Token};
use crate::sema;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: expected {expected}")]
    Syntax {
        line: u32,
        col: u32,
        expected: String,
    },
    #[error("unsupported construct `{name}` at {line}:{col}")]
    UnsupportedConstruct { name: String, line: u32, col: u32 },
    #[error("undeclared identifier `{name}` at {line}:{col}")]
    UndeclaredIdentifier { name: String, line: u32, col: u32 },
    #[error("duplicate identifier `{name}` at {line}:{col}")]
    DuplicateIdentifier { name: String, line: u32, col: u32 },
    #[error("select out of declared range for `{name}` at {line}:{col}")]
    SelectOutOfRange { name: String, line: u32, col: u32 },
    #[error("case label at {line}:{col} is not a constant expression")]
    NonConstCaseLabel { line: u32, col: u32 },
    #[error("for loop at {line}:{col} is not statically bounded: {reason}")]
    UnboundedFor { line: u32, col: u32, reason: String },
}

impl ParseError {
    pub fn syntax(line: u32, col: u32, expected: &str) -> Self {
        ParseError::Syntax {
            line,
            col,
            expected: expected.to_string(),
        }
    }
    pub fn unsupported(name: &str, line: u32, col: u32) -> Self {
        ParseError::UnsupportedConstruct {
            name: name.to_string(),
            line,
            col,
        }
    }
}

/// Parse a single-module source file. Deterministic: a pure function of the
/// input bytes.
pub fn parse(source: &str) -> Result<ModuleAst, ParseError> {
    let tokens = lex(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        next_id: 0,
    };
    let module = p.parse_module()?;
    if !p.at_end() {
        let t = p.peek_pos();
        return Err(ParseError::unsupported(
            "second module or trailing input",
            t.0,
            t.1,
        ));
    }
    sema::validate(&module)?;
    Ok(module)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    next_id: u32,
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_pos(&self) -> (u32, u32) {
        match self.tokens.get(self.pos) {
            Some(t) => (t.line, t.col),
            None => self
                .tokens
                .last()
                .map(|t| (t.end_line, t.end_col))
                .unwrap_or((1, 1)),
        }
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        self.pos += 1;
        t
    }

    fn alloc(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    fn err(&self, expected: &str) -> ParseError {
        let (line, col) = self.peek_pos();
        ParseError::syntax(line, col, expected)
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<Token, ParseError> {
        match self.peek() {
            Some(t) if *t == tok => Ok(self.bump()),
            _ => Err(self.err(expected)),
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<Token, ParseError> {
        match self.peek() {
            Some(Tok::Keyword(k)) if *k == kw => Ok(self.bump()),
            _ => Err(self.err(kw)),
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Keyword(k)) if *k == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Token), ParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let t = self.bump();
                if let Tok::Ident(name) = t.tok.clone() {
                    Ok((name, t))
                } else {
                    unreachable!()
                }
            }
            _ => Err(self.err(what)),
        }
    }

    fn parse_module(&mut self) -> Result<ModuleAst, ParseError> {
        self.expect_kw("module")?;
        let (name, _) = self.expect_ident("module name")?;
        let mut module = ModuleAst::new(name);

        self.expect(Tok::LParen, "(")?;
        if !matches!(self.peek(), Some(Tok::RParen)) {
            loop {
                let port = self.parse_port()?;
                module.ports.push(port);
                if matches!(self.peek(), Some(Tok::Comma)) {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, ")")?;
        self.expect(Tok::Semi, ";")?;

        loop {
            match self.peek() {
                Some(Tok::Keyword("endmodule")) => {
                    self.bump();
                    break;
                }
                Some(Tok::Keyword("wire")) | Some(Tok::Keyword("reg")) => {
                    let decls = self.parse_net_decl()?;
                    module.declarations.extend(decls);
                }
                Some(Tok::Keyword("assign")) => {
                    let item = self.parse_cont_assign()?;
                    module.items.push(item);
                }
                Some(Tok::Keyword("always")) => {
                    let item = self.parse_always()?;
                    module.items.push(item);
                }
                Some(Tok::Keyword("initial")) => {
                    let t = self.bump();
                    let id = self.alloc();
                    let body = self.parse_stmt_as_block()?;
                    let span = join_spans(tok_span(&t), body.span());
                    module
                        .items
                        .push(ModuleItem::Initial(InitialBlock { id, span, body }));
                }
                None => return Err(self.err("endmodule")),
                _ => return Err(self.err("module item")),
            }
        }

        module.set_next_id(self.next_id);
        Ok(module)
    }

    fn parse_port(&mut self) -> Result<PortSpec, ParseError> {
        let direction = match self.peek() {
            Some(Tok::Keyword("input")) => {
                self.bump();
                Direction::Input
            }
            Some(Tok::Keyword("output")) => {
                self.bump();
                Direction::Output
            }
            _ => return Err(self.err("input or output")),
        };
        let mut is_reg = false;
        if self.eat_kw("wire") {
            // explicit wire, nothing to record
        } else if self.eat_kw("reg") {
            is_reg = true;
        }
        let signed = self.eat_kw("signed");
        let width = self.parse_opt_range()?;
        let (name, _) = self.expect_ident("port name")?;
        Ok(PortSpec {
            name,
            direction,
            width,
            signed,
            is_clock: false,
            is_reg,
        })
    }

    /// `[msb:0]` → width msb+1. Absent range → width 1.
    fn parse_opt_range(&mut self) -> Result<u32, ParseError> {
        if !matches!(self.peek(), Some(Tok::LBracket)) {
            return Ok(1);
        }
        let open = self.bump();
        let msb = self.parse_const_u32()?;
        self.expect(Tok::Colon, ":")?;
        let lsb = self.parse_const_u32()?;
        self.expect(Tok::RBracket, "]")?;
        if lsb != 0 {
            return Err(ParseError::unsupported(
                "non-zero-based range",
                open.line,
                open.col,
            ));
        }
        if msb >= 64 {
            return Err(ParseError::syntax(open.line, open.col, "width <= 64"));
        }
        Ok(msb + 1)
    }

    fn parse_const_u32(&mut self) -> Result<u32, ParseError> {
        match self.peek() {
            Some(Tok::Number(v)) => {
                let v = *v;
                self.bump();
                Ok(v as u32)
            }
            Some(Tok::Sized(_, v)) => {
                let v = *v;
                self.bump();
                Ok(v as u32)
            }
            _ => Err(self.err("constant")),
        }
    }

    fn parse_net_decl(&mut self) -> Result<Vec<NetDecl>, ParseError> {
        let kind = if self.eat_kw("wire") {
            NetKind::Wire
        } else {
            self.expect_kw("reg")?;
            NetKind::Reg
        };
        let signed = self.eat_kw("signed");
        let width = self.parse_opt_range()?;
        let mut decls = Vec::new();
        loop {
            let (name, _) = self.expect_ident("net name")?;
            decls.push(NetDecl {
                kind,
                name,
                width,
                signed,
            });
            if matches!(self.peek(), Some(Tok::Comma)) {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::Semi, ";")?;
        Ok(decls)
    }

    fn parse_cont_assign(&mut self) -> Result<ModuleItem, ParseError> {
        let kw = self.expect_kw("assign")?;
        let id = self.alloc();
        let lhs = self.parse_lvalue()?;
        self.expect(Tok::Assign, "=")?;
        let rhs = self.parse_expr()?;
        let semi = self.expect(Tok::Semi, ";")?;
        let span = join_spans(tok_span(&kw), tok_span(&semi));
        Ok(ModuleItem::Assign(ContAssign { id, span, lhs, rhs }))
    }

    fn parse_always(&mut self) -> Result<ModuleItem, ParseError> {
        let kw = self.expect_kw("always")?;
        let id = self.alloc();
        self.expect(Tok::At, "@")?;
        let sensitivity = match self.peek() {
            Some(Tok::Star) => {
                self.bump();
                Sensitivity::Star
            }
            Some(Tok::LParen) => {
                self.bump();
                if matches!(self.peek(), Some(Tok::Star)) {
                    self.bump();
                    self.expect(Tok::RParen, ")")?;
                    Sensitivity::Star
                } else {
                    let mut edges = Vec::new();
                    loop {
                        let edge = match self.peek() {
                            Some(Tok::Keyword("posedge")) => {
                                self.bump();
                                EdgeKind::Posedge
                            }
                            Some(Tok::Keyword("negedge")) => {
                                self.bump();
                                EdgeKind::Negedge
                            }
                            _ => {
                                let (line, col) = self.peek_pos();
                                return Err(ParseError::unsupported(
                                    "non-edge sensitivity list",
                                    line,
                                    col,
                                ));
                            }
                        };
                        let (signal, _) = self.expect_ident("edge signal")?;
                        edges.push(EdgeSpec { edge, signal });
                        if self.eat_kw("or") {
                            continue;
                        }
                        break;
                    }
                    self.expect(Tok::RParen, ")")?;
                    Sensitivity::Edges(edges)
                }
            }
            _ => return Err(self.err("@* or @(...)")),
        };
        let body = self.parse_stmt_as_block()?;
        let span = join_spans(tok_span(&kw), body.span());
        Ok(ModuleItem::Always(AlwaysBlock {
            id,
            span,
            sensitivity,
            body,
        }))
    }

    /// Parse a statement, wrapping non-block results in a fresh begin-end so
    /// bodies are uniformly blocks.
    fn parse_stmt_as_block(&mut self) -> Result<Statement, ParseError> {
        let stmt = self.parse_statement()?;
        Ok(match stmt {
            Statement::Block(_) => stmt,
            other => {
                let id = self.alloc();
                let span = other.span();
                Statement::Block(BlockStmt {
                    id,
                    span,
                    statements: vec![other],
                })
            }
        })
    }

    fn parse_statement(&mut self) -> Result<Statement, ParseError> {
        match self.peek() {
            Some(Tok::Keyword("begin")) => self.parse_begin_end(),
            Some(Tok::Keyword("if")) => self.parse_if(),
            Some(Tok::Keyword("case")) => self.parse_case(),
            Some(Tok::Keyword("for")) => self.parse_for(),
            Some(Tok::Ident(_)) => self.parse_assignment(),
            _ => Err(self.err("statement")),
        }
    }

    fn parse_begin_end(&mut self) -> Result<Statement, ParseError> {
        let open = self.expect_kw("begin")?;
        let mut statements = Vec::new();
        loop {
            if matches!(self.peek(), Some(Tok::Keyword("end"))) {
                let close = self.bump();
                let span = join_spans(tok_span(&open), tok_span(&close));
                // Block ids are allocated after the children so that the
                // numbering matches blocks synthesized by canonicalization.
                let id = self.alloc();
                return Ok(Statement::Block(BlockStmt {
                    id,
                    span,
                    statements,
                }));
            }
            if self.at_end() {
                return Err(self.err("end"));
            }
            statements.push(self.parse_statement()?);
        }
    }

    fn parse_if(&mut self) -> Result<Statement, ParseError> {
        let kw = self.expect_kw("if")?;
        let id = self.alloc();
        self.expect(Tok::LParen, "(")?;
        let cond = self.parse_expr()?;
        self.expect(Tok::RParen, ")")?;
        let then_branch = Box::new(self.parse_stmt_as_block()?);
        let else_branch = if self.eat_kw("else") {
            Some(Box::new(self.parse_stmt_as_block()?))
        } else {
            None
        };
        let end = else_branch
            .as_ref()
            .map(|b| b.span())
            .unwrap_or_else(|| then_branch.span());
        let span = join_spans(tok_span(&kw), end);
        Ok(Statement::If(IfStmt {
            id,
            span,
            cond,
            then_branch,
            else_branch,
        }))
    }

    fn parse_case(&mut self) -> Result<Statement, ParseError> {
        let kw = self.expect_kw("case")?;
        let id = self.alloc();
        self.expect(Tok::LParen, "(")?;
        let subject = self.parse_expr()?;
        self.expect(Tok::RParen, ")")?;
        let mut arms = Vec::new();
        let mut default_arm = None;
        loop {
            match self.peek() {
                Some(Tok::Keyword("endcase")) => {
                    let close = self.bump();
                    let span = join_spans(tok_span(&kw), tok_span(&close));
                    return Ok(Statement::Case(CaseStmt {
                        id,
                        span,
                        subject,
                        arms,
                        default_arm,
                    }));
                }
                Some(Tok::Keyword("default")) => {
                    let t = self.bump();
                    if default_arm.is_some() {
                        return Err(ParseError::syntax(t.line, t.col, "single default arm"));
                    }
                    // Optional colon after default.
                    if matches!(self.peek(), Some(Tok::Colon)) {
                        self.bump();
                    }
                    default_arm = Some(Box::new(self.parse_stmt_as_block()?));
                }
                None => return Err(self.err("endcase")),
                _ => {
                    let label_pos = self.peek_pos();
                    let label = self.parse_expr()?;
                    if !sema::is_const_expr(&label) {
                        return Err(ParseError::NonConstCaseLabel {
                            line: label_pos.0,
                            col: label_pos.1,
                        });
                    }
                    self.expect(Tok::Colon, ":")?;
                    let body = self.parse_stmt_as_block()?;
                    arms.push(CaseArm { label, body });
                }
            }
        }
    }

    fn parse_for(&mut self) -> Result<Statement, ParseError> {
        let kw = self.expect_kw("for")?;
        let id = self.alloc();
        let (line, col) = (kw.line, kw.col);
        self.expect(Tok::LParen, "(")?;
        let (var, _) = self.expect_ident("loop variable")?;
        self.expect(Tok::Assign, "=")?;
        let init = self.parse_expr()?;
        self.expect(Tok::Semi, ";")?;
        let cond = self.parse_expr()?;
        self.expect(Tok::Semi, ";")?;
        let (var2, _) = self.expect_ident("loop variable")?;
        if var2 != var {
            return Err(ParseError::UnboundedFor {
                line,
                col,
                reason: "step must update the loop variable".into(),
            });
        }
        self.expect(Tok::Assign, "=")?;
        let (var3, _) = self.expect_ident("loop variable")?;
        if var3 != var {
            return Err(ParseError::UnboundedFor {
                line,
                col,
                reason: "step must have the form v = v +/- const".into(),
            });
        }
        let step_op = match self.peek() {
            Some(Tok::Plus) => {
                self.bump();
                BinaryOp::Add
            }
            Some(Tok::Minus) => {
                self.bump();
                BinaryOp::Sub
            }
            _ => {
                return Err(ParseError::UnboundedFor {
                    line,
                    col,
                    reason: "step must have the form v = v +/- const".into(),
                })
            }
        };
        let step = self.parse_expr()?;
        self.expect(Tok::RParen, ")")?;
        let body = Box::new(self.parse_stmt_as_block()?);
        let span = join_spans(tok_span(&kw), body.span());

        // Static-bound checks: init and step constant, cond a comparison of
        // the loop variable against a constant.
        if !sema::is_const_expr(&init) || !sema::is_const_expr(&step) {
            return Err(ParseError::UnboundedFor {
                line,
                col,
                reason: "init and step must be constant".into(),
            });
        }
        match &cond {
            Expression::Binary { op, lhs, rhs, .. }
                if matches!(
                    op,
                    BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge | BinaryOp::Ne
                ) =>
            {
                let var_on_left = matches!(lhs.as_ref(), Expression::Ref { name, .. } if *name == var)
                    && sema::is_const_expr(rhs);
                let var_on_right = matches!(rhs.as_ref(), Expression::Ref { name, .. } if *name == var)
                    && sema::is_const_expr(lhs);
                if !var_on_left && !var_on_right {
                    return Err(ParseError::UnboundedFor {
                        line,
                        col,
                        reason: "condition must compare the loop variable to a constant".into(),
                    });
                }
            }
            _ => {
                return Err(ParseError::UnboundedFor {
                    line,
                    col,
                    reason: "condition must be a comparison".into(),
                })
            }
        }

        Ok(Statement::For(ForStmt {
            id,
            span,
            var,
            init,
            cond,
            step_op,
            step,
            body,
        }))
    }

    fn parse_assignment(&mut self) -> Result<Statement, ParseError> {
        let start = self.peek_pos();
        let id = self.alloc();
        let lhs = self.parse_lvalue()?;
        let non_blocking = match self.peek() {
            Some(Tok::Assign) => {
                self.bump();
                false
            }
            Some(Tok::Le) => {
                self.bump();
                true
            }
            _ => return Err(self.err("= or <=")),
        };
        let rhs = self.parse_expr()?;
        let semi = self.expect(Tok::Semi, ";")?;
        let span = SourceSpan {
            start_line: start.0,
            start_col: start.1,
            end_line: semi.end_line,
            end_col: semi.end_col,
        };
        let assign = Assign { id, span, lhs, rhs };
        Ok(if non_blocking {
            Statement::NonBlocking(assign)
        } else {
            Statement::Blocking(assign)
        })
    }

    fn parse_lvalue(&mut self) -> Result<LValue, ParseError> {
        let (name, _) = self.expect_ident("assignment target")?;
        if matches!(self.peek(), Some(Tok::LBracket)) {
            self.bump();
            // Part-select if we can see `const : const ]`, else bit-select.
            let first = self.parse_expr()?;
            if matches!(self.peek(), Some(Tok::Colon)) {
                self.bump();
                let (l, c) = self.peek_pos();
                let msb = sema::const_value(&first).ok_or(ParseError::SelectOutOfRange {
                    name: name.clone(),
                    line: l,
                    col: c,
                })? as u32;
                let lsb = self.parse_const_u32()?;
                self.expect(Tok::RBracket, "]")?;
                if msb < lsb {
                    return Err(ParseError::SelectOutOfRange {
                        name,
                        line: l,
                        col: c,
                    });
                }
                return Ok(LValue::PartSelect { name, msb, lsb });
            }
            self.expect(Tok::RBracket, "]")?;
            return Ok(LValue::BitSelect {
                name,
                index: Box::new(first),
            });
        }
        Ok(LValue::Ref { name })
    }

    // ----- expressions ------------------------------------------------

    fn parse_expr(&mut self) -> Result<Expression, ParseError> {
        self.parse_ternary()
    }

    fn parse_ternary(&mut self) -> Result<Expression, ParseError> {
        let cond = self.parse_binary(0)?;
        if matches!(self.peek(), Some(Tok::Question)) {
            self.bump();
            let id = self.alloc();
            let then_expr = self.parse_ternary()?;
            self.expect(Tok::Colon, ":")?;
            let else_expr = self.parse_ternary()?;
            let span = join_spans(cond.span(), else_expr.span());
            return Ok(Expression::Ternary {
                id,
                span,
                cond: Box::new(cond),
                then_expr: Box::new(then_expr),
                else_expr: Box::new(else_expr),
            });
        }
        Ok(cond)
    }

    /// Precedence climbing. Level 0 is the loosest binary tier (`||`).
    fn parse_binary(&mut self, level: usize) -> Result<Expression, ParseError> {
        const LEVELS: &[&[(Tok, BinaryOp)]] = &[
            &[(Tok::PipePipe, BinaryOp::LogOr)],
            &[(Tok::AmpAmp, BinaryOp::LogAnd)],
            &[(Tok::Pipe, BinaryOp::BitOr)],
            &[(Tok::Caret, BinaryOp::BitXor)],
            &[(Tok::Amp, BinaryOp::BitAnd)],
            &[
                (Tok::EqEqEq, BinaryOp::CaseEq),
                (Tok::NotEqEq, BinaryOp::CaseNe),
                (Tok::EqEq, BinaryOp::Eq),
                (Tok::NotEq, BinaryOp::Ne),
            ],
            &[
                (Tok::Lt, BinaryOp::Lt),
                (Tok::Le, BinaryOp::Le),
                (Tok::Gt, BinaryOp::Gt),
                (Tok::Ge, BinaryOp::Ge),
            ],
            &[(Tok::Shl, BinaryOp::Shl), (Tok::Shr, BinaryOp::Shr)],
            &[(Tok::Plus, BinaryOp::Add), (Tok::Minus, BinaryOp::Sub)],
            &[
                (Tok::Star, BinaryOp::Mul),
                (Tok::Slash, BinaryOp::Div),
                (Tok::Percent, BinaryOp::Mod),
            ],
        ];
        if level >= LEVELS.len() {
            return self.parse_unary();
        }
        let mut lhs = self.parse_binary(level + 1)?;
        loop {
            let mut matched = None;
            for (tok, op) in LEVELS[level] {
                if self.peek() == Some(tok) {
                    matched = Some(*op);
                    break;
                }
            }
            let Some(op) = matched else { break };
            self.bump();
            let id = self.alloc();
            let rhs = self.parse_binary(level + 1)?;
            let span = join_spans(lhs.span(), rhs.span());
            lhs = Expression::Binary {
                id,
                span,
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expression, ParseError> {
        let op = match self.peek() {
            Some(Tok::Plus) => Some(UnaryOp::Plus),
            Some(Tok::Minus) => Some(UnaryOp::Minus),
            Some(Tok::Bang) => Some(UnaryOp::LogNot),
            Some(Tok::Tilde) => Some(UnaryOp::BitNot),
            _ => None,
        };
        if let Some(op) = op {
            let t = self.bump();
            let id = self.alloc();
            let operand = self.parse_unary()?;
            let span = join_spans(tok_span(&t), operand.span());
            return Ok(Expression::Unary {
                id,
                span,
                op,
                operand: Box::new(operand),
            });
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<Expression, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Number(v)) => {
                let t = self.bump();
                let id = self.alloc();
                Ok(Expression::Literal {
                    id,
                    span: tok_span(&t),
                    width: 32,
                    value: v & 0xffff_ffff,
                })
            }
            Some(Tok::Sized(w, v)) => {
                let t = self.bump();
                let id = self.alloc();
                Ok(Expression::Literal {
                    id,
                    span: tok_span(&t),
                    width: w,
                    value: v,
                })
            }
            Some(Tok::LParen) => {
                self.bump();
                let e = self.parse_expr()?;
                self.expect(Tok::RParen, ")")?;
                Ok(e)
            }
            Some(Tok::LBrace) => {
                let open = self.bump();
                let id = self.alloc();
                let mut parts = Vec::new();
                loop {
                    parts.push(self.parse_expr()?);
                    if matches!(self.peek(), Some(Tok::Comma)) {
                        self.bump();
                    } else {
                        break;
                    }
                }
                let close = self.expect(Tok::RBrace, "}")?;
                Ok(Expression::Concat {
                    id,
                    span: join_spans(tok_span(&open), tok_span(&close)),
                    parts,
                })
            }
            Some(Tok::System(name)) => {
                let t = self.bump();
                let id = self.alloc();
                self.expect(Tok::LParen, "(")?;
                let operand = self.parse_expr()?;
                let close = self.expect(Tok::RParen, ")")?;
                Ok(Expression::SignCast {
                    id,
                    span: join_spans(tok_span(&t), tok_span(&close)),
                    signed: name == "$signed",
                    operand: Box::new(operand),
                })
            }
            Some(Tok::Ident(name)) => {
                let t = self.bump();
                if matches!(self.peek(), Some(Tok::LBracket)) {
                    self.bump();
                    let first = self.parse_expr()?;
                    if matches!(self.peek(), Some(Tok::Colon)) {
                        self.bump();
                        let (l, c) = self.peek_pos();
                        let msb = sema::const_value(&first).ok_or(ParseError::SelectOutOfRange {
                            name: name.clone(),
                            line: l,
                            col: c,
                        })? as u32;
                        let lsb = self.parse_const_u32()?;
                        let close = self.expect(Tok::RBracket, "]")?;
                        if msb < lsb {
                            return Err(ParseError::SelectOutOfRange {
                                name,
                                line: l,
                                col: c,
                            });
                        }
                        let id = self.alloc();
                        return Ok(Expression::PartSelect {
                            id,
                            span: join_spans(tok_span(&t), tok_span(&close)),
                            name,
                            msb,
                            lsb,
                        });
                    }
                    let close = self.expect(Tok::RBracket, "]")?;
                    let id = self.alloc();
                    return Ok(Expression::BitSelect {
                        id,
                        span: join_spans(tok_span(&t), tok_span(&close)),
                        name,
                        index: Box::new(first),
                    });
                }
                let id = self.alloc();
                Ok(Expression::Ref {
                    id,
                    span: tok_span(&t),
                    name,
                })
            }
            _ => Err(self.err("expression")),
        }
    }
}

fn tok_span(t: &Token) -> SourceSpan {
    SourceSpan {
        start_line: t.line,
        start_col: t.col,
        end_line: t.end_line,
        end_col: t.end_col,
    }
}

fn join_spans(a: SourceSpan, b: SourceSpan) -> SourceSpan {
    SourceSpan {
        start_line: a.start_line,
        start_col: a.start_col,
        end_line: b.end_line,
        end_col: b.end_col,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_module() {
        let m = parse("module t(input a, output y); assign y = a; endmodule").unwrap();
        assert_eq!(m.ports.len(), 2);
        assert_eq!(m.items.len(), 1);
        assert!(matches!(m.items[0], ModuleItem::Assign(_)));
    }

    #[test]
    fn undeclared_identifier_is_rejected() {
        let err = parse("module t(output y); assign y = x; endmodule").unwrap_err();
        assert!(matches!(err, ParseError::UndeclaredIdentifier { ref name, .. } if name == "x"));
    }

    #[test]
    fn branch_bodies_become_blocks() {
        let m = parse(
            "module t(input c, output reg y);\nalways @* if (c) y = 1'h1; else y = 1'h0;\nendmodule",
        )
        .unwrap();
        let ModuleItem::Always(a) = &m.items[0] else {
            panic!()
        };
        let Statement::Block(b) = &a.body else {
            panic!()
        };
        let Statement::If(i) = &b.statements[0] else {
            panic!()
        };
        assert!(matches!(i.then_branch.as_ref(), Statement::Block(_)));
        assert!(matches!(
            i.else_branch.as_deref(),
            Some(Statement::Block(_))
        ));
    }

    #[test]
    fn nonblocking_vs_le_disambiguation() {
        let m = parse(
            "module t(input clk, input [3:0] a, output reg y);\nalways @(posedge clk) y <= a <= 4'h3;\nendmodule",
        )
        .unwrap();
        let ModuleItem::Always(al) = &m.items[0] else {
            panic!()
        };
        let Statement::Block(b) = &al.body else {
            panic!()
        };
        assert!(matches!(&b.statements[0], Statement::NonBlocking(_)));
    }

    #[test]
    fn multiple_modules_rejected() {
        let src = "module a(output y); assign y = 1'h0; endmodule\nmodule b(output y); assign y = 1'h0; endmodule";
        assert!(matches!(
            parse(src),
            Err(ParseError::UnsupportedConstruct { .. })
        ));
    }

    #[test]
    fn for_must_be_statically_bounded() {
        let src = "module t(input [3:0] n, output reg [3:0] y);\nreg [3:0] i;\nalways @* begin for (i = 0; i < n; i = i + 1) begin y = y + 1'h1; end end\nendmodule";
        assert!(matches!(parse(src), Err(ParseError::UnboundedFor { .. })));
    }

    #[test]
    fn precedence_and_or() {
        // a | b & c parses as a | (b & c)
        let m =
            parse("module t(input a, input b, input c, output y); assign y = a | b & c; endmodule")
                .unwrap();
        let ModuleItem::Assign(ca) = &m.items[0] else {
            panic!()
        };
        let Expression::Binary { op, rhs, .. } = &ca.rhs else {
            panic!()
        };
        assert_eq!(*op, BinaryOp::BitOr);
        assert!(matches!(
            rhs.as_ref(),
            Expression::Binary {
                op: BinaryOp::BitAnd,
                ..
            }
        ));
    }

    #[test]
    fn deterministic_node_ids() {
        let src = "module t(input a, output y); assign y = a & a; endmodule";
        let m1 = parse(src).unwrap();
        let m2 = parse(src).unwrap();
        let ModuleItem::Assign(a1) = &m1.items[0] else {
            panic!()
        };
        let ModuleItem::Assign(a2) = &m2.items[0] else {
            panic!()
        };
        assert_eq!(a1.id, a2.id);
        assert_eq!(a1.rhs.id(), a2.rhs.id());
    }
}
