// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for the HLS-C subset.
//!
//! Directive placement follows the vendor convention: a `#pragma HLS` line at
//! the top of a loop or function body belongs to that loop or function. A
//! PIPELINE/UNROLL line elsewhere binds to the loop that follows it, and a
//! stray ARRAY_PARTITION line binds to the enclosing function.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

pub fn parse_source(src: &str) -> Result<Ast, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0, next_loop: 0, owners: Vec::new(), fn_pragmas: Vec::new() };
    let mut ast = p.unit()?;
    for f in ast.functions_mut() {
        canonicalize_pragmas(&mut f.pragmas);
        f.body.walk_mut(&mut |s| {
            if let Stmt::For(l) = s {
                canonicalize_pragmas(&mut l.pragmas);
            }
        });
    }
    Ok(ast)
}

const TYPE_KEYWORDS: &[&str] = &["void", "char", "short", "int", "unsigned", "signed", "long", "float", "double", "bool"];

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "while", "do", "switch", "goto", "break", "continue", "struct", "union", "typedef", "template", "class", "enum", "case",
    "default",
];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    next_loop: u32,
    /// Directive sinks of the enclosing loops/function, innermost last.
    owners: Vec<Vec<Pragma>>,
    fn_pragmas: Vec<Pragma>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn loc(&self) -> Loc {
        self.tokens[self.pos].loc
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == name)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { loc: self.loc(), message: message.into() })
    }

    fn expect_punct(&mut self, p: &str) -> Result<Loc, ParseError> {
        if self.is_punct(p) {
            Ok(self.advance().loc)
        } else {
            self.syntax(format!("expected `{p}`, found {}", describe(self.peek())))
        }
    }

    /// Expects the closer matching an opener at `open`; EOF is reported at
    /// the opener.
    fn expect_close(&mut self, close: &str, open: Loc) -> Result<(), ParseError> {
        if self.eat_punct(close) {
            return Ok(());
        }
        if matches!(self.peek(), Tok::Eof) {
            let opener = match close {
                ")" => "(",
                "]" => "[",
                _ => "{",
            };
            return Err(ParseError::Syntax { loc: open, message: format!("unclosed `{opener}`") });
        }
        self.syntax(format!("expected `{close}`, found {}", describe(self.peek())))
    }

    fn ident(&mut self) -> Result<(String, Loc), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let loc = self.advance().loc;
                Ok((s, loc))
            }
            other => self.syntax(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn unit(&mut self) -> Result<Ast, ParseError> {
        let mut items = Vec::new();
        while !matches!(self.peek(), Tok::Eof) {
            if let Tok::Pragma(_) = self.peek() {
                return Err(ParseError::Unsupported { loc: self.loc(), construct: "directive outside a function".into() });
            }
            if self.eat_punct(";") {
                continue;
            }
            items.extend(self.item()?);
        }
        Ok(Ast { items })
    }

    fn item(&mut self) -> Result<Vec<Item>, ParseError> {
        self.reject_unsupported()?;
        if !self.at_type_start() {
            return self.syntax(format!("expected a declaration, found {}", describe(self.peek())));
        }
        let ty = self.ty()?;
        let pointer = self.eat_punct("*");
        let (name, loc) = self.ident()?;
        if self.is_punct("(") {
            if pointer {
                return Err(ParseError::Unsupported { loc, construct: "pointer return type".into() });
            }
            return Ok(vec![Item::Function(self.function(ty, name, loc)?)]);
        }
        let decls = self.declarators(ty, pointer, name, loc)?;
        self.expect_punct(";")?;
        Ok(decls.into_iter().map(Item::Global).collect())
    }

    fn function(&mut self, ret: Type, name: String, loc: Loc) -> Result<Function, ParseError> {
        let open = self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.is_ident("void") && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.advance();
        }
        if !self.is_punct(")") {
            loop {
                let ty = self.ty()?;
                let pointer = self.eat_punct("*");
                let (pname, ploc) = self.ident()?;
                let dims = self.dims()?;
                params.push(VarDecl { ty, name: pname, pointer, dims, init: None, loc: ploc });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_close(")", open)?;
        self.owners.push(Vec::new());
        self.fn_pragmas.clear();
        let body = self.block(true)?;
        let mut pragmas = self.owners.pop().unwrap_or_default();
        pragmas.append(&mut self.fn_pragmas);
        Ok(Function { ret, name, params, body, pragmas, loc })
    }

    fn reject_unsupported(&self) -> Result<(), ParseError> {
        if let Tok::Ident(s) = self.peek() {
            if UNSUPPORTED_KEYWORDS.contains(&s.as_str()) {
                return Err(ParseError::Unsupported { loc: self.loc(), construct: format!("`{s}`") });
            }
        }
        Ok(())
    }

    fn at_type_start(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) if s == "const" || TYPE_KEYWORDS.contains(&s.as_str()) => true,
            Tok::Ident(s) if is_reserved(s) => false,
            Tok::Ident(_) => match (self.peek_at(1), self.peek_at(2), self.peek_at(3)) {
                (Tok::Ident(n), _, _) => !is_reserved(n),
                (Tok::Punct("::"), _, _) => true,
                (Tok::Punct("*"), Tok::Ident(_), Tok::Punct(p)) => matches!(*p, ";" | "=" | "["),
                _ => false,
            },
            _ => false,
        }
    }

    fn ty(&mut self) -> Result<Type, ParseError> {
        let mut is_const = false;
        if self.is_ident("const") {
            self.advance();
            is_const = true;
        }
        let (first, loc) = self.ident()?;
        let scalar = match first.as_str() {
            "void" => ScalarType::Void,
            "char" => ScalarType::Char,
            "float" => ScalarType::Float,
            "double" => ScalarType::Double,
            "int" => ScalarType::Int,
            "short" => {
                self.eat_word("int");
                ScalarType::Short
            }
            "unsigned" | "signed" => {
                let signed = first == "signed";
                match self.peek().clone() {
                    Tok::Ident(w) if w == "int" => {
                        self.advance();
                        if signed {
                            ScalarType::Int
                        } else {
                            ScalarType::Unsigned
                        }
                    }
                    Tok::Ident(w) if matches!(w.as_str(), "char" | "short" | "long") => {
                        self.advance();
                        if signed && w != "char" {
                            if w == "short" {
                                ScalarType::Short
                            } else {
                                ScalarType::Long
                            }
                        } else {
                            ScalarType::Other(format!("{first} {w}"))
                        }
                    }
                    _ if signed => ScalarType::Int,
                    _ => ScalarType::Unsigned,
                }
            }
            "long" => match self.peek().clone() {
                Tok::Ident(w) if w == "int" => {
                    self.advance();
                    ScalarType::Long
                }
                Tok::Ident(w) if w == "long" || w == "double" => {
                    self.advance();
                    ScalarType::Other(format!("long {w}"))
                }
                _ => ScalarType::Long,
            },
            _ if is_reserved(&first) => return Err(ParseError::Syntax { loc, message: format!("`{first}` is not a type") }),
            _ => {
                let mut name = first;
                while self.is_punct("::") {
                    self.advance();
                    let (part, _) = self.ident()?;
                    name.push_str("::");
                    name.push_str(&part);
                }
                if self.is_punct("<") {
                    return Err(ParseError::Unsupported { loc, construct: "template type".into() });
                }
                ScalarType::Other(name)
            }
        };
        Ok(Type { scalar, is_const })
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_ident(w) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn dims(&mut self) -> Result<Vec<u64>, ParseError> {
        let mut dims = Vec::new();
        while self.is_punct("[") {
            let open = self.advance().loc;
            match self.peek().clone() {
                Tok::Int(n) if n > 0 => {
                    self.advance();
                    dims.push(n as u64);
                }
                Tok::Int(_) => return self.syntax("array extent must be positive"),
                Tok::Punct("]") => return Err(ParseError::Unsupported { loc: open, construct: "unsized array".into() }),
                _ => return Err(ParseError::Unsupported { loc: self.loc(), construct: "non-constant array extent".into() }),
            }
            self.expect_close("]", open)?;
        }
        Ok(dims)
    }

    /// Parses the remaining declarators of `ty first, second = 1, ...`
    /// (without the trailing `;`).
    fn declarators(&mut self, ty: Type, pointer: bool, name: String, loc: Loc) -> Result<Vec<VarDecl>, ParseError> {
        let mut out = Vec::new();
        let (mut pointer, mut name, mut loc) = (pointer, name, loc);
        loop {
            let dims = self.dims()?;
            let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
            out.push(VarDecl { ty: ty.clone(), name, pointer, dims, init, loc });
            if !self.eat_punct(",") {
                break;
            }
            pointer = self.eat_punct("*");
            let (n, l) = self.ident()?;
            name = n;
            loc = l;
        }
        Ok(out)
    }

    /// Parses `{ ... }` or a single statement. `owned` marks a loop or
    /// function body, whose leading directives belong to the owner.
    fn block(&mut self, owned: bool) -> Result<Block, ParseError> {
        let loc = self.loc();
        if !self.is_punct("{") {
            if !owned {
                let stmts = self.statement()?;
                return Ok(Block { stmts, loc });
            }
            // Unbraced loop body.
            let stmts = self.statement()?;
            return Ok(Block { stmts, loc });
        }
        let open = self.advance().loc;
        let mut stmts = Vec::new();
        let mut pending: Vec<Pragma> = Vec::new();
        loop {
            if matches!(self.peek(), Tok::Eof) {
                return Err(ParseError::Syntax { loc: open, message: "unclosed `{`".into() });
            }
            if self.eat_punct("}") {
                break;
            }
            if let Tok::Pragma(text) = self.peek().clone() {
                let ploc = self.advance().loc;
                let pragma = parse_pragma(&text, ploc)?;
                let at_start = owned && stmts.is_empty();
                match pragma.kind.tag() {
                    _ if at_start => self.owner().push(pragma),
                    PragmaTag::Pipeline | PragmaTag::Unroll => pending.push(pragma),
                    PragmaTag::ArrayPartition => self.fn_pragmas.push(pragma),
                    PragmaTag::Dataflow | PragmaTag::Other => self.owner().push(pragma),
                }
                continue;
            }
            let is_loop = self.is_ident("for")
                || (matches!(self.peek(), Tok::Ident(_))
                    && matches!(self.peek_at(1), Tok::Punct(":"))
                    && matches!(self.peek_at(2), Tok::Ident(s) if s == "for"));
            if !pending.is_empty() && !is_loop {
                let flushed: Vec<Pragma> = std::mem::take(&mut pending);
                self.owner().extend(flushed);
            }
            if is_loop && !pending.is_empty() {
                let carried = std::mem::take(&mut pending);
                let mut parsed = self.statement_with(carried)?;
                stmts.append(&mut parsed);
            } else {
                let mut parsed = self.statement()?;
                stmts.append(&mut parsed);
            }
        }
        if !pending.is_empty() {
            self.owner().extend(pending);
        }
        Ok(Block { stmts, loc: open })
    }

    fn owner(&mut self) -> &mut Vec<Pragma> {
        if self.owners.is_empty() {
            self.owners.push(Vec::new());
        }
        self.owners.last_mut().unwrap()
    }

    fn statement(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.statement_with(Vec::new())
    }

    fn statement_with(&mut self, carried: Vec<Pragma>) -> Result<Vec<Stmt>, ParseError> {
        self.reject_unsupported()?;
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Punct(";") => {
                self.advance();
                Ok(Vec::new())
            }
            Tok::Punct("{") => Ok(vec![Stmt::Block(self.block(false)?)]),
            Tok::Pragma(_) => self.syntax("directive cannot be used here"),
            Tok::Ident(s) if s == "for" => Ok(vec![Stmt::For(self.for_loop(None, carried)?)]),
            Tok::Ident(s) if s == "if" => Ok(vec![self.if_stmt()?]),
            Tok::Ident(s) if s == "else" => self.syntax("`else` without `if`"),
            Tok::Ident(s) if s == "return" => {
                self.advance();
                let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
                self.expect_punct(";")?;
                Ok(vec![Stmt::Return(value, loc)])
            }
            Tok::Ident(label) if matches!(self.peek_at(1), Tok::Punct(":")) => {
                self.advance();
                self.advance();
                if !self.is_ident("for") {
                    return Err(ParseError::Unsupported { loc, construct: "label on a non-loop statement".into() });
                }
                Ok(vec![Stmt::For(self.for_loop(Some(label), carried)?)])
            }
            _ if self.at_type_start() => {
                let ty = self.ty()?;
                let pointer = self.eat_punct("*");
                let (name, nloc) = self.ident()?;
                let decls = self.declarators(ty, pointer, name, nloc)?;
                self.expect_punct(";")?;
                Ok(decls.into_iter().map(Stmt::Decl).collect())
            }
            _ => {
                let s = self.simple_statement()?;
                self.expect_punct(";")?;
                Ok(vec![s])
            }
        }
    }

    /// Assignment, increment or expression statement, without `;`.
    fn simple_statement(&mut self) -> Result<Stmt, ParseError> {
        let loc = self.loc();
        if self.is_punct("++") || self.is_punct("--") {
            let op = if self.advance().tok == Tok::Punct("++") { AssignOp::Inc } else { AssignOp::Dec };
            let target = self.unary()?;
            check_lvalue(&target)?;
            return Ok(Stmt::Assign(Assign { target, op, value: None, loc }));
        }
        let e = self.expr()?;
        let op = match self.peek() {
            Tok::Punct("=") => Some(AssignOp::Set),
            Tok::Punct("+=") => Some(AssignOp::Add),
            Tok::Punct("-=") => Some(AssignOp::Sub),
            Tok::Punct("*=") => Some(AssignOp::Mul),
            Tok::Punct("/=") => Some(AssignOp::Div),
            Tok::Punct("%=") => Some(AssignOp::Rem),
            Tok::Punct("++") => Some(AssignOp::Inc),
            Tok::Punct("--") => Some(AssignOp::Dec),
            _ => None,
        };
        match op {
            None => Ok(Stmt::Expr(e)),
            Some(op) => {
                check_lvalue(&e)?;
                self.advance();
                let value = if matches!(op, AssignOp::Inc | AssignOp::Dec) { None } else { Some(self.expr()?) };
                Ok(Stmt::Assign(Assign { target: e, op, value, loc }))
            }
        }
    }

    fn for_loop(&mut self, label: Option<String>, carried: Vec<Pragma>) -> Result<ForLoop, ParseError> {
        let loc = self.advance().loc;
        let id = LoopId(self.next_loop);
        self.next_loop += 1;
        let open = self.expect_punct("(")?;
        let init = if self.is_punct(";") {
            None
        } else if self.at_type_start() {
            let ty = self.ty()?;
            let pointer = self.eat_punct("*");
            let (name, nloc) = self.ident()?;
            let mut decls = self.declarators(ty, pointer, name, nloc)?;
            if decls.len() != 1 {
                return Err(ParseError::Unsupported { loc: nloc, construct: "multiple loop variables".into() });
            }
            Some(Box::new(Stmt::Decl(decls.remove(0))))
        } else {
            Some(Box::new(self.simple_statement()?))
        };
        self.expect_punct(";")?;
        let cond = if self.is_punct(";") { None } else { Some(self.expr()?) };
        self.expect_punct(";")?;
        let step = if self.is_punct(")") { None } else { Some(Box::new(self.simple_statement()?)) };
        self.expect_close(")", open)?;
        self.owners.push(carried);
        let body = self.block(true)?;
        let pragmas = self.owners.pop().unwrap_or_default();
        Ok(ForLoop { id, label, init, cond, step, body, pragmas, loc })
    }

    fn if_stmt(&mut self) -> Result<Stmt, ParseError> {
        let loc = self.advance().loc;
        let open = self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_close(")", open)?;
        let then_branch = self.block(false)?;
        let else_branch = if self.is_ident("else") {
            self.advance();
            Some(self.block(false)?)
        } else {
            None
        };
        Ok(Stmt::If(IfStmt { cond, then_branch, else_branch, loc }))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Punct(p) => binary_op(p),
                _ => None,
            };
            let Some(op) = op else { break };
            if op.precedence() < min_prec {
                break;
            }
            let oploc = self.advance().loc;
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, oploc);
        }
        if self.is_punct("?") {
            return Err(ParseError::Unsupported { loc: self.loc(), construct: "conditional operator".into() });
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let loc = self.loc();
        let kind = match self.peek() {
            Tok::Punct("-") => {
                self.advance();
                // `-3` is a literal, not a negation.
                match self.peek().clone() {
                    Tok::Int(v) => {
                        self.advance();
                        return Ok(Expr::new(ExprKind::Int(-v), loc));
                    }
                    Tok::Float { value, single } => {
                        self.advance();
                        return Ok(Expr::new(ExprKind::Float { value: -value, single }, loc));
                    }
                    _ => {}
                }
                ExprKind::Unary { op: UnaryOp::Neg, operand: Box::new(self.unary()?) }
            }
            Tok::Punct("!") => {
                self.advance();
                ExprKind::Unary { op: UnaryOp::Not, operand: Box::new(self.unary()?) }
            }
            Tok::Punct("*") => {
                self.advance();
                ExprKind::Deref(Box::new(self.unary()?))
            }
            Tok::Punct("&") => {
                self.advance();
                ExprKind::AddrOf(Box::new(self.unary()?))
            }
            Tok::Punct("+") => {
                self.advance();
                return self.unary();
            }
            _ => return self.primary(),
        };
        Ok(Expr::new(kind, loc))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(Expr::new(ExprKind::Int(v), loc))
            }
            Tok::Float { value, single } => {
                self.advance();
                Ok(Expr::new(ExprKind::Float { value, single }, loc))
            }
            Tok::Punct("(") => {
                let open = self.advance().loc;
                if self.at_cast() {
                    return Err(ParseError::Unsupported { loc: open, construct: "cast expression".into() });
                }
                let e = self.expr()?;
                self.expect_close(")", open)?;
                Ok(e)
            }
            Tok::Ident(s) if s == "new" => {
                self.advance();
                let ty = self.ty()?;
                let open = self.expect_punct("[")?;
                let count = self.expr()?;
                self.expect_close("]", open)?;
                if self.is_punct("[") {
                    return Err(ParseError::Unsupported { loc, construct: "multi-dimensional new".into() });
                }
                Ok(Expr::new(ExprKind::New { ty, count: Box::new(count) }, loc))
            }
            Tok::Ident(s) if s == "sizeof" => {
                self.advance();
                let open = self.expect_punct("(")?;
                let ty = self.ty()?;
                self.expect_close(")", open)?;
                Ok(Expr::new(ExprKind::SizeOf(ty), loc))
            }
            Tok::Ident(s) if is_reserved(&s) || TYPE_KEYWORDS.contains(&s.as_str()) => {
                self.syntax(format!("unexpected keyword `{s}`"))
            }
            Tok::Ident(name) => {
                self.advance();
                if self.is_punct("(") {
                    let open = self.advance().loc;
                    let mut args = Vec::new();
                    if !self.is_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                    }
                    self.expect_close(")", open)?;
                    return Ok(Expr::new(ExprKind::Call { name, args }, loc));
                }
                if self.is_punct("[") {
                    let mut indices = Vec::new();
                    while self.is_punct("[") {
                        let open = self.advance().loc;
                        indices.push(self.expr()?);
                        self.expect_close("]", open)?;
                    }
                    return Ok(Expr::new(ExprKind::Index { array: name, indices }, loc));
                }
                if self.is_punct("::") || self.is_punct(".") {
                    return Err(ParseError::Unsupported { loc, construct: "qualified name".into() });
                }
                Ok(Expr::new(ExprKind::Var(name), loc))
            }
            Tok::Eof => self.syntax("unexpected end of input"),
            other => self.syntax(format!("unexpected {}", describe(&other))),
        }
    }

    fn at_cast(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == "const" || TYPE_KEYWORDS.contains(&s.as_str()))
    }
}

fn is_reserved(s: &str) -> bool {
    matches!(s, "for" | "if" | "else" | "return" | "new" | "sizeof" | "const") || UNSUPPORTED_KEYWORDS.contains(&s)
}

fn check_lvalue(e: &Expr) -> Result<(), ParseError> {
    match e.kind {
        ExprKind::Var(_) | ExprKind::Index { .. } | ExprKind::Deref(_) => Ok(()),
        _ => Err(ParseError::Syntax { loc: e.loc, message: "assignment to a non-lvalue".into() }),
    }
}

fn binary_op(p: &str) -> Option<BinaryOp> {
    Some(match p {
        "+" => BinaryOp::Add,
        "-" => BinaryOp::Sub,
        "*" => BinaryOp::Mul,
        "/" => BinaryOp::Div,
        "%" => BinaryOp::Rem,
        "<" => BinaryOp::Lt,
        "<=" => BinaryOp::Le,
        ">" => BinaryOp::Gt,
        ">=" => BinaryOp::Ge,
        "==" => BinaryOp::Eq,
        "!=" => BinaryOp::Ne,
        "&&" => BinaryOp::And,
        "||" => BinaryOp::Or,
        _ => return None,
    })
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Float { value, .. } => format!("`{value}`"),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Pragma(_) => "directive".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses the text after `#pragma HLS`.
pub fn parse_pragma(text: &str, loc: Loc) -> Result<Pragma, ParseError> {
    let mut words = text.split_whitespace();
    let Some(kind_word) = words.next() else {
        return Err(ParseError::Syntax { loc, message: "empty directive".into() });
    };
    let mut opts: Vec<(String, Option<String>)> = Vec::new();
    for w in words {
        match w.split_once('=') {
            Some((k, v)) => opts.push((k.to_ascii_lowercase(), Some(v.to_string()))),
            None => opts.push((w.to_ascii_lowercase(), None)),
        }
    }
    let bad = |message: String| ParseError::Syntax { loc, message };
    let int_opt = |key: &str, v: &Option<String>| -> Result<i64, ParseError> {
        v.as_deref().and_then(|s| s.parse::<i64>().ok()).ok_or_else(|| bad(format!("`{key}` needs an integer value")))
    };
    let kind = match kind_word.to_ascii_uppercase().as_str() {
        "PIPELINE" => {
            let mut ii = None;
            for (k, v) in &opts {
                match k.as_str() {
                    "ii" => {
                        let n = int_opt("II", v)?;
                        if n < 1 {
                            return Err(bad("II must be at least 1".into()));
                        }
                        ii = Some(n as u32);
                    }
                    _ => return Err(ParseError::Unsupported { loc, construct: format!("PIPELINE option `{k}`") }),
                }
            }
            PragmaKind::Pipeline { ii }
        }
        "UNROLL" => {
            let mut factor = None;
            for (k, v) in &opts {
                match k.as_str() {
                    "factor" => {
                        let n = int_opt("factor", v)?;
                        if n < 2 {
                            return Err(bad("unroll factor must be at least 2".into()));
                        }
                        factor = Some(n as u32);
                    }
                    _ => return Err(ParseError::Unsupported { loc, construct: format!("UNROLL option `{k}`") }),
                }
            }
            PragmaKind::Unroll { factor }
        }
        "ARRAY_PARTITION" => {
            let mut variable = None;
            let mut ptype = PartitionType::Complete;
            let mut factor = None;
            let mut dim = 1i64;
            for (k, v) in &opts {
                match (k.as_str(), v) {
                    ("variable", Some(name)) => variable = Some(name.clone()),
                    ("type", Some(t)) => ptype = partition_type(t).ok_or_else(|| bad(format!("unknown partition type `{t}`")))?,
                    ("factor", _) => {
                        let n = int_opt("factor", v)?;
                        if n < 2 {
                            return Err(bad("partition factor must be at least 2".into()));
                        }
                        factor = Some(n as u32);
                    }
                    ("dim", _) => dim = int_opt("dim", v)?,
                    (w, None) if partition_type(w).is_some() => ptype = partition_type(w).unwrap(),
                    _ => return Err(ParseError::Unsupported { loc, construct: format!("ARRAY_PARTITION option `{k}`") }),
                }
            }
            let variable = variable.ok_or_else(|| bad("ARRAY_PARTITION needs `variable=`".into()))?;
            PragmaKind::ArrayPartition { variable, ptype, factor, dim }
        }
        "DATAFLOW" => {
            if let Some((k, _)) = opts.first() {
                return Err(ParseError::Unsupported { loc, construct: format!("DATAFLOW option `{k}`") });
            }
            PragmaKind::Dataflow
        }
        _ => PragmaKind::Other { text: text.split_whitespace().collect::<Vec<_>>().join(" ") },
    };
    Ok(Pragma { kind, loc })
}

fn partition_type(s: &str) -> Option<PartitionType> {
    match s.to_ascii_lowercase().as_str() {
        "cyclic" => Some(PartitionType::Cyclic),
        "block" => Some(PartitionType::Block),
        "complete" => Some(PartitionType::Complete),
        _ => None,
    }
}
