//! Lexer and recursive-descent parser for the model description language.
//!
//! A program has three sections, in order:
//!
//! ```text
//! params { alpha: [0, 1]  beta: [0, 20] }
//! state reset_per_block { V = vector(n_actions, 0.5)  prev = -1 }
//! trial {
//!   choose(action, softmax(V, beta))
//!   V[action] += alpha * (reward - V[action])
//! }
//! ```
//!
//! The `state` section is optional; `reset_per_block` reinitializes state at
//! every block boundary. Identifier resolution happens during parsing:
//! parameters, then state variables, then trial-local variables (created on
//! first plain assignment), then trial input slots. `#` starts a line comment.

use crate::binding::{Slot, SLOT_NAMES};
use crate::params::{ParamDef, ParameterSpec};

use super::ast::*;
use super::MdlError;

const KEYWORDS: &[&str] = &[
    "params",
    "state",
    "trial",
    "reset_per_block",
    "if",
    "else",
    "choose",
    "vector",
    "matrix",
    "n_actions",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Assign,
    PlusAssign,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{}'", s),
            Tok::Num(x) => format!("number {}", x),
            Tok::Eof => "end of input".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Colon => "':'".into(),
            Tok::Assign => "'='".into(),
            Tok::PlusAssign => "'+='".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Lt => "'<'".into(),
            Tok::Le => "'<='".into(),
            Tok::Gt => "'>'".into(),
            Tok::Ge => "'>='".into(),
            Tok::EqEq => "'=='".into(),
            Tok::Ne => "'!='".into(),
            Tok::AndAnd => "'&&'".into(),
            Tok::OrOr => "'||'".into(),
            Tok::Bang => "'!'".into(),
        }
    }
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Lexed>, MdlError> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    macro_rules! push {
        ($t:expr, $n:expr) => {{
            out.push(Lexed {
                tok: $t,
                line,
                col,
            });
            i += $n;
            col += $n;
        }};
    }
    while i < bytes.len() {
        let c = bytes[i];
        let next = bytes.get(i + 1).copied();
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < bytes.len() && bytes[i] != '\n' {
                    i += 1;
                }
            }
            '{' => push!(Tok::LBrace, 1),
            '}' => push!(Tok::RBrace, 1),
            '(' => push!(Tok::LParen, 1),
            ')' => push!(Tok::RParen, 1),
            '[' => push!(Tok::LBracket, 1),
            ']' => push!(Tok::RBracket, 1),
            ',' => push!(Tok::Comma, 1),
            ':' => push!(Tok::Colon, 1),
            '*' => push!(Tok::Star, 1),
            '/' => push!(Tok::Slash, 1),
            '-' => push!(Tok::Minus, 1),
            '+' if next == Some('=') => push!(Tok::PlusAssign, 2),
            '+' => push!(Tok::Plus, 1),
            '=' if next == Some('=') => push!(Tok::EqEq, 2),
            '=' => push!(Tok::Assign, 1),
            '<' if next == Some('=') => push!(Tok::Le, 2),
            '<' => push!(Tok::Lt, 1),
            '>' if next == Some('=') => push!(Tok::Ge, 2),
            '>' => push!(Tok::Gt, 1),
            '!' if next == Some('=') => push!(Tok::Ne, 2),
            '!' => push!(Tok::Bang, 1),
            '&' if next == Some('&') => push!(Tok::AndAnd, 2),
            '|' if next == Some('|') => push!(Tok::OrOr, 2),
            c if c.is_ascii_digit() || (c == '.' && next.map_or(false, |n| n.is_ascii_digit())) => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = bytes[start..i].iter().collect();
                let x: f64 = text.parse().map_err(|_| MdlError::Syntax {
                    line,
                    col,
                    msg: format!("bad number literal '{}'", text),
                })?;
                out.push(Lexed {
                    tok: Tok::Num(x),
                    line,
                    col,
                });
                col += i - start;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                out.push(Lexed {
                    tok: Tok::Ident(text),
                    line,
                    col,
                });
                col += i - start;
            }
            other => {
                return Err(MdlError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character '{}'", other),
                })
            }
        }
    }
    out.push(Lexed {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    params: Vec<ParamDef>,
    state: Vec<StateDecl>,
    locals: Vec<String>,
    used_params: Vec<bool>,
    used_slots: Vec<Slot>,
    choose_slots: Vec<Slot>,
}

impl Parser {
    fn peek(&self) -> &Lexed {
        &self.toks[self.pos]
    }

    fn here(&self) -> (usize, usize) {
        let l = &self.toks[self.pos];
        (l.line, l.col)
    }

    fn err(&self, msg: impl Into<String>) -> MdlError {
        let (line, col) = self.here();
        MdlError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if &self.toks[self.pos].tok == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), MdlError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.err(format!(
                "expected {}, found {}",
                t.describe(),
                self.peek().tok.describe()
            )))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), MdlError> {
        match &self.toks[self.pos].tok {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            other => Err(self.err(format!("expected '{}', found {}", kw, other.describe()))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.toks[self.pos].tok, Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> Result<String, MdlError> {
        match &self.toks[self.pos].tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            other => Err(self.err(format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn signed_num(&mut self) -> Result<f64, MdlError> {
        let neg = self.eat(&Tok::Minus);
        match self.bump() {
            Tok::Num(x) => Ok(if neg { -x } else { x }),
            other => {
                self.pos -= 1;
                Err(self.err(format!("expected number, found {}", other.describe())))
            }
        }
    }

    fn resolve(&mut self, name: &str) -> Result<VarRef, MdlError> {
        if let Some(i) = self.params.iter().position(|p| p.name == name) {
            self.used_params[i] = true;
            return Ok(VarRef::Param(i));
        }
        if let Some(i) = self.state.iter().position(|s| s.name == name) {
            return Ok(VarRef::State(i));
        }
        if let Some(i) = self.locals.iter().position(|l| l == name) {
            return Ok(VarRef::Local(i));
        }
        if let Some(slot) = Slot::from_name(name) {
            if !self.used_slots.contains(&slot) {
                self.used_slots.push(slot);
            }
            return Ok(VarRef::Binding(slot));
        }
        Err(MdlError::UnknownIdentifier(name.to_string()))
    }

    fn parse_params(&mut self) -> Result<(), MdlError> {
        self.expect_keyword("params")?;
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            let name = self.ident()?;
            if KEYWORDS.contains(&name.as_str()) || Builtin::from_name(&name).is_some() {
                return Err(MdlError::Invalid(format!(
                    "'{}' is a reserved word and cannot name a parameter",
                    name
                )));
            }
            if SLOT_NAMES.iter().any(|&(n, _)| n == name) {
                return Err(MdlError::Invalid(format!(
                    "'{}' is a trial input and cannot name a parameter",
                    name
                )));
            }
            if self.params.iter().any(|p| p.name == name) {
                return Err(MdlError::DuplicateParameter(name));
            }
            self.expect(Tok::Colon)?;
            self.expect(Tok::LBracket)?;
            let lo = self.signed_num()?;
            self.expect(Tok::Comma)?;
            let hi = self.signed_num()?;
            self.expect(Tok::RBracket)?;
            if !(lo < hi) {
                return Err(MdlError::Invalid(format!(
                    "parameter '{}' needs lower < upper, got [{}, {}]",
                    name, lo, hi
                )));
            }
            self.params.push(ParamDef::new(&name, lo, hi));
            self.used_params.push(false);
            let _ = self.eat(&Tok::Comma);
        }
        Ok(())
    }

    fn parse_dim(&mut self) -> Result<Dim, MdlError> {
        if self.at_keyword("set_size") {
            self.bump();
            return Ok(Dim::SetSize);
        }
        if self.at_keyword("n_actions") {
            self.bump();
            return Ok(Dim::NActions);
        }
        match self.bump() {
            Tok::Num(x) if x.fract() == 0.0 && x >= 1.0 => Ok(Dim::Lit(x as usize)),
            other => {
                self.pos -= 1;
                Err(self.err(format!(
                    "expected a dimension (positive integer, set_size, or n_actions), found {}",
                    other.describe()
                )))
            }
        }
    }

    fn const_expr(&mut self) -> Result<f64, MdlError> {
        let e = self.parse_expr()?;
        const_fold(&e).ok_or_else(|| {
            MdlError::Invalid("state initializers must be constant expressions".into())
        })
    }

    fn parse_state(&mut self) -> Result<bool, MdlError> {
        self.expect_keyword("state")?;
        let reset = if self.at_keyword("reset_per_block") {
            self.bump();
            true
        } else {
            false
        };
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            let name = self.ident()?;
            if KEYWORDS.contains(&name.as_str()) || Builtin::from_name(&name).is_some() {
                return Err(MdlError::Invalid(format!(
                    "'{}' is a reserved word and cannot name a state variable",
                    name
                )));
            }
            if SLOT_NAMES.iter().any(|&(n, _)| n == name)
                || self.params.iter().any(|p| p.name == name)
                || self.state.iter().any(|s| s.name == name)
            {
                return Err(MdlError::Invalid(format!(
                    "state variable '{}' collides with an existing name",
                    name
                )));
            }
            self.expect(Tok::Assign)?;
            let init = if self.at_keyword("vector") {
                self.bump();
                self.expect(Tok::LParen)?;
                let dim = self.parse_dim()?;
                self.expect(Tok::Comma)?;
                let fill = self.const_expr()?;
                self.expect(Tok::RParen)?;
                StateInit::Vector(dim, fill)
            } else if self.at_keyword("matrix") {
                self.bump();
                self.expect(Tok::LParen)?;
                let rows = self.parse_dim()?;
                self.expect(Tok::Comma)?;
                let cols = self.parse_dim()?;
                self.expect(Tok::Comma)?;
                let fill = self.const_expr()?;
                self.expect(Tok::RParen)?;
                StateInit::Matrix(rows, cols, fill)
            } else {
                StateInit::Scalar(self.const_expr()?)
            };
            self.state.push(StateDecl { name, init });
            let _ = self.eat(&Tok::Comma);
        }
        Ok(reset)
    }

    fn parse_stmts(&mut self, depth: usize) -> Result<Vec<Stmt>, MdlError> {
        let mut out = Vec::new();
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            out.push(self.parse_stmt(depth)?);
        }
        Ok(out)
    }

    fn parse_stmt(&mut self, depth: usize) -> Result<Stmt, MdlError> {
        if self.at_keyword("if") {
            self.bump();
            let cond = self.parse_cond()?;
            let then_branch = self.parse_stmts(depth + 1)?;
            let else_branch = if self.at_keyword("else") {
                self.bump();
                self.parse_stmts(depth + 1)?
            } else {
                Vec::new()
            };
            return Ok(Stmt::If {
                cond,
                then_branch,
                else_branch,
            });
        }
        if self.at_keyword("choose") {
            if depth > 0 {
                return Err(MdlError::Invalid(
                    "choose must appear at the top level of the trial block".into(),
                ));
            }
            self.bump();
            self.expect(Tok::LParen)?;
            let name = self.ident()?;
            let slot = match Slot::from_name(&name) {
                Some(s) if matches!(s, Slot::Action | Slot::Choice | Slot::Action1 | Slot::Action2) => s,
                _ => {
                    return Err(MdlError::Invalid(format!(
                        "choose target '{}' is not a decision variable",
                        name
                    )))
                }
            };
            self.expect(Tok::Comma)?;
            let probs = self.parse_expr()?;
            self.expect(Tok::RParen)?;
            self.choose_slots.push(slot);
            if !self.used_slots.contains(&slot) {
                self.used_slots.push(slot);
            }
            return Ok(Stmt::Choose {
                var: Ident {
                    name,
                    target: VarRef::Binding(slot),
                },
                probs,
            });
        }
        // assignment
        let name = self.ident()?;
        let mut indices = Vec::new();
        while self.eat(&Tok::LBracket) {
            loop {
                indices.push(self.parse_expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBracket)?;
        }
        let op = if self.eat(&Tok::Assign) {
            AssignOp::Set
        } else if self.eat(&Tok::PlusAssign) {
            AssignOp::Add
        } else {
            return Err(self.err(format!(
                "expected '=' or '+=' after '{}', found {}",
                name,
                self.peek().tok.describe()
            )));
        };
        let target = self.resolve_target(&name, indices.is_empty(), op)?;
        let value = self.parse_expr()?;
        Ok(Stmt::Assign {
            target: Ident {
                name,
                target,
            },
            indices,
            op,
            value,
        })
    }

    fn resolve_target(
        &mut self,
        name: &str,
        plain: bool,
        op: AssignOp,
    ) -> Result<VarRef, MdlError> {
        if self.params.iter().any(|p| p.name == name) {
            return Err(MdlError::Invalid(format!(
                "cannot assign to parameter '{}'",
                name
            )));
        }
        if let Some(i) = self.state.iter().position(|s| s.name == name) {
            return Ok(VarRef::State(i));
        }
        if let Some(i) = self.locals.iter().position(|l| l == name) {
            return Ok(VarRef::Local(i));
        }
        if Slot::from_name(name).is_some() {
            return Err(MdlError::Invalid(format!(
                "cannot assign to trial input '{}'",
                name
            )));
        }
        if KEYWORDS.contains(&name) || Builtin::from_name(name).is_some() {
            return Err(MdlError::Invalid(format!(
                "'{}' is a reserved word and cannot name a variable",
                name
            )));
        }
        if plain && op == AssignOp::Set {
            self.locals.push(name.to_string());
            Ok(VarRef::Local(self.locals.len() - 1))
        } else {
            Err(MdlError::UnknownIdentifier(name.to_string()))
        }
    }

    fn parse_cond(&mut self) -> Result<Cond, MdlError> {
        let mut left = self.parse_and_cond()?;
        while self.eat(&Tok::OrOr) {
            let right = self.parse_and_cond()?;
            left = Cond::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_and_cond(&mut self) -> Result<Cond, MdlError> {
        let mut left = self.parse_not_cond()?;
        while self.eat(&Tok::AndAnd) {
            let right = self.parse_not_cond()?;
            left = Cond::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_not_cond(&mut self) -> Result<Cond, MdlError> {
        if self.eat(&Tok::Bang) {
            return Ok(Cond::Not(Box::new(self.parse_not_cond()?)));
        }
        if self.peek().tok == Tok::LParen {
            // either a parenthesized condition or an expression; backtrack
            let snap_pos = self.pos;
            let snap_locals = self.locals.len();
            self.bump();
            if let Ok(c) = self.parse_cond() {
                if self.eat(&Tok::RParen) {
                    return Ok(c);
                }
            }
            self.pos = snap_pos;
            self.locals.truncate(snap_locals);
        }
        self.parse_cmp()
    }

    fn parse_cmp(&mut self) -> Result<Cond, MdlError> {
        let left = self.parse_expr()?;
        let op = match self.peek().tok {
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            Tok::EqEq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            _ => return Err(self.err("expected a comparison operator")),
        };
        self.bump();
        let right = self.parse_expr()?;
        Ok(Cond::Cmp(op, left, right))
    }

    fn parse_expr(&mut self) -> Result<Expr, MdlError> {
        let mut left = self.parse_term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let right = self.parse_term()?;
            left = Expr::Bin(op, Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_term(&mut self) -> Result<Expr, MdlError> {
        let mut left = self.parse_unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let right = self.parse_unary()?;
            left = Expr::Bin(op, Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_unary(&mut self) -> Result<Expr, MdlError> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.parse_unary()?)));
        }
        self.parse_postfix()
    }

    fn parse_postfix(&mut self) -> Result<Expr, MdlError> {
        let mut e = self.parse_atom()?;
        while self.peek().tok == Tok::LBracket {
            let (base, mut indices) = match e {
                Expr::Var(id) => (id, Vec::new()),
                Expr::Index { base, indices } => (base, indices),
                _ => return Err(self.err("only variables can be indexed")),
            };
            self.bump();
            loop {
                indices.push(self.parse_expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBracket)?;
            e = Expr::Index { base, indices };
        }
        Ok(e)
    }

    fn parse_atom(&mut self) -> Result<Expr, MdlError> {
        match self.peek().tok.clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(Expr::Num(x))
            }
            Tok::LParen => {
                self.bump();
                let e = self.parse_expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBracket => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat(&Tok::RBracket) {
                    loop {
                        items.push(self.parse_expr()?);
                        if self.eat(&Tok::RBracket) {
                            break;
                        }
                        self.expect(Tok::Comma)?;
                    }
                }
                if items.is_empty() {
                    return Err(self.err("vector literals cannot be empty"));
                }
                Ok(Expr::VecLit(items))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek().tok == Tok::LParen {
                    let builtin = Builtin::from_name(&name).ok_or_else(|| {
                        MdlError::UnknownIdentifier(format!("{} (not a builtin function)", name))
                    })?;
                    self.bump();
                    let mut args = Vec::new();
                    if !self.eat(&Tok::RParen) {
                        loop {
                            args.push(self.parse_expr()?);
                            if self.eat(&Tok::RParen) {
                                break;
                            }
                            self.expect(Tok::Comma)?;
                        }
                    }
                    check_arity(builtin, args.len())?;
                    return Ok(Expr::Call(builtin, args));
                }
                let target = self.resolve(&name)?;
                Ok(Expr::Var(Ident { name, target }))
            }
            other => Err(self.err(format!("unexpected {}", other.describe()))),
        }
    }
}

fn check_arity(b: Builtin, n: usize) -> Result<(), MdlError> {
    let ok = match b {
        Builtin::Exp | Builtin::Log | Builtin::Abs | Builtin::Sum | Builtin::Argmax => n == 1,
        Builtin::Min | Builtin::Max | Builtin::Pow => n == 2,
        Builtin::Softmax => n == 1 || n == 2,
        Builtin::Clamp => n == 3,
    };
    if ok {
        Ok(())
    } else {
        Err(MdlError::Invalid(format!(
            "{} does not take {} argument(s)",
            b.name(),
            n
        )))
    }
}

fn const_fold(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(x) => Some(*x),
        Expr::Neg(inner) => const_fold(inner).map(|x| -x),
        Expr::Bin(op, a, b) => {
            let a = const_fold(a)?;
            let b = const_fold(b)?;
            Some(match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b.abs() < crate::prob::DIV_EPS {
                        return None;
                    }
                    a / b
                }
            })
        }
        _ => None,
    }
}

pub fn parse(src: &str) -> Result<ModelProgram, MdlError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        params: Vec::new(),
        state: Vec::new(),
        locals: Vec::new(),
        used_params: Vec::new(),
        used_slots: Vec::new(),
        choose_slots: Vec::new(),
    };
    p.parse_params()?;
    let reset_per_block = if p.at_keyword("state") {
        p.parse_state()?
    } else {
        false
    };
    p.expect_keyword("trial")?;
    let trial = p.parse_stmts(0)?;
    p.expect(Tok::Eof)?;

    if let Some(i) = p.used_params.iter().position(|u| !u) {
        return Err(MdlError::UnusedParameter(p.params[i].name.clone()));
    }
    let uses_set_size_dim = p.state.iter().any(|s| {
        matches!(
            s.init,
            StateInit::Vector(Dim::SetSize, _)
                | StateInit::Matrix(Dim::SetSize, _, _)
                | StateInit::Matrix(_, Dim::SetSize, _)
        )
    });
    if uses_set_size_dim && !reset_per_block {
        return Err(MdlError::Invalid(
            "state sized by set_size requires reset_per_block".into(),
        ));
    }
    match p.choose_slots.as_slice() {
        [Slot::Action] | [Slot::Choice] => {}
        [Slot::Action1, Slot::Action2] => {}
        [] => return Err(MdlError::Invalid("the trial block never chooses".into())),
        other => {
            return Err(MdlError::Invalid(format!(
                "unsupported decision sequence: {:?}",
                other.iter().map(|s| s.name()).collect::<Vec<_>>()
            )))
        }
    }
    let mut used_slots = p.used_slots;
    used_slots.sort_by_key(|s| s.index());

    Ok(ModelProgram {
        params: ParameterSpec(p.params),
        reset_per_block,
        state: p.state,
        trial,
        n_locals: p.locals.len(),
        choose_slots: p.choose_slots,
        used_slots,
        source: src.to_string(),
    })
}
