use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{BinOp, BoolExpr, CmpOp, DistSpec, DistSpecError, Expr, Program, Stmt, Universe};

const KEYWORDS: &[&str] = &[
    "var", "skip", "observe", "if", "else", "while", "return", "true", "false", "and", "or", "not",
];

pub(crate) fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    Unexpected { expected: String, found: String },
    UnknownVariable(String),
    BadUniverse(String),
    BadDistribution(DistSpecError),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::Unexpected { expected, found } => {
                write!(f, "expected {expected}, found {found}")
            }
            ParseErrorKind::UnknownVariable(v) => write!(f, "undeclared variable `{v}`"),
            ParseErrorKind::BadUniverse(m) => write!(f, "{m}"),
            ParseErrorKind::BadDistribution(e) => write!(f, "invalid distribution: {e}"),
        }
    }
}

/// A syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const SYMBOLS: &[&str] = &[
    ":=", "<=", ">=", "==", "!=", "<", ">", "=", "+", "-", "*", "/", "(", ")", "{", "}", ";", ":",
    ",", "~",
];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut column) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, column: &mut usize, n: usize| {
        for k in 0..n {
            if chars[*i + k] == '\n' {
                *line += 1;
                *column = 1;
            } else {
                *column += 1;
            }
        }
        *i += n;
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut column, 1);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut column, 1);
            }
            continue;
        }
        let (l, col) = (line, column);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let mut end = i;
            while end < chars.len() && (chars[end].is_ascii_alphanumeric() || chars[end] == '_') {
                end += 1;
            }
            let word: String = chars[start..end].iter().collect();
            advance(&mut i, &mut line, &mut column, end - start);
            out.push(Token { tok: Tok::Ident(word), line: l, column: col });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let mut end = i;
            while end < chars.len() && chars[end].is_ascii_digit() {
                end += 1;
            }
            let digits: String = chars[start..end].iter().collect();
            advance(&mut i, &mut line, &mut column, end - start);
            let n = digits.parse().expect("ascii digits");
            out.push(Token { tok: Tok::Int(n), line: l, column: col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                advance(&mut i, &mut line, &mut column, sym.len());
                out.push(Token { tok: Tok::Sym(sym), line: l, column: col });
            }
            None => {
                return Err(ParseError { line, column, kind: ParseErrorKind::UnexpectedChar(c) })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, column });
    Ok(out)
}

struct Parser<'u> {
    toks: Vec<Token>,
    pos: usize,
    universe: &'u Universe,
}

type PResult<T> = Result<T, ParseError>;

impl<'u> Parser<'u> {
    fn new(src: &str, universe: &'u Universe) -> PResult<Self> {
        Ok(Parser { toks: lex(src)?, pos: 0, universe })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError { line: t.line, column: t.column, kind }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        self.error(ParseErrorKind::Unexpected {
            expected: expected.to_owned(),
            found: self.peek().to_string(),
        })
    }

    fn is_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if self.is_sym(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> PResult<()> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{sym}`")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => Err(self.unexpected("end of input")),
        }
    }

    fn variable(&mut self) -> PResult<usize> {
        match self.peek().clone() {
            Tok::Ident(name) if !is_keyword(&name) => match self.universe.lookup(&name) {
                Some(v) => {
                    self.bump();
                    Ok(v)
                }
                None => Err(self.error(ParseErrorKind::UnknownVariable(name))),
            },
            _ => Err(self.unexpected("a variable")),
        }
    }

    fn integer(&mut self) -> PResult<BigInt> {
        let negative = self.eat_sym("-");
        match self.bump() {
            Tok::Int(n) => Ok(if negative { -n } else { n }),
            _ => {
                self.pos -= 1;
                Err(self.unexpected("an integer"))
            }
        }
    }

    // statements

    /// `stmt (";" stmt)*`, right-nested. Stops before `return`, `}` or end.
    fn stmt_seq(&mut self) -> PResult<Stmt> {
        let first = self.stmt_atom()?;
        if self.is_sym(";") {
            let next_ends = matches!(self.peek_at(1), Tok::Eof | Tok::Sym("}"))
                || matches!(self.peek_at(1), Tok::Ident(s) if s == "return");
            if next_ends {
                if !matches!(self.peek_at(1), Tok::Ident(_)) {
                    self.bump();
                }
                return Ok(first);
            }
            self.bump();
            return Ok(Stmt::seq(first, self.stmt_seq()?));
        }
        Ok(first)
    }

    fn block(&mut self) -> PResult<Stmt> {
        self.expect_sym("{")?;
        let s = self.stmt_seq()?;
        self.expect_sym("}")?;
        Ok(s)
    }

    fn stmt_atom(&mut self) -> PResult<Stmt> {
        if self.eat_kw("skip") {
            return Ok(Stmt::Skip);
        }
        if self.eat_kw("observe") {
            self.expect_sym("(")?;
            let b = self.bexp()?;
            self.expect_sym(")")?;
            return Ok(Stmt::Observe(b));
        }
        if self.eat_kw("if") {
            let c = self.bexp()?;
            let then = self.block()?;
            let otherwise = if self.eat_kw("else") { self.block()? } else { Stmt::Skip };
            return Ok(Stmt::if_else(c, then, otherwise));
        }
        if self.eat_kw("while") {
            let c = self.bexp()?;
            let body = self.block()?;
            return Ok(Stmt::while_loop(c, body));
        }
        if matches!(self.peek(), Tok::Ident(s) if !is_keyword(s)) {
            let x = self.variable()?;
            if self.eat_sym(":=") {
                return Ok(Stmt::Assign(x, self.expr()?));
            }
            if self.eat_sym("~") {
                return Ok(Stmt::RAssign(x, self.dist_spec()?));
            }
            return Err(self.unexpected("`:=` or `~`"));
        }
        Err(self.unexpected("a statement"))
    }

    fn dist_spec(&mut self) -> PResult<DistSpec> {
        let (line, column) = (self.toks[self.pos].line, self.toks[self.pos].column);
        self.expect_sym("{")?;
        let mut entries = Vec::new();
        loop {
            let value = self.integer()?;
            self.expect_sym(":")?;
            let numer = self.integer()?;
            let denom = if self.eat_sym("/") { self.integer()? } else { BigInt::from(1) };
            if denom.is_zero() {
                return Err(self.unexpected("a nonzero denominator"));
            }
            entries.push((value, BigRational::new(numer, denom)));
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym("}")?;
        DistSpec::new(entries).map_err(|e| ParseError {
            line,
            column,
            kind: ParseErrorKind::BadDistribution(e),
        })
    }

    // integer expressions

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Add
            } else if self.eat_sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::bin(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Mul
            } else if self.eat_sym("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::bin(op, lhs, self.factor()?);
        }
    }

    fn factor(&mut self) -> PResult<Expr> {
        if self.eat_sym("-") {
            if let Tok::Int(n) = self.peek().clone() {
                self.bump();
                return Ok(Expr::Const(-n));
            }
            let inner = self.factor()?;
            return Ok(Expr::bin(BinOp::Sub, Expr::constant(0), inner));
        }
        if self.eat_sym("(") {
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        if let Tok::Int(n) = self.peek().clone() {
            self.bump();
            return Ok(Expr::Const(n));
        }
        match self.peek() {
            Tok::Ident(s) if !is_keyword(s) => Ok(Expr::Var(self.variable()?)),
            _ => Err(self.unexpected("an expression")),
        }
    }

    // boolean expressions

    fn bexp(&mut self) -> PResult<BoolExpr> {
        let mut lhs = self.bconj()?;
        while self.eat_kw("or") {
            lhs = BoolExpr::or(lhs, self.bconj()?);
        }
        Ok(lhs)
    }

    fn bconj(&mut self) -> PResult<BoolExpr> {
        let mut lhs = self.bneg()?;
        while self.eat_kw("and") {
            lhs = BoolExpr::and(lhs, self.bneg()?);
        }
        Ok(lhs)
    }

    fn bneg(&mut self) -> PResult<BoolExpr> {
        if self.eat_kw("not") {
            return Ok(!self.bneg()?);
        }
        self.batom()
    }

    fn batom(&mut self) -> PResult<BoolExpr> {
        if self.eat_kw("true") {
            return Ok(BoolExpr::Lit(true));
        }
        if self.eat_kw("false") {
            return Ok(BoolExpr::Lit(false));
        }
        let start = self.pos;
        let comparison = self.comparison();
        if comparison.is_ok() || !self.toks_at(start).is_sym_tok("(") {
            return comparison;
        }
        let cmp_err = comparison.unwrap_err();
        let cmp_reach = self.pos;
        self.pos = start + 1;
        let nested = self.bexp().and_then(|b| self.expect_sym(")").map(|_| b));
        match nested {
            Ok(b) => Ok(b),
            Err(e) if self.pos >= cmp_reach => Err(e),
            Err(_) => Err(cmp_err),
        }
    }

    fn toks_at(&self, i: usize) -> &Tok {
        &self.toks[i].tok
    }

    fn comparison(&mut self) -> PResult<BoolExpr> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym("==") | Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym(">") => CmpOp::Gt,
            _ => return Err(self.unexpected("a comparison operator")),
        };
        self.bump();
        Ok(BoolExpr::Cmp(op, lhs, self.expr()?))
    }

    fn program(&mut self) -> PResult<Program> {
        self.expect_kw("var")?;
        let (line, column) = (self.toks[self.pos].line, self.toks[self.pos].column);
        let mut names = Vec::new();
        while let Tok::Ident(name) = self.peek().clone() {
            if is_keyword(&name) {
                break;
            }
            self.bump();
            names.push(name);
            self.eat_sym(",");
        }
        self.expect_sym(";")?;
        let universe = Universe::new(names).map_err(|m| ParseError {
            line,
            column,
            kind: ParseErrorKind::BadUniverse(m),
        })?;
        let mut inner = Parser { toks: std::mem::take(&mut self.toks), pos: self.pos, universe: &universe };
        let body = inner.stmt_seq()?;
        inner.expect_sym(";")?;
        inner.expect_kw("return")?;
        let ret = inner.expr()?;
        inner.eat_sym(";");
        inner.expect_eof()?;
        Ok(Program { universe: universe.clone(), body, ret })
    }
}

impl Tok {
    fn is_sym_tok(&self, sym: &str) -> bool {
        matches!(self, Tok::Sym(s) if *s == sym)
    }
}

/// Parses a whole program, including its `var` declaration.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    // The universe is not known until the declaration is read.
    let placeholder = Universe { names: Vec::new() };
    Parser::new(src, &placeholder)?.program()
}

pub fn parse_stmt(src: &str, universe: &Universe) -> Result<Stmt, ParseError> {
    let mut p = Parser::new(src, universe)?;
    let s = p.stmt_seq()?;
    p.expect_eof()?;
    Ok(s)
}

pub fn parse_expr(src: &str, universe: &Universe) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src, universe)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_bool_expr(src: &str, universe: &Universe) -> Result<BoolExpr, ParseError> {
    let mut p = Parser::new(src, universe)?;
    let b = p.bexp()?;
    p.expect_eof()?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Universe {
        Universe::new(vec!["x".into(), "y".into()]).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        let u = xy();
        let e = parse_expr("x - y - 1", &u).unwrap();
        assert_eq!(
            e,
            Expr::bin(
                BinOp::Sub,
                Expr::bin(BinOp::Sub, Expr::Var(0), Expr::Var(1)),
                Expr::constant(1)
            )
        );
        let e = parse_expr("x + y * 2", &u).unwrap();
        assert_eq!(
            e,
            Expr::bin(BinOp::Add, Expr::Var(0), Expr::bin(BinOp::Mul, Expr::Var(1), Expr::constant(2)))
        );
        assert_eq!(parse_expr("-3", &u).unwrap(), Expr::constant(-3));
        assert_eq!(
            parse_expr("-x", &u).unwrap(),
            Expr::bin(BinOp::Sub, Expr::constant(0), Expr::Var(0))
        );
    }

    #[test]
    fn parenthesized_booleans_backtrack() {
        let u = xy();
        let b = parse_bool_expr("(x < 3) and (x + 1) * 2 > y", &u).unwrap();
        assert!(matches!(b, BoolExpr::And(..)));
        let b = parse_bool_expr("not (x == 1 or y != 2)", &u).unwrap();
        assert!(matches!(b, BoolExpr::Not(_)));
    }

    #[test]
    fn sequencing_nests_to_the_right() {
        let u = xy();
        let s = parse_stmt("x := 1; y := 2; skip", &u).unwrap();
        assert_eq!(
            s,
            Stmt::seq(
                Stmt::Assign(0, Expr::constant(1)),
                Stmt::seq(Stmt::Assign(1, Expr::constant(2)), Stmt::Skip)
            )
        );
    }

    #[test]
    fn programs() {
        let p = parse_program(
            "var x y;\n\
             x ~ {0: 1/4, 1: 1/4, 2: 1/4, 3: 1/4};\n\
             y ~ {0: 1/4, 1: 1/4, 2: 1/4, 3: 1/4};\n\
             observe(x + y >= 5);\n\
             return x",
        )
        .unwrap();
        assert_eq!(p.universe.names(), &["x".to_string(), "y".to_string()]);
        assert_eq!(p.ret, Expr::Var(0));
        assert!(p.body.is_loop_free());
    }

    #[test]
    fn error_positions() {
        let err = parse_program("var x;\nx := z;\nreturn x").unwrap_err();
        assert_eq!((err.line, err.column), (2, 6));
        assert_eq!(err.kind, ParseErrorKind::UnknownVariable("z".into()));

        let err = parse_program("var x;\nx ~ {0: 1/2};\nreturn x").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::BadDistribution(DistSpecError::WeightSum(_))));

        let err = parse_program("var x;\nx := 1 $ 2;\nreturn x").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedChar('$'));
        assert_eq!((err.line, err.column), (2, 8));

        let err = parse_program("var x; while x < 1 { skip; return x").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Unexpected { .. }));
    }

    #[test]
    fn trailing_semicolons_are_tolerated() {
        let u = xy();
        let s = parse_stmt("while x < 3 { x := x + 1; }", &u).unwrap();
        assert_eq!(s, parse_stmt("while x < 3 { x := x + 1 }", &u).unwrap());
        assert!(parse_program("var x; skip; return x;").is_ok());
    }
}
