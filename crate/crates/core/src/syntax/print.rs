use std::fmt;

use super::{BoolExpr, DistSpec, Expr, Program, Stmt, Universe};

/// Renders a program in the concrete syntax accepted by [`super::parse_program`].
pub fn pretty_print(program: &Program) -> String {
    let mut out = String::from("var");
    for name in program.universe.names() {
        out.push(' ');
        out.push_str(name);
    }
    out.push_str(";\n");
    out.push_str(&program.body.display(&program.universe).to_string());
    out.push_str(";\nreturn ");
    out.push_str(&program.ret.display(&program.universe).to_string());
    out.push('\n');
    out
}

pub(super) struct ExprDisplay<'a> {
    pub expr: &'a Expr,
    pub universe: &'a Universe,
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, u: &Universe, min_prec: u8) -> fmt::Result {
    match e {
        Expr::Const(c) => write!(f, "{c}"),
        Expr::Var(v) => f.write_str(u.name(*v)),
        Expr::Bin(op, l, r) => {
            let prec = op.precedence();
            let parens = prec < min_prec;
            if parens {
                f.write_str("(")?;
            }
            write_expr(f, l, u, prec)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, r, u, prec + 1)?;
            if parens {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, self.universe, 0)
    }
}

pub(super) struct BoolDisplay<'a> {
    pub expr: &'a BoolExpr,
    pub universe: &'a Universe,
}

fn bool_prec(b: &BoolExpr) -> u8 {
    match b {
        BoolExpr::Or(..) => 1,
        BoolExpr::And(..) => 2,
        BoolExpr::Not(_) => 3,
        BoolExpr::Lit(_) | BoolExpr::Cmp(..) => 4,
    }
}

fn write_bool(f: &mut fmt::Formatter<'_>, b: &BoolExpr, u: &Universe, min_prec: u8) -> fmt::Result {
    let prec = bool_prec(b);
    let parens = prec < min_prec;
    if parens {
        f.write_str("(")?;
    }
    match b {
        BoolExpr::Lit(v) => write!(f, "{v}")?,
        BoolExpr::Cmp(op, l, r) => {
            write_expr(f, l, u, 0)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, r, u, 0)?;
        }
        BoolExpr::Not(inner) => {
            f.write_str("not ")?;
            write_bool(f, inner, u, 3)?;
        }
        BoolExpr::And(l, r) | BoolExpr::Or(l, r) => {
            write_bool(f, l, u, prec)?;
            f.write_str(if prec == 2 { " and " } else { " or " })?;
            write_bool(f, r, u, prec + 1)?;
        }
    }
    if parens {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for BoolDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_bool(f, self.expr, self.universe, 0)
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, w)) in self.raw_entries().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}: {w}")?;
        }
        f.write_str("}")
    }
}

pub(super) struct StmtDisplay<'a> {
    pub stmt: &'a Stmt,
    pub universe: &'a Universe,
    pub indent: usize,
}

fn write_stmt(f: &mut fmt::Formatter<'_>, s: &Stmt, u: &Universe, indent: usize) -> fmt::Result {
    let pad = " ".repeat(indent);
    let inner = indent + 4;
    match s {
        Stmt::Skip => write!(f, "{pad}skip"),
        Stmt::Assign(x, e) => write!(f, "{pad}{} := {}", u.name(*x), e.display(u)),
        Stmt::RAssign(x, psi) => write!(f, "{pad}{} ~ {psi}", u.name(*x)),
        Stmt::Observe(b) => write!(f, "{pad}observe({})", b.display(u)),
        Stmt::Seq(a, b) => {
            write_stmt(f, a, u, indent)?;
            f.write_str(";\n")?;
            write_stmt(f, b, u, indent)
        }
        Stmt::If(c, a, b) => {
            writeln!(f, "{pad}if {} {{", c.display(u))?;
            write_stmt(f, a, u, inner)?;
            writeln!(f, "\n{pad}}} else {{")?;
            write_stmt(f, b, u, inner)?;
            write!(f, "\n{pad}}}")
        }
        Stmt::While(c, body) => {
            writeln!(f, "{pad}while {} {{", c.display(u))?;
            write_stmt(f, body, u, inner)?;
            write!(f, "\n{pad}}}")
        }
    }
}

impl fmt::Display for StmtDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_stmt(f, self.stmt, self.universe, self.indent)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_bool_expr, parse_expr, parse_program};
    use super::*;

    #[test]
    fn skip_program_layout() {
        let p = parse_program("var x; skip; return x").unwrap();
        assert_eq!(pretty_print(&p), "var x;\nskip;\nreturn x\n");
    }

    #[test]
    fn parentheses_only_where_needed() {
        let u = Universe::new(vec!["x".into(), "y".into()]).unwrap();
        for src in ["x - (y - 1)", "(x + y) * 2", "x * y + 1", "x / (y * 2)", "-3 * x", "x - -3"] {
            let e = parse_expr(src, &u).unwrap();
            assert_eq!(e.display(&u).to_string(), src);
        }
        for src in ["(x < 1 or y > 2) and true", "not (x == 1 and y == 2)", "x < 1 or y > 2 and false"] {
            let b = parse_bool_expr(src, &u).unwrap();
            assert_eq!(b.display(&u).to_string(), src);
        }
    }

    #[test]
    fn nested_blocks_round_trip() {
        let src = "var x y;\n\
                   x := 0;\n\
                   while x < 3 {\n    \
                       if x == 1 {\n        \
                           y ~ {0: 1/2, 1: 1/2}\n    \
                       } else {\n        \
                           skip\n    \
                       };\n    \
                       x := x + 1\n\
                   };\n\
                   return y\n";
        let p = parse_program(src).unwrap();
        let printed = pretty_print(&p);
        assert_eq!(printed, src);
        assert_eq!(parse_program(&printed).unwrap(), p);
    }
}
