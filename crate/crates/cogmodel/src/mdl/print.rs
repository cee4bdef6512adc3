//! Canonical pretty-printer. `parse(print(p))` reproduces `p` exactly
//! (source text aside), which the property tests rely on.

use std::fmt::Write;

use super::ast::*;

pub fn print_program(p: &ModelProgram) -> String {
    let mut out = String::new();
    out.push_str("params {\n");
    for d in &p.params.0 {
        let _ = writeln!(out, "  {}: [{}, {}]", d.name, num(d.lower), num(d.upper));
    }
    out.push_str("}\n");
    if !p.state.is_empty() {
        out.push('\n');
        if p.reset_per_block {
            out.push_str("state reset_per_block {\n");
        } else {
            out.push_str("state {\n");
        }
        for s in &p.state {
            let init = match s.init {
                StateInit::Scalar(x) => num(x),
                StateInit::Vector(d, fill) => format!("vector({}, {})", dim(d), num(fill)),
                StateInit::Matrix(r, c, fill) => {
                    format!("matrix({}, {}, {})", dim(r), dim(c), num(fill))
                }
            };
            let _ = writeln!(out, "  {} = {}", s.name, init);
        }
        out.push_str("}\n");
    }
    out.push_str("\ntrial {\n");
    for s in &p.trial {
        print_stmt(&mut out, s, 1);
    }
    out.push_str("}\n");
    out
}

fn num(x: f64) -> String {
    if x < 0.0 {
        format!("-{}", -x)
    } else {
        format!("{}", x)
    }
}

fn dim(d: Dim) -> String {
    match d {
        Dim::Lit(n) => n.to_string(),
        Dim::SetSize => "set_size".into(),
        Dim::NActions => "n_actions".into(),
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn print_stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match s {
        Stmt::Assign {
            target,
            indices,
            op,
            value,
        } => {
            out.push_str(&target.name);
            for ix in indices {
                out.push('[');
                out.push_str(&expr(ix, 0));
                out.push(']');
            }
            out.push_str(match op {
                AssignOp::Set => " = ",
                AssignOp::Add => " += ",
            });
            out.push_str(&expr(value, 0));
            out.push('\n');
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => {
            out.push_str("if ");
            out.push_str(&cond_str(cond, 0));
            out.push_str(" {\n");
            for st in then_branch {
                print_stmt(out, st, level + 1);
            }
            indent(out, level);
            out.push('}');
            if !else_branch.is_empty() {
                out.push_str(" else {\n");
                for st in else_branch {
                    print_stmt(out, st, level + 1);
                }
                indent(out, level);
                out.push('}');
            }
            out.push('\n');
        }
        Stmt::Choose { var, probs } => {
            out.push_str("choose(");
            out.push_str(&var.name);
            out.push_str(", ");
            out.push_str(&expr(probs, 0));
            out.push_str(")\n");
        }
    }
}

// precedence levels: 0 add/sub, 1 mul/div, 2 unary, 3 postfix/atom
fn expr(e: &Expr, min_prec: u8) -> String {
    let (s, prec) = match e {
        Expr::Num(x) => (num(*x), 3),
        Expr::Var(id) => (id.name.clone(), 3),
        Expr::Index { base, indices } => {
            let mut s = base.name.clone();
            for ix in indices {
                s.push('[');
                s.push_str(&expr(ix, 0));
                s.push(']');
            }
            (s, 3)
        }
        Expr::Neg(inner) => (format!("-{}", expr(inner, 2)), 2),
        Expr::Bin(op, a, b) => {
            let (sym, prec) = match op {
                BinOp::Add => ("+", 0),
                BinOp::Sub => ("-", 0),
                BinOp::Mul => ("*", 1),
                BinOp::Div => ("/", 1),
            };
            // left-associative: right child needs strictly higher precedence
            (
                format!(
                    "{} {} {}",
                    expr(a, prec),
                    sym,
                    expr(b, prec + 1)
                ),
                prec,
            )
        }
        Expr::Call(b, args) => {
            let args: Vec<String> = args.iter().map(|a| expr(a, 0)).collect();
            (format!("{}({})", b.name(), args.join(", ")), 3)
        }
        Expr::VecLit(items) => {
            let items: Vec<String> = items.iter().map(|a| expr(a, 0)).collect();
            (format!("[{}]", items.join(", ")), 3)
        }
    };
    if prec < min_prec {
        format!("({})", s)
    } else {
        s
    }
}

// precedence: 0 or, 1 and, 2 not/cmp
fn cond_str(c: &Cond, min_prec: u8) -> String {
    let (s, prec) = match c {
        Cond::Cmp(op, a, b) => {
            let sym = match op {
                CmpOp::Lt => "<",
                CmpOp::Le => "<=",
                CmpOp::Gt => ">",
                CmpOp::Ge => ">=",
                CmpOp::Eq => "==",
                CmpOp::Ne => "!=",
            };
            (format!("{} {} {}", expr(a, 0), sym, expr(b, 0)), 2)
        }
        Cond::And(a, b) => (
            format!("{} && {}", cond_str(a, 1), cond_str(b, 2)),
            1,
        ),
        Cond::Or(a, b) => (
            format!("{} || {}", cond_str(a, 0), cond_str(b, 1)),
            0,
        ),
        Cond::Not(inner) => (format!("!({})", cond_str(inner, 0)), 2),
    };
    if prec < min_prec {
        format!("({})", s)
    } else {
        s
    }
}
