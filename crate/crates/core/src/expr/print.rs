use super::{BinOp, Expr};

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => ADD,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => MUL,
        Expr::Binary(BinOp::Pow, ..) => POW,
        Expr::Neg(_) => NEG,
        _ => ATOM,
    }
}

pub(super) fn render(e: &Expr) -> String {
    let mut out = String::new();
    write(e, &mut out);
    out
}

fn write_wrapped(e: &Expr, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        write(e, out);
        out.push(')');
    } else {
        write(e, out);
    }
}

fn write(e: &Expr, out: &mut String) {
    match e {
        Expr::Num(v) => {
            if v.is_sign_negative() && *v != 0.0 {
                out.push_str(&format!("({v})"));
            } else {
                out.push_str(&format!("{v}"));
            }
        }
        Expr::Var(block, i) => {
            out.push(match block {
                super::Block::Z => 'z',
                super::Block::Y => 'y',
            });
            out.push_str(&i.to_string());
        }
        Expr::Neg(inner) => {
            out.push('-');
            write_wrapped(inner, level(inner) < NEG, out);
        }
        Expr::Binary(BinOp::Pow, base, exponent) => {
            write_wrapped(base, level(base) <= POW, out);
            out.push('^');
            write_wrapped(exponent, level(exponent) < NEG, out);
        }
        Expr::Binary(op, lhs, rhs) => {
            let (p, sym) = match op {
                BinOp::Add => (ADD, " + "),
                BinOp::Sub => (ADD, " - "),
                BinOp::Mul => (MUL, "*"),
                BinOp::Div => (MUL, "/"),
                BinOp::Pow => unreachable!(),
            };
            write_wrapped(lhs, level(lhs) < p, out);
            out.push_str(sym);
            write_wrapped(rhs, level(rhs) <= p, out);
        }
        Expr::Call(func, args) => {
            out.push_str(func.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write(a, out);
            }
            out.push(')');
        }
        Expr::Piecewise {
            cond,
            then,
            otherwise,
        } => {
            out.push_str("piecewise(");
            write(&cond.lhs, out);
            out.push(' ');
            out.push_str(cond.op.symbol());
            out.push(' ');
            write(&cond.rhs, out);
            out.push_str(", ");
            write(then, out);
            out.push_str(", ");
            write(otherwise, out);
            out.push(')');
        }
    }
}
