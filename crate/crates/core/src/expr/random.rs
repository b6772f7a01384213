//! Seeded random expressions, for property checks and benchmarks.

use rand::Rng;

use super::{BinOp, Block, CmpOp, Condition, Expr, Func};

/// Leaf constants stay non-negative: the parser reads `-3` as a negation.
fn number<R: Rng + ?Sized>(rng: &mut R) -> Expr {
    match rng.random_range(0..3) {
        0 => Expr::Num(rng.random_range(0..10) as f64),
        1 => Expr::Num(rng.random_range(0..1000) as f64 / 100.0),
        _ => Expr::Num([0.5, 2.0, 3.0, 6.0, 7.0, 11.0][rng.random_range(0..6)]),
    }
}

fn leaf<R: Rng + ?Sized>(rng: &mut R, dim: usize, two_point: bool) -> Expr {
    let roll = rng.random_range(0..10);
    if roll < 4 {
        number(rng)
    } else if two_point && roll >= 7 {
        Expr::Var(Block::Y, rng.random_range(1..=dim))
    } else {
        Expr::Var(Block::Z, rng.random_range(1..=dim))
    }
}

/// A random expression tree of depth at most `depth` over `z1..z{dim}` (and
/// `y1..y{dim}` when `two_point`), covering every syntactic form.
pub fn random_expr<R: Rng + ?Sized>(rng: &mut R, depth: usize, dim: usize, two_point: bool) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return leaf(rng, dim, two_point);
    }
    let sub = |rng: &mut R| Box::new(random_expr(rng, depth - 1, dim, two_point));
    match rng.random_range(0..12) {
        0 => Expr::Neg(sub(rng)),
        1..=7 => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][rng.random_range(0..5)];
            Expr::Binary(op, sub(rng), sub(rng))
        }
        8..=10 => {
            let f = [Func::Min, Func::Max, Func::Abs, Func::Exp, Func::Ln][rng.random_range(0..5)];
            let args = (0..f.arg_count()).map(|_| *sub(rng)).collect();
            Expr::Call(f, args)
        }
        _ => {
            let op = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq][rng.random_range(0..5)];
            Expr::Piecewise {
                cond: Condition {
                    lhs: sub(rng),
                    op,
                    rhs: sub(rng),
                },
                then: sub(rng),
                otherwise: sub(rng),
            }
        }
    }
}
