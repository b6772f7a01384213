//! A small arithmetic expression language for the user-supplied maps.
//!
//! Grammar (whitespace is insignificant, there is no implicit multiplication):
//!
//! ```text
//! map     := expr (';' expr)*
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?            right-associative
//! atom    := number | var | call | '(' expr ')'
//! call    := ('min' | 'max') '(' expr ',' expr ')'
//!          | ('abs' | 'exp' | 'ln') '(' expr ')'
//!          | 'piecewise' '(' expr cmp expr ',' expr ',' expr ')'
//! cmp     := '<' | '<=' | '>' | '>=' | '=='
//! var     := 'z' index | 'y' index        1-based
//! ```
//!
//! Single-point maps (`h`, `w`, `g`, `phi`) see `z1..zn`. Two-point maps (`eta`)
//! additionally see `y1..yn`, bound to the second argument.

mod parser;
mod print;
pub mod random;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parser::{parse, parse_two_point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable `{name}` at offset {offset} exceeds arity {arity}")]
    Arity {
        name: String,
        offset: usize,
        arity: usize,
    },
    #[error("expected a point of length {expected}, got {got}")]
    PointLength { expected: usize, got: usize },
    #[error("expected a scalar function, `{name}` has {outputs} outputs")]
    NotScalar { name: String, outputs: usize },
}

/// Which argument block a variable refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    Z,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Abs,
    Exp,
    Ln,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Ln => "ln",
        }
    }

    pub fn arg_count(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            Func::Abs | Func::Exp | Func::Ln => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "min" => Func::Min,
            "max" => Func::Max,
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
        }
    }
}

/// Comparison, only allowed in the condition slot of `piecewise`.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub lhs: Box<Expr>,
    pub op: CmpOp,
    pub rhs: Box<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// 1-based variable index.
    Var(Block, usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    Piecewise {
        cond: Condition,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Evaluate against `point`, where z-variables occupy `point[..n]` and
    /// y-variables occupy `point[n..2n]`. Indices must already be validated.
    pub fn eval(&self, point: &[f64], n: usize) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Block::Z, i) => point[i - 1],
            Expr::Var(Block::Y, i) => point[n + i - 1],
            Expr::Neg(e) => -e.eval(point, n),
            Expr::Binary(op, a, b) => {
                let a = a.eval(point, n);
                let b = b.eval(point, n);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            f64::NAN
                        } else {
                            a / b
                        }
                    }
                    // powf already yields NaN for a negative base with a
                    // non-integer exponent.
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(func, args) => {
                let x = args[0].eval(point, n);
                match func {
                    Func::Abs => x.abs(),
                    Func::Exp => x.exp(),
                    Func::Ln => {
                        if x > 0.0 {
                            x.ln()
                        } else {
                            f64::NAN
                        }
                    }
                    Func::Min | Func::Max => {
                        let y = args[1].eval(point, n);
                        if x.is_nan() || y.is_nan() {
                            f64::NAN
                        } else if *func == Func::Min {
                            x.min(y)
                        } else {
                            x.max(y)
                        }
                    }
                }
            }
            Expr::Piecewise {
                cond,
                then,
                otherwise,
            } => {
                let l = cond.lhs.eval(point, n);
                let r = cond.rhs.eval(point, n);
                if l.is_nan() || r.is_nan() {
                    return f64::NAN;
                }
                let taken = match cond.op {
                    CmpOp::Lt => l < r,
                    CmpOp::Le => l <= r,
                    CmpOp::Gt => l > r,
                    CmpOp::Ge => l >= r,
                    CmpOp::Eq => l == r,
                };
                if taken {
                    then.eval(point, n)
                } else {
                    otherwise.eval(point, n)
                }
            }
        }
    }

    /// Replace every `z{i}` with `args[i-1]`.
    pub fn substitute(&self, args: &[Expr]) -> Expr {
        match self {
            Expr::Num(_) | Expr::Var(Block::Y, _) => self.clone(),
            Expr::Var(Block::Z, i) => args[i - 1].clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(args))),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.substitute(args), b.substitute(args)),
            Expr::Call(f, xs) => Expr::Call(*f, xs.iter().map(|x| x.substitute(args)).collect()),
            Expr::Piecewise {
                cond,
                then,
                otherwise,
            } => Expr::Piecewise {
                cond: Condition {
                    lhs: Box::new(cond.lhs.substitute(args)),
                    op: cond.op,
                    rhs: Box::new(cond.rhs.substitute(args)),
                },
                then: Box::new(then.substitute(args)),
                otherwise: Box::new(otherwise.substitute(args)),
            },
        }
    }

    fn max_index(&self, block: Block) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(b, i) => {
                if *b == block {
                    *i
                } else {
                    0
                }
            }
            Expr::Neg(e) => e.max_index(block),
            Expr::Binary(_, a, b) => a.max_index(block).max(b.max_index(block)),
            Expr::Call(_, xs) => xs.iter().map(|x| x.max_index(block)).max().unwrap_or(0),
            Expr::Piecewise {
                cond,
                then,
                otherwise,
            } => cond
                .lhs
                .max_index(block)
                .max(cond.rhs.max_index(block))
                .max(then.max_index(block))
                .max(otherwise.max_index(block)),
        }
    }
}

/// A parsed map `R^arity -> R^outputs`.
///
/// For two-point maps `arity == 2 * dim` and points are laid out as `(z, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub arity: usize,
    pub two_point: bool,
    pub outputs: Vec<Expr>,
}

impl FunctionDef {
    /// Build from already-constructed expressions, validating variable indices.
    pub fn from_exprs(
        name: impl Into<String>,
        dim: usize,
        two_point: bool,
        outputs: Vec<Expr>,
    ) -> Result<Self, ExprError> {
        let name = name.into();
        for e in &outputs {
            let z = e.max_index(Block::Z);
            let y = e.max_index(Block::Y);
            if z > dim || y > dim || (!two_point && y > 0) {
                return Err(ExprError::Arity {
                    name: if z > dim { format!("z{z}") } else { format!("y{y}") },
                    offset: 0,
                    arity: dim,
                });
            }
        }
        Ok(FunctionDef {
            name,
            arity: if two_point { 2 * dim } else { dim },
            two_point,
            outputs,
        })
    }

    /// `w(z) = z` in dimension `dim`.
    pub fn identity(dim: usize) -> Self {
        FunctionDef {
            name: "identity".into(),
            arity: dim,
            two_point: false,
            outputs: (1..=dim).map(|i| Expr::Var(Block::Z, i)).collect(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Dimension of each argument block.
    pub fn dim(&self) -> usize {
        if self.two_point {
            self.arity / 2
        } else {
            self.arity
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.outputs.len() == 1
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.check_len(point.len())?;
        let n = self.dim();
        Ok(self.outputs.iter().map(|e| e.eval(point, n)).collect())
    }

    pub fn eval_scalar(&self, point: &[f64]) -> Result<f64, ExprError> {
        if !self.is_scalar() {
            return Err(ExprError::NotScalar {
                name: self.name.clone(),
                outputs: self.outputs.len(),
            });
        }
        self.check_len(point.len())?;
        Ok(self.outputs[0].eval(point, self.dim()))
    }

    /// Evaluate a two-point map at `(z, y)`.
    pub fn eval_pair(&self, z: &[f64], y: &[f64]) -> Result<Vec<f64>, ExprError> {
        let mut point = Vec::with_capacity(z.len() + y.len());
        point.extend_from_slice(z);
        point.extend_from_slice(y);
        self.eval(&point)
    }

    fn check_len(&self, got: usize) -> Result<(), ExprError> {
        if got != self.arity {
            return Err(ExprError::PointLength {
                expected: self.arity,
                got,
            });
        }
        Ok(())
    }
}

impl fmt::Display for FunctionDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_print(self))
    }
}

/// Render `f` in the grammar accepted by [`parse`]; components of vector maps
/// are joined with `; `.
pub fn pretty_print(f: &FunctionDef) -> String {
    f.outputs.iter().map(print::render).collect::<Vec<_>>().join("; ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_two_point_map() {
        let eta = parse_two_point("z1*(y1-2)", 1).unwrap();
        assert_eq!(eta.arity, 2);
        assert_eq!(eta.eval_pair(&[1.0], &[2.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn quintic_value() {
        let h = parse("z1^5", 1).unwrap();
        assert_eq!(h.eval(&[-2.0]).unwrap(), vec![-32.0]);
    }

    #[test]
    fn singularities_are_nan() {
        let f = parse("1/z1", 1).unwrap();
        assert!(f.eval_scalar(&[0.0]).unwrap().is_nan());
        let g = parse("ln(z1)", 1).unwrap();
        assert!(g.eval_scalar(&[0.0]).unwrap().is_nan());
        assert!(g.eval_scalar(&[-1.0]).unwrap().is_nan());
        let p = parse("z1^0.5", 1).unwrap();
        assert!(p.eval_scalar(&[-4.0]).unwrap().is_nan());
        assert_eq!(p.eval_scalar(&[4.0]).unwrap(), 2.0);
        let q = parse("z1^3", 1).unwrap();
        assert_eq!(q.eval_scalar(&[-2.0]).unwrap(), -8.0);
    }

    #[test]
    fn nan_propagates_through_min_max_and_piecewise() {
        let f = parse("min(1/z1, 3)", 1).unwrap();
        assert!(f.eval_scalar(&[0.0]).unwrap().is_nan());
        let g = parse("piecewise(1/z1 < 2, 1, 2)", 1).unwrap();
        assert!(g.eval_scalar(&[0.0]).unwrap().is_nan());
    }

    #[test]
    fn eval_rejects_wrong_length() {
        let h = parse("z1+z2", 2).unwrap();
        assert_eq!(
            h.eval(&[1.0]),
            Err(ExprError::PointLength { expected: 2, got: 1 })
        );
    }

    #[test]
    fn vector_map_components() {
        let w = parse("z1 + 1; z2 * 2", 2).unwrap();
        assert_eq!(w.outputs.len(), 2);
        assert_eq!(w.eval(&[1.0, 3.0]).unwrap(), vec![2.0, 6.0]);
        assert!(w.eval_scalar(&[1.0, 3.0]).is_err());
    }

    #[test]
    fn identity_map() {
        let id = FunctionDef::identity(3);
        assert_eq!(id.eval(&[1.0, -2.0, 5.0]).unwrap(), vec![1.0, -2.0, 5.0]);
    }

    #[test]
    fn substitution_composes() {
        let phi = parse("exp(z1) + 1", 1).unwrap();
        let h = parse("z1 * z2", 2).unwrap();
        let composed = phi.outputs[0].substitute(&h.outputs);
        let f = FunctionDef::from_exprs("phi_h", 2, false, vec![composed]).unwrap();
        let v = f.eval_scalar(&[2.0, 0.5]).unwrap();
        assert_eq!(v, 1f64.exp() + 1.0);
    }

    #[test]
    fn eval_is_bit_identical_across_calls() {
        let h = parse("exp(z1)^2.5 / (1 + abs(z1)) - ln(3)", 1).unwrap();
        let a = h.eval_scalar(&[0.37]).unwrap();
        let b = h.eval_scalar(&[0.37]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
