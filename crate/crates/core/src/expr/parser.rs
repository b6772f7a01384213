use super::{BinOp, Block, CmpOp, Condition, Expr, ExprError, Func, FunctionDef};

/// Parse a single-point map over `z1..z{arity}`.
///
/// Vector maps separate components with `;`.
pub fn parse(text: &str, arity: usize) -> Result<FunctionDef, ExprError> {
    parse_with(text, arity, false)
}

/// Parse a two-point map over `z1..z{dim}` and `y1..y{dim}`; the result has
/// arity `2 * dim`.
pub fn parse_two_point(text: &str, dim: usize) -> Result<FunctionDef, ExprError> {
    parse_with(text, dim, true)
}

fn parse_with(text: &str, dim: usize, two_point: bool) -> Result<FunctionDef, ExprError> {
    let tokens = lex(text)?;
    if tokens.len() == 1 {
        return Err(ExprError::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        dim,
        two_point,
    };
    let mut outputs = vec![p.expr()?];
    while p.peek() == &Tok::Semi {
        p.pos += 1;
        outputs.push(p.expr()?);
    }
    if p.peek() != &Tok::End {
        return Err(p.unexpected("end of input"));
    }
    Ok(FunctionDef {
        name: String::new(),
        arity: if two_point { 2 * dim } else { dim },
        two_point,
        outputs,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Semi,
    Cmp(CmpOp),
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b';' => Tok::Semi,
            b'<' | b'>' | b'=' => {
                let eq = bytes.get(i + 1) == Some(&b'=');
                let op = match (c, eq) {
                    (b'<', true) => CmpOp::Le,
                    (b'<', false) => CmpOp::Lt,
                    (b'>', true) => CmpOp::Ge,
                    (b'>', false) => CmpOp::Gt,
                    (b'=', true) => CmpOp::Eq,
                    _ => {
                        return Err(ExprError::Syntax {
                            offset: i,
                            message: "expected `==`".into(),
                        })
                    }
                };
                if eq {
                    i += 1;
                }
                Tok::Cmp(op)
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| ExprError::Syntax {
                    offset: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    dim: usize,
    two_point: bool,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn unexpected(&self, wanted: &str) -> ExprError {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Cmp(op) => format!("`{}`", op.symbol()),
            other => format!("{other:?}"),
        };
        ExprError::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {found}"),
        }
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Minus {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if let Some(var) = self.variable(&name, offset)? {
                    return Ok(var);
                }
                if name == "piecewise" {
                    return self.piecewise();
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ExprError::UnknownIdentifier { name, offset });
                };
                self.expect(Tok::LParen, "`(`")?;
                let mut args = vec![self.expr()?];
                for _ in 1..func.arg_count() {
                    self.expect(Tok::Comma, "`,`")?;
                    args.push(self.expr()?);
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Call(func, args))
            }
            _ => Err(self.unexpected("an operand")),
        }
    }

    fn piecewise(&mut self) -> Result<Expr, ExprError> {
        self.expect(Tok::LParen, "`(`")?;
        let lhs = self.expr()?;
        let Tok::Cmp(op) = *self.peek() else {
            return Err(self.unexpected("a comparison"));
        };
        self.pos += 1;
        let rhs = self.expr()?;
        self.expect(Tok::Comma, "`,`")?;
        let then = self.expr()?;
        self.expect(Tok::Comma, "`,`")?;
        let otherwise = self.expr()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(Expr::Piecewise {
            cond: Condition {
                lhs: Box::new(lhs),
                op,
                rhs: Box::new(rhs),
            },
            then: Box::new(then),
            otherwise: Box::new(otherwise),
        })
    }

    /// `Ok(None)` when `name` is not variable-shaped.
    fn variable(&self, name: &str, offset: usize) -> Result<Option<Expr>, ExprError> {
        let block = match name.as_bytes()[0] {
            b'z' => Block::Z,
            b'y' => Block::Y,
            _ => return Ok(None),
        };
        let digits = &name[1..];
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Ok(None);
        }
        let index: usize = match digits.parse() {
            Ok(i) if i >= 1 => i,
            _ => {
                return Err(ExprError::UnknownIdentifier {
                    name: name.into(),
                    offset,
                })
            }
        };
        if block == Block::Y && !self.two_point {
            return Err(ExprError::UnknownIdentifier {
                name: name.into(),
                offset,
            });
        }
        if index > self.dim {
            return Err(ExprError::Arity {
                name: name.into(),
                offset,
                arity: self.dim,
            });
        }
        Ok(Some(Expr::Var(block, index)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value(text: &str, arity: usize, point: &[f64]) -> f64 {
        parse(text, arity).unwrap().eval_scalar(point).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(value("2+3*4", 0, &[]), 14.0);
        assert_eq!(value("z1*(z2-2)", 2, &[1.0, 0.0]), -2.0);
        assert_eq!(value("-2^2", 0, &[]), -4.0);
        assert_eq!(value("2^3^2", 0, &[]), 512.0);
        assert_eq!(value("2^-1", 0, &[]), 0.5);
        assert_eq!(value("10-4-3", 0, &[]), 3.0);
        assert_eq!(value("24/4/3", 0, &[]), 2.0);
        assert_eq!(value("-3*-2", 0, &[]), 6.0);
        assert_eq!(value(" 1.5e2 + .5 ", 0, &[]), 150.5);
    }

    #[test]
    fn piecewise_boundary() {
        let src = "piecewise(z1<11, 11, -11)";
        assert_eq!(value(src, 1, &[11.0]), -11.0);
        assert_eq!(value(src, 1, &[10.999]), 11.0);
        assert_eq!(value("piecewise(z1 >= 0, z1, -z1)", 1, &[-3.0]), 3.0);
        assert_eq!(value("piecewise(z1 == 1, 7, 0)", 1, &[1.0]), 7.0);
    }

    #[test]
    fn functions() {
        assert_eq!(value("max(z1, 2) + min(z1, 2)", 1, &[5.0]), 7.0);
        assert_eq!(value("abs(-3) + exp(0) + ln(1)", 0, &[]), 4.0);
    }

    #[test]
    fn syntax_error_offset() {
        match parse("z1+*2", 1) {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("(z1", 1),
            Err(ExprError::Syntax { offset: 3, .. })
        ));
        assert!(matches!(parse("", 1), Err(ExprError::Syntax { .. })));
        assert!(matches!(
            parse("z1 z1", 1),
            Err(ExprError::Syntax { offset: 3, .. })
        ));
        assert!(matches!(
            parse("2z1", 1),
            Err(ExprError::Syntax { offset: 1, .. })
        ));
        assert!(matches!(parse("z1 < 2", 1), Err(ExprError::Syntax { .. })));
        assert!(matches!(
            parse("z1 # 2", 1),
            Err(ExprError::Syntax { offset: 3, .. })
        ));
    }

    #[test]
    fn identifier_errors() {
        assert!(matches!(
            parse("sin(z1)", 1),
            Err(ExprError::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(
            parse("z1 + y1", 1),
            Err(ExprError::UnknownIdentifier { offset: 5, .. })
        ));
        assert!(matches!(parse("z0", 1), Err(ExprError::UnknownIdentifier { .. })));
        assert!(matches!(
            parse("z1 + z3", 2),
            Err(ExprError::Arity {
                offset: 5,
                arity: 2,
                ..
            })
        ));
        assert!(matches!(
            parse_two_point("z1 - y2", 1),
            Err(ExprError::Arity { .. })
        ));
    }

    #[test]
    fn comparison_only_in_condition_slot() {
        assert!(parse("piecewise(z1 < 1, z1 < 2, 0)", 1).is_err());
        assert!(parse("piecewise(z1, 1, 0)", 1).is_err());
    }
}
