//! Pratt parser. Vector-valued subexpressions exist only during parsing.

use super::lexer::{tokenize, Tok, Token};
use super::{BinOp, Expr, Func, VarKind};
use crate::error::{Error, Result};

const BP_ADD: u8 = 10;
const BP_MUL: u8 = 20;
const BP_NEG: u8 = 30;
const BP_POW: u8 = 40;

#[derive(Debug, Clone)]
enum Val {
    Scalar(Expr),
    Vector(Vec<Expr>),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    d: usize,
}

/// Parse `source` for dimension `d`.
pub fn parse(source: &str, d: usize) -> Result<Expr> {
    let mut p = Parser { toks: tokenize(source)?, pos: 0, d };
    let v = p.expr(0)?;
    let end = p.peek();
    if end.tok != Tok::Eof {
        return Err(Error::parse(end.offset, format!("unexpected token {:?}", end.tok)));
    }
    match v {
        Val::Scalar(e) => Ok(e),
        Val::Vector(_) => Err(Error::parse(0, "expression is vector-valued")),
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        let t = self.next();
        if t.tok != tok {
            return Err(Error::parse(t.offset, format!("expected {tok:?}, found {:?}", t.tok)));
        }
        Ok(())
    }

    fn expr(&mut self, min_bp: u8) -> Result<Val> {
        let mut lhs = self.prefix()?;
        loop {
            let t = self.peek().clone();
            let (op, l_bp, r_bp) = match t.tok {
                Tok::Plus => (BinOp::Add, BP_ADD, BP_ADD + 1),
                Tok::Minus => (BinOp::Sub, BP_ADD, BP_ADD + 1),
                Tok::Star => (BinOp::Mul, BP_MUL, BP_MUL + 1),
                Tok::Slash => (BinOp::Div, BP_MUL, BP_MUL + 1),
                Tok::Caret => (BinOp::Pow, BP_POW + 1, BP_POW),
                _ => break,
            };
            if l_bp < min_bp {
                break;
            }
            self.next();
            let rhs = self.expr(r_bp)?;
            lhs = combine(op, lhs, rhs, t.offset)?;
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Val> {
        let t = self.next();
        match t.tok {
            Tok::Num(v) => Ok(Val::Scalar(Expr::Const(v))),
            Tok::Minus => {
                // a literal directly after unary minus folds into a negative constant
                if let Tok::Num(v) = self.peek().tok {
                    if self.toks.get(self.pos + 1).map(|t| &t.tok) != Some(&Tok::Caret) {
                        self.next();
                        return Ok(Val::Scalar(Expr::Const(-v)));
                    }
                }
                match self.expr(BP_NEG)? {
                    Val::Scalar(e) => Ok(Val::Scalar(Expr::Neg(Box::new(e)))),
                    Val::Vector(v) => Ok(Val::Vector(v.into_iter().map(|e| Expr::Neg(Box::new(e))).collect())),
                }
            }
            Tok::LParen => {
                let v = self.expr(0)?;
                self.expect(Tok::RParen)?;
                Ok(v)
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::LParen {
                    self.call(&name, t.offset)
                } else {
                    self.variable(&name, t.offset)
                }
            }
            other => Err(Error::parse(t.offset, format!("unexpected token {other:?}"))),
        }
    }

    fn variable(&self, name: &str, offset: usize) -> Result<Val> {
        let kind = match name.as_bytes().first() {
            Some(b'x') => VarKind::X,
            Some(b'y') => VarKind::Y,
            _ => return Err(Error::parse(offset, format!("unknown identifier '{name}'"))),
        };
        let rest = &name[1..];
        if rest.is_empty() {
            return Ok(Val::Vector((1..=self.d).map(|i| Expr::Var(kind, i)).collect()));
        }
        let idx: usize = rest
            .parse()
            .map_err(|_| Error::parse(offset, format!("unknown identifier '{name}'")))?;
        if idx == 0 || idx > self.d {
            return Err(Error::parse(offset, format!("index of '{name}' out of range 1..={}", self.d)));
        }
        Ok(Val::Scalar(Expr::Var(kind, idx)))
    }

    fn call(&mut self, name: &str, offset: usize) -> Result<Val> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if self.peek().tok != Tok::RParen {
            loop {
                args.push(self.expr(0)?);
                if self.peek().tok == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::parse(offset, format!("{name} takes {n} argument(s), got {}", args.len())))
            }
        };
        match name {
            "dot" => {
                arity(2)?;
                let (Val::Vector(a), Val::Vector(b)) = (&args[0], &args[1]) else {
                    return Err(Error::parse(offset, "dot needs two vector arguments"));
                };
                Ok(Val::Scalar(sum(a.iter().zip(b).map(|(p, q)| Expr::bin(BinOp::Mul, p.clone(), q.clone())))))
            }
            "norm2" => {
                arity(1)?;
                let Val::Vector(a) = &args[0] else {
                    return Err(Error::parse(offset, "norm2 needs a vector argument"));
                };
                Ok(Val::Scalar(sum(a.iter().map(|p| Expr::bin(BinOp::Pow, p.clone(), Expr::Const(2.0))))))
            }
            _ => {
                let f = Func::from_name(name).ok_or_else(|| Error::parse(offset, format!("unknown function '{name}'")))?;
                arity(1)?;
                match args.pop() {
                    Some(Val::Scalar(e)) => Ok(Val::Scalar(Expr::Call(f, Box::new(e)))),
                    _ => Err(Error::parse(offset, format!("{name} needs a scalar argument"))),
                }
            }
        }
    }
}

fn sum(mut terms: impl Iterator<Item = Expr>) -> Expr {
    let first = terms.next().unwrap_or(Expr::Const(0.0));
    terms.fold(first, |acc, t| Expr::bin(BinOp::Add, acc, t))
}

fn const_value(e: &Expr) -> Option<f64> {
    e.eval::<f64>(&[], &[]).ok()
}

fn combine(op: BinOp, lhs: Val, rhs: Val, offset: usize) -> Result<Val> {
    use Val::*;
    let mismatch = || Error::parse(offset, "incompatible vector/scalar operands");
    Ok(match (op, lhs, rhs) {
        (BinOp::Pow, Scalar(a), Scalar(b)) => {
            let p = const_value(&b).ok_or_else(|| Error::parse(offset, "exponent must be a constant"))?;
            Scalar(Expr::bin(BinOp::Pow, a, Expr::Const(p)))
        }
        (BinOp::Pow, _, _) => return Err(mismatch()),
        (op, Scalar(a), Scalar(b)) => Scalar(Expr::bin(op, a, b)),
        (BinOp::Add | BinOp::Sub, Vector(a), Vector(b)) => {
            if a.len() != b.len() {
                return Err(mismatch());
            }
            Vector(a.into_iter().zip(b).map(|(p, q)| Expr::bin(op, p, q)).collect())
        }
        (BinOp::Mul, Scalar(s), Vector(v)) => Vector(v.into_iter().map(|q| Expr::bin(BinOp::Mul, s.clone(), q)).collect()),
        (BinOp::Mul | BinOp::Div, Vector(v), Scalar(s)) => {
            Vector(v.into_iter().map(|q| Expr::bin(op, q, s.clone())).collect())
        }
        _ => return Err(mismatch()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Expr {
        Expr::Var(VarKind::X, i)
    }
    fn y(i: usize) -> Expr {
        Expr::Var(VarKind::Y, i)
    }

    #[test]
    fn precedence() {
        assert_eq!(
            parse("x1 + y1*x1", 1).unwrap(),
            Expr::bin(BinOp::Add, x(1), Expr::bin(BinOp::Mul, y(1), x(1)))
        );
        // power binds tighter than unary minus and is right-associative
        assert_eq!(
            parse("-x1^2", 1).unwrap(),
            Expr::Neg(Box::new(Expr::bin(BinOp::Pow, x(1), Expr::Const(2.0))))
        );
        assert_eq!(
            parse("x1^2^0.5", 1).unwrap(),
            Expr::bin(BinOp::Pow, x(1), Expr::Const(2f64.powf(0.5)))
        );
        assert_eq!(parse("x1 - y1 - 1", 1).unwrap(), Expr::bin(BinOp::Sub, Expr::bin(BinOp::Sub, x(1), y(1)), Expr::Const(1.0)));
        assert_eq!(parse("2^-1", 1).unwrap(), Expr::bin(BinOp::Pow, Expr::Const(2.0), Expr::Const(-1.0)));
    }

    #[test]
    fn log_divergence_source() {
        let e = parse("-(1)*log(1 + dot(x,y))", 2).unwrap();
        let inner = Expr::bin(
            BinOp::Add,
            Expr::Const(1.0),
            Expr::bin(BinOp::Add, Expr::bin(BinOp::Mul, x(1), y(1)), Expr::bin(BinOp::Mul, x(2), y(2))),
        );
        assert_eq!(
            e,
            Expr::bin(BinOp::Mul, Expr::Neg(Box::new(Expr::Const(1.0))), Expr::Call(Func::Log, Box::new(inner)))
        );
    }

    #[test]
    fn vector_sugar() {
        let e = parse("norm2(x - y)/2", 2).unwrap();
        assert_eq!(e.eval::<f64>(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 2.5);
        let e = parse("dot(2*x, y - x)", 2).unwrap();
        assert_eq!(e.eval::<f64>(&[1.0, 1.0], &[2.0, 3.0]).unwrap(), 2.0 * (1.0 + 2.0));
        assert!(parse("x + 1", 2).is_err());
        assert!(parse("exp(x)", 2).is_err());
    }

    #[test]
    fn errors_carry_offsets() {
        assert!(matches!(parse("x3", 2), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!(parse("x1 + foo", 1), Err(Error::Parse { offset: 5, .. })));
        assert!(matches!(parse("(x1 + 1", 1), Err(Error::Parse { offset: 7, .. })));
        assert!(matches!(parse("x1 + 1)", 1), Err(Error::Parse { offset: 6, .. })));
        assert!(matches!(parse("x1^y1", 1), Err(Error::Parse { offset: 2, .. })));
        assert!(matches!(parse("z1", 1), Err(Error::Parse { .. })));
    }
}
