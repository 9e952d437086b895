use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Zero};

use super::expr::{Expr, Func, Var, MAX_CHART_DIM, MAX_SIMPLEX_PARAM};
use super::SymError;

/// Variables an expression may mention when parsed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarContext {
    /// Chart dimension; `x1..xq` are declared.
    pub chart_dim: usize,
    /// When set, simplex parameters `t0..tk` are declared.
    pub simplex_dim: Option<usize>,
}

impl VarContext {
    pub fn chart(q: usize) -> Self {
        VarContext {
            chart_dim: q,
            simplex_dim: None,
        }
    }

    pub fn with_simplex(q: usize, k: usize) -> Self {
        VarContext {
            chart_dim: q,
            simplex_dim: Some(k),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, SymError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '0'..='9' | '.' => {
                // no p/q merging right after '^' or '/': "x^2/4", "x/2/3"
                let mut back = out.iter().rev().skip_while(|(_, t)| matches!(t, Tok::Minus | Tok::LParen));
                let after_caret = matches!(back.next(), Some((_, Tok::Caret)));
                let allow_ratio = !after_caret && !matches!(out.last(), Some((_, Tok::Slash)));
                let (num, end) = lex_number(src, i, allow_ratio)?;
                i = end;
                out.push((start, Tok::Num(num)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len() && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                out.push((start, Tok::Ident(src[i..j].to_string())));
                i = j;
                continue;
            }
            other => {
                return Err(SymError::Parse {
                    pos: i,
                    msg: format!("unexpected character '{other}'"),
                })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

fn digits_end(bytes: &[u8], mut j: usize) -> usize {
    while j < bytes.len() && bytes[j].is_ascii_digit() {
        j += 1;
    }
    j
}

// Decimal literal, or a rational literal p/q written without whitespace.
fn lex_number(src: &str, i: usize, allow_ratio: bool) -> Result<(BigRational, usize), SymError> {
    let bytes = src.as_bytes();
    let int_end = digits_end(bytes, i);
    let mut end = int_end;
    let mut value;
    if end < bytes.len() && bytes[end] == b'.' {
        let frac_end = digits_end(bytes, end + 1);
        let int_part = &src[i..end];
        let frac_part = &src[end + 1..frac_end];
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(SymError::Parse {
                pos: i,
                msg: "malformed number".into(),
            });
        }
        let digits = format!("{int_part}{frac_part}");
        let numer = BigInt::from_str_radix(&digits, 10).map_err(|_| SymError::Parse {
            pos: i,
            msg: "malformed number".into(),
        })?;
        let denom = num_traits::pow::pow(BigInt::from(10), frac_part.len());
        value = BigRational::new(numer, denom);
        end = frac_end;
    } else {
        value = BigRational::from_integer(BigInt::from_str_radix(&src[i..int_end], 10).map_err(|_| {
            SymError::Parse {
                pos: i,
                msg: "malformed number".into(),
            }
        })?);
        if allow_ratio && end + 1 < bytes.len() && bytes[end] == b'/' && bytes[end + 1].is_ascii_digit() {
            let den_end = digits_end(bytes, end + 1);
            let den = BigInt::from_str_radix(&src[end + 1..den_end], 10).map_err(|_| SymError::Parse {
                pos: end + 1,
                msg: "malformed number".into(),
            })?;
            if den.is_zero() {
                return Err(SymError::Parse {
                    pos: end + 1,
                    msg: "zero denominator in rational literal".into(),
                });
            }
            value /= BigRational::from_integer(den);
            end = den_end;
        }
    }
    Ok((value, end))
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
    ctx: &'a VarContext,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn at(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.len)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, SymError> {
        Err(SymError::Parse {
            pos: self.at(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok) -> Result<(), SymError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {t:?}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, SymError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = Expr::add(&acc, &rhs);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = Expr::sub(&acc, &rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, SymError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = Expr::mul(&acc, &rhs);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = Expr::div(&acc, &rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, SymError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::neg(&inner));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr, SymError> {
        let base = self.base()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let n = self.exponent()?;
            return Ok(Expr::powi(&base, n));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, SymError> {
        let paren = self.peek() == Some(&Tok::LParen);
        if paren {
            self.pos += 1;
        }
        let neg = self.peek() == Some(&Tok::Minus);
        if neg {
            self.pos += 1;
        }
        let n = match self.peek() {
            Some(Tok::Num(c)) if c.is_integer() => {
                let v: i32 = c
                    .numer()
                    .try_into()
                    .map_err(|_| SymError::Parse {
                        pos: self.at(),
                        msg: "exponent out of range".into(),
                    })?;
                self.pos += 1;
                v
            }
            _ => return self.err("exponent must be an integer literal"),
        };
        if paren {
            self.expect(Tok::RParen)?;
        }
        Ok(if neg { -n } else { n })
    }

    fn base(&mut self) -> Result<Expr, SymError> {
        match self.peek().cloned() {
            Some(Tok::Num(c)) => {
                self.pos += 1;
                Ok(Expr::constant(c))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                let here = self.at();
                self.pos += 1;
                if let Some(f) = Func::from_name(&name) {
                    self.expect(Tok::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::func(f, &arg));
                }
                self.variable(&name, here).map(Expr::var)
            }
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of input"),
        }
    }

    fn variable(&self, name: &str, pos: usize) -> Result<Var, SymError> {
        let undeclared = || SymError::UnknownVariable {
            name: name.to_string(),
            pos,
        };
        let (kind, rest) = name.split_at(1);
        let idx: usize = rest.parse().map_err(|_| undeclared())?;
        match kind {
            "x" if idx >= 1 && idx <= self.ctx.chart_dim && idx <= MAX_CHART_DIM as usize => {
                Ok(Var::X(idx as u8))
            }
            "t" => match self.ctx.simplex_dim {
                Some(k) if idx <= k && idx <= MAX_SIMPLEX_PARAM as usize => Ok(Var::T(idx as u8)),
                _ => Err(undeclared()),
            },
            _ => Err(undeclared()),
        }
    }
}

/// Parses an infix expression.
///
/// Grammar: `expr := term (('+'|'-') term)*`, `term := unary (('*'|'/') unary)*`,
/// `unary := '-' unary | factor`, `factor := base ('^' integer)?`,
/// `base := number | variable | func '(' expr ')' | '(' expr ')'`.
/// Numbers are decimals or rational literals `p/q` written without spaces.
pub fn parse_expr(src: &str, ctx: &VarContext) -> Result<Expr, SymError> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(SymError::Parse {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        len: src.len(),
        ctx,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse_expr(s, &VarContext::with_simplex(3, 2)).unwrap()
    }

    #[test]
    fn quotient_structure() {
        let e = p("(2*x1 - 1)/(x1 + 3)");
        let want = Expr::div(
            &Expr::sub(&Expr::mul(&Expr::int(2), &Expr::x(1)), &Expr::int(1)),
            &Expr::add(&Expr::x(1), &Expr::int(3)),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn rational_literal() {
        assert_eq!(p("3/4"), Expr::ratio(3, 4));
        assert_eq!(p("0.25"), Expr::ratio(1, 4));
        assert_eq!(p("3 / 4"), Expr::ratio(3, 4));
    }

    #[test]
    fn undeclared_variable() {
        let err = parse_expr("x1 + y", &VarContext::chart(1)).unwrap_err();
        assert!(matches!(err, SymError::UnknownVariable { ref name, pos: 5 } if name == "y"));
        assert!(parse_expr("x2", &VarContext::chart(1)).is_err());
        assert!(parse_expr("t1", &VarContext::chart(1)).is_err());
    }

    #[test]
    fn unary_and_powers() {
        assert_eq!(p("-x1^2"), Expr::neg(&Expr::powi(&Expr::x(1), 2)));
        assert_eq!(p("x1^-2"), Expr::powi(&Expr::x(1), -2));
        assert_eq!(p("x1^(-2)"), Expr::powi(&Expr::x(1), -2));
    }

    #[test]
    fn functions() {
        assert_eq!(p("log(abs(x2))"), Expr::x(2).abs().log());
        assert!(parse_expr("tan(x1)", &VarContext::chart(1)).is_err());
    }

    #[test]
    fn round_trips() {
        for s in [
            "(2*x1 - 1)/(x1 + 3)",
            "x1 - (x2 - x3)",
            "x1*(x2*x3)",
            "-(x1*x2) + -3",
            "(2/3)*x1 - 1/7",
            "exp(-x1)^3*sin(t1)/cos(t2 + t0)",
            "x1/(x2/x3)",
            "x1/2/3",
            "x2^2/4 - 1/2",
            "(-x1)^2 - -(5/2)",
            "x1^(-3)",
        ] {
            let e = p(s);
            let printed = e.to_string();
            assert_eq!(p(&printed), e, "{s} -> {printed}");
        }
    }
}
