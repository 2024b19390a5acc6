//! Human-readable text form: `3/2*x^2*y - z + 1`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{Poly, PolyError, Rational};

/// `x, y, z` for up to three variables, `x1 .. xn` beyond.
pub fn default_var_names(n: usize) -> Vec<String> {
    match n {
        0 => vec![],
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        3 => vec!["x".into(), "y".into(), "z".into()],
        _ => (1..=n).map(|i| format!("x{i}")).collect(),
    }
}

impl Poly {
    /// Parses the text form over the named variables.
    ///
    /// Accepts `+ - * ^`, parentheses, integer and decimal literals, and `/`
    /// by constant subexpressions.
    pub fn parse<S: AsRef<str>>(text: &str, vars: &[S]) -> Result<Poly, PolyError> {
        let names: Vec<&str> = vars.iter().map(|s| s.as_ref()).collect();
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
            vars: &names,
        };
        let out = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(out)
    }

    /// Display adapter using the given variable names.
    pub fn display<'a, S: AsRef<str>>(&'a self, vars: &'a [S]) -> PolyDisplay<'a, S> {
        PolyDisplay { poly: self, vars }
    }

    /// Text form with the given variable names.
    pub fn to_text<S: AsRef<str>>(&self, vars: &[S]) -> String {
        self.display(vars).to_string()
    }
}

pub struct PolyDisplay<'a, S> {
    poly: &'a Poly,
    vars: &'a [S],
}

impl<S: AsRef<str>> fmt::Display for PolyDisplay<'_, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.poly.terms().rev().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let a = c.abs();
            let mut factors: Vec<String> = Vec::new();
            if !a.is_one() || m.degree() == 0 {
                factors.push(a.to_string());
            }
            for (v, &e) in m.exps().iter().enumerate() {
                let name = self.vars.get(v).map(|s| s.as_ref().to_string());
                let name = name.unwrap_or_else(|| format!("x{}", v + 1));
                match e {
                    0 => {}
                    1 => factors.push(name),
                    _ => factors.push(format!("{name}^{e}")),
                }
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = default_var_names(self.nvars());
        self.display(&names).fmt(f)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> PolyError {
        PolyError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if c == b'+' { &acc + &rhs } else { &acc - &rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let at = self.pos;
            let rhs = self.unary()?;
            if c == b'*' {
                acc = &acc * &rhs;
            } else {
                let d = rhs.as_constant().ok_or(PolyError::NonConstantDivisor)?;
                if d.is_zero() {
                    self.pos = at;
                    return Err(PolyError::DivisionByZero);
                }
                acc = acc.scale(&d.recip());
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Poly, PolyError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Poly, PolyError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected a non-negative integer exponent"));
            }
            let e: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.err("exponent too large"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Poly, PolyError> {
        let n = self.vars.len();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let c = self.number()?;
                Ok(Poly::constant(n, c))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => Ok(Poly::var(n, i)),
                    None => Err(PolyError::UnknownVariable(name.to_string())),
                }
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Rational, PolyError> {
        let start = self.pos;
        let mut digits = String::new();
        let mut frac_digits = 0usize;
        let mut seen_dot = false;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_digit() {
                digits.push(c as char);
                if seen_dot {
                    frac_digits += 1;
                }
            } else if c == b'.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if digits.is_empty() {
            self.pos = start;
            return Err(self.err("malformed number"));
        }
        let num: BigInt = digits.parse().map_err(|_| self.err("malformed number"))?;
        let den = num_traits::pow(BigInt::from(10), frac_digits);
        Ok(Rational::new(num, den))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{int, rat};
    use super::*;

    #[test]
    fn prints_in_descending_grlex() {
        let v = ["x", "y", "z"];
        let p = Poly::parse("-z + 3/2*x^2*y + 1 - x", &v).unwrap();
        assert_eq!(p.to_text(&v), "3/2*x^2*y - x - z + 1");
        assert_eq!(Poly::zero(2).to_string(), "0");
        assert_eq!(Poly::constant(1, rat(-1, 3)).to_string(), "-1/3");
    }

    #[test]
    fn text_round_trip() {
        let v = ["x", "y"];
        let p = Poly::parse("(x - 2)^3 - 7/5*x*y^2 + y/4", &v).unwrap();
        assert_eq!(Poly::parse(&p.to_text(&v), &v).unwrap(), p);
    }

    #[test]
    fn decimals_are_exact() {
        let p = Poly::parse("0.25*x", &["x"]).unwrap();
        assert_eq!(p.coeff(&[1]), rat(1, 4));
        assert_eq!(Poly::parse("2.", &["x"]).unwrap().coeff(&[0]), int(2));
    }

    #[test]
    fn errors_carry_position() {
        let e = Poly::parse("x + * y", &["x", "y"]).unwrap_err();
        assert!(matches!(e, PolyError::Parse { pos: 4, .. }), "{e:?}");
        assert_eq!(
            Poly::parse("w", &["x"]).unwrap_err(),
            PolyError::UnknownVariable("w".into())
        );
        assert_eq!(
            Poly::parse("1/x", &["x"]).unwrap_err(),
            PolyError::NonConstantDivisor
        );
        assert!(Poly::parse("(x", &["x"]).is_err());
        assert!(Poly::parse("x^", &["x"]).is_err());
        assert!(Poly::parse("1/(x-x)", &["x"]).is_err());
    }
}
