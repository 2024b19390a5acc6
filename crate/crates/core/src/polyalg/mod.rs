//! Exact sparse multivariate polynomials with rational coefficients.
//!
//! [`Poly`] is the symbolic carrier for every construction in the crate: the
//! planar fields, their spatial lifts, the guiding system and the squaring
//! pullback. Terms live in a map keyed by [`Monomial`] exponent vectors, kept
//! in graded-lexicographic order so that printing and serialization are
//! deterministic. Zero coefficients are never stored.

mod horner;
mod json;
mod parse;
pub mod random;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use horner::HornerPoly;
pub use json::{PolyJson, TermJson};
pub use parse::default_var_names;

/// Exact coefficient type. Always reduced with a positive denominator.
pub type Rational = BigRational;

/// Builds the rational `num/den`. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Builds the integer `n` as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("variable count mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("variable index {var} out of range for {nvars} variables")]
    VarOutOfRange { var: usize, nvars: usize },
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("division by a non-constant polynomial")]
    NonConstantDivisor,
    #[error("division by zero")]
    DivisionByZero,
    #[error("malformed term list: {0}")]
    BadTermList(String),
}

/// Exponent vector of a single term, ordered graded-lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        Monomial(e)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Total degree with a distinguished value for the zero polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Degree {
    NegInfinity,
    Finite(u32),
}

impl Degree {
    pub fn finite(self) -> Option<u32> {
        match self {
            Degree::NegInfinity => None,
            Degree::Finite(d) => Some(d),
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::NegInfinity => f.write_str("-inf"),
            Degree::Finite(d) => write!(f, "{d}"),
        }
    }
}

/// Sparse polynomial in `nvars` variables over the rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        Self::monomial(c, Monomial::one(nvars))
    }

    /// The coordinate function `x_var`. Panics if `var >= nvars`.
    pub fn var(nvars: usize, var: usize) -> Self {
        assert!(var < nvars, "variable {var} out of range for {nvars}");
        Self::monomial(Rational::one(), Monomial::var(nvars, var))
    }

    pub fn monomial(c: Rational, m: Monomial) -> Self {
        let nvars = m.0.len();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { nvars, terms }
    }

    /// Collects terms, summing duplicates and dropping zeros.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let mut map: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (exps, c) in terms {
            if exps.len() != nvars {
                return Err(PolyError::ArityMismatch {
                    expected: nvars,
                    found: exps.len(),
                });
            }
            accumulate(&mut map, Monomial(exps), c);
        }
        Ok(Poly { nvars, terms: map })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded-lexicographic order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[u32]) -> Rational {
        self.terms
            .get(&Monomial(exps.to_vec()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// The value of a constant polynomial, `None` otherwise.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                (m.degree() == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn total_degree(&self) -> Degree {
        self.terms
            .keys()
            .next_back()
            .map_or(Degree::NegInfinity, |m| Degree::Finite(m.degree()))
    }

    /// Total degree counting only the listed variables.
    pub fn degree_in(&self, vars: &[usize]) -> Degree {
        self.terms
            .keys()
            .map(|m| Degree::Finite(vars.iter().map(|&v| m.0[v]).sum()))
            .max()
            .unwrap_or(Degree::NegInfinity)
    }

    /// Largest exponent of `var` over all terms.
    pub fn degree_of_var(&self, var: usize) -> Degree {
        self.terms
            .keys()
            .map(|m| Degree::Finite(m.0[var]))
            .max()
            .unwrap_or(Degree::NegInfinity)
    }

    fn check_same(&self, other: &Poly) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_same(other)?;
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            accumulate(&mut terms, m.clone(), c.clone());
        }
        Ok(Poly {
            nvars: self.nvars,
            terms,
        })
    }

    pub fn checked_sub(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.checked_add(&-other)
    }

    pub fn checked_mul(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_same(other)?;
        let mut terms = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                accumulate(&mut terms, ma.mul(mb), ca * cb);
            }
        }
        Ok(Poly {
            nvars: self.nvars,
            terms,
        })
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v * c))
                .collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one(self.nvars);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Substitutes `subs[i]` for variable `i`. The result lives in the
    /// variable space shared by the substitutions.
    pub fn compose(&self, subs: &[Poly]) -> Result<Poly, PolyError> {
        if subs.len() != self.nvars {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars,
                found: subs.len(),
            });
        }
        let target = match subs.first() {
            Some(s) => s.nvars,
            // A polynomial in zero variables is a constant.
            None => 0,
        };
        if let Some(bad) = subs.iter().find(|s| s.nvars != target) {
            return Err(PolyError::ArityMismatch {
                expected: target,
                found: bad.nvars,
            });
        }
        let mut powers: Vec<Vec<Poly>> = (0..self.nvars)
            .map(|_| vec![Poly::one(target)])
            .collect();
        let mut out: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut prod = Poly::constant(target, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = powers[i].last().unwrap() * &subs[i];
                    powers[i].push(next);
                }
                prod = &prod * &powers[i][e as usize];
            }
            for (pm, pc) in prod.terms {
                accumulate(&mut out, pm, pc);
            }
        }
        Ok(Poly {
            nvars: target,
            terms: out,
        })
    }

    /// Formal partial derivative with respect to `var`.
    pub fn partial(&self, var: usize) -> Result<Poly, PolyError> {
        if var >= self.nvars {
            return Err(PolyError::VarOutOfRange {
                var,
                nvars: self.nvars,
            });
        }
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.0[var] > 0)
            .map(|(m, c)| {
                let mut e = m.0.clone();
                let k = e[var];
                e[var] -= 1;
                (Monomial(e), c * Rational::from_integer(BigInt::from(k)))
            })
            .collect();
        Ok(Poly {
            nvars: self.nvars,
            terms,
        })
    }

    pub fn eval_exact(&self, point: &[Rational]) -> Result<Rational, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars,
                found: point.len(),
            });
        }
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(&m.0) {
                if e > 0 {
                    t *= num_traits::pow(x.clone(), e as usize);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Floating evaluation by nested Horner schemes, one variable at a time.
    pub fn eval_float(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars,
                found: point.len(),
            });
        }
        Ok(self.horner().eval(point))
    }

    /// Compiled floating-point evaluator for repeated use.
    pub fn horner(&self) -> HornerPoly {
        HornerPoly::new(self)
    }

    /// Re-embeds into `nvars` variables, keeping variable `i` as `map[i]`.
    pub fn remap_vars(&self, nvars: usize, map: &[usize]) -> Result<Poly, PolyError> {
        if map.len() != self.nvars {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars,
                found: map.len(),
            });
        }
        if let Some(&v) = map.iter().find(|&&v| v >= nvars) {
            return Err(PolyError::VarOutOfRange { var: v, nvars });
        }
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut e = vec![0; nvars];
            for (i, &k) in m.0.iter().enumerate() {
                e[map[i]] += k;
            }
            accumulate(&mut terms, Monomial(e), c.clone());
        }
        Ok(Poly { nvars, terms })
    }

    /// Exact quotient by `x_var^power`, or `None` if some term is not divisible.
    pub fn div_var_power(&self, var: usize, power: u32) -> Option<Poly> {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if m.0[var] < power {
                return None;
            }
            let mut e = m.0.clone();
            e[var] -= power;
            terms.insert(Monomial(e), c.clone());
        }
        Some(Poly {
            nvars: self.nvars,
            terms,
        })
    }

    /// Rewrites `x_var^(factor*a)` as `x_var^a`; `None` if some exponent of
    /// `var` is not a multiple of `factor`.
    pub fn deflate_var(&self, var: usize, factor: u32) -> Option<Poly> {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if m.0[var] % factor != 0 {
                return None;
            }
            let mut e = m.0.clone();
            e[var] /= factor;
            terms.insert(Monomial(e), c.clone());
        }
        Some(Poly {
            nvars: self.nvars,
            terms,
        })
    }

    /// Largest coefficient magnitude as `f64`, for blowup guards.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.abs().to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

fn accumulate(map: &mut BTreeMap<Monomial, Rational>, m: Monomial, c: Rational) {
    if c.is_zero() {
        return;
    }
    match map.entry(m) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            *o.get_mut() += c;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

// Operator forms panic on a variable-count mismatch; use the `checked_*`
// methods where the arity is not known statically.
impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        self.checked_add(rhs).expect("polynomial arity mismatch")
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self.checked_sub(rhs).expect("polynomial arity mismatch")
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        self.checked_mul(rhs).expect("polynomial arity mismatch")
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $f(self, rhs: Poly) -> Poly {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}
