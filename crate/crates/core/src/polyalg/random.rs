//! Random sparse polynomials for property checks and self-tests.

use num_bigint::BigInt;
use rand::Rng;

use super::{Poly, Rational};

/// A polynomial with up to `nterms` terms of total degree `<= max_degree`
/// and small rational coefficients. Can be zero.
pub fn random_poly<R: Rng + ?Sized>(
    rng: &mut R,
    nvars: usize,
    max_degree: u32,
    nterms: usize,
) -> Poly {
    let terms = (0..nterms).map(|_| {
        let deg = rng.random_range(0..=max_degree);
        (random_exponents(rng, nvars, deg), random_coeff(rng))
    });
    Poly::from_terms(nvars, terms.collect::<Vec<_>>()).expect("arity is consistent")
}

/// Like [`random_poly`] but guaranteed to contain a term of degree exactly
/// `degree` (so its total degree is `degree`).
pub fn random_poly_of_degree<R: Rng + ?Sized>(
    rng: &mut R,
    nvars: usize,
    degree: u32,
    nterms: usize,
) -> Poly {
    assert!(nvars > 0 || degree == 0, "no monomial of degree {degree} in zero variables");
    loop {
        let mut p = random_poly(rng, nvars, degree, nterms.saturating_sub(1));
        let lead = Poly::from_terms(
            nvars,
            [(random_exponents(rng, nvars, degree), random_coeff(rng))],
        )
        .expect("arity is consistent");
        p = &p + &lead;
        if p.total_degree().finite() == Some(degree) {
            return p;
        }
    }
}

fn random_exponents<R: Rng + ?Sized>(rng: &mut R, nvars: usize, degree: u32) -> Vec<u32> {
    let mut e = vec![0u32; nvars];
    if nvars == 0 {
        return e;
    }
    for _ in 0..degree {
        e[rng.random_range(0..nvars)] += 1;
    }
    e
}

fn random_coeff<R: Rng + ?Sized>(rng: &mut R) -> Rational {
    let mut num = 0;
    while num == 0 {
        num = rng.random_range(-9i64..=9);
    }
    let den = rng.random_range(1i64..=4);
    Rational::new(BigInt::from(num), BigInt::from(den))
}
