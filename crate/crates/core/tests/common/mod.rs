//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's own valuation, evaluation or transform code.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exponent of `p` in a nonzero machine integer, by repeated division.
pub fn int_valuation(mut n: i64, p: i64) -> i64 {
    assert!(n != 0);
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Exponent of `p` in a nonzero rational, by repeated exact division of the
/// unreduced pair.
pub fn rational_valuation(q: &BigRational, p: u64) -> i64 {
    assert!(!q.is_zero());
    let p = BigInt::from(p);
    let strip = |mut n: BigInt| {
        let mut v = 0i64;
        loop {
            let (quot, rem) = n.div_rem(&p);
            if !rem.is_zero() {
                return v;
            }
            n = quot;
            v += 1;
        }
    };
    strip(q.numer().abs()) - strip(q.denom().clone())
}

/// `p^(-e)` as an exact rational, for integer `e`.
pub fn p_pow_neg(p: u64, e: i64) -> BigRational {
    let base = BigRational::from_integer(BigInt::from(p));
    if e >= 0 {
        BigRational::one() / num_traits::pow(base, e as usize)
    } else {
        num_traits::pow(base, (-e) as usize)
    }
}

/// `Σ c_k u^(k+1)` with plain powers; `coeffs[0]` is the linear coefficient.
pub fn naive_poly(coeffs_from_degree_one: &[BigRational], u: &BigRational) -> BigRational {
    coeffs_from_degree_one
        .iter()
        .enumerate()
        .map(|(k, c)| c * num_traits::pow(u.clone(), k + 1))
        .fold(BigRational::zero(), |a, b| a + b)
}

/// The residual `D(u, v)` written out directly.
pub fn naive_d_ac(c: &[BigRational], u: &BigRational, v: &BigRational) -> BigRational {
    let f = |x: &BigRational| naive_poly(c, x);
    let two = int(2);
    int(2) * f(&((&two * u + v) / &two)) + int(2) * f(&((&two * u - v) / &two))
        - rat(1, 4) * (f(&(u + v)) + f(&(u - v)))
        - int(3) * f(u)
}

pub fn small_rational() -> impl Strategy<Value = BigRational> {
    (-400i64..=400, 1i64..=60).prop_map(|(n, d)| rat(n, d))
}

pub fn nonzero_rational() -> impl Strategy<Value = BigRational> {
    small_rational().prop_filter("nonzero", |q| !q.is_zero())
}

pub fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![2u64, 3, 5, 7, 11, 13])
}

/// Coefficients for degrees 1..=6.
pub fn coefficients() -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec((-9i64..=9, 1i64..=5).prop_map(|(n, d)| rat(n, d)), 1..=6)
}
