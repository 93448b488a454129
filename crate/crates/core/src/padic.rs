//! Exact rational arithmetic primitives and the p-adic absolute value.
//!
//! Norm values are never materialized as reals inside the engine. A p-adic
//! norm `p^(-e)` is kept as its exponent `e` (a rational once β-scaling is
//! applied), and conversion to binary64 happens only through
//! [`logmag_to_real`], with an explicit rounding direction.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{usage, Error, Result};

/// A prime `p` together with the β exponent of the (n,β)-norm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeContext {
    p: u64,
    beta: BigRational,
}

impl PrimeContext {
    pub fn new(p: u64, beta: BigRational) -> Result<Self> {
        if !is_prime(p) {
            return Err(usage(format!("{p} is not prime")));
        }
        if !beta.is_positive() || beta > BigRational::one() {
            return Err(usage(format!(
                "beta must satisfy 0 < beta <= 1, got {}",
                format_rational(&beta)
            )));
        }
        Ok(Self { p, beta })
    }

    /// Context with β = 1.
    pub fn with_unit_beta(p: u64) -> Result<Self> {
        Self::new(p, BigRational::one())
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn beta(&self) -> &BigRational {
        &self.beta
    }

    pub fn p_big(&self) -> BigInt {
        BigInt::from(self.p)
    }
}

/// Deterministic Miller-Rabin; the witness set is exact for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for q in SMALL {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for a in SMALL {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// p-adic valuation of a rational: finite for nonzero input, infinite at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinity,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinity => None,
        }
    }
}

fn strip_factor(n: &mut BigInt, p: &BigInt) -> i64 {
    let mut count = 0;
    loop {
        let (q, r) = n.div_rem(p);
        if !r.is_zero() {
            return count;
        }
        *n = q;
        count += 1;
    }
}

/// Exponent of `p` in `q`, i.e. the γ with `q = p^γ · e/f` and `p ∤ e f`.
pub fn valuation(q: &BigRational, ctx: &PrimeContext) -> Valuation {
    valuation_in(q, &ctx.p_big())
}

pub(crate) fn valuation_in(q: &BigRational, p: &BigInt) -> Valuation {
    if q.is_zero() {
        return Valuation::Infinity;
    }
    let mut num = q.numer().clone();
    let mut den = q.denom().clone();
    // reduced form: at most one of the two carries factors of p
    let up = strip_factor(&mut num, p);
    let down = strip_factor(&mut den, p);
    Valuation::Finite(up - down)
}

/// A p-adic norm value `p^(-exponent)`, or exactly zero.
///
/// The derived ordering is the ordering of the represented norms, so
/// `Zero` is the minimum and larger exponents are smaller norms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LogMagnitude {
    Zero,
    Exp(BigRational),
}

impl LogMagnitude {
    pub fn one() -> Self {
        LogMagnitude::Exp(BigRational::zero())
    }

    pub fn from_exponent(e: impl Into<BigRational>) -> Self {
        LogMagnitude::Exp(e.into())
    }

    pub fn from_int_exponent(e: i64) -> Self {
        LogMagnitude::Exp(BigRational::from_integer(BigInt::from(e)))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, LogMagnitude::Zero)
    }

    pub fn exponent(&self) -> Option<&BigRational> {
        match self {
            LogMagnitude::Zero => None,
            LogMagnitude::Exp(e) => Some(e),
        }
    }

    /// Product of norms (exponents add).
    pub fn mul(&self, other: &LogMagnitude) -> LogMagnitude {
        match (self, other) {
            (LogMagnitude::Exp(a), LogMagnitude::Exp(b)) => LogMagnitude::Exp(a + b),
            _ => LogMagnitude::Zero,
        }
    }

    /// Reciprocal norm; `None` for zero.
    pub fn recip(&self) -> Option<LogMagnitude> {
        self.exponent().map(|e| LogMagnitude::Exp(-e))
    }

    /// `self^r` for rational `r > 0`.
    pub fn pow_positive(&self, r: &BigRational) -> LogMagnitude {
        debug_assert!(r.is_positive());
        match self {
            LogMagnitude::Zero => LogMagnitude::Zero,
            LogMagnitude::Exp(e) => LogMagnitude::Exp(e * r),
        }
    }

    /// True when the exponent is an integer, so the norm is an exact rational.
    pub fn is_rational(&self) -> bool {
        match self {
            LogMagnitude::Zero => true,
            LogMagnitude::Exp(e) => e.is_integer(),
        }
    }

    /// The exact rational value of the norm when the exponent is an integer.
    pub fn to_rational(&self, ctx: &PrimeContext) -> Option<BigRational> {
        match self {
            LogMagnitude::Zero => Some(BigRational::zero()),
            LogMagnitude::Exp(e) if e.is_integer() && e.abs() <= int(MAX_EXACT_EXPONENT) => {
                Some(p_power(ctx.p(), &-e.to_integer()))
            }
            LogMagnitude::Exp(_) => None,
        }
    }
}

impl Ord for LogMagnitude {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (LogMagnitude::Zero, LogMagnitude::Zero) => Ordering::Equal,
            (LogMagnitude::Zero, _) => Ordering::Less,
            (_, LogMagnitude::Zero) => Ordering::Greater,
            (LogMagnitude::Exp(a), LogMagnitude::Exp(b)) => b.cmp(a),
        }
    }
}

impl PartialOrd for LogMagnitude {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LogMagnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogMagnitude::Zero => f.write_str("zero"),
            LogMagnitude::Exp(e) => write!(f, "p^(-{})", format_rational(e)),
        }
    }
}

/// `|q|_p` in exponent form.
pub fn padic_abs(q: &BigRational, ctx: &PrimeContext) -> LogMagnitude {
    match valuation(q, ctx) {
        Valuation::Infinity => LogMagnitude::Zero,
        Valuation::Finite(v) => LogMagnitude::from_int_exponent(v),
    }
}

/// `m^β`: the exponent is multiplied by β exactly.
pub fn logmag_scale_beta(m: &LogMagnitude, ctx: &PrimeContext) -> LogMagnitude {
    m.pow_positive(&ctx.beta)
}

/// Largest norm in a nonempty list.
pub fn logmag_max(ms: &[LogMagnitude]) -> Result<LogMagnitude> {
    ms.iter()
        .max()
        .cloned()
        .ok_or_else(|| usage("logmag_max of an empty list"))
}

/// Largest |exponent| for which p-powers are expanded into exact rationals.
pub const MAX_EXACT_EXPONENT: i64 = 1 << 16;

/// Direction for converting an exact value to binary64.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rounding {
    Up,
    Down,
}

impl fmt::Display for Rounding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rounding::Up => "up",
            Rounding::Down => "down",
        })
    }
}

/// `base^e` for an integer `e`, exactly.
pub fn p_power(base: u64, e: &BigInt) -> BigRational {
    let mag = e
        .abs()
        .to_u32()
        .expect("p-power exponent exceeds u32; callers bound the range first");
    let pw = num_traits::pow(BigInt::from(base), mag as usize);
    if e.is_negative() {
        BigRational::new(BigInt::one(), pw)
    } else {
        BigRational::from_integer(pw)
    }
}

/// Directed conversion of an exact rational. `None` on overflow.
pub fn rational_to_f64(q: &BigRational, rounding: Rounding) -> Option<f64> {
    let mut x = q.to_f64()?;
    if !x.is_finite() {
        return None;
    }
    // to_f64 rounds to nearest; step once or twice to land on the right side
    loop {
        let exact = BigRational::from_float(x)?;
        match (rounding, exact.cmp(q)) {
            (_, Ordering::Equal) => return Some(x),
            (Rounding::Down, Ordering::Less) | (Rounding::Up, Ordering::Greater) => return Some(x),
            (Rounding::Down, Ordering::Greater) => x = x.next_down(),
            (Rounding::Up, Ordering::Less) => x = x.next_up(),
        }
        if !x.is_finite() {
            return None;
        }
    }
}

// 2^-44 is far above the combined error of converting a fractional exponent
// in (0,1) to binary64 and of `powf` for any u64 prime.
const FRACTIONAL_POWER_SLACK: f64 = 5.684_341_886_080_802e-14;

/// Directed binary64 enclosure of `p^(-e)` for rational `e`.
pub fn p_power_to_f64(p: u64, e: &BigRational, rounding: Rounding) -> Result<f64> {
    if e.is_zero() {
        return Ok(1.0);
    }
    let log2p = (p as f64).log2();
    let approx_log2 = -e.to_f64().unwrap_or(f64::NAN) * log2p;
    if approx_log2.is_nan() || approx_log2 > 1020.0 {
        return Err(Error::Range { exponent: e.clone() });
    }
    if approx_log2 < -1070.0 {
        return Ok(match rounding {
            Rounding::Down => 0.0,
            Rounding::Up => f64::from_bits(1),
        });
    }
    let whole = e.floor();
    let frac = e - &whole;
    let exact = p_power(p, &-whole.to_integer());
    let overflow = || Error::Range { exponent: e.clone() };
    if frac.is_zero() {
        return rational_to_f64(&exact, rounding).ok_or_else(overflow);
    }
    let g = (p as f64).powf(-frac.to_f64().expect("fraction in (0,1)"));
    let value = match rounding {
        Rounding::Down => {
            let lo = rational_to_f64(&exact, Rounding::Down).ok_or_else(overflow)?;
            (lo * (g * (1.0 - FRACTIONAL_POWER_SLACK))).next_down().max(0.0)
        }
        Rounding::Up => {
            let hi = rational_to_f64(&exact, Rounding::Up).ok_or_else(overflow)?;
            (hi * (g * (1.0 + FRACTIONAL_POWER_SLACK))).next_up()
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(overflow())
    }
}

/// Binary64 approximation of a norm value rounded in the requested direction.
pub fn logmag_to_real(m: &LogMagnitude, ctx: &PrimeContext, rounding: Rounding) -> Result<f64> {
    match m {
        LogMagnitude::Zero => Ok(0.0),
        LogMagnitude::Exp(e) => p_power_to_f64(ctx.p(), e, rounding),
    }
}

/// `"num/den"`, or just `"num"` for integers.
pub fn format_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `"num"` or `"num/den"` (den nonzero) into a reduced rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num, den))
}

/// Convenience constructor used throughout the crate and its tests.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64) -> PrimeContext {
        PrimeContext::with_unit_beta(p).unwrap()
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(&rat(1450, 7), &ctx(5)), Valuation::Finite(2));
        assert_eq!(valuation(&int(0), &ctx(3)), Valuation::Infinity);
        assert_eq!(valuation(&rat(9, 4), &ctx(2)), Valuation::Finite(-2));
    }

    #[test]
    fn padic_abs_examples() {
        assert_eq!(padic_abs(&rat(1450, 7), &ctx(5)), LogMagnitude::from_int_exponent(2));
        assert_eq!(padic_abs(&int(1), &ctx(7)), LogMagnitude::one());
        assert_eq!(padic_abs(&int(48), &ctx(2)), LogMagnitude::from_int_exponent(4));
        assert_eq!(
            padic_abs(&rat(1450, 7), &ctx(5)).to_rational(&ctx(5)),
            Some(rat(1, 25))
        );
    }

    #[test]
    fn beta_scaling() {
        let half = PrimeContext::new(3, rat(1, 2)).unwrap();
        let m = logmag_scale_beta(&LogMagnitude::from_int_exponent(2), &half);
        assert_eq!(m, LogMagnitude::from_int_exponent(1));
        assert_eq!(logmag_scale_beta(&LogMagnitude::Zero, &half), LogMagnitude::Zero);
        let two_thirds = PrimeContext::new(3, rat(2, 3)).unwrap();
        let m = logmag_scale_beta(&LogMagnitude::from_int_exponent(-3), &two_thirds);
        assert_eq!(m, LogMagnitude::from_int_exponent(-2));
    }

    #[test]
    fn context_validation() {
        assert!(PrimeContext::with_unit_beta(4).is_err());
        assert!(PrimeContext::with_unit_beta(1).is_err());
        assert!(PrimeContext::new(5, int(0)).is_err());
        assert!(PrimeContext::new(5, rat(3, 2)).is_err());
        assert!(PrimeContext::new(18_446_744_073_709_551_557, rat(1, 2)).is_ok());
    }

    #[test]
    fn primality_matches_trial_division() {
        let trial = |n: u64| n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d));
        for n in 0..5000 {
            assert_eq!(is_prime(n), trial(n), "n = {n}");
        }
    }

    #[test]
    fn max_ordering() {
        let e = LogMagnitude::from_int_exponent;
        assert_eq!(logmag_max(&[e(2), e(1)]).unwrap(), e(1));
        assert_eq!(logmag_max(&[LogMagnitude::Zero, e(5)]).unwrap(), e(5));
        assert_eq!(logmag_max(&[e(3), e(3)]).unwrap(), e(3));
        assert!(matches!(logmag_max(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn directed_conversion() {
        let down = logmag_to_real(&LogMagnitude::from_int_exponent(2), &ctx(5), Rounding::Down).unwrap();
        assert!(down <= 0.04 && down >= 0.04f64.next_down());
        let up = logmag_to_real(&LogMagnitude::from_int_exponent(-2), &ctx(3), Rounding::Up).unwrap();
        assert!(up >= 9.0 && up <= 9.0f64.next_up());
        assert_eq!(logmag_to_real(&LogMagnitude::Zero, &ctx(3), Rounding::Up).unwrap(), 0.0);
        // 1/3 is not representable, so the two directions must straddle it
        let third = rat(1, 3);
        let lo = rational_to_f64(&third, Rounding::Down).unwrap();
        let hi = rational_to_f64(&third, Rounding::Up).unwrap();
        assert!(BigRational::from_float(lo).unwrap() < third);
        assert!(BigRational::from_float(hi).unwrap() > third);
        assert_eq!(lo.next_up(), hi);
    }

    #[test]
    fn fractional_exponents_are_enclosed() {
        // 5^(-1/2) = 0.4472135954999579...
        let e = rat(1, 2);
        let lo = p_power_to_f64(5, &e, Rounding::Down).unwrap();
        let hi = p_power_to_f64(5, &e, Rounding::Up).unwrap();
        assert!(lo < hi);
        assert!(lo * lo <= 0.2 && hi * hi >= 0.2);
        assert!(hi - lo < 1e-12);
    }

    #[test]
    fn range_errors() {
        let huge = LogMagnitude::from_int_exponent(-5000);
        match logmag_to_real(&huge, &ctx(2), Rounding::Up) {
            Err(Error::Range { exponent }) => assert_eq!(exponent, int(-5000)),
            other => panic!("expected range error, got {other:?}"),
        }
        let tiny = LogMagnitude::from_int_exponent(5000);
        assert_eq!(logmag_to_real(&tiny, &ctx(2), Rounding::Down).unwrap(), 0.0);
        assert!(logmag_to_real(&tiny, &ctx(2), Rounding::Up).unwrap() > 0.0);
    }

    #[test]
    fn rational_text() {
        assert_eq!(format_rational(&rat(6, 4)), "3/2");
        assert_eq!(format_rational(&int(-7)), "-7");
        assert_eq!(parse_rational(" -6/4 "), Some(rat(-3, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }
}
