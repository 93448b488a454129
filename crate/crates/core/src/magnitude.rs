//! Nonnegative extended-real magnitudes for control-function values.
//!
//! Values of σ and ψ are built from p-adic norms, rational constants, sums,
//! products, max/min and rational powers. Most of them stay exact in the form
//! `coeff · p^(-root)` with `coeff ≥ 0` rational and `0 ≤ root < 1`; whatever
//! leaves that form (sums of incommensurable roots, irrational powers of
//! rationals) becomes a directed-rounded binary64 enclosure.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::padic::{
    format_rational, p_power, p_power_to_f64, rational_to_f64, valuation_in, LogMagnitude,
    PrimeContext, Rounding, Valuation,
};

#[derive(Debug, Clone, PartialEq)]
pub enum Magnitude {
    /// `coeff · p^(-root)`, `coeff ≥ 0`, `0 ≤ root < 1`, `root = 0` when `coeff = 0`.
    Exact { coeff: BigRational, root: BigRational },
    /// Closed enclosure `[lo, hi]` of a value that is not exactly representable.
    Approx { lo: f64, hi: f64 },
    Infinite,
}

// relative widening applied to every libm call (powf); far above its error
const LIBM_SLACK: f64 = 1e-13;

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    let lo = (lo * (1.0 - LIBM_SLACK)).next_down().max(0.0);
    let hi = (hi * (1.0 + LIBM_SLACK)).next_up();
    (lo, hi)
}

impl Magnitude {
    pub fn zero() -> Self {
        Magnitude::rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Magnitude::rational(BigRational::one())
    }

    /// A nonnegative rational constant.
    pub fn rational(q: BigRational) -> Self {
        debug_assert!(!q.is_negative());
        Magnitude::Exact {
            coeff: q,
            root: BigRational::zero(),
        }
    }

    /// The norm `p^(-e)` written as `p^(-floor e) · p^(-frac e)`.
    pub fn from_logmag(m: &LogMagnitude, ctx: &PrimeContext) -> Self {
        match m {
            LogMagnitude::Zero => Magnitude::zero(),
            LogMagnitude::Exp(e) => {
                let whole = e.floor();
                Magnitude::Exact {
                    coeff: p_power(ctx.p(), &-whole.to_integer()),
                    root: e - whole,
                }
            }
        }
    }

    fn exact(coeff: BigRational, root: BigRational, ctx: &PrimeContext) -> Self {
        if coeff.is_zero() {
            return Magnitude::zero();
        }
        let whole = root.floor();
        if whole.is_zero() {
            Magnitude::Exact { coeff, root }
        } else {
            let shift = p_power(ctx.p(), &-whole.to_integer());
            Magnitude::Exact {
                coeff: coeff * shift,
                root: root - whole,
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Magnitude::Approx { .. })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Magnitude::Exact { coeff, .. } => coeff.is_zero(),
            Magnitude::Approx { hi, .. } => *hi == 0.0,
            Magnitude::Infinite => false,
        }
    }

    /// The value as a rational, when it is one.
    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Magnitude::Exact { coeff, root } if root.is_zero() => Some(coeff),
            _ => None,
        }
    }

    /// The value as a p-adic norm, when the coefficient is a pure power of p.
    pub fn as_logmag(&self, ctx: &PrimeContext) -> Option<LogMagnitude> {
        match self {
            Magnitude::Exact { coeff, root } => {
                if coeff.is_zero() {
                    return Some(LogMagnitude::Zero);
                }
                let p = ctx.p_big();
                let v = match valuation_in(coeff, &p) {
                    Valuation::Finite(v) => v,
                    Valuation::Infinity => unreachable!(),
                };
                let unit = coeff / p_power(ctx.p(), &BigInt::from(v));
                if unit.is_one() {
                    Some(LogMagnitude::Exp(BigRational::from_integer((-v).into()) + root))
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Directed binary64 value; overflow saturates to `f64::MAX` downward and
    /// to infinity upward.
    pub fn to_f64(&self, ctx: &PrimeContext, rounding: Rounding) -> f64 {
        match self {
            Magnitude::Infinite => match rounding {
                Rounding::Down => f64::MAX,
                Rounding::Up => f64::INFINITY,
            },
            Magnitude::Approx { lo, hi } => match rounding {
                Rounding::Down => *lo,
                Rounding::Up => *hi,
            },
            Magnitude::Exact { coeff, root } => {
                let saturate = match rounding {
                    Rounding::Down => f64::MAX,
                    Rounding::Up => f64::INFINITY,
                };
                let c = match rational_to_f64(coeff, rounding) {
                    Some(c) => c,
                    None => return saturate,
                };
                if root.is_zero() {
                    return c;
                }
                let r = match p_power_to_f64(ctx.p(), root, rounding) {
                    Ok(r) => r,
                    Err(_) => return saturate,
                };
                let v = c * r;
                match rounding {
                    Rounding::Down => v.next_down().max(0.0),
                    Rounding::Up => v.next_up(),
                }
            }
        }
    }

    pub fn enclosure(&self, ctx: &PrimeContext) -> (f64, f64) {
        (
            self.to_f64(ctx, Rounding::Down),
            self.to_f64(ctx, Rounding::Up),
        )
    }

    fn approx(lo: f64, hi: f64) -> Self {
        Magnitude::Approx {
            lo: lo.max(0.0),
            hi,
        }
    }

    pub fn add(&self, other: &Magnitude, ctx: &PrimeContext) -> Magnitude {
        match (self, other) {
            (Magnitude::Infinite, _) | (_, Magnitude::Infinite) => Magnitude::Infinite,
            (a, b) if a.is_exact() && a.is_zero() => b.clone(),
            (a, b) if b.is_exact() && b.is_zero() => a.clone(),
            (Magnitude::Exact { coeff: c1, root: r1 }, Magnitude::Exact { coeff: c2, root: r2 })
                if r1 == r2 =>
            {
                Magnitude::Exact {
                    coeff: c1 + c2,
                    root: r1.clone(),
                }
            }
            _ => {
                let (l1, h1) = self.enclosure(ctx);
                let (l2, h2) = other.enclosure(ctx);
                Magnitude::approx((l1 + l2).next_down(), (h1 + h2).next_up())
            }
        }
    }

    pub fn mul(&self, other: &Magnitude, ctx: &PrimeContext) -> Magnitude {
        // 0 · ∞ = 0
        if (self.is_exact() && self.is_zero()) || (other.is_exact() && other.is_zero()) {
            return Magnitude::zero();
        }
        match (self, other) {
            (Magnitude::Infinite, _) | (_, Magnitude::Infinite) => Magnitude::Infinite,
            (Magnitude::Exact { coeff: c1, root: r1 }, Magnitude::Exact { coeff: c2, root: r2 }) => {
                Magnitude::exact(c1 * c2, r1 + r2, ctx)
            }
            _ => {
                let (l1, h1) = self.enclosure(ctx);
                let (l2, h2) = other.enclosure(ctx);
                Magnitude::approx((l1 * l2).next_down(), (h1 * h2).next_up())
            }
        }
    }

    /// Multiplication by a nonnegative rational.
    pub fn scale(&self, q: &BigRational, ctx: &PrimeContext) -> Magnitude {
        self.mul(&Magnitude::rational(q.clone()), ctx)
    }

    /// `self^r` for rational `r`; `0^0 = 1`, `0^r = ∞` for `r < 0`.
    pub fn pow(&self, r: &BigRational, ctx: &PrimeContext) -> Magnitude {
        if r.is_zero() {
            return Magnitude::one();
        }
        match self {
            Magnitude::Infinite => {
                if r.is_positive() {
                    Magnitude::Infinite
                } else {
                    Magnitude::zero()
                }
            }
            Magnitude::Exact { coeff, .. } if coeff.is_zero() => {
                if r.is_positive() {
                    Magnitude::zero()
                } else {
                    Magnitude::Infinite
                }
            }
            Magnitude::Exact { coeff, root } => {
                if let Some(LogMagnitude::Exp(e)) = self.as_logmag(ctx) {
                    return Magnitude::from_logmag(&LogMagnitude::Exp(e * r), ctx);
                }
                if let Some(k) = r.is_integer().then(|| r.to_integer()).and_then(|k| k.to_i32()) {
                    let c = num_traits::Pow::pow(coeff, k);
                    return Magnitude::exact(c, root * r, ctx);
                }
                self.pow_approx(r, ctx)
            }
            Magnitude::Approx { .. } => self.pow_approx(r, ctx),
        }
    }

    fn pow_approx(&self, r: &BigRational, ctx: &PrimeContext) -> Magnitude {
        let (lo, hi) = self.enclosure(ctx);
        let rf = r.to_f64().unwrap_or(f64::NAN);
        let (a, b) = if r.is_positive() {
            (lo.powf(rf), hi.powf(rf))
        } else {
            (hi.powf(rf), lo.powf(rf))
        };
        // `rf` carries its own conversion error; widen accordingly
        let (a, b) = widen(a, b);
        if b.is_infinite() && a.is_infinite() {
            return Magnitude::Infinite;
        }
        Magnitude::approx(a, b)
    }

    /// Exact comparison when both sides are exact, interval comparison
    /// otherwise; `None` when the enclosures overlap.
    pub fn compare(&self, other: &Magnitude, ctx: &PrimeContext) -> Option<Ordering> {
        match (self, other) {
            (Magnitude::Infinite, Magnitude::Infinite) => Some(Ordering::Equal),
            (Magnitude::Infinite, _) => Some(Ordering::Greater),
            (_, Magnitude::Infinite) => Some(Ordering::Less),
            (Magnitude::Exact { coeff: c1, root: r1 }, Magnitude::Exact { coeff: c2, root: r2 }) => {
                if r1 == r2 || c1.is_zero() || c2.is_zero() {
                    return Some(c1.cmp(c2));
                }
                compare_roots(c1, r1, c2, r2, ctx).or_else(|| self.compare_enclosures(other, ctx))
            }
            _ => self.compare_enclosures(other, ctx),
        }
    }

    fn compare_enclosures(&self, other: &Magnitude, ctx: &PrimeContext) -> Option<Ordering> {
        let (l1, h1) = self.enclosure(ctx);
        let (l2, h2) = other.enclosure(ctx);
        if h1 < l2 {
            Some(Ordering::Less)
        } else if l1 > h2 {
            Some(Ordering::Greater)
        } else if l1 == h1 && l2 == h2 && l1 == l2 {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn max(&self, other: &Magnitude, ctx: &PrimeContext) -> Magnitude {
        match self.compare(other, ctx) {
            Some(Ordering::Less) => other.clone(),
            Some(_) => self.clone(),
            None => {
                let (l1, h1) = self.enclosure(ctx);
                let (l2, h2) = other.enclosure(ctx);
                Magnitude::approx(l1.max(l2), h1.max(h2))
            }
        }
    }

    pub fn min(&self, other: &Magnitude, ctx: &PrimeContext) -> Magnitude {
        match self.compare(other, ctx) {
            Some(Ordering::Greater) => other.clone(),
            Some(_) => self.clone(),
            None => {
                let (l1, h1) = self.enclosure(ctx);
                let (l2, h2) = other.enclosure(ctx);
                Magnitude::approx(l1.min(l2), h1.min(h2))
            }
        }
    }

    /// Compact text form: `"3/2"`, `"3/2*p^(-1/3)"`, `"[lo, hi]"` or `"inf"`.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

// largest root denominator for which the exact power comparison is attempted
const MAX_ROOT_DENOMINATOR: u32 = 256;

/// Compares `c1·p^(-r1)` with `c2·p^(-r2)` for positive coefficients by
/// raising `c1/c2` and `p^(r1-r2)` to the common denominator.
fn compare_roots(
    c1: &BigRational,
    r1: &BigRational,
    c2: &BigRational,
    r2: &BigRational,
    ctx: &PrimeContext,
) -> Option<Ordering> {
    let delta = r1 - r2;
    let den = delta.denom().to_u32().filter(|d| *d <= MAX_ROOT_DENOMINATOR)?;
    let num = delta.numer();
    // c1 p^(-r1) <=> c2 p^(-r2)  iff  (c1/c2)^den <=> p^(num)
    let ratio = c1 / c2;
    let lhs = num_traits::Pow::pow(&ratio, den);
    let rhs = p_power(ctx.p(), num);
    Some(lhs.cmp(&rhs))
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Magnitude::Exact { coeff, root } if root.is_zero() => {
                f.write_str(&format_rational(coeff))
            }
            Magnitude::Exact { coeff, root } => {
                write!(f, "{}*p^(-{})", format_rational(coeff), format_rational(root))
            }
            Magnitude::Approx { lo, hi } => write!(f, "[{lo:e}, {hi:e}]"),
            Magnitude::Infinite => f.write_str("inf"),
        }
    }
}
