//! Direct-method constructions for the additive–cubic Jensen equation
//!
//! ```text
//! D(u, v) = 2F((2u+v)/2) + 2F((2u−v)/2) − ¼[F(u+v) + F(u−v)] − 3F(u)
//! ```
//!
//! Both approximating sequences are built from the relation
//! `F(4u) − 10F(2u) + 16F(u)`, which vanishes exactly on maps spanned by
//! `u` and `u³`:
//!
//! * additive: `K(u) = F(2u) − 8F(u)` and `A_j(u) = 2^j K(u/2^j)`,
//! * cubic: `N(u) = F(2u) − 2F(u)` and `C_j(u) = 8^j N(u/2^j)`.
//!
//! Since `N − K = 6F`, the limits recombine as `F = (Ĉ − Â)/6`.

mod bounds;
mod counterexample;
mod hypothesis;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::error::Result;
use crate::function::{eval_map, PolyMap, TestMap};
use crate::padic::{int, rat, PrimeContext};
use crate::spaces::{is_cauchy, SequenceTrace, Vector, WindowPolicy};

pub use bounds::{
    decompose, verify_bound, verify_bound_additive, verify_bound_cubic, verify_residual_hypothesis,
    BoundCheck, BoundVerdict, DecompositionResult, RoundingRegime,
};
pub use counterexample::{reproduce_counterexample, CounterexampleReport};
pub use hypothesis::{
    check_pair_hypothesis, check_uniqueness_condition, sigma_bar, sigma_hat, HypothesisStatus,
    HypothesisVerdict, SigmaHat,
};

/// Which of the two direct-method constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Additive,
    Cubic,
}

impl Kind {
    /// Dyadic scale `s` of the sequence `s^j T(u/2^j)`: 2 or 8.
    pub fn sequence_scale(self) -> i64 {
        match self {
            Kind::Additive => 2,
            Kind::Cubic => 8,
        }
    }

    /// `m` in the transform `F(2u) − m·F(u)`: 8 for `K`, 2 for `N`.
    pub fn transform_multiplier(self) -> i64 {
        match self {
            Kind::Additive => 8,
            Kind::Cubic => 2,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Additive => "additive",
            Kind::Cubic => "cubic",
        })
    }
}

/// Knobs shared by all engine operations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EngineSettings {
    pub policy: WindowPolicy,
    /// A hypothesis term counts as vanished once it is at most
    /// `p^(-hypothesis_threshold)` times the largest term seen.
    pub hypothesis_threshold: i64,
    /// Read the multipliers 8 and 2 in `σ̄` as `|8|_p` and `|2|_p`.
    pub sigma_bar_padic_multipliers: bool,
}

impl Default for EngineSettings {
    fn default() -> Self {
        Self {
            policy: WindowPolicy::default(),
            hypothesis_threshold: 16,
            sigma_bar_padic_multipliers: false,
        }
    }
}

/// `D(u, v)`, evaluated exactly.
pub fn d_ac(f: &TestMap, u: &BigRational, v: &BigRational) -> Result<Vector> {
    let two = int(2);
    let plus = (&two * u + v) / &two;
    let minus = (&two * u - v) / &two;
    let lhs = &eval_map(f, &plus)?.scale(&two) + &eval_map(f, &minus)?.scale(&two);
    let quarter = &eval_map(f, &(u + v))? + &eval_map(f, &(u - v))?;
    let rhs = &quarter.scale(&rat(1, 4)) + &eval_map(f, u)?.scale(&int(3));
    Ok(&lhs - &rhs)
}

/// `F(4u) − 10F(2u) + 16F(u)`.
pub fn q_relation(f: &TestMap, u: &BigRational) -> Result<Vector> {
    let f4 = eval_map(f, &(u * int(4)))?;
    let f2 = eval_map(f, &(u * int(2)))?;
    let f1 = eval_map(f, u)?;
    Ok(&(&f4 - &f2.scale(&int(10))) + &f1.scale(&int(16)))
}

/// `u ↦ F(2u) − m·F(u)`.
#[derive(Debug, Clone, Copy)]
pub struct DerivedMap<'a> {
    base: &'a TestMap,
    multiplier: i64,
}

impl DerivedMap<'_> {
    pub fn eval(&self, u: &BigRational) -> Result<Vector> {
        let doubled = eval_map(self.base, &(u * int(2)))?;
        let here = eval_map(self.base, u)?;
        Ok(&doubled - &here.scale(&int(self.multiplier)))
    }

    /// Coefficients of the transform when the base map is a polynomial.
    pub fn closed_form(&self) -> Option<PolyMap> {
        self.base
            .polynomial()
            .map(|p| p.dilate_minus(&int(2), &int(self.multiplier)))
    }
}

/// `K(u) = F(2u) − 8F(u)`.
pub fn k_transform(f: &TestMap) -> DerivedMap<'_> {
    DerivedMap { base: f, multiplier: 8 }
}

/// `N(u) = F(2u) − 2F(u)`.
pub fn n_transform(f: &TestMap) -> DerivedMap<'_> {
    DerivedMap { base: f, multiplier: 2 }
}

pub fn transform(f: &TestMap, kind: Kind) -> DerivedMap<'_> {
    DerivedMap {
        base: f,
        multiplier: kind.transform_multiplier(),
    }
}

/// The exact terms `s^j T(u/2^j)` for `j = 0..=horizon`.
pub fn dyadic_terms(f: &TestMap, kind: Kind, u: &BigRational, horizon: usize) -> Result<Vec<Vector>> {
    let t = transform(f, kind);
    let scale = BigRational::from_integer(BigInt::from(kind.sequence_scale()));
    let half = rat(1, 2);
    let mut factor = BigRational::one();
    let mut point = u.clone();
    let mut terms = Vec::with_capacity(horizon + 1);
    for _ in 0..=horizon {
        terms.push(t.eval(&point)?.scale(&factor));
        factor *= &scale;
        point *= &half;
    }
    Ok(terms)
}

/// Trace of `s^j T(u/2^j)` with its Cauchy certificate.
pub fn approximate(
    f: &TestMap,
    kind: Kind,
    u: &BigRational,
    ctx: &PrimeContext,
    horizon: usize,
    policy: &WindowPolicy,
) -> Result<SequenceTrace> {
    is_cauchy(dyadic_terms(f, kind, u, horizon)?, ctx, policy)
}

/// Trace of `A_j(u) = 2^j K(u/2^j)`.
pub fn approximate_additive(
    f: &TestMap,
    u: &BigRational,
    ctx: &PrimeContext,
    horizon: usize,
    policy: &WindowPolicy,
) -> Result<SequenceTrace> {
    approximate(f, Kind::Additive, u, ctx, horizon, policy)
}

/// Trace of `C_j(u) = 8^j N(u/2^j)`.
pub fn approximate_cubic(
    f: &TestMap,
    u: &BigRational,
    ctx: &PrimeContext,
    horizon: usize,
    policy: &WindowPolicy,
) -> Result<SequenceTrace> {
    approximate(f, Kind::Cubic, u, ctx, horizon, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::LogMagnitude;
    use crate::spaces::Verdict;

    fn scalar_map(coeffs: &[i64]) -> TestMap {
        let cs: Vec<BigRational> = coeffs.iter().map(|&c| int(c)).collect();
        PolyMap::scalar(&cs).into()
    }

    fn s(q: BigRational) -> Vector {
        Vector::scalar(q)
    }

    #[test]
    fn residual_examples() {
        let identity = scalar_map(&[1]);
        assert_eq!(d_ac(&identity, &int(2), &int(2)).unwrap(), s(int(1)));
        let zero: TestMap = PolyMap::zero(1).into();
        assert!(d_ac(&zero, &rat(3, 5), &int(7)).unwrap().is_zero());
        let cube = scalar_map(&[0, 0, 1]);
        assert_eq!(d_ac(&cube, &int(1), &int(1)).unwrap(), s(int(2)));
    }

    #[test]
    fn relation_examples() {
        assert!(q_relation(&scalar_map(&[1]), &rat(5, 3)).unwrap().is_zero());
        assert!(q_relation(&scalar_map(&[0, 0, 1]), &rat(-2, 7)).unwrap().is_zero());
        assert_eq!(q_relation(&scalar_map(&[0, 1]), &int(1)).unwrap(), s(int(-8)));
    }

    #[test]
    fn transform_examples() {
        let square = scalar_map(&[0, 1]);
        for u in [int(1), rat(3, 2), int(-4)] {
            assert_eq!(k_transform(&square).eval(&u).unwrap(), s(int(-4) * &u * &u));
            assert_eq!(n_transform(&square).eval(&u).unwrap(), s(int(2) * &u * &u));
        }
        let f = scalar_map(&[3, 0, 5]);
        assert_eq!(k_transform(&f).eval(&int(2)).unwrap(), s(int(-36)));
        assert_eq!(n_transform(&f).eval(&int(2)).unwrap(), s(int(240)));
        let zero: TestMap = PolyMap::zero(1).into();
        assert!(k_transform(&zero).eval(&int(9)).unwrap().is_zero());
        assert!(k_transform(&zero).closed_form().unwrap().coords()[0].is_zero());

        let g = scalar_map(&[0, 1, 1]);
        let u = rat(7, 3);
        let diff = &n_transform(&g).eval(&u).unwrap() - &k_transform(&g).eval(&u).unwrap();
        assert_eq!(diff, eval_map(&g, &u).unwrap().scale(&int(6)));
    }

    #[test]
    fn traces_for_exact_solutions() {
        let ctx = PrimeContext::with_unit_beta(2).unwrap();
        let policy = WindowPolicy::default();
        let f = scalar_map(&[3, 0, 5]);
        let a = approximate_additive(&f, &int(1), &ctx, 10, &policy).unwrap();
        assert!(a.terms.iter().all(|t| *t == s(int(-18))));
        assert_eq!(a.verdict, Verdict::Converged);
        assert!(a.limit.as_ref().unwrap().exact);
        let c = approximate_cubic(&f, &int(1), &ctx, 10, &policy).unwrap();
        assert!(c.terms.iter().all(|t| *t == s(int(30))));
        assert_eq!(c.limit_value(), Some(&s(int(30))));

        let zero: TestMap = PolyMap::zero(2).into();
        let z = approximate_cubic(&zero, &int(5), &ctx, 8, &policy).unwrap();
        assert!(z.terms.iter().all(Vector::is_zero));
        assert_eq!(z.verdict, Verdict::Converged);
    }

    #[test]
    fn square_map_diverges() {
        let ctx = PrimeContext::with_unit_beta(5).unwrap();
        let policy = WindowPolicy::default();
        let square = scalar_map(&[0, 1]);
        let a = approximate_additive(&square, &int(1), &ctx, 20, &policy).unwrap();
        assert_eq!(a.verdict, Verdict::Diverged);
        assert!(a.diff_norms.iter().all(|m| *m == LogMagnitude::one()));
        let c = approximate_cubic(&square, &int(1), &ctx, 20, &policy).unwrap();
        for (j, t) in c.terms.iter().enumerate() {
            let two_pow = BigRational::from_integer(num_traits::pow(BigInt::from(2), j + 1));
            assert_eq!(*t, s(two_pow));
        }
        assert_eq!(c.verdict, Verdict::Diverged);
    }
}
