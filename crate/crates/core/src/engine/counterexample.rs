//! The square map `F(u) = u²` as a non-example for both constructions.

use num_rational::BigRational;
use num_traits::Zero;

use super::{approximate, d_ac, Kind};
use crate::error::{usage, Error, Result};
use crate::function::{PolyMap, TestMap};
use crate::padic::{int, padic_abs, LogMagnitude, PrimeContext};
use crate::spaces::{SequenceTrace, Vector, WindowPolicy};

/// Outcome of running `u²` through one dyadic construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub kind: Kind,
    pub p: u64,
    pub u: BigRational,
    pub trace: SequenceTrace,
    /// The constant difference norm seen along the whole trace.
    pub constant_diff_norm: LogMagnitude,
    /// `|4u²|_p` (additive) or `|2u²|_p` (cubic).
    pub closed_form: LogMagnitude,
    /// `D(u, 2u)`, which equals `5u²/2`.
    pub residual_at_double: Vector,
    /// `D(u, u)`; in general `D(u, v) = (u² + v²)/2` for this map.
    pub residual_at_diagonal: Vector,
    pub notes: Vec<String>,
}

/// Reproduces the divergence of `2^j K(u/2^j)` or `8^j N(u/2^j)` for
/// `F(u) = u²` at an odd prime.
///
/// The additive differences are `4u²·2^(−j−1)` and the cubic ones are
/// `2^(j+1)u²`, so for odd `p` both difference norms are constant.
pub fn reproduce_counterexample(
    kind: Kind,
    p: u64,
    u: &BigRational,
    horizon: usize,
    policy: &WindowPolicy,
) -> Result<CounterexampleReport> {
    if p == 2 {
        return Err(usage("the square-map counterexample needs an odd prime"));
    }
    if u.is_zero() {
        return Err(usage("the square-map counterexample needs u != 0"));
    }
    let ctx = PrimeContext::with_unit_beta(p)?;
    let f: TestMap = PolyMap::scalar(&[int(0), int(1)]).into();
    let trace = approximate(&f, kind, u, &ctx, horizon, policy)?;
    let multiplier = match kind {
        Kind::Additive => 4,
        Kind::Cubic => 2,
    };
    let closed_form = padic_abs(&(int(multiplier) * u * u), &ctx);
    let constant_diff_norm = trace.diff_norms[0].clone();
    if let Some((j, bad)) = trace
        .diff_norms
        .iter()
        .enumerate()
        .find(|(_, m)| **m != closed_form)
    {
        return Err(Error::Consistency(format!(
            "{kind} difference norm at step {j} is {bad}, expected the constant {closed_form}"
        )));
    }
    let notes = vec![
        "|2|_p^t = 1 is read as |2|_p = 1, which holds for every odd p".to_string(),
        "D(u, v) = (u^2 + v^2)/2 for F(u) = u^2; the value 5u^2/2 is D(u, 2u)".to_string(),
    ];
    Ok(CounterexampleReport {
        kind,
        p,
        u: u.clone(),
        residual_at_double: d_ac(&f, u, &(u * int(2)))?,
        residual_at_diagonal: d_ac(&f, u, u)?,
        trace,
        constant_diff_norm,
        closed_form,
        notes,
    })
}
