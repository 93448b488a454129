//! Decay hypotheses on the control function and the `σ̂` running maxima.

use std::fmt;

use num_rational::BigRational;
use serde::Serialize;

use super::{EngineSettings, Kind};
use crate::error::{usage, Result};
use crate::function::SigmaExpr;
use crate::magnitude::Magnitude;
use crate::padic::{int, padic_abs, LogMagnitude, PrimeContext};
use crate::spaces::{classify_tail, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypothesisStatus {
    SatisfiedAtHorizon,
    ViolatedAtHorizon,
    Undecided,
}

impl fmt::Display for HypothesisStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HypothesisStatus::SatisfiedAtHorizon => "satisfied-at-horizon",
            HypothesisStatus::ViolatedAtHorizon => "violated-at-horizon",
            HypothesisStatus::Undecided => "undecided",
        })
    }
}

/// Finite-horizon evidence that a nonnegative term sequence tends to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisVerdict {
    /// Short identifier, e.g. `sigma-bar-decay/additive`.
    pub hypothesis: String,
    pub horizon: usize,
    pub terms: Vec<Magnitude>,
    pub status: HypothesisStatus,
    /// Trailing window that certified a violation.
    pub witness_tail: Option<Vec<Magnitude>>,
}

impl HypothesisVerdict {
    /// Classifies `terms` with the engine's window policy: strictly decreasing
    /// over the window and small relative to the largest term, or all zero,
    /// is satisfied; positive and non-decreasing is violated.
    pub fn classify(
        hypothesis: String,
        terms: Vec<Magnitude>,
        ctx: &PrimeContext,
        settings: &EngineSettings,
    ) -> Result<Self> {
        let window = settings.policy.window;
        if window == 0 || terms.len() < window {
            return Err(usage(format!(
                "{hypothesis}: horizon {} is shorter than the decision window {window}",
                terms.len()
            )));
        }
        let peak = running_max(&terms, ctx);
        let threshold = peak.mul(
            &Magnitude::from_logmag(&LogMagnitude::from_int_exponent(settings.hypothesis_threshold), ctx),
            ctx,
        );
        let tail = &terms[terms.len() - window..];
        let exact_zero = |m: &Magnitude| m.is_exact() && m.is_zero();
        let verdict = classify_tail(
            tail,
            |a, b| a.compare(b, ctx),
            exact_zero,
            |m| matches!(m.compare(&threshold, ctx), Some(std::cmp::Ordering::Less | std::cmp::Ordering::Equal)),
        );
        let status = match verdict {
            Verdict::Converged => HypothesisStatus::SatisfiedAtHorizon,
            Verdict::Diverged => HypothesisStatus::ViolatedAtHorizon,
            Verdict::Undecided => HypothesisStatus::Undecided,
        };
        let witness_tail = (status == HypothesisStatus::ViolatedAtHorizon).then(|| tail.to_vec());
        Ok(Self {
            hypothesis,
            horizon: terms.len(),
            terms,
            status,
            witness_tail,
        })
    }

    pub fn is_satisfied(&self) -> bool {
        self.status == HypothesisStatus::SatisfiedAtHorizon
    }
}

fn running_max(terms: &[Magnitude], ctx: &PrimeContext) -> Magnitude {
    terms
        .iter()
        .fold(Magnitude::zero(), |acc, t| acc.max(t, ctx))
}

/// `|s|_p^(jβ)` as a magnitude.
fn scale_power(s: i64, j: usize, ctx: &PrimeContext) -> Magnitude {
    if j == 0 {
        return Magnitude::one();
    }
    let e = ctx.beta() * int(j as i64);
    Magnitude::from_logmag(&padic_abs(&int(s), ctx).pow_positive(&e), ctx)
}

fn dyadic(u: &BigRational, k: usize) -> BigRational {
    u / BigRational::from_integer(num_traits::pow(num_bigint::BigInt::from(2), k))
}

/// `σ̄(u) = max{8σ(u, 2u), 2σ(2u, 2u)}`.
///
/// With `sigma_bar_padic_multipliers` the real multipliers 8 and 2 are
/// replaced by `|8|_p` and `|2|_p`.
pub fn sigma_bar(sigma: &SigmaExpr, u: &BigRational, ctx: &PrimeContext, settings: &EngineSettings) -> Magnitude {
    let two_u = u * int(2);
    let (m8, m2) = if settings.sigma_bar_padic_multipliers {
        (
            Magnitude::from_logmag(&padic_abs(&int(8), ctx), ctx),
            Magnitude::from_logmag(&padic_abs(&int(2), ctx), ctx),
        )
    } else {
        (Magnitude::rational(int(8)), Magnitude::rational(int(2)))
    };
    let first = m8.mul(&sigma.eval(u, &two_u, ctx), ctx);
    let second = m2.mul(&sigma.eval(&two_u, &two_u, ctx), ctx);
    first.max(&second, ctx)
}

/// Terms `|s|^(lβ) σ̄(u/2^(l+1))` for `l < horizon`.
fn sigma_bar_terms(
    sigma: &SigmaExpr,
    u: &BigRational,
    scale: i64,
    shift: usize,
    range: std::ops::Range<usize>,
    ctx: &PrimeContext,
    settings: &EngineSettings,
) -> Vec<Magnitude> {
    range
        .map(|l| scale_power(scale, l + shift, ctx).mul(&sigma_bar(sigma, &dyadic(u, l + 1), ctx, settings), ctx))
        .collect()
}

/// Estimate of `σ̂(u)` at a finite horizon, with the decay verdict that
/// decides whether the defining limit exists.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaHat {
    pub value: Magnitude,
    pub verdict: HypothesisVerdict,
}

/// Running maximum of `|s|^(lβ) σ̄(u/2^(l+1))`, `0 ≤ l < horizon`, with
/// `s = 2` (additive) or `s = 8` (cubic).
pub fn sigma_hat(
    sigma: &SigmaExpr,
    u: &BigRational,
    kind: Kind,
    ctx: &PrimeContext,
    horizon: usize,
    settings: &EngineSettings,
) -> Result<SigmaHat> {
    let terms = sigma_bar_terms(sigma, u, kind.sequence_scale(), 0, 0..horizon, ctx, settings);
    let value = running_max(&terms, ctx);
    let verdict = HypothesisVerdict::classify(format!("sigma-bar-decay/{kind}"), terms, ctx, settings)?;
    Ok(SigmaHat { value, verdict })
}

/// Decay of `|s|^(jβ) σ(u/2^j, v/2^j)`, `0 ≤ j < horizon`.
pub fn check_pair_hypothesis(
    sigma: &SigmaExpr,
    u: &BigRational,
    v: &BigRational,
    kind: Kind,
    ctx: &PrimeContext,
    horizon: usize,
    settings: &EngineSettings,
) -> Result<HypothesisVerdict> {
    let terms = (0..horizon)
        .map(|j| scale_power(kind.sequence_scale(), j, ctx).mul(&sigma.eval(&dyadic(u, j), &dyadic(v, j), ctx), ctx))
        .collect();
    HypothesisVerdict::classify(format!("pair-decay/{kind}"), terms, ctx, settings)
}

/// Window maxima `max{|s|^((l+1)β) σ̄(u/2^(l+1)) : m ≤ l < m + inner}` for
/// `m < outer`, and whether they tend to zero in `m`.
///
/// `scale` is 2 for the additive condition; the cubic condition is checked
/// with both 2 and 8.
pub fn check_uniqueness_condition(
    sigma: &SigmaExpr,
    u: &BigRational,
    scale: i64,
    ctx: &PrimeContext,
    outer: usize,
    inner: usize,
    settings: &EngineSettings,
) -> Result<HypothesisVerdict> {
    if inner < settings.policy.window {
        return Err(usage(format!(
            "uniqueness inner horizon {inner} is shorter than the decision window {}",
            settings.policy.window
        )));
    }
    if scale != 2 && scale != 8 {
        return Err(usage(format!("uniqueness scale must be 2 or 8, got {scale}")));
    }
    let all = sigma_bar_terms(sigma, u, scale, 1, 0..outer + inner, ctx, settings);
    let maxima = (0..outer)
        .map(|m| running_max(&all[m..m + inner], ctx))
        .collect();
    HypothesisVerdict::classify(format!("uniqueness/|{scale}|"), maxima, ctx, settings)
}
