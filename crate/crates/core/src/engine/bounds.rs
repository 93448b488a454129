//! Conservative bound checks and the joint decomposition.

use std::cmp::Ordering;
use std::fmt;

use num_rational::BigRational;
use serde::Serialize;

use super::hypothesis::{sigma_hat, SigmaHat};
use super::{approximate, d_ac, transform, EngineSettings, Kind};
use crate::error::{usage, Error, Result};
use crate::function::{eval_map, PsiExpr, SigmaExpr, TestMap};
use crate::magnitude::Magnitude;
use crate::padic::{int, padic_abs, LogMagnitude, PrimeContext, Rounding};
use crate::spaces::{slot_norm, NBetaContext, SequenceTrace, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundVerdict {
    Holds,
    Fails,
    IncomparableAtPrecision,
}

impl fmt::Display for BoundVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundVerdict::Holds => "holds",
            BoundVerdict::Fails => "fails",
            BoundVerdict::IncomparableAtPrecision => "incomparable-at-precision",
        })
    }
}

/// How the right-hand side is known before the final float comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundingRegime {
    /// The right side is an exact value (rational or root of a p-power).
    Exact,
    /// The right side is only known as an enclosure.
    Enclosure,
}

impl fmt::Display for RoundingRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoundingRegime::Exact => "exact",
            RoundingRegime::Enclosure => "enclosure",
        })
    }
}

/// One inequality `left ≤ right`, decided with directed rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub label: String,
    pub left: LogMagnitude,
    pub right: Magnitude,
    /// `left` rounded up.
    pub left_up: f64,
    /// `right` rounded down.
    pub right_down: f64,
    pub regime: RoundingRegime,
    /// Ordering of the exact values, when it could be decided exactly.
    pub exact_order: Option<Ordering>,
    /// Iteration horizon behind the right side or the limit, if any.
    pub horizon: Option<usize>,
    pub verdict: BoundVerdict,
}

impl BoundCheck {
    /// `holds` only if `round_up(left) ≤ round_down(right)`. `fails` when the
    /// opposite strict inequality survives rounding, or when the floats are
    /// inconclusive but the exact comparison says `left > right`.
    pub fn evaluate(
        label: impl Into<String>,
        left: LogMagnitude,
        right: Magnitude,
        horizon: Option<usize>,
        ctx: &PrimeContext,
    ) -> Self {
        let left_mag = Magnitude::from_logmag(&left, ctx);
        let left_up = left_mag.to_f64(ctx, Rounding::Up);
        let left_down = left_mag.to_f64(ctx, Rounding::Down);
        let right_up = right.to_f64(ctx, Rounding::Up);
        let right_down = right.to_f64(ctx, Rounding::Down);
        let exact_order = left_mag.compare(&right, ctx).filter(|_| right.is_exact());
        let verdict = if left_up <= right_down {
            BoundVerdict::Holds
        } else if left_down > right_up || exact_order == Some(Ordering::Greater) {
            BoundVerdict::Fails
        } else {
            BoundVerdict::IncomparableAtPrecision
        };
        let regime = if right.is_exact() {
            RoundingRegime::Exact
        } else {
            RoundingRegime::Enclosure
        };
        Self {
            label: label.into(),
            left,
            right,
            left_up,
            right_down,
            regime,
            exact_order,
            horizon,
            verdict,
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict == BoundVerdict::Holds
    }
}

fn check_slots(ws: &[Vector], nctx: &NBetaContext) -> Result<()> {
    if ws.len() + 1 != nctx.n() {
        return Err(usage(format!(
            "expected {} slot vectors for n = {}, got {}",
            nctx.n() - 1,
            nctx.n(),
            ws.len()
        )));
    }
    if let Some(w) = ws.iter().find(|w| w.dim() != nctx.d()) {
        return Err(usage(format!("slot vector {w} has dimension {}, expected {}", w.dim(), nctx.d())));
    }
    Ok(())
}

/// `1/|m|_p^β` as a magnitude.
fn inverse_beta_norm(m: i64, ctx: &PrimeContext) -> Magnitude {
    let norm = padic_abs(&int(m), ctx).pow_positive(ctx.beta());
    Magnitude::from_logmag(&norm.recip().expect("nonzero integer"), ctx)
}

/// Checks `‖D(u, v), w_1, …, w_{n−1}‖_β ≤ σ(u, v)·ψ(w_1, …)` at every pair.
pub fn verify_residual_hypothesis(
    f: &TestMap,
    sigma: &SigmaExpr,
    psi: &PsiExpr,
    pairs: &[(BigRational, BigRational)],
    ws: &[Vector],
    nctx: &NBetaContext,
) -> Result<Vec<BoundCheck>> {
    check_slots(ws, nctx)?;
    let ctx = nctx.prime();
    let psi_value = psi.eval(ws, ctx)?;
    pairs
        .iter()
        .map(|(u, v)| {
            let left = slot_norm(&d_ac(f, u, v)?, ws, nctx)?;
            let right = sigma.eval(u, v, ctx).mul(&psi_value, ctx);
            Ok(BoundCheck::evaluate(format!("residual({u}, {v})"), left, right, None, ctx))
        })
        .collect()
}

/// Checks `‖T(u) − L(u), w_1, …‖_β ≤ (1/|s|^β)·σ̂(u)·ψ(w_1, …)` where `T` is
/// the transform of `kind`, `L(u)` the certified limit of its trace and
/// `s = 2` or `8`.
#[allow(clippy::too_many_arguments)]
pub fn verify_bound(
    kind: Kind,
    f: &TestMap,
    trace: &SequenceTrace,
    u: &BigRational,
    ws: &[Vector],
    sigma_hat: &Magnitude,
    psi: &PsiExpr,
    nctx: &NBetaContext,
) -> Result<BoundCheck> {
    let limit = match (trace.is_converged(), trace.limit_value()) {
        (true, Some(l)) => l,
        _ => {
            return Err(usage(format!(
                "{kind} bound needs a converged trace, got verdict {}",
                trace.verdict
            )))
        }
    };
    check_slots(ws, nctx)?;
    let ctx = nctx.prime();
    let diff = &transform(f, kind).eval(u)? - limit;
    let left = slot_norm(&diff, ws, nctx)?;
    let right = inverse_beta_norm(kind.sequence_scale(), ctx)
        .mul(sigma_hat, ctx)
        .mul(&psi.eval(ws, ctx)?, ctx);
    let horizon = trace.terms.len().saturating_sub(1);
    Ok(BoundCheck::evaluate(format!("{kind}-bound({u})"), left, right, Some(horizon), ctx))
}

#[allow(clippy::too_many_arguments)]
pub fn verify_bound_additive(
    f: &TestMap,
    trace: &SequenceTrace,
    u: &BigRational,
    ws: &[Vector],
    sigma_hat: &Magnitude,
    psi: &PsiExpr,
    nctx: &NBetaContext,
) -> Result<BoundCheck> {
    verify_bound(Kind::Additive, f, trace, u, ws, sigma_hat, psi, nctx)
}

#[allow(clippy::too_many_arguments)]
pub fn verify_bound_cubic(
    f: &TestMap,
    trace: &SequenceTrace,
    u: &BigRational,
    ws: &[Vector],
    sigma_hat: &Magnitude,
    psi: &PsiExpr,
    nctx: &NBetaContext,
) -> Result<BoundCheck> {
    verify_bound(Kind::Cubic, f, trace, u, ws, sigma_hat, psi, nctx)
}

/// `F(u) ≈ A(u) + C(u)` with `A = −Â/6`, `C = Ĉ/6`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub u: BigRational,
    pub additive: Vector,
    pub cubic: Vector,
    /// `F(u) − A(u) − C(u)`.
    pub residual: Vector,
    pub additive_trace: SequenceTrace,
    pub cubic_trace: SequenceTrace,
    pub sigma_hat_additive: SigmaHat,
    pub sigma_hat_cubic: SigmaHat,
    pub bound: BoundCheck,
}

impl DecompositionResult {
    /// Both traces stabilized exactly, so `A` and `C` are the true limits.
    pub fn is_exact(&self) -> bool {
        let exact = |t: &SequenceTrace| t.limit.as_ref().is_some_and(|l| l.exact);
        exact(&self.additive_trace) && exact(&self.cubic_trace)
    }
}

fn converged(trace: SequenceTrace, which: &'static str) -> Result<SequenceTrace> {
    if trace.is_converged() {
        Ok(trace)
    } else {
        Err(Error::Divergence {
            which,
            verdict: trace.verdict.to_string(),
            trace: Box::new(trace),
        })
    }
}

/// Splits `F` into its additive and cubic limits at `u` and checks the joint
/// bound `‖F(u) − A(u) − C(u), w_1, …‖_β ≤ (1/|12|^β)·max{σ̂_A, σ̂_C/|4|^β}·ψ`.
#[allow(clippy::too_many_arguments)]
pub fn decompose(
    f: &TestMap,
    u: &BigRational,
    sigma: &SigmaExpr,
    psi: &PsiExpr,
    ws: &[Vector],
    nctx: &NBetaContext,
    horizon: usize,
    settings: &EngineSettings,
) -> Result<DecompositionResult> {
    check_slots(ws, nctx)?;
    let ctx = nctx.prime();
    let additive_trace = converged(
        approximate(f, Kind::Additive, u, ctx, horizon, &settings.policy)?,
        "additive",
    )?;
    let cubic_trace = converged(approximate(f, Kind::Cubic, u, ctx, horizon, &settings.policy)?, "cubic")?;
    let a_hat = additive_trace.limit_value().expect("converged");
    let c_hat = cubic_trace.limit_value().expect("converged");
    let sixth = BigRational::new(1.into(), 6.into());
    let additive = a_hat.scale(&-sixth.clone());
    let cubic = c_hat.scale(&sixth);
    let residual = &(&eval_map(f, u)? - &additive) - &cubic;

    let sigma_hat_additive = sigma_hat(sigma, u, Kind::Additive, ctx, horizon, settings)?;
    let sigma_hat_cubic = sigma_hat(sigma, u, Kind::Cubic, ctx, horizon, settings)?;
    let inner = sigma_hat_additive
        .value
        .max(&inverse_beta_norm(4, ctx).mul(&sigma_hat_cubic.value, ctx), ctx);
    let right = inverse_beta_norm(12, ctx)
        .mul(&inner, ctx)
        .mul(&psi.eval(ws, ctx)?, ctx);
    let left = slot_norm(&residual, ws, nctx)?;
    let bound = BoundCheck::evaluate(format!("joint-bound({u})"), left, right, Some(horizon), ctx);
    Ok(DecompositionResult {
        u: u.clone(),
        additive,
        cubic,
        residual,
        additive_trace,
        cubic_trace,
        sigma_hat_additive,
        sigma_hat_cubic,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::approximate_additive;
    use crate::function::{perturb, PolyMap};
    use crate::padic::rat;
    use crate::spaces::WindowPolicy;

    fn scalar_map(coeffs: &[i64]) -> TestMap {
        let cs: Vec<BigRational> = coeffs.iter().map(|&c| int(c)).collect();
        PolyMap::scalar(&cs).into()
    }

    fn nctx1(p: u64) -> NBetaContext {
        NBetaContext::new(PrimeContext::with_unit_beta(p).unwrap(), 1, 1).unwrap()
    }

    fn pairs(us: &[i64], vs: &[i64]) -> Vec<(BigRational, BigRational)> {
        us.iter()
            .flat_map(|&u| vs.iter().map(move |&v| (int(u), int(v))))
            .collect()
    }

    #[test]
    fn directed_verdicts() {
        let ctx = PrimeContext::with_unit_beta(2).unwrap();
        let holds = BoundCheck::evaluate("x", LogMagnitude::from_int_exponent(2), Magnitude::rational(rat(1, 4)), None, &ctx);
        assert_eq!(holds.verdict, BoundVerdict::Holds);
        assert_eq!(holds.exact_order, Some(Ordering::Equal));
        let fails = BoundCheck::evaluate("x", LogMagnitude::one(), Magnitude::rational(rat(1, 2)), None, &ctx);
        assert_eq!(fails.verdict, BoundVerdict::Fails);
        // 3^(-1) is not a binary fraction; rounding makes the floats straddle
        let c3 = PrimeContext::with_unit_beta(3).unwrap();
        let tight = BoundCheck::evaluate("x", LogMagnitude::from_int_exponent(1), Magnitude::rational(rat(1, 3)), None, &c3);
        assert_eq!(tight.verdict, BoundVerdict::IncomparableAtPrecision);
        assert!(tight.left_up > tight.right_down);
        let zero = BoundCheck::evaluate("x", LogMagnitude::Zero, Magnitude::zero(), None, &ctx);
        assert!(zero.holds());
    }

    #[test]
    fn residual_examples() {
        let n = nctx1(2);
        let zero: TestMap = PolyMap::zero(1).into();
        let eps = SigmaExpr::constant(int(0)).unwrap();
        let checks = verify_residual_hypothesis(&zero, &eps, &PsiExpr::one(), &pairs(&[1, 2], &[1, 3]), &[], &n).unwrap();
        assert!(checks.iter().all(BoundCheck::holds));
        let identity = scalar_map(&[1]);
        let checks = verify_residual_hypothesis(&identity, &eps, &PsiExpr::one(), &pairs(&[2], &[2]), &[], &n).unwrap();
        assert_eq!(checks[0].verdict, BoundVerdict::Fails);
        assert!(verify_residual_hypothesis(&identity, &eps, &PsiExpr::one(), &[], &[Vector::scalar(int(1))], &n).is_err());
    }

    #[test]
    fn perturbed_linear_map_within_bounds() {
        let prime = PrimeContext::with_unit_beta(2).unwrap();
        let nctx = NBetaContext::new(prime.clone(), 2, 2).unwrap();
        let ws = [Vector::new(vec![int(0), int(1)])];
        let base = PolyMap::new(vec![
            crate::function::Polynomial::monomial(int(8), 1),
            crate::function::Polynomial::zero(),
        ])
        .unwrap();
        let f: TestMap = perturb(base, 7, 4, &prime).into();
        let sigma = SigmaExpr::constant(rat(1, 4)).unwrap();
        let psi = PsiExpr::one();
        let checks = verify_residual_hypothesis(&f, &sigma, &psi, &pairs(&[1, 2, 3], &[1, 2]), &ws, &nctx).unwrap();
        assert!(checks.iter().all(BoundCheck::holds));

        let policy = WindowPolicy::default();
        let settings = EngineSettings::default();
        for u in [int(1), int(2), int(3)] {
            let trace = approximate_additive(&f, &u, &prime, 40, &policy).unwrap();
            assert!(trace.is_converged());
            let hat = sigma_hat(&sigma, &u, Kind::Additive, &prime, 40, &settings).unwrap();
            assert_eq!(hat.value, Magnitude::rational(int(2)));
            let check = verify_bound_additive(&f, &trace, &u, &ws, &hat.value, &psi, &nctx).unwrap();
            assert!(check.holds());
            assert_eq!(check.right, Magnitude::rational(int(4)));
            assert!(check.left <= LogMagnitude::from_int_exponent(3));
        }
    }

    #[test]
    fn bound_needs_convergence() {
        let prime = PrimeContext::with_unit_beta(5).unwrap();
        let square = scalar_map(&[0, 1]);
        let trace = approximate_additive(&square, &int(1), &prime, 20, &WindowPolicy::default()).unwrap();
        let err = verify_bound_additive(&square, &trace, &int(1), &[], &Magnitude::one(), &PsiExpr::one(), &nctx1(5));
        assert!(matches!(err, Err(Error::Usage(_))));
    }

    #[test]
    fn exact_decomposition() {
        let n = nctx1(2);
        let settings = EngineSettings::default();
        let sigma = SigmaExpr::constant(int(0)).unwrap();
        let f = scalar_map(&[3, 0, 5]);
        let r = decompose(&f, &int(1), &sigma, &PsiExpr::one(), &[], &n, 10, &settings).unwrap();
        assert_eq!(r.additive, Vector::scalar(int(3)));
        assert_eq!(r.cubic, Vector::scalar(int(5)));
        assert!(r.residual.is_zero());
        assert!(r.bound.left.is_zero());
        assert!(r.bound.holds());
        assert!(r.is_exact());

        let zero: TestMap = PolyMap::zero(1).into();
        let r = decompose(&zero, &rat(5, 3), &sigma, &PsiExpr::one(), &[], &n, 10, &settings).unwrap();
        assert!(r.additive.is_zero() && r.cubic.is_zero());

        let square = scalar_map(&[0, 1]);
        let err = decompose(&square, &int(1), &sigma, &PsiExpr::one(), &[], &nctx1(5), 20, &settings);
        match err {
            Err(Error::Divergence { which, trace, .. }) => {
                assert_eq!(which, "additive");
                assert!(!trace.is_converged());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn joint_bound_scaling() {
        // p = 3, β = 1: |12|_3 = 1/3, |4|_3 = 1, σ ≡ 1 gives σ̂_A = σ̂_C = 8
        let prime = PrimeContext::with_unit_beta(3).unwrap();
        let n = NBetaContext::new(prime, 1, 1).unwrap();
        let sigma = SigmaExpr::constant(int(1)).unwrap();
        let f = scalar_map(&[1, 0, 1]);
        let r = decompose(&f, &int(1), &sigma, &PsiExpr::one(), &[], &n, 10, &EngineSettings::default()).unwrap();
        assert_eq!(r.bound.right, Magnitude::rational(int(24)));
    }
}
