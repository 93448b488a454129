//! The target space `T = Q^d`, its (n,β)-norm, and finite-horizon Cauchy
//! certificates for sequences in it.
//!
//! The (n,β)-norm of `a_1, …, a_n` is the largest p-adic absolute value of an
//! `n×n` minor of the `n×d` coordinate matrix, raised to β. All minors vanish
//! exactly on linearly dependent tuples, the maximum of absolute values of
//! determinants does not see row permutations, and multilinearity of the
//! determinant gives the ultrametric inequality in each slot.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{usage, Result};
use crate::padic::{logmag_scale_beta, padic_abs, valuation, LogMagnitude, PrimeContext, Valuation};

/// An element of `Q^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vector {
    coords: Vec<BigRational>,
}

impl Vector {
    pub fn new(coords: Vec<BigRational>) -> Self {
        Self { coords }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            coords: vec![BigRational::zero(); d],
        }
    }

    pub fn scalar(q: BigRational) -> Self {
        Self { coords: vec![q] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, s: &BigRational) -> Vector {
        Vector {
            coords: self.coords.iter().map(|c| c * s).collect(),
        }
    }

    fn zip_with(&self, other: &Vector, f: impl Fn(&BigRational, &BigRational) -> BigRational) -> Vector {
        assert_eq!(self.dim(), other.dim(), "vector dimension mismatch");
        Vector {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| f(a, b)).collect(),
        }
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&crate::padic::format_rational(c))?;
        }
        f.write_str(")")
    }
}

/// Max-of-coordinates p-adic norm on `Q^d`.
pub fn sup_norm(w: &Vector, ctx: &PrimeContext) -> LogMagnitude {
    w.coords
        .iter()
        .map(|c| padic_abs(c, ctx))
        .max()
        .unwrap_or(LogMagnitude::Zero)
}

/// Parameters of a non-Archimedean (n,β)-normed space `Q^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NBetaContext {
    prime: PrimeContext,
    n: usize,
    d: usize,
}

impl NBetaContext {
    pub fn new(prime: PrimeContext, n: usize, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(usage("n must be a positive integer"));
        }
        if d < n {
            return Err(usage(format!("dimension d = {d} must be at least n = {n}")));
        }
        Ok(Self { prime, n, d })
    }

    pub fn prime(&self) -> &PrimeContext {
        &self.prime
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }
}

/// Determinant of a square matrix by fraction-exact Gaussian elimination.
#[allow(clippy::needless_range_loop)]
pub fn determinant(rows: &[Vec<BigRational>]) -> BigRational {
    let n = rows.len();
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &p;
            for c in col..n {
                let sub = &factor * &m[col][c];
                m[r][c] -= sub;
            }
        }
    }
    det
}

/// Rank of a rational matrix, by row reduction.
#[allow(clippy::needless_range_loop)]
pub fn rank(rows: &[Vec<BigRational>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(pivot, rank);
        for r in 0..m.len() {
            if r != rank && !m[r][col].is_zero() {
                let factor = &m[r][col] / &m[rank][col];
                for c in col..cols {
                    let sub = &factor * &m[rank][c];
                    m[r][c] -= sub;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// All `k`-element subsets of `0..d` in lexicographic order.
pub fn combinations(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn go(start: usize, d: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..d {
            if d - i < k - current.len() {
                break;
            }
            current.push(i);
            go(i + 1, d, k, current, out);
            current.pop();
        }
    }
    go(0, d, k, &mut current, &mut out);
    out
}

/// The (n,β)-norm `‖a_1, …, a_n‖_β`.
pub fn n_beta_norm(ws: &[Vector], ctx: &NBetaContext) -> Result<LogMagnitude> {
    if ws.len() != ctx.n {
        return Err(usage(format!(
            "(n,beta)-norm takes n = {} vectors, got {}",
            ctx.n,
            ws.len()
        )));
    }
    if let Some(w) = ws.iter().find(|w| w.dim() != ctx.d) {
        return Err(usage(format!(
            "vector of dimension {} in a space of dimension {}",
            w.dim(),
            ctx.d
        )));
    }
    let mut best = LogMagnitude::Zero;
    for cols in combinations(ctx.d, ctx.n) {
        let minor: Vec<Vec<BigRational>> = ws
            .iter()
            .map(|w| cols.iter().map(|&c| w.coords[c].clone()).collect())
            .collect();
        let m = padic_abs(&determinant(&minor), &ctx.prime);
        if m > best {
            best = m;
        }
    }
    Ok(logmag_scale_beta(&best, &ctx.prime))
}

/// `‖x, w_1, …, w_{n-1}‖_β` with the slot vectors fixed.
pub fn slot_norm(x: &Vector, slots: &[Vector], ctx: &NBetaContext) -> Result<LogMagnitude> {
    let mut ws = Vec::with_capacity(slots.len() + 1);
    ws.push(x.clone());
    ws.extend(slots.iter().cloned());
    n_beta_norm(&ws, ctx)
}

/// Outcome of one axiom in [`check_norm_axioms`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomOutcome {
    pub axiom: &'static str,
    pub checked: usize,
    /// Rendered instance of the first violation, if any.
    pub counterexample: Option<String>,
}

impl AxiomOutcome {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub trials: usize,
    pub seed: u64,
    pub outcomes: Vec<AxiomOutcome>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(AxiomOutcome::passed)
    }
}

/// Random rational whose p-adic valuation ranges over roughly `[-3, 3]`.
fn sample_rational(rng: &mut impl Rng, p: u64) -> BigRational {
    if rng.gen_ratio(1, 8) {
        return BigRational::zero();
    }
    let num = rng.gen_range(-30i64..=30);
    let den = rng.gen_range(1i64..=12);
    let shift = rng.gen_range(-3i32..=3);
    let mut q = BigRational::new(BigInt::from(num), BigInt::from(den));
    let pb = BigRational::from_integer(BigInt::from(p));
    for _ in 0..shift.unsigned_abs() {
        if shift > 0 {
            q *= &pb;
        } else {
            q /= &pb;
        }
    }
    q
}

fn sample_vector(rng: &mut impl Rng, d: usize, p: u64) -> Vector {
    Vector::new((0..d).map(|_| sample_rational(rng, p)).collect())
}

fn render_tuple(ws: &[Vector]) -> String {
    ws.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut perm = rest.clone();
            perm.insert(pos, n - 1);
            out.push(perm);
        }
    }
    out
}

/// Randomized check of the four (n,β)-norm axioms on `trials` sampled tuples.
///
/// Linear dependence is decided by an exact rank computation, independent of
/// the minors used by the norm. Roughly a quarter of the sampled tuples are
/// made dependent on purpose so both directions of axiom (i) get exercised.
/// Permutation invariance is checked over all `n!` orders for `n ≤ 3` and a
/// random order otherwise.
pub fn check_norm_axioms(ctx: &NBetaContext, seed: u64, trials: usize) -> Result<AxiomReport> {
    if trials == 0 {
        return Err(usage("axiom check needs at least one trial"));
    }
    let p = ctx.prime.p();
    let (n, d) = (ctx.n, ctx.d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcomes: Vec<AxiomOutcome> = [
        "(i) zero iff linearly dependent",
        "(ii) permutation invariance",
        "(iii) |gamma|^beta homogeneity",
        "(iv) ultrametric in the first slot",
    ]
    .into_iter()
    .map(|axiom| AxiomOutcome {
        axiom,
        checked: 0,
        counterexample: None,
    })
    .collect();
    let all_perms = (n <= 3).then(|| permutations(n));

    for _ in 0..trials {
        let mut ws: Vec<Vector> = (0..n).map(|_| sample_vector(&mut rng, d, p)).collect();
        if rng.gen_ratio(1, 4) {
            // force a dependency: last vector becomes a combination of the others
            let mut combo = Vector::zeros(d);
            for w in &ws[..n - 1] {
                combo = &combo + &w.scale(&sample_rational(&mut rng, p));
            }
            ws[n - 1] = combo;
        }
        let norm = n_beta_norm(&ws, ctx)?;

        let rows: Vec<Vec<BigRational>> = ws.iter().map(|w| w.coords.clone()).collect();
        let dependent = rank(&rows) < n;
        record(&mut outcomes[0], norm.is_zero() == dependent, || {
            format!("{} -> {norm}, dependent = {dependent}", render_tuple(&ws))
        });

        let orders = match &all_perms {
            Some(perms) => perms.clone(),
            None => {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                vec![perm]
            }
        };
        for perm in orders {
            let permuted: Vec<Vector> = perm.iter().map(|&i| ws[i].clone()).collect();
            let other = n_beta_norm(&permuted, ctx)?;
            record(&mut outcomes[1], other == norm, || {
                format!("{} vs {}: {norm} != {other}", render_tuple(&ws), render_tuple(&permuted))
            });
        }

        let gamma = sample_rational(&mut rng, p);
        let mut scaled = ws.clone();
        scaled[0] = ws[0].scale(&gamma);
        let lhs = n_beta_norm(&scaled, ctx)?;
        let rhs = match valuation(&gamma, &ctx.prime) {
            Valuation::Infinity => LogMagnitude::Zero,
            Valuation::Finite(v) => {
                let gamma_beta = logmag_scale_beta(&LogMagnitude::from_int_exponent(v), &ctx.prime);
                gamma_beta.mul(&norm)
            }
        };
        record(&mut outcomes[2], lhs == rhs, || {
            format!("gamma = {gamma}, tuple {}: {lhs} != {rhs}", render_tuple(&ws))
        });

        let a0 = sample_vector(&mut rng, d, p);
        let mut with_a0 = ws.clone();
        with_a0[0] = a0.clone();
        let mut summed = ws.clone();
        summed[0] = &a0 + &ws[0];
        let left = n_beta_norm(&summed, ctx)?;
        let right = n_beta_norm(&with_a0, ctx)?.max(norm.clone());
        record(&mut outcomes[3], left <= right, || {
            format!("a0 = {a0}, tuple {}: {left} > {right}", render_tuple(&ws))
        });
    }
    Ok(AxiomReport {
        trials,
        seed,
        outcomes,
    })
}

fn record(outcome: &mut AxiomOutcome, ok: bool, describe: impl FnOnce() -> String) {
    outcome.checked += 1;
    if !ok && outcome.counterexample.is_none() {
        outcome.counterexample = Some(describe());
    }
}

/// Finite-horizon decision rule for limits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindowPolicy {
    /// Number of trailing steps inspected.
    pub window: usize,
    /// A difference norm counts as small once its exponent reaches this value.
    pub threshold_exponent: i64,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        Self {
            window: 5,
            threshold_exponent: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converged,
    Diverged,
    Undecided,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converged => "converged",
            Verdict::Diverged => "diverged",
            Verdict::Undecided => "undecided",
        })
    }
}

/// Candidate limit of a converged trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Limit {
    pub value: Vector,
    /// True when the trace stabilized exactly over the decision window.
    /// Otherwise `value` is the last term and differs from the true limit by
    /// at most the last certified difference norm.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceTrace {
    pub terms: Vec<Vector>,
    pub diff_norms: Vec<LogMagnitude>,
    pub verdict: Verdict,
    pub limit: Option<Limit>,
    pub policy: WindowPolicy,
}

impl SequenceTrace {
    pub fn is_converged(&self) -> bool {
        self.verdict == Verdict::Converged
    }

    /// The limit value, if the trace converged.
    pub fn limit_value(&self) -> Option<&Vector> {
        self.limit.as_ref().map(|l| &l.value)
    }
}

/// Classifies a trailing window of a nonnegative sequence that should tend to
/// zero: strictly decreasing (zeros may repeat) and small at the end gives
/// `Converged`; positive and non-decreasing gives `Diverged`.
pub(crate) fn classify_tail<T, C, S>(tail: &[T], cmp: C, is_zero: impl Fn(&T) -> bool, small: S) -> Verdict
where
    C: Fn(&T, &T) -> Option<std::cmp::Ordering>,
    S: Fn(&T) -> bool,
{
    use std::cmp::Ordering::*;
    let decreasing = tail.windows(2).all(|w| {
        (is_zero(&w[0]) && is_zero(&w[1])) || matches!(cmp(&w[1], &w[0]), Some(Less))
    });
    let last = tail.last().expect("nonempty window");
    if decreasing && (is_zero(last) || small(last)) {
        return Verdict::Converged;
    }
    let bounded_below = tail.iter().all(|t| !is_zero(t))
        && tail
            .windows(2)
            .all(|w| matches!(cmp(&w[1], &w[0]), Some(Greater | Equal)));
    if bounded_below {
        Verdict::Diverged
    } else {
        Verdict::Undecided
    }
}

/// Cauchy certificate for a finite prefix of a sequence in `Q^d`.
///
/// Differences are measured with [`sup_norm`]. The trace is `Converged` when
/// the last `window` difference norms strictly decrease and the last one has
/// exponent at least `threshold_exponent`, or when they are all exactly zero
/// (then the limit is exact). It is `Diverged` when the last `window`
/// difference norms are nonzero and non-decreasing.
pub fn is_cauchy(terms: Vec<Vector>, ctx: &PrimeContext, policy: &WindowPolicy) -> Result<SequenceTrace> {
    if policy.window == 0 {
        return Err(usage("decision window must be positive"));
    }
    if terms.len() < policy.window + 1 {
        return Err(usage(format!(
            "Cauchy check with window {} needs at least {} terms, got {}",
            policy.window,
            policy.window + 1,
            terms.len()
        )));
    }
    let diff_norms: Vec<LogMagnitude> = terms
        .windows(2)
        .map(|w| sup_norm(&(&w[1] - &w[0]), ctx))
        .collect();
    let tail = &diff_norms[diff_norms.len() - policy.window..];
    let threshold = LogMagnitude::from_int_exponent(policy.threshold_exponent);
    let verdict = classify_tail(tail, |a, b| Some(a.cmp(b)), LogMagnitude::is_zero, |m| *m <= threshold);
    let limit = (verdict == Verdict::Converged).then(|| Limit {
        value: terms.last().expect("nonempty").clone(),
        exact: tail.iter().all(LogMagnitude::is_zero),
    });
    Ok(SequenceTrace {
        terms,
        diff_norms,
        verdict,
        limit,
        policy: policy.clone(),
    })
}

/// Scalar convenience wrapper for sequences of rationals.
pub fn is_cauchy_scalar(terms: &[BigRational], ctx: &PrimeContext, policy: &WindowPolicy) -> Result<SequenceTrace> {
    is_cauchy(terms.iter().cloned().map(Vector::scalar).collect(), ctx, policy)
}
