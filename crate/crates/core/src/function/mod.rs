//! Test maps `F: S → T`, control functions `σ: S×S → [0,∞)` and slot
//! weights `ψ: T^(n-1) → [0,∞)`.

pub mod expr;
pub mod poly;

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::magnitude::Magnitude;
use crate::padic::{padic_abs, PrimeContext};
use crate::spaces::{sup_norm, Vector};

pub use expr::{parse_expr, parse_expr_with, Expr, ExprKind, NormArg, Span, Var};
pub use poly::{eval_map, perturb, Perturbation, PerturbedMap, PolyMap, Polynomial, TestMap};

use expr::{check_nonnegative, domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionKind {
    Map,
    Sigma,
    Psi,
}

/// Control function `σ(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaExpr {
    expr: Expr,
}

/// Slot weight `ψ(w_1, …, w_{n-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiExpr {
    expr: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Parsed {
    Map(Polynomial),
    Sigma(SigmaExpr),
    Psi(PsiExpr),
}

fn expr_to_polynomial(e: &Expr) -> Result<Polynomial> {
    Ok(match &e.kind {
        ExprKind::Const(q) => Polynomial::constant(q.clone()),
        ExprKind::Var(Var::U) => Polynomial::monomial(BigRational::from_integer(1.into()), 1),
        ExprKind::Var(Var::V) => return Err(domain(e, "a map depends on u only")),
        ExprKind::Norm(_) => return Err(domain(e, "norm(...) is not allowed in a map")),
        ExprKind::Max(_) | ExprKind::Min(_) => {
            return Err(domain(e, "max/min are not allowed in a map"))
        }
        ExprKind::Add(a, b) => &expr_to_polynomial(a)? + &expr_to_polynomial(b)?,
        ExprKind::Sub(a, b) => &expr_to_polynomial(a)? - &expr_to_polynomial(b)?,
        ExprKind::Mul(a, b) => &expr_to_polynomial(a)? * &expr_to_polynomial(b)?,
        ExprKind::Pow(base, k) => {
            let k = k
                .is_integer()
                .then(|| k.to_integer().to_u32())
                .flatten()
                .filter(|k| *k <= 64)
                .ok_or_else(|| domain(e, "map exponents must be integers in 0..=64"))?;
            expr_to_polynomial(base)?.pow(k)
        }
    })
}

/// Parses one coordinate of a map; the constant term must vanish.
pub fn parse_polynomial(text: &str, params: &BTreeMap<String, BigRational>) -> Result<Polynomial> {
    let e = parse_expr_with(text, params)?;
    let p = expr_to_polynomial(&e)?;
    if !p.coeff(0).is_zero() {
        return Err(Error::NonzeroConstant {
            coordinate: 0,
            constant: crate::padic::format_rational(&p.coeff(0)),
        });
    }
    Ok(p)
}

/// Parses a `d`-dimensional map, one text per coordinate.
pub fn parse_map(coords: &[String], params: &BTreeMap<String, BigRational>) -> Result<PolyMap> {
    let polys = coords
        .iter()
        .enumerate()
        .map(|(i, text)| {
            parse_polynomial(text, params).map_err(|err| match err {
                Error::NonzeroConstant { constant, .. } => Error::NonzeroConstant {
                    coordinate: i,
                    constant,
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PolyMap::new(polys)
}

/// Parses `text` as the declared kind.
pub fn parse_function(text: &str, kind: FunctionKind, params: &BTreeMap<String, BigRational>) -> Result<Parsed> {
    match kind {
        FunctionKind::Map => parse_polynomial(text, params).map(Parsed::Map),
        FunctionKind::Sigma => SigmaExpr::parse(text, params).map(Parsed::Sigma),
        FunctionKind::Psi => PsiExpr::parse(text, params).map(Parsed::Psi),
    }
}

/// Evaluates a validated nonnegative expression; `norm` supplies atom values.
fn eval_nonnegative(e: &Expr, norm: &impl Fn(NormArg) -> Magnitude, ctx: &PrimeContext) -> Magnitude {
    match &e.kind {
        ExprKind::Const(q) => Magnitude::rational(q.clone()),
        ExprKind::Norm(arg) => norm(*arg),
        ExprKind::Var(_) | ExprKind::Sub(..) => unreachable!("rejected at parse time"),
        ExprKind::Add(a, b) => eval_nonnegative(a, norm, ctx).add(&eval_nonnegative(b, norm, ctx), ctx),
        ExprKind::Mul(a, b) => eval_nonnegative(a, norm, ctx).mul(&eval_nonnegative(b, norm, ctx), ctx),
        ExprKind::Pow(base, r) => eval_nonnegative(base, norm, ctx).pow(r, ctx),
        ExprKind::Max(xs) => xs
            .iter()
            .map(|x| eval_nonnegative(x, norm, ctx))
            .reduce(|a, b| a.max(&b, ctx))
            .expect("at least two arguments"),
        ExprKind::Min(xs) => xs
            .iter()
            .map(|x| eval_nonnegative(x, norm, ctx))
            .reduce(|a, b| a.min(&b, ctx))
            .expect("at least two arguments"),
    }
}

impl SigmaExpr {
    pub fn parse(text: &str, params: &BTreeMap<String, BigRational>) -> Result<Self> {
        Self::from_expr(parse_expr_with(text, params)?)
    }

    pub fn from_expr(expr: Expr) -> Result<Self> {
        check_nonnegative(&expr, |a| matches!(a, NormArg::U | NormArg::V), "sigma")?;
        Ok(Self { expr })
    }

    /// `σ ≡ ε`.
    pub fn constant(eps: BigRational) -> Result<Self> {
        Self::from_expr(Expr::synthetic(ExprKind::Const(eps)))
    }

    /// `ρ(‖u‖^{x+y} + ‖v‖^{x+y} + ‖u‖^x ‖v‖^y)`.
    pub fn corollary_family(rho: &BigRational, x: &BigRational, y: &BigRational) -> Result<Self> {
        if rho.is_negative() || x.is_negative() || y.is_negative() {
            return Err(Error::Config("rho, x and y must be nonnegative".into()));
        }
        let s = x + y;
        let pow = |arg, r: &BigRational| {
            Expr::synthetic(ExprKind::Pow(Box::new(Expr::synthetic(ExprKind::Norm(arg))), r.clone()))
        };
        let b = |e: Expr| Box::new(e);
        let sum = ExprKind::Add(
            b(Expr::synthetic(ExprKind::Add(b(pow(NormArg::U, &s)), b(pow(NormArg::V, &s))))),
            b(Expr::synthetic(ExprKind::Mul(b(pow(NormArg::U, x)), b(pow(NormArg::V, y))))),
        );
        Self::from_expr(Expr::synthetic(ExprKind::Mul(
            b(Expr::synthetic(ExprKind::Const(rho.clone()))),
            b(Expr::synthetic(sum)),
        )))
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// `σ(u, v)` with `‖·‖` the p-adic absolute value on `S = Q`.
    pub fn eval(&self, u: &BigRational, v: &BigRational, ctx: &PrimeContext) -> Magnitude {
        let nu = Magnitude::from_logmag(&padic_abs(u, ctx), ctx);
        let nv = Magnitude::from_logmag(&padic_abs(v, ctx), ctx);
        eval_nonnegative(
            &self.expr,
            &|arg| match arg {
                NormArg::U => nu.clone(),
                NormArg::V => nv.clone(),
                NormArg::W(_) => unreachable!("rejected at parse time"),
            },
            ctx,
        )
    }
}

impl fmt::Display for SigmaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

impl PsiExpr {
    pub fn parse(text: &str, params: &BTreeMap<String, BigRational>) -> Result<Self> {
        Self::from_expr(parse_expr_with(text, params)?)
    }

    pub fn from_expr(expr: Expr) -> Result<Self> {
        check_nonnegative(&expr, |a| matches!(a, NormArg::W(_)), "psi")?;
        Ok(Self { expr })
    }

    /// `ψ ≡ 1`, the default.
    pub fn one() -> Self {
        Self {
            expr: Expr::synthetic(ExprKind::Const(BigRational::from_integer(1.into()))),
        }
    }

    /// Largest slot index referenced.
    pub fn arity(&self) -> usize {
        let mut arity = 0;
        self.expr.walk(&mut |e| {
            if let ExprKind::Norm(NormArg::W(i)) = e.kind {
                arity = arity.max(i);
            }
        });
        arity
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// `ψ(w_1, …)` with `norm(w_i)` the sup norm of the i-th slot vector.
    pub fn eval(&self, slots: &[Vector], ctx: &PrimeContext) -> Result<Magnitude> {
        if self.arity() > slots.len() {
            return Err(Error::Usage(format!(
                "psi references w{} but only {} slot vectors are given",
                self.arity(),
                slots.len()
            )));
        }
        let norms: Vec<Magnitude> = slots
            .iter()
            .map(|w| Magnitude::from_logmag(&sup_norm(w, ctx), ctx))
            .collect();
        Ok(eval_nonnegative(
            &self.expr,
            &|arg| match arg {
                NormArg::W(i) => norms[i - 1].clone(),
                _ => unreachable!("rejected at parse time"),
            },
            ctx,
        ))
    }
}

impl fmt::Display for PsiExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

/// `σ(u, v)`.
pub fn eval_sigma(sigma: &SigmaExpr, u: &BigRational, v: &BigRational, ctx: &PrimeContext) -> Magnitude {
    sigma.eval(u, v, ctx)
}
