use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::padic::{format_rational, p_power, LogMagnitude, PrimeContext};
use crate::spaces::{sup_norm, Vector};

/// Univariate polynomial with rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    coeffs: Vec<BigRational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// `c·u^k`.
    pub fn monomial(c: BigRational, k: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation.
    pub fn eval(&self, u: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * u + c)
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        (0..k).fold(Polynomial::constant(BigRational::one()), |acc, _| &acc * self)
    }

    /// The polynomial `u ↦ P(s·u)`.
    pub fn dilate(&self, s: &BigRational) -> Polynomial {
        let mut scale = BigRational::one();
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            coeffs.push(c * &scale);
            scale *= s;
        }
        Polynomial::new(coeffs)
    }

    pub fn scale(&self, s: &BigRational) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match k {
                0 => f.write_str(&format_rational(c))?,
                1 => write!(f, "{}*u", format_rational(c))?,
                _ => write!(f, "{}*u^{k}", format_rational(c))?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// A test map `F: Q → Q^d` given by one polynomial per coordinate, each
/// with zero constant term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyMap {
    coords: Vec<Polynomial>,
}

impl PolyMap {
    pub fn new(coords: Vec<Polynomial>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Usage("a map needs at least one coordinate".into()));
        }
        if let Some((i, p)) = coords.iter().enumerate().find(|(_, p)| !p.coeff(0).is_zero()) {
            return Err(Error::NonzeroConstant {
                coordinate: i,
                constant: format_rational(&p.coeff(0)),
            });
        }
        Ok(Self { coords })
    }

    /// One-dimensional map from coefficients `c_1, c_2, …`.
    pub fn scalar(coeffs_from_degree_one: &[BigRational]) -> Self {
        let mut coeffs = vec![BigRational::zero()];
        coeffs.extend_from_slice(coeffs_from_degree_one);
        Self {
            coords: vec![Polynomial::new(coeffs)],
        }
    }

    pub fn zero(d: usize) -> Self {
        Self {
            coords: vec![Polynomial::zero(); d],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Polynomial] {
        &self.coords
    }

    pub fn eval(&self, u: &BigRational) -> Vector {
        Vector::new(self.coords.iter().map(|p| p.eval(u)).collect())
    }

    /// Closed form of `u ↦ F(s·u) − m·F(u)`.
    pub fn dilate_minus(&self, s: &BigRational, m: &BigRational) -> PolyMap {
        PolyMap {
            coords: self
                .coords
                .iter()
                .map(|p| &p.dilate(s) - &p.scale(m))
                .collect(),
        }
    }

    /// True when every coordinate uses only the monomials `u` and `u³`.
    pub fn is_additive_cubic(&self) -> bool {
        self.coords.iter().all(|p| {
            p.coeffs()
                .iter()
                .enumerate()
                .all(|(k, c)| k == 1 || k == 3 || c.is_zero())
        })
    }
}

impl fmt::Display for PolyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coords.len() == 1 {
            return write!(f, "{}", self.coords[0]);
        }
        f.write_str("(")?;
        for (i, p) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

/// Deterministic bounded noise `e: Q → Q^d` with `e(0) = 0`.
///
/// For `u ≠ 0` each coordinate is `p^M · a/b` with `a`, `b` drawn from a
/// generator keyed by `(seed, coordinate, u)` and both prime to `p`, so
/// `|e_i(u)|_p = p^(-M)` exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Perturbation {
    pub seed: u64,
    pub cap_exponent: u32,
    p: u64,
}

impl Perturbation {
    pub fn new(seed: u64, cap_exponent: u32, ctx: &PrimeContext) -> Self {
        Self {
            seed,
            cap_exponent,
            p: ctx.p(),
        }
    }

    pub fn cap(&self) -> LogMagnitude {
        LogMagnitude::from_int_exponent(self.cap_exponent.into())
    }

    fn unit(&self, rng: &mut ChaCha8Rng) -> i64 {
        loop {
            let x: i64 = rng.gen_range(1..=997);
            if !(x as u64).is_multiple_of(self.p) {
                return x;
            }
        }
    }

    pub fn eval(&self, u: &BigRational, d: usize) -> Vector {
        if u.is_zero() {
            return Vector::zeros(d);
        }
        let scale = p_power(self.p, &BigInt::from(self.cap_exponent));
        let coords = (0..d)
            .map(|i| {
                let mut hasher = Sha256::new();
                hasher.update(self.seed.to_le_bytes());
                hasher.update((i as u64).to_le_bytes());
                hasher.update(u.numer().to_signed_bytes_le());
                hasher.update(b"/");
                hasher.update(u.denom().to_signed_bytes_le());
                let digest = hasher.finalize();
                let mut key = [0u8; 32];
                key.copy_from_slice(&digest);
                let mut rng = ChaCha8Rng::from_seed(key);
                let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
                let a = sign * self.unit(&mut rng);
                let b = self.unit(&mut rng);
                BigRational::new(a.into(), b.into()) * &scale
            })
            .collect();
        Vector::new(coords)
    }
}

/// A polynomial map plus capped deterministic noise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbedMap {
    pub base: PolyMap,
    pub noise: Perturbation,
    ctx: PrimeContext,
}

impl PerturbedMap {
    pub fn noise_at(&self, u: &BigRational) -> Vector {
        self.noise.eval(u, self.base.dim())
    }

    pub fn eval(&self, u: &BigRational) -> Result<Vector> {
        let e = self.noise_at(u);
        let size = sup_norm(&e, &self.ctx);
        if size > self.noise.cap() {
            return Err(Error::Consistency(format!(
                "perturbation at u = {} has norm {size} above its cap {}",
                format_rational(u),
                self.noise.cap()
            )));
        }
        Ok(&self.base.eval(u) + &e)
    }
}

/// Wraps `base` with noise of norm at most `p^(-cap_exponent)`.
pub fn perturb(base: PolyMap, seed: u64, cap_exponent: u32, ctx: &PrimeContext) -> PerturbedMap {
    PerturbedMap {
        noise: Perturbation::new(seed, cap_exponent, ctx),
        base,
        ctx: ctx.clone(),
    }
}

/// Any test map the engine accepts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TestMap {
    Poly(PolyMap),
    Perturbed(PerturbedMap),
}

impl TestMap {
    pub fn dim(&self) -> usize {
        match self {
            TestMap::Poly(p) => p.dim(),
            TestMap::Perturbed(p) => p.base.dim(),
        }
    }

    pub fn polynomial(&self) -> Option<&PolyMap> {
        match self {
            TestMap::Poly(p) => Some(p),
            TestMap::Perturbed(_) => None,
        }
    }
}

impl From<PolyMap> for TestMap {
    fn from(p: PolyMap) -> Self {
        TestMap::Poly(p)
    }
}

impl From<PerturbedMap> for TestMap {
    fn from(p: PerturbedMap) -> Self {
        TestMap::Perturbed(p)
    }
}

impl fmt::Display for TestMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestMap::Poly(p) => write!(f, "{p}"),
            TestMap::Perturbed(p) => write!(
                f,
                "{} + e(u) [seed {}, |e| <= p^(-{})]",
                p.base, p.noise.seed, p.noise.cap_exponent
            ),
        }
    }
}

/// Exact value `F(u)`.
pub fn eval_map(map: &TestMap, u: &BigRational) -> Result<Vector> {
    match map {
        TestMap::Poly(p) => Ok(p.eval(u)),
        TestMap::Perturbed(p) => p.eval(u),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{int, rat};

    #[test]
    fn evaluation_examples() {
        let square = PolyMap::scalar(&[int(0), int(1)]);
        assert_eq!(square.eval(&rat(3, 2)), Vector::scalar(rat(9, 4)));
        let f = PolyMap::scalar(&[int(3), int(0), int(5)]);
        assert_eq!(f.eval(&int(1)), Vector::scalar(int(8)));
        assert!(f.eval(&int(0)).is_zero());
    }

    #[test]
    fn constant_term_rejected() {
        let p = Polynomial::new(vec![int(1), int(0), int(1)]);
        assert!(matches!(PolyMap::new(vec![p]), Err(Error::NonzeroConstant { coordinate: 0, .. })));
    }

    #[test]
    fn dilation_closed_forms() {
        // K for F = 3u + 5u^3 is -18u; N is 30u^3
        let f = PolyMap::scalar(&[int(3), int(0), int(5)]);
        let k = f.dilate_minus(&int(2), &int(8));
        assert_eq!(k.coords()[0], Polynomial::monomial(int(-18), 1));
        let n = f.dilate_minus(&int(2), &int(2));
        assert_eq!(n.coords()[0], Polynomial::monomial(int(30), 3));
        assert!(f.is_additive_cubic());
        assert!(!PolyMap::scalar(&[int(0), int(1)]).is_additive_cubic());
    }

    #[test]
    fn perturbation_is_capped_and_reproducible() {
        let ctx = PrimeContext::with_unit_beta(2).unwrap();
        let base = PolyMap::scalar(&[int(8)]);
        let a = perturb(base.clone(), 11, 10, &ctx);
        let b = perturb(base, 11, 10, &ctx);
        for k in 1..40 {
            let u = rat(k, 3);
            let e = a.noise_at(&u);
            assert_eq!(sup_norm(&e, &ctx), LogMagnitude::from_int_exponent(10));
            assert_eq!(e, b.noise_at(&u));
            assert_eq!(a.eval(&u).unwrap(), &Vector::scalar(int(8) * &u) + &e);
        }
        assert!(a.noise_at(&int(0)).is_zero());
        let other_seed = perturb(PolyMap::scalar(&[int(8)]), 12, 10, &ctx);
        assert_ne!(other_seed.noise_at(&int(1)), a.noise_at(&int(1)));
    }
}
