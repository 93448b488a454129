//! JSON experiment configuration and its validation.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::engine::EngineSettings;
use crate::error::{Error, Result};
use crate::function::{parse_map, perturb, PolyMap, PsiExpr, SigmaExpr, TestMap};
use crate::padic::{int, parse_rational, PrimeContext};
use crate::spaces::{NBetaContext, Vector, WindowPolicy};

/// A rational written either as a JSON integer or as `"num"` / `"num/den"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalText(pub String);

impl RationalText {
    pub fn parse(&self, what: &str) -> Result<BigRational> {
        parse_rational(&self.0).ok_or_else(|| Error::Config(format!("{what}: '{}' is not a rational", self.0)))
    }
}

impl From<&str> for RationalText {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl fmt::Display for RationalText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for RationalText {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for RationalText {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Int(i) => RationalText(i.to_string()),
            Raw::Text(s) => RationalText(s),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    TheoremAdditive,
    TheoremCubic,
    TheoremDecompose,
    CounterexampleAdditive,
    CounterexampleCubic,
    Axioms,
    Hypotheses,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub seed: u64,
    /// The perturbation has p-adic norm exactly `p^(-cap_exponent)`.
    pub cap_exponent: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    /// One polynomial in `u` per coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<String>>,
    /// `zero`, `identity`, `square`, `cube` or `additive-cubic` (3u + 5u³).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SigmaFamily {
    Constant { eps: RationalText },
    Corollary { rho: RationalText, x: RationalText, y: RationalText },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSpec {
    Text(String),
    Family(SigmaFamily),
}

/// What the `hypotheses` mode expects of every checked hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Satisfied,
    Violated,
}

fn default_beta() -> RationalText {
    "1".into()
}
fn default_n() -> usize {
    1
}
fn default_u_grid() -> Vec<RationalText> {
    ["1", "2", "3", "1/2", "5/3"].into_iter().map(Into::into).collect()
}
fn default_horizon() -> usize {
    30
}
fn default_uniqueness_horizon() -> usize {
    20
}
fn default_window() -> usize {
    WindowPolicy::default().window
}
fn default_threshold() -> i64 {
    WindowPolicy::default().threshold_exponent
}
fn default_hypothesis_threshold() -> i64 {
    EngineSettings::default().hypothesis_threshold
}
fn default_trials() -> usize {
    10_000
}
fn default_psi() -> String {
    "1".into()
}
fn default_expect() -> Expectation {
    Expectation::Satisfied
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub p: u64,
    #[serde(default = "default_beta")]
    pub beta: RationalText,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Target dimension; defaults to the map's dimension, or `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// The `n − 1` slot vectors `w_1, …`.
    #[serde(default)]
    pub slots: Vec<Vec<RationalText>>,
    /// Named constants usable inside the expressions.
    #[serde(default)]
    pub params: BTreeMap<String, RationalText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaSpec>,
    #[serde(default = "default_psi")]
    pub psi: String,
    #[serde(default = "default_u_grid")]
    pub u_grid: Vec<RationalText>,
    /// Second arguments; defaults to the u-grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_grid: Option<Vec<RationalText>>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Number of windows `m` for the uniqueness condition.
    #[serde(default = "default_uniqueness_horizon")]
    pub uniqueness_horizon: usize,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_threshold")]
    pub threshold_exponent: i64,
    #[serde(default = "default_hypothesis_threshold")]
    pub hypothesis_threshold: i64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sigma_bar_padic_multipliers: bool,
    #[serde(default = "default_expect")]
    pub expect_hypotheses: Expectation,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses and checks every part of the config.
    pub fn validate(&self) -> Result<Validated> {
        Validated::new(self)
    }
}

/// A config with all texts parsed and all invariants checked.
#[derive(Debug, Clone)]
pub struct Validated {
    pub mode: Mode,
    pub nctx: NBetaContext,
    pub slots: Vec<Vector>,
    pub map: Option<TestMap>,
    pub sigma: SigmaExpr,
    pub psi: PsiExpr,
    pub u_grid: Vec<BigRational>,
    pub v_grid: Vec<BigRational>,
    pub horizon: usize,
    pub uniqueness_horizon: usize,
    pub settings: EngineSettings,
    pub trials: usize,
    pub seed: u64,
    pub expect: Expectation,
}

impl Validated {
    pub fn prime(&self) -> &PrimeContext {
        self.nctx.prime()
    }

    fn new(c: &ExperimentConfig) -> Result<Self> {
        let beta = c.beta.parse("beta")?;
        let prime = PrimeContext::new(c.p, beta)?;
        let params = c
            .params
            .iter()
            .map(|(k, v)| Ok((k.clone(), v.parse(&format!("params.{k}"))?)))
            .collect::<Result<BTreeMap<_, _>>>()?;

        let map = match &c.map {
            Some(spec) => Some(build_map(spec, &params, &prime)?),
            None => None,
        };
        if map.is_none() && matches!(c.mode, Mode::TheoremAdditive | Mode::TheoremCubic | Mode::TheoremDecompose) {
            return Err(Error::Config(format!("mode {} needs a map", c.mode)));
        }
        let d = c.d.or(map.as_ref().map(TestMap::dim)).unwrap_or(c.n);
        if let Some(m) = &map {
            if m.dim() != d {
                return Err(Error::Config(format!("map has {} coordinates but d = {d}", m.dim())));
            }
        }
        let nctx = NBetaContext::new(prime, c.n, d).map_err(|e| Error::Config(e.to_string()))?;
        if c.slots.len() + 1 != c.n {
            return Err(Error::Config(format!(
                "n = {} needs {} slot vectors, got {}",
                c.n,
                c.n - 1,
                c.slots.len()
            )));
        }
        let slots = c
            .slots
            .iter()
            .enumerate()
            .map(|(i, w)| {
                if w.len() != d {
                    return Err(Error::Config(format!("slot vector {} has {} coordinates, expected {d}", i + 1, w.len())));
                }
                let coords = w
                    .iter()
                    .map(|x| x.parse(&format!("slots[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Vector::new(coords))
            })
            .collect::<Result<Vec<_>>>()?;

        let sigma = match &c.sigma {
            None => SigmaExpr::constant(int(0))?,
            Some(SigmaSpec::Text(t)) => SigmaExpr::parse(t, &params)?,
            Some(SigmaSpec::Family(SigmaFamily::Constant { eps })) => {
                let eps = eps.parse("sigma.eps")?;
                if eps < int(0) {
                    return Err(Error::Config("sigma.eps must be nonnegative".into()));
                }
                SigmaExpr::constant(eps)?
            }
            Some(SigmaSpec::Family(SigmaFamily::Corollary { rho, x, y })) => {
                SigmaExpr::corollary_family(&rho.parse("sigma.rho")?, &x.parse("sigma.x")?, &y.parse("sigma.y")?)?
            }
        };
        let psi = PsiExpr::parse(&c.psi, &params)?;
        if psi.arity() > slots.len() {
            return Err(Error::Config(format!(
                "psi uses w{} but only {} slot vectors are configured",
                psi.arity(),
                slots.len()
            )));
        }

        let grid = |g: &[RationalText], what: &str| -> Result<Vec<BigRational>> {
            if g.is_empty() {
                return Err(Error::Config(format!("{what} must not be empty")));
            }
            g.iter().map(|x| x.parse(what)).collect()
        };
        let u_grid = grid(&c.u_grid, "u_grid")?;
        let v_grid = match &c.v_grid {
            Some(v) => grid(v, "v_grid")?,
            None => u_grid.clone(),
        };
        if c.window == 0 {
            return Err(Error::Config("window must be positive".into()));
        }
        if c.horizon < c.window {
            return Err(Error::Config(format!(
                "horizon {} is shorter than the window {}",
                c.horizon, c.window
            )));
        }
        if c.mode == Mode::Hypotheses && c.uniqueness_horizon < c.window {
            return Err(Error::Config(format!(
                "uniqueness_horizon {} is shorter than the window {}",
                c.uniqueness_horizon, c.window
            )));
        }
        if c.mode == Mode::Axioms && c.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        Ok(Self {
            mode: c.mode,
            nctx,
            slots,
            map,
            sigma,
            psi,
            u_grid,
            v_grid,
            horizon: c.horizon,
            uniqueness_horizon: c.uniqueness_horizon,
            settings: EngineSettings {
                policy: WindowPolicy {
                    window: c.window,
                    threshold_exponent: c.threshold_exponent,
                },
                hypothesis_threshold: c.hypothesis_threshold,
                sigma_bar_padic_multipliers: c.sigma_bar_padic_multipliers,
            },
            trials: c.trials,
            seed: c.seed,
            expect: c.expect_hypotheses,
        })
    }
}

fn builtin(name: &str) -> Result<PolyMap> {
    let coeffs: &[i64] = match name {
        "zero" => return Ok(PolyMap::zero(1)),
        "identity" => &[1],
        "square" => &[0, 1],
        "cube" => &[0, 0, 1],
        "additive-cubic" => &[3, 0, 5],
        other => return Err(Error::Config(format!("unknown builtin map '{other}'"))),
    };
    let cs: Vec<BigRational> = coeffs.iter().map(|&c| int(c)).collect();
    Ok(PolyMap::scalar(&cs))
}

fn build_map(spec: &MapSpec, params: &BTreeMap<String, BigRational>, ctx: &PrimeContext) -> Result<TestMap> {
    let base = match (&spec.coords, &spec.builtin) {
        (Some(coords), None) => {
            if coords.is_empty() {
                return Err(Error::Config("map.coords must not be empty".into()));
            }
            parse_map(coords, params)?
        }
        (None, Some(name)) => builtin(name)?,
        _ => return Err(Error::Config("map needs exactly one of 'coords' or 'builtin'".into())),
    };
    Ok(match &spec.perturbation {
        Some(p) => perturb(base, p.seed, p.cap_exponent, ctx).into(),
        None => base.into(),
    })
}
