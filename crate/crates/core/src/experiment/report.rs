//! Report records and their JSON / text rendering.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_rational::BigRational;
use serde::Serialize;

use super::config::{ExperimentConfig, Mode};
use crate::engine::{BoundCheck, HypothesisVerdict};
use crate::error::Result;
use crate::magnitude::Magnitude;
use crate::padic::{format_rational, LogMagnitude};
use crate::spaces::{SequenceTrace, Vector, Verdict, WindowPolicy};

/// A p-adic norm as `{"p": p, "exponent": "e"}` (value `p^(-e)`) or `"zero"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum NormOut {
    Zero(&'static str),
    Power { p: u64, exponent: String },
}

impl NormOut {
    pub fn new(m: &LogMagnitude, p: u64) -> Self {
        match m.exponent() {
            None => NormOut::Zero("zero"),
            Some(e) => NormOut::Power {
                p,
                exponent: format_rational(e),
            },
        }
    }

    fn text(&self) -> String {
        match self {
            NormOut::Zero(_) => "0".into(),
            NormOut::Power { p, exponent } => format!("{p}^(-{exponent})"),
        }
    }
}

pub(crate) fn vector_out(v: &Vector) -> Vec<String> {
    v.coords().iter().map(format_rational).collect()
}

fn vector_text(v: &[String]) -> String {
    format!("({})", v.join(", "))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceOut {
    pub horizon: usize,
    pub verdict: Verdict,
    pub terms: Vec<Vec<String>>,
    pub diff_norms: Vec<NormOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<Vec<String>>,
    pub limit_exact: bool,
    pub policy: WindowPolicy,
}

impl TraceOut {
    pub fn new(t: &SequenceTrace, p: u64) -> Self {
        Self {
            horizon: t.terms.len().saturating_sub(1),
            verdict: t.verdict,
            terms: t.terms.iter().map(vector_out).collect(),
            diff_norms: t.diff_norms.iter().map(|m| NormOut::new(m, p)).collect(),
            limit: t.limit_value().map(vector_out),
            limit_exact: t.limit.as_ref().is_some_and(|l| l.exact),
            policy: t.policy.clone(),
        }
    }

    fn last_diff(&self) -> String {
        self.diff_norms.last().map(NormOut::text).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundOut {
    pub label: String,
    pub left: NormOut,
    pub right: String,
    pub left_up: f64,
    pub right_down: f64,
    pub regime: crate::engine::RoundingRegime,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_order: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub verdict: crate::engine::BoundVerdict,
}

impl BoundOut {
    pub fn new(b: &BoundCheck, p: u64) -> Self {
        Self {
            label: b.label.clone(),
            left: NormOut::new(&b.left, p),
            right: b.right.render(),
            left_up: b.left_up,
            right_down: b.right_down,
            regime: b.regime,
            exact_order: b.exact_order.map(|o| match o {
                Ordering::Less => "less",
                Ordering::Equal => "equal",
                Ordering::Greater => "greater",
            }),
            horizon: b.horizon,
            verdict: b.verdict,
        }
    }

    fn text(&self) -> String {
        let horizon = self.horizon.map(|h| format!(" J={h}")).unwrap_or_default();
        format!(
            "{} <= {}  [{:e} vs {:e}, {}{}]  {}",
            self.left.text(),
            self.right,
            self.left_up,
            self.right_down,
            self.regime,
            horizon,
            self.verdict
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HypothesisOut {
    pub hypothesis: String,
    pub horizon: usize,
    pub status: crate::engine::HypothesisStatus,
    pub terms: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_tail: Option<Vec<String>>,
}

impl HypothesisOut {
    pub fn new(h: &HypothesisVerdict) -> Self {
        let render = |ts: &[Magnitude]| ts.iter().map(Magnitude::render).collect::<Vec<_>>();
        Self {
            hypothesis: h.hypothesis.clone(),
            horizon: h.horizon,
            status: h.status,
            terms: render(&h.terms),
            witness_tail: h.witness_tail.as_deref().map(render),
        }
    }

    fn text(&self) -> String {
        format!(
            "{} (J={}, last term {})",
            self.status,
            self.horizon,
            self.terms.last().map(String::as_str).unwrap_or("-")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremRecord {
    pub trace: TraceOut,
    pub sigma_hat: String,
    pub sigma_hat_hypothesis: HypothesisOut,
    pub residual_checks: Vec<BoundOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionRecord {
    pub additive: Vec<String>,
    pub cubic: Vec<String>,
    /// `A(u)/u` and `C(u)/u³` per coordinate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub additive_coefficients: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cubic_coefficients: Option<Vec<String>>,
    pub residual: Vec<String>,
    pub exact: bool,
    pub additive_trace: TraceOut,
    pub cubic_trace: TraceOut,
    pub sigma_hat_additive: HypothesisOut,
    pub sigma_hat_cubic: HypothesisOut,
    pub bound: BoundOut,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CounterexampleRecord {
    pub trace: TraceOut,
    pub constant_diff_norm: NormOut,
    pub closed_form: NormOut,
    pub residual_at_double: Vec<String>,
    pub residual_at_diagonal: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairHypotheses {
    pub v: String,
    pub additive: HypothesisOut,
    pub cubic: HypothesisOut,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HypothesesRecord {
    pub sigma_hat_additive: String,
    pub sigma_hat_cubic: String,
    pub sigma_bar_additive: HypothesisOut,
    pub sigma_bar_cubic: HypothesisOut,
    pub pairs: Vec<PairHypotheses>,
    pub uniqueness_additive: HypothesisOut,
    /// The cubic condition with `|2|` and with `|8|`.
    pub uniqueness_cubic_2: HypothesisOut,
    pub uniqueness_cubic_8: HypothesisOut,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomRecord {
    pub checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordBody {
    Theorem(Box<TheoremRecord>),
    Decomposition(Box<DecompositionRecord>),
    Counterexample(Box<CounterexampleRecord>),
    Hypotheses(Box<HypothesesRecord>),
    Axiom(AxiomRecord),
    /// An engine error at this point, e.g. a diverged trace.
    Error {
        message: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        trace: Option<TraceOut>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Expected,
    Unexpected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    /// `u = …` for grid modes, the axiom name for the axiom suite.
    pub point: String,
    pub outcome: Outcome,
    #[serde(flatten)]
    pub body: RecordBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub records: usize,
    pub expected: usize,
    pub unexpected: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub tool: String,
    pub version: String,
    /// Unix seconds; the only field that differs between identical runs.
    pub generated_at: u64,
    pub mode: Mode,
    pub config: ExperimentConfig,
    pub records: Vec<PointRecord>,
    pub summary: Summary,
    pub discrepancies: Vec<String>,
}

impl StabilityReport {
    /// 0 when every record is as expected, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.unexpected == 0 {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

impl std::str::FromStr for Format {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            other => Err(crate::error::Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

pub fn emit_report(report: &StabilityReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
            out.push(b'\n');
            out
        }
        Format::Text => render_text(report).into_bytes(),
    }
}

fn q(x: &BigRational) -> String {
    format_rational(x)
}

fn render_text(r: &StabilityReport) -> String {
    let mut s = String::new();
    let c = &r.config;
    let _ = writeln!(s, "{} {}  mode {}  p={} beta={} n={}", r.tool, r.version, r.mode, c.p, c.beta, c.n);
    let _ = writeln!(s, "generated_at: {}", r.generated_at);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<36} {:<11} headline", "point", "outcome");
    let _ = writeln!(s, "{}", "-".repeat(78));
    for rec in &r.records {
        let outcome = match rec.outcome {
            Outcome::Expected => "expected",
            Outcome::Unexpected => "UNEXPECTED",
        };
        let _ = writeln!(s, "{:<36} {:<11} {}", rec.point, outcome, headline(&rec.body));
    }
    for rec in &r.records {
        let _ = writeln!(s);
        let _ = writeln!(s, "== {}", rec.point);
        for (k, v) in details(&rec.body) {
            let _ = writeln!(s, "  {k:<22} {v}");
        }
    }
    let _ = writeln!(s);
    let m = &r.summary;
    let _ = writeln!(
        s,
        "summary: {} records, {} expected, {} unexpected, {} errors",
        m.records, m.expected, m.unexpected, m.errors
    );
    if !r.discrepancies.is_empty() {
        let _ = writeln!(s, "notes:");
        for d in &r.discrepancies {
            let _ = writeln!(s, "  - {d}");
        }
    }
    s
}

fn headline(b: &RecordBody) -> String {
    match b {
        RecordBody::Theorem(t) => {
            let bound = t.bound.as_ref().map(|b| b.verdict.to_string()).unwrap_or_else(|| "-".into());
            format!("trace {}, bound {}", t.trace.verdict, bound)
        }
        RecordBody::Decomposition(d) => format!(
            "A={} C={} bound {}",
            vector_text(&d.additive),
            vector_text(&d.cubic),
            d.bound.verdict
        ),
        RecordBody::Counterexample(c) => {
            format!("trace {}, constant diff norm {}", c.trace.verdict, c.constant_diff_norm.text())
        }
        RecordBody::Hypotheses(h) => format!(
            "sigma-bar {} / {}",
            h.sigma_bar_additive.status, h.sigma_bar_cubic.status
        ),
        RecordBody::Axiom(a) => match &a.counterexample {
            None => format!("{} checked, no counterexample", a.checked),
            Some(_) => format!("{} checked, counterexample found", a.checked),
        },
        RecordBody::Error { message, .. } => format!("error: {message}"),
    }
}

fn details(b: &RecordBody) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: String| out.push((k.to_string(), v));
    match b {
        RecordBody::Theorem(t) => {
            push("trace verdict", t.trace.verdict.to_string());
            push("last diff norm", t.trace.last_diff());
            if let Some(l) = &t.trace.limit {
                push("limit", vector_text(l));
            }
            push("sigma-hat", t.sigma_hat.clone());
            push("sigma-bar decay", t.sigma_hat_hypothesis.text());
            for c in &t.residual_checks {
                push(&c.label, c.text());
            }
            if let Some(b) = &t.bound {
                push(&b.label, b.text());
            }
        }
        RecordBody::Decomposition(d) => {
            push("A(u)", vector_text(&d.additive));
            push("C(u)", vector_text(&d.cubic));
            if let Some(a) = &d.additive_coefficients {
                push("A(u)/u", vector_text(a));
            }
            if let Some(c) = &d.cubic_coefficients {
                push("C(u)/u^3", vector_text(c));
            }
            push("F(u)-A(u)-C(u)", vector_text(&d.residual));
            push("exact", d.exact.to_string());
            push("additive trace", format!("{} (last diff {})", d.additive_trace.verdict, d.additive_trace.last_diff()));
            push("cubic trace", format!("{} (last diff {})", d.cubic_trace.verdict, d.cubic_trace.last_diff()));
            push("sigma-bar additive", d.sigma_hat_additive.text());
            push("sigma-bar cubic", d.sigma_hat_cubic.text());
            push(&d.bound.label, d.bound.text());
        }
        RecordBody::Counterexample(c) => {
            push("trace verdict", c.trace.verdict.to_string());
            push("diff norms", format!("{} steps, all {}", c.trace.diff_norms.len(), c.constant_diff_norm.text()));
            push("closed form", c.closed_form.text());
            push("D(u, 2u)", vector_text(&c.residual_at_double));
            push("D(u, u)", vector_text(&c.residual_at_diagonal));
        }
        RecordBody::Hypotheses(h) => {
            push("sigma-hat additive", h.sigma_hat_additive.clone());
            push("sigma-hat cubic", h.sigma_hat_cubic.clone());
            push("sigma-bar additive", h.sigma_bar_additive.text());
            push("sigma-bar cubic", h.sigma_bar_cubic.text());
            for pair in &h.pairs {
                push(&format!("pair v={} additive", pair.v), pair.additive.text());
                push(&format!("pair v={} cubic", pair.v), pair.cubic.text());
            }
            push("uniqueness |2|", h.uniqueness_additive.text());
            push("uniqueness cubic |2|", h.uniqueness_cubic_2.text());
            push("uniqueness cubic |8|", h.uniqueness_cubic_8.text());
        }
        RecordBody::Axiom(a) => {
            push("checked", a.checked.to_string());
            push("counterexample", a.counterexample.clone().unwrap_or_else(|| "none".into()));
        }
        RecordBody::Error { message, trace } => {
            push("error", message.clone());
            if let Some(t) = trace {
                push("trace verdict", t.verdict.to_string());
                push("last diff norm", t.last_diff());
            }
        }
    }
    out
}

pub(crate) fn point_label(u: &BigRational) -> String {
    format!("u={}", q(u))
}
