//! Comparison of enumerated or sampled laws against the closed forms.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dynamics::{monte_carlo, MonteCarloOptions};
use crate::enumeration::{enumerate_with, marginal_infected_size, settled_mass, EnumerateOptions};
use crate::error::{Error, Result};
use crate::model::{AgentSet, Interaction, ModelConfig, State};
use crate::numeric::{parse_rational, ratio_to_f64, render_decimal, Rational, RationalString, Scalar};
use crate::theory::{limit_law, predict_action_limit, ActionProfileClass};

/// `½ Σ |p_m − q_m|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Exact `½ Σ |p_m − q_m|`.
pub fn tv_distance_exact(p: &[Rational], q: &[Rational]) -> Result<Rational> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let sum = p
        .iter()
        .zip(q)
        .fold(Rational::zero(), |acc, (a, b)| acc + (a - b).abs());
    Ok(sum / Rational::from_integer(2.into()))
}

/// Pearson goodness-of-fit of observed counts against expected probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Cells with zero expected probability are required to be empty and are
/// dropped from the statistic.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<Option<ChiSquare>> {
    if observed.len() != expected.len() {
        return Err(Error::LengthMismatch {
            left: observed.len(),
            right: expected.len(),
        });
    }
    let total: u64 = observed.iter().sum();
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for (&o, &e) in observed.iter().zip(expected) {
        if e <= 0.0 {
            if o > 0 {
                return Ok(Some(ChiSquare {
                    statistic: f64::INFINITY,
                    dof: 0,
                    p_value: 0.0,
                }));
            }
            continue;
        }
        let exp = e * total as f64;
        statistic += (o as f64 - exp).powi(2) / exp;
        cells += 1;
    }
    if cells < 2 || total == 0 {
        return Ok(None);
    }
    let dof = cells - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(Some(ChiSquare {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    }))
}

/// Classification of a limit action profile.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Class(ActionProfileClass),
    Unclassified,
}

impl ClassLabel {
    pub fn label(&self) -> String {
        match self {
            ClassLabel::Class(c) => c.label(),
            ClassLabel::Unclassified => "unclassified".to_string(),
        }
    }
}

fn near<S: Scalar>(x: &S, y: &S, tolerance: &S) -> bool {
    (x.clone() - y.clone()).abs() <= *tolerance
}

/// `1⃗`, some `A_m`, or neither. Agent 0 is the initially infected agent.
pub fn classify_profile<S: Scalar>(actions: &[S], tau: &Rational, tolerance: &S) -> ClassLabel {
    let n = actions.len();
    let one = S::one();
    let ones = AgentSet::from_agents(n, (0..n).filter(|&i| near(&actions[i], &one, tolerance)));
    if ones.len() == n {
        return ClassLabel::Class(ActionProfileClass::AllOnes);
    }
    if !ones.contains(0) {
        return ClassLabel::Unclassified;
    }
    let m = ones.len();
    let gamma = predict_action_limit(m, n, tau);
    if gamma.is_one() {
        return ClassLabel::Unclassified;
    }
    let g = S::from_rational(&gamma);
    let rest_match = (0..n)
        .filter(|&i| !ones.contains(i))
        .all(|i| near(&actions[i], &g, tolerance));
    if rest_match {
        ClassLabel::Class(ActionProfileClass::ClassA { m, off_value: gamma })
    } else {
        ClassLabel::Unclassified
    }
}

/// [`classify_profile`] for a state of `cfg`; only homogeneous complete-graph
/// configs have classes other than `1⃗`.
pub fn classify_action_profile<S: Scalar>(cfg: &ModelConfig<S>, s: &State<S>, tolerance: &S) -> ClassLabel {
    let homogeneous = matches!(cfg.interaction, Interaction::Complete)
        && cfg.tau.iter().all(|t| *t == cfg.tau[0]);
    if homogeneous {
        classify_profile(&s.actions, &cfg.tau[0].to_rational(), tolerance)
    } else if s.actions.iter().all(|a| near(a, &S::one(), tolerance)) {
        ClassLabel::Class(ActionProfileClass::AllOnes)
    } else {
        ClassLabel::Unclassified
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub a: RationalString,
    pub tau: RationalString,
    pub horizon: usize,
}

impl GridPoint {
    pub fn new(a: &str, tau: &str, horizon: usize) -> Self {
        GridPoint {
            a: RationalString(crate::numeric::rat(a)),
            tau: RationalString(crate::numeric::rat(tau)),
            horizon,
        }
    }
}

/// Reads a grid from JSON (`[{"a": .., "tau": .., "horizon": ..}]`) or CSV
/// (`a,tau,horizon` per line, optional header). A missing horizon uses
/// `default_horizon`.
pub fn parse_grid(text: &str, default_horizon: usize) -> Result<Vec<GridPoint>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            a: RationalString,
            tau: RationalString,
            horizon: Option<usize>,
        }
        let raw: Vec<Raw> =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("grid: {e}")))?;
        return Ok(raw
            .into_iter()
            .map(|r| GridPoint {
                a: r.a,
                tau: r.tau,
                horizon: r.horizon.unwrap_or(default_horizon),
            })
            .collect());
    }
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if lineno == 0 && fields.first() == Some(&"a") {
            continue;
        }
        let bad = || Error::Parse(format!("grid line {}: `{line}`", lineno + 1));
        if fields.len() < 2 || fields.len() > 3 {
            return Err(bad());
        }
        let horizon = match fields.get(2) {
            Some(h) => h.parse().map_err(|_| bad())?,
            None => default_horizon,
        };
        out.push(GridPoint {
            a: RationalString(parse_rational(fields[0])?),
            tau: RationalString(parse_rational(fields[1])?),
            horizon,
        });
    }
    Ok(out)
}

/// The `(a, τ)` points of the classic `n = 5` enumeration table.
pub const REFERENCE_POINTS: &[(&str, &str)] = &[
    ("0", "0.12"),
    ("0", "0.3"),
    ("0", "0.4"),
    ("0", "0.6"),
    ("0.2", "0.02"),
    ("0.2", "0.05"),
    ("0.2", "0.15"),
    ("0.2", "0.3"),
    ("0.2", "0.35"),
    ("0.2", "0.5"),
    ("0.2", "0.7"),
    ("0.35", "0.05"),
    ("0.35", "0.0875"),
    ("0.35", "0.15"),
    ("0.35", "0.255"),
    ("0.35", "0.27"),
    ("0.35", "0.3"),
    ("0.35", "0.36"),
    ("0.35", "0.4"),
    ("0.35", "0.5"),
    ("0.45", "0.1"),
    ("0.45", "0.1125"),
    ("0.45", "0.2"),
    ("0.45", "0.27"),
    ("0.45", "0.3"),
    ("0.45", "0.32"),
    ("0.45", "0.4"),
    ("0.45", "0.5"),
    ("0.6", "0.1"),
    ("0.6", "0.15"),
    ("0.6", "0.2"),
    ("0.6", "0.26"),
    ("0.6", "0.3"),
    ("0.6", "0.34"),
    ("0.6", "0.4"),
    ("0.8", "0.1"),
    ("0.8", "0.2"),
    ("0.8", "0.22"),
    ("0.8", "0.26"),
    ("0.8", "0.27"),
    ("0.8", "0.28"),
    ("1", "0.12"),
    ("1", "0.5"),
];

/// Epochs after which the classic table was taken, as a count of transitions
/// from `S_0`.
pub const REFERENCE_HORIZON: usize = 9;

pub fn reference_grid(horizon: usize) -> Vec<GridPoint> {
    REFERENCE_POINTS
        .iter()
        .map(|(a, t)| GridPoint::new(a, t, horizon))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Method {
    Enumerate { support_cap: usize },
    MonteCarlo { samples: u64, seed: u64, max_epochs: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub n: usize,
    pub a: Rational,
    pub tau: Rational,
    pub horizon: usize,
    pub method: Method,
    /// `None` when no closed form covers the point.
    pub theoretical: Option<Vec<Rational>>,
    pub empirical: Option<Vec<Rational>>,
    pub tv_distance: Option<Rational>,
    pub chi_square: Option<ChiSquare>,
    /// Enumeration: mass on settled states. Sampling: share of unsettled samples.
    pub settled: Option<Rational>,
    pub non_absorbed: Option<u64>,
    pub error: Option<String>,
    /// The row failed because an engine hit its resource cap.
    pub resource_cap: bool,
}

/// One row per grid point, in grid order. Engine failures are recorded on
/// the row.
pub fn build_table(n: usize, grid: &[GridPoint], method: Method) -> Vec<ComparisonRow> {
    grid.iter().map(|p| build_row(n, p, method)).collect()
}

pub fn build_row(n: usize, point: &GridPoint, method: Method) -> ComparisonRow {
    let (a, tau) = (point.a.0.clone(), point.tau.0.clone());
    let mut row = ComparisonRow {
        n,
        a: a.clone(),
        tau: tau.clone(),
        horizon: point.horizon,
        method,
        theoretical: None,
        empirical: None,
        tv_distance: None,
        chi_square: None,
        settled: None,
        non_absorbed: None,
        error: None,
        resource_cap: false,
    };
    let theory = match limit_law(n, &a, &tau) {
        Ok(law) => Some(law.size_law()),
        Err(Error::Uncovered { .. }) => None,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.theoretical = theory.clone();
    let cfg = match ModelConfig::<Rational>::homogeneous(n, &a, &tau) {
        Ok(c) => c,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    match method {
        Method::Enumerate { support_cap } => {
            let opts = EnumerateOptions {
                horizon: point.horizon,
                support_cap,
            };
            match enumerate_with(&cfg, opts, |_| {}) {
                Ok(dist) => {
                    row.settled = Some(settled_mass(&dist, &cfg));
                    row.empirical = Some(marginal_infected_size(&dist));
                }
                Err(e) => {
                    row.resource_cap = matches!(e, Error::SupportCapExceeded { .. });
                    row.error = Some(e.to_string());
                }
            }
        }
        Method::MonteCarlo {
            samples,
            seed,
            max_epochs,
        } => {
            let fcfg: ModelConfig<f64> = cfg.convert();
            let opts = MonteCarloOptions {
                samples,
                seed,
                max_epochs,
                threads: None,
            };
            match monte_carlo(&fcfg, opts) {
                Ok(report) => {
                    row.empirical = Some(report.law.size_law());
                    row.non_absorbed = Some(report.non_absorbed);
                    if let Some(t) = &theory {
                        let expected: Vec<f64> = t.iter().map(ratio_to_f64).collect();
                        match chi_square(&report.law.size_counts, &expected) {
                            Ok(c) => row.chi_square = c,
                            Err(e) => row.error = Some(e.to_string()),
                        }
                    }
                }
                Err(e) => row.error = Some(e.to_string()),
            }
        }
    }
    if let (Some(t), Some(e)) = (&row.theoretical, &row.empirical) {
        row.tv_distance = tv_distance_exact(t, e).ok();
    }
    row
}

/// Serializable form of a [`ComparisonRow`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowExport {
    pub n: usize,
    pub a: RationalString,
    pub tau: RationalString,
    pub horizon: usize,
    pub method: String,
    pub covered: bool,
    pub theoretical: Option<Vec<RationalString>>,
    pub theoretical_decimal: Option<Vec<String>>,
    pub empirical: Option<Vec<RationalString>>,
    pub empirical_decimal: Option<Vec<String>>,
    pub tv_distance: Option<f64>,
    pub tv_distance_exact: Option<RationalString>,
    pub chi_square: Option<ChiSquare>,
    pub settled_mass: Option<RationalString>,
    pub non_absorbed: Option<u64>,
    pub error: Option<String>,
}

fn exact_vec(v: &Option<Vec<Rational>>) -> Option<Vec<RationalString>> {
    v.as_ref().map(|v| v.iter().cloned().map(RationalString).collect())
}

fn decimal_vec(v: &Option<Vec<Rational>>, precision: usize) -> Option<Vec<String>> {
    v.as_ref().map(|v| v.iter().map(|x| render_decimal(x, precision)).collect())
}

impl ComparisonRow {
    pub fn method_name(&self) -> &'static str {
        match self.method {
            Method::Enumerate { .. } => "enumerate",
            Method::MonteCarlo { .. } => "monte-carlo",
        }
    }

    pub fn export(&self, precision: usize) -> RowExport {
        RowExport {
            n: self.n,
            a: RationalString(self.a.clone()),
            tau: RationalString(self.tau.clone()),
            horizon: self.horizon,
            method: self.method_name().to_string(),
            covered: self.theoretical.is_some(),
            theoretical: exact_vec(&self.theoretical),
            theoretical_decimal: decimal_vec(&self.theoretical, precision),
            empirical: exact_vec(&self.empirical),
            empirical_decimal: decimal_vec(&self.empirical, precision),
            tv_distance: self.tv_distance.as_ref().map(ratio_to_f64),
            tv_distance_exact: self.tv_distance.clone().map(RationalString),
            chi_square: self.chi_square,
            settled_mass: self.settled.clone().map(RationalString),
            non_absorbed: self.non_absorbed,
            error: self.error.clone(),
        }
    }
}

fn csv_vector(v: &Option<Vec<Rational>>, precision: usize) -> String {
    match v {
        Some(v) => format!(
            "\"({})\"",
            v.iter()
                .map(|x| render_decimal(x, precision))
                .collect::<Vec<_>>()
                .join(",")
        ),
        None => "uncovered".to_string(),
    }
}

fn csv_escape(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

pub const CSV_HEADER: &str =
    "n,a,tau,horizon,method,theoretical,empirical,tv_distance,chi_square,chi_square_p,error";

/// One line per row, vectors rendered as decimals in the reference table style.
pub fn render_csv(rows: &[ComparisonRow], precision: usize) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let empirical = match &r.empirical {
            Some(_) => csv_vector(&r.empirical, precision),
            None => String::new(),
        };
        let fields = [
            r.n.to_string(),
            render_decimal(&r.a, precision.max(4)),
            render_decimal(&r.tau, precision.max(4)),
            r.horizon.to_string(),
            r.method_name().to_string(),
            csv_vector(&r.theoretical, precision),
            empirical,
            r.tv_distance
                .as_ref()
                .map(|t| render_decimal(t, precision.max(6)))
                .unwrap_or_default(),
            r.chi_square.map(|c| format!("{:.4}", c.statistic)).unwrap_or_default(),
            r.chi_square.map(|c| format!("{:.4}", c.p_value)).unwrap_or_default(),
            r.error.as_deref().map(csv_escape).unwrap_or_default(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// `(T, tv(S_T marginal, limit law))` for `T = 0..=max_horizon`.
pub fn convergence_series(
    cfg: &ModelConfig<Rational>,
    limit: &[Rational],
    max_horizon: usize,
    support_cap: usize,
) -> Result<Vec<(usize, Rational)>> {
    let mut out = Vec::with_capacity(max_horizon + 1);
    let mut failure = None;
    enumerate_with(
        cfg,
        EnumerateOptions {
            horizon: max_horizon,
            support_cap,
        },
        |d| match tv_distance_exact(&marginal_infected_size(d), limit) {
            Ok(tv) => out.push((d.epoch, tv)),
            Err(e) => failure = Some(e),
        },
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

pub fn render_series_csv(series: &[(usize, Rational)]) -> String {
    let mut out = String::from("horizon,tv_distance,tv_distance_exact\n");
    for (t, tv) in series {
        out.push_str(&format!("{t},{},{}\n", ratio_to_f64(tv), crate::numeric::render_rational(tv)));
    }
    out
}
