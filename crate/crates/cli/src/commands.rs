//! One function per subcommand: arguments in, rendered rows out.

use std::path::PathBuf;

use clap::{ArgAction, Args};
use nsens::bounds::{check_bound_with, check_key_bound_with, space_profile, BoundInputs, BoundMode, BoundReport, EtaCurve};
use nsens::chaos::variance_spectrum;
use nsens::counterexample::counterexample_demo;
use nsens::influence::influence_profile;
use nsens::noise::{exact_noise_cov, mc_noise_cov_sweep, NoiseParams, SweepRow};
use nsens::polymer::{
    independence_diagnostic, mc_polymer_noise_cov, polymer_w, DisorderField, NoiseCovRow, PolymerParams, ZSpec,
};
use nsens::tribes::sharp_ratio_report;
use serde::{Deserialize, Serialize};

use crate::config::Format;
use crate::error::CliError;
use crate::fixtures;

/// Rendered result of one subcommand.
pub struct Outcome {
    pub body: Vec<u8>,
    /// The swept values, for the manifest.
    pub grid: serde_json::Value,
    pub violation: Option<String>,
}

pub fn render<T: Serialize>(rows: &[T], format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| CliError::config(e.to_string()))?;
            }
            w.into_inner().map_err(|e| CliError::config(e.to_string()))
        }
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(rows).expect("rows serialize");
            v.push(b'\n');
            Ok(v)
        }
    }
}

fn outcome<T: Serialize>(rows: &[T], format: Format, grid: serde_json::Value, violation: Option<String>) -> Result<Outcome, CliError> {
    Ok(Outcome { body: render(rows, format)?, grid, violation })
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeArgs {
    /// Function fixture, e.g. maj3, parity4, tribes2x3, random-real:3:4, file:PATH.
    #[arg(long, default_value = "maj3")]
    pub function: String,
}

pub fn decompose(a: &DecomposeArgs, seed: u64, format: Format) -> Result<Outcome, CliError> {
    let f = fixtures::function(&a.function, seed, 0)?;
    let spec = variance_spectrum(&f)?;
    outcome(&spec.rows(), format, serde_json::Value::Null, None)
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfluenceArgs {
    #[arg(long, default_value = "maj3")]
    pub function: String,
}

pub fn influence(a: &InfluenceArgs, seed: u64, format: Format) -> Result<Outcome, CliError> {
    let f = fixtures::function(&a.function, seed, 0)?;
    outcome(&influence_profile(&f)?.rows(), format, serde_json::Value::Null, None)
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseCovArgs {
    #[arg(long, default_value = "maj3")]
    pub function: String,
    /// Noise levels, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5")]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Also report the exact covariance from the spectrum.
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    pub exact: bool,
}

pub fn noise_cov(a: &NoiseCovArgs, seed: u64, format: Format) -> Result<Outcome, CliError> {
    let f = fixtures::function(&a.function, seed, 0)?;
    let spec = if a.exact { Some(variance_spectrum(&f)?) } else { None };
    let mc = mc_noise_cov_sweep(|c| f.value_at(c), f.space(), &a.eps, a.samples, seed)?;
    let rows = a
        .eps
        .iter()
        .zip(mc)
        .map(|(&e, m)| {
            Ok(SweepRow {
                epsilon: e,
                cov_exact: spec.as_ref().map(|s| Ok::<_, CliError>(exact_noise_cov(s, NoiseParams::new(e)?))).transpose()?,
                cov_mc: m.estimate,
                stderr: m.stderr,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    outcome(&rows, format, serde_json::json!({ "epsilon": a.eps }), None)
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsArgs {
    #[arg(long, default_value = "maj3")]
    pub function: String,
    /// Number of functions; random fixtures draw function `i` from stream `(seed, i)`.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5")]
    pub eps: Vec<f64>,
    /// general, refined, refined:K, optimal, kpower:K, kk:GAMMA, vh or key.
    #[arg(long, default_value = "optimal")]
    pub mode: String,
    #[arg(long, default_value_t = 4.0)]
    pub q: f64,
}

#[derive(Serialize)]
struct BoundRow {
    mode: String,
    epsilon: Option<f64>,
    q: Option<f64>,
    eta_q: Option<f64>,
    gamma: f64,
    lhs: f64,
    rhs: f64,
    holds: bool,
}

impl From<BoundReport> for BoundRow {
    fn from(r: BoundReport) -> Self {
        Self { mode: r.mode, epsilon: r.epsilon, q: r.q, eta_q: r.eta_q, gamma: r.gamma, lhs: r.lhs, rhs: r.rhs, holds: r.holds }
    }
}

fn bound_mode(spec: &str) -> Result<Option<BoundMode>, CliError> {
    let bad = || CliError::config(format!("unknown bound mode `{spec}`"));
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a.parse::<f64>().map_err(|_| bad())?)),
        None => (spec, None),
    };
    Ok(Some(match (name, arg) {
        ("general", None) => BoundMode::General,
        ("refined", None) => BoundMode::Refined { q_bar: f64::INFINITY, curve: EtaCurve::Optimal },
        ("refined", Some(k)) => BoundMode::Refined { q_bar: f64::INFINITY, curve: EtaCurve::KPower(k) },
        ("optimal", None) => BoundMode::Optimal,
        ("kpower", Some(k)) => BoundMode::KPower(k),
        ("kk", Some(g)) => BoundMode::Kk { gamma: g },
        ("vh", None) => BoundMode::VanHandel,
        ("key", None) => return Ok(None),
        _ => return Err(bad()),
    }))
}

pub fn bounds_check(a: &BoundsArgs, seed: u64, format: Format) -> Result<Outcome, CliError> {
    let mode = bound_mode(&a.mode)?;
    let random = a.function.starts_with("random");
    let mut rows: Vec<BoundRow> = Vec::new();
    for i in 0..a.count.max(1) {
        let f = fixtures::function(&a.function, seed, i as u64)?;
        let inp = match BoundInputs::of(&f) {
            Err(nsens::Error::ZeroVariance { .. }) if random => continue,
            r => r?,
        };
        let profile = space_profile(f.space(), a.q)?;
        match &mode {
            Some(m) => {
                for &e in &a.eps {
                    rows.push(check_bound_with(&inp, e, m, &profile)?.into());
                }
            }
            None => {
                for d in 0..=f.space().n() {
                    let (key, at_eps) = check_key_bound_with(&inp, d, &profile)?;
                    rows.push(key.into());
                    if d == 0 {
                        rows.push(at_eps.into());
                    }
                }
            }
        }
    }
    let failed = rows.iter().filter(|r| !r.holds).count();
    let violation = (failed > 0).then(|| format!("{failed} of {} bound checks failed", rows.len()));
    outcome(&rows, format, serde_json::json!({ "epsilon": a.eps, "count": a.count }), violation)
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperArgs {
    /// rademacher, three-point, binary:P, uniform:K or custom:a/p,a/p,...
    #[arg(long, default_value = "rademacher")]
    pub law: String,
    #[arg(long, value_delimiter = ',', default_value = "3,4,6")]
    pub q: Vec<f64>,
}

#[derive(Serialize)]
struct HyperRow {
    q: f64,
    m_q: f64,
    eta_q: f64,
    eta_lower: f64,
    eta_upper: f64,
    alpha_q: f64,
}

pub fn hyper(a: &HyperArgs, format: Format) -> Result<Outcome, CliError> {
    let law = fixtures::law(&a.law)?;
    let rows = a
        .q
        .iter()
        .map(|&q| {
            let h = nsens::bounds::eta_q_estimate(&law, q)?;
            Ok(HyperRow {
                q,
                m_q: h.m_q,
                eta_q: h.eta_q,
                eta_lower: h.eta_bracket.0,
                eta_upper: h.eta_bracket.1,
                alpha_q: nsens::bounds::alpha_q(q, h.eta_q),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    outcome(&rows, format, serde_json::json!({ "q": a.q }), None)
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TribesArgs {
    #[arg(long, default_value_t = 0.25)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.3)]
    pub eps: f64,
    /// `A:B[:K]` with K points per decade, or a comma list.
    #[arg(long = "t-grid", id = "t_grid", default_value = "1e3:1e5")]
    pub t_grid: String,
}

#[derive(Serialize)]
struct TribesRow {
    t: u64,
    a_t: u64,
    p_t: f64,
    m_t: f64,
    r_t: f64,
    q_eps: f64,
    cov_exact: f64,
    var: f64,
    w_inf1: f64,
    w_classical: f64,
    lhs_ratio: f64,
    rhs_ratio: f64,
    ratio: f64,
}

pub fn tribes(a: &TribesArgs, format: Format) -> Result<Outcome, CliError> {
    let grid = fixtures::t_grid(&a.t_grid)?;
    let rows: Vec<TribesRow> = sharp_ratio_report(a.gamma, a.eps, &grid)?
        .into_iter()
        .map(|r| TribesRow {
            t: r.t,
            a_t: r.a_t,
            p_t: r.p_t,
            m_t: r.m_t,
            r_t: r.r_t,
            q_eps: r.q_eps,
            cov_exact: r.cov_exact,
            var: r.var,
            w_inf1: r.w_inf1,
            w_classical: r.w_classical,
            lhs_ratio: r.lhs_ratio,
            rhs_ratio: r.rhs_ratio,
            ratio: r.ratio,
        })
        .collect();
    outcome(&rows, format, serde_json::json!({ "t": grid }), None)
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolymerArgs {
    /// Time horizons, comma separated.
    #[arg(long = "N", id = "N", value_delimiter = ',', default_value = "64,128,256")]
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// rademacher or three-point (any centred unit-variance law is accepted).
    #[arg(long, default_value = "rademacher")]
    pub law: String,
    /// Initial test function: bump:R, gaussian:SCALE:R or square:SIDE:RAMP.
    #[arg(long, default_value = "bump:0.5")]
    pub g: String,
    /// Final test function.
    #[arg(long, default_value = "bump:0.5")]
    pub h: String,
    #[arg(long, default_value_t = 0.0)]
    pub s: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long = "trunc-tol", id = "trunc_tol", default_value_t = nsens::polymer::DEFAULT_TRUNC_TOL)]
    pub trunc_tol: f64,
    /// Directory receiving the disorder field of replicate 0 for each N.
    #[arg(long = "dump-field", id = "dump_field")]
    pub dump_field: Option<PathBuf>,
}

pub fn polymer(a: &PolymerArgs, seed: u64, format: Format) -> Result<Outcome, CliError> {
    let law = fixtures::law(&a.law)?;
    let (g, h) = (fixtures::test_function(&a.g)?, fixtures::test_function(&a.h)?);
    let spec = ZSpec::with_times(g.clone(), h.clone(), a.s, a.t);
    let mut rows = Vec::new();
    for &n in &a.n {
        let p = PolymerParams::new(n, a.theta, law.clone(), a.trunc_tol)?;
        let w = polymer_w(&p, &g, &h)?;
        let cov = mc_polymer_noise_cov(&p, std::slice::from_ref(&spec), a.eps, a.samples, seed, None)?;
        if let Some(dir) = &a.dump_field {
            let field = DisorderField::from_seed(&law, n, p.box_radius(spec.support_radius()), seed, 0);
            let mut bytes = Vec::new();
            field.dump(&mut bytes).map_err(CliError::io)?;
            crate::write_atomic(&dir.join(format!("field-N{n}.nspf")), &bytes)?;
        }
        rows.push(NoiseCovRow {
            n,
            beta_n: p.beta_n,
            sigma_n: p.sigma_n,
            r_n: p.r_n,
            w,
            w_times_log_n: w * (n as f64).ln(),
            cov_mc: cov.estimate,
            stderr: cov.stderr,
        });
    }
    outcome(&rows, format, serde_json::json!({ "N": a.n }), None)
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShfArgs {
    #[arg(long = "N", id = "N", value_delimiter = ',', default_value = "64,128,256")]
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Highest total degree of the monomials in the white-noise values (1 to 3).
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    #[arg(long, default_value = "rademacher")]
    pub law: String,
    #[arg(long, default_value = "bump:0.5")]
    pub g: String,
    #[arg(long, default_value = "bump:0.5")]
    pub h: String,
    /// Space-time test functions bump:T0:T1:R, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "bump:0:0.5:0.5,bump:0.5:1:0.5")]
    pub rho: Vec<String>,
    #[arg(long = "trunc-tol", id = "trunc_tol", default_value_t = nsens::polymer::DEFAULT_TRUNC_TOL)]
    pub trunc_tol: f64,
}

pub fn shf_independence(a: &ShfArgs, seed: u64, format: Format) -> Result<Outcome, CliError> {
    let law = fixtures::law(&a.law)?;
    let spec = ZSpec::new(fixtures::test_function(&a.g)?, fixtures::test_function(&a.h)?);
    let rhos = a.rho.iter().map(|r| fixtures::space_time_function(r)).collect::<Result<Vec<_>, _>>()?;
    let grid = a.n.iter().map(|&n| PolymerParams::new(n, a.theta, law.clone(), a.trunc_tol)).collect::<Result<Vec<_>, _>>()?;
    let rows = independence_diagnostic(&grid, &spec, &rhos, a.degree, None, a.samples, seed)?;
    outcome(&rows, format, serde_json::json!({ "N": a.n }), None)
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleArgs {
    #[arg(long = "N", id = "N", value_delimiter = ',', default_value = "100,1000,10000")]
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 4.0)]
    pub q: f64,
}

pub fn counterexample(a: &CounterexampleArgs, format: Format) -> Result<Outcome, CliError> {
    let rows = counterexample_demo(&a.n, a.eps, a.q)?;
    let bad: Vec<usize> = rows
        .iter()
        .filter(|r| (r.cov_over_var - (1.0 - a.eps)).abs() > 1e-12 || r.w > 4.0 / r.n as f64)
        .map(|r| r.n)
        .collect();
    let violation = (!bad.is_empty()).then(|| format!("counterexample identities fail at N = {bad:?}"));
    outcome(&rows, format, serde_json::json!({ "N": a.n }), violation)
}
