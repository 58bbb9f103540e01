//! Command implementations: validation, engine orchestration, file output.
//!
//! Exit-code contract: 0 success, 1 tolerance failure, 2 invalid
//! configuration, 3 engine error. Output files are written to a temporary
//! name and renamed, and nothing is written before validation passes.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use decoh_core::model::{self, BodyAmplitude, Coupling, EnvState, GridSpec, GridWave, PhysConsts};
use decoh_core::rng::SplitMix64;
use decoh_core::{oracle, rdm, Complex64};
use serde::Serialize;

use crate::config::{CompareConfig, EngineChoice, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration (exit 2); the message names the violated
    /// invariant.
    Config(String),
    /// Engine failure (exit 3).
    Engine(decoh_core::Error),
    /// Comparison exceeded its tolerances (exit 1).
    Tolerance(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Tolerance(_) => 1,
            CliError::Config(_) => 2,
            CliError::Engine(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config invalid: {msg}"),
            CliError::Engine(e) => write!(f, "engine error: {e}"),
            CliError::Tolerance(msg) => write!(f, "tolerance failure: {msg}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<decoh_core::Error> for CliError {
    fn from(e: decoh_core::Error) -> Self {
        CliError::Engine(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Everything a command needs: parsed config plus the flag overrides.
pub struct Context {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub engine: EngineChoice,
    pub seed: u64,
}

/// Config fields converted into engine inputs, after validation.
struct Validated {
    consts: PhysConsts,
    coupling: Coupling,
    env: EnvState,
    body: BodyAmplitude,
    times: Vec<f64>,
    a: f64,
    b: f64,
}

fn validate(ctx: &Context) -> Result<Validated, CliError> {
    let consts = ctx.config.consts();
    let coupling = ctx.config.coupling();
    let env = ctx.config.env();
    let report = model::validate(&consts, &coupling, &env);
    if !report.passed() {
        return Err(CliError::Config(report.failures().join("; ")));
    }
    let body = ctx.config.body().map_err(CliError::Config)?;
    let times = ctx.config.times().map_err(CliError::Config)?;
    if ctx.engine.runs_oracle() {
        if consts.n > 3 {
            return Err(CliError::Config(String::from("engine=oracle requires n ≤ 3")));
        }
        if env.has_delta() {
            return Err(CliError::Config(String::from(
                "engine=oracle requires a non-delta environment",
            )));
        }
    }
    Ok(Validated {
        consts,
        coupling,
        env,
        body,
        times,
        a: ctx.config.query.a,
        b: ctx.config.query.b,
    })
}

/// One CSV row.
struct Row {
    t: f64,
    z_or_y: f64,
    value: Complex64,
    modulus: f64,
    phase_exponent: f64,
}

fn analytic_element(v: &Validated, t: f64) -> Result<Row, CliError> {
    let (a, b) = (v.a, v.b);
    let el = match v.coupling {
        Coupling::Sc { .. } => rdm::rdm_sc(&v.body, &v.env, a, b, t, &v.consts, &v.coupling),
        Coupling::Hc { .. } => rdm::rdm_hc(&v.body, &v.env, a, b, t, &v.consts, &v.coupling),
        Coupling::Mc { .. } => rdm::rdm_mc(&v.body, &v.env, a, b, t, &v.consts, &v.coupling),
        Coupling::Mhc { .. } => rdm::rdm_mhc(&v.body, &v.env, a, b, t, &v.consts, &v.coupling),
    }?;
    Ok(Row {
        t,
        z_or_y: el.transform_arg,
        value: el.value,
        modulus: el.modulus,
        phase_exponent: el.phase_exponent,
    })
}

struct OracleRunner {
    phi: GridWave,
}

impl OracleRunner {
    fn element(&self, v: &Validated, t: f64) -> Result<Row, CliError> {
        let (a, b) = (v.a, v.b);
        let value =
            oracle::rdm_element_oracle(&v.body, &self.phi, a, b, t, &v.consts, &v.coupling, None)?;
        Ok(Row {
            t,
            z_or_y: rdm::transform_arg(&v.coupling, a, b, t, &v.consts),
            value,
            modulus: value.norm(),
            phase_exponent: rdm::coupling_phase(&v.coupling, a, b, t, &v.consts),
        })
    }
}

fn grid_for_oracle(ctx: &Context, v: &Validated) -> Result<GridSpec, CliError> {
    let dims = v.consts.n as usize;
    if let Some(g) = &ctx.config.oracle_grid {
        return GridSpec::new(g.points, dims, g.spacing, g.origin)
            .map_err(|e| CliError::Config(e.to_string()));
    }
    let EnvState::Product(families) = &v.env else {
        return Err(CliError::Config(String::from(
            "oracle_grid must be given for gridded environments",
        )));
    };
    let t_max = v.times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let reach = families
        .iter()
        .map(|p| p.mean().abs() + 8.0 * p.width())
        .fold(0.0f64, f64::max);
    let halfspan = reach + v.consts.alpha.abs() * t_max + 1.0;
    let points = match dims {
        1 => 4096,
        2 => 1024,
        _ => 128,
    };
    GridSpec::new(points, dims, 2.0 * halfspan / points as f64, -halfspan)
        .map_err(|e| CliError::Config(e.to_string()))
}

fn oracle_runner(ctx: &Context, v: &Validated) -> Result<OracleRunner, CliError> {
    let spec = grid_for_oracle(ctx, v)?;
    let phi = oracle::sample_env(&v.env, spec)?;
    Ok(OracleRunner { phi })
}

/// 17 significant digits, fixed scientific notation: identical configs must
/// produce byte-identical files.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_bytes(rows: &[Row], engine: &str) -> Vec<u8> {
    let mut out = String::from("t,z_or_y,re,im,modulus,phase_exponent,engine\n");
    for r in rows {
        out.push_str(&fmt_float(r.t));
        out.push(',');
        out.push_str(&fmt_float(r.z_or_y));
        out.push(',');
        out.push_str(&fmt_float(r.value.re));
        out.push(',');
        out.push_str(&fmt_float(r.value.im));
        out.push(',');
        out.push_str(&fmt_float(r.modulus));
        out.push(',');
        out.push_str(&fmt_float(r.phase_exponent));
        out.push(',');
        out.push_str(engine);
        out.push('\n');
    }
    out.into_bytes()
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".tmp.{name}"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_atomic(dir, name, text.as_bytes())
}

#[derive(Serialize)]
struct EngineSummary {
    rows: usize,
    min_modulus: f64,
    max_modulus: f64,
}

fn summarize(rows: &[Row]) -> EngineSummary {
    EngineSummary {
        rows: rows.len(),
        min_modulus: rows.iter().map(|r| r.modulus).fold(f64::INFINITY, f64::min),
        max_modulus: rows.iter().map(|r| r.modulus).fold(f64::NEG_INFINITY, f64::max),
    }
}

#[derive(Serialize)]
struct CurveMeta<'a> {
    config: &'a RunConfig,
    engine_version: &'static str,
    engines: Vec<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    analytic: Option<EngineSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<EngineSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_modulus_discrepancy: Option<f64>,
}

pub fn cmd_curve(ctx: &Context) -> Result<(), CliError> {
    let v = validate(ctx)?;
    let prefix = &ctx.config.output.prefix;

    let mut analytic_rows = None;
    let mut oracle_rows = None;
    if ctx.engine.runs_analytic() {
        let rows: Result<Vec<Row>, CliError> =
            v.times.iter().map(|&t| analytic_element(&v, t)).collect();
        analytic_rows = Some(rows?);
    }
    if ctx.engine.runs_oracle() {
        let runner = oracle_runner(ctx, &v)?;
        let rows: Result<Vec<Row>, CliError> =
            v.times.iter().map(|&t| runner.element(&v, t)).collect();
        oracle_rows = Some(rows?);
    }

    let discrepancy = match (&analytic_rows, &oracle_rows) {
        (Some(a), Some(o)) => Some(
            a.iter()
                .zip(o)
                .map(|(x, y)| (x.modulus - y.modulus).abs())
                .fold(0.0f64, f64::max),
        ),
        _ => None,
    };

    let meta = CurveMeta {
        config: &ctx.config,
        engine_version: env!("CARGO_PKG_VERSION"),
        engines: match ctx.engine {
            EngineChoice::Analytic => vec!["analytic"],
            EngineChoice::Oracle => vec!["oracle"],
            EngineChoice::Both => vec!["analytic", "oracle"],
        },
        analytic: analytic_rows.as_deref().map(summarize),
        oracle: oracle_rows.as_deref().map(summarize),
        max_modulus_discrepancy: discrepancy,
    };

    if let Some(rows) = &analytic_rows {
        write_atomic(&ctx.out_dir, &format!("{prefix}_analytic.csv"), &csv_bytes(rows, "analytic"))?;
    }
    if let Some(rows) = &oracle_rows {
        write_atomic(&ctx.out_dir, &format!("{prefix}_oracle.csv"), &csv_bytes(rows, "oracle"))?;
    }
    write_json(&ctx.out_dir, &format!("{prefix}_meta.json"), &meta)?;
    Ok(())
}

#[derive(Serialize)]
struct ScalingRow {
    doubled: &'static str,
    tau: f64,
    halves_exactly: bool,
}

#[derive(Serialize)]
struct TauReport<'a> {
    config: &'a RunConfig,
    engine_version: &'static str,
    tau: f64,
    n: u32,
    strength: f64,
    separation: f64,
    delta_eta: f64,
    scaling: Vec<ScalingRow>,
}

pub fn cmd_tau(ctx: &Context) -> Result<(), CliError> {
    let v = validate(ctx)?;
    let separation = ctx.config.query.a - ctx.config.query.b;
    let report = rdm::decoherence_time(&v.coupling, separation, &v.env, &v.consts)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if report.delta_eta == 0.0 {
        return Err(CliError::Config(String::from(
            "Δη = 0 (point-mass environment): the timescale is infinite",
        )));
    }

    let base = report.tau;
    let scaling = vec![
        ("n", rdm::tau_formula(v.consts.hbar, report.n * 2, report.strength, separation, report.delta_eta)),
        ("strength", rdm::tau_formula(v.consts.hbar, report.n, report.strength * 2.0, separation, report.delta_eta)),
        ("separation", rdm::tau_formula(v.consts.hbar, report.n, report.strength, separation * 2.0, report.delta_eta)),
        ("delta_eta", rdm::tau_formula(v.consts.hbar, report.n, report.strength, separation, report.delta_eta * 2.0)),
    ]
    .into_iter()
    .map(|(doubled, tau)| ScalingRow { doubled, tau, halves_exactly: tau * 2.0 == base })
    .collect();

    let out = TauReport {
        config: &ctx.config,
        engine_version: env!("CARGO_PKG_VERSION"),
        tau: report.tau,
        n: report.n,
        strength: report.strength,
        separation: report.separation,
        delta_eta: report.delta_eta,
        scaling,
    };
    write_json(&ctx.out_dir, "tau.json", &out)?;
    Ok(())
}

#[derive(Serialize)]
struct Residuals {
    power: f64,
    exponential: f64,
    gaussian: f64,
}

#[derive(Serialize)]
struct DecayFitReport<'a> {
    config: &'a RunConfig,
    engine_version: &'static str,
    model: &'static str,
    order: f64,
    log_slope: f64,
    residual: f64,
    residuals: Residuals,
    points_used: usize,
}

pub fn cmd_decayfit(ctx: &Context) -> Result<(), CliError> {
    let v = validate(ctx)?;
    let window = ctx
        .config
        .decayfit
        .as_ref()
        .ok_or_else(|| CliError::Config(String::from("missing [decayfit] window")))?
        .window;
    if !(window[0] >= 0.0 && window[1] > window[0]) {
        return Err(CliError::Config(String::from("decayfit window must satisfy 0 ≤ lo < hi")));
    }
    let query = rdm::CurveQuery {
        consts: v.consts,
        coupling: v.coupling,
        env: v.env.clone(),
        body: v.body.clone(),
        a: ctx.config.query.a,
        b: ctx.config.query.b,
    };
    let swept = rdm::curve(&query, &v.times)?;
    let fit = rdm::decay_fit(&swept, (window[0], window[1]))?;
    let out = DecayFitReport {
        config: &ctx.config,
        engine_version: env!("CARGO_PKG_VERSION"),
        model: fit.model.label(),
        order: fit.order,
        log_slope: fit.log_slope,
        residual: fit.residual,
        residuals: Residuals {
            power: fit.residual_power,
            exponential: fit.residual_exponential,
            gaussian: fit.residual_gaussian,
        },
        points_used: fit.points_used,
    };
    write_json(&ctx.out_dir, "decayfit.json", &out)?;
    Ok(())
}

#[derive(Serialize)]
struct CompareReport<'a> {
    config: &'a RunConfig,
    engine_version: &'static str,
    samples: usize,
    max_relative_modulus_error: f64,
    max_phase_error_rad: f64,
    modulus_tol: f64,
    phase_tol: f64,
    pass: bool,
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut x = a % two_pi;
    if x > std::f64::consts::PI {
        x -= two_pi;
    }
    if x <= -std::f64::consts::PI {
        x += two_pi;
    }
    x
}

pub fn cmd_compare(ctx: &Context) -> Result<(), CliError> {
    let v = validate(ctx)?;
    let CompareConfig { modulus_tol, phase_tol, random_draws } = ctx.config.compare;
    let prefix = &ctx.config.output.prefix;

    let mut times = v.times.clone();
    if random_draws > 0 {
        let lo = times.first().copied().unwrap();
        let hi = times.last().copied().unwrap();
        let mut rng = SplitMix64::new(ctx.seed);
        for _ in 0..random_draws {
            times.push(rng.range(lo, hi));
        }
    }

    let runner = oracle_runner(ctx, &v)?;
    let mut analytic_rows = Vec::with_capacity(times.len());
    let mut oracle_rows = Vec::with_capacity(times.len());
    let mut worst_mod = 0.0f64;
    let mut worst_phase = 0.0f64;
    for &t in &times {
        let a = analytic_element(&v, t)?;
        let o = runner.element(&v, t)?;
        if a.modulus > 0.0 {
            worst_mod = worst_mod.max((o.modulus - a.modulus).abs() / a.modulus);
        }
        if a.value.norm() > 0.0 && o.value.norm() > 0.0 {
            worst_phase = worst_phase.max(wrap_angle((o.value / a.value).arg()).abs());
        }
        analytic_rows.push(a);
        oracle_rows.push(o);
    }

    let pass = worst_mod <= modulus_tol && worst_phase <= phase_tol;
    let report = CompareReport {
        config: &ctx.config,
        engine_version: env!("CARGO_PKG_VERSION"),
        samples: times.len(),
        max_relative_modulus_error: worst_mod,
        max_phase_error_rad: worst_phase,
        modulus_tol,
        phase_tol,
        pass,
    };
    write_atomic(&ctx.out_dir, &format!("{prefix}_analytic.csv"), &csv_bytes(&analytic_rows, "analytic"))?;
    write_atomic(&ctx.out_dir, &format!("{prefix}_oracle.csv"), &csv_bytes(&oracle_rows, "oracle"))?;
    write_json(&ctx.out_dir, "compare.json", &report)?;
    if !pass {
        return Err(CliError::Tolerance(format!(
            "modulus {worst_mod:.3e} (tol {modulus_tol:.1e}), phase {worst_phase:.3e} rad (tol {phase_tol:.1e})"
        )));
    }
    Ok(())
}
