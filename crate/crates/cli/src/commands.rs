use std::path::PathBuf;

use serde::Serialize;
use thermoscale::fidelity::{error_rate_from_x, log_scaling_fidelity, scaling_fidelity, x_from_error_rate};
use thermoscale::fitkit::{self, FitResult};
use thermoscale::resetsim::{self, McRound, QubitNoise, ResetParams, ResetTrace};
use thermoscale::suites::{self, BoundAudit, ChannelFamily, Suite, SuiteReport};

use crate::config::{AuditSection, FitSection, Format, Globals, ResetSection, ScalingCurveSection, VerifySection};
use crate::output::{csv, emit, json, num};
use crate::{AuditArgs, CliError, FitArgs, Outcome, ResetArgs, ScalingCurveArgs, VerifyArgs};

const MAX_LINEAR_ROWS: u64 = 1_000_000;
pub const DEFAULT_PRESET: &str = "delay-500us-n1";

#[derive(Serialize)]
struct CurveParams {
    x: f64,
    eta: f64,
    n_min: u64,
    n_max: u64,
    log_grid: bool,
    points: usize,
}

#[derive(Serialize)]
struct CurveRow {
    n: u64,
    fidelity: f64,
    ln_fidelity: f64,
}

/// Roughly geometric, strictly increasing sizes from `lo` to `hi`.
fn log_grid(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut v: Vec<u64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp().round() as u64)
        .map(|n| n.clamp(lo, hi))
        .collect();
    v.dedup();
    v
}

pub fn scaling_curve(g: &Globals, a: ScalingCurveArgs, f: &ScalingCurveSection) -> Result<Outcome, CliError> {
    // Either flag replaces both config entries, so a flag never combines with the file.
    let (x, eta) = if a.x.is_some() || a.eta.is_some() { (a.x, a.eta) } else { (f.x, f.eta) };
    let x = match (x, eta) {
        (Some(x), None) => x,
        (None, Some(eta)) => x_from_error_rate(eta)?,
        _ => return Err(CliError::Input("give exactly one of --x and --eta".into())),
    };
    let eta = error_rate_from_x(x)?;
    let log = a.log_grid || f.log_grid.unwrap_or(false);
    let n_min = a.n_min.or(f.n_min).unwrap_or(1);
    let n_max = a.n_max.or(f.n_max).unwrap_or(if log { 100_000 } else { 100 });
    let points = a.points.or(f.points).unwrap_or(50);
    if n_min > n_max {
        return Err(CliError::Input(format!("n_min {n_min} exceeds n_max {n_max}")));
    }
    let ns: Vec<u64> = if log {
        if n_min == 0 || points < 2 {
            return Err(CliError::Input("a log grid needs n_min >= 1 and at least 2 points".into()));
        }
        log_grid(n_min, n_max, points)
    } else {
        if n_max - n_min >= MAX_LINEAR_ROWS {
            return Err(CliError::Input(format!(
                "linear grid of {} sizes is too long; use --log-grid",
                n_max - n_min + 1
            )));
        }
        (n_min..=n_max).collect()
    };
    let rows = ns
        .iter()
        .map(|&n| Ok(CurveRow { n, fidelity: scaling_fidelity(x, n)?, ln_fidelity: log_scaling_fidelity(x, n)? }))
        .collect::<Result<Vec<_>, thermoscale::Error>>()?;
    let params = CurveParams { x, eta, n_min, n_max, log_grid: log, points };
    let text = match g.format {
        Format::Json => json("scaling-curve", g, &params, &rows)?,
        Format::Csv => csv(&["n", "fidelity"], rows.iter().map(|r| [r.n.to_string(), num(r.fidelity)])),
    };
    emit(g, &text)?;
    Ok(Outcome::Clean)
}

#[derive(Serialize)]
struct FitParams {
    csv: PathBuf,
    frequency_ghz: Vec<f64>,
    weighted: bool,
    bootstrap: Option<usize>,
}

#[derive(Serialize)]
struct FitOutput {
    #[serde(flatten)]
    fit: FitResult,
    /// Mean of the supplied frequencies.
    frequency_ghz: Option<f64>,
    bootstrap_stderr: Option<f64>,
}

pub fn fit(g: &Globals, a: FitArgs, f: &FitSection) -> Result<Outcome, CliError> {
    let path = a.csv.or_else(|| f.csv.clone()).ok_or_else(|| CliError::Input("no input CSV given".into()))?;
    let frequencies =
        if a.frequency_ghz.is_empty() { f.frequency_ghz.clone().unwrap_or_default() } else { a.frequency_ghz };
    let params = FitParams {
        csv: path,
        frequency_ghz: frequencies,
        weighted: a.weighted || f.weighted.unwrap_or(false),
        bootstrap: a.bootstrap.or(f.bootstrap),
    };
    let data = fitkit::load_csv(&params.csv)?;
    let mut result = fitkit::fit_scaling(&data, params.weighted)?;
    let frequency = if params.frequency_ghz.is_empty() {
        None
    } else {
        let mean = fitkit::mean_frequency(&params.frequency_ghz)?;
        result = result.with_temperature(mean)?;
        Some(mean)
    };
    let bootstrap_stderr =
        params.bootstrap.map(|b| fitkit::bootstrap_stderr(&data, params.weighted, b, g.seed)).transpose()?;
    let text = match g.format {
        Format::Json => json("fit", g, &params, FitOutput { fit: result, frequency_ghz: frequency, bootstrap_stderr })?,
        Format::Csv => csv(
            &["n", "fidelity", "predicted", "residual"],
            data.rows()
                .iter()
                .zip(&result.residuals)
                .map(|(r, res)| [r.n.to_string(), num(r.fidelity), num(r.fidelity - res), num(*res)]),
        ),
    };
    emit(g, &text)?;
    Ok(Outcome::Clean)
}

#[derive(Serialize)]
struct ResetConfig {
    preset: Option<String>,
    #[serde(flatten)]
    params: ResetParams,
    shots: Option<u64>,
}

#[derive(Serialize)]
struct ResetOutput {
    #[serde(flatten)]
    trace: ResetTrace,
    /// Plateau excited probability of each qubit.
    fixed_point: Vec<f64>,
    monte_carlo: Option<Vec<McRound>>,
}

fn reset_params(a: &ResetArgs, f: &ResetSection) -> Result<(Option<String>, ResetParams), CliError> {
    let named = a.preset.clone().or_else(|| f.preset.clone());
    let mut p = ResetParams::preset(named.as_deref().unwrap_or(DEFAULT_PRESET))?;
    macro_rules! layer {
        ($($field:ident),*) => {
            $( if let Some(v) = a.$field.or(f.$field) { p.$field = v; } )*
        };
    }
    layer!(n_qubits, rounds, p_readout, p_gate, delay_us, t1_us, x_env, p_init);
    if let Some(q) = &f.per_qubit {
        p.per_qubit = Some(q.clone());
    }
    p.validate()?;
    Ok((named, p))
}

pub fn reset_sim(g: &Globals, a: ResetArgs, f: &ResetSection) -> Result<Outcome, CliError> {
    if a.list_presets {
        let names = ResetParams::preset_names();
        let text = match g.format {
            Format::Json => json("reset-sim", g, &serde_json::json!({ "list_presets": true }), &names)?,
            Format::Csv => csv(&["preset"], names.iter().map(|n| [n])),
        };
        emit(g, &text)?;
        return Ok(Outcome::Clean);
    }
    let (preset, params) = reset_params(&a, f)?;
    let shots = a.shots.or(f.shots);
    let trace = resetsim::run_protocol(&params)?;
    let mc = shots.map(|s| resetsim::monte_carlo(&params, s, g.seed)).transpose()?;
    let fixed_point = params.qubit_noise().iter().map(|q: &QubitNoise| q.fixed_point(params.delay_us)).collect();
    let text = match g.format {
        Format::Json => json(
            "reset-sim",
            g,
            &ResetConfig { preset, params, shots },
            ResetOutput { trace, fixed_point, monte_carlo: mc },
        )?,
        Format::Csv => match &mc {
            None => csv(&["round", "fidelity"], trace.per_round.iter().map(|r| [r.round.to_string(), num(r.fidelity)])),
            Some(mc) => csv(
                &["round", "fidelity", "stderr"],
                mc.iter().map(|r| [r.round.to_string(), num(r.fidelity), num(r.stderr)]),
            ),
        },
    };
    emit(g, &text)?;
    Ok(Outcome::Clean)
}

#[derive(Serialize)]
struct VerifyParams {
    suite: String,
    instances: Option<usize>,
    strict: bool,
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    /// Every assertable property held.
    passed: bool,
    /// Some recorded, non-assertable property was violated.
    findings: bool,
    suites: &'a [SuiteReport],
}

pub fn verify(g: &Globals, a: VerifyArgs, f: &VerifySection) -> Result<Outcome, CliError> {
    let params = VerifyParams {
        suite: a.suite.or_else(|| f.suite.clone()).unwrap_or_else(|| "all".into()),
        instances: a.instances.or(f.instances),
        strict: a.strict || f.strict.unwrap_or(false),
    };
    let reports = if params.suite == "all" {
        suites::run_all(params.instances, g.seed, g.cap())?
    } else {
        let suite: Suite = params.suite.parse()?;
        vec![suite.run(params.instances, g.seed, g.cap())?]
    };
    let passed = reports.iter().all(SuiteReport::passed);
    let findings = reports.iter().flat_map(|r| &r.properties).any(|p| !p.assertable && !p.ok());
    let text = match g.format {
        Format::Json => json("verify", g, &params, VerifyOutput { passed, findings, suites: &reports })?,
        Format::Csv => csv(
            &["suite", "property", "assertable", "instances", "passed", "failed", "max_violation", "tolerance"],
            reports.iter().flat_map(|r| {
                r.properties.iter().map(move |p| {
                    [
                        r.suite.to_string(),
                        p.name.clone(),
                        p.assertable.to_string(),
                        p.instances.to_string(),
                        p.passed.to_string(),
                        p.failed.to_string(),
                        num(p.max_violation),
                        num(p.tolerance),
                    ]
                })
            }),
        ),
    };
    emit(g, &text)?;
    Ok(if !passed || (params.strict && findings) { Outcome::Violations } else { Outcome::Clean })
}

#[derive(Serialize)]
struct AuditParams {
    family: String,
    instances: usize,
    x: f64,
    n: usize,
    strict: bool,
}

pub fn bound_audit(g: &Globals, a: AuditArgs, f: &AuditSection) -> Result<Outcome, CliError> {
    let params = AuditParams {
        family: a
            .family
            .or_else(|| f.family.clone())
            .ok_or_else(|| CliError::Input("no channel family given".into()))?,
        instances: a.instances.or(f.instances).unwrap_or(1000),
        x: a.x.or(f.x).unwrap_or(4.35),
        n: a.n.or(f.n).unwrap_or(2),
        strict: a.strict || f.strict.unwrap_or(false),
    };
    let family: ChannelFamily = params.family.parse()?;
    let audit: BoundAudit = suites::bound_audit(family, params.instances, g.seed, params.x, params.n, g.cap())?;
    let text = match g.format {
        Format::Json => json("bound-audit", g, &params, &audit)?,
        Format::Csv => csv(
            &[
                "family",
                "instances",
                "x",
                "n",
                "lower_ok_rate",
                "upper_ok_rate",
                "upper_fi_ok_rate",
                "assertable_failures",
                "upper_violations",
            ],
            [[
                params.family.clone(),
                audit.instances.to_string(),
                num(audit.x),
                audit.n.to_string(),
                num(audit.lower_ok_rate),
                num(audit.upper_ok_rate),
                num(audit.upper_fi_ok_rate),
                audit.assertable_failures.to_string(),
                audit.upper_violations.to_string(),
            ]],
        ),
    };
    emit(g, &text)?;
    let failed = audit.assertable_failures > 0 || (params.strict && audit.upper_violations > 0);
    Ok(if failed { Outcome::Violations } else { Outcome::Clean })
}

#[cfg(test)]
mod tests {
    use super::log_grid;

    #[test]
    fn log_grid_is_increasing_and_spans() {
        let g = log_grid(1, 100_000, 50);
        assert_eq!((g[0], *g.last().unwrap()), (1, 100_000));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(log_grid(3, 3, 5), vec![3]);
    }
}
