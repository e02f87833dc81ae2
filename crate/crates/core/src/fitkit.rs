//! Least-squares estimation of `x = βΔE` from fidelity-versus-size data, and the
//! conversion of `x` to an effective temperature.
//!
//! Model: `F(n; x) = (1 + e^{-x})^{-n}`, one free parameter.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fidelity::{error_rate_from_x, scaling_fidelity};
use crate::rng;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Search interval for `x`.
pub const X_BRACKET: (f64, f64) = (1e-6, 50.0);
const GRID_POINTS: usize = 400;
const GRAD_TOL: f64 = 1e-10;
const WIDTH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: u64,
    pub fidelity: f64,
    pub stderr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingDataset {
    rows: Vec<ScalingRow>,
}

impl ScalingDataset {
    /// Measured data: `n > 0`, fidelity in `(0, 1]`, stderr positive when present.
    pub fn new(rows: Vec<ScalingRow>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            check_row(r).map_err(|msg| Error::param(format!("row {}: {msg}", i + 1)))?;
        }
        Self::from_noisy(rows)
    }

    /// Synthetic or resampled data, where additive noise may push a fidelity
    /// outside `(0, 1]`. Only requires `n > 0` and finite values.
    pub fn from_noisy(rows: Vec<ScalingRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::param("dataset has no rows"));
        }
        for r in &rows {
            if r.n == 0 || !r.fidelity.is_finite() || r.stderr.is_some_and(|s| !s.is_finite()) {
                return Err(Error::param(format!("invalid row {r:?}")));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[ScalingRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has_stderr(&self) -> bool {
        self.rows.iter().all(|r| r.stderr.is_some())
    }

    /// CSV text with header `n,fidelity` or `n,fidelity,stderr`.
    pub fn to_csv(&self) -> String {
        let with_err = self.has_stderr();
        let mut out = String::from(if with_err { "n,fidelity,stderr\n" } else { "n,fidelity\n" });
        for r in &self.rows {
            match (with_err, r.stderr) {
                (true, Some(s)) => writeln!(out, "{},{},{}", r.n, r.fidelity, s),
                _ => writeln!(out, "{},{}", r.n, r.fidelity),
            }
            .expect("writing to a String");
        }
        out
    }
}

fn check_row(r: &ScalingRow) -> std::result::Result<(), String> {
    if r.n == 0 {
        return Err("n must be positive".into());
    }
    if !(r.fidelity > 0.0 && r.fidelity <= 1.0) {
        return Err(format!("fidelity {} outside (0, 1]", r.fidelity));
    }
    if let Some(s) = r.stderr {
        if !(s > 0.0 && s.is_finite()) {
            return Err(format!("stderr {s} must be positive"));
        }
    }
    Ok(())
}

/// Parses CSV text. Blank lines and lines starting with `#` are skipped; the first
/// remaining line must be the header.
pub fn parse_csv(text: &str) -> Result<ScalingDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut header: Option<usize> = None;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record
            .map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line() as usize), msg: e.to_string() })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let fields: Vec<&str> = record.iter().collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        let Some(cols) = header else {
            header = match fields[..] {
                ["n", "fidelity"] => Some(2),
                ["n", "fidelity", "stderr"] => Some(3),
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected header `n,fidelity[,stderr]`, found `{}`", fields.join(",")),
                    })
                }
            };
            continue;
        };
        if fields[0] == "n" {
            return Err(Error::Parse { line, msg: "repeated header".into() });
        }
        if fields.len() != cols {
            return Err(Error::Parse { line, msg: format!("expected {cols} fields, found {}", fields.len()) });
        }
        let n = fields[0]
            .parse::<u64>()
            .map_err(|_| Error::Parse { line, msg: format!("n = `{}` is not a positive integer", fields[0]) })?;
        let num = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("{what} = `{s}` is not a number") })
        };
        let row = ScalingRow {
            n,
            fidelity: num(fields[1], "fidelity")?,
            stderr: if cols == 3 { Some(num(fields[2], "stderr")?) } else { None },
        };
        check_row(&row).map_err(|msg| Error::Parse { line, msg })?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, msg: "no rows".into() });
    }
    ScalingDataset::new(rows)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<ScalingDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_csv(&text)
}

/// Noiseless model values plus Gaussian noise of width `sigma`; `sigma` is also
/// recorded as each row's stderr when positive.
pub fn synthetic_dataset(x: f64, ns: &[u64], sigma: f64, seed: u64) -> Result<ScalingDataset> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("noise width must be >= 0, got {sigma}")));
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::param(e.to_string()))?;
    let mut r = rng::seeded(seed);
    let rows = ns
        .iter()
        .map(|&n| {
            Ok(ScalingRow {
                n,
                fidelity: scaling_fidelity(x, n)? + noise.sample(&mut r),
                stderr: (sigma > 0.0).then_some(sigma),
            })
        })
        .collect::<Result<_>>()?;
    ScalingDataset::from_noisy(rows)
}

/// Model values `F(n; x)` for every `n`.
pub fn predict(x: f64, ns: &[u64]) -> Result<Vec<f64>> {
    ns.iter().map(|&n| scaling_fidelity(x, n)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub x_hat: f64,
    pub x_stderr: f64,
    /// `1 - SS_res / SS_tot` on unweighted residuals, whatever the fit weights.
    pub r_squared: f64,
    /// `F_i - F(n_i; x_hat)`, in row order.
    pub residuals: Vec<f64>,
    /// `None` until a frequency is supplied; infinite (serialized as `null`) at `x = 0`.
    #[serde(rename = "temperature_mK")]
    pub temperature_mk: Option<f64>,
    pub ss_res: f64,
    pub ss_tot: f64,
    pub method: &'static str,
    pub weights: &'static str,
    pub n_rows: usize,
}

impl FitResult {
    pub fn with_temperature(mut self, frequency_ghz: f64) -> Result<Self> {
        self.temperature_mk = Some(temperature_from_x(self.x_hat, frequency_ghz)?);
        Ok(self)
    }
}

struct Objective<'a> {
    rows: &'a [ScalingRow],
    w: Vec<f64>,
}

impl Objective<'_> {
    fn value(&self, x: f64) -> f64 {
        self.rows
            .iter()
            .zip(&self.w)
            .map(|(r, w)| {
                let d = model(x, r.n) - r.fidelity;
                w * d * d
            })
            .sum()
    }

    /// `dS/dx = 2 Σ w (F - F_i) ∂F/∂x`, with `∂F/∂x = n F η`.
    fn gradient(&self, x: f64) -> f64 {
        let eta = eta(x);
        self.rows
            .iter()
            .zip(&self.w)
            .map(|(r, w)| {
                let f = model(x, r.n);
                2.0 * w * (f - r.fidelity) * r.n as f64 * f * eta
            })
            .sum()
    }

    fn jacobian_norm(&self, x: f64) -> f64 {
        let eta = eta(x);
        self.rows
            .iter()
            .zip(&self.w)
            .map(|(r, w)| {
                let j = r.n as f64 * model(x, r.n) * eta;
                w * j * j
            })
            .sum()
    }
}

fn model(x: f64, n: u64) -> f64 {
    (-(n as f64) * (-x).exp().ln_1p()).exp()
}

fn eta(x: f64) -> f64 {
    error_rate_from_x(x).unwrap_or(f64::NAN)
}

/// Linearized starting point `-ln(mean(F_i^{-1/n_i} - 1))`, clipped to the bracket.
fn initial_guess(rows: &[ScalingRow]) -> Option<f64> {
    let mean = rows.iter().map(|r| r.fidelity.powf(-1.0 / r.n as f64) - 1.0).sum::<f64>() / rows.len() as f64;
    let x0 = -mean.ln();
    x0.is_finite().then(|| x0.clamp(X_BRACKET.0, X_BRACKET.1))
}

/// Minimizes `S(x) = Σ w_i (F(n_i; x) - F_i)^2` over [`X_BRACKET`].
///
/// A log-spaced scan locates the basin of the global minimum; bisection on the sign
/// of the analytic gradient then narrows it until the bracket is narrower than
/// `1e-12` or the gradient, normalized by the Gauss–Newton curvature `2 Σ w J²`,
/// drops below `1e-10`. The normalization keeps the stopping rule meaningful at
/// large `x`, where every model derivative is tiny.
pub fn fit_scaling(d: &ScalingDataset, weighted: bool) -> Result<FitResult> {
    let rows = d.rows();
    let m = rows.len();
    if m < 2 {
        return Err(Error::Fit(format!("need at least 2 rows, got {m}")));
    }
    if rows.iter().map(|r| r.n).collect::<BTreeSet<_>>().len() < 2 {
        return Err(Error::Fit("need at least 2 distinct register sizes".into()));
    }
    let mean = rows.iter().map(|r| r.fidelity).sum::<f64>() / m as f64;
    let ss_tot: f64 = rows.iter().map(|r| (r.fidelity - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Fit("all fidelities are equal; R^2 is undefined".into()));
    }
    let use_weights = weighted && d.has_stderr();
    let w: Vec<f64> =
        if use_weights { rows.iter().map(|r| r.stderr.map_or(1.0, |s| 1.0 / (s * s))).collect() } else { vec![1.0; m] };
    let obj = Objective { rows, w };

    let x_hat = minimize(&obj, initial_guess(rows))?;

    let residuals: Vec<f64> = rows.iter().map(|r| r.fidelity - model(x_hat, r.n)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let weighted_ss = obj.value(x_hat);
    let curvature = obj.jacobian_norm(x_hat);
    let x_stderr = if curvature > 0.0 { ((weighted_ss / (m - 1) as f64) / curvature).sqrt() } else { f64::INFINITY };
    Ok(FitResult {
        x_hat,
        x_stderr,
        r_squared: 1.0 - ss_res / ss_tot,
        residuals,
        temperature_mk: None,
        ss_res,
        ss_tot,
        method: "least-squares: log-grid scan + gradient bisection",
        weights: if use_weights { "inverse-variance" } else { "uniform" },
        n_rows: m,
    })
}

fn minimize(obj: &Objective<'_>, x0: Option<f64>) -> Result<f64> {
    let (lo, hi) = X_BRACKET;
    let ratio = (hi / lo).ln();
    let mut grid: Vec<f64> =
        (0..GRID_POINTS).map(|i| lo * (ratio * i as f64 / (GRID_POINTS - 1) as f64).exp()).collect();
    grid[GRID_POINTS - 1] = hi;
    if let Some(x0) = x0 {
        grid.push(x0);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
    }
    let values: Vec<f64> = grid.iter().map(|&x| obj.value(x)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("objective is not finite on the search grid".into()));
    }
    let best = (0..grid.len()).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid.len() - 1)];

    let (ga, gb) = (obj.gradient(a), obj.gradient(b));
    if ga > 0.0 || gb < 0.0 {
        // Minimum pinned to an edge of the search interval.
        let edge = if ga > 0.0 { a } else { b };
        return Err(Error::Fit(format!("minimum lies on the edge of the search interval [{lo}, {hi}] at x = {edge}")));
    }
    loop {
        let mid = 0.5 * (a + b);
        let g = obj.gradient(mid);
        let curvature = 2.0 * obj.jacobian_norm(mid);
        if g == 0.0
            || (curvature > 0.0 && (g / curvature).abs() < GRAD_TOL)
            || b - a < WIDTH_TOL
            || mid <= a
            || mid >= b
        {
            return Ok(mid);
        }
        if g < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
}

/// Effective temperature in millikelvin, `T = h f / (k_B x)`.
///
/// `x = 0` is infinite temperature and returns `f64::INFINITY`.
pub fn temperature_from_x(x: f64, frequency_ghz: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::param(format!("x must be finite and >= 0, got {x}")));
    }
    if !(frequency_ghz > 0.0 && frequency_ghz.is_finite()) {
        return Err(Error::param(format!("frequency must be positive, got {frequency_ghz} GHz")));
    }
    if x == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(PLANCK * frequency_ghz * 1e9 / (BOLTZMANN * x) * 1e3)
}

/// Mean of per-qubit transition frequencies, used as the single `ΔE = h f`.
pub fn mean_frequency(frequencies_ghz: &[f64]) -> Result<f64> {
    if frequencies_ghz.is_empty() {
        return Err(Error::param("no frequencies given"));
    }
    if let Some(f) = frequencies_ghz.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return Err(Error::param(format!("frequency must be positive, got {f} GHz")));
    }
    Ok(frequencies_ghz.iter().sum::<f64>() / frequencies_ghz.len() as f64)
}

pub const MIN_RESAMPLES: usize = 100;

/// Residual-resampling bootstrap standard deviation of `x_hat`.
///
/// Resample `b` draws from `rng::stream(seed, b)`, so the result is independent of
/// thread scheduling.
pub fn bootstrap_stderr(d: &ScalingDataset, weighted: bool, resamples: usize, seed: u64) -> Result<f64> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::param(format!("need at least {MIN_RESAMPLES} resamples, got {resamples}")));
    }
    let base = fit_scaling(d, weighted)?;
    let fitted: Vec<f64> = d.rows().iter().map(|r| model(base.x_hat, r.n)).collect();
    let res = &base.residuals;
    let estimates: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            use rand::Rng;
            let mut r = rng::stream(seed, b);
            let rows = d
                .rows()
                .iter()
                .zip(&fitted)
                .map(|(row, f)| ScalingRow { fidelity: f + res[r.random_range(0..res.len())], ..*row })
                .collect();
            fit_scaling(&ScalingDataset::from_noisy(rows)?, weighted).map(|f| f.x_hat)
        })
        .collect::<Result<_>>()?;
    let k = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / k;
    Ok((estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt())
}
