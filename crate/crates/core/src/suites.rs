//! Randomized verification suites.
//!
//! Each suite checks one family of properties over seeded random instances and
//! returns a serializable [`SuiteReport`]. Instance `i` draws from
//! `rng::stream(seed, i)`, and instances run in parallel, so reports are identical
//! for a given seed regardless of thread count.
//!
//! A property is *assertable* when it must hold; non-assertable properties are
//! findings that are tabulated but do not fail a suite.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{
    apply_unitary, depolarizing, haar_unitary_with, mixed_unitary, random_kraus_with, replacement_channel,
    DepolarizingChannel, QuantumChannel, UnitaryOp,
};
use crate::error::{Error, Result};
use crate::fidelity::{
    bound_check, composite_fidelity, depolarizing_inequality_check, initialization_fidelity, overlap_fidelity,
    scaling_fidelity, uhlmann, BoundReport,
};
use crate::random::random_density_matrix;
use crate::resetsim::{self, ResetParams};
use crate::rng::{self, SimRng};
use crate::states::{coherent_register, target_register, thermal_register, DenseCap};

pub const INVARIANCE_TOL: f64 = 1e-8;
pub const SCALING_TOL: f64 = 1e-10;
pub const BOUND_TOL: f64 = crate::fidelity::BOUND_TOL;
pub const DEPOLARIZING_TOL: f64 = 1e-10;
pub const COHERENCE_TOL: f64 = 1e-12;
/// Slack on `closed form ≤ F_I` for rounding in the two evaluations.
pub const INEQUALITY_TOL: f64 = 1e-12;
pub const FIXED_POINT_TOL: f64 = 1e-12;

pub const SCALING_XS: [f64; 5] = [0.0, 0.5, 2.48, 4.35, 10.0];
pub const BOUND_XS: [f64; 3] = [0.5, 2.0, 4.35];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Invariance,
    Scaling,
    Bounds,
    Depolarizing,
    Coherence,
    Resetsim,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Invariance, Suite::Scaling, Suite::Bounds, Suite::Depolarizing, Suite::Coherence, Suite::Resetsim];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Invariance => "invariance",
            Suite::Scaling => "scaling",
            Suite::Bounds => "bounds",
            Suite::Depolarizing => "depolarizing",
            Suite::Coherence => "coherence",
            Suite::Resetsim => "resetsim",
        }
    }

    /// Instance count used when none is requested.
    pub fn default_instances(self) -> usize {
        match self {
            Suite::Invariance => 500,
            Suite::Bounds => 1000,
            Suite::Coherence => 100,
            Suite::Resetsim => 100_000,
            Suite::Scaling | Suite::Depolarizing => 0,
        }
    }

    /// Runs the suite; `instances = None` uses [`Suite::default_instances`]. Grid
    /// suites ignore the count; for `resetsim` it is the Monte-Carlo shot count.
    /// Dense registers are limited to `cap` qubits.
    pub fn run(self, instances: Option<usize>, seed: u64, cap: DenseCap) -> Result<SuiteReport> {
        let k = instances.unwrap_or(self.default_instances());
        match self {
            Suite::Invariance => invariance(k, seed),
            Suite::Scaling => scaling(cap),
            Suite::Bounds => bounds(k, seed, cap),
            Suite::Depolarizing => depolarizing_suite(seed, cap),
            Suite::Coherence => coherence(k, seed, cap),
            Suite::Resetsim => resetsim_suite(k as u64, seed),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::param(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub assertable: bool,
    pub tolerance: f64,
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub max_violation: f64,
}

impl PropertyResult {
    fn new(name: impl Into<String>, assertable: bool, tolerance: f64) -> Self {
        Self { name: name.into(), assertable, tolerance, instances: 0, passed: 0, failed: 0, max_violation: 0.0 }
    }

    /// Records one instance whose error (or violation magnitude) is `err`.
    fn record(&mut self, err: f64) {
        self.record_with(err, err <= self.tolerance);
    }

    fn record_with(&mut self, magnitude: f64, ok: bool) {
        self.instances += 1;
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        if magnitude.is_nan() || magnitude > self.max_violation {
            self.max_violation = magnitude;
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub properties: Vec<PropertyResult>,
}

impl SuiteReport {
    /// True when every assertable property passed on every instance.
    pub fn passed(&self) -> bool {
        self.properties.iter().filter(|p| p.assertable).all(PropertyResult::ok)
    }

    pub fn property(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }
}

fn par_instances<T: Send>(count: usize, seed: u64, f: impl Fn(&mut SimRng) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..count as u64).into_par_iter().map(|i| f(&mut rng::stream(seed, i))).collect()
}

/// `|F(UρU†, UσU†) - F(ρ, σ)|` and `|F(ρ, σ) - F(σ, ρ)|` for random states of
/// random rank on 1 to 4 qubits.
pub fn invariance(instances: usize, seed: u64) -> Result<SuiteReport> {
    let rows = par_instances(instances, seed, |r| {
        let n = r.random_range(1..=4usize);
        let dim = 1 << n;
        let rho = random_density_matrix::<f64, _>(n, r.random_range(1..=dim), r)?;
        let sigma = random_density_matrix::<f64, _>(n, r.random_range(1..=dim), r)?;
        let u = haar_unitary_with::<f64, _>(dim, r);
        let f = uhlmann(&rho, &sigma)?;
        let fu = uhlmann(&apply_unitary(&u, &rho)?, &apply_unitary(&u, &sigma)?)?;
        let fs = uhlmann(&sigma, &rho)?;
        Ok(((fu - f).abs(), (fs - f).abs()))
    })?;
    let mut inv = PropertyResult::new("unitary-invariance", true, INVARIANCE_TOL);
    let mut sym = PropertyResult::new("symmetry", true, INVARIANCE_TOL);
    for (a, b) in rows {
        inv.record(a);
        sym.record(b);
    }
    Ok(SuiteReport { suite: Suite::Invariance, seed, properties: vec![inv, sym] })
}

/// Closed-form scaling law against the dense Uhlmann fidelity (`n = 1..6`) and the
/// dense overlap (`n = 1..7`), each limited by `cap`.
pub fn scaling(cap: DenseCap) -> Result<SuiteReport> {
    let mut dense = PropertyResult::new("closed-form-vs-uhlmann", true, SCALING_TOL);
    let mut overlap = PropertyResult::new("initialization-vs-overlap", true, 1e-12);
    for n in 1..=cap.0.min(7) {
        let target = target_register::<f64>(n, cap)?;
        for x in SCALING_XS {
            let thermal = thermal_register(x, n)?.to_dense(cap)?;
            let closed = scaling_fidelity(x, n as u64)?;
            if n <= 6 {
                dense.record((uhlmann(&thermal, &target)? - closed).abs());
            }
            overlap.record((overlap_fidelity(&thermal, &target)? - initialization_fidelity(x, n as u64)?).abs());
        }
    }
    Ok(SuiteReport { suite: Suite::Scaling, seed: 0, properties: vec![dense, overlap] })
}

/// Random unital channel on `n` qubits: half the time a mixture of up to four Haar
/// unitaries, otherwise global depolarizing noise with `λ ∈ [0, 1]`.
fn random_unital(n: usize, r: &mut SimRng) -> Result<Box<dyn QuantumChannel<f64>>> {
    let dim = 1 << n;
    if r.random::<bool>() {
        let k = r.random_range(1..=4usize);
        let w: Vec<f64> = (0..k).map(|_| -(1.0 - r.random::<f64>()).ln()).collect();
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|v| v / total).collect();
        let us: Vec<UnitaryOp<f64>> = (0..k).map(|_| haar_unitary_with(dim, r)).collect();
        Ok(Box::new(mixed_unitary(&probs, &us)?))
    } else {
        Ok(Box::new(depolarizing(r.random::<f64>(), n)?))
    }
}

/// `F ≥ F_P·F_I` on random Kraus channels, `F ≤ F_I` on random unital channels, and
/// (as a finding) how often random Kraus channels respect `F ≤ min(F_P, F_I)`.
pub fn bounds(instances: usize, seed: u64, cap: DenseCap) -> Result<SuiteReport> {
    let max_n = cap.0.min(3);
    let lower = par_instances(instances, seed, |r| {
        let n = r.random_range(1..=max_n);
        let c = random_kraus_with::<f64, _>(1 << n, r.random_range(1..=4usize), r)?;
        let u = haar_unitary_with(1 << n, r);
        let x = BOUND_XS[r.random_range(0..BOUND_XS.len())];
        bound_check(&c, &u, x, n, cap)
    })?;
    // distinct stream family for the unital instances
    let unital = par_instances(instances, seed ^ 0x5eed_0001, |r| {
        let n = r.random_range(1..=max_n);
        let c = random_unital(n, r)?;
        let u = haar_unitary_with(1 << n, r);
        let x = BOUND_XS[r.random_range(0..BOUND_XS.len())];
        bound_check(c.as_ref(), &u, x, n, cap)
    })?;
    let mut lo = PropertyResult::new("lower-bound-random-kraus", true, BOUND_TOL);
    let mut up_kraus = PropertyResult::new("upper-bound-random-kraus", false, BOUND_TOL);
    for b in &lower {
        lo.record(b.lower_violation());
        up_kraus.record(b.upper_violation());
    }
    let mut up_fi = PropertyResult::new("upper-fi-unital", true, BOUND_TOL);
    let mut lo_unital = PropertyResult::new("lower-bound-unital", true, BOUND_TOL);
    for b in &unital {
        up_fi.record(b.upper_fi_violation());
        lo_unital.record(b.lower_violation());
    }
    Ok(SuiteReport { suite: Suite::Bounds, seed, properties: vec![lo, up_fi, lo_unital, up_kraus] })
}

/// λ values checked for an `n`-qubit register: `[0, 1]` in steps of 0.1, then up to
/// the largest admissible `λ = 4^n / (4^n - 1)`.
pub fn lambda_grid(n: usize) -> Vec<f64> {
    let max = DepolarizingChannel::<f64>::max_lambda(n);
    let mut g: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    g.extend([0.25, 0.5, 0.75, 1.0].map(|t| 1.0 + t * (max - 1.0)));
    g.dedup();
    g
}

/// Closed form `(1-λ)F_I + λ/2^N` against a dense evaluation, the inequality
/// `≤ F_I`, and (for `n ≤ 3`) the explicit Pauli-Kraus form against the affine map.
pub fn depolarizing_suite(seed: u64, cap: DenseCap) -> Result<SuiteReport> {
    let mut cases = Vec::new();
    for n in 1..=cap.0.min(4) {
        for lambda in lambda_grid(n) {
            for x in SCALING_XS {
                cases.push((n, lambda, x));
            }
        }
    }
    let rows = cases
        .par_iter()
        .enumerate()
        .map(|(i, &(n, lambda, x))| {
            let r = &mut rng::stream(seed, i as u64);
            let u = haar_unitary_with::<f64, _>(1 << n, r);
            let check = depolarizing_inequality_check(x, n, lambda, Some(&u))?;
            let kraus_dev = if n <= 3 {
                let ch = DepolarizingChannel::new(lambda, n)?;
                let rho0 = thermal_register(x, n)?.to_dense(cap)?;
                let affine = composite_fidelity(&ch, &u, &rho0)?;
                let explicit = composite_fidelity(&ch.to_kraus()?, &u, &rho0)?;
                Some((affine - explicit).abs())
            } else {
                None
            };
            Ok((check, kraus_dev))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut dense = PropertyResult::new("closed-form-vs-dense", true, DEPOLARIZING_TOL);
    let mut ineq = PropertyResult::new("never-exceeds-f_i", true, INEQUALITY_TOL);
    let mut kraus = PropertyResult::new("pauli-kraus-vs-affine", true, DEPOLARIZING_TOL);
    for (c, k) in rows {
        dense.record(c.dense_deviation().unwrap_or(f64::NAN));
        let excess = (c.closed_form.max(c.dense.unwrap_or(f64::NEG_INFINITY)) - c.f_i).max(0.0);
        ineq.record_with(excess, c.holds);
        if let Some(k) = k {
            kraus.record(k);
        }
    }
    Ok(SuiteReport { suite: Suite::Depolarizing, seed, properties: vec![dense, ineq, kraus] })
}

/// Thermal registers with random per-qubit coherences keep the all-ground overlap
/// `(1 + e^{-x})^{-n}`.
pub fn coherence(instances: usize, seed: u64, cap: DenseCap) -> Result<SuiteReport> {
    let max_n = cap.0.min(6);
    let rows = par_instances(instances, seed, |r| {
        let n = r.random_range(1..=max_n);
        let x: f64 = r.random_range(0.0..10.0);
        let bound = (-x).exp().sqrt();
        let eps: Vec<Complex<f64>> = (0..n)
            .map(|_| Complex::from_polar(bound * r.random::<f64>(), r.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        let rho = coherent_register(x, &eps, cap)?;
        let f = overlap_fidelity(&rho, &target_register(n, cap)?)?;
        Ok((f - scaling_fidelity(x, n as u64)?).abs())
    })?;
    let mut p = PropertyResult::new("overlap-equals-scaling-law", true, COHERENCE_TOL);
    rows.into_iter().for_each(|d| p.record(d));
    Ok(SuiteReport { suite: Suite::Coherence, seed, properties: vec![p] })
}

/// Parameter sets exercised by the reset suite: the shipped presets plus a small
/// grid of noise levels.
pub fn reset_cases() -> Result<Vec<(String, ResetParams)>> {
    let mut cases: Vec<(String, ResetParams)> = ResetParams::preset_names()
        .into_iter()
        .map(|name| ResetParams::preset(&name).map(|p| (name, p)))
        .collect::<Result<_>>()?;
    for (i, (ro, g, delay)) in [(0.05, 0.02, 30.0), (0.1, 0.2, 0.0), (0.0, 0.3, 250.0)].into_iter().enumerate() {
        cases.push((
            format!("grid-{i}"),
            ResetParams {
                n_qubits: 3,
                rounds: 12,
                p_readout: ro,
                p_gate: g,
                delay_us: delay,
                t1_us: 80.0,
                x_env: 3.0,
                p_init: 0.5,
                per_qubit: None,
            },
        ));
    }
    Ok(cases)
}

/// Fixed point, Monte-Carlo agreement (3σ per round), plateau ordering and monotone
/// rise of the reset recursion.
pub fn resetsim_suite(shots: u64, seed: u64) -> Result<SuiteReport> {
    let cases = reset_cases()?;
    let mut fixed = PropertyResult::new("fixed-point", true, FIXED_POINT_TOL);
    let mut mc = PropertyResult::new("monte-carlo-3-sigma", true, 3.0);
    let mut monotone = PropertyResult::new("monotone-rise", true, 0.0);
    let mut ordering = PropertyResult::new("plateau-decreases-with-size", true, 0.0);
    for (i, (_, params)) in cases.iter().enumerate() {
        let p_star = resetsim::fixed_point(params);
        let mut long = params.clone();
        long.rounds = 400;
        long.per_qubit = None;
        let trace = resetsim::run_protocol(&long)?;
        let p_last = trace.per_round.last().map_or(f64::NAN, |r| r.p_excited[0]);
        fixed.record((p_last - p_star).abs());

        let exact = resetsim::run_protocol(params)?;
        let f = exact.fidelities();
        if params.p_init > p_star {
            let drop = f.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max);
            monotone.record(drop);
        }
        if shots > 0 {
            let est = resetsim::monte_carlo(params, shots, seed.wrapping_add(i as u64))?;
            for (e, want) in est.iter().zip(&f) {
                // a zero binomial stderr means every shot agreed; allow one count of slack
                let sd = e.stderr.max(1.0 / shots as f64);
                mc.record((e.fidelity - want).abs() / sd);
            }
        }
        if p_star > 0.0 {
            let plateau =
                |n: usize| resetsim::plateau_fidelity(&ResetParams { n_qubits: n, per_qubit: None, ..params.clone() });
            for n in 1..20 {
                let gap = plateau(n + 1) - plateau(n);
                ordering.record_with(gap.max(0.0), gap < 0.0);
            }
        }
    }
    Ok(SuiteReport { suite: Suite::Resetsim, seed, properties: vec![fixed, mc, monotone, ordering] })
}

/// Every suite with default instance counts (or the given count where it applies).
pub fn run_all(instances: Option<usize>, seed: u64, cap: DenseCap) -> Result<Vec<SuiteReport>> {
    Suite::ALL
        .into_iter()
        .map(|s| {
            let k = match s {
                Suite::Resetsim => None,
                _ => instances,
            };
            s.run(k, seed, cap)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelFamily {
    Unital,
    RandomKraus,
    Replacement,
}

impl ChannelFamily {
    pub const ALL: [ChannelFamily; 3] = [ChannelFamily::Unital, ChannelFamily::RandomKraus, ChannelFamily::Replacement];

    pub fn name(self) -> &'static str {
        match self {
            ChannelFamily::Unital => "unital",
            ChannelFamily::RandomKraus => "random-kraus",
            ChannelFamily::Replacement => "replacement",
        }
    }
}

impl FromStr for ChannelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChannelFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::param(format!("unknown channel family {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundAudit {
    pub family: ChannelFamily,
    pub instances: usize,
    pub seed: u64,
    pub x: f64,
    pub n: usize,
    pub lower_ok_rate: f64,
    pub upper_ok_rate: f64,
    pub upper_fi_ok_rate: f64,
    /// Instances breaking an assertable bound: the lower bound for every family,
    /// plus `F ≤ F_I` for unital channels.
    pub assertable_failures: usize,
    /// Instances breaking `F ≤ min(F_P, F_I)`; recorded, not asserted.
    pub upper_violations: usize,
    /// Instance with the largest upper-bound violation, or the largest lower-bound
    /// violation when the upper bound always held.
    pub worst: Option<BoundReport>,
}

/// Tabulates both bounds for `instances` random channels of one family on an
/// `n`-qubit thermal register at `x`.
pub fn bound_audit(
    family: ChannelFamily,
    instances: usize,
    seed: u64,
    x: f64,
    n: usize,
    cap: DenseCap,
) -> Result<BoundAudit> {
    if instances == 0 {
        return Err(Error::param("audit needs at least one instance"));
    }
    if n == 0 {
        return Err(Error::param("audit needs at least one qubit"));
    }
    cap.check(n)?;
    let dim = 1usize << n;
    let reports = par_instances(instances, seed, |r| {
        let u = haar_unitary_with::<f64, _>(dim, r);
        let c: Box<dyn QuantumChannel<f64>> = match family {
            ChannelFamily::Unital => random_unital(n, r)?,
            ChannelFamily::RandomKraus => Box::new(random_kraus_with::<f64, _>(dim, r.random_range(1..=4usize), r)?),
            ChannelFamily::Replacement => Box::new(replacement_channel::<f64>(&u.prepared_ket())?),
        };
        bound_check(c.as_ref(), &u, x, n, cap)
    })?;
    let k = reports.len() as f64;
    let rate = |f: fn(&BoundReport) -> bool| reports.iter().filter(|b| f(b)).count() as f64 / k;
    let unital = family == ChannelFamily::Unital;
    let assertable_failures = reports.iter().filter(|b| !b.lower_ok || (unital && !b.upper_fi_ok)).count();
    let upper_violations = reports.iter().filter(|b| !b.upper_ok).count();
    let worst = if upper_violations > 0 {
        reports.iter().max_by(|a, b| a.upper_violation().total_cmp(&b.upper_violation()))
    } else {
        reports.iter().max_by(|a, b| a.lower_violation().total_cmp(&b.lower_violation()))
    }
    .cloned();
    Ok(BoundAudit {
        family,
        instances,
        seed,
        x,
        n,
        lower_ok_rate: rate(|b| b.lower_ok),
        upper_ok_rate: rate(|b| b.upper_ok),
        upper_fi_ok_rate: rate(|b| b.upper_fi_ok),
        assertable_failures,
        upper_violations,
        worst,
    })
}
