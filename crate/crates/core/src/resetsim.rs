//! Repeated conditional reset: every round each qubit is measured, a NOT gate is
//! applied when the outcome reads "excited", and the register then idles for
//! `delay_us`, relaxing toward its environment population.
//!
//! Noise model, per qubit and round:
//! - readout flips the outcome with probability `p_readout`;
//! - the NOT gate flips perfectly with probability `1 - p_gate`, otherwise it fully
//!   depolarizes the qubit (excited with probability 1/2);
//! - during the delay, amplitude relaxation with time constant `t1_us` drives the
//!   excited population toward `p_eq = e^{-x_env} / (1 + e^{-x_env})`.
//!
//! The first measurement removes all coherence, so tracking each qubit's excited
//! probability is exact: one round is the affine map `p ↦ a·p + b`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Per-qubit noise knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitNoise {
    pub p_readout: f64,
    pub p_gate: f64,
    pub t1_us: f64,
    pub x_env: f64,
    pub p_init: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResetParams {
    pub n_qubits: usize,
    pub rounds: usize,
    pub p_readout: f64,
    pub p_gate: f64,
    pub delay_us: f64,
    pub t1_us: f64,
    pub x_env: f64,
    #[serde(default = "default_p_init")]
    pub p_init: f64,
    /// Overrides the shared knobs qubit by qubit; length must equal `n_qubits`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_qubit: Option<Vec<QubitNoise>>,
}

fn default_p_init() -> f64 {
    0.5
}

const PRESETS_JSON: &str = include_str!("../presets/reset_presets.json");

impl ResetParams {
    /// Names of the bundled parameter presets.
    pub fn preset_names() -> Vec<String> {
        let all: std::collections::BTreeMap<String, ResetParams> =
            serde_json::from_str(PRESETS_JSON).expect("bundled presets parse");
        all.into_keys().collect()
    }

    pub fn preset(name: &str) -> Result<Self> {
        let mut all: std::collections::BTreeMap<String, ResetParams> =
            serde_json::from_str(PRESETS_JSON).expect("bundled presets parse");
        let p = all.remove(name).ok_or_else(|| {
            Error::param(format!("unknown reset preset {name:?}; available: {:?}", Self::preset_names()))
        })?;
        p.validate()?;
        Ok(p)
    }

    pub fn shared_noise(&self) -> QubitNoise {
        QubitNoise {
            p_readout: self.p_readout,
            p_gate: self.p_gate,
            t1_us: self.t1_us,
            x_env: self.x_env,
            p_init: self.p_init,
        }
    }

    /// Noise for every qubit, after applying per-qubit overrides.
    pub fn qubit_noise(&self) -> Vec<QubitNoise> {
        match &self.per_qubit {
            Some(v) => v.clone(),
            None => vec![self.shared_noise(); self.n_qubits],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::param("reset protocol needs at least one qubit"));
        }
        if !(self.delay_us >= 0.0 && self.delay_us.is_finite()) {
            return Err(Error::param(format!("delay_us must be finite and >= 0, got {}", self.delay_us)));
        }
        if let Some(v) = &self.per_qubit {
            if v.len() != self.n_qubits {
                return Err(Error::param(format!("{} per-qubit entries for {} qubits", v.len(), self.n_qubits)));
            }
        }
        std::iter::once(self.shared_noise())
            .chain(self.per_qubit.iter().flatten().copied())
            .try_for_each(|q| q.validate())
    }
}

impl QubitNoise {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_readout", self.p_readout), ("p_gate", self.p_gate), ("p_init", self.p_init)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if !(self.t1_us > 0.0) {
            return Err(Error::param(format!("t1_us must be > 0, got {}", self.t1_us)));
        }
        if !(self.x_env >= 0.0 && self.x_env.is_finite()) {
            return Err(Error::param(format!("x_env must be finite and >= 0, got {}", self.x_env)));
        }
        Ok(())
    }

    /// Equilibrium excited population of the environment.
    pub fn p_eq(&self) -> f64 {
        let b = (-self.x_env).exp();
        b / (1.0 + b)
    }

    /// Fraction of the gap to equilibrium that survives the delay, `e^{-delay/T1}`.
    pub fn survival(&self, delay_us: f64) -> f64 {
        (-delay_us / self.t1_us).exp()
    }

    /// Excited population after measurement and conditional NOT.
    pub fn after_gate(&self, p: f64) -> f64 {
        let (ro, g) = (self.p_readout, self.p_gate);
        p * (1.0 - ro) * (g / 2.0) + p * ro + (1.0 - p) * ro * (1.0 - g / 2.0)
    }

    pub fn relax(&self, p: f64, delay_us: f64) -> f64 {
        p + (1.0 - self.survival(delay_us)) * (self.p_eq() - p)
    }

    /// One full round as the affine map `p ↦ slope·p + offset`.
    pub fn round_map(&self, delay_us: f64) -> (f64, f64) {
        let (ro, g) = (self.p_readout, self.p_gate);
        let a = (1.0 - ro) * (g / 2.0) + ro - ro * (1.0 - g / 2.0);
        let b = ro * (1.0 - g / 2.0);
        let r = self.survival(delay_us);
        (r * a, r * b + (1.0 - r) * self.p_eq())
    }

    /// Unique fixed point of the round map.
    pub fn fixed_point(&self, delay_us: f64) -> f64 {
        let (slope, offset) = self.round_map(delay_us);
        offset / (1.0 - slope)
    }
}

/// Excited probability after one round starting from `p`, using the shared knobs.
pub fn reset_round(p: f64, params: &ResetParams) -> f64 {
    let q = params.shared_noise();
    q.relax(q.after_gate(p), params.delay_us)
}

/// Plateau excited probability `p*` for the shared knobs.
pub fn fixed_point(params: &ResetParams) -> f64 {
    params.shared_noise().fixed_point(params.delay_us)
}

/// Register fidelity `Π (1 - p*_k)` at the plateau.
pub fn plateau_fidelity(params: &ResetParams) -> f64 {
    params.qubit_noise().iter().map(|q| 1.0 - q.fixed_point(params.delay_us)).product()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub p_excited: Vec<f64>,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResetTrace {
    /// Rounds `0..=K`; round 0 is the initial state.
    pub per_round: Vec<RoundRecord>,
    pub plateau: f64,
}

impl ResetTrace {
    pub fn fidelities(&self) -> Vec<f64> {
        self.per_round.iter().map(|r| r.fidelity).collect()
    }
}

/// Exact per-qubit recursion over `params.rounds` rounds.
pub fn run_protocol(params: &ResetParams) -> Result<ResetTrace> {
    params.validate()?;
    let noise = params.qubit_noise();
    let mut p: Vec<f64> = noise.iter().map(|q| q.p_init).collect();
    let record = |round: usize, p: &[f64]| RoundRecord {
        round,
        fidelity: p.iter().map(|pk| 1.0 - pk).product(),
        p_excited: p.to_vec(),
    };
    let mut per_round = Vec::with_capacity(params.rounds + 1);
    per_round.push(record(0, &p));
    for round in 1..=params.rounds {
        for (pk, q) in p.iter_mut().zip(&noise) {
            *pk = q.relax(q.after_gate(*pk), params.delay_us);
        }
        per_round.push(record(round, &p));
    }
    Ok(ResetTrace { per_round, plateau: plateau_fidelity(params) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McRound {
    pub round: usize,
    pub fidelity: f64,
    /// Binomial standard error `√(f(1-f)/shots)`.
    pub stderr: f64,
}

/// Shots are split into this many independently seeded shards; the result does not
/// depend on how shards are scheduled.
pub const MC_SHARDS: u64 = 64;

/// Stochastic trajectories of the same round model; estimates the register
/// fidelity (all qubits in ground) after each round.
pub fn monte_carlo(params: &ResetParams, shots: u64, seed: u64) -> Result<Vec<McRound>> {
    params.validate()?;
    if shots == 0 {
        return Err(Error::param("monte_carlo needs at least one shot"));
    }
    let noise = params.qubit_noise();
    let rounds = params.rounds;
    let shard_counts: Vec<Vec<u64>> = (0..MC_SHARDS)
        .into_par_iter()
        .map(|shard| {
            let shard_shots = shots / MC_SHARDS + u64::from(shard < shots % MC_SHARDS);
            let mut r = rng::stream(seed, shard);
            let mut ground_counts = vec![0u64; rounds + 1];
            let mut excited = vec![false; noise.len()];
            for _ in 0..shard_shots {
                simulate_shot(&noise, params.delay_us, &mut excited, &mut ground_counts, &mut r);
            }
            ground_counts
        })
        .collect();
    let total = shots as f64;
    Ok((0..=rounds)
        .map(|round| {
            let ground: u64 = shard_counts.iter().map(|c| c[round]).sum();
            let f = ground as f64 / total;
            McRound { round, fidelity: f, stderr: (f * (1.0 - f) / total).sqrt() }
        })
        .collect())
}

fn simulate_shot<R: rand::Rng>(
    noise: &[QubitNoise],
    delay_us: f64,
    excited: &mut [bool],
    ground_counts: &mut [u64],
    r: &mut R,
) {
    for (e, q) in excited.iter_mut().zip(noise) {
        *e = r.random::<f64>() < q.p_init;
    }
    let rounds = ground_counts.len();
    let mut tally = |excited: &[bool], round: usize| {
        if excited.iter().all(|&e| !e) {
            ground_counts[round] += 1;
        }
    };
    tally(excited, 0);
    for round in 1..rounds {
        for (e, q) in excited.iter_mut().zip(noise) {
            let reads_excited = *e ^ (r.random::<f64>() < q.p_readout);
            if reads_excited {
                if r.random::<f64>() < q.p_gate {
                    *e = r.random::<f64>() < 0.5;
                } else {
                    *e = !*e;
                }
            }
            if r.random::<f64>() >= q.survival(delay_us) {
                *e = r.random::<f64>() < q.p_eq();
            }
        }
        tally(excited, round);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(p_readout: f64, p_gate: f64, delay_us: f64) -> ResetParams {
        ResetParams {
            n_qubits: 1,
            rounds: 5,
            p_readout,
            p_gate,
            delay_us,
            t1_us: 100.0,
            x_env: 4.0,
            p_init: 0.5,
            per_qubit: None,
        }
    }

    #[test]
    fn perfect_reset_in_one_round() {
        assert_eq!(reset_round(0.5, &params(0.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn round_expansion() {
        let pr = params(0.02, 0.01, 0.0);
        for p in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert_abs_diff_eq!(reset_round(p, &pr), 0.005 * p + 0.0199, epsilon = 1e-15);
        }
        let (a, b) = pr.shared_noise().round_map(0.0);
        assert_abs_diff_eq!(a, 0.005, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.0199, epsilon = 1e-15);
    }

    #[test]
    fn relaxation_fixes_equilibrium() {
        let mut pr = params(0.0, 0.0, 1e6);
        pr.rounds = 0;
        let q = pr.shared_noise();
        assert_abs_diff_eq!(q.relax(q.p_eq(), 250.0), q.p_eq(), epsilon = 1e-16);
        // full thermalization lands on p_eq whatever the gate stage did
        assert_abs_diff_eq!(reset_round(0.7, &pr), q.p_eq(), epsilon = 1e-15);
    }

    #[test]
    fn fixed_point_values() {
        let pr = params(0.02, 0.01, 0.0);
        assert_abs_diff_eq!(fixed_point(&pr), 0.02, epsilon = 1e-15);
        assert_eq!(fixed_point(&params(0.0, 0.0, 0.0)), 0.0);
        let mut seven = pr.clone();
        seven.n_qubits = 7;
        assert_abs_diff_eq!(plateau_fidelity(&seven), 0.98f64.powi(7), epsilon = 1e-14);
    }

    #[test]
    fn trace_shapes() {
        let mut pr = params(0.02, 0.01, 0.0);
        pr.n_qubits = 3;
        pr.rounds = 0;
        let t = run_protocol(&pr).unwrap();
        assert_eq!(t.per_round.len(), 1);
        assert_abs_diff_eq!(t.per_round[0].fidelity, 0.125);

        pr.rounds = 60;
        let t = run_protocol(&pr).unwrap();
        assert_eq!(t.per_round.len(), 61);
        assert_abs_diff_eq!(t.per_round[60].fidelity, t.plateau, epsilon = 1e-12);
    }

    #[test]
    fn plateau_decreases_with_size() {
        let mut pr = params(0.02, 0.01, 0.0);
        let one = plateau_fidelity(&pr);
        pr.n_qubits = 7;
        assert!(plateau_fidelity(&pr) < one);
    }

    #[test]
    fn per_qubit_overrides() {
        let mut pr = params(0.02, 0.01, 0.0);
        pr.n_qubits = 2;
        let mut q2 = pr.shared_noise();
        q2.p_readout = 0.0;
        q2.p_gate = 0.0;
        pr.per_qubit = Some(vec![pr.shared_noise(), q2]);
        assert_abs_diff_eq!(plateau_fidelity(&pr), 0.98, epsilon = 1e-14);
        pr.per_qubit = Some(vec![q2]);
        assert!(run_protocol(&pr).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(run_protocol(&params(1.2, 0.0, 0.0)).is_err());
        assert!(run_protocol(&params(0.1, -0.1, 0.0)).is_err());
        assert!(run_protocol(&params(0.1, 0.1, -1.0)).is_err());
        let mut pr = params(0.1, 0.1, 0.0);
        pr.t1_us = 0.0;
        assert!(run_protocol(&pr).is_err());
        assert!(monte_carlo(&params(0.1, 0.1, 0.0), 0, 1).is_err());
    }

    #[test]
    fn monte_carlo_zero_noise_and_determinism() {
        let mut pr = params(0.0, 0.0, 0.0);
        pr.n_qubits = 3;
        pr.rounds = 3;
        let mc = monte_carlo(&pr, 1000, 5).unwrap();
        assert!(mc[1..].iter().all(|r| r.fidelity == 1.0 && r.stderr == 0.0));

        let pr = params(0.05, 0.02, 30.0);
        assert_eq!(monte_carlo(&pr, 5000, 9).unwrap(), monte_carlo(&pr, 5000, 9).unwrap());
        assert_ne!(monte_carlo(&pr, 5000, 9).unwrap(), monte_carlo(&pr, 5000, 10).unwrap());
    }

    #[test]
    fn presets_match_calibration() {
        let one = plateau_fidelity(&ResetParams::preset("delay-500us-n1").unwrap());
        let seven = plateau_fidelity(&ResetParams::preset("delay-500us-n7").unwrap());
        assert!((one - 0.99).abs() < 0.002, "{one}");
        assert!((seven - 0.93).abs() < 0.005, "{seven}");
        let nodelay = plateau_fidelity(&ResetParams::preset("no-delay-n1").unwrap());
        assert!(nodelay < one);
    }

    #[test]
    fn presets_load() {
        let names = ResetParams::preset_names();
        assert!(!names.is_empty());
        for n in names {
            ResetParams::preset(&n).unwrap();
        }
        assert!(ResetParams::preset("nope").is_err());
    }
}
