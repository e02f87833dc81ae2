use proptest::prelude::*;
use thermoscale::fidelity::{scaling_fidelity, uhlmann};
use thermoscale::fitkit::{fit_scaling, predict, synthetic_dataset, temperature_from_x};
use thermoscale::linalg::{hermitian_eig, psd_sqrt, Matrix};
use thermoscale::random::{ginibre, random_density_matrix};
use thermoscale::resetsim::{self, ResetParams};
use thermoscale::rng;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

fn gin(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
    ginibre(rows, cols, &mut rng::seeded(seed))
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn kron_is_associative(da in 1usize..4, db in 1usize..4, dc in 1usize..4, seed: u64) {
        let (a, b, c) = (gin(da, da, seed), gin(db, db, seed ^ 1), gin(dc, dc, seed ^ 2));
        let left = a.kron(&b).unwrap().kron(&c).unwrap();
        let right = a.kron(&b.kron(&c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() <= 1e-12);
    }

    #[test]
    fn trace_is_cyclic(r in 1usize..7, c in 1usize..7, seed: u64) {
        let a = gin(r, c, seed);
        let b = gin(c, r, seed.wrapping_add(7));
        let ab = a.matmul(&b).unwrap().trace().unwrap();
        let ba = b.matmul(&a).unwrap().trace().unwrap();
        prop_assert!((ab - ba).norm() <= 1e-11);
    }

    #[test]
    fn psd_sqrt_squares_back(n in 1usize..4, rank in 1usize..9, seed: u64) {
        let rho = random_density_matrix::<f64, _>(n, rank, &mut rng::seeded(seed)).unwrap();
        let root = psd_sqrt(rho.matrix()).unwrap();
        let back = root.matmul(&root).unwrap();
        prop_assert!(back.max_abs_diff(rho.matrix()).unwrap() <= 1e-10);
        let eig = hermitian_eig(&root).unwrap();
        prop_assert!(eig.values[0] >= -1e-8);
    }

    #[test]
    fn uhlmann_symmetric_and_bounded(n in 1usize..4, seed: u64) {
        let mut r = rng::seeded(seed);
        let dim = 1 << n;
        let rho = random_density_matrix::<f64, _>(n, dim, &mut r).unwrap();
        let sigma = random_density_matrix::<f64, _>(n, 1 + (seed as usize % dim), &mut r).unwrap();
        let f = uhlmann(&rho, &sigma).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - uhlmann(&sigma, &rho).unwrap()).abs() <= 1e-9);
        prop_assert!((uhlmann(&rho, &rho).unwrap() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn uhlmann_multiplicative(seed: u64) {
        let mut r = rng::seeded(seed);
        let s = |r: &mut rng::SimRng| random_density_matrix::<f64, _>(1, 2, r).unwrap();
        let (a, b, c, d) = (s(&mut r), s(&mut r), s(&mut r), s(&mut r));
        let joint = uhlmann(&a.tensor(&c).unwrap(), &b.tensor(&d).unwrap()).unwrap();
        let split = uhlmann(&a, &b).unwrap() * uhlmann(&c, &d).unwrap();
        prop_assert!((joint - split).abs() <= 1e-8);
    }

    #[test]
    fn scaling_law_monotone(x in 0.01f64..30.0, n in 0u64..1_000_000) {
        let f = scaling_fidelity(x, n).unwrap();
        prop_assert!(scaling_fidelity(x, n + 1).unwrap() <= f);
        prop_assert!(scaling_fidelity(x * 1.1, n).unwrap() >= f);
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn fit_recovers_noiseless_model(x in 0.1f64..10.0, lo in 1u64..30, span in 1u64..40, step in 1u64..4) {
        let ns: Vec<u64> = (lo..=lo + span).step_by(step as usize).collect();
        prop_assume!(ns.len() >= 2);
        let d = synthetic_dataset(x, &ns, 0.0, 0).unwrap();
        let f = fit_scaling(&d, false).unwrap();
        prop_assert!((f.x_hat - x).abs() <= 1e-6, "x* {} fitted {}", x, f.x_hat);
        let back = predict(f.x_hat, &ns).unwrap();
        for (row, p) in d.rows().iter().zip(back) {
            prop_assert!((row.fidelity - p).abs() <= 1e-9);
        }
    }

    #[test]
    fn temperature_decreasing_in_x_linear_in_frequency(x in 0.01f64..20.0, f in 0.1f64..20.0) {
        let t = temperature_from_x(x, f).unwrap();
        prop_assert!(temperature_from_x(x * 1.01, f).unwrap() < t);
        prop_assert!((temperature_from_x(x, 2.0 * f).unwrap() - 2.0 * t).abs() <= 1e-12 * t);
    }

    #[test]
    fn reset_fidelity_rises_to_plateau(ro in 0.0f64..0.3, g in 0.0f64..0.5, delay in 0.0f64..1000.0, n in 1usize..8) {
        let p = ResetParams {
            n_qubits: n, rounds: 30, p_readout: ro, p_gate: g, delay_us: delay,
            t1_us: 100.0, x_env: 3.0, p_init: 0.5, per_qubit: None,
        };
        prop_assume!(resetsim::fixed_point(&p) < 0.5);
        let f = resetsim::run_protocol(&p).unwrap().fidelities();
        prop_assert!(f.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    }

    #[test]
    fn delay_helps_when_equilibrium_is_colder(ro in 0.01f64..0.3, g in 0.0f64..0.5, d in 1.0f64..500.0) {
        let p = ResetParams {
            n_qubits: 1, rounds: 1, p_readout: ro, p_gate: g, delay_us: d,
            t1_us: 100.0, x_env: 8.0, p_init: 0.5, per_qubit: None,
        };
        let q = p.shared_noise();
        let after_gate = q.after_gate(0.5);
        prop_assume!(q.p_eq() < after_gate);
        prop_assert!(q.relax(after_gate, 2.0 * d) < q.relax(after_gate, d));
    }
}
