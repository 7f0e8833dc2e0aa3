use std::f64::consts::TAU;

use cvbattery::circuit::circuit_op;
use cvbattery::merit::{evaluate, evaluate_dense, ChargerKind, ChargingConfig};
use cvbattery::{Battery, Gate, GaussianState, QuadraticObservable};
use proptest::prelude::*;

fn gate(modes: usize) -> impl Strategy<Value = Gate> {
    let m = 0..modes;
    prop_oneof![
        (0.0..1.2f64, 0.0..TAU, m.clone()).prop_map(|(delta, theta, mode)| Gate::Squeeze {
            delta,
            theta,
            mode
        }),
        (0.0..3.0f64, 0.0..TAU, m.clone()).prop_map(|(amp, phi, mode)| Gate::Displace {
            amp,
            phi,
            mode
        }),
        (0.0..=1.0f64, m.clone(), m.clone())
            .prop_filter("distinct modes", |(_, a, b)| a != b)
            .prop_map(|(tau, mode_a, mode_b)| Gate::BeamSplitter {
                tau,
                mode_a,
                mode_b
            }),
        (0.0..1.0f64, 0.0..TAU, m.clone(), m)
            .prop_filter("distinct modes", |(_, _, a, b)| a != b)
            .prop_map(|(delta, theta, mode_a, mode_b)| Gate::TwoModeSqueeze {
                delta,
                theta,
                mode_a,
                mode_b
            }),
    ]
}

fn circuit() -> impl Strategy<Value = (usize, Vec<Gate>)> {
    (2..=4usize).prop_flat_map(|n| (Just(n), prop::collection::vec(gate(n), 0..8)))
}

fn battery() -> impl Strategy<Value = Battery> {
    prop_oneof![
        (0.0..1.5f64, 1..=5usize).prop_map(|(r, modes)| Battery::Separable { r, modes }),
        (0.0..1.5f64, 0.0..=1.0f64).prop_map(|(r, tau)| Battery::TwoMode { r, tau }),
        (0.0..1.5f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(r, tau1, tau2)| Battery::ThreeMode {
            r,
            tau1,
            tau2
        }),
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn circuits_are_symplectic((n, gates) in circuit()) {
        let op = circuit_op(&gates, n).unwrap();
        prop_assert!(op.symplectic_residual() < 1e-9 * op.s().amax().powi(2).max(1.0));
    }

    #[test]
    fn pure_states_stay_pure((n, gates) in circuit()) {
        let state = circuit_op(&gates, n).unwrap().apply(&GaussianState::vacuum(n).unwrap()).unwrap();
        for nu in state.symplectic_eigenvalues().unwrap() {
            prop_assert!((nu - 0.5).abs() < 1e-7, "{nu}");
        }
        let want = 0.25f64.powi(n as i32);
        prop_assert!((state.determinant() - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn covariance_is_symmetric_and_positive((n, gates) in circuit()) {
        let state = circuit_op(&gates, n).unwrap().apply(&GaussianState::vacuum(n).unwrap()).unwrap();
        let cov = state.cov();
        prop_assert!((cov - cov.transpose()).amax() <= 1e-12 * cov.amax());
        let eig = cov.clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.min() > 0.0);
    }

    #[test]
    fn families_are_pure(b in battery()) {
        let state = b.state().unwrap();
        let want = 0.25f64.powi(b.num_modes() as i32);
        prop_assert!((state.determinant() - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn preparation_route_matches_parameterisation(b in battery()) {
        let direct = b.state().unwrap();
        let routed = b.prepared_state().unwrap();
        prop_assert!((direct.cov() - routed.cov()).amax() <= 1e-12 * direct.cov().amax().max(1.0));
    }

    #[test]
    fn pullback_agrees_with_evolved_state((n, gates) in circuit(), b in (0.0..1.0f64, 1..=2usize)) {
        let (r, _) = b;
        let state = GaussianState::n_mode_separable(r, n).unwrap();
        let op = circuit_op(&gates, n).unwrap();
        let omegas: Vec<f64> = (0..n).map(|j| 0.5 + 0.3 * j as f64).collect();
        let h = QuadraticObservable::hamiltonian(&omegas).unwrap();
        let hp = h.pullback(&op).unwrap();
        let after = op.apply(&state).unwrap();
        prop_assert!(rel(hp.mean(&state).unwrap(), h.mean(&after).unwrap()) < 1e-9);
        prop_assert!(rel(hp.variance(&state).unwrap(), h.variance(&after).unwrap()) < 1e-9);
    }

    #[test]
    fn covariance_is_symmetric_in_its_arguments((n, gates) in circuit(), r in 0.0..1.0f64) {
        let state = GaussianState::n_mode_separable(r, n).unwrap();
        let op = circuit_op(&gates, n).unwrap();
        let h = QuadraticObservable::unit_hamiltonian(n).unwrap();
        let hp = h.pullback(&op).unwrap();
        let a = hp.covariance(&h, &state).unwrap();
        let b = h.covariance(&hp, &state).unwrap();
        prop_assert!(rel(a, b) < 1e-12);
        let cs = (hp.variance(&state).unwrap() * h.variance(&state).unwrap()).sqrt();
        prop_assert!(a.abs() <= cs * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn per_mode_path_matches_dense(
        r in 0.0..1.5f64,
        n in 1..=5usize,
        displace in any::<bool>(),
        seed in prop::collection::vec((0.0..1.2f64, 0.0..TAU), 5),
    ) {
        let kind = if displace { ChargerKind::LocalDisplace } else { ChargerKind::LocalSqueeze };
        let cfg = ChargingConfig::new(
            kind,
            seed[..n].iter().map(|s| if displace { 2.0 * s.0 } else { s.0 }).collect(),
            seed[..n].iter().map(|s| s.1).collect(),
        )
        .unwrap();
        let state = GaussianState::n_mode_separable(r, n).unwrap();
        let omegas: Vec<f64> = (0..n).map(|j| 1.0 + 0.25 * j as f64).collect();
        let fast = evaluate(&state, &cfg, &omegas).unwrap();
        let dense = evaluate_dense(&state, &cfg, &omegas).unwrap();
        prop_assert!(rel(fast.v1, dense.v1) < 1e-10);
        prop_assert!(rel(fast.cov, dense.cov) < 1e-10);
        prop_assert!((fast.delta_sigma - dense.delta_sigma).abs() < 1e-9 * dense.v1.sqrt().max(1.0));
        prop_assert!((fast.work_fluctuation - dense.work_fluctuation).abs() < 1e-7 * dense.v1.sqrt().max(1.0));
    }

    #[test]
    fn energy_targets_are_met(
        b in battery(),
        share in prop::collection::vec((0.0..8.0f64, 0.0..TAU), 5),
        displace in any::<bool>(),
    ) {
        let state = b.state().unwrap();
        let n = b.num_modes();
        let kind = if displace { ChargerKind::LocalDisplace } else { ChargerKind::LocalSqueeze };
        let energies: Vec<f64> = share[..n].iter().map(|s| s.0).collect();
        let phases: Vec<f64> = share[..n].iter().map(|s| s.1).collect();
        let omegas = vec![1.0; n];
        let cfg = ChargingConfig::for_energies(&state, kind, &energies, &phases, &omegas).unwrap();
        let de = cvbattery::merit::delta_e_per_mode(&state, &cfg, &omegas).unwrap();
        for (got, want) in de.iter().zip(&energies) {
            prop_assert!((got - want).abs() < 1e-9 * want.max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn battery_round_trips_through_json(b in battery()) {
        let text = serde_json::to_string(&b).unwrap();
        let back: Battery = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(b, back);
    }
}
