use std::f64::consts::PI;

use cvbattery::optimize::{
    minimize, split_audit, stationarity_check, OptProblem, OptSettings, PhasePolicy, Target,
};
use cvbattery::{Battery, ChargerKind};

fn best(battery: Battery, kind: ChargerKind, de: f64, target: Target) -> f64 {
    let res = minimize(
        &OptProblem::new(battery, kind, de, target),
        &OptSettings::default(),
    )
    .unwrap();
    assert!(res.converged);
    res.value
}

#[test]
fn two_mode_optima_are_transmittivity_independent() {
    for tau in [0.0, 0.3, 0.5, 0.8, 1.0] {
        let b = |r| Battery::TwoMode { r, tau };
        let v = best(b(1.0), ChargerKind::LocalSqueeze, 10.0, Target::DeltaSigma);
        assert!((v - 10.098955787909).abs() < 1e-8, "tau {tau}: {v}");
        let v = best(b(0.5), ChargerKind::LocalSqueeze, 20.0, Target::DeltaSigma);
        assert!((v - 20.344657617188).abs() < 1e-8, "tau {tau}: {v}");
        let v = best(b(0.5), ChargerKind::LocalDisplace, 20.0, Target::DeltaSigma);
        assert!((v - 1.7809257774064).abs() < 1e-8, "tau {tau}: {v}");
        let v = best(
            b(1.0),
            ChargerKind::LocalDisplace,
            10.0,
            Target::WorkFluctuation,
        );
        assert!((v - 1.16333693845168).abs() < 1e-8, "tau {tau}: {v}");
        let v = best(
            b(0.5),
            ChargerKind::LocalDisplace,
            20.0,
            Target::WorkFluctuation,
        );
        assert!((v - 2.71248757111048).abs() < 1e-8, "tau {tau}: {v}");
    }
}

#[test]
fn three_mode_optima() {
    let b = |r, tau1, tau2| Battery::ThreeMode { r, tau1, tau2 };
    let v = best(
        b(0.5, 0.2, 0.6),
        ChargerKind::LocalSqueeze,
        15.0,
        Target::DeltaSigma,
    );
    assert!((v - 12.644856218864605).abs() < 1e-8);
    let v = best(
        b(1.0, 0.9, 0.1),
        ChargerKind::LocalSqueeze,
        24.0,
        Target::DeltaSigma,
    );
    assert!((v - 19.730662210417).abs() < 1e-8);
    let v = best(
        b(0.5, 0.0, 0.5),
        ChargerKind::LocalDisplace,
        15.0,
        Target::DeltaSigma,
    );
    assert!((v - 1.3156444967627).abs() < 1e-8);
}

#[test]
fn separable_optima_and_phase_policies() {
    for (n, de, want) in [(3, 5.0, 4.161497253583), (4, 5.0, 3.613280967)] {
        let p = OptProblem::new(
            Battery::Separable { r: 1.0, modes: n },
            ChargerKind::LocalSqueeze,
            de,
            Target::DeltaSigma,
        );
        let per_mode = minimize(&p, &OptSettings::default()).unwrap();
        let shared = minimize(
            &p.clone().with_phases(PhasePolicy::Shared),
            &OptSettings::default(),
        )
        .unwrap();
        assert!((per_mode.value - want).abs() < 1e-8);
        assert!((shared.value - per_mode.value).abs() < 1e-9);
    }
    for n in [2, 3, 5] {
        let v = best(
            Battery::Separable { r: 1.0, modes: n },
            ChargerKind::LocalDisplace,
            5.0,
            Target::WorkFluctuation,
        );
        assert!((v - (5.0 * (-2.0f64).exp()).sqrt()).abs() < 1e-9);
        assert!((v - 0.82260343798398).abs() < 1e-9);
    }
}

#[test]
fn squeeze_work_fluctuation_optimum_at_zero_angles() {
    let p = OptProblem::new(
        Battery::Separable { r: 1.0, modes: 3 },
        ChargerKind::LocalSqueeze,
        5.0,
        Target::WorkFluctuation,
    );
    let res = minimize(&p, &OptSettings::default()).unwrap();
    let at_zero = p.value_at(&[1.0 / 3.0; 3], &[0.0; 3]).unwrap();
    assert!((at_zero - res.value).abs() < 1e-8);
}

#[test]
fn phase_independence_residuals() {
    let p = OptProblem::new(
        Battery::Separable { r: 1.0, modes: 3 },
        ChargerKind::LocalSqueeze,
        5.0,
        Target::DeltaSigma,
    );
    for x in [[0.0, 0.0, 0.0], [0.3, 1.7, 4.0], [PI, 2.0, 5.5]] {
        assert!(stationarity_check(&p, &x).unwrap() < 1e-8);
    }
    let p = OptProblem::new(
        Battery::TwoMode { r: 1.0, tau: 0.0 },
        ChargerKind::LocalSqueeze,
        10.0,
        Target::DeltaSigma,
    );
    for x in [[0.0, 0.0], [0.4, 2.9], [5.0, 1.0]] {
        assert!(stationarity_check(&p, &x).unwrap() < 1e-8);
    }
}

#[test]
fn equal_split_is_not_beaten() {
    let settings = OptSettings::default();
    for (b, kind, de) in [
        (
            Battery::TwoMode { r: 1.0, tau: 0.3 },
            ChargerKind::LocalSqueeze,
            10.0,
        ),
        (
            Battery::ThreeMode {
                r: 0.5,
                tau1: 0.4,
                tau2: 0.7,
            },
            ChargerKind::LocalSqueeze,
            15.0,
        ),
    ] {
        let audit =
            split_audit(&OptProblem::new(b, kind, de, Target::DeltaSigma), &settings).unwrap();
        assert!(audit.gain <= 1e-8, "{b:?}: {}", audit.gain);
    }
}

#[test]
fn seed_grid_rotation_does_not_move_the_optimum() {
    let p = OptProblem::new(
        Battery::TwoMode { r: 1.0, tau: 0.4 },
        ChargerKind::LocalDisplace,
        10.0,
        Target::WorkFluctuation,
    );
    let a = minimize(&p, &OptSettings::default()).unwrap();
    let rotated = OptSettings {
        grid_offset: 0.37,
        ..OptSettings::default()
    };
    let b = minimize(&p, &rotated).unwrap();
    assert!((a.value - b.value).abs() < 1e-8);
}

#[test]
fn minimisation_is_deterministic() {
    let p = OptProblem::new(
        Battery::ThreeMode {
            r: 1.0,
            tau1: 0.5,
            tau2: 0.5,
        },
        ChargerKind::LocalDisplace,
        24.0,
        Target::WorkFluctuation,
    );
    let a = minimize(&p, &OptSettings::default()).unwrap();
    let b = minimize(&p, &OptSettings::default()).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}
