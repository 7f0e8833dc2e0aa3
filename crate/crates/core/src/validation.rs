//! Randomised comparison of the phase-space engine against the Fock-space
//! simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{SQRT_2, TAU};

use nalgebra::DVector;

use crate::circuit::{Battery, Gate};
use crate::error::Result;
use crate::fock::{convergence_sweep, Scenario};
use crate::gaussian::GaussianState;
use crate::merit::{evaluate, ChargerKind, ChargingConfig};
use crate::observables::QuadraticObservable;

/// A battery, an optional coherent offset per mode, a charger and the mode
/// frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationCase {
    pub id: usize,
    pub battery: Battery,
    /// `(amp, phase)` displacement applied after the preparation; empty for none.
    pub offset: Vec<(f64, f64)>,
    pub charger: ChargingConfig,
    pub omegas: Vec<f64>,
}

impl ValidationCase {
    pub fn num_modes(&self) -> usize {
        self.battery.num_modes()
    }

    pub fn initial_state(&self) -> Result<GaussianState> {
        let state = self.battery.state()?;
        if self.offset.is_empty() {
            return Ok(state);
        }
        let d = state.d() + offset_vector(&self.offset);
        state.with_mean(d)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let mut preparation = self.battery.preparation()?;
        preparation.extend(
            self.offset
                .iter()
                .enumerate()
                .map(|(mode, &(amp, phi))| Gate::Displace { amp, phi, mode }),
        );
        Ok(Scenario {
            num_modes: self.num_modes(),
            preparation,
            charger: self.charger.gates(),
            omegas: self.omegas.clone(),
        })
    }
}

/// One compared quantity of one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub scenario: usize,
    pub num_modes: usize,
    pub charger: String,
    pub quantity: String,
    pub engine: f64,
    pub oracle: f64,
    /// Cutoff certified by the convergence sweep, if any.
    pub cutoff: Option<usize>,
    pub rel_error: f64,
    pub converged: bool,
}

/// Compares every tracked quantity of one case. `cap` bounds the cutoff
/// sweep; `None` uses the per-mode-count default.
pub fn compare(
    case: &ValidationCase,
    rel_tol: f64,
    leak_tol: f64,
    cap: Option<usize>,
) -> Result<Vec<ValidationRow>> {
    let n = case.num_modes();
    let state = case.initial_state()?;
    let report = evaluate(&state, &case.charger, &case.omegas)?;
    let h = QuadraticObservable::hamiltonian(&case.omegas)?;
    let e0 = h.mean(&state)?;
    let e1 = e0 + report.de_total;
    let after = case.charger.to_symplectic(n)?.apply(&state)?;
    let n_after = (0..n)
        .map(|j| QuadraticObservable::number_op(j, n)?.mean(&after))
        .collect::<Result<Vec<f64>>>()?;
    let anticomm = 2.0 * report.cov + 2.0 * e0 * e1;

    let sweep = convergence_sweep(&case.scenario()?, rel_tol, leak_tol, cap)?;
    let o = &sweep.moments;

    let cs = (report.v0 * report.v1).sqrt();
    let mut entries: Vec<(String, f64, f64, f64)> = (0..n)
        .map(|j| {
            (
                format!("n_after[{j}]"),
                n_after[j],
                o.n_after[j],
                n_after[j].abs(),
            )
        })
        .collect();
    entries.push(("var_before".into(), report.v0, o.v0, report.v0.abs()));
    entries.push(("var_after".into(), report.v1, o.v1, report.v1.abs()));
    entries.push(("cov".into(), report.cov, o.cov, cs));
    entries.push((
        "anticomm".into(),
        anticomm,
        o.anticomm,
        anticomm.abs().max(2.0 * cs + 2.0 * (e0 * e1).abs()),
    ));
    entries.push((
        "work_var".into(),
        report.work_fluctuation.powi(2),
        o.dw2,
        report.work_fluctuation.powi(2),
    ));
    Ok(entries
        .into_iter()
        .map(|(quantity, engine, oracle, scale)| ValidationRow {
            scenario: case.id,
            num_modes: n,
            charger: case.charger.kind().name().to_string(),
            quantity,
            engine,
            oracle,
            cutoff: sweep.certified_cutoff,
            rel_error: (engine - oracle).abs() / scale.max(oracle.abs()).max(1e-12),
            converged: sweep.converged,
        })
        .collect())
}

/// Runs [`compare`] over all cases in parallel, keeping case order.
pub fn run_suite(
    cases: &[ValidationCase],
    rel_tol: f64,
    leak_tol: f64,
    cap: Option<usize>,
) -> Result<Vec<ValidationRow>> {
    let per_case = cases
        .par_iter()
        .map(|c| compare(c, rel_tol, leak_tol, cap))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_case.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub scenarios: usize,
    pub rows: usize,
    pub max_rel_error: f64,
    pub unconverged: usize,
    pub failures: usize,
}

pub fn summarize(rows: &[ValidationRow], tol: f64) -> SuiteSummary {
    let mut ids: Vec<usize> = rows.iter().map(|r| r.scenario).collect();
    ids.dedup();
    let mut unconverged: Vec<usize> = rows
        .iter()
        .filter(|r| !r.converged)
        .map(|r| r.scenario)
        .collect();
    unconverged.dedup();
    SuiteSummary {
        scenarios: ids.len(),
        rows: rows.len(),
        max_rel_error: rows.iter().map(|r| r.rel_error).fold(0.0, f64::max),
        unconverged: unconverged.len(),
        failures: rows
            .iter()
            .filter(|r| !r.converged || !(r.rel_error <= tol))
            .count(),
    }
}

/// Sampling ranges for one group of random cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseGroup {
    pub count: usize,
    pub modes: usize,
    /// Product batteries keep modes independent; otherwise the entangled
    /// family of that size is used.
    pub product: bool,
    pub max_r: f64,
    pub max_delta: f64,
    pub max_amp: f64,
}

/// Groups of the default suite. Entangled batteries are sampled over a
/// narrower range because their Fock space cannot be split per mode.
pub const DEFAULT_GROUPS: [CaseGroup; 5] = [
    CaseGroup {
        count: 70,
        modes: 1,
        product: true,
        max_r: 1.0,
        max_delta: 1.0,
        max_amp: 3.0,
    },
    CaseGroup {
        count: 25,
        modes: 2,
        product: true,
        max_r: 1.0,
        max_delta: 1.0,
        max_amp: 3.0,
    },
    CaseGroup {
        count: 20,
        modes: 3,
        product: true,
        max_r: 1.0,
        max_delta: 1.0,
        max_amp: 3.0,
    },
    CaseGroup {
        count: 50,
        modes: 2,
        product: false,
        max_r: 0.5,
        max_delta: 0.5,
        max_amp: 3.0,
    },
    CaseGroup {
        count: 40,
        modes: 3,
        product: false,
        max_r: 0.25,
        max_delta: 0.25,
        max_amp: 1.5,
    },
];

/// Draws cases for the given groups; ids are consecutive from 0.
pub fn random_cases(seed: u64, groups: &[CaseGroup]) -> Result<Vec<ValidationCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    for g in groups {
        for _ in 0..g.count {
            let id = cases.len();
            cases.push(random_case(&mut rng, id, g)?);
        }
    }
    Ok(cases)
}

fn random_case(rng: &mut ChaCha8Rng, id: usize, g: &CaseGroup) -> Result<ValidationCase> {
    let n = g.modes;
    let r = rng.random_range(0.05..=g.max_r);
    let battery = match (g.product, n) {
        (true, _) => Battery::Separable { r, modes: n },
        (false, 2) => Battery::TwoMode {
            r,
            tau: rng.random_range(0.0..=1.0),
        },
        (false, _) => Battery::ThreeMode {
            r,
            tau1: rng.random_range(0.0..=1.0),
            tau2: rng.random_range(0.0..=1.0),
        },
    };
    let offset = if rng.random_bool(0.5) {
        (0..n)
            .map(|_| {
                (
                    rng.random_range(0.0..=0.5 * g.max_amp.min(2.0)),
                    rng.random_range(0.0..TAU),
                )
            })
            .collect()
    } else {
        Vec::new()
    };
    let kinds: &[ChargerKind] = if g.product || n != 2 {
        &[ChargerKind::LocalSqueeze, ChargerKind::LocalDisplace]
    } else {
        &[
            ChargerKind::LocalSqueeze,
            ChargerKind::LocalDisplace,
            ChargerKind::GlobalTwoModeSqueeze,
        ]
    };
    let kind = kinds[rng.random_range(0..kinds.len())];
    let count = if kind.is_local() { n } else { 1 };
    let max = if kind == ChargerKind::LocalDisplace {
        g.max_amp
    } else {
        g.max_delta
    };
    let strengths = (0..count).map(|_| rng.random_range(0.0..=max)).collect();
    let phases = (0..count).map(|_| rng.random_range(0.0..TAU)).collect();
    let omegas = (0..n).map(|_| rng.random_range(0.5..=2.0)).collect();
    Ok(ValidationCase {
        id,
        battery,
        offset,
        charger: ChargingConfig::new(kind, strengths, phases)?,
        omegas,
    })
}

/// Phase-space mean shift of per-mode `(amp, phase)` offsets.
pub fn offset_vector(offset: &[(f64, f64)]) -> DVector<f64> {
    DVector::from_iterator(
        2 * offset.len(),
        offset
            .iter()
            .flat_map(|&(a, p)| [SQRT_2 * a * p.cos(), SQRT_2 * a * p.sin()]),
    )
}

/// Worst disagreement between one closed-form expression and the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCheck {
    pub name: String,
    pub points: usize,
    /// Relative error, except for the inversion round trip which is absolute.
    pub worst_rel: f64,
}

#[derive(Default)]
struct Tally(Vec<ClosedFormCheck>);

impl Tally {
    /// Records `|cf − engine| / scale`, with `scale` at least `|cf|`.
    fn add(&mut self, name: &str, cf: f64, engine: f64, scale: f64) {
        self.record(name, (cf - engine).abs() / scale.max(cf.abs()).max(1e-300));
    }

    fn record(&mut self, name: &str, err: f64) {
        let rel = if err.is_nan() { f64::INFINITY } else { err };
        match self.0.iter_mut().find(|c| c.name == name) {
            Some(c) => {
                c.points += 1;
                c.worst_rel = c.worst_rel.max(rel);
            }
            None => self.0.push(ClosedFormCheck {
                name: name.to_string(),
                points: 1,
                worst_rel: rel,
            }),
        }
    }
}

fn engine_moments(
    state: &GaussianState,
    config: &ChargingConfig,
) -> Result<(Vec<f64>, f64, GaussianState)> {
    let n = state.num_modes();
    let op = config.to_symplectic(n)?;
    let h = QuadraticObservable::unit_hamiltonian(n)?;
    let anticomm = h.pullback(&op)?.anticommutator_mean(&h, state)?;
    let after = op.apply(state)?;
    let de = (0..n)
        .map(|j| {
            let nj = QuadraticObservable::number_op(j, n)?;
            Ok(nj.mean(&after)? - nj.mean(state)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((de, anticomm, after))
}

/// Magnitude of the two terms of a squeezing gain; the natural scale for
/// its relative error since the gain itself can cancel to zero.
fn gain_scale(r: f64, delta: f64) -> f64 {
    delta.sinh() * (delta.sinh() * (2.0 * r).cosh() + delta.cosh() * (2.0 * r).sinh())
}

/// Evaluates every closed form against the engine at `points` random
/// parameter draws per expression. Strengths are drawn from `[0.05, 1.5]`
/// and amplitudes from `[0.05, 3]`: at exactly vanishing charge both sides
/// are zero and a relative error only measures floating-point cancellation.
pub fn closed_form_sweep(seed: u64, points: usize) -> Result<Vec<ClosedFormCheck>> {
    use crate::closed_forms as cf;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    for _ in 0..points {
        let r = rng.random_range(0.05..1.5);
        let (tau1, tau2) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        let d: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.05..1.5));
        let th: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..TAU));
        let a: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.05..3.0));
        let ph: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..TAU));

        let s2 = GaussianState::two_mode_family(r, tau1)?;
        let z = cf::two_mode_squeeze(r, tau1, d[0], th[0], d[1], th[1]);
        let cfg =
            ChargingConfig::new(ChargerKind::LocalSqueeze, d[..2].to_vec(), th[..2].to_vec())?;
        let (de, ac, _) = engine_moments(&s2, &cfg)?;
        t.add("two_mode_squeeze.de1", z.de1, de[0], gain_scale(r, d[0]));
        t.add("two_mode_squeeze.de2", z.de2, de[1], gain_scale(r, d[1]));
        let ac_scale = 2.0
            * ((1.0 + 2.0 * (2.0 * r).cosh()) * ((2.0 * d[0]).cosh() + (2.0 * d[1]).cosh()) + 2.0)
            * r.sinh().powi(2)
            + ((2.0 * r).sinh() + (4.0 * r).sinh()) * ((2.0 * d[0]).sinh() + (2.0 * d[1]).sinh());
        t.add("two_mode_squeeze.anticomm", z.anticomm, ac, ac_scale);

        let z = cf::two_mode_displace(r, tau1, a[0], ph[0], a[1], ph[1]);
        let cfg = ChargingConfig::new(
            ChargerKind::LocalDisplace,
            a[..2].to_vec(),
            ph[..2].to_vec(),
        )?;
        let (de, ac, _) = engine_moments(&s2, &cfg)?;
        t.add(
            "two_mode_displace.de_total",
            z.de_total,
            de.iter().sum(),
            0.0,
        );
        t.add("two_mode_displace.anticomm", z.anticomm, ac, 0.0);

        let s3 = GaussianState::three_mode_family(r, tau1, tau2)?;
        let g = cf::three_mode_squeeze(r, tau1, tau2, d, th);
        let cfg = ChargingConfig::new(ChargerKind::LocalSqueeze, d.to_vec(), th.to_vec())?;
        let (de, _, _) = engine_moments(&s3, &cfg)?;
        for j in 0..3 {
            t.add(
                &format!("three_mode_squeeze.de{}", j + 1),
                g[j],
                de[j],
                gain_scale(r, d[j]),
            );
        }
        let z = cf::three_mode_displace(r, tau1, tau2, a, ph);
        let cfg = ChargingConfig::new(ChargerKind::LocalDisplace, a.to_vec(), ph.to_vec())?;
        let (de, ac, _) = engine_moments(&s3, &cfg)?;
        t.add(
            "three_mode_displace.de_total",
            z.de_total,
            de.iter().sum(),
            0.0,
        );
        t.add("three_mode_displace.anticomm", z.anticomm, ac, 0.0);

        let n = rng.random_range(1..=6usize);
        let sn = GaussianState::n_mode_separable(r, n)?;
        let h = QuadraticObservable::unit_hamiltonian(n)?;
        let e0 = h.mean(&sn)?;
        t.add(
            "nmode_initial_energy",
            cf::nmode_initial_energy(r, n),
            e0,
            0.0,
        );
        t.add(
            "nmode_initial_second_moment",
            cf::nmode_initial_second_moment(r, n),
            h.variance(&sn)? + e0 * e0,
            0.0,
        );
        let ds: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.5)).collect();
        let ts: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        let cfg = ChargingConfig::new(ChargerKind::LocalSqueeze, ds.clone(), ts.clone())?;
        let (de, ac, after) = engine_moments(&sn, &cfg)?;
        let ac_cf = cf::nmode_squeeze_anticomm(r, n, &ds, &ts);
        let ac_scale: f64 = ds
            .iter()
            .map(|&dj| {
                let nf = n as f64;
                let (s2r, c2r) = ((2.0 * r).sinh(), (2.0 * r).cosh());
                2.0 / nf * cf::nmode_initial_second_moment(r, n) * (2.0 * dj).cosh()
                    + 2.0 * e0 * dj.sinh().powi(2)
                    + (0.5 * s2r * (3.0 * c2r + 1.0) + e0 * s2r) * (2.0 * dj).sinh()
            })
            .sum();
        t.add("nmode_squeeze_anticomm", ac_cf, ac, ac_scale);
        let n0 = QuadraticObservable::number_op(0, n)?;
        t.add(
            "nmode_squeeze_de",
            cf::nmode_squeeze_de(r, ds[0], ts[0]),
            de[0],
            gain_scale(r, ds[0]),
        );
        let n2 = n0.variance(&after)? + n0.mean(&after)?.powi(2);
        t.add(
            "nmode_squeeze_n2",
            cf::nmode_squeeze_n2(r, ds[0], ts[0]),
            n2,
            0.0,
        );

        let amps: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..3.0)).collect();
        let phis: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        let cfg = ChargingConfig::new(ChargerKind::LocalDisplace, amps.clone(), phis.clone())?;
        let (_, ac, after) = engine_moments(&sn, &cfg)?;
        t.add(
            "nmode_disp_anticomm",
            cf::nmode_disp_anticomm(r, n, &amps),
            ac,
            0.0,
        );
        let m = cf::nmode_disp_moments(r, amps[0], phis[0]);
        t.add("nmode_disp_moments.n1", m.n1, n0.mean(&after)?, 0.0);
        let n2_scale = m.n2 + 2.0 * amps[0].powi(2) * (2.0 * r).sinh();
        t.add(
            "nmode_disp_moments.n2",
            m.n2,
            n0.variance(&after)? + n0.mean(&after)?.powi(2),
            n2_scale,
        );

        let s_pair = GaussianState::n_mode_separable(r, 2)?;
        let cfg = ChargingConfig::new(ChargerKind::GlobalTwoModeSqueeze, vec![d[0]], vec![th[0]])?;
        let (de, _, _) = engine_moments(&s_pair, &cfg)?;
        let g = cf::global_two_mode_squeeze_de(r, d[0]);
        t.add("global_two_mode_squeeze_de", g, de.iter().sum(), 0.0);
        t.add("global_two_mode_squeeze_split", 0.5 * g, de[0], 0.0);

        let target = rng.random_range(0.0..20.0);
        let delta = cf::invert_energy_to_squeeze(r, th[0], target)?;
        let smsv = GaussianState::n_mode_separable(r, 1)?;
        let cfg = ChargingConfig::new(ChargerKind::LocalSqueeze, vec![delta], vec![th[0]])?;
        let (de, _, _) = engine_moments(&smsv, &cfg)?;
        t.record(
            "invert_energy_to_squeeze.round_trip",
            (target - de[0]).abs(),
        );
    }
    Ok(t.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_size_and_determinism() {
        let a = random_cases(7, &DEFAULT_GROUPS).unwrap();
        let b = random_cases(7, &DEFAULT_GROUPS).unwrap();
        assert!(a.len() >= 200);
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, c)| c.id == i));
    }

    #[test]
    fn engine_and_oracle_agree_on_a_few_cases() {
        let groups = [
            CaseGroup {
                count: 3,
                modes: 1,
                product: true,
                max_r: 1.0,
                max_delta: 1.0,
                max_amp: 3.0,
            },
            CaseGroup {
                count: 2,
                modes: 2,
                product: false,
                max_r: 0.5,
                max_delta: 0.5,
                max_amp: 3.0,
            },
        ];
        let cases = random_cases(11, &groups).unwrap();
        let rows = run_suite(&cases, 1e-8, 1e-10, None).unwrap();
        let s = summarize(&rows, 1e-6);
        assert_eq!(s.scenarios, 5);
        assert_eq!(s.failures, 0, "{rows:#?}");
    }

    #[test]
    fn closed_forms_match_engine_on_a_small_sweep() {
        let checks = closed_form_sweep(3, 200).unwrap();
        assert!(checks.len() >= 20);
        for c in &checks {
            assert!(c.worst_rel <= 1e-9, "{c:?}");
        }
    }

    #[test]
    fn offset_shifts_the_mean() {
        let case = ValidationCase {
            id: 0,
            battery: Battery::Separable { r: 0.3, modes: 2 },
            offset: vec![(1.0, 0.5), (0.2, 2.0)],
            charger: ChargingConfig::zero(ChargerKind::LocalDisplace, 2).unwrap(),
            omegas: vec![1.0, 1.0],
        };
        let d = case.initial_state().unwrap().d().clone();
        assert!((d - offset_vector(&case.offset)).amax() < 1e-15);
    }
}
