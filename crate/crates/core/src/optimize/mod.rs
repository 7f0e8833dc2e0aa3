//! Minimisation of the charging figures of merit over charger phases and the
//! split of a fixed total energy between modes.
//!
//! Strengths are never free parameters: for each trial split and phase set
//! the strength in every mode is solved from its energy share, so the total
//! energy constraint holds exactly.

pub mod nelder_mead;
pub mod scaling;

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Battery;
use crate::closed_forms;
use crate::error::{check_domain, Error, Result};
use crate::gaussian::GaussianState;
use crate::merit::{evaluate, ChargerKind, ChargingConfig, MeritReport};
pub use nelder_mead::{Minimum, NelderMeadSettings};
pub use scaling::{scaling_fit, ScalingFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    DeltaSigma,
    WorkFluctuation,
}

impl Target {
    pub fn of(&self, report: &MeritReport) -> f64 {
        match self {
            Target::DeltaSigma => report.delta_sigma,
            Target::WorkFluctuation => report.work_fluctuation,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Target::DeltaSigma => "delta_sigma",
            Target::WorkFluctuation => "work_fluctuation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPolicy {
    /// Every mode receives `ΔE/N`.
    Equal,
    /// The split is optimised over the simplex.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhasePolicy {
    /// An independent phase per mode.
    PerMode,
    /// One phase shared by all modes.
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptProblem {
    pub battery: Battery,
    pub charger: ChargerKind,
    pub de_total: f64,
    pub target: Target,
    pub split: SplitPolicy,
    pub phases: PhasePolicy,
    /// Mode frequencies; all ones when absent.
    pub omegas: Option<Vec<f64>>,
}

impl OptProblem {
    pub fn new(battery: Battery, charger: ChargerKind, de_total: f64, target: Target) -> Self {
        OptProblem {
            battery,
            charger,
            de_total,
            target,
            split: SplitPolicy::Equal,
            phases: PhasePolicy::PerMode,
            omegas: None,
        }
    }

    pub fn with_split(mut self, split: SplitPolicy) -> Self {
        self.split = split;
        self
    }

    pub fn with_phases(mut self, phases: PhasePolicy) -> Self {
        self.phases = phases;
        self
    }

    pub fn num_modes(&self) -> usize {
        self.battery.num_modes()
    }

    fn phase_dims(&self) -> usize {
        if self.charger == ChargerKind::GlobalTwoModeSqueeze {
            1
        } else {
            match self.phases {
                PhasePolicy::PerMode => self.num_modes(),
                PhasePolicy::Shared => 1,
            }
        }
    }

    fn split_dims(&self) -> usize {
        if self.charger == ChargerKind::GlobalTwoModeSqueeze {
            0
        } else {
            match self.split {
                SplitPolicy::Equal => 0,
                SplitPolicy::Free => self.num_modes() - 1,
            }
        }
    }

    /// Number of free parameters: phases first, then split logits.
    pub fn dims(&self) -> usize {
        self.phase_dims() + self.split_dims()
    }

    /// Splits the parameter vector into per-mode phases and energy shares.
    pub fn decode(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.num_modes();
        let pd = self.phase_dims();
        let phases = if self.charger == ChargerKind::GlobalTwoModeSqueeze {
            vec![x[0]]
        } else if pd == 1 {
            vec![x[0]; n]
        } else {
            x[..n].to_vec()
        };
        let splits = if self.charger == ChargerKind::GlobalTwoModeSqueeze {
            vec![1.0]
        } else if self.split_dims() == 0 {
            vec![1.0 / n as f64; n]
        } else {
            softmax_with_anchor(&x[pd..])
        };
        (splits, phases)
    }

    /// Inverse of [`OptProblem::decode`] for interior splits.
    pub fn encode(&self, splits: &[f64], phases: &[f64]) -> Result<Vec<f64>> {
        let mut x: Vec<f64> = phases[..self.phase_dims()].to_vec();
        if self.split_dims() > 0 {
            if splits.iter().any(|&k| !(k > 0.0)) {
                return Err(Error::Domain {
                    name: "split",
                    value: splits.iter().cloned().fold(f64::INFINITY, f64::min),
                    domain: "interior of the simplex",
                });
            }
            x.extend(splits[1..].iter().map(|k| (k / splits[0]).ln()));
        }
        Ok(x)
    }

    fn objective(&self) -> Result<Objective> {
        check_domain("dE", self.de_total, self.de_total >= 0.0, "dE >= 0")?;
        let state = self.battery.state()?;
        let omegas = self
            .omegas
            .clone()
            .unwrap_or_else(|| vec![1.0; state.num_modes()]);
        if self.charger == ChargerKind::GlobalTwoModeSqueeze && state.num_modes() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: state.num_modes(),
            });
        }
        Ok(Objective {
            problem: self.clone(),
            state,
            omegas,
        })
    }

    /// Full report at an explicit split and phase set.
    pub fn report_at(&self, splits: &[f64], phases: &[f64]) -> Result<MeritReport> {
        self.objective()?.report(splits, phases)
    }

    /// Target value at an explicit split and phase set.
    pub fn value_at(&self, splits: &[f64], phases: &[f64]) -> Result<f64> {
        Ok(self.target.of(&self.report_at(splits, phases)?))
    }
}

fn softmax_with_anchor(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(0.0, f64::max);
    let mut w: Vec<f64> = std::iter::once(0.0)
        .chain(logits.iter().cloned())
        .map(|l| (l - m).exp())
        .collect();
    let s: f64 = w.iter().sum();
    for v in &mut w {
        *v /= s;
    }
    w
}

struct Objective {
    problem: OptProblem,
    state: GaussianState,
    omegas: Vec<f64>,
}

impl Objective {
    fn report(&self, splits: &[f64], phases: &[f64]) -> Result<MeritReport> {
        let p = &self.problem;
        let energies: Vec<f64> = splits.iter().map(|k| k * p.de_total).collect();
        let config =
            ChargingConfig::for_energies(&self.state, p.charger, &energies, phases, &self.omegas)?;
        evaluate(&self.state, &config, &self.omegas)
    }

    fn config(&self, splits: &[f64], phases: &[f64]) -> Result<ChargingConfig> {
        let energies: Vec<f64> = splits.iter().map(|k| k * self.problem.de_total).collect();
        ChargingConfig::for_energies(
            &self.state,
            self.problem.charger,
            &energies,
            phases,
            &self.omegas,
        )
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (splits, phases) = self.problem.decode(x);
        match self.report(&splits, &phases) {
            Ok(r) => self.problem.target.of(&r),
            Err(_) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptSettings {
    /// Equispaced multistart seeds per phase.
    pub starts_per_phase: usize,
    /// Cap on the number of multistart seeds; beyond it seeds are drawn by
    /// stratified (Latin-hypercube) sampling.
    pub max_starts: usize,
    /// Local searches launched from the best seeds.
    pub refine: usize,
    /// Rotation applied to the phase grid of seeds.
    pub grid_offset: f64,
    pub seed: u64,
    pub local: NelderMeadSettings,
}

impl Default for OptSettings {
    fn default() -> Self {
        OptSettings {
            starts_per_phase: 8,
            max_starts: 256,
            refine: 16,
            grid_offset: 0.0,
            seed: 0x5eed,
            local: NelderMeadSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub splits: Vec<f64>,
    pub phases: Vec<f64>,
    pub strengths: Vec<f64>,
    pub value: f64,
    /// Local searches performed.
    pub restarts: usize,
    pub converged: bool,
    /// Largest central-difference gradient component at the optimum.
    pub stationarity: f64,
    pub report: MeritReport,
    /// Best value among the raw multistart seeds.
    pub best_seed_value: f64,
}

/// Multistart minimisation of the problem's target.
pub fn minimize(problem: &OptProblem, settings: &OptSettings) -> Result<OptResult> {
    let obj = problem.objective()?;
    let seeds = seed_points(problem, settings);
    let mut scored: Vec<(f64, Vec<f64>)> =
        seeds.into_par_iter().map(|x| (obj.value(&x), x)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lex_cmp(&a.1, &b.1)));
    let best_seed_value = scored.first().map(|s| s.0).unwrap_or(f64::INFINITY);
    let chosen: Vec<Vec<f64>> = scored
        .iter()
        .take(settings.refine.max(1))
        .map(|s| s.1.clone())
        .collect();

    let mut local: Vec<Minimum> = chosen
        .par_iter()
        .map(|x0| nelder_mead::minimize(|x| obj.value(x), x0, &settings.local))
        .collect();
    for m in &mut local {
        canonicalise(problem, &mut m.x);
    }
    local.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then_with(|| lex_cmp(&a.x, &b.x))
    });
    let best = local.into_iter().next().ok_or(Error::NoModes)?;
    if !best.value.is_finite() {
        return Err(Error::Unreachable(problem.de_total));
    }

    let (splits, phases) = problem.decode(&best.x);
    let report = obj.report(&splits, &phases)?;
    let config = obj.config(&splits, &phases)?;
    let stationarity = gradient_residual(&obj, &best.x);
    Ok(OptResult {
        splits,
        phases: config.phases().to_vec(),
        strengths: config.strengths().to_vec(),
        value: best.value.min(problem.target.of(&report)),
        restarts: chosen.len(),
        converged: best.converged,
        stationarity,
        report,
        best_seed_value,
    })
}

/// Largest central-difference gradient component of the target at the
/// parameter vector `x` (phases, then split logits).
pub fn stationarity_check(problem: &OptProblem, x: &[f64]) -> Result<f64> {
    let obj = problem.objective()?;
    if x.len() != problem.dims() {
        return Err(Error::DimensionMismatch {
            expected: problem.dims(),
            found: x.len(),
        });
    }
    Ok(gradient_residual(&obj, x))
}

fn gradient_residual(obj: &Objective, x: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    let mut y = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-5 * x[i].abs().max(1.0);
        y[i] = x[i] + h;
        let fp = obj.value(&y);
        y[i] = x[i] - h;
        let fm = obj.value(&y);
        y[i] = x[i];
        worst = worst.max(((fp - fm) / (2.0 * h)).abs());
    }
    worst
}

fn canonicalise(problem: &OptProblem, x: &mut [f64]) {
    for p in x.iter_mut().take(problem.phase_dims()) {
        *p = p.rem_euclid(TAU);
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Multistart seeds: the full phase grid when it fits under the cap,
/// otherwise a Latin-hypercube sample; free splits start from the equal
/// split plus a block of random splits.
fn seed_points(problem: &OptProblem, settings: &OptSettings) -> Vec<Vec<f64>> {
    let pd = problem.phase_dims();
    let sd = problem.split_dims();
    let per = settings.starts_per_phase.max(1);
    let step = TAU / per as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let grid_size = (per as f64).powi(pd as i32);

    let mut phase_seeds: Vec<Vec<f64>> = Vec::new();
    if grid_size <= settings.max_starts as f64 {
        let total = per.pow(pd as u32);
        for mut idx in 0..total {
            let mut p = Vec::with_capacity(pd);
            for _ in 0..pd {
                p.push(settings.grid_offset + step * (idx % per) as f64);
                idx /= per;
            }
            phase_seeds.push(p);
        }
    } else {
        phase_seeds = latin_hypercube(&mut rng, settings.max_starts, pd, 0.0, TAU)
            .into_iter()
            .map(|p| p.into_iter().map(|v| v + settings.grid_offset).collect())
            .collect();
    }

    let mut seeds: Vec<Vec<f64>> = phase_seeds
        .iter()
        .map(|p| {
            let mut x = p.clone();
            x.extend(std::iter::repeat_n(0.0, sd));
            x
        })
        .collect();
    if sd > 0 {
        let extra = (settings.max_starts / 2).max(16);
        let phases = latin_hypercube(&mut rng, extra, pd, 0.0, TAU);
        let logits = latin_hypercube(&mut rng, extra, sd, -3.0, 3.0);
        for (p, l) in phases.into_iter().zip(logits) {
            let mut x: Vec<f64> = p.into_iter().map(|v| v + settings.grid_offset).collect();
            x.extend(l);
            seeds.push(x);
        }
        // Splits concentrated on one mode approximate the simplex corners.
        for j in 0..=sd {
            for p in phase_seeds.iter().take(per) {
                let mut x = p.clone();
                x.extend((1..=sd).map(|i| {
                    if i == j {
                        12.0
                    } else if j == 0 {
                        -12.0
                    } else {
                        0.0
                    }
                }));
                seeds.push(x);
            }
        }
    }
    seeds
}

fn latin_hypercube(
    rng: &mut ChaCha8Rng,
    count: usize,
    dims: usize,
    lo: f64,
    hi: f64,
) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(dims); count];
    for _ in 0..dims {
        let mut perm: Vec<usize> = (0..count).collect();
        for i in (1..count).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        for (row, &cell) in out.iter_mut().zip(&perm) {
            let u: f64 = rng.random();
            row.push(lo + (hi - lo) * (cell as f64 + u) / count as f64);
        }
    }
    out
}

/// Comparison of the free-split optimum against the equal split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAudit {
    pub equal: OptResult,
    pub free: OptResult,
    /// `equal.value − free.value`; positive when a non-uniform split wins.
    pub gain: f64,
    /// The free optimum sits at a visibly different split with the same value.
    pub degenerate: bool,
}

pub fn split_audit(problem: &OptProblem, settings: &OptSettings) -> Result<SplitAudit> {
    let equal = minimize(&problem.clone().with_split(SplitPolicy::Equal), settings)?;
    let free = minimize(&problem.clone().with_split(SplitPolicy::Free), settings)?;
    let n = problem.num_modes() as f64;
    let gain = equal.value - free.value;
    let far = free.splits.iter().any(|k| (k - 1.0 / n).abs() > 1e-3);
    let degenerate = far && gain.abs() <= 1e-8 * equal.value.abs().max(1.0);
    Ok(SplitAudit {
        equal,
        free,
        gain,
        degenerate,
    })
}

/// Strength that adds `de` quanta to a squeezed-vacuum mode of strength `r`
/// at phase `nu`.
pub fn strength_for_energy(kind: ChargerKind, r: f64, nu: f64, de: f64) -> Result<f64> {
    check_domain("dE", de, de >= 0.0, "dE >= 0")?;
    match kind {
        ChargerKind::LocalSqueeze => closed_forms::invert_energy_to_squeeze(r, nu, de),
        ChargerKind::LocalDisplace => Ok(de.sqrt()),
        ChargerKind::GlobalTwoModeSqueeze => {
            // Gain 2 sinh²δ cosh 2r on two squeezed vacua.
            Ok((de / (2.0 * (2.0 * r).cosh())).sqrt().asinh())
        }
    }
}
