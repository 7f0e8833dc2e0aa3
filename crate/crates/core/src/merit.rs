//! Energy gain, charging precision and work fluctuation of a charging step.
//!
//! For an initial state `ρ₀`, charging unitary `U` and battery Hamiltonian
//! `Ĥ`, with `Ĥ′ = U†ĤU`:
//!
//! * `ΔE = ⟨Ĥ′⟩ − ⟨Ĥ⟩`,
//! * `Δσ = √V(ρ₁) − √V(ρ₀)` with `V(ρ) = Var_ρ(Ĥ)`,
//! * `ΔW = √(V(ρ₁) + V(ρ₀) − 2 Cov(Ĥ′, Ĥ))`, the spread of `Ĥ′ − Ĥ` in `ρ₀`.

use std::f64::consts::{SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::circuit::{circuit_op, Gate};
use crate::error::{check_domain, Error, Result};
use crate::gaussian::{GaussianState, SymplecticOp};
use crate::observables::QuadraticObservable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargerKind {
    LocalSqueeze,
    LocalDisplace,
    GlobalTwoModeSqueeze,
}

impl ChargerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChargerKind::LocalSqueeze => "squeeze",
            ChargerKind::LocalDisplace => "displace",
            ChargerKind::GlobalTwoModeSqueeze => "global-squeeze",
        }
    }

    pub fn is_local(&self) -> bool {
        !matches!(self, ChargerKind::GlobalTwoModeSqueeze)
    }
}

impl std::str::FromStr for ChargerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "squeeze" | "local-squeeze" => Ok(ChargerKind::LocalSqueeze),
            "displace" | "local-displace" => Ok(ChargerKind::LocalDisplace),
            "global-squeeze" | "two-mode-squeeze" => Ok(ChargerKind::GlobalTwoModeSqueeze),
            other => Err(format!("unknown charger `{other}`")),
        }
    }
}

/// Strengths (`δⱼ` or `|αⱼ|`) and phases (`θⱼ` or `φⱼ`) of a charger.
/// The global squeezer carries a single `(δ, θ)` acting on modes 0 and 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingConfig {
    kind: ChargerKind,
    strengths: Vec<f64>,
    phases: Vec<f64>,
}

impl ChargingConfig {
    pub fn new(kind: ChargerKind, strengths: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if strengths.len() != phases.len() {
            return Err(Error::DimensionMismatch {
                expected: strengths.len(),
                found: phases.len(),
            });
        }
        if strengths.is_empty() {
            return Err(Error::NoModes);
        }
        if kind == ChargerKind::GlobalTwoModeSqueeze && strengths.len() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: strengths.len(),
            });
        }
        for &s in &strengths {
            check_domain("strength", s, s >= 0.0, "strength >= 0")?;
        }
        let mut phases = phases;
        for p in &mut phases {
            check_domain("phase", *p, true, "finite")?;
            *p = p.rem_euclid(TAU);
        }
        Ok(ChargingConfig {
            kind,
            strengths,
            phases,
        })
    }

    /// The no-op charger of the given kind on `num_modes` modes.
    pub fn zero(kind: ChargerKind, num_modes: usize) -> Result<Self> {
        let n = if kind.is_local() { num_modes } else { 1 };
        Self::new(kind, vec![0.0; n], vec![0.0; n])
    }

    pub fn kind(&self) -> ChargerKind {
        self.kind
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn gates(&self) -> Vec<Gate> {
        match self.kind {
            ChargerKind::LocalSqueeze => self
                .strengths
                .iter()
                .zip(&self.phases)
                .enumerate()
                .map(|(mode, (&delta, &theta))| Gate::Squeeze { delta, theta, mode })
                .collect(),
            ChargerKind::LocalDisplace => self
                .strengths
                .iter()
                .zip(&self.phases)
                .enumerate()
                .map(|(mode, (&amp, &phi))| Gate::Displace { amp, phi, mode })
                .collect(),
            ChargerKind::GlobalTwoModeSqueeze => vec![Gate::TwoModeSqueeze {
                delta: self.strengths[0],
                theta: self.phases[0],
                mode_a: 0,
                mode_b: 1,
            }],
        }
    }

    pub fn to_symplectic(&self, num_modes: usize) -> Result<SymplecticOp> {
        self.check_modes(num_modes)?;
        circuit_op(&self.gates(), num_modes)
    }

    fn check_modes(&self, num_modes: usize) -> Result<()> {
        let ok = match self.kind {
            ChargerKind::GlobalTwoModeSqueeze => num_modes == 2,
            _ => self.strengths.len() == num_modes,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: num_modes,
                found: if self.kind.is_local() {
                    self.strengths.len()
                } else {
                    2
                },
            })
        }
    }

    /// Builds the charger that deposits `energies[j]` in mode `j` (local
    /// kinds) or `energies[0]` in total (global squeezer), at the given
    /// phases. Energies are in units of the mode frequencies `omegas`.
    pub fn for_energies(
        state: &GaussianState,
        kind: ChargerKind,
        energies: &[f64],
        phases: &[f64],
        omegas: &[f64],
    ) -> Result<Self> {
        let n = state.num_modes();
        if omegas.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: omegas.len(),
            });
        }
        let strengths = match kind {
            ChargerKind::GlobalTwoModeSqueeze => {
                if n != 2 || energies.len() != 1 || phases.len() != 1 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        found: n,
                    });
                }
                let m = second_moments(state);
                let c = m.trace();
                let (ct, st) = (phases[0].cos(), phases[0].sin());
                let k = 2.0 * (ct * (m[(0, 2)] - m[(1, 3)]) + st * (m[(0, 3)] + m[(1, 2)]));
                let w = 0.5 * (omegas[0] + omegas[1]);
                vec![squeeze_strength_for_gain(c, k, energies[0] / w)?]
            }
            _ => {
                if energies.len() != n || phases.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: energies.len().min(phases.len()),
                    });
                }
                (0..n)
                    .map(|j| {
                        local_strength_for_energy(
                            state,
                            kind,
                            j,
                            phases[j],
                            energies[j] / omegas[j],
                        )
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Self::new(kind, strengths, phases.to_vec())
    }
}

/// `Ξ + ddᵀ`, the symmetrised second moments.
fn second_moments(state: &GaussianState) -> nalgebra::DMatrix<f64> {
    state.cov() + state.d() * state.d().transpose()
}

/// Solves `½(cosh 2δ − 1)·c + ½ sinh 2δ·k = gain` for `δ ≥ 0`.
///
/// `c` and `k` are the trace and the phase-weighted anisotropy of the
/// second moments the squeezer acts on; `|k| ≤ c` for any physical state.
pub fn squeeze_strength_for_gain(c: f64, k: f64, gain: f64) -> Result<f64> {
    check_domain("dE", gain, gain >= 0.0, "dE >= 0")?;
    if gain == 0.0 {
        return Ok(0.0);
    }
    let denom = c + k;
    if !(denom > 0.0) {
        return Err(Error::Unreachable(gain));
    }
    let y = (c + 2.0 * gain + (4.0 * gain * (gain + c) + k * k).sqrt()) / denom;
    Ok(0.5 * y.ln().max(0.0))
}

/// Strength of the local charger on `mode` that adds `quanta` photons to
/// that mode at phase `phase`.
pub fn local_strength_for_energy(
    state: &GaussianState,
    kind: ChargerKind,
    mode: usize,
    phase: f64,
    quanta: f64,
) -> Result<f64> {
    check_domain("dE", quanta, quanta >= 0.0, "dE >= 0")?;
    let local = state.mode(mode)?;
    let (ct, st) = (phase.cos(), phase.sin());
    match kind {
        ChargerKind::LocalSqueeze => {
            let m = second_moments(&local);
            let c = m[(0, 0)] + m[(1, 1)];
            let k = ct * (m[(0, 0)] - m[(1, 1)]) + 2.0 * st * m[(0, 1)];
            squeeze_strength_for_gain(c, k, quanta)
        }
        ChargerKind::LocalDisplace => {
            let d = local.d();
            let b = SQRT_2 * (d[0] * ct + d[1] * st);
            Ok(0.5 * (-b + (b * b + 4.0 * quanta).sqrt()))
        }
        ChargerKind::GlobalTwoModeSqueeze => Err(Error::Domain {
            name: "kind",
            value: f64::NAN,
            domain: "local charger",
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeritReport {
    pub de_per_mode: Vec<f64>,
    pub de_total: f64,
    /// `Var(Ĥ)` before charging.
    pub v0: f64,
    /// `Var(Ĥ)` after charging.
    pub v1: f64,
    /// `Cov(Ĥ′, Ĥ)` in the initial state.
    pub cov: f64,
    pub delta_sigma: f64,
    pub work_fluctuation: f64,
}

/// Full figures of merit of `config` acting on `state`.
///
/// Product states under local chargers are reduced mode by mode, which is
/// exact and linear in the number of modes; everything else goes through
/// the dense phase-space path.
pub fn evaluate(
    state: &GaussianState,
    config: &ChargingConfig,
    omegas: &[f64],
) -> Result<MeritReport> {
    if config.kind().is_local() && state.is_product() {
        evaluate_per_mode(state, config, omegas)
    } else {
        evaluate_dense(state, config, omegas)
    }
}

/// [`evaluate`] without the product-state reduction.
pub fn evaluate_dense(
    state: &GaussianState,
    config: &ChargingConfig,
    omegas: &[f64],
) -> Result<MeritReport> {
    let n = state.num_modes();
    check_omegas(omegas, n)?;
    let op = config.to_symplectic(n)?;
    let h = QuadraticObservable::hamiltonian(omegas)?;
    let hp = h.pullback(&op)?;
    let after = op.apply(state)?;
    let de_per_mode = (0..n)
        .map(|j| {
            let nj = QuadraticObservable::number_op(j, n)?;
            Ok(omegas[j] * (nj.mean(&after)? - nj.mean(state)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let v0 = h.variance(state)?;
    let v1 = h.variance(&after)?;
    let cov = hp.covariance(&h, state)?;
    let dw2 = hp.difference(&h)?.variance(state)?;
    Ok(assemble(de_per_mode, v0, v1, cov, dw2))
}

fn evaluate_per_mode(
    state: &GaussianState,
    config: &ChargingConfig,
    omegas: &[f64],
) -> Result<MeritReport> {
    let n = state.num_modes();
    check_omegas(omegas, n)?;
    config.check_modes(n)?;
    let (mut v0, mut v1, mut cov, mut dw2) = (0.0, 0.0, 0.0, 0.0);
    let mut de_per_mode = Vec::with_capacity(n);
    for j in 0..n {
        let local = state.mode(j)?;
        let (s, p) = (config.strengths[j], config.phases[j]);
        let op = match config.kind {
            ChargerKind::LocalSqueeze => SymplecticOp::squeezer(s, p, 0, 1)?,
            _ => SymplecticOp::displacer(s, p, 0, 1)?,
        };
        let h = QuadraticObservable::hamiltonian(&omegas[j..=j])?;
        let hp = h.pullback(&op)?;
        let after = op.apply(&local)?;
        de_per_mode.push(h.mean(&after)? - h.mean(&local)?);
        v0 += h.variance(&local)?;
        v1 += h.variance(&after)?;
        cov += hp.covariance(&h, &local)?;
        dw2 += hp.difference(&h)?.variance(&local)?;
    }
    Ok(assemble(de_per_mode, v0, v1, cov, dw2))
}

fn assemble(de_per_mode: Vec<f64>, v0: f64, v1: f64, cov: f64, dw2: f64) -> MeritReport {
    let (v0, v1) = (v0.max(0.0), v1.max(0.0));
    MeritReport {
        de_total: de_per_mode.iter().sum(),
        de_per_mode,
        v0,
        v1,
        cov,
        delta_sigma: v1.sqrt() - v0.sqrt(),
        work_fluctuation: dw2.max(0.0).sqrt(),
    }
}

fn check_omegas(omegas: &[f64], n: usize) -> Result<()> {
    if omegas.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: omegas.len(),
        });
    }
    Ok(())
}

/// Per-mode energy gains `ωⱼ(⟨N̂ⱼ⟩_{ρ₁} − ⟨N̂ⱼ⟩_{ρ₀})`.
pub fn delta_e_per_mode(
    state: &GaussianState,
    config: &ChargingConfig,
    omegas: &[f64],
) -> Result<Vec<f64>> {
    let n = state.num_modes();
    check_omegas(omegas, n)?;
    let after = config.to_symplectic(n)?.apply(state)?;
    (0..n)
        .map(|j| {
            let nj = QuadraticObservable::number_op(j, n)?;
            Ok(omegas[j] * (nj.mean(&after)? - nj.mean(state)?))
        })
        .collect()
}
