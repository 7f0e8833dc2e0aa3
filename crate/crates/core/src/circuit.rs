//! Plain-data descriptions of gates and battery preparations.
//!
//! Both the phase-space engine and the Fock simulator consume these, each
//! with its own implementation of the gate action.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Result};
use crate::gaussian::{GaussianState, SymplecticOp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Gate {
    /// `exp[½(ζa†² − ζ*a²)]` with `ζ = δe^{iθ}`.
    Squeeze { delta: f64, theta: f64, mode: usize },
    /// `exp(αa† − α*a)` with `α = amp·e^{iφ}`.
    Displace { amp: f64, phi: f64, mode: usize },
    /// Beam splitter with power transmittivity `tau`.
    BeamSplitter {
        tau: f64,
        mode_a: usize,
        mode_b: usize,
    },
    /// `exp(ζa†b† − ζ*ab)` with `ζ = δe^{iθ}`.
    TwoModeSqueeze {
        delta: f64,
        theta: f64,
        mode_a: usize,
        mode_b: usize,
    },
}

impl Gate {
    /// Squeezer with a signed strength: negative `r` squeezes the other
    /// quadrature (angle shifted by π).
    pub fn signed_squeeze(r: f64, mode: usize) -> Gate {
        if r >= 0.0 {
            Gate::Squeeze {
                delta: r,
                theta: 0.0,
                mode,
            }
        } else {
            Gate::Squeeze {
                delta: -r,
                theta: PI,
                mode,
            }
        }
    }

    pub fn modes(&self) -> Vec<usize> {
        match *self {
            Gate::Squeeze { mode, .. } | Gate::Displace { mode, .. } => vec![mode],
            Gate::BeamSplitter { mode_a, mode_b, .. }
            | Gate::TwoModeSqueeze { mode_a, mode_b, .. } => vec![mode_a, mode_b],
        }
    }

    pub fn to_symplectic(&self, num_modes: usize) -> Result<SymplecticOp> {
        match *self {
            Gate::Squeeze { delta, theta, mode } => {
                SymplecticOp::squeezer(delta, theta, mode, num_modes)
            }
            Gate::Displace { amp, phi, mode } => SymplecticOp::displacer(amp, phi, mode, num_modes),
            Gate::BeamSplitter {
                tau,
                mode_a,
                mode_b,
            } => SymplecticOp::beam_splitter(tau, mode_a, mode_b, num_modes),
            Gate::TwoModeSqueeze {
                delta,
                theta,
                mode_a,
                mode_b,
            } => SymplecticOp::global_two_mode_squeezer(delta, theta)?
                .embed(&[mode_a, mode_b], num_modes),
        }
    }
}

/// Symplectic action of a gate sequence; the first gate acts first.
pub fn circuit_op(gates: &[Gate], num_modes: usize) -> Result<SymplecticOp> {
    let mut op = SymplecticOp::identity(num_modes)?;
    for g in gates {
        op = g.to_symplectic(num_modes)?.after(&op)?;
    }
    Ok(op)
}

/// The initial-state families used as batteries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Battery {
    /// `modes` independent squeezed vacua of strength `r`.
    Separable { r: f64, modes: usize },
    /// Oppositely squeezed vacua mixed on one beam splitter.
    TwoMode { r: f64, tau: f64 },
    /// Three squeezed vacua mixed on two beam splitters.
    ThreeMode { r: f64, tau1: f64, tau2: f64 },
}

impl Battery {
    pub fn num_modes(&self) -> usize {
        match *self {
            Battery::Separable { modes, .. } => modes,
            Battery::TwoMode { .. } => 2,
            Battery::ThreeMode { .. } => 3,
        }
    }

    pub fn r(&self) -> f64 {
        match *self {
            Battery::Separable { r, .. }
            | Battery::TwoMode { r, .. }
            | Battery::ThreeMode { r, .. } => r,
        }
    }

    /// Covariance-matrix parameterisation of the family.
    pub fn state(&self) -> Result<GaussianState> {
        match *self {
            Battery::Separable { r, modes } => GaussianState::n_mode_separable(r, modes),
            Battery::TwoMode { r, tau } => GaussianState::two_mode_family(r, tau),
            Battery::ThreeMode { r, tau1, tau2 } => GaussianState::three_mode_family(r, tau1, tau2),
        }
    }

    /// Gate sequence preparing the family from the vacuum.
    pub fn preparation(&self) -> Result<Vec<Gate>> {
        let mut gates = Vec::new();
        match *self {
            Battery::Separable { r, modes } => {
                check_domain("r", r, true, "finite")?;
                gates.extend((0..modes).map(|j| Gate::signed_squeeze(r, j)));
            }
            Battery::TwoMode { r, tau } => {
                check_domain("tau", tau, (0.0..=1.0).contains(&tau), "[0, 1]")?;
                gates.push(Gate::signed_squeeze(r, 0));
                gates.push(Gate::signed_squeeze(-r, 1));
                gates.push(Gate::BeamSplitter {
                    tau,
                    mode_a: 0,
                    mode_b: 1,
                });
            }
            Battery::ThreeMode { r, tau1, tau2 } => {
                check_domain("tau1", tau1, (0.0..=1.0).contains(&tau1), "[0, 1]")?;
                check_domain("tau2", tau2, (0.0..=1.0).contains(&tau2), "[0, 1]")?;
                gates.push(Gate::signed_squeeze(r, 0));
                gates.push(Gate::signed_squeeze(-r, 1));
                gates.push(Gate::signed_squeeze(r, 2));
                gates.push(Gate::BeamSplitter {
                    tau: tau1,
                    mode_a: 0,
                    mode_b: 1,
                });
                gates.push(Gate::BeamSplitter {
                    tau: tau2,
                    mode_a: 1,
                    mode_b: 2,
                });
            }
        }
        Ok(gates)
    }

    /// The family built by running [`Battery::preparation`] on the vacuum.
    pub fn prepared_state(&self) -> Result<GaussianState> {
        let n = self.num_modes();
        circuit_op(&self.preparation()?, n)?.apply(&GaussianState::vacuum(n)?)
    }
}
