//! Analytical expressions for energies and energy moments of the battery
//! families under local squeezing and displacement.
//!
//! These are transcribed formulas, kept free of any phase-space machinery so
//! that they serve as an independent check on [`crate::merit`].
//! `r` is the initial squeezing, `δ`/`θ` the charging squeeze strength/angle
//! and `|α|`/`φ` the displacement amplitude/phase.

use crate::error::{check_domain, Result};

/// Per-mode energy gains and `⟨{Ĥ′, Ĥ}⟩` for two squeezed modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeSqueeze {
    pub de1: f64,
    pub de2: f64,
    pub anticomm: f64,
}

/// Total energy gain and `⟨{Ĥ′, Ĥ}⟩` under displacement charging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplaceTotals {
    pub de_total: f64,
    pub anticomm: f64,
}

/// First and second photon-number moments of one displaced mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumberMoments {
    pub n1: f64,
    pub n2: f64,
}

fn squeeze_gain(r: f64, delta: f64, theta: f64, corr: f64) -> f64 {
    delta.sinh()
        * (delta.sinh() * (2.0 * r).cosh() + corr * delta.cosh() * theta.cos() * (2.0 * r).sinh())
}

/// Two-mode family with local squeezers on both modes.
pub fn two_mode_squeeze(
    r: f64,
    tau: f64,
    delta1: f64,
    theta1: f64,
    delta2: f64,
    theta2: f64,
) -> TwoModeSqueeze {
    let s2r = (2.0 * r).sinh();
    let c2r = (2.0 * r).cosh();
    let anticomm = 2.0
        * ((1.0 + 2.0 * c2r) * ((2.0 * delta1).cosh() + (2.0 * delta2).cosh()) - 2.0)
        * r.sinh().powi(2)
        + (1.0 - 2.0 * tau)
            * (s2r - (4.0 * r).sinh())
            * (theta1.cos() * (2.0 * delta1).sinh() - theta2.cos() * (2.0 * delta2).sinh());
    TwoModeSqueeze {
        de1: squeeze_gain(r, delta1, theta1, 2.0 * tau - 1.0),
        de2: squeeze_gain(r, delta2, theta2, 1.0 - 2.0 * tau),
        anticomm,
    }
}

/// Two-mode family with local displacements. Only `|α|²` enters.
pub fn two_mode_displace(
    r: f64,
    _tau: f64,
    amp1: f64,
    _phi1: f64,
    amp2: f64,
    _phi2: f64,
) -> DisplaceTotals {
    let a2 = amp1 * amp1 + amp2 * amp2;
    DisplaceTotals {
        de_total: a2,
        anticomm: 4.0 * (a2 + 2.0 * (2.0 * r).cosh()) * r.sinh().powi(2),
    }
}

/// Three-mode family with local squeezers; returns the per-mode gains.
pub fn three_mode_squeeze(
    r: f64,
    tau1: f64,
    tau2: f64,
    deltas: [f64; 3],
    thetas: [f64; 3],
) -> [f64; 3] {
    let de1 = squeeze_gain(r, deltas[0], thetas[0], 2.0 * tau1 - 1.0);
    let de2 = squeeze_gain(r, deltas[1], thetas[1], 1.0 - 2.0 * tau1 * tau2);
    let e4 = (4.0 * r).exp();
    let de3 = 0.25
        * (-2.0 * r).exp()
        * ((e4 - 1.0)
            * (2.0 * deltas[2]).sinh()
            * thetas[2].cos()
            * (2.0 * tau1 * (tau2 - 1.0) + 1.0)
            + 2.0 * (e4 + 1.0) * deltas[2].sinh().powi(2));
    [de1, de2, de3]
}

/// Three-mode family with local displacements.
pub fn three_mode_displace(
    r: f64,
    _tau1: f64,
    _tau2: f64,
    amps: [f64; 3],
    _phis: [f64; 3],
) -> DisplaceTotals {
    let a2: f64 = amps.iter().map(|a| a * a).sum();
    DisplaceTotals {
        de_total: a2,
        anticomm: 3.0 * (2.0 * a2 + 5.0 * (2.0 * r).cosh() - 1.0) * r.sinh().powi(2),
    }
}

/// Mean energy `N sinh²r` of the uncharged separable battery.
pub fn nmode_initial_energy(r: f64, n: usize) -> f64 {
    n as f64 * r.sinh().powi(2)
}

/// Second moment `⟨Ĥ²⟩` of the uncharged separable battery.
pub fn nmode_initial_second_moment(r: f64, n: usize) -> f64 {
    let nf = n as f64;
    0.5 * nf * r.sinh().powi(2) * (2.0 + (nf + 2.0) * (2.0 * r).cosh() - nf)
}

/// Energy gain of one squeezed-vacuum mode under a local squeezer.
pub fn nmode_squeeze_de(r: f64, delta: f64, theta: f64) -> f64 {
    squeeze_gain(r, delta, theta, 1.0)
}

/// `⟨N̂²⟩` of one squeezed-vacuum mode after a local squeezer.
pub fn nmode_squeeze_n2(r: f64, delta: f64, theta: f64) -> f64 {
    let (s2d, c2d) = ((2.0 * delta).sinh(), (2.0 * delta).cosh());
    let (s2r, c2r) = ((2.0 * r).sinh(), (2.0 * r).cosh());
    let c4d = (4.0 * delta).cosh();
    (3.0 * c4d
        + 4.0 * s2d * s2r * (3.0 * s2d * (2.0 * theta).cos() * s2r - 4.0 * theta.cos())
        + 12.0 * (4.0 * delta).sinh() * theta.cos() * (4.0 * r).sinh()
        - 16.0 * c2d * c2r
        + (9.0 * c4d + 3.0) * (4.0 * r).cosh()
        + 1.0)
        / 32.0
}

/// `⟨{Ĥ′, Ĥ}⟩` for the separable battery under local squeezers.
pub fn nmode_squeeze_anticomm(r: f64, n: usize, deltas: &[f64], thetas: &[f64]) -> f64 {
    let nf = n as f64;
    let e0 = nmode_initial_energy(r, n);
    let e02 = nmode_initial_second_moment(r, n);
    let (s2r, c2r) = ((2.0 * r).sinh(), (2.0 * r).cosh());
    deltas
        .iter()
        .zip(thetas)
        .map(|(&d, &t)| {
            2.0 / nf * e02 * (2.0 * d).cosh()
                + 2.0 * e0 * d.sinh().powi(2)
                + 0.5 * t.cos() * s2r * (3.0 * c2r - 1.0) * (2.0 * d).sinh()
                + (nf - 1.0) / nf * e0 * s2r * t.cos() * (2.0 * d).sinh()
        })
        .sum()
}

/// Photon-number moments of one displaced squeezed-vacuum mode.
pub fn nmode_disp_moments(r: f64, amp: f64, phi: f64) -> NumberMoments {
    let a2 = amp * amp;
    NumberMoments {
        n1: r.sinh().powi(2) + a2,
        n2: a2 * (a2 - 1.0 + (2.0 * phi).cos() * (2.0 * r).sinh())
            + (2.0 * a2 - 0.5) * (2.0 * r).cosh()
            + (3.0 * (4.0 * r).cosh() + 1.0) / 8.0,
    }
}

/// `⟨{Ĥ′, Ĥ}⟩` for the separable battery under local displacements.
pub fn nmode_disp_anticomm(r: f64, n: usize, amps: &[f64]) -> f64 {
    let a2: f64 = amps.iter().map(|a| a * a).sum();
    2.0 * a2 * nmode_initial_energy(r, n) + 2.0 * nmode_initial_second_moment(r, n)
}

/// Squeeze strength that adds `de` quanta to a squeezed-vacuum mode at
/// angle `theta`; inverse of [`nmode_squeeze_de`] on the charging branch.
pub fn invert_energy_to_squeeze(r: f64, theta: f64, de: f64) -> Result<f64> {
    check_domain("dE", de, de >= 0.0, "dE >= 0")?;
    let (s2r, c2r) = ((2.0 * r).sinh(), (2.0 * r).cosh());
    let ct = theta.cos();
    let root = (4.0 * de * (de + c2r) + ct * ct * s2r * s2r).sqrt();
    Ok(0.5 * ((root + 2.0 * de + c2r) / (ct * s2r + c2r)).ln())
}

/// Energy gain `2 sinh²δ cosh 2r` of two squeezed vacua under a two-mode
/// squeezer, split equally between the modes.
pub fn global_two_mode_squeeze_de(r: f64, delta: f64) -> f64 {
    2.0 * delta.sinh().powi(2) * (2.0 * r).cosh()
}
