//! Gaussian states and symplectic operations in phase space.
//!
//! Quadratures are interleaved per mode, `R = (x₁, p₁, …, x_N, p_N)`, with
//! `[R_k, R_l] = iΩ_kl` and `Ω = ⊕ [[0, 1], [-1, 0]]`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_domain, check_mode, Error, Result};

/// Tolerance for the symmetry check on covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Slack allowed below ½ for symplectic eigenvalues.
pub const UNCERTAINTY_TOL: f64 = 1e-9;
/// Tolerance on `SΩSᵀ = Ω`.
pub const SYMPLECTIC_TOL: f64 = 1e-10;

/// The `2N × 2N` symplectic form.
pub fn omega(num_modes: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * num_modes, 2 * num_modes);
    for j in 0..num_modes {
        w[(2 * j, 2 * j + 1)] = 1.0;
        w[(2 * j + 1, 2 * j)] = -1.0;
    }
    w
}

/// An N-mode Gaussian state: mean quadratures `d` and covariance matrix `cov`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRecord", into = "StateRecord")]
pub struct GaussianState {
    num_modes: usize,
    d: DVector<f64>,
    cov: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct StateRecord {
    num_modes: usize,
    d: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl From<GaussianState> for StateRecord {
    fn from(s: GaussianState) -> Self {
        let n = s.cov.nrows();
        StateRecord {
            num_modes: s.num_modes,
            d: s.d.iter().copied().collect(),
            cov: (0..n)
                .map(|i| (0..n).map(|j| s.cov[(i, j)]).collect())
                .collect(),
        }
    }
}

impl TryFrom<StateRecord> for GaussianState {
    type Error = Error;

    fn try_from(rec: StateRecord) -> Result<Self> {
        let dim = 2 * rec.num_modes;
        if rec.cov.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: rec.cov.len(),
            });
        }
        for row in &rec.cov {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
        }
        let cov = DMatrix::from_fn(dim, dim, |i, j| rec.cov[i][j]);
        GaussianState::new(DVector::from_vec(rec.d), cov)
    }
}

impl GaussianState {
    /// Builds a state after checking symmetry and the uncertainty relation.
    pub fn new(d: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() == 0 {
            return Err(Error::NoModes);
        }
        if !cov.nrows().is_multiple_of(2) || cov.ncols() != cov.nrows() {
            return Err(Error::DimensionMismatch {
                expected: cov.nrows() + cov.nrows() % 2,
                found: cov.ncols(),
            });
        }
        if d.len() != cov.nrows() {
            return Err(Error::DimensionMismatch {
                expected: cov.nrows(),
                found: d.len(),
            });
        }
        let asym = (&cov - cov.transpose()).amax();
        if !(asym < SYMMETRY_TOL) {
            return Err(Error::NotSymmetric(asym));
        }
        let state = GaussianState {
            num_modes: cov.nrows() / 2,
            d,
            cov,
        };
        let nu_min = state
            .symplectic_eigenvalues()?
            .first()
            .copied()
            .unwrap_or(0.5);
        if !(nu_min >= 0.5 - UNCERTAINTY_TOL) {
            return Err(Error::Unphysical(nu_min));
        }
        Ok(state)
    }

    /// Internal constructor for states produced by symplectic maps of valid
    /// states; skips the eigenvalue check.
    pub(crate) fn from_parts_unchecked(d: DVector<f64>, cov: DMatrix<f64>) -> Self {
        let cov = (&cov + cov.transpose()) * 0.5;
        GaussianState {
            num_modes: cov.nrows() / 2,
            d,
            cov,
        }
    }

    pub fn vacuum(num_modes: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::NoModes);
        }
        let dim = 2 * num_modes;
        Ok(GaussianState {
            num_modes,
            d: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim) * 0.5,
        })
    }

    /// Product of `num_modes` identical squeezed vacua with per-mode
    /// covariance `½ diag(e^{2r}, e^{-2r})`. Negative `r` squeezes `x`.
    pub fn n_mode_separable(r: f64, num_modes: usize) -> Result<Self> {
        check_domain("r", r, true, "finite")?;
        let mut s = Self::vacuum(num_modes)?;
        let (big, small) = (0.5 * (2.0 * r).exp(), 0.5 * (-2.0 * r).exp());
        for j in 0..num_modes {
            s.cov[(2 * j, 2 * j)] = big;
            s.cov[(2 * j + 1, 2 * j + 1)] = small;
        }
        Ok(s)
    }

    /// Two-mode family obtained by mixing oppositely squeezed vacua on a beam
    /// splitter of transmittivity `tau`; `tau = ½` is the two-mode squeezed
    /// vacuum, `tau ∈ {0, 1}` a product state.
    pub fn two_mode_family(r: f64, tau: f64) -> Result<Self> {
        check_domain("r", r, true, "finite")?;
        check_tau("tau", tau)?;
        let s2 = (2.0 * r).sinh();
        let a = 0.5 * ((-2.0 * r).exp() + 2.0 * tau * s2);
        let b = 0.5 * ((2.0 * r).exp() - 2.0 * tau * s2);
        let c = (tau * (1.0 - tau)).sqrt() * s2;
        #[rustfmt::skip]
        let cov = DMatrix::from_row_slice(4, 4, &[
            a,   0.0, c,   0.0,
            0.0, b,   0.0, -c,
            c,   0.0, b,   0.0,
            0.0, -c,  0.0, a,
        ]);
        Ok(GaussianState {
            num_modes: 2,
            d: DVector::zeros(4),
            cov,
        })
    }

    /// Three-mode family produced by a tritter (two beam splitters with
    /// transmittivities `tau1`, `tau2`) fed with squeezed vacua.
    pub fn three_mode_family(r: f64, tau1: f64, tau2: f64) -> Result<Self> {
        check_domain("r", r, true, "finite")?;
        check_tau("tau1", tau1)?;
        check_tau("tau2", tau2)?;
        let (e2, em2) = ((2.0 * r).exp(), (-2.0 * r).exp());
        let e4m1 = (4.0 * r).exp() - 1.0;
        let (s2, c2) = ((2.0 * r).sinh(), (2.0 * r).cosh());
        let a = 0.5 * em2 * (e4m1 * tau1 + 1.0);
        let b = 0.5 * (em2 * tau1 + e2 * (1.0 - tau1));
        let c = 0.5 * (s2 * (1.0 - 2.0 * tau1 * tau2) + c2);
        let d = 0.5 * em2 * (e4m1 * tau1 * tau2 + 1.0);
        let e = 0.5 * (s2 * (1.0 - 2.0 * tau1 * (1.0 - tau2)) + c2);
        let f = 0.5 * em2 * (1.0 + tau1 * e4m1 * (1.0 - tau2));
        let rr = (tau1 * tau2 * (1.0 - tau1)).sqrt() * s2;
        let ss = tau1 * (tau2 * (1.0 - tau2)).sqrt() * s2;
        let tt = (tau1 * (1.0 - tau1) * (1.0 - tau2)).sqrt() * s2;
        #[rustfmt::skip]
        let cov = DMatrix::from_row_slice(6, 6, &[
            a,   0.0, rr,  0.0, tt,  0.0,
            0.0, b,   0.0, -rr, 0.0, -tt,
            rr,  0.0, c,   0.0, -ss, 0.0,
            0.0, -rr, 0.0, d,   0.0, ss,
            tt,  0.0, -ss, 0.0, e,   0.0,
            0.0, -tt, 0.0, ss,  0.0, f,
        ]);
        Ok(GaussianState {
            num_modes: 3,
            d: DVector::zeros(6),
            cov,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Returns a copy with the mean vector replaced.
    pub fn with_mean(&self, d: DVector<f64>) -> Result<Self> {
        if d.len() != self.d.len() {
            return Err(Error::DimensionMismatch {
                expected: self.d.len(),
                found: d.len(),
            });
        }
        Ok(GaussianState {
            num_modes: self.num_modes,
            d,
            cov: self.cov.clone(),
        })
    }

    /// Reduced state of a single mode.
    pub fn mode(&self, j: usize) -> Result<Self> {
        check_mode(j, self.num_modes)?;
        Ok(GaussianState {
            num_modes: 1,
            d: self.d.rows(2 * j, 2).into_owned(),
            cov: self.cov.view((2 * j, 2 * j), (2, 2)).into_owned(),
        })
    }

    /// True when no two distinct modes are correlated.
    pub fn is_product(&self) -> bool {
        let n = self.cov.nrows();
        for i in 0..n {
            for j in 0..n {
                if i / 2 != j / 2 && self.cov[(i, j)] != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    pub fn determinant(&self) -> f64 {
        self.cov.determinant()
    }

    /// Symplectic eigenvalues in ascending order, one per mode.
    ///
    /// They are the square roots of the eigenvalues of the symmetric matrix
    /// `Ξ^{½} Ωᵀ Ξ Ω Ξ^{½}`, each of which appears twice.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = SymmetricEigen::new(self.cov.clone());
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::Unphysical(0.0));
        }
        let root = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let w = omega(self.num_modes);
        let k = &root * w.transpose() * &self.cov * &w * &root;
        let k = (&k + k.transpose()) * 0.5;
        let mut nu: Vec<f64> = SymmetricEigen::new(k)
            .eigenvalues
            .iter()
            .map(|&l| l.max(0.0).sqrt())
            .collect();
        nu.sort_by(f64::total_cmp);
        Ok(nu.into_iter().step_by(2).collect())
    }

    /// Wigner function `exp[-½(R-d)ᵀΞ⁻¹(R-d)] / ((2π)^N √det Ξ)`.
    pub fn wigner_at(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.d.len() {
            return Err(Error::DimensionMismatch {
                expected: self.d.len(),
                found: point.len(),
            });
        }
        let chol = self
            .cov
            .clone()
            .cholesky()
            .ok_or(Error::SingularCovariance)?;
        let diff = DVector::from_column_slice(point) - &self.d;
        let q = diff.dot(&chol.solve(&diff));
        let det = chol.determinant();
        if !(det > 0.0) {
            return Err(Error::SingularCovariance);
        }
        Ok((-0.5 * q).exp() / ((2.0 * PI).powi(self.num_modes as i32) * det.sqrt()))
    }
}

/// A Gaussian unitary acting as `R → S R + shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticOp {
    num_modes: usize,
    s: DMatrix<f64>,
    shift: DVector<f64>,
}

impl SymplecticOp {
    /// Builds an operation after checking `SΩSᵀ = Ω`.
    pub fn new(s: DMatrix<f64>, shift: DVector<f64>) -> Result<Self> {
        if s.nrows() == 0 {
            return Err(Error::NoModes);
        }
        if !s.nrows().is_multiple_of(2) || s.ncols() != s.nrows() || shift.len() != s.nrows() {
            return Err(Error::DimensionMismatch {
                expected: s.nrows(),
                found: shift.len().min(s.ncols()),
            });
        }
        let op = SymplecticOp {
            num_modes: s.nrows() / 2,
            s,
            shift,
        };
        let res = op.symplectic_residual();
        if !(res < SYMPLECTIC_TOL) {
            return Err(Error::Domain {
                name: "S",
                value: res,
                domain: "symplectic matrix",
            });
        }
        Ok(op)
    }

    pub fn identity(num_modes: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::NoModes);
        }
        let dim = 2 * num_modes;
        Ok(SymplecticOp {
            num_modes,
            s: DMatrix::identity(dim, dim),
            shift: DVector::zeros(dim),
        })
    }

    /// Single-mode squeezer `exp[½(ζa†² − ζ*a²)]`, `ζ = δe^{iθ}`, on `mode`.
    pub fn squeezer(delta: f64, theta: f64, mode: usize, num_modes: usize) -> Result<Self> {
        check_domain("delta", delta, delta >= 0.0, "delta >= 0")?;
        check_domain("theta", theta, true, "finite")?;
        let mut op = Self::identity(num_modes)?;
        check_mode(mode, num_modes)?;
        let (ch, sh) = (delta.cosh(), delta.sinh());
        let (c, s) = (theta.cos(), theta.sin());
        let j = 2 * mode;
        op.s[(j, j)] = ch + sh * c;
        op.s[(j, j + 1)] = sh * s;
        op.s[(j + 1, j)] = sh * s;
        op.s[(j + 1, j + 1)] = ch - sh * c;
        Ok(op)
    }

    /// Displacement `exp(αa† − α*a)`, `α = amp·e^{iφ}`, on `mode`.
    pub fn displacer(amp: f64, phi: f64, mode: usize, num_modes: usize) -> Result<Self> {
        check_domain("amp", amp, amp >= 0.0, "amp >= 0")?;
        check_domain("phi", phi, true, "finite")?;
        let mut op = Self::identity(num_modes)?;
        check_mode(mode, num_modes)?;
        let scale = std::f64::consts::SQRT_2 * amp;
        op.shift[2 * mode] = scale * phi.cos();
        op.shift[2 * mode + 1] = scale * phi.sin();
        Ok(op)
    }

    /// Beam splitter of transmittivity `tau` acting as
    /// `R_a → √τ R_a − √(1−τ) R_b`, `R_b → √(1−τ) R_a + √τ R_b`.
    pub fn beam_splitter(tau: f64, mode_a: usize, mode_b: usize, num_modes: usize) -> Result<Self> {
        check_tau("tau", tau)?;
        check_mode(mode_a, num_modes)?;
        check_mode(mode_b, num_modes)?;
        if mode_a == mode_b {
            return Err(Error::RepeatedMode(mode_a));
        }
        let mut op = Self::identity(num_modes)?;
        let (t, u) = (tau.sqrt(), (1.0 - tau).sqrt());
        for q in 0..2 {
            let (a, b) = (2 * mode_a + q, 2 * mode_b + q);
            op.s[(a, a)] = t;
            op.s[(a, b)] = -u;
            op.s[(b, a)] = u;
            op.s[(b, b)] = t;
        }
        Ok(op)
    }

    /// Two-mode squeezer `exp(ζa₁†a₂† − ζ*a₁a₂)` on a two-mode system.
    pub fn global_two_mode_squeezer(delta: f64, theta: f64) -> Result<Self> {
        check_domain("delta", delta, delta >= 0.0, "delta >= 0")?;
        check_domain("theta", theta, true, "finite")?;
        let c = delta.cosh();
        let a = theta.cos() * delta.sinh();
        let b = theta.sin() * delta.sinh();
        #[rustfmt::skip]
        let s = DMatrix::from_row_slice(4, 4, &[
            c,   0.0, a,   b,
            0.0, c,   b,   -a,
            a,   b,   c,   0.0,
            b,   -a,  0.0, c,
        ]);
        Ok(SymplecticOp {
            num_modes: 2,
            s,
            shift: DVector::zeros(4),
        })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    /// `‖SΩSᵀ − Ω‖_max`.
    pub fn symplectic_residual(&self) -> f64 {
        let w = omega(self.num_modes);
        (&self.s * &w * self.s.transpose() - w).amax()
    }

    /// The operation `self` applied after `first`.
    pub fn after(&self, first: &SymplecticOp) -> Result<Self> {
        if self.num_modes != first.num_modes {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes,
                found: first.num_modes,
            });
        }
        Ok(SymplecticOp {
            num_modes: self.num_modes,
            s: &self.s * &first.s,
            shift: &self.s * &first.shift + &self.shift,
        })
    }

    /// Lifts a k-mode operation onto `targets` of an N-mode system; the
    /// i-th mode of `self` acts on mode `targets[i]`.
    pub fn embed(&self, targets: &[usize], num_modes: usize) -> Result<Self> {
        if targets.len() != self.num_modes {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes,
                found: targets.len(),
            });
        }
        for (i, &t) in targets.iter().enumerate() {
            check_mode(t, num_modes)?;
            if targets[..i].contains(&t) {
                return Err(Error::RepeatedMode(t));
            }
        }
        let mut out = Self::identity(num_modes)?;
        for (i, &ti) in targets.iter().enumerate() {
            for qi in 0..2 {
                out.shift[2 * ti + qi] = self.shift[2 * i + qi];
                for (j, &tj) in targets.iter().enumerate() {
                    for qj in 0..2 {
                        out.s[(2 * ti + qi, 2 * tj + qj)] = self.s[(2 * i + qi, 2 * j + qj)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `d → S d + shift`, `Ξ → S Ξ Sᵀ`.
    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        if self.num_modes != state.num_modes {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes,
                found: state.num_modes,
            });
        }
        let d = &self.s * &state.d + &self.shift;
        let cov = &self.s * &state.cov * self.s.transpose();
        Ok(GaussianState::from_parts_unchecked(d, cov))
    }

    /// True when the operation does not couple distinct modes.
    pub fn is_local(&self) -> bool {
        let n = self.s.nrows();
        (0..n).all(|i| (0..n).all(|j| i / 2 == j / 2 || self.s[(i, j)] == 0.0))
    }
}

fn check_tau(name: &'static str, tau: f64) -> Result<()> {
    check_domain(name, tau, (0.0..=1.0).contains(&tau), "[0, 1]")
}
