//! Moments of quadratic observables `½RᵀAR + aᵀR + c` in Gaussian states.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_domain, check_mode, Error, Result};
use crate::gaussian::{omega, GaussianState, SymplecticOp, SYMMETRY_TOL};

/// Observable `Ô = ½ R̂ᵀ A R̂ + aᵀ R̂ + c` with symmetric `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObservable {
    num_modes: usize,
    a_mat: DMatrix<f64>,
    a_vec: DVector<f64>,
    c: f64,
}

impl QuadraticObservable {
    pub fn new(a_mat: DMatrix<f64>, a_vec: DVector<f64>, c: f64) -> Result<Self> {
        let dim = a_mat.nrows();
        if dim == 0 {
            return Err(Error::NoModes);
        }
        if !dim.is_multiple_of(2) || a_mat.ncols() != dim || a_vec.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: a_vec.len().min(a_mat.ncols()),
            });
        }
        let asym = (&a_mat - a_mat.transpose()).amax();
        if !(asym < SYMMETRY_TOL) {
            return Err(Error::NotSymmetric(asym));
        }
        check_domain("c", c, true, "finite")?;
        Ok(QuadraticObservable {
            num_modes: dim / 2,
            a_mat,
            a_vec,
            c,
        })
    }

    /// `N̂ⱼ = (x̂ⱼ² + p̂ⱼ² − 1)/2`.
    pub fn number_op(mode: usize, num_modes: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::NoModes);
        }
        check_mode(mode, num_modes)?;
        let mut omegas = vec![0.0; num_modes];
        omegas[mode] = 1.0;
        Self::hamiltonian(&omegas)
    }

    /// `Ĥ = Σⱼ ωⱼ N̂ⱼ`, without zero-point energy.
    pub fn hamiltonian(omegas: &[f64]) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::NoModes);
        }
        let dim = 2 * omegas.len();
        let mut a_mat = DMatrix::zeros(dim, dim);
        for (j, &w) in omegas.iter().enumerate() {
            check_domain("omega", w, true, "finite")?;
            a_mat[(2 * j, 2 * j)] = w;
            a_mat[(2 * j + 1, 2 * j + 1)] = w;
        }
        Ok(QuadraticObservable {
            num_modes: omegas.len(),
            a_mat,
            a_vec: DVector::zeros(dim),
            c: -0.5 * omegas.iter().sum::<f64>(),
        })
    }

    /// Unit-frequency battery Hamiltonian on `num_modes` modes.
    pub fn unit_hamiltonian(num_modes: usize) -> Result<Self> {
        Self::hamiltonian(&vec![1.0; num_modes])
    }

    pub fn constant(c: f64, num_modes: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::NoModes);
        }
        let dim = 2 * num_modes;
        Self::new(DMatrix::zeros(dim, dim), DVector::zeros(dim), c)
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn quadratic(&self) -> &DMatrix<f64> {
        &self.a_mat
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.a_vec
    }

    pub fn offset(&self) -> f64 {
        self.c
    }

    fn check(&self, state: &GaussianState) -> Result<()> {
        if state.num_modes() != self.num_modes {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes,
                found: state.num_modes(),
            });
        }
        Ok(())
    }

    /// `⟨Ô⟩ = ½Tr[AΞ] + ½dᵀAd + aᵀd + c`.
    pub fn mean(&self, state: &GaussianState) -> Result<f64> {
        self.check(state)?;
        let d = state.d();
        Ok(0.5 * trace_of_product(&self.a_mat, state.cov())
            + 0.5 * d.dot(&(&self.a_mat * d))
            + self.a_vec.dot(d)
            + self.c)
    }

    /// Symmetrised covariance `½⟨{Ô₁,Ô₂}⟩ − ⟨Ô₁⟩⟨Ô₂⟩`:
    /// `½Tr[AΞBΞ] + ⅛Tr[AΩBΩ] + u_AᵀΞu_B` with `u_X = Xd + x`.
    pub fn covariance(&self, other: &QuadraticObservable, state: &GaussianState) -> Result<f64> {
        self.check(state)?;
        other.check(state)?;
        let cov = state.cov();
        let d = state.d();
        let w = omega(self.num_modes);
        let axi = &self.a_mat * cov;
        let bxi = &other.a_mat * cov;
        let aw = &self.a_mat * &w;
        let bw = &other.a_mat * &w;
        let u_a = &self.a_mat * d + &self.a_vec;
        let u_b = &other.a_mat * d + &other.a_vec;
        Ok(0.5 * trace_of_product(&axi, &bxi)
            + 0.125 * trace_of_product(&aw, &bw)
            + u_a.dot(&(cov * u_b)))
    }

    pub fn variance(&self, state: &GaussianState) -> Result<f64> {
        self.covariance(self, state)
    }

    /// `⟨{Ô₁, Ô₂}⟩ = 2 Cov + 2⟨Ô₁⟩⟨Ô₂⟩`.
    pub fn anticommutator_mean(
        &self,
        other: &QuadraticObservable,
        state: &GaussianState,
    ) -> Result<f64> {
        Ok(2.0 * self.covariance(other, state)? + 2.0 * self.mean(state)? * other.mean(state)?)
    }

    /// Heisenberg picture `Û† Ô Û` for the unitary acting as `R → SR + shift`.
    pub fn pullback(&self, op: &SymplecticOp) -> Result<Self> {
        if op.num_modes() != self.num_modes {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes,
                found: op.num_modes(),
            });
        }
        let s = op.s();
        let shift = op.shift();
        let a_shift = &self.a_mat * shift;
        let a_mat = s.transpose() * &self.a_mat * s;
        let a_mat = (&a_mat + a_mat.transpose()) * 0.5;
        Ok(QuadraticObservable {
            num_modes: self.num_modes,
            a_mat,
            a_vec: s.transpose() * (&a_shift + &self.a_vec),
            c: self.c + 0.5 * shift.dot(&a_shift) + self.a_vec.dot(shift),
        })
    }

    /// `Ô₁ − Ô₂`.
    pub fn difference(&self, other: &QuadraticObservable) -> Result<Self> {
        if other.num_modes != self.num_modes {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes,
                found: other.num_modes,
            });
        }
        Ok(QuadraticObservable {
            num_modes: self.num_modes,
            a_mat: &self.a_mat - &other.a_mat,
            a_vec: &self.a_vec - &other.a_vec,
            c: self.c - other.c,
        })
    }
}

/// `Tr[PQ]` without forming the product.
fn trace_of_product(p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    p.component_mul(&q.transpose()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn smsv(r: f64) -> GaussianState {
        GaussianState::n_mode_separable(r, 1).unwrap()
    }

    #[test]
    fn number_operator_means() {
        let n = QuadraticObservable::number_op(0, 1).unwrap();
        assert_relative_eq!(
            n.mean(&GaussianState::vacuum(1).unwrap()).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(n.mean(&smsv(0.5)).unwrap(), 0.271540, epsilon = 1e-6);
        let coh = SymplecticOp::displacer(2.0, 0.7, 0, 1)
            .unwrap()
            .apply(&GaussianState::vacuum(1).unwrap())
            .unwrap();
        assert_relative_eq!(n.mean(&coh).unwrap(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(n.variance(&coh).unwrap(), 4.0, epsilon = 1e-12);
        assert!(QuadraticObservable::number_op(2, 2).is_err());
    }

    #[test]
    fn hamiltonian_means() {
        let h = QuadraticObservable::hamiltonian(&[1.0, 1.0]).unwrap();
        for tau in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let s = GaussianState::two_mode_family(1.0, tau).unwrap();
            assert_relative_eq!(h.mean(&s).unwrap(), 2.762196, epsilon = 1e-6);
            let want = 4.0 * (1f64.sinh() * 1f64.cosh()).powi(2);
            assert_relative_eq!(h.variance(&s).unwrap(), want, max_relative = 1e-12);
        }
        let h = QuadraticObservable::hamiltonian(&[2.0, 3.0]).unwrap();
        assert_relative_eq!(
            h.mean(&GaussianState::vacuum(2).unwrap()).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        let h = QuadraticObservable::unit_hamiltonian(3).unwrap();
        let s = GaussianState::n_mode_separable(1.0, 3).unwrap();
        assert_relative_eq!(h.mean(&s).unwrap(), 4.143293, epsilon = 1e-6);
        let c = QuadraticObservable::constant(5.0, 2).unwrap();
        assert_eq!(c.mean(&GaussianState::vacuum(2).unwrap()).unwrap(), 5.0);
    }

    #[test]
    fn variances() {
        let h = QuadraticObservable::unit_hamiltonian(1).unwrap();
        assert_relative_eq!(
            h.variance(&GaussianState::vacuum(1).unwrap()).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(h.variance(&smsv(0.5)).unwrap(), 0.690549, epsilon = 1e-6);
        for n in 1..6 {
            let r = 0.8;
            let h = QuadraticObservable::unit_hamiltonian(n).unwrap();
            let s = GaussianState::n_mode_separable(r, n).unwrap();
            let want = 2.0 * n as f64 * (r.sinh() * r.cosh()).powi(2);
            assert_relative_eq!(h.variance(&s).unwrap(), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn displacement_gain_on_squeezed_vacuum() {
        let (r, amp, phi) = (0.6, 1.3, 0.4);
        let op = SymplecticOp::displacer(amp, phi, 0, 1).unwrap();
        let n = QuadraticObservable::number_op(0, 1).unwrap();
        let after = op.apply(&smsv(r)).unwrap();
        assert_relative_eq!(
            n.mean(&after).unwrap(),
            r.sinh().powi(2) + amp * amp,
            max_relative = 1e-12
        );
        let hp = n.pullback(&op).unwrap();
        let v0 = n.variance(&smsv(r)).unwrap();
        assert_relative_eq!(
            hp.covariance(&n, &smsv(r)).unwrap(),
            v0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn pullback_matches_forward_evolution() {
        let s = GaussianState::two_mode_family(0.7, 0.3).unwrap();
        let op = SymplecticOp::squeezer(0.4, 1.1, 1, 2)
            .unwrap()
            .after(&SymplecticOp::displacer(0.9, 2.0, 0, 2).unwrap())
            .unwrap();
        let h = QuadraticObservable::hamiltonian(&[1.0, 1.7]).unwrap();
        let hp = h.pullback(&op).unwrap();
        let after = op.apply(&s).unwrap();
        assert_relative_eq!(
            hp.mean(&s).unwrap(),
            h.mean(&after).unwrap(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            hp.variance(&s).unwrap(),
            h.variance(&after).unwrap(),
            max_relative = 1e-12
        );
        let id = SymplecticOp::identity(2).unwrap();
        assert_eq!(h.pullback(&id).unwrap(), h);
    }

    #[test]
    fn two_mode_displacement_anticommutator() {
        let s = GaussianState::two_mode_family(1.0, 0.37).unwrap();
        let op = SymplecticOp::displacer(1.0, 0.0, 0, 2)
            .unwrap()
            .after(&SymplecticOp::displacer(1.0, 0.0, 1, 2).unwrap())
            .unwrap();
        let h = QuadraticObservable::unit_hamiltonian(2).unwrap();
        let hp = h.pullback(&op).unwrap();
        assert_relative_eq!(
            hp.anticommutator_mean(&h, &s).unwrap(),
            52.61647,
            epsilon = 1e-5
        );
        let v = GaussianState::vacuum(2).unwrap();
        assert_relative_eq!(h.anticommutator_mean(&h, &v).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn covariance_is_symmetric() {
        let s = GaussianState::three_mode_family(0.5, 0.3, 0.6).unwrap();
        let s = SymplecticOp::displacer(0.8, PI / 3.0, 2, 3)
            .unwrap()
            .apply(&s)
            .unwrap();
        let h = QuadraticObservable::unit_hamiltonian(3).unwrap();
        let n2 = QuadraticObservable::number_op(1, 3).unwrap();
        let a = h.covariance(&n2, &s).unwrap();
        let b = n2.covariance(&h, &s).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-13);
    }

    #[test]
    fn rejects_asymmetric_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(QuadraticObservable::new(a, DVector::zeros(2), 0.0).is_err());
    }
}
