//! The semigroup `T_t = exp(−tL)` of a Dirichlet form.
//!
//! `M·L` is symmetric, so `S = M^{1/2} L M^{−1/2}` is a symmetric matrix with
//! the same spectrum as `L`. With `S = Q Λ Qᵀ`,
//!
//! ```text
//! exp(−tL) = M^{−1/2} Q exp(−tΛ) Qᵀ M^{1/2}
//! ```
//!
//! The decomposition is computed once per form and reused for every `t`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::form::DirichletForm;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone)]
pub struct Semigroup {
    sqrt_measure: Vec<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Semigroup {
    pub fn new(form: &DirichletForm) -> Self {
        let n = form.len();
        let sqrt_measure: Vec<f64> = form
            .space()
            .measure()
            .iter()
            .map(|&m| libm::sqrt(m))
            .collect();
        let c = form.conductances();
        let k = form.killing();
        let m = form.space().measure();
        // Built from the coefficients so that S is exactly symmetric.
        let mut s = DMatrix::zeros(n, n);
        for x in 0..n {
            let mut diag = k[x];
            for y in 0..n {
                if y != x {
                    diag += c[(x, y)];
                    s[(x, y)] = -c[(x, y)] / (sqrt_measure[x] * sqrt_measure[y]);
                }
            }
            s[(x, x)] = diag / m[x];
        }
        let eigen = s.symmetric_eigen();
        Semigroup {
            sqrt_measure,
            eigenvalues: eigen.eigenvalues.iter().copied().collect(),
            eigenvectors: eigen.eigenvectors,
        }
    }

    pub fn len(&self) -> usize {
        self.sqrt_measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sqrt_measure.is_empty()
    }

    /// Spectrum of the generator, in no particular order.
    pub fn spectrum(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `T_t f`. At `t = 0` the input is returned unchanged.
    pub fn apply(&self, t: f64, f: &[f64]) -> Result<Vec<f64>> {
        check_time(t)?;
        check_len(self.len(), f.len())?;
        if t == 0.0 {
            return Ok(f.to_vec());
        }
        let v = DVector::from_iterator(
            self.len(),
            f.iter().zip(&self.sqrt_measure).map(|(a, r)| a * r),
        );
        let mut w = self.eigenvectors.tr_mul(&v);
        for (wi, &lambda) in w.iter_mut().zip(&self.eigenvalues) {
            *wi *= libm::exp(-t * lambda);
        }
        let u = &self.eigenvectors * w;
        Ok(u.iter()
            .zip(&self.sqrt_measure)
            .map(|(a, r)| a / r)
            .collect())
    }

    /// The matrix of `T_t`, so that `(T_t f)(x) = Σ_y P[x,y] f(y)`.
    pub fn matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        check_time(t)?;
        let n = self.len();
        if t == 0.0 {
            return Ok(DMatrix::identity(n, n));
        }
        let mut left = self.eigenvectors.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let e = libm::exp(-t * lambda);
            left.column_mut(j).scale_mut(e);
        }
        let mut p = left * self.eigenvectors.transpose();
        for x in 0..n {
            for y in 0..n {
                p[(x, y)] *= self.sqrt_measure[y] / self.sqrt_measure[x];
            }
        }
        Ok(p)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeTime(t))
    }
}

/// `exp(−tL) f` for a single evaluation.
pub fn semigroup_apply(form: &DirichletForm, t: f64, f: &[f64]) -> Result<Vec<f64>> {
    check_time(t)?;
    check_len(form.len(), f.len())?;
    Semigroup::new(form).apply(t, f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovSample {
    pub t: f64,
    /// Smallest entry of the transition matrix `exp(−tL)`.
    pub min_entry: f64,
    /// Largest value of `T_t 1`.
    pub max_row_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovReport {
    pub markovian: bool,
    pub samples: Vec<MarkovSample>,
}

/// Numerical check that `exp(−tL)` is positivity preserving and
/// sub-Markovian at every `t` of the grid.
pub fn is_markovian(form: &DirichletForm, t_grid: &[f64], tol: &Tolerances) -> MarkovReport {
    let semigroup = Semigroup::new(form);
    let mut samples = Vec::with_capacity(t_grid.len());
    let mut markovian = true;
    for &t in t_grid {
        let Ok(p) = semigroup.matrix(t) else {
            markovian = false;
            continue;
        };
        let min_entry = p.iter().copied().fold(f64::INFINITY, f64::min);
        let max_row_sum = p
            .row_iter()
            .map(|row| row.sum())
            .fold(f64::NEG_INFINITY, f64::max);
        if min_entry < -tol.sign || max_row_sum > 1.0 + tol.sign {
            markovian = false;
        }
        samples.push(MarkovSample {
            t,
            min_entry,
            max_row_sum,
        });
    }
    MarkovReport { markovian, samples }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::StateSpace;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn two_state() -> DirichletForm {
        let space = StateSpace::indexed("x", vec![1.0, 1.0]).unwrap();
        DirichletForm::from_triplets(space, &[(0, 1, 1.0)], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn time_zero_is_identity() {
        let f = [0.3, -2.0];
        assert_eq!(semigroup_apply(&two_state(), 0.0, &f).unwrap(), f.to_vec());
    }

    #[test]
    fn two_state_closed_form() {
        let out = semigroup_apply(&two_state(), 1.0, &[1.0, 0.0]).unwrap();
        let e2 = libm::exp(-2.0);
        assert_abs_diff_eq!(out[0], (1.0 + e2) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out[1], (1.0 - e2) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn constants_invariant_without_killing() {
        let space = StateSpace::indexed("x", vec![1.0, 3.0, 0.5]).unwrap();
        let form =
            DirichletForm::from_triplets(space, &[(0, 1, 2.0), (1, 2, 0.7)], vec![0.0; 3]).unwrap();
        let sg = form.semigroup();
        for t in [0.1, 1.0, 10.0, 100.0] {
            for v in sg.apply(t, &[1.0; 3]).unwrap() {
                assert_abs_diff_eq!(v, 1.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn negative_time_rejected() {
        assert_eq!(
            semigroup_apply(&two_state(), -1.0, &[1.0, 0.0]),
            Err(Error::NegativeTime(-1.0))
        );
        assert!(two_state().semigroup().matrix(f64::NAN).is_err());
    }

    #[test]
    fn markovian_report() {
        let tol = Tolerances::default();
        let report = is_markovian(&two_state(), &[0.1, 1.0, 10.0], &tol);
        assert!(report.markovian);
        for s in &report.samples {
            assert_abs_diff_eq!(s.max_row_sum, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn corrupted_form_is_not_markovian() {
        // Negative conductance: positive off-diagonal generator entry.
        let space = StateSpace::uniform(3).unwrap();
        let c = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.5, -1.0, 0.0, 1.0, 0.5, 1.0, 0.0]);
        let bad = DirichletForm::new_unchecked(space, c, vec![0.0; 3]);
        let report = is_markovian(&bad, &[0.01, 0.1], &Tolerances::default());
        assert!(!report.markovian);
        assert!(report.samples[0].min_entry < -1e-3);
    }

    #[test]
    fn matrix_agrees_with_apply() {
        let space = StateSpace::indexed("x", vec![1.0, 1.0, 2.0]).unwrap();
        let form =
            DirichletForm::from_triplets(space, &[(0, 1, 1.0), (1, 2, 2.0)], vec![0.0, 0.0, 0.5])
                .unwrap();
        let sg = form.semigroup();
        let p = sg.matrix(0.7).unwrap();
        let f = [0.2, -1.0, 3.0];
        let direct = sg.apply(0.7, &f).unwrap();
        for x in 0..3 {
            let via: f64 = (0..3).map(|y| p[(x, y)] * f[y]).sum();
            assert_abs_diff_eq!(via, direct[x], epsilon = 1e-13);
        }
    }
}
