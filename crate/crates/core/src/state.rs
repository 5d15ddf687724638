//! Energy spectra and density matrices in the energy eigenbasis.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::C64;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-10;

/// Energy levels `E_n/ħ` in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpectrum {
    levels: Vec<f64>,
}

impl EnergySpectrum {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::param("levels", "spectrum needs at least one level"));
        }
        if let Some(bad) = levels.iter().find(|e| !e.is_finite()) {
            return Err(Error::param("levels", format!("non-finite level {bad}")));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Bohr frequency `ω_{n,m} = E_n − E_m`.
    pub fn bohr(&self, n: usize, m: usize) -> f64 {
        self.levels[n] - self.levels[m]
    }
}

/// A validated density matrix: Hermitian, unit trace, positive
/// semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let herm = hermiticity_defect(&entries);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {herm:e})"
            )));
        }
        let tr = entries.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, not 1")));
        }
        let rho = Self { entries };
        let min_eig = rho.min_eigenvalue();
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(rho)
    }

    /// Pure state `|ψ⟩⟨ψ|`, after normalizing `psi`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if psi.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("state vector has zero norm".into()));
        }
        let n = psi.len();
        let entries = DMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / (norm * norm));
        Ok(Self { entries })
    }

    /// Diagonal (classical) state with the given populations.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let n = populations.len();
        let entries = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(populations[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::new(entries)
    }

    pub(crate) fn from_trusted(entries: DMatrix<C64>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, n: usize, m: usize) -> C64 {
        self.entries[(n, m)]
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        sym.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Largest `|A_ij − conj(A_ji)|`.
pub fn hermiticity_defect(a: &DMatrix<C64>) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bohr_frequencies_are_antisymmetric() {
        let s = EnergySpectrum::new(vec![0.0, 1.5, -2.0]).unwrap();
        for n in 0..3 {
            for m in 0..3 {
                assert_eq!(s.bohr(n, m), -s.bohr(m, n));
            }
        }
    }

    #[test]
    fn rejects_bad_spectra_and_states() {
        assert!(EnergySpectrum::new(vec![]).is_err());
        assert!(EnergySpectrum::new(vec![f64::NAN]).is_err());
        assert!(DensityMatrix::diagonal(&[0.5, 0.4]).is_err());
        assert!(DensityMatrix::diagonal(&[1.2, -0.2]).is_err());
        let mut m = DMatrix::from_element(2, 2, C64::new(0.5, 0.0));
        m[(0, 1)] = C64::new(0.5, 0.1);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn pure_state_has_unit_purity() {
        let s = 0.5_f64.sqrt();
        let rho = DensityMatrix::pure(&[C64::new(s, 0.0), C64::new(0.0, s)]).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-15);
        assert!(rho.min_eigenvalue().abs() < 1e-15);
        assert!(DensityMatrix::new(rho.entries().clone()).is_ok());
    }
}
