//! Reduced density matrices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::ProductBasis;
use super::ket::Ket;
use super::matrix::{CMatrix, TOL};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    num_qubits: usize,
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace, and positive semidefiniteness.
    pub fn new(num_qubits: usize, entries: CMatrix) -> Result<Self> {
        if entries.dim() != 1 << num_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << num_qubits,
                got: entries.dim(),
            });
        }
        let herm = entries.hermiticity_deviation();
        if herm > TOL {
            return Err(Error::NonHermitian { deviation: herm });
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return Err(Error::TraceNotOne {
                deviation: (tr - Complex64::ONE).norm(),
            });
        }
        let eigs = entries.hermitian_eigenvalues()?;
        if let Some(&min) = eigs.first() {
            if min < -TOL {
                return Err(Error::NotPositiveSemidefinite {
                    min_eigenvalue: min,
                });
            }
        }
        Ok(Self {
            num_qubits,
            entries,
        })
    }

    pub fn from_pure(state: &Ket) -> Self {
        let dim = 1 << state.num_qubits();
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = state.amplitude(i) * state.amplitude(j).conj();
            }
        }
        Self {
            num_qubits: state.num_qubits(),
            entries: m,
        }
    }

    /// Convex mixture; weights must sum to one.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParams("empty mixture".into()))?;
        let n = first.1.num_qubits;
        let mut m = CMatrix::zeros(1 << n);
        for (w, dm) in parts {
            if dm.num_qubits != n {
                return Err(Error::DimensionMismatch {
                    expected: 1 << n,
                    got: dm.entries.dim(),
                });
            }
            m = m.add(&dm.entries.scale(Complex64::new(*w, 0.0)));
        }
        Self::new(n, m)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.entries.max_abs_diff(&other.entries)
    }

    /// Diagonal of the matrix expressed in a product basis; this is the
    /// marginal outcome distribution for a measurement in that basis.
    pub fn diagonal_in_basis(&self, basis: &ProductBasis) -> Result<Vec<(String, f64)>> {
        basis.validate()?;
        if basis.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                got: basis.num_qubits(),
            });
        }
        let u = basis.analysis_matrix();
        let rotated = u.mul(&self.entries).mul(&u.adjoint());
        Ok((0..basis.dim())
            .map(|i| (basis.label(i), rotated[(i, i)].re))
            .collect())
    }
}

/// Trace out every qubit not listed in `keep`; the kept qubits appear in the
/// order given.
pub fn partial_trace(state: &Ket, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptySubsystem);
    }
    let n = state.num_qubits();
    let mut seen = vec![false; n];
    for &q in keep {
        if q >= n {
            return Err(Error::QubitIndexOutOfRange {
                index: q,
                num_qubits: n,
            });
        }
        if seen[q] {
            return Err(Error::InvalidParams(format!(
                "duplicate qubit index in {keep:?}"
            )));
        }
        seen[q] = true;
    }
    let traced: Vec<usize> = (0..n).filter(|q| !seen[*q]).collect();
    let k = keep.len();
    let keep_shift: Vec<usize> = keep.iter().map(|&q| n - 1 - q).collect();
    let traced_shift: Vec<usize> = traced.iter().map(|&q| n - 1 - q).collect();

    let index_of = |sub: usize, rest: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &sh) in keep_shift.iter().enumerate() {
            if (sub >> (k - 1 - pos)) & 1 == 1 {
                idx |= 1 << sh;
            }
        }
        for (pos, &sh) in traced_shift.iter().enumerate() {
            if (rest >> (traced_shift.len() - 1 - pos)) & 1 == 1 {
                idx |= 1 << sh;
            }
        }
        idx
    };

    let mut m = CMatrix::zeros(1 << k);
    for a in 0..(1 << k) {
        for b in 0..(1 << k) {
            let mut sum = Complex64::ZERO;
            for rest in 0..(1usize << traced.len()) {
                sum += state.amplitude(index_of(a, rest)) * state.amplitude(index_of(b, rest)).conj();
            }
            m[(a, b)] = sum;
        }
    }
    DensityMatrix::new(k, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_trace_of_product_state_is_pure() {
        let ket = Ket::basis_string("00").unwrap();
        let dm = partial_trace(&ket, &[0]).unwrap();
        let pure = DensityMatrix::from_pure(&Ket::basis_string("0").unwrap());
        assert!(dm.max_abs_diff(&pure) < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_empty_or_bad_keep() {
        let ket = Ket::basis_string("00").unwrap();
        assert!(matches!(
            partial_trace(&ket, &[]),
            Err(Error::EmptySubsystem)
        ));
        assert!(partial_trace(&ket, &[5]).is_err());
        assert!(partial_trace(&ket, &[0, 0]).is_err());
    }

    #[test]
    fn mixture_validates_and_averages() {
        let zero = DensityMatrix::from_pure(&Ket::basis_string("0").unwrap());
        let one = DensityMatrix::from_pure(&Ket::basis_string("1").unwrap());
        let mixed = DensityMatrix::mixture(&[(0.5, zero), (0.5, one)]).unwrap();
        assert!((mixed.entries()[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!(mixed.entries()[(0, 1)].norm() < 1e-12);
    }
}
