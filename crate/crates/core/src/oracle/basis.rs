//! Product bases with human-readable channel labels.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ket::{projector_onto, Ket};
use super::matrix::{CMatrix, TOL};
use crate::error::{Error, Result};

/// One qubit's orthonormal basis with labels for the two channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitBasis {
    pub labels: [String; 2],
    pub vectors: [[Complex64; 2]; 2],
}

impl QubitBasis {
    pub fn computational() -> Self {
        Self {
            labels: ["0".into(), "1".into()],
            vectors: [
                [Complex64::ONE, Complex64::ZERO],
                [Complex64::ZERO, Complex64::ONE],
            ],
        }
    }

    pub fn pauli_x() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            labels: ["+".into(), "-".into()],
            vectors: [[h, h], [h, -h]],
        }
    }

    /// {(|0> + e^{i phi}|1>)/sqrt(2), (|0> - e^{i phi}|1>)/sqrt(2)}.
    pub fn phase(phi: f64, bright: &str, dark: &str) -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let e = Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, phi);
        Self {
            labels: [bright.into(), dark.into()],
            vectors: [[h, e], [h, -e]],
        }
    }

    pub fn relabeled(mut self, l0: &str, l1: &str) -> Self {
        self.labels = [l0.into(), l1.into()];
        self
    }

    fn orthonormality_deviation(&self) -> f64 {
        let dot = |a: &[Complex64; 2], b: &[Complex64; 2]| -> Complex64 {
            a[0].conj() * b[0] + a[1].conj() * b[1]
        };
        let mut dev: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((dot(&self.vectors[i], &self.vectors[j]) - expected).norm());
            }
        }
        dev
    }
}

/// Product basis over one or more qubits; `channel_names` overrides the
/// concatenated per-qubit labels (used for mode names like detector ports).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductBasis {
    pub qubit_bases: Vec<QubitBasis>,
    pub channel_names: Option<Vec<String>>,
}

impl ProductBasis {
    pub fn computational(num_qubits: usize) -> Self {
        Self {
            qubit_bases: vec![QubitBasis::computational(); num_qubits],
            channel_names: None,
        }
    }

    pub fn x_basis(num_qubits: usize) -> Self {
        Self {
            qubit_bases: vec![QubitBasis::pauli_x(); num_qubits],
            channel_names: None,
        }
    }

    pub fn single(basis: QubitBasis) -> Self {
        Self {
            qubit_bases: vec![basis],
            channel_names: None,
        }
    }

    pub fn with_channel_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: names.len(),
            });
        }
        self.channel_names = Some(names);
        Ok(self)
    }

    pub fn num_qubits(&self) -> usize {
        self.qubit_bases.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.qubit_bases.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubit_bases.is_empty() {
            return Err(Error::EmptySubsystem);
        }
        let dev = self
            .qubit_bases
            .iter()
            .map(|b| b.orthonormality_deviation())
            .fold(0.0, f64::max);
        if dev > TOL {
            return Err(Error::NonOrthonormalBasis { deviation: dev });
        }
        Ok(())
    }

    /// Label of channel `index`, with qubit 0 as the most significant bit.
    pub fn label(&self, index: usize) -> String {
        if let Some(names) = &self.channel_names {
            return names[index].clone();
        }
        let n = self.num_qubits();
        (0..n)
            .map(|q| self.qubit_bases[q].labels[(index >> (n - 1 - q)) & 1].clone())
            .collect()
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.dim()).map(|i| self.label(i)).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        (0..self.dim()).find(|&i| self.label(i) == label)
    }

    /// Full product vector of channel `index`.
    pub fn channel_vector(&self, index: usize) -> Vec<Complex64> {
        let n = self.num_qubits();
        let mut vec = vec![Complex64::ONE];
        for q in 0..n {
            let bit = (index >> (n - 1 - q)) & 1;
            let basis_vec = &self.qubit_bases[q].vectors[bit];
            let mut next = Vec::with_capacity(vec.len() * 2);
            for v in &vec {
                next.push(v * basis_vec[0]);
                next.push(v * basis_vec[1]);
            }
            vec = next;
        }
        vec
    }

    /// Projector |channel><channel| as a dense matrix.
    pub fn channel_projector(&self, index: usize) -> CMatrix {
        projector_onto(&self.channel_vector(index))
    }

    /// Unitary whose rows are the conjugated channel vectors; applying it to
    /// a ket re-expresses the amplitudes in this basis.
    pub fn analysis_matrix(&self) -> CMatrix {
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            let v = self.channel_vector(i);
            for (j, amp) in v.iter().enumerate() {
                m[(i, j)] = amp.conj();
            }
        }
        m
    }
}

/// Coefficients of `state` in a full product basis.
pub fn rebase(state: &Ket, basis: &ProductBasis) -> Result<Vec<(String, Complex64)>> {
    basis.validate()?;
    if basis.num_qubits() != state.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: state.num_qubits(),
            got: basis.num_qubits(),
        });
    }
    let qubits: Vec<usize> = (0..state.num_qubits()).collect();
    let rotated = state.apply(&basis.analysis_matrix(), &qubits)?;
    Ok((0..basis.dim())
        .map(|i| (basis.label(i), rotated.amplitude(i)))
        .collect())
}

/// Rebuild a state from coefficients expressed in a product basis.
pub fn rebase_inverse(coefficients: &[Complex64], basis: &ProductBasis) -> Result<Ket> {
    basis.validate()?;
    if coefficients.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: coefficients.len(),
        });
    }
    let dim = basis.dim();
    let mut amps = vec![Complex64::ZERO; dim];
    for (i, c) in coefficients.iter().enumerate() {
        let v = basis.channel_vector(i);
        for (j, b) in v.iter().enumerate() {
            amps[j] += c * b;
        }
    }
    Ket::new(basis.num_qubits(), amps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn computational_labels_and_vectors() {
        let basis = ProductBasis::computational(2);
        assert_eq!(basis.labels(), vec!["00", "01", "10", "11"]);
        let v = basis.channel_vector(0b10);
        assert_eq!(v[0b10], Complex64::ONE);
    }

    #[test]
    fn x_basis_vector_entries() {
        let basis = ProductBasis::x_basis(1);
        let minus = basis.channel_vector(1);
        assert!((minus[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((minus[1].re + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn rebase_identity_returns_original_amplitudes() {
        let ket = Ket::normalized(
            2,
            vec![
                Complex64::new(0.5, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(-0.5, 0.0),
            ],
        )
        .unwrap();
        let coeffs = rebase(&ket, &ProductBasis::computational(2)).unwrap();
        for (i, (_, c)) in coeffs.iter().enumerate() {
            assert!((c - ket.amplitude(i)).norm() < 1e-12);
        }
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let mut b = QubitBasis::computational();
        b.vectors[1] = [Complex64::ONE, Complex64::ZERO];
        let basis = ProductBasis::single(b);
        assert!(matches!(
            basis.validate(),
            Err(Error::NonOrthonormalBasis { .. })
        ));
    }
}
