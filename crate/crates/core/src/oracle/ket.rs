//! Exact state vectors. Qubit 0 is the leftmost character of a basis label
//! and the most significant bit of an amplitude index, so the label "01"
//! maps to index 0b01.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{CMatrix, TOL};
use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ket {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Ket {
    /// Wrap an amplitude vector, enforcing dimension and normalization.
    pub fn new(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange(num_qubits));
        }
        if amplitudes.len() != 1 << num_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << num_qubits,
                got: amplitudes.len(),
            });
        }
        let ket = Self {
            num_qubits,
            amplitudes,
        };
        let norm = ket.norm();
        if (norm - 1.0).abs() > TOL {
            return Err(Error::NonNormalizable { norm });
        }
        Ok(ket)
    }

    /// Normalize an arbitrary nonzero amplitude vector.
    pub fn normalized(num_qubits: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-15 {
            return Err(Error::NonNormalizable { norm });
        }
        for a in amplitudes.iter_mut() {
            *a /= norm;
        }
        Self::new(num_qubits, amplitudes)
    }

    /// Computational basis state from a bit string such as "0110".
    pub fn basis_string(label: &str) -> Result<Self> {
        let n = label.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange(n));
        }
        let mut index = 0usize;
        for ch in label.chars() {
            index <<= 1;
            match ch {
                '0' => {}
                '1' => index |= 1,
                _ => {
                    return Err(Error::InvalidParams(format!(
                        "basis label must be over {{0,1}}, got {label:?}"
                    )))
                }
            }
        }
        let mut amps = vec![Complex64::ZERO; 1 << n];
        amps[index] = Complex64::ONE;
        Self::new(n, amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Ket) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn tensor(&self, other: &Ket) -> Result<Self> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(Error::QubitCountOutOfRange(n));
        }
        let mut amps = Vec::with_capacity(1 << n);
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        Ok(Self {
            num_qubits: n,
            amplitudes: amps,
        })
    }

    pub fn max_abs_diff(&self, other: &Ket) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        for &q in qubits {
            if q >= self.num_qubits {
                return Err(Error::QubitIndexOutOfRange {
                    index: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        let mut sorted = qubits.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != qubits.len() {
            return Err(Error::InvalidParams(format!(
                "duplicate qubit index in {qubits:?}"
            )));
        }
        Ok(())
    }

    /// Apply an arbitrary linear operator on the listed qubits. The first
    /// listed qubit is the most significant bit of the operator's index.
    /// Does not renormalize, so projectors yield sub-normalized vectors.
    pub fn apply(&self, op: &CMatrix, qubits: &[usize]) -> Result<Ket> {
        self.check_qubits(qubits)?;
        let k = qubits.len();
        if op.dim() != 1 << k {
            return Err(Error::DimensionMismatch {
                expected: 1 << k,
                got: op.dim(),
            });
        }
        let n = self.num_qubits;
        let shifts: Vec<usize> = qubits.iter().map(|&q| n - 1 - q).collect();
        let mut out = vec![Complex64::ZERO; self.amplitudes.len()];
        for (i, &amp) in self.amplitudes.iter().enumerate() {
            if amp == Complex64::ZERO {
                continue;
            }
            let mut sub_in = 0usize;
            let mut base = i;
            for &sh in &shifts {
                sub_in = (sub_in << 1) | ((i >> sh) & 1);
                base &= !(1 << sh);
            }
            for sub_out in 0..(1 << k) {
                let entry = op[(sub_out, sub_in)];
                if entry == Complex64::ZERO {
                    continue;
                }
                let mut j = base;
                for (bit_pos, &sh) in shifts.iter().enumerate() {
                    if (sub_out >> (k - 1 - bit_pos)) & 1 == 1 {
                        j |= 1 << sh;
                    }
                }
                out[j] += entry * amp;
            }
        }
        Ok(Ket {
            num_qubits: n,
            amplitudes: out,
        })
    }

    /// Overlap of the state with a product vector placed on the listed
    /// qubits, i.e. the squared norm of the projection onto it.
    pub fn projection_weight(&self, vector: &[Complex64], qubits: &[usize]) -> Result<f64> {
        let k = qubits.len();
        if vector.len() != 1 << k {
            return Err(Error::DimensionMismatch {
                expected: 1 << k,
                got: vector.len(),
            });
        }
        let proj = projector_onto(vector);
        Ok(self.apply(&proj, qubits)?.norm_sqr())
    }
}

/// |v><v| for a (not necessarily normalized) vector.
pub fn projector_onto(vector: &[Complex64]) -> CMatrix {
    let dim = vector.len();
    let mut m = CMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = vector[i] * vector[j].conj();
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_string_places_amplitude_at_expected_index() {
        let ket = Ket::basis_string("01").unwrap();
        assert_eq!(ket.amplitude(0b01), Complex64::ONE);
        assert_eq!(ket.amplitude(0b00), Complex64::ZERO);
        // Single "0" is the trivial example from the state preparation table.
        let zero = Ket::basis_string("0").unwrap();
        assert_eq!(zero.amplitudes(), &[Complex64::ONE, Complex64::ZERO]);
    }

    #[test]
    fn basis_string_rejects_bad_chars() {
        assert!(Ket::basis_string("0a").is_err());
        assert!(Ket::basis_string("").is_err());
    }

    #[test]
    fn new_rejects_unnormalized() {
        let err = Ket::new(1, vec![c(1., 0.), c(1., 0.)]);
        assert!(err.is_err());
        let err = Ket::normalized(1, vec![c(0., 0.), c(0., 0.)]);
        assert!(matches!(err, Err(Error::NonNormalizable { .. })));
    }

    #[test]
    fn apply_on_selected_qubit_matches_manual_expansion() {
        // X on qubit 1 of |00> gives |01>.
        let x = CMatrix::from_rows(2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap();
        let ket = Ket::basis_string("00").unwrap();
        let out = ket.apply(&x, &[1]).unwrap();
        assert_eq!(out.amplitude(0b01), Complex64::ONE);
        // X on qubit 0 gives |10>.
        let out = ket.apply(&x, &[0]).unwrap();
        assert_eq!(out.amplitude(0b10), Complex64::ONE);
    }

    #[test]
    fn apply_checks_dimensions_and_indices() {
        let x = CMatrix::identity(2);
        let ket = Ket::basis_string("00").unwrap();
        assert!(ket.apply(&x, &[3]).is_err());
        assert!(ket.apply(&x, &[0, 1]).is_err());
        assert!(ket.apply(&x, &[0, 0]).is_err());
    }

    #[test]
    fn projection_weight_of_bell_component() {
        let amps = vec![c(0.8, 0.), c(0., 0.), c(0., 0.), c(0.6, 0.)];
        let ket = Ket::new(2, amps).unwrap();
        let w = ket
            .projection_weight(&[Complex64::ONE, Complex64::ZERO], &[0])
            .unwrap();
        assert!((w - 0.64).abs() < 1e-12);
    }
}
