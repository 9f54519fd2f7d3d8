//! Gate descriptors for unitary nodes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{CMatrix, TOL};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateSpec {
    Identity { num_qubits: usize },
    /// Symmetric 50/50 beam splitter, i on reflection:
    /// [[1, i], [i, 1]] / sqrt(2).
    BeamSplitter,
    /// Beam splitter embedded between two channels of a larger mode space.
    ModeBeamSplitter {
        num_qubits: usize,
        input: usize,
        output: usize,
    },
    Hadamard,
    PhaseShift { phi: f64 },
    Cnot,
    Explicit {
        num_qubits: usize,
        rows: Vec<Vec<(f64, f64)>>,
    },
}

impl GateSpec {
    pub fn num_qubits(&self) -> usize {
        match self {
            GateSpec::Identity { num_qubits } => *num_qubits,
            GateSpec::BeamSplitter | GateSpec::Hadamard | GateSpec::PhaseShift { .. } => 1,
            GateSpec::Cnot => 2,
            GateSpec::ModeBeamSplitter { num_qubits, .. } => *num_qubits,
            GateSpec::Explicit { num_qubits, .. } => *num_qubits,
        }
    }

    pub fn matrix(&self) -> Result<CMatrix> {
        let c = Complex64::new;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = match self {
            GateSpec::Identity { num_qubits } => CMatrix::identity(1 << num_qubits),
            GateSpec::BeamSplitter => {
                CMatrix::from_rows(2, vec![c(h, 0.), c(0., h), c(0., h), c(h, 0.)])?
            }
            GateSpec::ModeBeamSplitter {
                num_qubits,
                input,
                output,
            } => {
                let dim = 1 << num_qubits;
                if *input >= dim || *output >= dim || input == output {
                    return Err(Error::InvalidParams(format!(
                        "mode beam splitter channels ({input}, {output}) out of range for dim {dim}"
                    )));
                }
                let mut m = CMatrix::identity(dim);
                m[(*input, *input)] = c(h, 0.);
                m[(*output, *output)] = c(h, 0.);
                m[(*input, *output)] = c(0., h);
                m[(*output, *input)] = c(0., h);
                m
            }
            GateSpec::Hadamard => CMatrix::from_rows(2, vec![c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)])?,
            GateSpec::PhaseShift { phi } => CMatrix::from_rows(
                2,
                vec![c(1., 0.), c(0., 0.), c(0., 0.), Complex64::from_polar(1.0, *phi)],
            )?,
            GateSpec::Cnot => {
                let mut m = CMatrix::zeros(4);
                m[(0, 0)] = Complex64::ONE;
                m[(1, 1)] = Complex64::ONE;
                m[(2, 3)] = Complex64::ONE;
                m[(3, 2)] = Complex64::ONE;
                m
            }
            GateSpec::Explicit { num_qubits, rows } => {
                let dim = 1 << num_qubits;
                let mut entries = Vec::with_capacity(dim * dim);
                if rows.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: rows.len(),
                    });
                }
                for row in rows {
                    if row.len() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: row.len(),
                        });
                    }
                    entries.extend(row.iter().map(|&(re, im)| c(re, im)));
                }
                CMatrix::from_rows(dim, entries)?
            }
        };
        let dev = m.unitarity_deviation();
        if dev > TOL {
            return Err(Error::NonUnitary { deviation: dev });
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beam_splitter_is_unitary_and_squares_to_swap_phase() {
        let bs = GateSpec::BeamSplitter.matrix().unwrap();
        assert!(bs.is_unitary(1e-12));
        // Two tuned beam splitters send |0> entirely to channel 1.
        let twice = bs.mul(&bs);
        assert!(twice[(0, 0)].norm() < 1e-12);
        assert!((twice[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn explicit_gate_rejects_non_unitary() {
        let bad = GateSpec::Explicit {
            num_qubits: 1,
            rows: vec![vec![(1., 0.), (0., 0.)], vec![(1., 0.), (0., 0.)]],
        };
        assert!(matches!(bad.matrix(), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn mode_beam_splitter_embeds_identity_elsewhere() {
        let m = GateSpec::ModeBeamSplitter {
            num_qubits: 2,
            input: 0,
            output: 2,
        }
        .matrix()
        .unwrap();
        assert!(m.is_unitary(1e-12));
        assert_eq!(m[(1, 1)], Complex64::ONE);
        assert_eq!(m[(3, 3)], Complex64::ONE);
        assert!((m[(2, 0)] - Complex64::new(0., std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-12);
    }
}
