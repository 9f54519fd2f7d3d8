//! Named state preparations used by the scenario registry.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ket::Ket;
use crate::error::Result;

/// Serializable descriptor for the states a source node can prepare.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatePrep {
    /// Two maximally entangled pairs interleaved over four qubits:
    /// qubit 0 with qubit 2, and qubit 1 with qubit 3.
    PairedFourQubit,
    /// a|00> + b|11> on two qubits.
    BellPair { a: f64, b: f64 },
    /// a|0> + b|1> on one qubit.
    Qubit { a: f64, b: f64 },
    /// Computational basis state from a bit string.
    Basis { label: String },
    /// Uniform superposition over all basis states.
    Uniform { num_qubits: usize },
    /// Explicit amplitudes as (re, im) pairs.
    Explicit {
        num_qubits: usize,
        amplitudes: Vec<(f64, f64)>,
    },
}

impl StatePrep {
    pub fn prepare(&self) -> Result<Ket> {
        match self {
            StatePrep::PairedFourQubit => {
                let mut amps = vec![Complex64::ZERO; 16];
                // Nonzero exactly where qubit0 == qubit2 and qubit1 == qubit3.
                for (q0, q1) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
                    let idx = (q0 << 3) | (q1 << 2) | (q0 << 1) | q1;
                    amps[idx] = Complex64::new(0.5, 0.0);
                }
                Ket::new(4, amps)
            }
            StatePrep::BellPair { a, b } => {
                let mut amps = vec![Complex64::ZERO; 4];
                amps[0b00] = Complex64::new(*a, 0.0);
                amps[0b11] = Complex64::new(*b, 0.0);
                Ket::new(2, amps)
            }
            StatePrep::Qubit { a, b } => Ket::new(
                1,
                vec![Complex64::new(*a, 0.0), Complex64::new(*b, 0.0)],
            ),
            StatePrep::Basis { label } => Ket::basis_string(label),
            StatePrep::Uniform { num_qubits } => {
                let dim = 1usize << num_qubits;
                let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
                Ket::new(*num_qubits, vec![amp; dim])
            }
            StatePrep::Explicit {
                num_qubits,
                amplitudes,
            } => {
                let amps = amplitudes
                    .iter()
                    .map(|&(re, im)| Complex64::new(re, im))
                    .collect();
                Ket::new(*num_qubits, amps)
            }
        }
    }

    /// Short name shown in hidden-variable tables.
    pub fn display_name(&self) -> String {
        match self {
            StatePrep::PairedFourQubit => "paired_four_qubit".into(),
            StatePrep::BellPair { a, b } => format!("bell_pair({a},{b})"),
            StatePrep::Qubit { a, b } => format!("qubit({a},{b})"),
            StatePrep::Basis { label } => format!("basis({label})"),
            StatePrep::Uniform { num_qubits } => format!("uniform({num_qubits})"),
            StatePrep::Explicit { num_qubits, .. } => format!("explicit({num_qubits})"),
        }
    }
}

/// Build any registered state.
pub fn prepare_state(spec: &StatePrep) -> Result<Ket> {
    spec.prepare()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_four_qubit_has_half_amplitude_on_matching_labels() {
        let ket = StatePrep::PairedFourQubit.prepare().unwrap();
        for idx in 0..16usize {
            let q0 = (idx >> 3) & 1;
            let q1 = (idx >> 2) & 1;
            let q2 = (idx >> 1) & 1;
            let q3 = idx & 1;
            let expected = if q0 == q2 && q1 == q3 { 0.5 } else { 0.0 };
            assert!(
                (ket.amplitude(idx) - Complex64::new(expected, 0.0)).norm() < 1e-12,
                "index {idx:04b}"
            );
        }
    }

    #[test]
    fn bell_pair_amplitudes() {
        let ket = StatePrep::BellPair { a: 0.8, b: 0.6 }.prepare().unwrap();
        assert_eq!(ket.amplitude(0b00), Complex64::new(0.8, 0.0));
        assert_eq!(ket.amplitude(0b11), Complex64::new(0.6, 0.0));
        assert_eq!(ket.amplitude(0b01), Complex64::ZERO);
    }

    #[test]
    fn degenerate_descriptors_error() {
        assert!(StatePrep::BellPair { a: 0.0, b: 0.0 }.prepare().is_err());
        assert!(StatePrep::Explicit {
            num_qubits: 1,
            amplitudes: vec![(0.0, 0.0), (0.0, 0.0)],
        }
        .prepare()
        .is_err());
        // Dimension mismatch.
        assert!(StatePrep::Explicit {
            num_qubits: 2,
            amplitudes: vec![(1.0, 0.0), (0.0, 0.0)],
        }
        .prepare()
        .is_err());
    }
}
