//! Measurement contexts: mutually commuting Pauli observables measured
//! jointly, with a fixed eigenvalue-product parity.

use serde::{Deserialize, Serialize};

use super::matrix::CMatrix;
use super::pauli::PauliWord;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementContext {
    observables: [PauliWord; 3],
    parity: i8,
}

impl MeasurementContext {
    /// Validates commutation and the operator identity
    /// `O1 * O2 * O3 = parity * I` exactly, using integer Pauli phases.
    pub fn new(observables: [PauliWord; 3], parity: i8) -> Result<Self> {
        for i in 0..3 {
            for j in (i + 1)..3 {
                if !observables[i].commutes_with(&observables[j]) {
                    return Err(Error::NonCommutingObservables(
                        observables[i].to_string(),
                        observables[j].to_string(),
                    ));
                }
            }
        }
        let (p1, w12) = observables[0].mul(&observables[1]);
        let (p2, w) = w12.mul(&observables[2]);
        let phase = (p1 + p2) % 4;
        let product_sign = match phase {
            0 => 1i8,
            2 => -1i8,
            _ => {
                return Err(Error::ContextParityMismatch {
                    got: format!("i^{phase} * {w}"),
                    declared: parity,
                })
            }
        };
        if !w.is_identity() || product_sign != parity {
            return Err(Error::ContextParityMismatch {
                got: format!("{}{}", if product_sign > 0 { "+" } else { "-" }, w),
                declared: parity,
            });
        }
        Ok(Self {
            observables,
            parity,
        })
    }

    pub fn observables(&self) -> &[PauliWord; 3] {
        &self.observables
    }

    pub fn parity(&self) -> i8 {
        self.parity
    }

    pub fn num_qubits(&self) -> usize {
        self.observables[0].len()
    }

    /// Eigenvalue triple of outcome `k` in the fixed enumeration order
    /// k = 0..4 over (v1, v2) = (+,+), (+,-), (-,+), (-,-); the third value
    /// is forced by the parity.
    pub fn triple(&self, k: usize) -> [i8; 3] {
        let v1 = if k & 0b10 == 0 { 1 } else { -1 };
        let v2 = if k & 0b01 == 0 { 1 } else { -1 };
        [v1, v2, self.parity * v1 * v2]
    }

    pub fn triple_label(&self, k: usize) -> String {
        self.triple(k)
            .iter()
            .map(|&v| if v > 0 { '+' } else { '-' })
            .collect()
    }

    /// The four joint eigenprojectors, labeled by eigenvalue triples.
    /// Projectors are used directly, so no eigenvector phase convention is
    /// ever needed.
    pub fn outcomes(&self) -> Vec<(String, CMatrix)> {
        let dim = 1 << self.num_qubits();
        let id = CMatrix::identity(dim);
        let m1 = self.observables[0].matrix();
        let m2 = self.observables[1].matrix();
        (0..4)
            .map(|k| {
                let [v1, v2, _] = self.triple(k);
                let sign = |v: i8| num_complex::Complex64::new(v as f64, 0.0);
                let p1 = id.add(&m1.scale(sign(v1))).scale(0.5.into());
                let p2 = id.add(&m2.scale(sign(v2))).scale(0.5.into());
                (self.triple_label(k), p1.mul(&p2))
            })
            .collect()
    }

    /// Projector for an arbitrary triple, including parity-violating ones.
    pub fn joint_projector(&self, values: [i8; 3]) -> CMatrix {
        let dim = 1 << self.num_qubits();
        let id = CMatrix::identity(dim);
        let mut p = id.clone();
        for (word, &v) in self.observables.iter().zip(values.iter()) {
            let term = id
                .add(&word.matrix().scale(num_complex::Complex64::new(v as f64, 0.0)))
                .scale(0.5.into());
            p = p.mul(&term);
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(a: &str, b: &str, c: &str, parity: i8) -> Result<MeasurementContext> {
        MeasurementContext::new(
            [
                PauliWord::parse(a).unwrap(),
                PauliWord::parse(b).unwrap(),
                PauliWord::parse(c).unwrap(),
            ],
            parity,
        )
    }

    #[test]
    fn accepts_valid_contexts() {
        assert!(ctx("ZI", "IZ", "ZZ", 1).is_ok());
        assert!(ctx("ZZ", "XX", "YY", -1).is_ok());
    }

    #[test]
    fn rejects_non_commuting_or_wrong_parity() {
        assert!(matches!(
            ctx("ZI", "XI", "ZZ", 1),
            Err(Error::NonCommutingObservables(..))
        ));
        assert!(matches!(
            ctx("ZI", "IZ", "ZZ", -1),
            Err(Error::ContextParityMismatch { .. })
        ));
        assert!(matches!(
            ctx("ZZ", "XX", "YY", 1),
            Err(Error::ContextParityMismatch { .. })
        ));
    }

    #[test]
    fn projectors_resolve_identity_and_respect_triples() {
        let c = ctx("ZI", "IZ", "ZZ", 1).unwrap();
        let outcomes = c.outcomes();
        assert_eq!(outcomes.len(), 4);
        let sum = outcomes
            .iter()
            .fold(CMatrix::zeros(4), |acc, (_, p)| acc.add(p));
        assert!(sum.max_abs_diff(&CMatrix::identity(4)) < 1e-12);
        for k in 0..4 {
            let t = c.triple(k);
            assert_eq!(t[0] * t[1] * t[2], c.parity());
        }
    }
}
