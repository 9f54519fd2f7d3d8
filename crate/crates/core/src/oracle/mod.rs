//! Exact state-vector quantum mechanics on a handful of qubits: the ground
//! truth every interpretation engine is checked against.
//!
//! All arithmetic is complex double precision with a global tolerance of
//! 1e-9; quantities that must be counted exactly (parities, assignments)
//! live in `contextuality` and use integers.

mod basis;
mod context;
mod density;
mod gates;
mod ket;
mod matrix;
mod pauli;
mod prep;

pub use basis::{rebase, rebase_inverse, ProductBasis, QubitBasis};
pub use context::MeasurementContext;
pub use density::{partial_trace, DensityMatrix};
pub use gates::GateSpec;
pub use ket::{projector_onto, Ket, MAX_QUBITS};
pub use matrix::{CMatrix, TOL};
pub use pauli::{Pauli, PauliWord};
pub use prep::{prepare_state, StatePrep};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Probabilities keyed by outcome label; sums to one within tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    entries: BTreeMap<String, f64>,
}

impl OutcomeDistribution {
    pub fn new(entries: BTreeMap<String, f64>) -> Result<Self> {
        let mut total = 0.0;
        for (label, &p) in &entries {
            if p < -TOL {
                return Err(Error::InvalidParams(format!(
                    "negative probability {p} for outcome {label}"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > TOL {
            return Err(Error::NonNormalizable { norm: total });
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    pub fn probability(&self, label: &str) -> f64 {
        self.entries.get(label).copied().unwrap_or(0.0)
    }

    pub fn total_variation(&self, other: &OutcomeDistribution) -> f64 {
        let mut labels: Vec<&String> = self.entries.keys().collect();
        for l in other.entries.keys() {
            if !self.entries.contains_key(l) {
                labels.push(l);
            }
        }
        0.5 * labels
            .iter()
            .map(|l| (self.probability(l) - other.probability(l)).abs())
            .sum::<f64>()
    }
}

/// Born-rule distribution of a full product-basis measurement.
pub fn born_distribution(state: &Ket, basis: &ProductBasis) -> Result<OutcomeDistribution> {
    let coeffs = rebase(state, basis)?;
    let entries = coeffs
        .into_iter()
        .map(|(label, c)| (label, c.norm_sqr()))
        .collect();
    OutcomeDistribution::new(entries)
}

/// Distribution over the four eigenvalue triples of a context measured on
/// the listed qubits. Triples violating the context parity are not listed;
/// their probability is exactly zero because the projectors annihilate them.
pub fn measure_context(
    state: &Ket,
    ctx: &MeasurementContext,
    qubits: &[usize],
) -> Result<OutcomeDistribution> {
    if ctx.num_qubits() != qubits.len() {
        return Err(Error::DimensionMismatch {
            expected: ctx.num_qubits(),
            got: qubits.len(),
        });
    }
    let entries = ctx
        .outcomes()
        .into_iter()
        .map(|(label, proj)| {
            let weight = state.apply(&proj, qubits)?.norm_sqr();
            Ok((label, weight))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    OutcomeDistribution::new(entries)
}

/// Apply a unitary gate to the listed qubits, preserving the norm.
pub fn apply_unitary(state: &Ket, gate: &GateSpec, qubits: &[usize]) -> Result<Ket> {
    let m = gate.matrix()?;
    let out = state.apply(&m, qubits)?;
    // The gate was validated; any norm drift here is a programming error.
    debug_assert!((out.norm() - 1.0).abs() < 1e-9);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bell_45() -> Ket {
        StatePrep::BellPair { a: 0.8, b: 0.6 }.prepare().unwrap()
    }

    #[test]
    fn born_distribution_of_bell_pair_computational() {
        let d = born_distribution(&bell_45(), &ProductBasis::computational(2)).unwrap();
        assert_abs_diff_eq!(d.probability("00"), 16.0 / 25.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.probability("11"), 9.0 / 25.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.probability("01"), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn born_distribution_of_plus_state() {
        let plus = StatePrep::Uniform { num_qubits: 1 }.prepare().unwrap();
        let d = born_distribution(&plus, &ProductBasis::computational(1)).unwrap();
        assert_abs_diff_eq!(d.probability("0"), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.probability("1"), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn born_distribution_of_paired_state_is_uniform_on_matching_labels() {
        let ket = StatePrep::PairedFourQubit.prepare().unwrap();
        let d = born_distribution(&ket, &ProductBasis::computational(4)).unwrap();
        for label in ["0000", "0101", "1010", "1111"] {
            assert_abs_diff_eq!(d.probability(label), 0.25, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(d.probability("0110"), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rebase_bell_pair_into_x_basis_gives_expected_coefficients() {
        let coeffs = rebase(&bell_45(), &ProductBasis::x_basis(2)).unwrap();
        let by_label: BTreeMap<String, f64> =
            coeffs.iter().map(|(l, c)| (l.clone(), c.re)).collect();
        assert_abs_diff_eq!(by_label["++"], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(by_label["+-"], 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(by_label["-+"], 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(by_label["--"], 0.7, epsilon = 1e-12);
        // Per-qubit marginal in the x basis: (7/10)^2 + (1/10)^2 = 1/2.
        assert_abs_diff_eq!(0.7f64.powi(2) + 0.1f64.powi(2), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn measure_context_on_z_product_state() {
        let ctx = MeasurementContext::new(
            [
                PauliWord::parse("ZI").unwrap(),
                PauliWord::parse("IZ").unwrap(),
                PauliWord::parse("ZZ").unwrap(),
            ],
            1,
        )
        .unwrap();
        let zz = Ket::basis_string("00").unwrap();
        let d = measure_context(&zz, &ctx, &[0, 1]).unwrap();
        assert_abs_diff_eq!(d.probability("+++"), 1.0, epsilon = 1e-12);

        let d = measure_context(&bell_45(), &ctx, &[0, 1]).unwrap();
        assert_abs_diff_eq!(d.probability("+++"), 16.0 / 25.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.probability("--+"), 9.0 / 25.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        let paired = StatePrep::PairedFourQubit.prepare().unwrap();
        let dm = partial_trace(&paired, &[0, 1]).unwrap();
        let quarter = CMatrix::identity(4).scale(num_complex::Complex64::new(0.25, 0.0));
        assert!(dm.entries().max_abs_diff(&quarter) < 1e-12);

        let dm = partial_trace(&bell_45(), &[0]).unwrap();
        assert_abs_diff_eq!(dm.entries()[(0, 0)].re, 16.0 / 25.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dm.entries()[(1, 1)].re, 9.0 / 25.0, epsilon = 1e-12);
        assert!(dm.entries()[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn beam_splitter_interference_examples() {
        let upper = Ket::basis_string("0").unwrap();
        let once = apply_unitary(&upper, &GateSpec::BeamSplitter, &[0]).unwrap();
        assert_abs_diff_eq!(once.amplitude(0).norm_sqr(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(once.amplitude(1).norm_sqr(), 0.5, epsilon = 1e-12);
        // Tuned pair: all amplitude on one output port.
        let twice = apply_unitary(&once, &GateSpec::BeamSplitter, &[0]).unwrap();
        assert_abs_diff_eq!(twice.amplitude(0).norm_sqr(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(twice.amplitude(1).norm_sqr(), 1.0, epsilon = 1e-12);
        // Identity leaves the state alone.
        let same = apply_unitary(&once, &GateSpec::Identity { num_qubits: 1 }, &[0]).unwrap();
        assert!(same.max_abs_diff(&once) < 1e-12);
    }

    #[test]
    fn rebase_round_trip_restores_amplitudes() {
        let state = bell_45();
        let basis = ProductBasis::x_basis(2);
        let coeffs: Vec<_> = rebase(&state, &basis)
            .unwrap()
            .into_iter()
            .map(|(_, c)| c)
            .collect();
        let back = rebase_inverse(&coeffs, &basis).unwrap();
        assert!(back.max_abs_diff(&state) < 1e-9);
    }
}
