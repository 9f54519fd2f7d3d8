//! Pauli words with exact (integer-phase) multiplication and commutation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

use super::matrix::CMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMatrix {
        let c = Complex64::new;
        let rows = match self {
            Pauli::I => vec![c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)],
            Pauli::X => vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)],
            Pauli::Y => vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)],
            Pauli::Z => vec![c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)],
        };
        CMatrix::from_rows(2, rows).unwrap()
    }

    /// Single-letter product with the phase as a power of i.
    fn mul(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, X) => (3, Z),
            (Y, Z) => (1, X),
            (Z, Y) => (3, X),
            (Z, X) => (1, Y),
            (X, Z) => (3, Y),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliWord {
    letters: Vec<Pauli>,
}

impl PauliWord {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters }
    }

    /// Parse a word like "ZI" or "YY".
    pub fn parse(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|ch| match ch {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(Error::InvalidParams(format!(
                    "invalid Pauli letter {ch:?} in {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(Error::InvalidParams("empty Pauli word".into()));
        }
        Ok(Self { letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Exact commutation check: words commute iff the number of positions
    /// with distinct non-identity letters is even.
    pub fn commutes_with(&self, other: &PauliWord) -> bool {
        assert_eq!(self.len(), other.len(), "Pauli word length mismatch");
        let anticommuting = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(&a, &b)| a != Pauli::I && b != Pauli::I && a != b)
            .count();
        anticommuting % 2 == 0
    }

    /// Exact product; the phase is returned as a power of i (0..=3).
    pub fn mul(&self, other: &PauliWord) -> (u8, PauliWord) {
        assert_eq!(self.len(), other.len(), "Pauli word length mismatch");
        let mut phase = 0u8;
        let mut letters = Vec::with_capacity(self.len());
        for (&a, &b) in self.letters.iter().zip(&other.letters) {
            let (p, l) = a.mul(b);
            phase = (phase + p) % 4;
            letters.push(l);
        }
        (phase, PauliWord { letters })
    }

    pub fn matrix(&self) -> CMatrix {
        let mut m = CMatrix::identity(1);
        for &p in &self.letters {
            m = m.kron(&p.matrix());
        }
        m
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{p:?}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_products_match_matrix_products() {
        let words = ["ZI", "IZ", "ZZ", "IX", "XI", "XX", "ZX", "XZ", "YY"];
        for a in &words {
            for b in &words {
                let wa = PauliWord::parse(a).unwrap();
                let wb = PauliWord::parse(b).unwrap();
                let (phase, prod) = wa.mul(&wb);
                let phase_c = Complex64::new(0.0, 1.0).powu(phase as u32);
                let lhs = wa.matrix().mul(&wb.matrix());
                let rhs = prod.matrix().scale(phase_c);
                assert!(
                    lhs.max_abs_diff(&rhs) < 1e-12,
                    "product mismatch for {a} * {b}"
                );
                // Commutation flag agrees with the matrices too.
                let ba = wb.matrix().mul(&wa.matrix());
                let commutes = lhs.max_abs_diff(&ba) < 1e-12;
                assert_eq!(commutes, wa.commutes_with(&wb), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        let w = PauliWord::parse("XYZI").unwrap();
        assert_eq!(w.to_string(), "XYZI");
        assert!(PauliWord::parse("AB").is_err());
        assert!(PauliWord::parse("").is_err());
    }
}
