//! The Peres-Mermin square and the exhaustive proof that no noncontextual
//! eigenvalue assignment satisfies all six of its parity constraints.
//!
//! Assignments are pure integer arithmetic; nothing here depends on float
//! tolerances. The oracle is only used to cross-check the operator algebra.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{CMatrix, MeasurementContext, PauliWord};

/// 3x3 grid of two-qubit Pauli observables with row and column parities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeresMerminSquare {
    cells: [[PauliWord; 3]; 3],
    row_parities: [i8; 3],
    col_parities: [i8; 3],
}

/// One candidate hidden-variable table: a sign for each of the nine cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub values: [i8; 9],
}

impl Assignment {
    /// Decode assignment `index` (0..512) as a sign pattern.
    pub fn from_index(index: usize) -> Self {
        let mut values = [1i8; 9];
        for (bit, v) in values.iter_mut().enumerate() {
            if (index >> bit) & 1 == 1 {
                *v = -1;
            }
        }
        Self { values }
    }

    pub fn value(&self, row: usize, col: usize) -> i8 {
        self.values[row * 3 + col]
    }
}

/// Which of the six measurement contexts of the square is meant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContextIndex {
    Row(usize),
    Col(usize),
}

impl ContextIndex {
    pub fn all() -> [ContextIndex; 6] {
        [
            ContextIndex::Row(0),
            ContextIndex::Row(1),
            ContextIndex::Row(2),
            ContextIndex::Col(0),
            ContextIndex::Col(1),
            ContextIndex::Col(2),
        ]
    }
}

impl PeresMerminSquare {
    /// Validates that each row and column forms a measurement context and
    /// that the six parities multiply to -1.
    pub fn new(
        cells: [[PauliWord; 3]; 3],
        row_parities: [i8; 3],
        col_parities: [i8; 3],
    ) -> Result<Self> {
        let square = Self {
            cells,
            row_parities,
            col_parities,
        };
        for index in ContextIndex::all() {
            square.context(index)?;
        }
        let product: i8 = row_parities.iter().chain(col_parities.iter()).product();
        if product != -1 {
            return Err(Error::InvalidParams(format!(
                "six parities multiply to {product}, expected -1"
            )));
        }
        Ok(square)
    }

    /// Build a square without physical validation. Used for counterfactual
    /// counting, e.g. "what if the column-3 parity were +1" — such a square
    /// does not correspond to any Pauli grid, but the assignment search is
    /// still well defined on it.
    pub fn hypothetical(
        cells: [[PauliWord; 3]; 3],
        row_parities: [i8; 3],
        col_parities: [i8; 3],
    ) -> Self {
        Self {
            cells,
            row_parities,
            col_parities,
        }
    }

    /// The standard square with one row/column parity flipped.
    pub fn relaxed_standard() -> Self {
        let sq = Self::standard();
        Self::hypothetical(sq.cells, [1, 1, 1], [1, 1, 1])
    }

    /// The standard square: rows (ZI, IZ, ZZ), (IX, XI, XX), (ZX, XZ, YY),
    /// row parities all +1 and column parities (+1, +1, -1).
    pub fn standard() -> Self {
        let w = |s: &str| PauliWord::parse(s).unwrap();
        Self::new(
            [
                [w("ZI"), w("IZ"), w("ZZ")],
                [w("IX"), w("XI"), w("XX")],
                [w("ZX"), w("XZ"), w("YY")],
            ],
            [1, 1, 1],
            [1, 1, -1],
        )
        .expect("standard square is valid")
    }

    pub fn cell(&self, row: usize, col: usize) -> &PauliWord {
        &self.cells[row][col]
    }

    pub fn row_parities(&self) -> [i8; 3] {
        self.row_parities
    }

    pub fn col_parities(&self) -> [i8; 3] {
        self.col_parities
    }

    pub fn parity(&self, index: ContextIndex) -> i8 {
        match index {
            ContextIndex::Row(r) => self.row_parities[r],
            ContextIndex::Col(c) => self.col_parities[c],
        }
    }

    /// Build the measurement context for a row or column.
    pub fn context(&self, index: ContextIndex) -> Result<MeasurementContext> {
        let (observables, parity) = match index {
            ContextIndex::Row(r) => (
                [
                    self.cells[r][0].clone(),
                    self.cells[r][1].clone(),
                    self.cells[r][2].clone(),
                ],
                self.row_parities[r],
            ),
            ContextIndex::Col(c) => (
                [
                    self.cells[0][c].clone(),
                    self.cells[1][c].clone(),
                    self.cells[2][c].clone(),
                ],
                self.col_parities[c],
            ),
        };
        MeasurementContext::new(observables, parity)
    }

    /// Operator product of a context as a dense matrix (oracle cross-check).
    pub fn context_operator_product(&self, index: ContextIndex) -> CMatrix {
        let words: Vec<&PauliWord> = match index {
            ContextIndex::Row(r) => self.cells[r].iter().collect(),
            ContextIndex::Col(c) => (0..3).map(|r| &self.cells[r][c]).collect(),
        };
        words
            .iter()
            .fold(CMatrix::identity(4), |acc, w| acc.mul(&w.matrix()))
    }

    /// The nine cell values an assignment must explain, in reading order.
    pub fn cells_flat(&self) -> Vec<PauliWord> {
        self.cells.iter().flatten().cloned().collect()
    }

    /// Permute rows and columns; the impossibility count is invariant.
    pub fn permuted(&self, row_order: [usize; 3], col_order: [usize; 3]) -> Result<Self> {
        let mut cells: Vec<Vec<PauliWord>> = Vec::new();
        for &r in &row_order {
            cells.push(col_order.iter().map(|&c| self.cells[r][c].clone()).collect());
        }
        let cells: [[PauliWord; 3]; 3] = [
            [cells[0][0].clone(), cells[0][1].clone(), cells[0][2].clone()],
            [cells[1][0].clone(), cells[1][1].clone(), cells[1][2].clone()],
            [cells[2][0].clone(), cells[2][1].clone(), cells[2][2].clone()],
        ];
        Self::new(
            cells,
            [
                self.row_parities[row_order[0]],
                self.row_parities[row_order[1]],
                self.row_parities[row_order[2]],
            ],
            [
                self.col_parities[col_order[0]],
                self.col_parities[col_order[1]],
                self.col_parities[col_order[2]],
            ],
        )
    }
}

/// True iff the assignment's three values in the context multiply to the
/// context's declared parity.
pub fn context_parity_holds(
    assignment: &Assignment,
    square: &PeresMerminSquare,
    index: ContextIndex,
) -> bool {
    let product: i8 = match index {
        ContextIndex::Row(r) => (0..3).map(|c| assignment.value(r, c)).product(),
        ContextIndex::Col(c) => (0..3).map(|r| assignment.value(r, c)).product(),
    };
    product == square.parity(index)
}

/// Result of the exhaustive 512-assignment search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchResult {
    pub total_assignments: usize,
    pub satisfying: usize,
    pub witnesses: Vec<Assignment>,
}

/// Test all 2^9 sign assignments against the six context constraints.
pub fn search_assignments(square: &PeresMerminSquare) -> SearchResult {
    search_assignments_subset(square, &ContextIndex::all())
}

/// Same search restricted to a subset of contexts.
pub fn search_assignments_subset(
    square: &PeresMerminSquare,
    contexts: &[ContextIndex],
) -> SearchResult {
    let mut witnesses = Vec::new();
    for index in 0..512usize {
        let a = Assignment::from_index(index);
        if contexts.iter().all(|&c| context_parity_holds(&a, square, c)) {
            witnesses.push(a);
        }
    }
    SearchResult {
        total_assignments: 512,
        satisfying: witnesses.len(),
        witnesses,
    }
}

/// The two contradictory products at the heart of the impossibility proof:
/// multiplying the six context constraints gives the product of the six
/// parities, while any sign assignment contributes each cell twice (once in
/// its row, once in its column) and therefore multiplies to +1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContradictionReport {
    pub parity_product: i8,
    pub assignment_square_product: i8,
    pub contradiction: bool,
}

pub fn parity_product_argument(square: &PeresMerminSquare) -> ContradictionReport {
    let parity_product: i8 = square
        .row_parities
        .iter()
        .chain(square.col_parities.iter())
        .product();
    // Every cell value appears squared, so the product is +1 for any signs.
    let assignment_square_product = 1i8;
    ContradictionReport {
        parity_product,
        assignment_square_product,
        contradiction: parity_product != assignment_square_product,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn standard_square_row_and_column_operator_products() {
        let sq = PeresMerminSquare::standard();
        let id = CMatrix::identity(4);
        let neg_id = id.scale(Complex64::new(-1.0, 0.0));
        for r in 0..3 {
            let prod = sq.context_operator_product(ContextIndex::Row(r));
            assert!(prod.max_abs_diff(&id) < 1e-12, "row {r}");
        }
        for c in 0..2 {
            let prod = sq.context_operator_product(ContextIndex::Col(c));
            assert!(prod.max_abs_diff(&id) < 1e-12, "col {c}");
        }
        let col3 = sq.context_operator_product(ContextIndex::Col(2));
        assert!(col3.max_abs_diff(&neg_id) < 1e-12);
        // Product of the six parities is -1.
        let product: i8 = sq
            .row_parities()
            .iter()
            .chain(sq.col_parities().iter())
            .product();
        assert_eq!(product, -1);
    }

    #[test]
    fn context_parity_holds_examples() {
        let sq = PeresMerminSquare::standard();
        let all_plus = Assignment { values: [1; 9] };
        assert!(!context_parity_holds(&all_plus, &sq, ContextIndex::Col(2)));
        assert!(context_parity_holds(&all_plus, &sq, ContextIndex::Row(0)));
        let mut values = [1i8; 9];
        values[8] = -1; // cell (3,3) flipped: column-3 product is now -1.
        let a = Assignment { values };
        assert!(context_parity_holds(&a, &sq, ContextIndex::Col(2)));
    }

    #[test]
    fn exhaustive_search_finds_no_assignment() {
        let result = search_assignments(&PeresMerminSquare::standard());
        assert_eq!(result.total_assignments, 512);
        assert_eq!(result.satisfying, 0);
        assert!(result.witnesses.is_empty());
    }

    #[test]
    fn relaxed_square_admits_assignments() {
        // Flipping the column-3 parity to +1 makes all six constraints
        // satisfiable; the all-+1 assignment is a witness.
        let relaxed = PeresMerminSquare::relaxed_standard();
        let result = search_assignments(&relaxed);
        assert!(result.satisfying > 0);
        assert!(result
            .witnesses
            .contains(&Assignment { values: [1; 9] }));
        // And with six +1 parities there is no contradiction to report.
        let report = parity_product_argument(&relaxed);
        assert_eq!(report.parity_product, 1);
        assert_eq!(report.assignment_square_product, 1);
        assert!(!report.contradiction);
    }

    #[test]
    fn five_context_subset_is_satisfiable() {
        let sq = PeresMerminSquare::standard();
        let five: Vec<ContextIndex> = ContextIndex::all()
            .into_iter()
            .filter(|c| *c != ContextIndex::Col(2))
            .collect();
        let result = search_assignments_subset(&sq, &five);
        assert!(result.satisfying > 0);
    }

    #[test]
    fn impossibility_count_is_stable_under_permutations() {
        let sq = PeresMerminSquare::standard();
        let orders = [[0usize, 1, 2], [1, 0, 2], [2, 1, 0], [1, 2, 0], [2, 0, 1], [0, 2, 1]];
        for ro in orders {
            for co in orders {
                let permuted = sq.permuted(ro, co).unwrap();
                assert_eq!(search_assignments(&permuted).satisfying, 0);
            }
        }
    }

    #[test]
    fn parity_product_argument_reports_contradiction() {
        let report = parity_product_argument(&PeresMerminSquare::standard());
        assert_eq!(report.parity_product, -1);
        assert_eq!(report.assignment_square_product, 1);
        assert!(report.contradiction);
        // Squares of signs always multiply to +1.
        for index in 0..512 {
            let a = Assignment::from_index(index);
            let square_product: i32 = a.values.iter().map(|&v| (v as i32) * (v as i32)).product();
            assert_eq!(square_product, 1);
        }
    }

    #[test]
    fn every_assignment_fails_some_context() {
        let sq = PeresMerminSquare::standard();
        for index in 0..512 {
            let a = Assignment::from_index(index);
            let fails = ContextIndex::all()
                .into_iter()
                .any(|c| !context_parity_holds(&a, &sq, c));
            assert!(fails, "assignment {index} satisfies all six contexts");
        }
    }

    #[test]
    fn contexts_commute_within_rows_and_columns() {
        let sq = PeresMerminSquare::standard();
        for index in ContextIndex::all() {
            let ctx = sq.context(index).unwrap();
            let obs = ctx.observables();
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let a = obs[i].matrix();
                    let b = obs[j].matrix();
                    let comm = a.mul(&b).sub(&b.mul(&a));
                    assert!(comm.max_abs_diff(&CMatrix::zeros(4)) < 1e-12);
                }
            }
        }
    }
}
