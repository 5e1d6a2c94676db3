//! Exact linear algebra over the prime field F_q (q an odd prime) and
//! exhaustive enumeration of the d-dimensional subspaces of F_q^n.
//!
//! Subspaces are kept in reduced row echelon form, which is a unique normal
//! form: two subspaces are equal exactly when their RREF bases are identical.
//! Enumeration walks canonical RREF matrices directly (pivot-column subsets,
//! then free entries), so every subspace is produced exactly once and the
//! total count is the Gaussian binomial.

use crate::error::{Error, Result};
use crate::oracle;

pub(crate) fn add_mod(a: u64, b: u64, q: u64) -> u64 {
    let s = a + b;
    if s >= q {
        s - q
    } else {
        s
    }
}

pub(crate) fn sub_mod(a: u64, b: u64, q: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + q - b
    }
}

pub(crate) fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

/// Inverse of `a` modulo the prime `q`, for `a` nonzero mod q.
pub(crate) fn inv_mod(a: u64, q: u64) -> u64 {
    let a = a % q;
    assert!(a != 0, "zero has no inverse mod {q}");
    // extended Euclid on (a, q)
    let (mut old_r, mut r) = (a as i128, q as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    old_s.rem_euclid(q as i128) as u64
}

/// Checks that q is an odd prime, the only moduli used anywhere in this crate.
pub fn validate_modulus(q: u64) -> Result<()> {
    if q < 3 || q % 2 == 0 || !oracle::is_prime(q) {
        return Err(Error::InvalidModulus(q));
    }
    Ok(())
}

/// An element of F_q, stored as its canonical representative in [0, q-1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FqScalar {
    value: u64,
    modulus: u64,
}

impl FqScalar {
    pub fn new(value: u64, q: u64) -> Result<Self> {
        validate_modulus(q)?;
        Ok(FqScalar {
            value: value % q,
            modulus: q,
        })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self) -> FqScalar {
        FqScalar {
            value: inv_mod(self.value, self.modulus),
            modulus: self.modulus,
        }
    }
}

impl std::ops::Add for FqScalar {
    type Output = FqScalar;
    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.modulus, rhs.modulus, "modulus mismatch");
        FqScalar {
            value: add_mod(self.value, rhs.value, self.modulus),
            modulus: self.modulus,
        }
    }
}

impl std::ops::Sub for FqScalar {
    type Output = FqScalar;
    fn sub(self, rhs: Self) -> Self {
        assert_eq!(self.modulus, rhs.modulus, "modulus mismatch");
        FqScalar {
            value: sub_mod(self.value, rhs.value, self.modulus),
            modulus: self.modulus,
        }
    }
}

impl std::ops::Mul for FqScalar {
    type Output = FqScalar;
    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.modulus, rhs.modulus, "modulus mismatch");
        FqScalar {
            value: mul_mod(self.value, rhs.value, self.modulus),
            modulus: self.modulus,
        }
    }
}

/// A dense row-major matrix over F_q.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FqMatrix {
    q: u64,
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
}

impl FqMatrix {
    /// Builds a matrix from row vectors, reducing all entries mod q.
    /// An empty row list gives the 0x0 matrix.
    pub fn from_rows(q: u64, rows: &[Vec<u64>]) -> Result<Self> {
        validate_modulus(q)?;
        let cols = rows.first().map_or(0, |r| r.len());
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            entries.extend(row.iter().map(|&x| x % q));
        }
        Ok(FqMatrix {
            q,
            rows: rows.len(),
            cols,
            entries,
        })
    }

    pub fn zeros(q: u64, rows: usize, cols: usize) -> Result<Self> {
        validate_modulus(q)?;
        Ok(FqMatrix {
            q,
            rows,
            cols,
            entries: vec![0; rows * cols],
        })
    }

    pub fn identity(q: u64, n: usize) -> Result<Self> {
        let mut m = FqMatrix::zeros(q, n, n)?;
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        Ok(m)
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, r: usize, c: usize) -> FqScalar {
        FqScalar {
            value: self.entries[r * self.cols + c],
            modulus: self.q,
        }
    }

    pub(crate) fn at(&self, r: usize, c: usize) -> u64 {
        self.entries[r * self.cols + c]
    }

    pub fn set_entry(&mut self, r: usize, c: usize, value: u64) {
        self.entries[r * self.cols + c] = value % self.q;
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_vectors(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// Reduced row echelon form; returns (rank, reduced). The row space is
    /// preserved and the result is the unique RREF of the input.
    pub fn rref(&self) -> (usize, FqMatrix) {
        let mut m = self.clone();
        let rank = m.rref_in_place();
        (rank, m)
    }

    fn rref_in_place(&mut self) -> usize {
        let (q, rows, cols) = (self.q, self.rows, self.cols);
        let mut pivot_row = 0;
        for col in 0..cols {
            if pivot_row == rows {
                break;
            }
            let Some(src) = (pivot_row..rows).find(|&r| self.at(r, col) != 0) else {
                continue;
            };
            if src != pivot_row {
                for c in 0..cols {
                    self.entries.swap(src * cols + c, pivot_row * cols + c);
                }
            }
            let inv = inv_mod(self.at(pivot_row, col), q);
            for c in col..cols {
                let v = mul_mod(self.at(pivot_row, c), inv, q);
                self.entries[pivot_row * cols + c] = v;
            }
            for r in 0..rows {
                if r == pivot_row {
                    continue;
                }
                let factor = self.at(r, col);
                if factor == 0 {
                    continue;
                }
                for c in col..cols {
                    let v = sub_mod(
                        self.at(r, c),
                        mul_mod(factor, self.at(pivot_row, c), q),
                        q,
                    );
                    self.entries[r * cols + c] = v;
                }
            }
            pivot_row += 1;
        }
        pivot_row
    }

    /// Row reduction that also returns the transform E with `E * self = rref`.
    pub(crate) fn rref_with_transform(&self) -> (usize, FqMatrix, FqMatrix) {
        // augment with the identity and reduce the left block
        let (q, rows, cols) = (self.q, self.rows, self.cols);
        let mut aug = FqMatrix::zeros(q, rows, cols + rows).unwrap();
        for r in 0..rows {
            for c in 0..cols {
                aug.entries[r * (cols + rows) + c] = self.at(r, c);
            }
            aug.entries[r * (cols + rows) + cols + r] = 1;
        }
        // same elimination, pivots restricted to the original columns
        let total = cols + rows;
        let mut pivot_row = 0;
        for col in 0..cols {
            if pivot_row == rows {
                break;
            }
            let Some(src) = (pivot_row..rows).find(|&r| aug.entries[r * total + col] != 0) else {
                continue;
            };
            if src != pivot_row {
                for c in 0..total {
                    aug.entries.swap(src * total + c, pivot_row * total + c);
                }
            }
            let inv = inv_mod(aug.entries[pivot_row * total + col], q);
            for c in 0..total {
                aug.entries[pivot_row * total + c] =
                    mul_mod(aug.entries[pivot_row * total + c], inv, q);
            }
            for r in 0..rows {
                if r == pivot_row {
                    continue;
                }
                let factor = aug.entries[r * total + col];
                if factor == 0 {
                    continue;
                }
                for c in 0..total {
                    let v = sub_mod(
                        aug.entries[r * total + c],
                        mul_mod(factor, aug.entries[pivot_row * total + c], q),
                        q,
                    );
                    aug.entries[r * total + c] = v;
                }
            }
            pivot_row += 1;
        }
        let mut reduced = FqMatrix::zeros(q, rows, cols).unwrap();
        let mut transform = FqMatrix::zeros(q, rows, rows).unwrap();
        for r in 0..rows {
            for c in 0..cols {
                reduced.entries[r * cols + c] = aug.entries[r * total + c];
            }
            for c in 0..rows {
                transform.entries[r * rows + c] = aug.entries[r * total + cols + c];
            }
        }
        (pivot_row, reduced, transform)
    }

    pub fn rank(&self) -> usize {
        self.rref().0
    }

    /// Matrix-vector product M*v.
    pub fn mat_vec(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.cols, "vector length mismatch");
        (0..self.rows)
            .map(|r| {
                self.row(r).iter().zip(v).fold(0u64, |acc, (&m, &x)| {
                    add_mod(acc, mul_mod(m, x % self.q, self.q), self.q)
                })
            })
            .collect()
    }

    pub fn mat_mul(&self, other: &FqMatrix) -> FqMatrix {
        assert_eq!(self.q, other.q, "modulus mismatch");
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = FqMatrix::zeros(self.q, self.rows, other.cols).unwrap();
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = 0u64;
                for k in 0..self.cols {
                    acc = add_mod(acc, mul_mod(self.at(r, k), other.at(k, c), self.q), self.q);
                }
                out.entries[r * other.cols + c] = acc;
            }
        }
        out
    }

    pub fn transpose(&self) -> FqMatrix {
        let mut out = FqMatrix::zeros(self.q, self.cols, self.rows).unwrap();
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.entries[c * self.rows + r] = self.at(r, c);
            }
        }
        out
    }

    /// Inverse of a square matrix, if it is invertible.
    pub fn inverse(&self) -> Option<FqMatrix> {
        assert_eq!(self.rows, self.cols, "inverse needs a square matrix");
        let (rank, reduced, transform) = self.rref_with_transform();
        if rank < self.rows {
            return None;
        }
        debug_assert_eq!(reduced, FqMatrix::identity(self.q, self.rows).unwrap());
        Some(transform)
    }
}

/// A linear subspace of F_q^n, held as its unique RREF basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    basis: FqMatrix,
}

impl Subspace {
    /// Canonical subspace spanned by the rows of `m`.
    pub fn from_rows(m: &FqMatrix) -> Subspace {
        let (rank, reduced) = m.rref();
        let basis = FqMatrix {
            q: reduced.q,
            rows: rank,
            cols: reduced.cols,
            entries: reduced.entries[..rank * reduced.cols].to_vec(),
        };
        Subspace { basis }
    }

    pub fn from_vectors(q: u64, rows: &[Vec<u64>]) -> Result<Subspace> {
        Ok(Subspace::from_rows(&FqMatrix::from_rows(q, rows)?))
    }

    pub fn empty(q: u64, n: usize) -> Result<Subspace> {
        Ok(Subspace {
            basis: FqMatrix::zeros(q, 0, n)?,
        })
    }

    pub fn full(q: u64, n: usize) -> Result<Subspace> {
        Ok(Subspace {
            basis: FqMatrix::identity(q, n)?,
        })
    }

    pub fn q(&self) -> u64 {
        self.basis.q
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.cols
    }

    pub fn dim(&self) -> usize {
        self.basis.rows
    }

    pub fn basis(&self) -> &FqMatrix {
        &self.basis
    }

    /// Pivot column of each basis row.
    pub fn pivot_columns(&self) -> Vec<usize> {
        (0..self.basis.rows)
            .map(|r| (0..self.basis.cols).find(|&c| self.basis.at(r, c) != 0).unwrap())
            .collect()
    }

    /// Residual of `v` after eliminating against the basis; zero iff `v` lies
    /// in the subspace.
    pub fn reduce(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.basis.cols, "vector length mismatch");
        let q = self.basis.q;
        let mut w: Vec<u64> = v.iter().map(|&x| x % q).collect();
        for (r, &pc) in self.pivot_columns().iter().enumerate() {
            let factor = w[pc];
            if factor == 0 {
                continue;
            }
            for (slot, &b) in w[pc..].iter_mut().zip(&self.basis.row(r)[pc..]) {
                *slot = sub_mod(*slot, mul_mod(factor, b, q), q);
            }
        }
        w
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    /// Span of this subspace together with one extra vector.
    pub fn extended(&self, v: &[u64]) -> Subspace {
        assert_eq!(v.len(), self.basis.cols, "vector length mismatch");
        let mut rows = self.basis.row_vectors();
        rows.push(v.iter().map(|&x| x % self.basis.q).collect());
        let m = FqMatrix {
            q: self.basis.q,
            rows: rows.len(),
            cols: self.basis.cols,
            entries: rows.concat(),
        };
        Subspace::from_rows(&m)
    }
}

/// Number of d-dimensional subspaces of F_q^n, as an exact integer.
pub fn gaussian_binomial(n: usize, d: usize, q: u64) -> u128 {
    assert!(d <= n, "gaussian binomial needs d <= n");
    let qp = |e: usize| -> u128 {
        (q as u128)
            .checked_pow(e as u32)
            .expect("gaussian binomial overflow")
    };
    let mut result: u128 = 1;
    for i in 0..d {
        result = result
            .checked_mul(qp(n - i) - 1)
            .expect("gaussian binomial overflow");
        result /= qp(i + 1) - 1;
    }
    result
}

/// Iterator over all d-dimensional subspaces of F_q^n, each yielded exactly
/// once as its canonical RREF basis.
pub struct SubspaceIter {
    q: u64,
    n: usize,
    d: usize,
    pivots: Vec<usize>,
    free_cells: Vec<(usize, usize)>,
    free_vals: Vec<u64>,
    exhausted: bool,
}

pub fn enumerate_subspaces(n: usize, d: usize, q: u64) -> SubspaceIter {
    assert!(d <= n, "subspace dimension exceeds ambient dimension");
    validate_modulus(q).expect("invalid modulus");
    let pivots: Vec<usize> = (0..d).collect();
    let free_cells = free_cells_for(&pivots, n);
    SubspaceIter {
        q,
        n,
        d,
        free_vals: vec![0; free_cells.len()],
        pivots,
        free_cells,
        exhausted: false,
    }
}

fn free_cells_for(pivots: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    for (row, &p) in pivots.iter().enumerate() {
        for col in p + 1..n {
            if !pivots.contains(&col) {
                cells.push((row, col));
            }
        }
    }
    cells
}

impl SubspaceIter {
    fn build(&self) -> Subspace {
        let mut basis = FqMatrix::zeros(self.q, self.d, self.n).unwrap();
        for (row, &p) in self.pivots.iter().enumerate() {
            basis.entries[row * self.n + p] = 1;
        }
        for (idx, &(row, col)) in self.free_cells.iter().enumerate() {
            basis.entries[row * self.n + col] = self.free_vals[idx];
        }
        Subspace { basis }
    }

    fn advance(&mut self) {
        // odometer over the free entries, then the next pivot combination
        for v in self.free_vals.iter_mut() {
            *v += 1;
            if *v < self.q {
                return;
            }
            *v = 0;
        }
        let d = self.d;
        let mut i = d;
        while i > 0 {
            i -= 1;
            if self.pivots[i] < self.n - d + i {
                self.pivots[i] += 1;
                for j in i + 1..d {
                    self.pivots[j] = self.pivots[j - 1] + 1;
                }
                self.free_cells = free_cells_for(&self.pivots, self.n);
                self.free_vals = vec![0; self.free_cells.len()];
                return;
            }
        }
        self.exhausted = true;
    }
}

impl Iterator for SubspaceIter {
    type Item = Subspace;

    fn next(&mut self) -> Option<Subspace> {
        if self.exhausted {
            return None;
        }
        let s = self.build();
        if self.d == 0 {
            self.exhausted = true;
        } else {
            self.advance();
        }
        Some(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn m(q: u64, rows: &[&[u64]]) -> FqMatrix {
        FqMatrix::from_rows(q, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn scalar_arithmetic() {
        let a = FqScalar::new(5, 3).unwrap();
        assert_eq!(a.value(), 2);
        let b = FqScalar::new(2, 3).unwrap();
        assert_eq!((a + b).value(), 1);
        assert_eq!((a - b).value(), 0);
        assert_eq!((a * b).value(), 1);
        assert_eq!(b.inv().value(), 2);
        assert!(FqScalar::new(1, 4).is_err());
        assert!(FqScalar::new(1, 9).is_err());
        assert!(FqScalar::new(1, 2).is_err());
    }

    #[test]
    fn rref_identity_is_fixed() {
        let id = FqMatrix::identity(3, 3).unwrap();
        let (rank, reduced) = id.rref();
        assert_eq!(rank, 3);
        assert_eq!(reduced, id);
    }

    #[test]
    fn rref_collapses_dependent_rows() {
        let (rank, reduced) = m(3, &[&[1, 1, 0], &[2, 2, 0]]).rref();
        assert_eq!(rank, 1);
        assert_eq!(reduced.row(0), &[1, 1, 0]);
        assert_eq!(reduced.row(1), &[0, 0, 0]);
    }

    #[test]
    fn rref_full_rank_generators() {
        // generators of the plane W reused by the geometry tests
        let (rank, reduced) = m(3, &[&[0, 1, 1, 1], &[0, 1, 0, 2], &[1, 0, 0, 0]]).rref();
        assert_eq!(rank, 3);
        assert_eq!(reduced.row(0), &[1, 0, 0, 0]);
        assert_eq!(reduced.row(1), &[0, 1, 0, 2]);
        assert_eq!(reduced.row(2), &[0, 0, 1, 2]);
    }

    #[test]
    fn rref_empty_matrix() {
        let empty = FqMatrix::from_rows(3, &[]).unwrap();
        assert_eq!(empty.rref().0, 0);
    }

    #[test]
    fn subspace_from_rows_canonicalizes() {
        let full = Subspace::from_vectors(3, &[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(full.dim(), 2);
        assert_eq!(full, Subspace::full(3, 2).unwrap());

        let line = Subspace::from_vectors(3, &[vec![1, 1, 0], vec![2, 2, 0]]).unwrap();
        assert_eq!(line.dim(), 1);
        assert_eq!(line.basis().row(0), &[1, 1, 0]);

        let w = Subspace::from_vectors(3, &[vec![1, 0, 0, 0], vec![0, 1, 1, 1], vec![0, 1, 0, 2]])
            .unwrap();
        assert_eq!(w.dim(), 3);
        assert_eq!(w.ambient_dim(), 4);
    }

    #[test]
    fn contains_examples() {
        let line = Subspace::from_vectors(3, &[vec![1, 1, 0]]).unwrap();
        assert!(line.contains(&[0, 0, 0]));
        assert!(line.contains(&[2, 2, 0]));
        assert!(!line.contains(&[1, 2, 0]));

        let w = Subspace::from_vectors(3, &[vec![1, 0, 0, 0], vec![0, 1, 1, 1], vec![0, 1, 0, 2]])
            .unwrap();
        assert!(w.contains(&[1, 1, 1, 1]));
        assert!(!w.contains(&[0, 0, 0, 1]));
    }

    #[test]
    fn gaussian_binomial_values() {
        assert_eq!(gaussian_binomial(4, 0, 3), 1);
        assert_eq!(gaussian_binomial(7, 0, 5), 1);
        assert_eq!(gaussian_binomial(4, 1, 3), 40);
        assert_eq!(gaussian_binomial(4, 2, 3), 130);
        assert_eq!(gaussian_binomial(2, 1, 3), 4);
        assert_eq!(gaussian_binomial(3, 1, 3), 13);
    }

    #[test]
    fn enumerate_counts_match_gaussian_binomial() {
        for &q in &[3u64, 5] {
            for n in 1..=4usize {
                for d in 0..=n {
                    let all: Vec<Subspace> = enumerate_subspaces(n, d, q).collect();
                    assert_eq!(
                        all.len() as u128,
                        gaussian_binomial(n, d, q),
                        "count mismatch at n={n} d={d} q={q}"
                    );
                    let distinct: BTreeSet<_> = all.iter().cloned().collect();
                    assert_eq!(distinct.len(), all.len(), "duplicate subspace emitted");
                    for s in &all {
                        assert_eq!(s.dim(), d);
                        assert_eq!(s.ambient_dim(), n);
                        // canonical: re-reducing the basis is a no-op
                        assert_eq!(&Subspace::from_rows(s.basis()), s);
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let a = m(5, &[&[1, 2, 0], &[0, 1, 4], &[3, 0, 2]]);
        let inv = a.inverse().expect("invertible");
        assert_eq!(a.mat_mul(&inv), FqMatrix::identity(5, 3).unwrap());
        assert_eq!(inv.mat_mul(&a), FqMatrix::identity(5, 3).unwrap());
        let singular = m(5, &[&[1, 2, 3], &[2, 4, 6], &[0, 0, 1]]);
        assert!(singular.inverse().is_none());
    }

    fn arb_matrix() -> impl Strategy<Value = FqMatrix> {
        (prop_oneof![Just(3u64), Just(5u64)], 1..4usize, 1..5usize).prop_flat_map(
            |(q, rows, cols)| {
                proptest::collection::vec(proptest::collection::vec(0..q, cols), rows)
                    .prop_map(move |data| FqMatrix::from_rows(q, &data).unwrap())
            },
        )
    }

    proptest! {
        #[test]
        fn rref_is_idempotent(m in arb_matrix()) {
            let (rank, reduced) = m.rref();
            let (rank2, reduced2) = reduced.rref();
            prop_assert_eq!(rank, rank2);
            prop_assert_eq!(reduced, reduced2);
        }

        #[test]
        fn span_contains_row_combinations(m in arb_matrix(), c0 in 0..5u64, c1 in 0..5u64) {
            let s = Subspace::from_rows(&m);
            let q = m.q();
            let n = m.cols();
            for r in 0..m.rows() {
                prop_assert!(s.contains(m.row(r)));
            }
            // a random two-row combination also lies in the span
            let coeffs = [c0 % q, c1 % q];
            let mut combo = vec![0u64; n];
            for (i, &c) in coeffs.iter().enumerate().take(m.rows().min(2)) {
                for (slot, &b) in combo.iter_mut().zip(m.row(i)) {
                    *slot = add_mod(*slot, mul_mod(c, b, q), q);
                }
            }
            prop_assert!(s.contains(&combo));
        }
    }
}
