//! Compressed-row sparse operators with complex entries.
//!
//! Entries are kept in canonical form: rows ascending, columns ascending within
//! a row, no duplicates and no stored exact zeros. Every constructor and
//! arithmetic routine preserves that layout, so two operators built from the
//! same data compare equal entry by entry.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{modulus, Cx, Real};

/// Rows per rayon task in the parallel kernels.
const PAR_CHUNK: usize = 256;

/// Declared symmetry of a stored operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hermiticity {
    Hermitian,
    General,
    Unchecked,
}

impl Hermiticity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Hermiticity::Hermitian => "hermitian",
            Hermiticity::General => "general",
            Hermiticity::Unchecked => "unchecked",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hermitian" => Some(Hermiticity::Hermitian),
            "general" => Some(Hermiticity::General),
            "unchecked" => Some(Hermiticity::Unchecked),
            _ => None,
        }
    }

    /// Flag of a sum or product of two flagged operators when hermiticity is
    /// only known to survive if both inputs are hermitian.
    fn combine(self, other: Self) -> Self {
        match (self, other) {
            (Hermiticity::Hermitian, Hermiticity::Hermitian) => Hermiticity::Hermitian,
            (Hermiticity::General, _) | (_, Hermiticity::General) => Hermiticity::General,
            _ => Hermiticity::Unchecked,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator<T: Real> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Cx<T>>,
    hermiticity: Hermiticity,
}

impl<T: Real> SparseOperator<T> {
    pub fn zero(nrows: usize, ncols: usize) -> Self {
        SparseOperator {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            hermiticity: if nrows == ncols { Hermiticity::Hermitian } else { Hermiticity::General },
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal((0..n).map(|_| Cx::new(T::one(), T::zero())).collect())
    }

    /// Diagonal operator; flagged hermitian when every entry is real.
    pub fn from_diagonal(diag: Vec<Cx<T>>) -> Self {
        let n = diag.len();
        let herm = if diag.iter().all(|z| z.im == T::zero()) {
            Hermiticity::Hermitian
        } else {
            Hermiticity::General
        };
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, z) in diag.into_iter().enumerate() {
            if z != Cx::new(T::zero(), T::zero()) {
                cols.push(i);
                vals.push(z);
            }
            row_ptr.push(cols.len());
        }
        SparseOperator { nrows: n, ncols: n, row_ptr, cols, vals, hermiticity: herm }
    }

    /// Builds the canonical layout from unordered triplets. Duplicates are
    /// summed in input order; exact zeros are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, Cx<T>)>,
        hermiticity: Hermiticity,
    ) -> Result<Self> {
        for &(r, c, _) in &triplets {
            if r >= nrows {
                return Err(Error::Index { index: r, bound: nrows });
            }
            if c >= ncols {
                return Err(Error::Index { index: c, bound: ncols });
            }
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let zero = Cx::new(T::zero(), T::zero());
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Cx<T>> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows_of = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                let k = vals.len() - 1;
                vals[k] += v;
            } else {
                cols.push(c);
                vals.push(v);
                rows_of.push(r);
                last = Some((r, c));
            }
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows_of.into_iter().zip(cols).zip(vals) {
            if v != zero {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseOperator { nrows, ncols, row_ptr, cols: keep_cols, vals: keep_vals, hermiticity })
    }

    fn from_rows(nrows: usize, ncols: usize, rows: Vec<Vec<(usize, Cx<T>)>>, hermiticity: Hermiticity) -> Self {
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseOperator { nrows, ncols, row_ptr, cols, vals, hermiticity }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Dimension of a square operator.
    pub fn dim(&self) -> usize {
        debug_assert_eq!(self.nrows, self.ncols);
        self.nrows
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn hermiticity(&self) -> Hermiticity {
        self.hermiticity
    }

    pub fn with_hermiticity(mut self, h: Hermiticity) -> Self {
        self.hermiticity = h;
        self
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Cx<T>)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Cx<T> {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => Cx::new(T::zero(), T::zero()),
        }
    }

    /// Canonically ordered `(row, col, value)` entries.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Cx<T>)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn diagonal(&self) -> Vec<Cx<T>> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut y = vec![Cx::new(T::zero(), T::zero()); self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[Cx<T>], y: &mut [Cx<T>]) {
        assert_eq!(x.len(), self.ncols, "matvec: input length");
        assert_eq!(y.len(), self.nrows, "matvec: output length");
        let row = |r: usize| {
            let mut acc = Cx::new(T::zero(), T::zero());
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            acc
        };
        if self.nrows >= 4 * PAR_CHUNK {
            y.par_chunks_mut(PAR_CHUNK).enumerate().for_each(|(chunk, out)| {
                for (i, yi) in out.iter_mut().enumerate() {
                    *yi = row(chunk * PAR_CHUNK + i);
                }
            });
        } else {
            for (r, yi) in y.iter_mut().enumerate() {
                *yi = row(r);
            }
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.transpose_with(|z| z.conj())
    }

    pub fn transpose(&self) -> Self {
        self.transpose_with(|z| z)
    }

    fn transpose_with(&self, f: impl Fn(Cx<T>) -> Cx<T>) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![Cx::new(T::zero(), T::zero()); self.nnz()];
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                let slot = next[c];
                next[c] += 1;
                cols[slot] = r;
                vals[slot] = f(self.vals[k]);
            }
        }
        SparseOperator {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            cols,
            vals,
            hermiticity: self.hermiticity,
        }
    }

    /// `a * self`; a real factor keeps the hermiticity flag.
    pub fn scaled(&self, a: Cx<T>) -> Self {
        let zero = Cx::new(T::zero(), T::zero());
        let rows = (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| (c, a * v)).filter(|&(_, v)| v != zero).collect())
            .collect();
        let herm = if a.im == T::zero() { self.hermiticity } else { self.hermiticity.combine(Hermiticity::General) };
        Self::from_rows(self.nrows, self.ncols, rows, herm)
    }

    /// Entrywise sum; both operands must have the same shape.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Consistency(format!(
                "cannot add {}x{} and {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let zero = Cx::new(T::zero(), T::zero());
        let rows = (0..self.nrows)
            .map(|r| {
                let mut out = Vec::new();
                let mut a = self.row(r).peekable();
                let mut b = other.row(r).peekable();
                loop {
                    let next = match (a.peek(), b.peek()) {
                        (Some(&(ca, va)), Some(&(cb, vb))) => {
                            if ca == cb {
                                a.next();
                                b.next();
                                (ca, va + vb)
                            } else if ca < cb {
                                a.next();
                                (ca, va)
                            } else {
                                b.next();
                                (cb, vb)
                            }
                        }
                        (Some(&e), None) => {
                            a.next();
                            e
                        }
                        (None, Some(&e)) => {
                            b.next();
                            e
                        }
                        (None, None) => break,
                    };
                    if next.1 != zero {
                        out.push(next);
                    }
                }
                out
            })
            .collect();
        Ok(Self::from_rows(self.nrows, self.ncols, rows, self.hermiticity.combine(other.hermiticity)))
    }

    /// Sum of `coefficient * operator` terms, accumulated left to right.
    pub fn linear_combination(terms: &[(Cx<T>, &Self)]) -> Result<Self> {
        let (first, rest) = terms
            .split_first()
            .ok_or_else(|| Error::Consistency("empty linear combination".into()))?;
        let mut acc = first.1.scaled(first.0);
        for (a, op) in rest {
            acc = acc.add(&op.scaled(*a))?;
        }
        Ok(acc)
    }

    /// Sparse product `self * other`. Each output entry accumulates its
    /// contributions in ascending order of the contracted index.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::Consistency(format!(
                "cannot multiply {}x{} by {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let zero = Cx::new(T::zero(), T::zero());
        let ncols = other.ncols;
        let rows: Vec<Vec<(usize, Cx<T>)>> = (0..self.nrows)
            .into_par_iter()
            .with_min_len(PAR_CHUNK)
            .map_init(
                || (vec![zero; ncols], vec![false; ncols], Vec::<usize>::new()),
                |(acc, seen, touched), r| {
                    for (k, a) in self.row(r) {
                        for (c, b) in other.row(k) {
                            if !seen[c] {
                                seen[c] = true;
                                touched.push(c);
                                acc[c] = a * b;
                            } else {
                                acc[c] += a * b;
                            }
                        }
                    }
                    touched.sort_unstable();
                    let mut out = Vec::with_capacity(touched.len());
                    for &c in touched.iter() {
                        if acc[c] != zero {
                            out.push((c, acc[c]));
                        }
                        seen[c] = false;
                    }
                    touched.clear();
                    out
                },
            )
            .collect();
        let herm = match (self.hermiticity, other.hermiticity) {
            (Hermiticity::General, _) | (_, Hermiticity::General) => Hermiticity::General,
            _ => Hermiticity::Unchecked,
        };
        Ok(Self::from_rows(self.nrows, ncols, rows, herm))
    }

    /// Kronecker product `self ⊗ other` (self index major).
    pub fn kron(&self, other: &Self) -> Self {
        let nrows = self.nrows * other.nrows;
        let ncols = self.ncols * other.ncols;
        let zero = Cx::new(T::zero(), T::zero());
        let mut rows = Vec::with_capacity(nrows);
        for ra in 0..self.nrows {
            for rb in 0..other.nrows {
                let mut out = Vec::new();
                for (ca, va) in self.row(ra) {
                    for (cb, vb) in other.row(rb) {
                        let v = va * vb;
                        if v != zero {
                            out.push((ca * other.ncols + cb, v));
                        }
                    }
                }
                rows.push(out);
            }
        }
        Self::from_rows(nrows, ncols, rows, self.hermiticity.combine(other.hermiticity))
    }

    pub fn to_dense(&self) -> DMatrix<Cx<T>> {
        let mut m = DMatrix::from_element(self.nrows, self.ncols, Cx::new(T::zero(), T::zero()));
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        let minus = Cx::new(-T::one(), T::zero());
        let d = self.add(&other.scaled(minus))?;
        Ok(d.max_abs())
    }

    pub fn max_abs(&self) -> T {
        self.vals.iter().fold(T::zero(), |m, &z| m.max(modulus(z)))
    }

    /// Largest entrywise modulus of `self - self†`.
    pub fn hermiticity_defect(&self) -> T {
        if !self.is_square() {
            return T::max_value().unwrap_or_else(T::one);
        }
        self.max_abs_diff(&self.adjoint()).unwrap_or_else(|_| T::one())
    }

    /// Checks conjugate symmetry to `tol` and, on success, sets the hermitian flag.
    pub fn verify_hermitian(&mut self, tol: T) -> bool {
        let ok = self.is_square() && self.hermiticity_defect() <= tol;
        if ok {
            self.hermiticity = Hermiticity::Hermitian;
        }
        ok
    }

    /// Bit-level equality of shape and entries (the flag is ignored).
    pub fn same_entries(&self, other: &Self) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.cols == other.cols
            && self.vals == other.vals
    }

    /// Upper bound on the spectral norm (max absolute row sum).
    pub fn norm_bound(&self) -> T {
        (0..self.nrows)
            .map(|r| self.row(r).fold(T::zero(), |s, (_, v)| s + modulus(v)))
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// `W† self W` for an isometry `w` mapping the reduced space into this one.
    pub fn compress(&self, w: &Self) -> Result<Self> {
        let out = w.adjoint().matmul(&self.matmul(w)?)?;
        Ok(out.with_hermiticity(match self.hermiticity {
            Hermiticity::Hermitian => Hermiticity::Hermitian,
            h => h,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;
    use proptest::prelude::*;

    fn sample() -> SparseOperator<f64> {
        SparseOperator::from_triplets(
            3,
            3,
            vec![
                (2, 0, cx(1.0, 2.0)),
                (0, 1, cx(0.5, 0.0)),
                (0, 1, cx(0.25, 0.0)),
                (1, 1, cx(-3.0, 0.0)),
                (2, 2, cx(0.0, 0.0)),
            ],
            Hermiticity::Unchecked,
        )
        .unwrap()
    }

    #[test]
    fn triplets_are_canonical() {
        let a = sample();
        let t: Vec<_> = a.triplets().collect();
        assert_eq!(t, vec![(0, 1, cx(0.75, 0.0)), (1, 1, cx(-3.0, 0.0)), (2, 0, cx(1.0, 2.0))]);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn out_of_range_triplet_is_rejected() {
        let e = SparseOperator::<f64>::from_triplets(2, 2, vec![(2, 0, cx(1.0, 0.0))], Hermiticity::General);
        assert!(matches!(e, Err(Error::Index { index: 2, bound: 2 })));
    }

    #[test]
    fn adjoint_conjugates_and_transposes() {
        let a = sample();
        let ad = a.adjoint();
        assert_eq!(ad.get(0, 2), cx(1.0, -2.0));
        assert_eq!(ad.get(1, 0), cx(0.75, 0.0));
        assert!(ad.adjoint().same_entries(&a));
    }

    #[test]
    fn kron_matches_dense() {
        let a = sample();
        let b = SparseOperator::from_triplets(2, 2, vec![(0, 1, cx(2.0, 0.0)), (1, 0, cx(0.0, 1.0))], Hermiticity::General)
            .unwrap();
        let k = a.kron(&b).to_dense();
        let (da, db) = (a.to_dense(), b.to_dense());
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(k[(i, j)], da[(i / 2, j / 2)] * db[(i % 2, j % 2)]);
            }
        }
    }

    #[test]
    fn compress_with_identity_is_noop() {
        let a = sample();
        let w = SparseOperator::identity(3);
        assert!(a.compress(&w).unwrap().same_entries(&a));
    }

    fn arb_op(n: usize) -> impl Strategy<Value = SparseOperator<f64>> {
        prop::collection::vec((0..n, 0..n, -2.0f64..2.0, -2.0f64..2.0), 0..3 * n).prop_map(move |t| {
            SparseOperator::from_triplets(
                n,
                n,
                t.into_iter().map(|(r, c, a, b)| (r, c, cx(a, b))).collect(),
                Hermiticity::Unchecked,
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn matmul_and_matvec_agree_with_dense(a in arb_op(6), b in arb_op(6)) {
            let p = a.matmul(&b).unwrap().to_dense();
            let dp = a.to_dense() * b.to_dense();
            prop_assert!((p - dp).iter().all(|z| z.norm() < 1e-12));
            let x: Vec<Cx<f64>> = (0..6).map(|i| cx(i as f64 * 0.3 - 1.0, 0.1 * i as f64)).collect();
            let y = a.matvec(&x);
            let dy = a.to_dense() * nalgebra::DVector::from_vec(x.clone());
            prop_assert!(y.iter().zip(dy.iter()).all(|(u, v)| (u - v).norm() < 1e-12));
        }

        #[test]
        fn a_plus_adjoint_is_exactly_hermitian(a in arb_op(7)) {
            let h = a.add(&a.adjoint()).unwrap();
            prop_assert_eq!(h.hermiticity_defect(), 0.0);
        }
    }
}
