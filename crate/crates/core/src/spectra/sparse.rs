//! Symmetric sparse matrices stored as their lower triangle in compressed
//! columns, and an `LDL^T` factorization (through `faer`) that also reports
//! the inertia.

use dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, supernodal::SupernodalLdltRef, CholeskySymbolicParams, LdltRef, SymbolicCholesky,
    SymbolicCholeskyRaw, SymmetricOrdering,
};
use faer::sparse::linalg::SupernodalThreshold;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Side};

use crate::error::{Error, Result};

/// Sparsity pattern of a symmetric matrix: column `c` holds the sorted rows
/// `r >= c`.
#[derive(Debug, Clone)]
pub struct Pattern {
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
}

impl Pattern {
    /// Builds the pattern from per-column lists of rows (any order, may
    /// contain duplicates and rows above the diagonal, which are dropped).
    pub fn from_columns(mut cols: Vec<Vec<usize>>) -> Self {
        let mut col_ptr = Vec::with_capacity(cols.len() + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::new();
        for (c, rows) in cols.iter_mut().enumerate() {
            rows.retain(|&r| r >= c);
            rows.push(c);
            rows.sort_unstable();
            rows.dedup();
            row_idx.extend_from_slice(rows);
            col_ptr.push(row_idx.len());
        }
        Self { col_ptr, row_idx }
    }

    pub fn dim(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Storage slot of entry `(r, c)` with `r >= c`.
    #[inline]
    pub fn slot(&self, r: usize, c: usize) -> usize {
        let (a, b) = (self.col_ptr[c], self.col_ptr[c + 1]);
        match self.row_idx[a..b].binary_search(&r) {
            Ok(k) => a + k,
            Err(_) => panic!("entry ({r}, {c}) outside the sparsity pattern"),
        }
    }
}

/// Values over a shared [`Pattern`].
#[derive(Debug, Clone)]
pub struct SymMatrix {
    pub values: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(p: &Pattern) -> Self {
        Self {
            values: vec![0.0; p.nnz()],
        }
    }

    /// Adds `v` to entry `(r, c)` (either triangle).
    #[inline]
    pub fn add(&mut self, p: &Pattern, r: usize, c: usize, v: f64) {
        let (r, c) = if r >= c { (r, c) } else { (c, r) };
        self.values[p.slot(r, c)] += v;
    }

    /// `y = A x`.
    pub fn mul(&self, p: &Pattern, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..p.dim() {
            let xc = x[c];
            let mut acc = 0.0;
            for k in p.col_ptr[c]..p.col_ptr[c + 1] {
                let r = p.row_idx[k];
                let a = self.values[k];
                if r == c {
                    acc += a * xc;
                } else {
                    y[r] += a * xc;
                    acc += a * x[r];
                }
            }
            y[c] += acc;
        }
    }
}

/// Symbolic analysis shared by all shifts of one pencil.
pub struct Analysis {
    symbolic: SymbolicCholesky<usize>,
}

impl Analysis {
    pub fn new(p: &Pattern) -> Result<Self> {
        let n = p.dim();
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &p.col_ptr, None, &p.row_idx);
        let params = CholeskySymbolicParams {
            supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL,
            ..Default::default()
        };
        let symbolic = factorize_symbolic_cholesky(sym, Side::Lower, SymmetricOrdering::Amd, params)
            .map_err(|e| Error::SolverStagnation(format!("symbolic factorization failed: {e:?}")))?;
        Ok(Self { symbolic })
    }

    /// Factors `a`, which must use the pattern this analysis was built for.
    pub fn factorize(&self, p: &Pattern, a: &[f64]) -> Result<Factor<'_>> {
        let n = p.dim();
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &p.col_ptr, None, &p.row_idx);
        let mat = SparseColMatRef::new(sym, a);
        let mut values = vec![0.0; self.symbolic.len_val()];
        let req = self.symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default());
        let mut mem = MemBuffer::new(req);
        self.symbolic
            .factorize_numeric_ldlt(
                &mut values,
                mat,
                Side::Lower,
                Default::default(),
                Par::Seq,
                MemStack::new(&mut mem),
                Default::default(),
            )
            .map_err(|e| Error::SolverStagnation(format!("LDL^T factorization failed: {e:?}")))?;
        let solve_mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        Ok(Factor {
            analysis: self,
            values,
            solve_mem,
        })
    }
}

pub struct Factor<'a> {
    analysis: &'a Analysis,
    values: Vec<f64>,
    solve_mem: MemBuffer,
}

impl Factor<'_> {
    /// Number of negative pivots, equal to the number of negative
    /// eigenvalues of the factored matrix (Sylvester's law of inertia).
    pub fn negative_pivots(&self) -> usize {
        let SymbolicCholeskyRaw::Supernodal(s) = self.analysis.symbolic.raw() else {
            unreachable!("factorization is forced supernodal")
        };
        let f = SupernodalLdltRef::new(s, &self.values);
        let mut count = 0;
        for k in 0..s.n_supernodes() {
            let block = f.supernode(k).val();
            for j in 0..block.ncols() {
                if block[(j, j)] < 0.0 {
                    count += 1;
                }
            }
        }
        count
    }

    /// Overwrites `x` with `A^{-1} x`.
    pub fn solve(&mut self, x: &mut [f64]) {
        let n = x.len();
        let ldlt = LdltRef::new(&self.analysis.symbolic, &self.values);
        ldlt.solve_in_place_with_conj(
            Conj::No,
            MatMut::from_column_major_slice_mut(x, n, 1),
            Par::Seq,
            MemStack::new(&mut self.solve_mem),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize, shift: f64) -> (Pattern, SymMatrix) {
        let cols = (0..n).map(|c| if c + 1 < n { vec![c + 1] } else { vec![] }).collect();
        let p = Pattern::from_columns(cols);
        let mut a = SymMatrix::zeros(&p);
        for c in 0..n {
            a.add(&p, c, c, 2.0 - shift);
            if c + 1 < n {
                a.add(&p, c + 1, c, -1.0);
            }
        }
        (p, a)
    }

    #[test]
    fn inertia_counts_eigenvalues_below_shift() {
        let n = 500;
        for shift in [0.013, 0.77, 1.913, 3.5] {
            let (p, a) = laplacian(n, shift);
            let an = Analysis::new(&p).unwrap();
            let f = an.factorize(&p, &a.values).unwrap();
            let exact = (1..=n)
                .filter(|k| 2.0 - 2.0 * (*k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos() < shift)
                .count();
            assert_eq!(f.negative_pivots(), exact);
        }
    }

    #[test]
    fn solve_and_matvec_agree() {
        let (p, a) = laplacian(300, 0.4321);
        let an = Analysis::new(&p).unwrap();
        let mut f = an.factorize(&p, &a.values).unwrap();
        let b: Vec<f64> = (0..300).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = b.clone();
        f.solve(&mut x);
        let mut y = vec![0.0; 300];
        a.mul(&p, &x, &mut y);
        let err = y.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }
}
