//! Sparse symmetric storage and the envelope Cholesky factorization used by
//! the Steklov solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, SteklovError};

/// Compressed sparse row matrix with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n × n` matrix from `(row, col, value)` triplets, summing
    /// duplicates. Duplicates are summed in input order, so a fixed triplet
    /// sequence always yields bitwise-identical values.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet index out of range");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>())
            .sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v).sum())
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `self + alpha · other`.
    pub fn add_scaled(&self, other: &CsrMatrix, alpha: f64) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (i, j, v)));
            t.extend(other.row(i).map(|(j, v)| (i, j, alpha * v)));
        }
        CsrMatrix::from_triplets(self.n, t)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Dense submatrix on the given rows and columns.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        let mut pos = vec![usize::MAX; self.n];
        for (c, &j) in cols.iter().enumerate() {
            pos[j] = c;
        }
        let mut d = DMatrix::zeros(rows.len(), cols.len());
        for (r, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                if pos[j] != usize::MAX {
                    d[(r, pos[j])] = v;
                }
            }
        }
        d
    }

    /// Symmetric permutation `P A Pᵀ` where `perm[new] = old`.
    pub fn permuted(&self, perm: &[usize]) -> CsrMatrix {
        let mut inv = vec![0; self.n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (inv[i], inv[j], v)));
        }
        CsrMatrix::from_triplets(self.n, t)
    }
}

/// Row-envelope Cholesky factor `A = L Lᵀ` of a symmetric matrix.
///
/// Only the first `n_factor` rows and columns are factored. For the remaining
/// rows the entries of `L` in the first `n_factor` columns are still computed,
/// which yields the Schur complement of the leading block.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    n: usize,
    n_factor: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors `a` (already in the desired ordering).
    pub fn factor(a: &CsrMatrix, n_factor: usize) -> Result<Self> {
        let n = a.n();
        assert!(n_factor <= n);
        let mut first = vec![0; n];
        for i in 0..n {
            let f = a
                .row(i)
                .map(|(j, _)| j)
                .filter(|&j| j <= i)
                .min()
                .unwrap_or(i);
            first[i] = f;
        }
        let mut start = vec![0; n + 1];
        for i in 0..n {
            let width = if i < n_factor {
                i + 1 - first[i]
            } else {
                n_factor.saturating_sub(first[i])
            };
            start[i + 1] = start[i] + width;
        }
        let total = start[n];
        if total > 400_000_000 {
            return Err(SteklovError::Numeric(format!(
                "envelope of {total} entries is too large"
            )));
        }
        let mut data = vec![0.0; total];
        for i in 0..n {
            let lim = if i < n_factor { i + 1 } else { n_factor };
            for (j, v) in a.row(i) {
                if j >= first[i] && j < lim {
                    data[start[i] + j - first[i]] = v;
                }
            }
        }
        let mut fac = Self {
            n,
            n_factor,
            first,
            start,
            data,
        };
        let mut diag_max: f64 = 0.0;
        for i in 0..n {
            let fi = fac.first[i];
            let lim = if i < n_factor { i } else { n_factor };
            for j in fi..lim {
                let fj = fac.first[j];
                let k0 = fi.max(fj);
                let (ri, rj) = (fac.start[i] - fi, fac.start[j] - fj);
                let mut s = fac.data[ri + j];
                for k in k0..j {
                    s -= fac.data[ri + k] * fac.data[rj + k];
                }
                let diag = fac.data[fac.start[j] + j - fj];
                fac.data[ri + j] = s / diag;
            }
            if i < n_factor {
                let ri = fac.start[i] - fi;
                let mut s = fac.data[ri + i];
                diag_max = diag_max.max(s.abs());
                for k in fi..i {
                    s -= fac.data[ri + k] * fac.data[ri + k];
                }
                if !(s > 1e-14 * diag_max) {
                    return Err(SteklovError::Numeric(format!(
                        "Cholesky breakdown at pivot {i}: {s:e} (largest diagonal {diag_max:e})"
                    )));
                }
                fac.data[ri + i] = s.sqrt();
            }
        }
        Ok(fac)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_factor(&self) -> usize {
        self.n_factor
    }

    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    fn row_slice(&self, i: usize) -> (usize, &[f64]) {
        (self.first[i], &self.data[self.start[i]..self.start[i + 1]])
    }

    /// `L[i][j]` for `j` in the stored envelope, zero otherwise.
    pub fn l(&self, i: usize, j: usize) -> f64 {
        let (f, row) = self.row_slice(i);
        if j >= f && j - f < row.len() {
            row[j - f]
        } else {
            0.0
        }
    }

    /// Schur complement `A_BB − L_B L_Bᵀ` of the factored block, where `B` is
    /// the trailing `n − n_factor` rows. `a_bb` is the original trailing block.
    pub fn schur_complement(&self, a_bb: &DMatrix<f64>) -> DMatrix<f64> {
        let nb = self.n - self.n_factor;
        let mut s = a_bb.clone();
        for a in 0..nb {
            let (fa, ra) = self.row_slice(self.n_factor + a);
            for b in 0..=a {
                let (fb, rb) = self.row_slice(self.n_factor + b);
                let k0 = fa.max(fb);
                let mut dot = 0.0;
                for k in k0..self.n_factor {
                    dot += ra[k - fa] * rb[k - fb];
                }
                s[(a, b)] -= dot;
                if a != b {
                    s[(b, a)] -= dot;
                }
            }
        }
        s
    }

    /// Solves `L y = b` on the factored block.
    pub fn forward(&self, b: &mut [f64]) {
        for i in 0..self.n_factor {
            let (f, row) = self.row_slice(i);
            let mut s = b[i];
            for k in f..i {
                s -= row[k - f] * b[k];
            }
            b[i] = s / row[i - f];
        }
    }

    /// Solves `Lᵀ x = y` on the factored block.
    pub fn backward(&self, y: &mut [f64]) {
        for i in (0..self.n_factor).rev() {
            let (f, row) = self.row_slice(i);
            y[i] /= row[i - f];
            let xi = y[i];
            for k in f..i {
                y[k] -= row[k - f] * xi;
            }
        }
    }

    /// Solves `A x = b` when the whole matrix has been factored.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(
            self.n_factor, self.n,
            "solve needs a complete factorization"
        );
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// `−L_IIᵀ⁻¹ L_BIᵀ u_B`: the interior values of the `A`-harmonic extension
    /// of trailing-block values `u_b`.
    pub fn harmonic_extension(&self, u_b: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_factor];
        for (a, &ub) in u_b.iter().enumerate() {
            let (f, row) = self.row_slice(self.n_factor + a);
            for k in f..self.n_factor {
                y[k] -= row[k - f] * ub;
            }
        }
        self.backward(&mut y);
        y
    }
}

/// Ordering with the `boundary` nodes last and the remaining nodes sorted by
/// reverse breadth-first distance from the boundary; this keeps the envelope
/// of mesh matrices narrow. Returns `perm` with `perm[new] = old`.
pub fn boundary_last_ordering(a: &CsrMatrix, boundary: &[usize]) -> Vec<usize> {
    let n = a.n();
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    for &b in boundary {
        if !seen[b] {
            seen[b] = true;
            queue.push_back(b);
        }
    }
    let mut interior = Vec::with_capacity(n - boundary.len());
    while let Some(i) = queue.pop_front() {
        for (j, _) in a.row(i) {
            if !seen[j] {
                seen[j] = true;
                interior.push(j);
                queue.push_back(j);
            }
        }
    }
    // nodes unreachable from the boundary
    interior.extend((0..n).filter(|&i| !seen[i]));
    interior.reverse();
    let mut sorted_boundary = boundary.to_vec();
    sorted_boundary.sort_unstable();
    sorted_boundary.dedup();
    interior.extend(sorted_boundary);
    interior
}

/// Householder reflector `H = I − 2wwᵀ` with `H y = ±|y| e₁`, returned as `w`.
pub fn householder_to_e1(y: &DVector<f64>) -> DVector<f64> {
    let norm = y.norm();
    let mut w = y.clone();
    let sign = if y[0] >= 0.0 { 1.0 } else { -1.0 };
    w[0] += sign * norm;
    let wn = w.norm();
    if wn == 0.0 {
        w.fill(0.0);
        w
    } else {
        w / wn
    }
}

/// Applies `H = I − 2wwᵀ` on both sides of a symmetric matrix.
pub fn householder_congruence(c: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let p = c * w;
    let k = w.dot(&p);
    // H C H = C − 2 w pᵀ − 2 p wᵀ + 4 k w wᵀ
    let mut out = c.clone();
    let n = c.nrows();
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] += -2.0 * w[i] * p[j] - 2.0 * p[i] * w[j] + 4.0 * k * w[i] * w[j];
        }
    }
    out
}

/// Symmetric eigendecomposition sorted ascending.
pub fn sorted_symmetric_eigen(c: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = c.nrows();
    let sym = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Smallest eigenpairs of the symmetric-definite pencil `(a, b)` by Cholesky
/// reduction; eigenvectors are `b`-orthonormal.
pub fn generalized_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = b.clone().cholesky().ok_or_else(|| {
        SteklovError::Numeric("projected mass matrix is not positive definite".into())
    })?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| SteklovError::Numeric("singular mass factor".into()))?;
    let c = &linv * a * linv.transpose();
    let (vals, w) = sorted_symmetric_eigen(c);
    Ok((vals, linv.transpose() * w))
}
