//! Small linear-algebra helpers: column-major vectorization, biorthonormal
//! eigensystems and a compressed-row sparse matrix for oracle operators.

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Column-major vectorization: `vec(rho)[i + d*j] = rho[(i, j)]`.
pub fn vectorize(m: &Mat<C64>) -> Vec<C64> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut out = Vec::with_capacity(r * c);
    for j in 0..c {
        for i in 0..r {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn unvectorize(v: &[C64], d: usize) -> Mat<C64> {
    assert_eq!(v.len(), d * d, "vector length is not a square");
    Mat::from_fn(d, d, |i, j| v[i + d * j])
}

/// Matrix of a linear map on d×d matrices in the column-major vec basis.
pub fn superop_from_fn(d: usize, f: impl Fn(&Mat<C64>) -> Mat<C64>) -> Mat<C64> {
    let n = d * d;
    let mut out = Mat::<C64>::zeros(n, n);
    for col in 0..n {
        let mut basis = Mat::<C64>::zeros(d, d);
        basis[(col % d, col / d)] = ONE;
        let image = vectorize(&f(&basis));
        for (row, v) in image.into_iter().enumerate() {
            out[(row, col)] = v;
        }
    }
    out
}

pub fn commutator(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    a * b - b * a
}

/// D[c]rho = c rho c^† - {c^†c, rho}/2
pub fn dissipator(c: &Mat<C64>, rho: &Mat<C64>) -> Mat<C64> {
    let cd = c.adjoint().to_owned();
    let cdc = &cd * c;
    c * rho * &cd - (&cdc * rho + rho * &cdc) * faer::Scale(C64::new(0.5, 0.0))
}

pub fn trace(m: &Mat<C64>) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn max_abs(m: &Mat<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

pub fn max_abs_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    max_abs(&(a - b))
}

pub fn dense_inverse(m: &Mat<C64>) -> Mat<C64> {
    m.partial_piv_lu().inverse()
}

/// Diagonalizes a general complex matrix. Returns eigenvalues, right
/// eigenvectors (columns of `R`) and `R^{-1}`, whose rows are the dual left
/// eigenvectors. Fails when the eigenvectors do not span the space.
pub fn diagonalize(m: &Mat<C64>) -> Result<(Vec<C64>, Mat<C64>, Mat<C64>)> {
    let n = m.nrows();
    let eig = m
        .eigen()
        .map_err(|e| Error::Solver(format!("eigendecomposition failed: {e:?}")))?;
    let values: Vec<C64> = (0..n).map(|i| eig.S()[i]).collect();
    let right = eig.U().to_owned();
    let inv = dense_inverse(&right);
    let identity = Mat::<C64>::identity(n, n);
    let residual = max_abs_diff(&(&inv * &right), &identity);
    let cond = max_abs(&inv) * max_abs(&right);
    if !residual.is_finite() || residual > 1e-8 || cond > 1e10 {
        return Err(Error::Defective(format!(
            "eigenvector matrix residual {residual:.2e}, condition estimate {cond:.2e}"
        )));
    }
    Ok((values, right, inv))
}

/// Compressed sparse row complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl Csr {
    /// Builds from (row, col, value) triplets; duplicates are summed and exact
    /// zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) outside {rows}x{cols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        let mut m = Csr { rows, cols, indptr, indices, values };
        m.prune(0.0);
        m
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Csr { rows, cols, indptr: vec![0; rows + 1], indices: vec![], values: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, ONE)))
    }

    pub fn from_dense(m: &Mat<C64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != ZERO {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Self::from_triplets(values.len(), values.len(), values.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Removes entries with magnitude `<= tol`.
    pub fn prune(&mut self, tol: f64) {
        let mut indptr = vec![0usize; self.rows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.rows {
            for p in self.indptr[r]..self.indptr[r + 1] {
                if self.values[p].norm() > tol {
                    indices.push(self.indices[p]);
                    values.push(self.values[p]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |p| (r, self.indices[p], self.values[p]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |p| (self.indices[p], self.values[p]))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.row(r).find(|&(j, _)| j == c).map(|(_, v)| v).unwrap_or(ZERO)
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.triplets().map(|(r, c, v)| (c, r, v)))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.prune(0.0);
        out
    }

    pub fn add(&self, other: &Csr) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_triplets(self.rows, self.cols, self.triplets().chain(other.triplets()))
    }

    pub fn sub(&self, other: &Csr) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn matmul(&self, other: &Csr) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut t = Vec::new();
        for r in 0..self.rows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    t.push((r, c, a * b));
                }
            }
        }
        Self::from_triplets(self.rows, other.cols, t)
    }

    pub fn kron(&self, other: &Csr) -> Self {
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, a) in self.triplets() {
            for (r2, c2, b) in other.triplets() {
                t.push((r1 * other.rows + r2, c1 * other.cols + c2, a * b));
            }
        }
        Self::from_triplets(self.rows * other.rows, self.cols * other.cols, t)
    }

    /// y = A x
    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for p in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[p] * x[self.indices[p]];
            }
            *out = acc;
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.rows];
        self.apply_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::<C64>::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> Mat<C64> {
        let mut s = seed;
        Mat::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 33) as f64) / (1u64 << 31) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 33) as f64) / (1u64 << 31) as f64 - 0.5;
            C64::new(a, b)
        })
    }

    #[test]
    fn superop_matches_kronecker_rule() {
        let a = sample(3, 1);
        let b = sample(3, 2);
        let s = superop_from_fn(3, |x| &a * x * &b);
        let kron = Csr::from_dense(&b.transpose().to_owned()).kron(&Csr::from_dense(&a)).to_dense();
        assert!(max_abs_diff(&s, &kron) < 1e-14);
    }

    #[test]
    fn vectorize_roundtrip() {
        let a = sample(4, 3);
        assert_eq!(unvectorize(&vectorize(&a), 4), a);
    }

    #[test]
    fn diagonalize_reconstructs() {
        let a = sample(6, 4);
        let (vals, r, rinv) = diagonalize(&a).unwrap();
        let d = Mat::from_fn(6, 6, |i, j| if i == j { vals[i] } else { ZERO });
        assert!(max_abs_diff(&(&r * &d * &rinv), &a) < 1e-12);
    }

    #[test]
    fn defective_matrix_rejected() {
        let mut j = Mat::<C64>::zeros(2, 2);
        j[(0, 1)] = ONE;
        assert!(matches!(diagonalize(&j), Err(Error::Defective(_))));
    }

    #[test]
    fn sparse_ops_match_dense() {
        let a = sample(5, 5);
        let b = sample(5, 6);
        let (sa, sb) = (Csr::from_dense(&a), Csr::from_dense(&b));
        assert!(max_abs_diff(&sa.matmul(&sb).to_dense(), &(&a * &b)) < 1e-14);
        assert!(max_abs_diff(&sa.add(&sb).to_dense(), &(&a + &b)) < 1e-15);
        assert!(max_abs_diff(&sa.adjoint().to_dense(), &a.adjoint().to_owned()) < 1e-15);
        let x: Vec<C64> = (0..5).map(|i| C64::new(i as f64, 1.0)).collect();
        let y = sa.apply(&x);
        for i in 0..5 {
            let want: C64 = (0..5).map(|j| a[(i, j)] * x[j]).sum();
            assert!((y[i] - want).norm() < 1e-14);
        }
    }
}
