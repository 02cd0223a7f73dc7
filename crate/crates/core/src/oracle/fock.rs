use num_complex::Complex64 as C64;

use crate::linalg::{Csr, ONE};

/// Tensor-product layout; factor 0 is the slowest index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorLayout {
    pub dims: Vec<usize>,
}

impl TensorLayout {
    pub fn new(dims: Vec<usize>) -> Self {
        TensorLayout { dims }
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// I ⊗ … ⊗ op ⊗ … ⊗ I with `op` on factor `at`.
    pub fn embed(&self, op: &Csr, at: usize) -> Csr {
        assert_eq!(op.nrows(), self.dims[at], "operator does not fit factor {at}");
        let before: usize = self.dims[..at].iter().product();
        let after: usize = self.dims[at + 1..].iter().product();
        Csr::identity(before).kron(op).kron(&Csr::identity(after))
    }

    /// Per-factor digits of a basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (i, d) in self.dims.iter().enumerate().rev() {
            out[i] = index % d;
            index /= d;
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (x, d)| acc * d + x)
    }
}

/// Truncated annihilation operator on `cutoff` Fock levels.
pub fn destroy(cutoff: usize) -> Csr {
    Csr::from_triplets(cutoff, cutoff, (1..cutoff).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))))
}

/// σ⁻ on (|↓⟩, |↑⟩).
pub fn sigma_minus() -> Csr {
    Csr::from_triplets(2, 2, [(0, 1, ONE)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_digits_roundtrip() {
        let l = TensorLayout::new(vec![3, 2, 4]);
        for i in 0..l.dim() {
            assert_eq!(l.index(&l.digits(i)), i);
        }
    }

    #[test]
    fn embedded_operators_commute_across_factors() {
        let l = TensorLayout::new(vec![4, 2, 3]);
        let a = l.embed(&destroy(4), 0);
        let s = l.embed(&sigma_minus(), 1);
        let b = l.embed(&destroy(3), 2);
        let c1 = a.matmul(&s).sub(&s.matmul(&a));
        let c2 = a.matmul(&b.adjoint()).sub(&b.adjoint().matmul(&a));
        assert_eq!(c1.clone().tap_prune().nnz(), 0);
        assert_eq!(c2.tap_prune().nnz(), 0);
        // [a, a†] = 1 below the cutoff
        let comm = a.matmul(&a.adjoint()).sub(&a.adjoint().matmul(&a));
        for i in 0..l.dim() {
            if l.digits(i)[0] < 3 {
                assert!((comm.get(i, i) - ONE).norm() < 1e-14);
            }
        }
    }

    trait TapPrune {
        fn tap_prune(self) -> Self;
    }

    impl TapPrune for Csr {
        fn tap_prune(mut self) -> Self {
            self.prune(1e-14);
            self
        }
    }
}
