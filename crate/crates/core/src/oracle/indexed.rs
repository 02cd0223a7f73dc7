//! Explicit unperturbed eigenbasis of a Fock-truncated displaced model, with
//! U = −L₀⁻¹L₁ as a dense matrix. Used to check the resummation against the
//! exact steady state of the same truncated space.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::{ModeBasis, ModelParams};
use crate::linalg::{diagonalize, unvectorize, vectorize, Csr, ONE, ZERO};
use crate::resum::{u_matrix, IndexedSuperop};
use crate::unperturbed::displacement;

use super::dense::{build_displaced, steady_state, ExactObservables, JcModel, LindbladModel, SteadyState};
use super::fock::{destroy, sigma_minus, TensorLayout};

#[derive(Clone, Debug)]
pub struct IndexedModel {
    /// Full model (with JC coupling).
    pub model: JcModel,
    /// λ per index; index 0 is the steady state with λ₀ = 0.
    pub eigenvalues: Vec<C64>,
    pub u: IndexedSuperop,
    /// Columns are vectorized right eigenmatrices, χ₀ with unit trace.
    right: Mat<C64>,
}

/// Refuses superoperator dimensions above this.
pub const MAX_SUPEROP_DIM: usize = 2048;

/// Product eigenbasis with one factor per mode and per qubit. Identical sites
/// make the joint spectrum degenerate, so diagonalizing L₀ as a whole would
/// mix cluster labels. Factor 0 is the slowest index, as in the model layout.
pub fn indexed_model(params: &ModelParams, modes: &ModeBasis, cutoff: usize) -> Result<IndexedModel> {
    params.validate()?;
    let full = build_displaced(params, modes, cutoff, true);
    let bare = build_displaced(params, modes, cutoff, false);
    let d = full.model.layout.dim();
    if d * d > MAX_SUPEROP_DIM {
        return Err(Error::TooLarge { dim: d * d, bound: MAX_SUPEROP_DIM });
    }
    let disp = displacement(params, modes);
    let mut factors = Vec::new();
    for k in 0..modes.n_modes() {
        let b = destroy(cutoff);
        let h = b.adjoint().matmul(&b).scale(C64::new(modes.detuning(k, params), 0.0));
        factors.push(factor_basis(cutoff, h, b.scale(C64::new(params.gamma.sqrt(), 0.0)))?);
    }
    for r in 0..modes.n_sites() {
        let s = sigma_minus();
        let e = disp.qubit_drive[r];
        let h = s.adjoint().matmul(&s).scale(C64::new(params.qubit_detuning(), 0.0)).add(&s.adjoint().scale(e)).add(&s.scale(e.conj()));
        factors.push(factor_basis(2, h, s.scale(C64::new(params.qubit_gamma.sqrt(), 0.0)))?);
    }
    let n = d * d;
    let labels = TensorLayout::new(factors.iter().map(|f| f.values.len()).collect());
    let mut values = Vec::with_capacity(n);
    let mut right = Mat::<C64>::zeros(n, n);
    let mut left = Mat::<C64>::zeros(n, n);
    for idx in 0..n {
        let mut chi = Mat::<C64>::from_fn(1, 1, |_, _| ONE);
        let mut xi = chi.clone();
        let mut lam = ZERO;
        for (f, mu) in factors.iter().zip(labels.digits(idx)) {
            chi = kron(&chi, &f.right[mu]);
            xi = kron(&xi, &f.left[mu]);
            lam += f.values[mu];
        }
        values.push(lam);
        for (i, v) in vectorize(&chi).into_iter().enumerate() {
            right[(i, idx)] = v;
        }
        for (i, v) in vectorize(&xi).into_iter().enumerate() {
            left[(idx, i)] = v;
        }
    }
    let coupling = full.model.hamiltonian.sub(&bare.model.hamiltonian);
    let l1 = LindbladModel { layout: full.model.layout.clone(), hamiltonian: coupling, jumps: vec![] }.liouvillian().matrix.to_dense();
    let l1_basis = &left * &l1 * &right;
    let u = u_matrix(&values, &l1_basis)?;
    Ok(IndexedModel { model: full, eigenvalues: values, u, right })
}

struct FactorBasis {
    values: Vec<C64>,
    right: Vec<Mat<C64>>,
    /// Duals: Σ_ij left[μ][i,j] right[ν][i,j] = δ_μν.
    left: Vec<Mat<C64>>,
}

fn factor_basis(d: usize, h: Csr, jump: Csr) -> Result<FactorBasis> {
    let l = LindbladModel { layout: TensorLayout::new(vec![d]), hamiltonian: h, jumps: vec![jump] }.liouvillian().matrix.to_dense();
    let (raw, right, left) = diagonalize(&l)?;
    let n = raw.len();
    let mut order: Vec<usize> = (0..n).collect();
    let steady = (0..n).min_by(|&a, &b| raw[a].norm().total_cmp(&raw[b].norm())).unwrap();
    order.swap(0, steady);
    let tr: C64 = (0..d).map(|i| right[(i + d * i, steady)]).sum();
    if tr.norm() < 1e-12 {
        return Err(Error::DegenerateSteadyState("unperturbed steady state has zero trace".into()));
    }
    let mut values: Vec<C64> = order.iter().map(|&i| raw[i]).collect();
    values[0] = ZERO;
    let scale = |pos: usize, s: C64| if pos == 0 { s } else { ONE };
    let right = order.iter().enumerate().map(|(pos, &i)| Mat::from_fn(d, d, |a, b| right[(a + d * b, i)] * scale(pos, tr.inv()))).collect();
    let left = order.iter().enumerate().map(|(pos, &i)| Mat::from_fn(d, d, |a, b| left[(i, a + d * b)] * scale(pos, tr))).collect();
    Ok(FactorBasis { values, right, left })
}

fn kron(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

impl IndexedModel {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// ρ = Σ_μ c_μ χ_μ
    pub fn density(&self, coefficients: &[C64]) -> Mat<C64> {
        let d = self.model.model.layout.dim();
        let v: Vec<C64> = (0..self.dim()).map(|i| (0..self.dim()).map(|mu| self.right[(i, mu)] * coefficients[mu]).sum()).collect();
        unvectorize(&v, d)
    }

    pub fn observables(&self, coefficients: &[C64]) -> ExactObservables {
        let rho = self.density(coefficients);
        self.model.observables(|op: &Csr| op.triplets().map(|(i, j, v)| v * rho[(j, i)]).sum())
    }

    /// Steady state of the full truncated model.
    pub fn exact(&self) -> Result<SteadyState> {
        steady_state(&self.model.model, usize::MAX)
    }

    pub fn steady_vector(&self) -> Vec<C64> {
        let mut e = vec![ZERO; self.dim()];
        e[0] = ONE;
        e
    }
}
