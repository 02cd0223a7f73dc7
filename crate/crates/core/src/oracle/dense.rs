use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::{build_modes, LatticeSpec, ModeBasis, ModelParams};
use crate::linalg::{max_abs, trace, unvectorize, vectorize, Csr, I, ONE, ZERO};
use crate::unperturbed::displacement;

use super::fock::{destroy, sigma_minus, TensorLayout};

/// H and jump operators (rates folded in) on a tensor-product space.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub layout: TensorLayout,
    pub hamiltonian: Csr,
    pub jumps: Vec<Csr>,
}

/// Liouvillian acting on column-major vectorized density matrices.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    pub dim: usize,
    pub matrix: Csr,
}

impl LindbladModel {
    /// vec(AρB) = (Bᵀ ⊗ A) vec ρ
    pub fn liouvillian(&self) -> Liouvillian {
        let d = self.layout.dim();
        let id = Csr::identity(d);
        let h = &self.hamiltonian;
        let mut l = id.kron(h).sub(&h.transpose().kron(&id)).scale(-I);
        for c in &self.jumps {
            let cdc = c.adjoint().matmul(c);
            let half = C64::new(0.5, 0.0);
            let term = c.conj().kron(c).sub(&id.kron(&cdc).scale(half)).sub(&cdc.transpose().kron(&id).scale(half));
            l = l.add(&term);
        }
        Liouvillian { dim: d, matrix: l }
    }

    /// H − (i/2) Σ C^†C
    pub fn effective_hamiltonian(&self) -> Csr {
        let mut h = self.hamiltonian.clone();
        for c in &self.jumps {
            h = h.add(&c.adjoint().matmul(c).scale(C64::new(0.0, -0.5)));
        }
        h
    }
}

impl Liouvillian {
    pub fn apply(&self, rho: &Mat<C64>) -> Mat<C64> {
        unvectorize(&self.matrix.apply(&vectorize(rho)), self.dim)
    }

    /// Largest |Σ_i L_{(ii),col}|: zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let mut sums = vec![ZERO; d * d];
        for i in 0..d {
            for (c, v) in self.matrix.row(i + d * i) {
                sums[c] += v;
            }
        }
        sums.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: Mat<C64>,
    /// max |L vec ρ|
    pub residual: f64,
    /// Smallest eigenvalue of ρ.
    pub min_eigenvalue: f64,
}

impl SteadyState {
    /// Tr(O ρ)
    pub fn expect(&self, op: &Csr) -> C64 {
        let mut acc = ZERO;
        for (i, j, v) in op.triplets() {
            acc += v * self.rho[(j, i)];
        }
        acc
    }
}

/// Unique steady state: the trace row replaces one row of L (that row is a
/// combination of the others), then a sparse LU solve.
pub fn steady_state(model: &LindbladModel, max_dim: usize) -> Result<SteadyState> {
    let d = model.layout.dim();
    if d > max_dim {
        return Err(Error::TooLarge { dim: d, bound: max_dim });
    }
    let l = model.liouvillian();
    let n = d * d;
    let mut trips: Vec<Triplet<usize, usize, C64>> = l.matrix.triplets().filter(|&(r, _, _)| r != 0).map(|(r, c, v)| Triplet::new(r, c, v)).collect();
    trips.extend((0..d).map(|i| Triplet::new(0, i + d * i, ONE)));
    let a = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &trips).map_err(|e| Error::Solver(format!("{e:?}")))?;
    let lu = a.sp_lu().map_err(|e| Error::DegenerateSteadyState(format!("LU factorization failed: {e:?}")))?;
    let mut rhs = Mat::<C64>::zeros(n, 1);
    rhs[(0, 0)] = ONE;
    lu.solve_in_place(rhs.as_mut());
    let v: Vec<C64> = (0..n).map(|i| rhs[(i, 0)]).collect();
    if v.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::DegenerateSteadyState("singular bordered Liouvillian".into()));
    }
    let raw = unvectorize(&v, d);
    let rho = Mat::from_fn(d, d, |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * 0.5);
    let residual = max_abs(&l.apply(&rho));
    let scale = l.matrix.triplets().map(|(_, _, v)| v.norm()).fold(1.0, f64::max);
    if residual > 1e-8 * scale {
        return Err(Error::DegenerateSteadyState(format!("residual {residual:.2e} after solve")));
    }
    let evs: Vec<f64> = rho.self_adjoint_eigenvalues(faer::Side::Lower).map_err(|e| Error::Solver(format!("{e:?}")))?;
    let min_eigenvalue = evs.iter().copied().fold(f64::INFINITY, f64::min);
    debug_assert!((trace(&rho) - ONE).norm() < 1e-10);
    Ok(SteadyState { rho, residual, min_eigenvalue })
}

/// Which basis the photon factors of a [`JcModel`] live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    /// Normal modes, displaced by α_k.
    DisplacedModes,
    /// Lattice sites, not displaced.
    Sites,
}

/// JC lattice as a Lindblad model: photon factors first, then qubits.
#[derive(Clone, Debug)]
pub struct JcModel {
    pub model: LindbladModel,
    pub frame: Frame,
    pub cutoff: usize,
    /// Displacement per photon factor (zero in the site frame).
    pub alpha: Vec<C64>,
    pub photon_ops: Vec<Csr>,
    pub qubit_ops: Vec<Csr>,
}

/// Displaced-frame model in the normal-mode basis:
/// H' = Σ δω_k b^†b + Σ_r [δΩσ⁺σ⁻ + ε_{q,r}σ⁺ + h.c.] + gΣ_{kr}(c b_k σ⁺_r + h.c.).
pub fn displaced_model(params: &ModelParams, modes: &ModeBasis, cutoff: usize) -> JcModel {
    build_displaced(params, modes, cutoff, true)
}

/// As [`displaced_model`]; `coupling = false` drops the JC term but keeps the
/// effective qubit drive, which gives the unperturbed generator.
pub(crate) fn build_displaced(params: &ModelParams, modes: &ModeBasis, cutoff: usize, coupling: bool) -> JcModel {
    let disp = displacement(params, modes);
    let (nm, ns) = (modes.n_modes(), modes.n_sites());
    let mut dims = vec![cutoff; nm];
    dims.extend(std::iter::repeat_n(2, ns));
    let layout = TensorLayout::new(dims);
    let b: Vec<Csr> = (0..nm).map(|k| layout.embed(&destroy(cutoff), k)).collect();
    let s: Vec<Csr> = (0..ns).map(|r| layout.embed(&sigma_minus(), nm + r)).collect();
    let d = layout.dim();
    let mut h = Csr::zeros(d, d);
    for (k, bk) in b.iter().enumerate() {
        h = h.add(&bk.adjoint().matmul(bk).scale(C64::new(modes.detuning(k, params), 0.0)));
    }
    for (r, sr) in s.iter().enumerate() {
        let sp = sr.adjoint();
        h = h.add(&sp.matmul(sr).scale(C64::new(params.qubit_detuning(), 0.0)));
        let e = disp.qubit_drive[r];
        h = h.add(&sp.scale(e)).add(&sr.scale(e.conj()));
        for (k, bk) in b.iter().enumerate() {
            let c = modes.coefficient(k, r) * params.g;
            if coupling && c != ZERO {
                let x = bk.matmul(&sp).scale(c);
                h = h.add(&x).add(&x.adjoint());
            }
        }
    }
    let mut jumps: Vec<Csr> = b.iter().map(|bk| bk.scale(C64::new(params.gamma.sqrt(), 0.0))).collect();
    jumps.extend(s.iter().map(|sr| sr.scale(C64::new(params.qubit_gamma.sqrt(), 0.0))));
    JcModel { model: LindbladModel { layout, hamiltonian: h, jumps }, frame: Frame::DisplacedModes, cutoff, alpha: disp.alpha, photon_ops: b, qubit_ops: s }
}

/// Lab-frame model in the site basis with the explicit drive ε(a_r + a_r^†).
/// Without qubits this is the bare driven photon lattice.
pub fn site_model(params: &ModelParams, spec: &LatticeSpec, cutoff: usize, qubits: bool) -> Result<JcModel> {
    let hop = spec.hopping_matrix()?;
    let n = hop.nrows();
    let mut dims = vec![cutoff; n];
    if qubits {
        dims.extend(std::iter::repeat_n(2, n));
    }
    let layout = TensorLayout::new(dims);
    let a: Vec<Csr> = (0..n).map(|r| layout.embed(&destroy(cutoff), r)).collect();
    let s: Vec<Csr> = if qubits { (0..n).map(|r| layout.embed(&sigma_minus(), n + r)).collect() } else { vec![] };
    let d = layout.dim();
    let mut h = Csr::zeros(d, d);
    for r in 0..n {
        let ad = a[r].adjoint();
        h = h.add(&ad.matmul(&a[r]).scale(C64::new(params.photon_detuning(), 0.0)));
        h = h.add(&a[r].add(&ad).scale(C64::new(params.epsilon, 0.0)));
        for q in 0..n {
            if hop[(r, q)] != 0.0 {
                h = h.add(&ad.matmul(&a[q]).scale(C64::new(hop[(r, q)], 0.0)));
            }
        }
    }
    for (r, sr) in s.iter().enumerate() {
        let sp = sr.adjoint();
        h = h.add(&sp.matmul(sr).scale(C64::new(params.qubit_detuning(), 0.0)));
        let x = a[r].matmul(&sp).scale(C64::new(params.g, 0.0));
        h = h.add(&x).add(&x.adjoint());
    }
    let mut jumps: Vec<Csr> = a.iter().map(|x| x.scale(C64::new(params.gamma.sqrt(), 0.0))).collect();
    jumps.extend(s.iter().map(|x| x.scale(C64::new(params.qubit_gamma.sqrt(), 0.0))));
    Ok(JcModel { model: LindbladModel { layout, hamiltonian: h, jumps }, frame: Frame::Sites, cutoff, alpha: vec![ZERO; n], photon_ops: a, qubit_ops: s })
}

/// Lab-frame observables; photon entries follow the model's photon factors.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactObservables {
    pub sigma_minus: Vec<C64>,
    pub sigma_z: Vec<f64>,
    /// ⟨a⟩ per photon factor, un-displaced.
    pub photon_field: Vec<C64>,
    /// ⟨a^†a⟩ per photon factor, un-displaced.
    pub occupation: Vec<f64>,
}

impl ExactObservables {
    pub fn sigma_minus_abs_mean(&self) -> f64 {
        self.sigma_minus.iter().map(|s| s.norm()).sum::<f64>() / self.sigma_minus.len().max(1) as f64
    }

    pub fn sigma_z_mean(&self) -> f64 {
        self.sigma_z.iter().sum::<f64>() / self.sigma_z.len().max(1) as f64
    }
}

impl JcModel {
    pub fn observables(&self, expect: impl Fn(&Csr) -> C64) -> ExactObservables {
        let sigma_minus = self.qubit_ops.iter().map(&expect).collect();
        // σ^z = 2σ⁺σ⁻ − 1
        let sigma_z = self.qubit_ops.iter().map(|s| 2.0 * expect(&s.adjoint().matmul(s)).re - 1.0).collect();
        let mut photon_field = Vec::new();
        let mut occupation = Vec::new();
        for (b, &al) in self.photon_ops.iter().zip(&self.alpha) {
            let fb = expect(b);
            let nb = expect(&b.adjoint().matmul(b)).re;
            photon_field.push(fb + al);
            occupation.push(nb + 2.0 * (al.conj() * fb).re + al.norm_sqr());
        }
        ExactObservables { sigma_minus, sigma_z, photon_field, occupation }
    }

    /// Population of states where some photon factor sits on its top level.
    pub fn top_population(&self, rho: &Mat<C64>) -> f64 {
        let np = self.photon_ops.len();
        let layout = &self.model.layout;
        (0..layout.dim())
            .filter(|&i| layout.digits(i)[..np].iter().any(|&x| x + 1 == self.cutoff))
            .map(|i| rho[(i, i)].re)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyOptions {
    pub max_dim: usize,
    /// Re-solve at cutoff + 1 and report the largest observable change.
    pub check_cutoff: bool,
    pub top_tolerance: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions { max_dim: 128, check_cutoff: false, top_tolerance: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct ExactSolution {
    pub state: SteadyState,
    pub observables: ExactObservables,
    pub top_population: f64,
    /// Largest relative observable change at cutoff + 1, when checked.
    pub cutoff_change: Option<f64>,
    pub warnings: Vec<String>,
}

/// Displaced-frame steady state of a finite JC lattice with Fock cutoff
/// `cutoff` per mode.
pub fn dense_steady_state(params: &ModelParams, spec: &LatticeSpec, cutoff: usize, opts: &SteadyOptions) -> Result<ExactSolution> {
    params.validate()?;
    if cutoff < 2 {
        return Err(crate::error::invalid("cutoff", "need at least two Fock levels"));
    }
    let modes = build_modes(spec, params)?;
    let solve = |cut: usize, bound: usize| -> Result<(JcModel, SteadyState)> {
        let m = displaced_model(params, &modes, cut);
        let s = steady_state(&m.model, bound)?;
        Ok((m, s))
    };
    let (model, state) = solve(cutoff, opts.max_dim)?;
    let observables = model.observables(|op| state.expect(op));
    let top = model.top_population(&state.rho);
    let mut warnings = Vec::new();
    if top > opts.top_tolerance {
        warnings.push(format!("top Fock level population {top:.2e} exceeds {:.1e}; raise the cutoff", opts.top_tolerance));
    }
    let cutoff_change = if opts.check_cutoff {
        let (m2, s2) = solve(cutoff + 1, usize::MAX)?;
        let o2 = m2.observables(|op| s2.expect(op));
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-3);
        let mut worst = 0.0f64;
        for (a, b) in observables.sigma_minus.iter().zip(&o2.sigma_minus) {
            worst = worst.max(rel(a.norm(), b.norm()));
        }
        for (a, b) in observables.sigma_z.iter().zip(&o2.sigma_z) {
            worst = worst.max(rel(*a, *b));
        }
        for (a, b) in observables.occupation.iter().zip(&o2.occupation) {
            worst = worst.max(rel(*a, *b));
        }
        if worst > 1e-4 {
            warnings.push(format!("observables change by {worst:.2e} at cutoff {}", cutoff + 1));
        }
        Some(worst)
    } else {
        None
    };
    Ok(ExactSolution { state, observables, top_population: top, cutoff_change, warnings })
}
