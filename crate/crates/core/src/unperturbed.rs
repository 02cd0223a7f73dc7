//! Exact eigensystem of the unperturbed Liouvillian: photon modes through the
//! superoperator ladder algebra, qubits through a numeric 4×4 diagonalization,
//! and the coherent displacement that turns the cavity drive into a qubit drive.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::lattice::{ModeBasis, ModelParams};
use crate::linalg::{diagonalize, dissipator, superop_from_fn, I, ONE, ZERO};
use crate::perturb::ClusterLabel;

pub type Mat2 = [[C64; 2]; 2];

/// Qubit basis: index 0 = |↓⟩, 1 = |↑⟩.
pub const SIGMA_MINUS: Mat2 = [[ZERO, ONE], [ZERO, ZERO]];
pub const SIGMA_PLUS: Mat2 = [[ZERO, ZERO], [ONE, ZERO]];
pub const SIGMA_Z: Mat2 = [[C64 { re: -1.0, im: 0.0 }, ZERO], [ZERO, ONE]];
pub const IDENTITY2: Mat2 = [[ONE, ZERO], [ZERO, ONE]];

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat2_trace(a: &Mat2) -> C64 {
    a[0][0] + a[1][1]
}

/// Tr(a^† b)
pub fn mat2_inner(a: &Mat2, b: &Mat2) -> C64 {
    let mut acc = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            acc += a[i][j].conj() * b[i][j];
        }
    }
    acc
}

fn to_mat(a: &Mat2) -> Mat<C64> {
    Mat::from_fn(2, 2, |i, j| a[i][j])
}

/// Single photon mode in the displaced frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhotonMode {
    /// δω_k = ω_k − ω_d
    pub detuning: f64,
    pub gamma: f64,
}

impl PhotonMode {
    /// λ_k = −iδω_k − γ/2
    pub fn rate(&self) -> C64 {
        C64::new(-self.gamma / 2.0, -self.detuning)
    }

    /// m·λ_k + n·λ_k^*
    pub fn eigenvalue(&self, m: u32, n: u32) -> C64 {
        photon_eigenvalue(self, m, n)
    }
}

pub fn photon_eigenvalue(mode: &PhotonMode, m: u32, n: u32) -> C64 {
    let l = mode.rate();
    l * m as f64 + l.conj() * n as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Annihilate,
    Create,
}

/// Non-zero images of χ_{mn} under one-sided multiplication by a or a^†,
/// as (target, amplitude) pairs.
pub fn photon_ladder(side: Side, op: Ladder, (m, n): (u32, u32)) -> ([((u32, u32), f64); 2], usize) {
    let sq = |x: u32| (x as f64).sqrt();
    let mut out = [((0, 0), 0.0); 2];
    let mut len = 0;
    let mut push = |t: (u32, u32), a: f64| {
        if a != 0.0 {
            out[len] = (t, a);
            len += 1;
        }
    };
    match (side, op) {
        (Side::Left, Ladder::Annihilate) => {
            if m > 0 {
                push((m - 1, n), sq(m));
            }
        }
        (Side::Left, Ladder::Create) => {
            push((m + 1, n), sq(m + 1));
            if n > 0 {
                push((m, n - 1), sq(n));
            }
        }
        (Side::Right, Ladder::Create) => {
            if n > 0 {
                push((m, n - 1), sq(n));
            }
        }
        (Side::Right, Ladder::Annihilate) => {
            push((m, n + 1), sq(n + 1));
            if m > 0 {
                push((m - 1, n), sq(m));
            }
        }
    }
    (out, len)
}

/// ⟨⟨ξ_{m'n'}| X |χ_{mn}⟩⟩ for one-sided multiplication X.
pub fn photon_ladder_element(side: Side, op: Ladder, from: (u32, u32), to: (u32, u32)) -> f64 {
    let (terms, len) = photon_ladder(side, op, from);
    terms[..len].iter().filter(|(t, _)| *t == to).map(|(_, a)| a).sum()
}

/// Tr(X χ_{mn}) for X a product of a and a^† given left to right.
pub fn photon_trace(ops: &[Ladder], from: (u32, u32)) -> f64 {
    let mut state: Vec<((u32, u32), f64)> = vec![(from, 1.0)];
    for &op in ops.iter().rev() {
        let mut next: Vec<((u32, u32), f64)> = Vec::new();
        for (s, a) in state {
            let (terms, len) = photon_ladder(Side::Left, op, s);
            for &(t, b) in &terms[..len] {
                match next.iter_mut().find(|(u, _)| *u == t) {
                    Some(e) => e.1 += a * b,
                    None => next.push((t, a * b)),
                }
            }
        }
        state = next;
    }
    state.iter().filter(|(s, _)| *s == (0, 0)).map(|(_, a)| a).sum()
}

/// 4×4 matrix of L_q ρ = −i[δΩσ⁺σ⁻ + ε_qσ⁺ + ε_q^*σ⁻, ρ] + Γ D[σ⁻]ρ in the
/// column-major vectorized basis.
pub fn qubit_liouvillian(detuning: f64, drive: C64, gamma: f64) -> Mat<C64> {
    let h = qubit_hamiltonian(detuning, drive);
    let sm = to_mat(&SIGMA_MINUS);
    superop_from_fn(2, |rho| {
        let comm = &h * rho - rho * &h;
        comm * faer::Scale(-I) + dissipator(&sm, rho) * faer::Scale(C64::new(gamma, 0.0))
    })
}

fn qubit_hamiltonian(detuning: f64, drive: C64) -> Mat<C64> {
    let mut h = Mat::<C64>::zeros(2, 2);
    h[(1, 1)] = C64::new(detuning, 0.0);
    h[(1, 0)] = drive;
    h[(0, 1)] = drive.conj();
    h
}

pub fn apply_qubit_liouvillian(detuning: f64, drive: C64, gamma: f64, rho: &Mat2) -> Mat2 {
    let l = qubit_liouvillian(detuning, drive, gamma);
    let v = [rho[0][0], rho[1][0], rho[0][1], rho[1][1]];
    let mut out = [ZERO; 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..4).map(|j| l[(i, j)] * v[j]).sum();
    }
    [[out[0], out[2]], [out[1], out[3]]]
}

/// Biorthonormal eigensystem of the single-qubit Liouvillian.
#[derive(Clone, Debug)]
pub struct QubitEigensystem {
    pub detuning: f64,
    pub drive: C64,
    pub gamma: f64,
    pub eigenvalues: [C64; 4],
    pub right: [Mat2; 4],
    pub left: [Mat2; 4],
    /// `left_plus[to][from]` = Tr(ξ_to^† σ⁺ χ_from); likewise for the others.
    pub left_plus: [[C64; 4]; 4],
    pub right_plus: [[C64; 4]; 4],
    pub left_minus: [[C64; 4]; 4],
    pub right_minus: [[C64; 4]; 4],
}

impl QubitEigensystem {
    /// Tr(ξ_to^† op χ_from)
    pub fn left_element(&self, op: &Mat2, from: usize, to: usize) -> C64 {
        mat2_inner(&self.left[to], &mat2_mul(op, &self.right[from]))
    }

    /// Tr(ξ_to^† χ_from op)
    pub fn right_element(&self, op: &Mat2, from: usize, to: usize) -> C64 {
        mat2_inner(&self.left[to], &mat2_mul(&self.right[from], op))
    }

    /// Tr(op χ_μ)
    pub fn trace(&self, op: &Mat2, mu: usize) -> C64 {
        mat2_trace(&mat2_mul(op, &self.right[mu]))
    }

    pub fn steady_state(&self) -> Mat2 {
        self.right[0]
    }
}

pub fn qubit_eigensystem(detuning: f64, drive: C64, gamma: f64) -> Result<QubitEigensystem> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(invalid("qubit_gamma", "must be strictly positive"));
    }
    if !detuning.is_finite() || !drive.re.is_finite() || !drive.im.is_finite() {
        return Err(invalid("qubit drive", "must be finite"));
    }
    let l = qubit_liouvillian(detuning, drive, gamma);
    let (values, vecs, _) = diagonalize(&l)?;
    let mut order: Vec<usize> = (0..4).collect();
    let steady = (0..4).min_by(|&a, &b| values[a].norm().total_cmp(&values[b].norm())).unwrap();
    order.retain(|&i| i != steady);
    order.sort_by(|&a, &b| values[a].im.total_cmp(&values[b].im).then(values[a].re.total_cmp(&values[b].re)));
    order.insert(0, steady);

    let mut right = [[[ZERO; 2]; 2]; 4];
    let mut eigenvalues = [ZERO; 4];
    for (mu, &idx) in order.iter().enumerate() {
        let mut m: Mat2 = [[vecs[(0, idx)], vecs[(2, idx)]], [vecs[(1, idx)], vecs[(3, idx)]]];
        if mu == 0 {
            let t = mat2_trace(&m);
            if t.norm() < 1e-12 {
                return Err(Error::Solver("steady qubit eigenvector has zero trace".into()));
            }
            m.iter_mut().flatten().for_each(|x| *x /= t);
        } else {
            let norm = mat2_inner(&m, &m).re.sqrt();
            let big = m.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max);
            let pivot = *m.iter().flatten().find(|x| x.norm() > big * (1.0 - 1e-9)).unwrap();
            let phase = pivot.conj() / pivot.norm();
            m.iter_mut().flatten().for_each(|x| *x *= phase / norm);
        }
        right[mu] = m;
        eigenvalues[mu] = if mu == 0 { ZERO } else { values[idx] };
    }

    let r = Mat::from_fn(4, 4, |i, mu| {
        let m = &right[mu];
        [m[0][0], m[1][0], m[0][1], m[1][1]][i]
    });
    let rinv = crate::linalg::dense_inverse(&r);
    let mut left = [[[ZERO; 2]; 2]; 4];
    for (mu, xi) in left.iter_mut().enumerate() {
        // (ξ|X) = Tr(ξ^† X) = Σ conj(ξ_ij) X_ij, so ξ_ij = conj(R^{-1}[μ, i + 2j]).
        *xi = [[rinv[(mu, 0)].conj(), rinv[(mu, 2)].conj()], [rinv[(mu, 1)].conj(), rinv[(mu, 3)].conj()]];
    }
    for a in 0..4 {
        for b in 0..4 {
            let want = if a == b { ONE } else { ZERO };
            let got = mat2_inner(&left[a], &right[b]);
            if (got - want).norm() > 1e-10 {
                return Err(Error::Defective(format!("qubit eigenbasis biorthonormality residual {:.2e}", (got - want).norm())));
            }
        }
    }
    for mu in 1..4 {
        if eigenvalues[mu].re >= 0.0 {
            return Err(Error::Solver(format!("qubit eigenvalue {} is not decaying", eigenvalues[mu])));
        }
    }

    let mut sys = QubitEigensystem {
        detuning,
        drive,
        gamma,
        eigenvalues,
        right,
        left,
        left_plus: [[ZERO; 4]; 4],
        right_plus: [[ZERO; 4]; 4],
        left_minus: [[ZERO; 4]; 4],
        right_minus: [[ZERO; 4]; 4],
    };
    for to in 0..4 {
        for from in 0..4 {
            sys.left_plus[to][from] = sys.left_element(&SIGMA_PLUS, from, to);
            sys.right_plus[to][from] = sys.right_element(&SIGMA_PLUS, from, to);
            sys.left_minus[to][from] = sys.left_element(&SIGMA_MINUS, from, to);
            sys.right_minus[to][from] = sys.right_element(&SIGMA_MINUS, from, to);
        }
    }
    Ok(sys)
}

/// Coherent displacement a_k → b_k + α_k and the resulting qubit drives.
#[derive(Clone, Debug, PartialEq)]
pub struct Displacement {
    /// α_k per mode; non-zero only for modes that overlap the homogeneous drive.
    pub alpha: Vec<C64>,
    /// ε_{q,r} = g Σ_k c_{k,r} α_k per site.
    pub qubit_drive: Vec<C64>,
    /// Σ_k c_{k,r} α_k per site: the cavity field amplitude at site r.
    pub site_field: Vec<C64>,
}

impl Displacement {
    pub fn uniform_alpha(&self, modes: &ModeBasis) -> Option<C64> {
        modes.uniform.map(|k| self.alpha[k])
    }
}

/// α_k = −ε t_k^*/(δω_k − iγ/2) with t_k = Σ_r c_{k,r}; for the uniform mode
/// this is −√N ε/(δω_0 − iγ/2) and ε_q = gα/√N.
pub fn displacement(params: &ModelParams, modes: &ModeBasis) -> Displacement {
    let n = modes.n_sites();
    let tol = 1e-12 * (n as f64).sqrt();
    let alpha: Vec<C64> = (0..modes.n_modes())
        .map(|k| {
            let t = modes.drive_overlap(k);
            if t.norm() < tol {
                ZERO
            } else {
                let den = C64::new(modes.detuning(k, params), -params.gamma / 2.0);
                -(t.conj() * params.epsilon) / den
            }
        })
        .collect();
    let site_field: Vec<C64> = (0..n)
        .map(|r| (0..modes.n_modes()).filter(|&k| alpha[k] != ZERO).map(|k| modes.coefficient(k, r) * alpha[k]).sum())
        .collect();
    let qubit_drive = site_field.iter().map(|b| b * params.g).collect();
    Displacement { alpha, qubit_drive, site_field }
}

/// L₀ spectrum of the whole lattice in the displaced frame.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub photons: Vec<PhotonMode>,
    /// Per-site qubit eigensystems; sites with equal drive share one.
    pub qubits: Vec<Arc<QubitEigensystem>>,
}

impl Spectrum {
    pub fn new(params: &ModelParams, modes: &ModeBasis, disp: &Displacement) -> Result<Self> {
        let photons = (0..modes.n_modes())
            .map(|k| PhotonMode { detuning: modes.detuning(k, params), gamma: params.gamma })
            .collect();
        let mut cache: Vec<(C64, Arc<QubitEigensystem>)> = Vec::new();
        let mut qubits = Vec::with_capacity(disp.qubit_drive.len());
        for &e in &disp.qubit_drive {
            let sys = match cache.iter().find(|(d, _)| (d - e).norm() <= 1e-14 * e.norm().max(1.0)) {
                Some((_, s)) => s.clone(),
                None => {
                    let s = Arc::new(qubit_eigensystem(params.qubit_detuning(), e, params.qubit_gamma)?);
                    cache.push((e, s.clone()));
                    s
                }
            };
            qubits.push(sys);
        }
        Ok(Spectrum { photons, qubits })
    }

    /// Σ_k λ_k(m_k, n_k) + Σ_r λ^q(μ_r)
    pub fn eigenvalue(&self, label: &ClusterLabel) -> C64 {
        unperturbed_eigenvalue(self, label)
    }
}

pub fn unperturbed_eigenvalue(spec: &Spectrum, label: &ClusterLabel) -> C64 {
    let mut acc = ZERO;
    for p in label.photons() {
        acc += spec.photons[p.mode as usize].eigenvalue(p.m as u32, p.n as u32);
    }
    for q in label.qubits() {
        acc += spec.qubits[q.site as usize].eigenvalues[q.mu as usize];
    }
    acc
}
