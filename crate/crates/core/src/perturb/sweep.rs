use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_modes, infinite_mode_density, Geometry, LatticeSpec, ModeBasis, ModelParams, Sites};
use crate::linalg::{ONE, ZERO};
use crate::unperturbed::{qubit_eigensystem, PhotonMode, QubitEigensystem, SIGMA_MINUS, SIGMA_Z};

use super::expansion::{build_expansion, ExpansionConfig};
use super::label::ClusterLabel;
use super::observable::{expectation, Observable};
use super::system::{JcSystem, Transition};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub max_rank: usize,
    /// 0 disables resummation; 2 resums with Σ₂.
    pub loop_order: usize,
    pub prune: f64,
    pub quadrature_tol: f64,
    /// Flag points with |λ| below this multiple of Γ in a denominator.
    pub flag_denominator: f64,
    /// Flag points with |1 − Σ| below this value.
    pub flag_resum: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { max_rank: 2, loop_order: 2, prune: 1e-14, quadrature_tol: 1e-10, flag_denominator: 0.1, flag_resum: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// δΩ/Γ
    pub detuning: f64,
    /// Site-averaged |⟨σ⁻⟩|.
    pub sigma_minus_abs: f64,
    /// Site-averaged ⟨σ^z⟩.
    pub sigma_z: f64,
    /// Lab-frame photon number per mode.
    pub occupations: Vec<f64>,
    pub flagged: bool,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(detuning: f64, modes: usize, e: &Error) -> Self {
        SweepRow {
            detuning,
            sigma_minus_abs: f64::NAN,
            sigma_z: f64::NAN,
            occupations: vec![f64::NAN; modes],
            flagged: true,
            error: Some(e.to_string()),
        }
    }
}

/// Clusters that single-constituent observables can see.
pub fn single_constituent(l: &ClusterLabel) -> bool {
    l.photons().len() + l.qubits().len() <= 1
}

/// Evaluates one sweep point of a finite lattice with the full cluster engine.
pub fn sweep_point(params: &ModelParams, modes: &ModeBasis, cfg: &SweepConfig) -> Result<SweepRow> {
    let sys = JcSystem::from_modes(params, modes.clone())?;
    let ecfg = ExpansionConfig { max_rank: cfg.max_rank, loop_order: cfg.loop_order, prune: cfg.prune, parallel: true };
    let exp = build_expansion(&sys, &ecfg, Some(&single_constituent))?;
    let n = sys.n_sites();
    let (mut sm, mut sz) = (0.0, 0.0);
    for r in 0..n {
        sm += expectation(&Observable::sigma_minus(r), &sys, &exp)?.norm();
        sz += expectation(&Observable::sigma_z(r), &sys, &exp)?.re;
    }
    let occupations = (0..sys.n_modes())
        .map(|k| expectation(&Observable::lab_mode_occupation(&sys, k), &sys, &exp).map(|v| v.re))
        .collect::<Result<Vec<_>>>()?;
    let flagged = exp.min_denominator < cfg.flag_denominator * params.qubit_gamma || exp.min_resum_denominator < cfg.flag_resum;
    Ok(SweepRow {
        detuning: params.qubit_detuning() / params.qubit_gamma,
        sigma_minus_abs: sm / n as f64,
        sigma_z: sz / n as f64,
        occupations,
        flagged,
        error: None,
    })
}

/// Finite-lattice sweep over δΩ/Γ values; ω and Ω stay fixed while ω_d moves.
pub fn sweep(params: &ModelParams, spec: &LatticeSpec, grid: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    params.validate()?;
    if spec.sites == Sites::Infinite {
        return sweep_infinite(params, spec, grid, cfg);
    }
    let modes = build_modes(spec, params)?;
    Ok(grid
        .par_iter()
        .map(|&x| {
            let p = params.with_qubit_detuning(x * params.qubit_gamma);
            sweep_point(&p, &modes, cfg).unwrap_or_else(|e| SweepRow::failed(x, modes.n_modes(), &e))
        })
        .collect())
}

/// Infinite chain or global coupling, with mode sums replaced by the
/// mode-density integral. Photon occupations are not reported.
pub fn sweep_infinite(params: &ModelParams, spec: &LatticeSpec, grid: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    params.validate()?;
    let density = infinite_mode_density(spec, params)?;
    Ok(grid
        .par_iter()
        .map(|&x| {
            let p = params.with_qubit_detuning(x * params.qubit_gamma);
            let avg = |f: &dyn Fn(f64) -> Result<[C64; 12]>| density.integrate(cfg.quadrature_tol, |node| f(node.frequency));
            translation_invariant(&p, density.uniform_frequency, &avg, cfg)
                .map(|r| r.into_row(&p, cfg))
                .unwrap_or_else(|e| SweepRow::failed(x, 0, &e))
        })
        .collect())
}

/// Site-qubit response of a plane-wave lattice at rank 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitResponse {
    pub sigma_minus: C64,
    pub sigma_z: C64,
    pub min_resum_denominator: f64,
    pub min_denominator: f64,
}

impl QubitResponse {
    fn into_row(self, params: &ModelParams, cfg: &SweepConfig) -> SweepRow {
        SweepRow {
            detuning: params.qubit_detuning() / params.qubit_gamma,
            sigma_minus_abs: self.sigma_minus.norm(),
            sigma_z: self.sigma_z.re,
            occupations: vec![],
            flagged: self.min_denominator < cfg.flag_denominator * params.qubit_gamma || self.min_resum_denominator < cfg.flag_resum,
            error: None,
        }
    }
}

/// Translation-invariant evaluation for finite plane-wave lattices, using
/// (1/N)Σ_k over the actual modes. Agrees with the full engine.
pub fn translation_invariant_finite(params: &ModelParams, modes: &ModeBasis, cfg: &SweepConfig) -> Result<QubitResponse> {
    let plane = matches!(modes.spec.geometry, Geometry::ChainPeriodic | Geometry::GlobalCoupling | Geometry::SquarePeriodic);
    let Some(k0) = modes.uniform.filter(|_| plane) else {
        return Err(Error::Unsupported("translation-invariant path needs a plane-wave lattice".into()));
    };
    let n = modes.n_modes() as f64;
    let avg = |f: &dyn Fn(f64) -> Result<[C64; 12]>| {
        let mut acc = [ZERO; 12];
        for m in &modes.modes {
            for (a, v) in acc.iter_mut().zip(f(m.frequency)?) {
                *a += v / n;
            }
        }
        Ok(acc)
    };
    translation_invariant(params, modes.modes[k0].frequency, &avg, cfg)
}

type ModeAverage<'a> = dyn Fn(&dyn Fn(f64) -> Result<[C64; 12]>) -> Result<[C64; 12]> + 'a;

/// With unit Bloch factors, for each μ ≠ 0 of the site-0 qubit:
/// rank-2 amplitude A(μ) = ⟨G1⟩ + G3(k₀) − ⟨G3⟩ and
/// loop Σ₂(μ) = ⟨L1⟩ + L3(k₀) − ⟨L3⟩, where ⟨·⟩ is the normalized mode
/// average. G1/L1 have both hops on site 0; G3/L3 start on another site whose
/// qubit stays steady, which brings the weight δ_{k,k₀} − 1/N.
fn translation_invariant(params: &ModelParams, uniform_frequency: f64, avg: &ModeAverage<'_>, cfg: &SweepConfig) -> Result<QubitResponse> {
    if cfg.max_rank > 2 || (cfg.loop_order > 2) {
        return Err(Error::Unsupported("analytic mode sums are implemented up to rank 2 with loop order 2".into()));
    }
    let alpha = -(C64::new(params.epsilon, 0.0)) / C64::new(uniform_frequency - params.drive_omega, -params.gamma / 2.0);
    // per-site field −ε/(δω₀ − iγ/2); the qubit drive is g times it
    let drive = alpha * params.g;
    let q = qubit_eigensystem(params.qubit_detuning(), drive, params.qubit_gamma)?;
    let g = params.g;
    let mut min_den = f64::INFINITY;
    for mu in 1..4 {
        min_den = min_den.min(q.eigenvalues[mu].norm());
    }
    let parts = |freq: f64| -> Result<[C64; 12]> { loop_parts(&q, g, PhotonMode { detuning: freq - params.drive_omega, gamma: params.gamma }) };
    let mean = avg(&parts)?;
    let at_uniform = parts(uniform_frequency)?;
    let mut sm = q.trace(&SIGMA_MINUS, 0);
    let mut sz = q.trace(&SIGMA_Z, 0);
    let mut min_resum = f64::INFINITY;
    if cfg.max_rank >= 2 {
        for mu in 1..4 {
            let i = mu - 1;
            let a = mean[i] + at_uniform[3 + i] - mean[3 + i];
            let sigma = mean[6 + i] + at_uniform[9 + i] - mean[9 + i];
            let factor = if cfg.loop_order >= 2 {
                min_resum = min_resum.min((ONE - sigma).norm());
                crate::resum::resum_factor(&[sigma], &format!("r0:{mu}"))?
            } else {
                ONE
            };
            sm += factor * a * q.trace(&SIGMA_MINUS, mu);
            sz += factor * a * q.trace(&SIGMA_Z, mu);
        }
    }
    Ok(QubitResponse { sigma_minus: sm, sigma_z: sz, min_resum_denominator: min_resum, min_denominator: min_den })
}

/// −ig × (photon/qubit factor) with unit Bloch coefficient.
fn unit_l1(q: &QubitEigensystem, g: f64, t: Transition, (m, n): (u8, u8), mu: usize, mu2: usize) -> C64 {
    let sq = |x: u8| (x as f64).sqrt();
    let v = match t {
        Transition::LowerM => sq(m) * (q.left_plus[mu2][mu] - q.right_plus[mu2][mu]),
        Transition::RaiseN => -sq(n + 1) * q.right_plus[mu2][mu],
        Transition::RaiseM => sq(m + 1) * q.left_minus[mu2][mu],
        Transition::LowerN => sq(n) * (q.left_minus[mu2][mu] - q.right_minus[mu2][mu]),
    };
    v * C64::new(0.0, -g)
}

/// [G1(μ=1..3), G3(μ), L1(μ), L3(μ)] for one mode.
fn loop_parts(q: &QubitEigensystem, g: f64, mode: PhotonMode) -> Result<[C64; 12]> {
    let mut out = [ZERO; 12];
    let den = |lam: C64| -> Result<C64> {
        if lam.norm() < 1e-14 {
            Err(Error::Degeneracy { state: "two-hop intermediate".into(), magnitude: lam.norm() })
        } else {
            Ok(lam)
        }
    };
    for (up, down, p) in [(Transition::RaiseN, Transition::LowerN, (0u8, 1u8)), (Transition::RaiseM, Transition::LowerM, (1, 0))] {
        let lam_p = mode.eigenvalue(p.0 as u32, p.1 as u32);
        for mu in 1..4 {
            let i = mu - 1;
            let lam_mu = den(q.eigenvalues[mu])?;
            for mu1 in 0..4 {
                // G1: steady → (p, μ1) → (0, μ), both on site 0
                let f = -unit_l1(q, g, up, (0, 0), 0, mu1) / den(lam_p + q.eigenvalues[mu1])?;
                let b = -unit_l1(q, g, down, p, mu1, mu) / lam_mu;
                out[i] += f * b;
                // L1: (0, μ) → (p, μ1) → (0, μ), both on site 0
                let f = -unit_l1(q, g, up, (0, 0), mu, mu1) / den(lam_p + q.eigenvalues[mu1])?;
                let b = -unit_l1(q, g, down, p, mu1, mu) / lam_mu;
                out[6 + i] += f * b;
            }
            // G3: other site leaves its steady qubit alone, site 0 goes 0 → μ
            let f = -unit_l1(q, g, up, (0, 0), 0, 0) / den(lam_p)?;
            let b = -unit_l1(q, g, down, p, 0, mu) / lam_mu;
            out[3 + i] += f * b;
            // L3: other site diagonal, site 0 stays at μ on the way back
            let f = -unit_l1(q, g, up, (0, 0), 0, 0) / den(lam_p + q.eigenvalues[mu])?;
            let b = -unit_l1(q, g, down, p, mu, mu) / lam_mu;
            out[9 + i] += f * b;
        }
    }
    Ok(out)
}
