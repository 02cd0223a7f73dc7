use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::{build_modes, LatticeSpec, ModeBasis, ModelParams};
use crate::linalg::ZERO;
use crate::resum::HopSpace;
use crate::unperturbed::{displacement, Displacement, QubitEigensystem, Spectrum};

use super::label::ClusterLabel;

/// Photon label change produced by one JC hop on mode k.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Transition {
    LowerM,
    RaiseN,
    RaiseM,
    LowerN,
}

impl Transition {
    pub(crate) const ALL: [Transition; 4] = [Transition::LowerM, Transition::RaiseN, Transition::RaiseM, Transition::LowerN];

    pub(crate) fn apply(self, (m, n): (u8, u8)) -> Option<(u8, u8)> {
        match self {
            Transition::LowerM => (m > 0).then(|| (m - 1, n)),
            Transition::LowerN => (n > 0).then(|| (m, n - 1)),
            Transition::RaiseM => m.checked_add(1).map(|m| (m, n)),
            Transition::RaiseN => n.checked_add(1).map(|n| (m, n)),
        }
    }

    pub(crate) fn between(from: (u8, u8), to: (u8, u8)) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.apply(from) == Some(to))
    }
}

/// Driven-dissipative JC lattice in the displaced frame, viewed as a hop
/// space over cluster labels.
#[derive(Debug)]
pub struct JcSystem {
    pub params: ModelParams,
    pub modes: ModeBasis,
    pub displacement: Displacement,
    pub spectrum: Spectrum,
    min_denominator: AtomicU64,
}

impl JcSystem {
    pub fn new(params: &ModelParams, spec: &LatticeSpec) -> Result<Self> {
        let modes = build_modes(spec, params)?;
        Self::from_modes(params, modes)
    }

    pub fn from_modes(params: &ModelParams, modes: ModeBasis) -> Result<Self> {
        params.validate()?;
        let displacement = displacement(params, &modes);
        let spectrum = Spectrum::new(params, &modes, &displacement)?;
        Ok(JcSystem { params: *params, modes, displacement, spectrum, min_denominator: AtomicU64::new(f64::INFINITY.to_bits()) })
    }

    pub fn n_modes(&self) -> usize {
        self.modes.n_modes()
    }

    pub fn n_sites(&self) -> usize {
        self.modes.n_sites()
    }

    pub fn qubit(&self, r: usize) -> &Arc<QubitEigensystem> {
        &self.spectrum.qubits[r]
    }

    /// Smallest |λ_to| met in any U denominator so far.
    pub fn min_denominator(&self) -> f64 {
        f64::from_bits(self.min_denominator.load(Ordering::Relaxed))
    }

    pub fn reset_min_denominator(&self) {
        self.min_denominator.store(f64::INFINITY.to_bits(), Ordering::Relaxed);
    }

    fn record_denominator(&self, v: f64) {
        // non-negative floats order like their bit patterns
        self.min_denominator.fetch_min(v.to_bits(), Ordering::Relaxed);
    }

    /// (ξ_to|L₁^{kr}|χ_from) restricted to mode k and qubit r, where
    /// L₁^{kr}ρ = −ig[c b_k σ⁺_r + c^* b_k^† σ⁻_r, ρ].
    pub(crate) fn l1_factor(&self, k: usize, r: usize, t: Transition, (m, n): (u8, u8), mu: usize, mu2: usize) -> C64 {
        let q = &*self.spectrum.qubits[r];
        let c = self.modes.coefficient(k, r);
        let sq = |x: u8| (x as f64).sqrt();
        let v = match t {
            Transition::LowerM => c * sq(m) * (q.left_plus[mu2][mu] - q.right_plus[mu2][mu]),
            Transition::RaiseN => -c * sq(n + 1) * q.right_plus[mu2][mu],
            Transition::RaiseM => c.conj() * sq(m + 1) * q.left_minus[mu2][mu],
            Transition::LowerN => c.conj() * sq(n) * (q.left_minus[mu2][mu] - q.right_minus[mu2][mu]),
        };
        v * C64::new(0.0, -self.params.g)
    }

    /// U^{kr}_{to,from} = −(ξ_to|L₁^{kr}|χ_from)/λ_to.
    pub fn u_kr_element(&self, k: usize, r: usize, from: &ClusterLabel, to: &ClusterLabel) -> Result<C64> {
        if from == to {
            return Ok(ZERO);
        }
        // everything except mode k and qubit r must agree
        let strip = |l: &ClusterLabel| l.clone().with_photon(k, (0, 0)).with_qubit(r, 0);
        if strip(from) != strip(to) {
            return Ok(ZERO);
        }
        let Some(t) = Transition::between(from.photon(k), to.photon(k)) else {
            return Ok(ZERO);
        };
        if to.photon(k) == (0, 0) && to.qubit(r) == 0 {
            return Ok(ZERO);
        }
        let lam = self.spectrum.eigenvalue(to);
        if lam.norm() < 1e-14 {
            return Err(Error::Degeneracy { state: to.to_string(), magnitude: lam.norm() });
        }
        let e = self.l1_factor(k, r, t, from.photon(k), from.qubit(r) as usize, to.qubit(r) as usize);
        Ok(-e / lam)
    }

    /// Visits every non-zero U^{kr} element out of `from` for fixed (k, r).
    fn hops_kr(
        &self,
        from: &ClusterLabel,
        lam_from: C64,
        k: usize,
        r: usize,
        sink: &mut impl FnMut(&ClusterLabel, C64),
        min_den: &mut f64,
    ) -> Result<()> {
        let pm = from.photon(k);
        let mu = from.qubit(r) as usize;
        let photon = &self.spectrum.photons[k];
        let q = &*self.spectrum.qubits[r];
        let lam_base = lam_from - photon.eigenvalue(pm.0 as u32, pm.1 as u32) - q.eigenvalues[mu];
        for t in Transition::ALL {
            let Some(pt) = t.apply(pm) else { continue };
            let lam_p = lam_base + photon.eigenvalue(pt.0 as u32, pt.1 as u32);
            let base = from.clone().with_photon(k, pt);
            for mu2 in 0..4 {
                // trace of a commutator: exact zero when (k, r) both return to steady
                if pt == (0, 0) && mu2 == 0 {
                    continue;
                }
                let e = self.l1_factor(k, r, t, pm, mu, mu2);
                if e == ZERO {
                    continue;
                }
                let lam = lam_p + q.eigenvalues[mu2];
                let mag = lam.norm();
                if mag < 1e-14 {
                    let to = base.clone().with_qubit(r, mu2 as u8);
                    return Err(Error::Degeneracy { state: to.to_string(), magnitude: mag });
                }
                *min_den = min_den.min(mag);
                let to = if mu2 == mu { base.clone() } else { base.clone().with_qubit(r, mu2 as u8) };
                sink(&to, -e / lam);
            }
        }
        Ok(())
    }

    /// Closed-form Σ₂(s) = Σ_τ U_{s,τ}U_{τ,s}: the return hop acts on the same
    /// mode; it acts on the same qubit if that qubit changed, otherwise on any
    /// qubit whose label is left alone.
    pub fn sigma2_state(&self, s: &ClusterLabel) -> Result<C64> {
        let lam_s = self.spectrum.eigenvalue(s);
        let mut acc = ZERO;
        let n_sites = self.n_sites();
        for k in 0..self.n_modes() {
            let pm = s.photon(k);
            let photon = &self.spectrum.photons[k];
            let lam_k = photon.eigenvalue(pm.0 as u32, pm.1 as u32);
            for r in 0..n_sites {
                let mu = s.qubit(r) as usize;
                let q = &*self.spectrum.qubits[r];
                for t in Transition::ALL {
                    let Some(pt) = t.apply(pm) else { continue };
                    let Some(back) = Transition::between(pt, pm) else { continue };
                    let lam_p = lam_s - lam_k + photon.eigenvalue(pt.0 as u32, pt.1 as u32);
                    for mu2 in 0..4 {
                        if pt == (0, 0) && mu2 == 0 {
                            continue;
                        }
                        let e = self.l1_factor(k, r, t, pm, mu, mu2);
                        if e == ZERO {
                            continue;
                        }
                        let lam_tau = lam_p - q.eigenvalues[mu] + q.eigenvalues[mu2];
                        if lam_tau.norm() < 1e-14 {
                            return Err(Error::Degeneracy { state: format!("loop from {s}"), magnitude: lam_tau.norm() });
                        }
                        let forward = -e / lam_tau;
                        // U_{s,τ}: s is the target, so its eigenvalue is the denominator
                        let mut back_sum = ZERO;
                        let mut add_back = |r2: usize, from_mu: usize, to_mu: usize| {
                            if pm == (0, 0) && to_mu == 0 {
                                return;
                            }
                            back_sum += self.l1_factor(k, r2, back, pt, from_mu, to_mu);
                        };
                        if mu2 != mu {
                            add_back(r, mu2, mu);
                        } else {
                            for r2 in 0..n_sites {
                                let m2 = s.qubit(r2) as usize;
                                add_back(r2, m2, m2);
                            }
                        }
                        if back_sum != ZERO {
                            if lam_s.norm() < 1e-14 {
                                return Err(Error::Degeneracy { state: s.to_string(), magnitude: lam_s.norm() });
                            }
                            acc += forward * (-back_sum / lam_s);
                        }
                    }
                }
            }
        }
        Ok(acc)
    }
}

impl HopSpace for JcSystem {
    type State = ClusterLabel;

    fn steady(&self) -> ClusterLabel {
        ClusterLabel::steady()
    }

    fn hops<F: FnMut(&ClusterLabel, C64)>(&self, from: &ClusterLabel, mut sink: F) -> Result<()> {
        let lam_from = self.spectrum.eigenvalue(from);
        let mut min_den = f64::INFINITY;
        for k in 0..self.n_modes() {
            for r in 0..self.n_sites() {
                if self.modes.coefficient(k, r) == ZERO {
                    continue;
                }
                self.hops_kr(from, lam_from, k, r, &mut sink, &mut min_den)?;
            }
        }
        if min_den < self.min_denominator() {
            self.record_denominator(min_den);
        }
        Ok(())
    }

    fn sigma2(&self, state: &ClusterLabel) -> Option<Result<C64>> {
        Some(self.sigma2_state(state))
    }
}
