use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{build_modes, LatticeSpec, ModelParams};
use crate::linalg::{Csr, ONE, ZERO};

use super::dense::{displaced_model, ExactObservables};

/// Times are in units of 1/Γ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryConfig {
    pub cutoff: usize,
    pub dt: f64,
    pub total_time: f64,
    pub burn_in: f64,
    pub trajectories: usize,
    pub seed: u64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig { cutoff: 5, dt: 0.002, total_time: 200.0, burn_in: 50.0, trajectories: 256, seed: 0 }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff < 2 {
            return Err(invalid("cutoff", "need at least two Fock levels"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", "must be positive"));
        }
        if !(self.total_time > self.burn_in) || self.burn_in < 0.0 {
            return Err(invalid("total_time", "must exceed the burn-in time"));
        }
        if self.trajectories < 2 {
            return Err(invalid("trajectories", "need at least two for an error estimate"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryResult {
    pub mean: ExactObservables,
    /// Standard errors; complex entries hold the errors of the real and
    /// imaginary parts.
    pub stderr: ExactObservables,
    pub jumps: u64,
}

/// Displaced-frame Monte-Carlo wavefunction average. Each trajectory evolves
/// the unnormalized state under H_eff with RK4 and jumps when its squared norm
/// falls below a uniform random threshold; the jump channel is drawn with
/// weight ‖Cψ‖².
pub fn mcwf_run(params: &ModelParams, spec: &LatticeSpec, cfg: &TrajectoryConfig) -> Result<TrajectoryResult> {
    params.validate()?;
    cfg.validate()?;
    let modes = build_modes(spec, params)?;
    let model = displaced_model(params, &modes, cfg.cutoff);
    let heff = model.model.effective_hamiltonian().scale(C64::new(0.0, -1.0));
    let jumps = &model.model.jumps;
    let d = model.model.layout.dim();
    let unit = 1.0 / params.qubit_gamma;
    let dt = cfg.dt * unit;
    let steps = (cfg.total_time / cfg.dt).round() as usize;
    let burn = (cfg.burn_in / cfg.dt).round() as usize;
    let numbers: Vec<Csr> = model.qubit_ops.iter().map(|s| s.adjoint().matmul(s)).collect();
    let occ: Vec<Csr> = model.photon_ops.iter().map(|b| b.adjoint().matmul(b)).collect();

    let run_one = |traj: usize| -> Result<(Vec<C64>, u64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(traj as u64);
        let mut psi = vec![ZERO; d];
        psi[0] = ONE;
        let mut bufs = Rk4::new(d);
        let mut threshold: f64 = rng.random();
        let nq = numbers.len();
        let np = occ.len();
        let mut acc = vec![ZERO; 2 * nq + 2 * np];
        let mut tmp = vec![ZERO; d];
        let mut njumps = 0u64;
        for step in 0..steps {
            let before = norm_sqr(&psi);
            bufs.step(&heff, &mut psi, dt);
            let after = norm_sqr(&psi);
            if !after.is_finite() {
                return Err(Error::Trajectory { seed: cfg.seed, trajectory: traj, step, reason: "state became NaN".into() });
            }
            if after > before * (1.0 + 1e-6) {
                return Err(Error::Trajectory { seed: cfg.seed, trajectory: traj, step, reason: "norm grew during a step; the integrator is unstable, reduce dt".into() });
            }
            let dp = 1.0 - after / before;
            if dp > 0.1 {
                return Err(Error::Trajectory {
                    seed: cfg.seed,
                    trajectory: traj,
                    step,
                    reason: format!("jump probability {dp:.3} per step exceeds 0.1; reduce dt"),
                });
            }
            if after < threshold {
                let weights: Vec<f64> = jumps
                    .iter()
                    .map(|c| {
                        c.apply_into(&psi, &mut tmp);
                        norm_sqr(&tmp)
                    })
                    .collect();
                let total: f64 = weights.iter().sum();
                let mut pick = rng.random::<f64>() * total;
                let mut channel = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if pick < *w {
                        channel = i;
                        break;
                    }
                    pick -= w;
                }
                jumps[channel].apply_into(&psi, &mut tmp);
                let nrm = norm_sqr(&tmp).sqrt();
                if !(nrm > 0.0) {
                    return Err(Error::Trajectory { seed: cfg.seed, trajectory: traj, step, reason: "jump onto a null state".into() });
                }
                for (p, t) in psi.iter_mut().zip(&tmp) {
                    *p = t / nrm;
                }
                threshold = rng.random();
                njumps += 1;
            }
            if step >= burn {
                let nrm = norm_sqr(&psi);
                let mut i = 0;
                for op in model.qubit_ops.iter().chain(&numbers).chain(&model.photon_ops).chain(&occ) {
                    acc[i] += sandwich(op, &psi, &mut tmp) / nrm;
                    i += 1;
                }
            }
        }
        let samples = (steps - burn).max(1) as f64;
        acc.iter_mut().for_each(|a| *a /= samples);
        Ok((acc, njumps))
    };

    let runs: Vec<(Vec<C64>, u64)> = (0..cfg.trajectories).into_par_iter().map(run_one).collect::<Result<_>>()?;
    let nq = numbers.len();
    let np = occ.len();
    let per_traj: Vec<ExactObservables> = runs
        .iter()
        .map(|(v, _)| {
            let sigma_minus = v[..nq].to_vec();
            let sigma_z = v[nq..2 * nq].iter().map(|p| 2.0 * p.re - 1.0).collect();
            let fields = &v[2 * nq..2 * nq + np];
            let nums = &v[2 * nq + np..];
            let photon_field = fields.iter().zip(&model.alpha).map(|(b, a)| b + a).collect();
            let occupation = fields.iter().zip(nums).zip(&model.alpha).map(|((b, n), a)| n.re + 2.0 * (a.conj() * b).re + a.norm_sqr()).collect();
            ExactObservables { sigma_minus, sigma_z, photon_field, occupation }
        })
        .collect();
    let (mean, stderr) = aggregate(&per_traj);
    Ok(TrajectoryResult { mean, stderr, jumps: runs.iter().map(|r| r.1).sum() })
}

fn aggregate(samples: &[ExactObservables]) -> (ExactObservables, ExactObservables) {
    let n = samples.len() as f64;
    let stats = |xs: Vec<f64>| -> (f64, f64) {
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    };
    let complex = |get: &dyn Fn(&ExactObservables) -> C64| -> (C64, C64) {
        let (mr, sr) = stats(samples.iter().map(|s| get(s).re).collect());
        let (mi, si) = stats(samples.iter().map(|s| get(s).im).collect());
        (C64::new(mr, mi), C64::new(sr, si))
    };
    let first = &samples[0];
    let mut mean = first.clone();
    let mut se = first.clone();
    for i in 0..first.sigma_minus.len() {
        (mean.sigma_minus[i], se.sigma_minus[i]) = complex(&|s| s.sigma_minus[i]);
        (mean.sigma_z[i], se.sigma_z[i]) = stats(samples.iter().map(|s| s.sigma_z[i]).collect());
    }
    for k in 0..first.photon_field.len() {
        (mean.photon_field[k], se.photon_field[k]) = complex(&|s| s.photon_field[k]);
        (mean.occupation[k], se.occupation[k]) = stats(samples.iter().map(|s| s.occupation[k]).collect());
    }
    (mean, se)
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// ⟨ψ|O|ψ⟩
fn sandwich(op: &Csr, psi: &[C64], tmp: &mut [C64]) -> C64 {
    op.apply_into(psi, tmp);
    psi.iter().zip(tmp.iter()).map(|(a, b)| a.conj() * b).sum()
}

struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    y: Vec<C64>,
}

impl Rk4 {
    fn new(d: usize) -> Self {
        Rk4 { k1: vec![ZERO; d], k2: vec![ZERO; d], k3: vec![ZERO; d], k4: vec![ZERO; d], y: vec![ZERO; d] }
    }

    /// ψ ← ψ + RK4 step of dψ/dt = Aψ.
    fn step(&mut self, a: &Csr, psi: &mut [C64], dt: f64) {
        a.apply_into(psi, &mut self.k1);
        for i in 0..psi.len() {
            self.y[i] = psi[i] + self.k1[i] * (dt / 2.0);
        }
        a.apply_into(&self.y, &mut self.k2);
        for i in 0..psi.len() {
            self.y[i] = psi[i] + self.k2[i] * (dt / 2.0);
        }
        a.apply_into(&self.y, &mut self.k3);
        for i in 0..psi.len() {
            self.y[i] = psi[i] + self.k3[i] * dt;
        }
        a.apply_into(&self.y, &mut self.k4);
        for i in 0..psi.len() {
            psi[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * (dt / 6.0);
        }
    }
}
