//! Oracle sweeps over δΩ/Γ, emitting the same rows as the perturbative sweep.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, ModelParams};
use crate::perturb::SweepRow;

use super::dense::{dense_steady_state, ExactObservables, SteadyOptions};
use super::mcwf::{mcwf_run, TrajectoryConfig};

fn row(detuning: f64, o: &ExactObservables, flagged: bool, note: Option<String>) -> SweepRow {
    SweepRow {
        detuning,
        sigma_minus_abs: o.sigma_minus_abs_mean(),
        sigma_z: o.sigma_z_mean(),
        occupations: o.occupation.clone(),
        flagged,
        error: note,
    }
}

fn failed(detuning: f64, modes: usize, e: &Error) -> SweepRow {
    SweepRow { detuning, sigma_minus_abs: f64::NAN, sigma_z: f64::NAN, occupations: vec![f64::NAN; modes], flagged: true, error: Some(e.to_string()) }
}

fn mode_count(spec: &LatticeSpec) -> Result<usize> {
    spec.site_count().ok_or_else(|| Error::Unsupported("oracles need a finite lattice".into()))
}

/// Dense steady state per grid point. Points whose solve warns are flagged.
pub fn dense_sweep(params: &ModelParams, spec: &LatticeSpec, grid: &[f64], cutoff: usize, opts: &SteadyOptions) -> Result<Vec<SweepRow>> {
    params.validate()?;
    let n = mode_count(spec)?;
    let rows = grid
        .par_iter()
        .map(|&x| {
            let p = params.with_qubit_detuning(x * params.qubit_gamma);
            match dense_steady_state(&p, spec, cutoff, opts) {
                Ok(s) => Ok(row(x, &s.observables, !s.warnings.is_empty(), None)),
                Err(e @ (Error::TooLarge { .. } | Error::InvalidParameter { .. } | Error::Unsupported(_))) => Err(e),
                Err(e) => Ok(failed(x, n, &e)),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows)
}

/// Trajectory averages per grid point; trajectories run in parallel.
pub fn mcwf_sweep(params: &ModelParams, spec: &LatticeSpec, grid: &[f64], cfg: &TrajectoryConfig) -> Result<Vec<SweepRow>> {
    params.validate()?;
    cfg.validate()?;
    let n = mode_count(spec)?;
    let mut rows = Vec::with_capacity(grid.len());
    for &x in grid {
        let p = params.with_qubit_detuning(x * params.qubit_gamma);
        rows.push(match mcwf_run(&p, spec, cfg) {
            Ok(r) => row(x, &r.mean, false, None),
            Err(e @ (Error::InvalidParameter { .. } | Error::Unsupported(_))) => return Err(e),
            Err(e) => failed(x, n, &e),
        });
    }
    Ok(rows)
}
