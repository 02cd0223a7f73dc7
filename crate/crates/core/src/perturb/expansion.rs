use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::linalg::{ONE, ZERO};
use crate::resum::{chain_column, resum_factor, self_energy, ChainOptions};

use super::label::ClusterLabel;
use super::system::JcSystem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionConfig {
    /// Highest rank J.
    pub max_rank: usize,
    /// Loop order L of the self-energy; below 2 disables resummation.
    pub loop_order: usize,
    pub prune: f64,
    pub parallel: bool,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig { max_rank: 2, loop_order: 2, prune: 1e-14, parallel: true }
    }
}

#[derive(Clone, Debug)]
pub struct Expansion {
    /// `ranks[j]` holds the resummed rank-j cluster amplitudes, sorted by label.
    pub ranks: Vec<Vec<(ClusterLabel, C64)>>,
    pub config: ExpansionConfig,
    /// U-elements evaluated per rank.
    pub work: Vec<u64>,
    /// Smallest |λ| met in a U denominator.
    pub min_denominator: f64,
    /// Smallest |1 − Σ| among resummed clusters.
    pub min_resum_denominator: f64,
    /// Largest |Σ| among resummed clusters.
    pub max_sigma: f64,
}

impl Expansion {
    pub fn max_rank(&self) -> usize {
        self.config.max_rank
    }

    pub fn amplitude(&self, label: &ClusterLabel) -> C64 {
        self.ranks
            .iter()
            .filter_map(|r| r.binary_search_by(|(l, _)| l.cmp(label)).ok().map(|i| r[i].1))
            .sum()
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &ClusterLabel, C64)> {
        self.ranks.iter().enumerate().flat_map(|(j, r)| r.iter().map(move |(l, a)| (j, l, *a)))
    }
}

/// Resummed expansion Σ_{j≤J} (1 − Σ)⁻¹ T_j e₀. `keep` restricts which final
/// clusters are stored (all are still enumerated).
pub fn build_expansion(
    sys: &JcSystem,
    cfg: &ExpansionConfig,
    keep: Option<&(dyn Fn(&ClusterLabel) -> bool + Sync)>,
) -> Result<Expansion> {
    sys.reset_min_denominator();
    let mut ranks = vec![vec![(ClusterLabel::steady(), ONE)]];
    let mut work = vec![0u64];
    let mut min_resum = f64::INFINITY;
    let mut max_sigma = 0.0f64;
    let opts = ChainOptions { prune: cfg.prune, keep, parallel: cfg.parallel };
    for j in 1..=cfg.max_rank {
        let (col, stats) = chain_column(sys, j, &opts)?;
        work.push(stats.elements);
        let mut entries: Vec<(ClusterLabel, C64)> = col.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if cfg.loop_order >= 2 {
            for (label, amp) in entries.iter_mut() {
                let sigma = self_energy(sys, label, cfg.loop_order)?;
                min_resum = min_resum.min((ONE - sigma).norm());
                max_sigma = max_sigma.max(sigma.norm());
                *amp *= resum_factor(&[sigma], label)?;
            }
        }
        entries.retain(|(_, a)| *a != ZERO);
        ranks.push(entries);
    }
    Ok(Expansion { ranks, config: *cfg, work, min_denominator: sys.min_denominator(), min_resum_denominator: min_resum, max_sigma })
}

fn single_rank(sys: &JcSystem, j: usize, loop_order: usize) -> Result<Vec<(ClusterLabel, C64)>> {
    let cfg = ExpansionConfig { max_rank: j, loop_order, ..Default::default() };
    Ok(build_expansion(sys, &cfg, None)?.ranks.swap_remove(j))
}

/// Rank-1 clusters (one photon mode, at most one qubit), resummed at Σ₂.
pub fn rank1(sys: &JcSystem) -> Result<Vec<(ClusterLabel, C64)>> {
    single_rank(sys, 1, 2)
}

/// Rank-2 clusters, resummed at Σ₂.
pub fn rank2(sys: &JcSystem) -> Result<Vec<(ClusterLabel, C64)>> {
    single_rank(sys, 2, 2)
}
