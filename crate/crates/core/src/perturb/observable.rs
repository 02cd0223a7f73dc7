use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{ONE, ZERO};
use crate::unperturbed::{mat2_mul, photon_trace, Ladder, Mat2, IDENTITY2, SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z};

use super::expansion::Expansion;
use super::label::ClusterLabel;
use super::system::JcSystem;

/// Operator acting on one constituent. Photon operators are displaced-frame
/// ladder products written left to right.
#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    Qubit { site: usize, op: Mat2 },
    Photon { mode: usize, ops: Vec<Ladder> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coefficient: C64,
    /// At most one factor per constituent.
    pub factors: Vec<Factor>,
}

/// Linear combination of constituent products.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    pub terms: Vec<Term>,
}

impl Observable {
    fn single(f: Factor) -> Self {
        Observable { terms: vec![Term { coefficient: ONE, factors: vec![f] }] }
    }

    pub fn identity() -> Self {
        Observable { terms: vec![Term { coefficient: ONE, factors: vec![] }] }
    }

    pub fn qubit(site: usize, op: Mat2) -> Self {
        Self::single(Factor::Qubit { site, op })
    }

    pub fn sigma_minus(site: usize) -> Self {
        Self::qubit(site, SIGMA_MINUS)
    }

    pub fn sigma_plus(site: usize) -> Self {
        Self::qubit(site, SIGMA_PLUS)
    }

    pub fn sigma_z(site: usize) -> Self {
        Self::qubit(site, SIGMA_Z)
    }

    /// Displaced-frame b_k.
    pub fn mode_annihilate(mode: usize) -> Self {
        Self::single(Factor::Photon { mode, ops: vec![Ladder::Annihilate] })
    }

    /// Displaced-frame b_k^† b_k.
    pub fn mode_number(mode: usize) -> Self {
        Self::single(Factor::Photon { mode, ops: vec![Ladder::Create, Ladder::Annihilate] })
    }

    pub fn scaled(mut self, s: C64) -> Self {
        self.terms.iter_mut().for_each(|t| t.coefficient *= s);
        self
    }

    pub fn plus(mut self, other: Observable) -> Self {
        self.terms.extend(other.terms);
        self
    }

    /// Operator product self · other.
    pub fn times(&self, other: &Observable) -> Self {
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                let mut factors = a.factors.clone();
                for f in &b.factors {
                    merge_factor(&mut factors, f);
                }
                terms.push(Term { coefficient: a.coefficient * b.coefficient, factors });
            }
        }
        Observable { terms }
    }

    /// Lab-frame mode field a_k = b_k + α_k.
    pub fn lab_mode_field(sys: &JcSystem, mode: usize) -> Self {
        Self::mode_annihilate(mode).plus(Self::identity().scaled(sys.displacement.alpha[mode]))
    }

    /// Lab-frame occupation a_k^† a_k.
    pub fn lab_mode_occupation(sys: &JcSystem, mode: usize) -> Self {
        let a = sys.displacement.alpha[mode];
        Self::mode_number(mode)
            .plus(Self::mode_annihilate(mode).scaled(a.conj()))
            .plus(Self::single(Factor::Photon { mode, ops: vec![Ladder::Create] }).scaled(a))
            .plus(Self::identity().scaled(C64::new(a.norm_sqr(), 0.0)))
    }

    /// Lab-frame site field a_r = Σ_k c_{k,r}(b_k + α_k).
    pub fn site_field(sys: &JcSystem, site: usize) -> Self {
        let mut out = Observable { terms: vec![] };
        for k in 0..sys.n_modes() {
            let c = sys.modes.coefficient(k, site);
            if c != ZERO {
                out = out.plus(Self::lab_mode_field(sys, k).scaled(c));
            }
        }
        out
    }

    /// Smallest expansion rank that can carry this observable's clusters.
    pub fn required_rank(&self) -> usize {
        self.terms
            .iter()
            .map(|t| {
                if t.factors.len() <= 1 {
                    return 0;
                }
                let modes = t.factors.iter().filter(|f| matches!(f, Factor::Photon { .. })).count();
                let sites = t.factors.len() - modes;
                modes.max(sites)
            })
            .max()
            .unwrap_or(0)
    }
}

fn merge_factor(factors: &mut Vec<Factor>, f: &Factor) {
    for g in factors.iter_mut() {
        match (g, f) {
            (Factor::Qubit { site: a, op: x }, Factor::Qubit { site: b, op: y }) if *a == *b => {
                *x = mat2_mul(x, y);
                return;
            }
            (Factor::Photon { mode: a, ops: x }, Factor::Photon { mode: b, ops: y }) if *a == *b => {
                x.extend_from_slice(y);
                return;
            }
            _ => {}
        }
    }
    factors.push(f.clone());
}

/// Tr(term · χ_label); zero unless every deviating constituent is touched.
pub fn term_trace(sys: &JcSystem, term: &Term, label: &ClusterLabel) -> C64 {
    let touched_photon = |k: u32| term.factors.iter().any(|f| matches!(f, Factor::Photon { mode, .. } if *mode as u32 == k));
    let touched_qubit = |r: u32| term.factors.iter().any(|f| matches!(f, Factor::Qubit { site, .. } if *site as u32 == r));
    if label.photons().iter().any(|p| !touched_photon(p.mode)) || label.qubits().iter().any(|q| !touched_qubit(q.site)) {
        return ZERO;
    }
    let mut v = term.coefficient;
    for f in &term.factors {
        v *= match f {
            Factor::Qubit { site, op } => {
                if *op == IDENTITY2 && label.qubit(*site) == 0 {
                    ONE
                } else {
                    sys.qubit(*site).trace(op, label.qubit(*site) as usize)
                }
            }
            Factor::Photon { mode, ops } => {
                let (m, n) = label.photon(*mode);
                C64::new(photon_trace(ops, (m as u32, n as u32)), 0.0)
            }
        };
        if v == ZERO {
            break;
        }
    }
    v
}

/// ⟨op⟩ = Σ_j Σ_labels amplitude · Tr(op χ_label).
pub fn expectation(op: &Observable, sys: &JcSystem, exp: &Expansion) -> Result<C64> {
    let need = op.required_rank();
    if need > exp.max_rank() {
        return Err(Error::InsufficientRank { required: need, available: exp.max_rank() });
    }
    let mut acc = ZERO;
    for (_, label, amp) in exp.terms() {
        for t in &op.terms {
            acc += amp * term_trace(sys, t, label);
        }
    }
    Ok(acc)
}
