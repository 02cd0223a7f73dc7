//! Resummation algebra over an indexed unperturbed eigenbasis.
//!
//! Dense routines work on explicit D×D matrices of U = −L₀⁻¹L₁ (index 0 is the
//! steady state) and are used for small problems and identity checks. The
//! sparse engine walks a [`HopSpace`] depth-first and never builds U.

use std::collections::HashMap;
use std::fmt::{Debug, Display};
use std::hash::Hash;

use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{ONE, ZERO};

/// Matrix of a superoperator in the unperturbed biorthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexedSuperop {
    matrix: Mat<C64>,
}

impl IndexedSuperop {
    pub fn new(matrix: Mat<C64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "superoperator matrix must be square");
        IndexedSuperop { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(Mat::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn element(&self, mu: usize, nu: usize) -> C64 {
        self.matrix[(mu, nu)]
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.matrix
    }

    pub fn is_offdiagonal(&self) -> bool {
        (0..self.dim()).all(|i| self.matrix[(i, i)] == ZERO)
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).collect()
    }

    /// ⟦A⟧, the off-diagonal part.
    pub fn offdiagonal_part(&self) -> Self {
        let mut m = self.matrix.clone();
        for i in 0..self.dim() {
            m[(i, i)] = ZERO;
        }
        Self::new(m)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(&self.matrix * &other.matrix)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.matrix[(i, j)] * v[j]).sum()).collect()
    }
}

/// (U)_{μν} = −(ξ_μ|L₁|χ_ν)/λ_μ, with (U)_{0ν} = 0. `spectrum[0]` is the
/// steady eigenvalue.
pub fn u_element(spectrum: &[C64], l1: &Mat<C64>, mu: usize, nu: usize) -> Result<C64> {
    if mu == 0 {
        return Ok(ZERO);
    }
    let lam = spectrum[mu];
    if lam.norm() < 1e-14 {
        return Err(Error::Degeneracy { state: format!("index {mu}"), magnitude: lam.norm() });
    }
    Ok(-l1[(mu, nu)] / lam)
}

pub fn u_matrix(spectrum: &[C64], l1: &Mat<C64>) -> Result<IndexedSuperop> {
    let d = spectrum.len();
    let mut m = Mat::<C64>::zeros(d, d);
    for mu in 0..d {
        for nu in 0..d {
            m[(mu, nu)] = u_element(spectrum, l1, mu, nu)?;
        }
    }
    Ok(IndexedSuperop::new(m))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainTerm {
    /// 0 → ν₁ → … → μ_j
    pub path: Vec<usize>,
    pub amplitude: C64,
}

/// All length-j chains from index 0 with non-zero amplitude (terms of U^j e₀).
pub fn bare_correction(u: &IndexedSuperop, j: usize) -> Vec<ChainTerm> {
    fn walk(u: &IndexedSuperop, path: &mut Vec<usize>, amp: C64, left: usize, out: &mut Vec<ChainTerm>) {
        if left == 0 {
            out.push(ChainTerm { path: path.clone(), amplitude: amp });
            return;
        }
        let from = *path.last().unwrap();
        for to in 0..u.dim() {
            let e = u.element(to, from);
            if e != ZERO {
                path.push(to);
                walk(u, path, amp * e, left - 1, out);
                path.pop();
            }
        }
    }
    assert!(j >= 1, "order must be positive");
    let mut out = Vec::new();
    walk(u, &mut vec![0], ONE, j, &mut out);
    out
}

/// T₁ = U, T_j = ⟦T_{j−1}U⟧; T₀ is the identity.
pub fn t_chain(u: &IndexedSuperop, j: usize) -> IndexedSuperop {
    let mut t = IndexedSuperop::identity(u.dim());
    for _ in 0..j {
        t = t.mul(u).offdiagonal_part();
    }
    t
}

/// (Σ_j)_{μμ} = (T_{j−1}U)_{μμ}; Σ₁ = 0.
pub fn sigma_loop(u: &IndexedSuperop, j: usize, mu: usize) -> C64 {
    if j <= 1 {
        return ZERO;
    }
    let t = t_chain(u, j - 1);
    (0..u.dim()).map(|k| t.element(mu, k) * u.element(k, mu)).sum()
}

/// Diagonal Σ_j as a full matrix.
pub fn sigma_matrix(u: &IndexedSuperop, j: usize) -> IndexedSuperop {
    let d = u.dim();
    let mut m = Mat::<C64>::zeros(d, d);
    if j >= 2 {
        let tu = t_chain(u, j - 1).mul(u);
        for i in 0..d {
            m[(i, i)] = tu.element(i, i);
        }
    }
    IndexedSuperop::new(m)
}

/// (1 − Σ)⁻¹ with Σ the sum of the supplied loop values.
pub fn resum_factor(sigmas: &[C64], state: &dyn Display) -> Result<C64> {
    let s: C64 = sigmas.iter().sum();
    let den = ONE - s;
    if den.norm() < 1e-12 {
        return Err(Error::ResummationPole { state: state.to_string(), magnitude: den.norm() });
    }
    Ok(ONE / den)
}

/// Max-norm residual of U^j = Σ_{k=0}^{j} Π_{j−k} T_k, where Π_n sums all
/// ordered Σ-products of total order n.
pub fn verify_decomposition(u: &IndexedSuperop, j: usize) -> f64 {
    let d = u.dim();
    let sig: Vec<IndexedSuperop> = (0..=j).map(|m| sigma_matrix(u, m)).collect();
    let mut pi: Vec<IndexedSuperop> = vec![IndexedSuperop::identity(d)];
    for n in 1..=j {
        let mut acc = Mat::<C64>::zeros(d, d);
        for m in 1..=n {
            acc += pi[n - m].matrix() * sig[m].matrix();
        }
        pi.push(IndexedSuperop::new(acc));
    }
    let mut rhs = Mat::<C64>::zeros(d, d);
    for k in 0..=j {
        rhs += pi[j - k].matrix() * t_chain(u, k).matrix();
    }
    let mut lhs = IndexedSuperop::identity(d);
    for _ in 0..j {
        lhs = lhs.mul(u);
    }
    crate::linalg::max_abs_diff(lhs.matrix(), &rhs)
}

/// Untruncated Σ(μ) = Σ_{a,b≠μ} U_{μa}[(1 − U_{∖μ})⁻¹]_{ab}U_{bμ}.
pub fn full_sigma(u: &IndexedSuperop, mu: usize) -> Result<C64> {
    let d = u.dim();
    let others: Vec<usize> = (0..d).filter(|&i| i != mu).collect();
    let n = others.len();
    if n == 0 {
        return Ok(ZERO);
    }
    let a = Mat::from_fn(n, n, |i, j| {
        let delta = if i == j { ONE } else { ZERO };
        delta - u.element(others[i], others[j])
    });
    let rhs = Mat::from_fn(n, 1, |i, _| u.element(others[i], mu));
    use faer::linalg::solvers::Solve;
    let x = a.partial_piv_lu().solve(&rhs);
    if (0..n).any(|i| !x[(i, 0)].re.is_finite() || !x[(i, 0)].im.is_finite()) {
        return Err(Error::Solver(format!("resolvent for index {mu} is singular")));
    }
    Ok((0..n).map(|i| u.element(mu, others[i]) * x[(i, 0)]).sum())
}

/// Coefficient vector of Σ_{j≤J} (1 − Σ)⁻¹ T_j e₀. `sigma[μ]` holds the
/// self-energy used for index μ.
pub fn resummed_state(u: &IndexedSuperop, max_rank: usize, sigma: &[C64]) -> Result<Vec<C64>> {
    let d = u.dim();
    let mut out = vec![ZERO; d];
    out[0] = ONE;
    let mut t = IndexedSuperop::identity(d);
    for _ in 1..=max_rank {
        t = t.mul(u).offdiagonal_part();
        for mu in 1..d {
            let f = resum_factor(&[sigma[mu]], &format!("index {mu}"))?;
            out[mu] += f * t.element(mu, 0);
        }
    }
    Ok(out)
}

/// Sparse view of U: from a state, enumerate every non-zero U_{to,from}.
pub trait HopSpace: Sync {
    type State: Clone + Eq + Hash + Send + Sync + Debug + Display;

    fn steady(&self) -> Self::State;

    /// Calls `sink(to, U_{to,from})` for each non-zero element.
    fn hops<F: FnMut(&Self::State, C64)>(&self, from: &Self::State, sink: F) -> Result<()>;

    /// Optional closed-form Σ₂; `None` falls back to loop enumeration.
    fn sigma2(&self, _state: &Self::State) -> Option<Result<C64>> {
        None
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChainStats {
    /// Number of U-elements evaluated.
    pub elements: u64,
}

impl std::ops::AddAssign for ChainStats {
    fn add_assign(&mut self, o: Self) {
        self.elements += o.elements;
    }
}

pub struct ChainOptions<'a, S> {
    /// Amplitude below which a partial chain is dropped.
    pub prune: f64,
    /// Final states to keep; `None` keeps all.
    pub keep: Option<&'a (dyn Fn(&S) -> bool + Sync)>,
    pub parallel: bool,
}

impl<S> Default for ChainOptions<'_, S> {
    fn default() -> Self {
        ChainOptions { prune: 1e-14, keep: None, parallel: true }
    }
}

type Column<S> = HashMap<S, C64>;

fn merge<S: Eq + Hash>(mut a: Column<S>, b: Column<S>) -> Column<S> {
    if a.len() < b.len() {
        return merge(b, a);
    }
    for (k, v) in b {
        *a.entry(k).or_insert(ZERO) += v;
    }
    a
}

struct Walker<'a, H: HopSpace> {
    space: &'a H,
    opts: &'a ChainOptions<'a, H::State>,
    constrained: bool,
    path: Vec<H::State>,
    out: Column<H::State>,
    stats: ChainStats,
    error: Option<Error>,
}

impl<H: HopSpace> Walker<'_, H> {
    fn walk(&mut self, from: &H::State, amp: C64, left: usize) {
        let space = self.space;
        let mut collected: Vec<(H::State, C64)> = Vec::new();
        let mut count = 0u64;
        let res = space.hops(from, |to, u| {
            count += 1;
            let a = amp * u;
            if a.norm() < self.opts.prune {
                return;
            }
            if left == 1 {
                if self.opts.keep.is_some_and(|k| !k(to)) {
                    return;
                }
                if self.constrained && self.path.iter().any(|p| p == to) {
                    return;
                }
                match self.out.get_mut(to) {
                    Some(v) => *v += a,
                    None => {
                        self.out.insert(to.clone(), a);
                    }
                }
            } else {
                collected.push((to.clone(), a));
            }
        });
        self.stats.elements += count;
        if let Err(e) = res {
            self.error.get_or_insert(e);
            return;
        }
        for (to, a) in collected {
            self.path.push(to.clone());
            self.walk(&to, a, left - 1);
            self.path.pop();
        }
    }
}

fn run_chains<H: HopSpace>(
    space: &H,
    j: usize,
    constrained: bool,
    opts: &ChainOptions<'_, H::State>,
) -> Result<(Column<H::State>, ChainStats)> {
    let steady = space.steady();
    if j == 0 {
        let mut c = Column::new();
        c.insert(steady, ONE);
        return Ok((c, ChainStats::default()));
    }
    let mut first: Vec<(H::State, C64)> = Vec::new();
    space.hops(&steady, |to, u| first.push((to.clone(), u)))?;
    let mut stats = ChainStats { elements: first.len() as u64 };
    let one = |(s, a): &(H::State, C64)| -> Result<(Column<H::State>, ChainStats)> {
        let mut w = Walker { space, opts, constrained, path: vec![], out: Column::new(), stats: ChainStats::default(), error: None };
        if a.norm() >= opts.prune {
            if j == 1 {
                if opts.keep.is_none_or(|k| k(s)) {
                    w.out.insert(s.clone(), *a);
                }
            } else {
                w.path.push(s.clone());
                w.walk(s, *a, j - 1);
            }
        }
        match w.error {
            Some(e) => Err(e),
            None => Ok((w.out, w.stats)),
        }
    };
    let (col, s) = if opts.parallel && j >= 2 {
        first
            .par_iter()
            .map(one)
            .try_reduce(|| (Column::new(), ChainStats::default()), |a, b| {
                let mut s = a.1;
                s += b.1;
                Ok((merge(a.0, b.0), s))
            })?
    } else {
        let mut acc = (Column::new(), ChainStats::default());
        for f in &first {
            let (c, s) = one(f)?;
            acc.0 = merge(acc.0, c);
            acc.1 += s;
        }
        acc
    };
    stats += s;
    Ok((col, stats))
}

/// T_j e₀: chains of j hops from the steady state whose intermediate states
/// all differ from the final one.
pub fn chain_column<H: HopSpace>(space: &H, j: usize, opts: &ChainOptions<'_, H::State>) -> Result<(Column<H::State>, ChainStats)> {
    run_chains(space, j, true, opts)
}

/// U^j e₀ without the off-diagonal constraint.
pub fn bare_column<H: HopSpace>(space: &H, j: usize, opts: &ChainOptions<'_, H::State>) -> Result<(Column<H::State>, ChainStats)> {
    run_chains(space, j, false, opts)
}

/// Σ_l(state): closed walks of l hops that do not pass through `state` on the way.
pub fn loop_value<H: HopSpace>(space: &H, state: &H::State, l: usize) -> Result<C64> {
    if l < 2 {
        return Ok(ZERO);
    }
    fn walk<H: HopSpace>(space: &H, home: &H::State, at: &H::State, amp: C64, left: usize, acc: &mut C64) -> Result<()> {
        let mut next: Vec<(H::State, C64)> = Vec::new();
        space.hops(at, |to, u| {
            if left == 1 {
                if to == home {
                    *acc += amp * u;
                }
            } else if to != home {
                next.push((to.clone(), amp * u));
            }
        })?;
        for (s, a) in next {
            walk(space, home, &s, a, left - 1, acc)?;
        }
        Ok(())
    }
    let mut acc = ZERO;
    walk(space, state, state, ONE, l, &mut acc)?;
    Ok(acc)
}

/// Σ_{l=2}^{L} Σ_l(state), using the closed-form Σ₂ when the space has one.
pub fn self_energy<H: HopSpace>(space: &H, state: &H::State, max_loop: usize) -> Result<C64> {
    let mut acc = ZERO;
    for l in 2..=max_loop {
        acc += match (l, space.sigma2(state)) {
            (2, Some(v)) => v?,
            _ => loop_value(space, state, l)?,
        };
    }
    Ok(acc)
}

/// Dense matrix as a hop space, for testing the sparse engine.
pub struct DenseHops<'a>(pub &'a IndexedSuperop);

impl HopSpace for DenseHops<'_> {
    type State = usize;

    fn steady(&self) -> usize {
        0
    }

    fn hops<F: FnMut(&usize, C64)>(&self, from: &usize, mut sink: F) -> Result<()> {
        for to in 0..self.0.dim() {
            let e = self.0.element(to, *from);
            if e != ZERO {
                sink(&to, e);
            }
        }
        Ok(())
    }
}
