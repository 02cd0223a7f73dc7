//! Photon hopping graphs, their normal modes and the mode spectral function.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    ChainPeriodic,
    ChainOpen,
    SquarePeriodic,
    GlobalCoupling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sites {
    Finite(usize),
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub geometry: Geometry,
    pub sites: Sites,
    /// Hopping rate κ.
    pub hopping: f64,
}

impl LatticeSpec {
    pub fn new(geometry: Geometry, sites: Sites, hopping: f64) -> Result<Self> {
        let spec = LatticeSpec { geometry, sites, hopping };
        spec.validate()?;
        Ok(spec)
    }

    pub fn finite(geometry: Geometry, n: usize, hopping: f64) -> Result<Self> {
        Self::new(geometry, Sites::Finite(n), hopping)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.hopping.is_finite() {
            return Err(invalid("hopping", "must be finite"));
        }
        match self.sites {
            Sites::Finite(0) => Err(invalid("sites", "need at least one site")),
            Sites::Finite(n) if self.geometry == Geometry::SquarePeriodic => {
                let l = square_side(n);
                match l {
                    Some(l) if l >= 2 => Ok(()),
                    _ => Err(invalid("sites", format!("square lattice needs N = L*L with L >= 2, got {n}"))),
                }
            }
            Sites::Finite(_) => Ok(()),
            Sites::Infinite => match self.geometry {
                Geometry::ChainPeriodic | Geometry::GlobalCoupling => Ok(()),
                g => Err(invalid("sites", format!("infinite lattice not supported for {g:?}"))),
            },
        }
    }

    pub fn site_count(&self) -> Option<usize> {
        match self.sites {
            Sites::Finite(n) => Some(n),
            Sites::Infinite => None,
        }
    }

    /// Real symmetric N×N hopping matrix h, with H_hop = Σ h_{rr'} a_r^† a_{r'}.
    pub fn hopping_matrix(&self) -> Result<Mat<f64>> {
        self.validate()?;
        let n = self.site_count().ok_or_else(|| Error::Unsupported("hopping matrix of an infinite lattice".into()))?;
        let k = self.hopping;
        let mut h = Mat::<f64>::zeros(n, n);
        let mut link = |a: usize, b: usize, w: f64| {
            if a != b {
                h[(a, b)] += w;
                h[(b, a)] += w;
            }
        };
        match self.geometry {
            Geometry::ChainPeriodic => {
                if n >= 2 {
                    for r in 0..n {
                        link(r, (r + 1) % n, k);
                    }
                }
            }
            Geometry::ChainOpen => {
                for r in 0..n.saturating_sub(1) {
                    link(r, r + 1, k);
                }
            }
            Geometry::SquarePeriodic => {
                let l = square_side(n).unwrap();
                for y in 0..l {
                    for x in 0..l {
                        let r = x + l * y;
                        link(r, (x + 1) % l + l * y, k);
                        link(r, x + l * ((y + 1) % l), k);
                    }
                }
            }
            Geometry::GlobalCoupling => {
                if n >= 2 {
                    let w = 2.0 * k / (n - 1) as f64;
                    for a in 0..n {
                        for b in a + 1..n {
                            link(a, b, w);
                        }
                    }
                }
            }
        }
        Ok(h)
    }
}

fn square_side(n: usize) -> Option<usize> {
    let l = (n as f64).sqrt().round() as usize;
    (l * l == n).then_some(l)
}

/// Model rates and frequencies (angular-frequency units). The hopping rate
/// lives in [`LatticeSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Bare resonator frequency ω.
    pub omega: f64,
    /// Qubit frequency Ω.
    pub qubit_omega: f64,
    /// Drive frequency ω_d.
    pub drive_omega: f64,
    pub g: f64,
    /// Drive strength ε per site.
    pub epsilon: f64,
    /// Photon decay rate γ.
    pub gamma: f64,
    /// Qubit decay rate Γ.
    pub qubit_gamma: f64,
}

impl ModelParams {
    /// g/Γ = 3, ε/Γ = 20, γ/Γ = 4, Ω = ω, drive on the qubit frequency.
    pub fn reference() -> Self {
        ModelParams { omega: 0.0, qubit_omega: 0.0, drive_omega: 0.0, g: 3.0, epsilon: 20.0, gamma: 4.0, qubit_gamma: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("omega", self.omega),
            ("qubit_omega", self.qubit_omega),
            ("drive_omega", self.drive_omega),
            ("g", self.g),
            ("epsilon", self.epsilon),
            ("gamma", self.gamma),
            ("qubit_gamma", self.qubit_gamma),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.gamma <= 0.0 {
            return Err(invalid("gamma", "photon decay must be strictly positive"));
        }
        if self.qubit_gamma <= 0.0 {
            return Err(invalid("qubit_gamma", "qubit decay must be strictly positive"));
        }
        Ok(())
    }

    /// δω = ω − ω_d
    pub fn photon_detuning(&self) -> f64 {
        self.omega - self.drive_omega
    }

    /// δΩ = Ω − ω_d
    pub fn qubit_detuning(&self) -> f64 {
        self.qubit_omega - self.drive_omega
    }

    /// Moves the drive so that Ω − ω_d equals `delta`; ω and Ω stay fixed.
    pub fn with_qubit_detuning(mut self, delta: f64) -> Self {
        self.drive_omega = self.qubit_omega - delta;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    /// Integer mode index n (for the square lattice n = nx + L·ny).
    pub index: usize,
    pub frequency: f64,
}

#[derive(Clone, Debug)]
pub struct ModeBasis {
    pub spec: LatticeSpec,
    pub modes: Vec<Mode>,
    /// c_{k,r}: a_r = Σ_k c_{k,r} a_k. Rows are modes, columns are sites.
    pub bloch: Mat<C64>,
    /// Mode with equal amplitude on every site, if the geometry has one.
    pub uniform: Option<usize>,
}

impl ModeBasis {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn n_sites(&self) -> usize {
        self.bloch.ncols()
    }

    pub fn coefficient(&self, k: usize, r: usize) -> C64 {
        self.bloch[(k, r)]
    }

    /// δω_k = ω_k − ω_d
    pub fn detuning(&self, k: usize, params: &ModelParams) -> f64 {
        self.modes[k].frequency - params.drive_omega
    }

    /// Σ_r c_{k,r}, the overlap of mode k with a homogeneous drive.
    pub fn drive_overlap(&self, k: usize) -> C64 {
        (0..self.n_sites()).map(|r| self.bloch[(k, r)]).sum()
    }

    /// max |C C^† − 1|
    pub fn unitarity_residual(&self) -> f64 {
        let c = &self.bloch;
        let prod = c * c.adjoint();
        let n = c.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - want).norm());
            }
        }
        worst
    }
}

pub fn build_modes(spec: &LatticeSpec, params: &ModelParams) -> Result<ModeBasis> {
    spec.validate()?;
    params.validate()?;
    let n = spec.site_count().ok_or_else(|| {
        Error::Unsupported("build_modes needs a finite lattice; use infinite_mode_density".into())
    })?;
    let (w, k) = (params.omega, spec.hopping);
    let plane = |n: usize| {
        let norm = 1.0 / (n as f64).sqrt();
        Mat::from_fn(n, n, |q, r| C64::from_polar(norm, 2.0 * PI * ((q * r) % n) as f64 / n as f64))
    };
    let (freqs, bloch): (Vec<f64>, Mat<C64>) = match spec.geometry {
        Geometry::ChainPeriodic => {
            let f = (0..n)
                .map(|q| if n >= 2 { w + 2.0 * k * (2.0 * PI * q as f64 / n as f64).cos() } else { w })
                .collect();
            (f, plane(n))
        }
        Geometry::GlobalCoupling => {
            let f = (0..n)
                .map(|q| match (n, q) {
                    (1, _) => w,
                    (_, 0) => w + 2.0 * k,
                    _ => w - 2.0 * k / (n - 1) as f64,
                })
                .collect();
            (f, plane(n))
        }
        Geometry::SquarePeriodic => {
            let l = square_side(n).unwrap();
            let norm = 1.0 / l as f64;
            let mut f = Vec::with_capacity(n);
            for q in 0..n {
                let (qx, qy) = (q % l, q / l);
                let (kx, ky) = (2.0 * PI * qx as f64 / l as f64, 2.0 * PI * qy as f64 / l as f64);
                f.push(w + 2.0 * k * (kx.cos() + ky.cos()));
            }
            let c = Mat::from_fn(n, n, |q, r| {
                let (qx, qy) = (q % l, q / l);
                let (x, y) = (r % l, r / l);
                let phase = 2.0 * PI * (((qx * x) % l) as f64 + ((qy * y) % l) as f64) / l as f64;
                C64::from_polar(norm, phase)
            });
            (f, c)
        }
        Geometry::ChainOpen => {
            let m = (n + 1) as f64;
            let norm = (2.0 / m).sqrt();
            let f = (1..=n).map(|q| w + 2.0 * k * (PI * q as f64 / m).cos()).collect();
            let c = Mat::from_fn(n, n, |q, r| C64::new(norm * (PI * ((q + 1) * (r + 1)) as f64 / m).sin(), 0.0));
            (f, c)
        }
    };
    if freqs.iter().any(|f| !f.is_finite()) {
        return Err(invalid("hopping", "mode frequencies overflow"));
    }
    let modes: Vec<Mode> = freqs.into_iter().enumerate().map(|(index, frequency)| Mode { index, frequency }).collect();
    let uniform = find_uniform(&bloch);
    Ok(ModeBasis { spec: *spec, modes, bloch, uniform })
}

fn find_uniform(c: &Mat<C64>) -> Option<usize> {
    let n = c.ncols();
    let target = 1.0 / (n as f64).sqrt();
    (0..c.nrows()).find(|&q| {
        let first = c[(q, 0)];
        (first.norm() - target).abs() < 1e-12 && (0..n).all(|r| (c[(q, r)] - first).norm() < 1e-12)
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DensityKind {
    /// ω(k) = center + half_width·cos k, k uniform on [−π, π).
    Band { center: f64, half_width: f64 },
    /// All non-uniform weight at one frequency.
    PointMass { frequency: f64 },
}

/// N → ∞ replacement of the normalized mode average (1/N)Σ_k.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeDensity {
    pub geometry: Geometry,
    /// Frequency of the uniform (driven) mode.
    pub uniform_frequency: f64,
    pub kind: DensityKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureNode {
    /// Quasi-momentum of the node (0 for a point mass).
    pub momentum: f64,
    pub frequency: f64,
    pub weight: f64,
}

impl ModeDensity {
    /// Trapezoid nodes on the periodic band (exponentially accurate for smooth
    /// periodic integrands); a single node for a point mass.
    pub fn nodes(&self, count: usize) -> Vec<QuadratureNode> {
        match self.kind {
            DensityKind::PointMass { frequency } => vec![QuadratureNode { momentum: 0.0, frequency, weight: 1.0 }],
            DensityKind::Band { center, half_width } => {
                let count = count.max(1);
                (0..count)
                    .map(|j| {
                        let k = -PI + 2.0 * PI * j as f64 / count as f64;
                        QuadratureNode { momentum: k, frequency: center + half_width * k.cos(), weight: 1.0 / count as f64 }
                    })
                    .collect()
            }
        }
    }

    /// ∫ dμ(k) f(node) for a vector of integrands, doubling the node count
    /// from 16 until successive estimates agree to `tol` (relative to the
    /// magnitude, absolute below 1).
    pub fn integrate<const K: usize>(&self, tol: f64, f: impl Fn(&QuadratureNode) -> Result<[C64; K]>) -> Result<[C64; K]> {
        const MAX_NODES: usize = 1 << 18;
        let eval = |n: usize| -> Result<[C64; K]> {
            let mut acc = [C64::new(0.0, 0.0); K];
            for node in self.nodes(n) {
                for (a, v) in acc.iter_mut().zip(f(&node)?) {
                    *a += v * node.weight;
                }
            }
            Ok(acc)
        };
        if matches!(self.kind, DensityKind::PointMass { .. }) {
            return eval(1);
        }
        let mut n = 16;
        let mut prev = eval(n)?;
        loop {
            n *= 2;
            let next = eval(n)?;
            let change = next.iter().zip(&prev).map(|(a, b)| (a - b).norm() / a.norm().max(1.0)).fold(0.0, f64::max);
            if change <= tol {
                return Ok(next);
            }
            if n >= MAX_NODES {
                return Err(Error::Quadrature { nodes: n, change });
            }
            prev = next;
        }
    }
}

pub fn infinite_mode_density(spec: &LatticeSpec, params: &ModelParams) -> Result<ModeDensity> {
    spec.validate()?;
    params.validate()?;
    if spec.sites != Sites::Infinite {
        return Err(Error::Unsupported("infinite_mode_density needs an infinite lattice".into()));
    }
    let (w, k) = (params.omega, spec.hopping);
    let kind = match spec.geometry {
        Geometry::ChainPeriodic => DensityKind::Band { center: w, half_width: 2.0 * k },
        Geometry::GlobalCoupling => DensityKind::PointMass { frequency: w },
        g => return Err(Error::Unsupported(format!("infinite {g:?} lattice"))),
    };
    Ok(ModeDensity { geometry: spec.geometry, uniform_frequency: w + 2.0 * k, kind })
}

/// s(ω) = (1/(Nπ)) Σ_k (γ/2)/((ω−ω_k)² + (γ/2)²)
pub fn spectral_function(modes: &ModeBasis, gamma: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(invalid("gamma", "must be positive"));
    }
    let n = modes.n_modes() as f64;
    let hw = gamma / 2.0;
    Ok(grid
        .iter()
        .map(|&x| modes.modes.iter().map(|m| hw / ((x - m.frequency).powi(2) + hw * hw)).sum::<f64>() / (n * PI))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams { omega: 3.0, ..ModelParams::reference() }
    }

    fn sorted_eigs(h: &Mat<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = h.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    fn check_against_hopping(spec: LatticeSpec) {
        let p = params();
        let basis = build_modes(&spec, &p).unwrap();
        let h = spec.hopping_matrix().unwrap();
        let n = basis.n_sites();
        let c = &basis.bloch;
        assert!(basis.unitarity_residual() < 1e-12, "{spec:?}");
        for a in 0..n {
            for b in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..n {
                    for s in 0..n {
                        acc += c[(a, r)].conj() * h[(r, s)] * c[(b, s)];
                    }
                }
                let want = if a == b { basis.modes[a].frequency - p.omega } else { 0.0 };
                assert!((acc - want).norm() < 1e-10, "{spec:?} ({a},{b}) {acc} vs {want}");
            }
        }
        let mut freqs: Vec<f64> = basis.modes.iter().map(|m| m.frequency - p.omega).collect();
        freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, y) in freqs.iter().zip(sorted_eigs(&h)) {
            assert!((x - y).abs() < 1e-10);
        }
        let total: f64 = basis.modes.iter().map(|m| m.frequency).sum();
        assert!((total - n as f64 * p.omega).abs() < 1e-10 * n as f64 * p.omega.abs().max(1.0));
    }

    #[test]
    fn all_geometries_diagonalize_hopping() {
        for n in 1..=7 {
            check_against_hopping(LatticeSpec::finite(Geometry::ChainPeriodic, n, 1.3).unwrap());
            check_against_hopping(LatticeSpec::finite(Geometry::ChainOpen, n, 1.3).unwrap());
            check_against_hopping(LatticeSpec::finite(Geometry::GlobalCoupling, n, 1.3).unwrap());
        }
        for l in 2..=4 {
            check_against_hopping(LatticeSpec::finite(Geometry::SquarePeriodic, l * l, 0.7).unwrap());
        }
    }

    fn finite_spec() -> impl proptest::strategy::Strategy<Value = LatticeSpec> {
        use proptest::prelude::*;
        let geometry = prop_oneof![
            Just(Geometry::ChainPeriodic),
            Just(Geometry::ChainOpen),
            Just(Geometry::GlobalCoupling),
            Just(Geometry::SquarePeriodic),
        ];
        (geometry, 1usize..10, -20.0f64..20.0).prop_map(|(g, n, k)| {
            let n = if g == Geometry::SquarePeriodic { (n % 4 + 2).pow(2) } else { n };
            LatticeSpec::finite(g, n, k).unwrap()
        })
    }

    proptest::proptest! {
        #[test]
        fn mode_invariants(spec in finite_spec(), omega in -50.0f64..50.0, gamma in 0.5f64..10.0) {
            let p = ModelParams { omega, ..params() };
            let b = build_modes(&spec, &p).unwrap();
            let n = b.n_sites() as f64;
            let total: f64 = b.modes.iter().map(|m| m.frequency).sum();
            proptest::prop_assert!((total - n * omega).abs() <= 1e-10 * n * omega.abs().max(spec.hopping.abs()).max(1.0));
            proptest::prop_assert!(b.unitarity_residual() < 1e-12);
            // the spectral function integrates to one; Lorentzian tails handled analytically
            let (lo, hi) = (omega - 100.0, omega + 100.0);
            let steps = 40_000;
            let h = (hi - lo) / steps as f64;
            let grid: Vec<f64> = (0..=steps).map(|i| lo + h * i as f64).collect();
            let s = spectral_function(&b, gamma, &grid).unwrap();
            let inner = h * (s.iter().sum::<f64>() - 0.5 * (s[0] + s[steps]));
            let tails: f64 = b.modes.iter().map(|m| {
                let hw = gamma / 2.0;
                (PI - (hi - m.frequency).atan2(hw) - (m.frequency - lo).atan2(hw)) / PI
            }).sum::<f64>() / n;
            proptest::prop_assert!((inner + tails - 1.0).abs() < 1e-6, "{}", inner + tails);
        }
    }

    #[test]
    fn chain_four_sites() {
        let spec = LatticeSpec::finite(Geometry::ChainPeriodic, 4, 10.0).unwrap();
        let b = build_modes(&spec, &params()).unwrap();
        let f: Vec<f64> = b.modes.iter().map(|m| m.frequency - 3.0).collect();
        let want = [20.0, 0.0, -20.0, 0.0];
        for (x, y) in f.iter().zip(want) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(b.uniform, Some(0));
    }

    #[test]
    fn global_three_sites() {
        let spec = LatticeSpec::finite(Geometry::GlobalCoupling, 3, 2.0).unwrap();
        let b = build_modes(&spec, &params()).unwrap();
        assert_eq!(b.uniform, Some(0));
        assert!((b.modes[0].frequency - 7.0).abs() < 1e-12);
        assert!((b.modes[1].frequency - 1.0).abs() < 1e-12);
        assert!((b.modes[2].frequency - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_hopping_degenerate() {
        for g in [Geometry::ChainPeriodic, Geometry::ChainOpen, Geometry::GlobalCoupling] {
            let b = build_modes(&LatticeSpec::finite(g, 5, 0.0).unwrap(), &params()).unwrap();
            assert!(b.modes.iter().all(|m| (m.frequency - 3.0).abs() < 1e-15));
            assert!(b.unitarity_residual() < 1e-12);
        }
    }

    #[test]
    fn open_chain_has_no_uniform_mode_beyond_two_sites() {
        let b = build_modes(&LatticeSpec::finite(Geometry::ChainOpen, 2, 1.0).unwrap(), &params()).unwrap();
        assert_eq!(b.uniform, Some(0));
        let b = build_modes(&LatticeSpec::finite(Geometry::ChainOpen, 4, 1.0).unwrap(), &params()).unwrap();
        assert_eq!(b.uniform, None);
    }

    #[test]
    fn spec_validation() {
        assert!(LatticeSpec::finite(Geometry::ChainPeriodic, 0, 1.0).is_err());
        assert!(LatticeSpec::finite(Geometry::SquarePeriodic, 6, 1.0).is_err());
        assert!(LatticeSpec::finite(Geometry::SquarePeriodic, 1, 1.0).is_err());
        assert!(LatticeSpec::new(Geometry::SquarePeriodic, Sites::Infinite, 1.0).is_err());
        assert!(LatticeSpec::new(Geometry::ChainOpen, Sites::Infinite, 1.0).is_err());
        let inf = LatticeSpec::new(Geometry::ChainPeriodic, Sites::Infinite, 1.0).unwrap();
        assert!(build_modes(&inf, &params()).is_err());
        let bad = ModelParams { gamma: 0.0, ..params() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn infinite_chain_quadrature() {
        let spec = LatticeSpec::new(Geometry::ChainPeriodic, Sites::Infinite, 10.0).unwrap();
        let d = infinite_mode_density(&spec, &params()).unwrap();
        let one = d.integrate(1e-12, |_| Ok([C64::new(1.0, 0.0)])).unwrap()[0];
        assert!((one.re - 1.0).abs() < 1e-14);
        let c = d.integrate(1e-12, |n| Ok([C64::new(n.momentum.cos(), 0.0)])).unwrap()[0];
        assert!(c.norm() < 1e-14);
        // (1/2π)∫ dk / (a − cos k) = 1/sqrt(a² − 1)
        let a: f64 = 1.3;
        let v = d.integrate(1e-13, |n| Ok([C64::new(1.0 / (a - n.momentum.cos()), 0.0)])).unwrap()[0];
        assert!((v.re - 1.0 / (a * a - 1.0).sqrt()).abs() < 1e-11);
        assert_eq!(d.uniform_frequency, 23.0);
    }

    #[test]
    fn infinite_global_point_mass() {
        let spec = LatticeSpec::new(Geometry::GlobalCoupling, Sites::Infinite, 10.0).unwrap();
        let d = infinite_mode_density(&spec, &params()).unwrap();
        assert_eq!(d.kind, DensityKind::PointMass { frequency: 3.0 });
        let big = build_modes(&LatticeSpec::finite(Geometry::GlobalCoupling, 4001, 10.0).unwrap(), &params());
        // degenerate manifold approaches the point mass as 1/N
        let f = big.unwrap().modes[1].frequency;
        assert!((f - 3.0).abs() < 20.0 / 4000.0 + 1e-12);
    }

    #[test]
    fn quadrature_failure_reports_nodes() {
        let spec = LatticeSpec::new(Geometry::ChainPeriodic, Sites::Infinite, 1.0).unwrap();
        let d = infinite_mode_density(&spec, &params()).unwrap();
        let err = d.integrate(1e-15, |n| Ok([C64::new(n.momentum.abs().sqrt(), 0.0)])).unwrap_err();
        assert!(matches!(err, Error::Quadrature { nodes, .. } if nodes >= 1 << 18));
    }

    #[test]
    fn spectral_function_values() {
        let spec = LatticeSpec::finite(Geometry::ChainPeriodic, 1, 0.0).unwrap();
        let b = build_modes(&spec, &params()).unwrap();
        let s = spectral_function(&b, 4.0, &[3.0]).unwrap();
        assert!((s[0] - 2.0 / (PI * 4.0)).abs() < 1e-14);
        assert!(spectral_function(&b, 4.0, &[]).unwrap().is_empty());

        let spec = LatticeSpec::finite(Geometry::ChainPeriodic, 4, 10.0).unwrap();
        let b = build_modes(&spec, &params()).unwrap();
        let dx = 0.01;
        let grid: Vec<f64> = (0..400_000).map(|i| -2000.0 + dx * i as f64).collect();
        let s = spectral_function(&b, 4.0, &grid).unwrap();
        let total: f64 = s.iter().sum::<f64>() * dx;
        assert!((total - 1.0).abs() < 1e-3);
        // doubly degenerate ω mode dominates
        let at = |x: f64| spectral_function(&b, 4.0, &[x]).unwrap()[0];
        assert!(at(3.0) > 1.9 * at(23.0));
    }
}
