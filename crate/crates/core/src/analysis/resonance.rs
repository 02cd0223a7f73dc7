//! Dip detection in |⟨σ⁻⟩| sweeps.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResonanceLabel {
    /// At the uniform photon mode.
    A,
    /// Near the bare qubit frequency.
    B,
    /// The anomalous drive-dependent feature.
    C,
    Unlabeled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    /// δΩ/Γ of the dip minimum.
    pub position: f64,
    /// Topographic prominence of the dip.
    pub depth: f64,
    /// Full width at half prominence, in δΩ/Γ.
    pub width: f64,
    pub label: ResonanceLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub resonances: Vec<Resonance>,
    pub threshold: f64,
}

impl ResonanceReport {
    pub fn get(&self, label: ResonanceLabel) -> Option<&Resonance> {
        self.resonances.iter().find(|r| r.label == label)
    }
}

/// Default minimum prominence for a dip in |⟨σ⁻⟩|.
pub const DEFAULT_THRESHOLD: f64 = 0.002;

/// Proximity windows for labelling, in δΩ/Γ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelWindows {
    pub a: f64,
    pub b: f64,
}

impl Default for LabelWindows {
    fn default() -> Self {
        LabelWindows { a: 3.0, b: 4.0 }
    }
}

/// Finds interior local minima with prominence at least `threshold`.
/// `uniform` is the uniform-mode position in δΩ/Γ, if the lattice has one.
/// Non-finite samples split the curve and never host a dip.
pub fn find_resonances(x: &[f64], y: &[f64], threshold: f64, uniform: Option<f64>, windows: LabelWindows) -> ResonanceReport {
    assert_eq!(x.len(), y.len(), "abscissa and values differ in length");
    let n = y.len();
    let mut found = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if !y[i].is_finite() {
            i += 1;
            continue;
        }
        // plateau extent
        let mut j = i;
        while j + 1 < n && y[j + 1] == y[i] {
            j += 1;
        }
        if j + 1 >= n {
            break;
        }
        let (left, right) = (y[i - 1], y[j + 1]);
        if left.is_finite() && right.is_finite() && left > y[i] && right > y[i] {
            let mid = (i + j) / 2;
            let (lmax, li) = side_max(y, i, -1);
            let (rmax, ri) = side_max(y, j, 1);
            let prominence = lmax.min(rmax) - y[i];
            if prominence >= threshold && prominence > 0.0 {
                let level = y[i] + prominence / 2.0;
                let xl = crossing(x, y, i, li, level);
                let xr = crossing(x, y, j, ri, level);
                found.push(Resonance { position: x[mid], depth: prominence, width: xr - xl, label: ResonanceLabel::Unlabeled });
            }
        }
        i = j + 1;
    }
    label(&mut found, uniform, windows);
    ResonanceReport { resonances: found, threshold }
}

/// Walks from a minimum until a lower or non-finite sample or the edge;
/// returns the highest value met and the index where the walk stopped.
fn side_max(y: &[f64], start: usize, dir: isize) -> (f64, usize) {
    let base = y[start];
    let mut best = base;
    let mut k = start as isize;
    let mut last = start;
    loop {
        k += dir;
        if k < 0 || k as usize >= y.len() {
            break;
        }
        let v = y[k as usize];
        if !v.is_finite() || v < base {
            break;
        }
        last = k as usize;
        best = best.max(v);
    }
    (best, last)
}

/// Abscissa where the curve first reaches `level` walking from `from` to `to`.
fn crossing(x: &[f64], y: &[f64], from: usize, to: usize, level: f64) -> f64 {
    let step: isize = if to >= from { 1 } else { -1 };
    let mut k = from;
    while k != to {
        let next = (k as isize + step) as usize;
        if y[next] >= level {
            let t = (level - y[k]) / (y[next] - y[k]);
            return x[k] + t * (x[next] - x[k]);
        }
        k = next;
    }
    x[to]
}

fn label(found: &mut [Resonance], uniform: Option<f64>, w: LabelWindows) {
    let nearest = |found: &[Resonance], target: f64, window: f64| {
        found
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label == ResonanceLabel::Unlabeled && (r.position - target).abs() <= window)
            .min_by(|a, b| (a.1.position - target).abs().total_cmp(&(b.1.position - target).abs()))
            .map(|(i, _)| i)
    };
    if let Some(u) = uniform {
        if let Some(i) = nearest(found, u, w.a) {
            found[i].label = ResonanceLabel::A;
        }
    }
    if let Some(i) = nearest(found, 0.0, w.b) {
        found[i].label = ResonanceLabel::B;
    }
    if let Some((i, _)) = found
        .iter()
        .enumerate()
        .filter(|(_, r)| r.label == ResonanceLabel::Unlabeled)
        .max_by(|a, b| a.1.depth.total_cmp(&b.1.depth))
    {
        found[i].label = ResonanceLabel::C;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    fn lorentz_dip(x: f64, at: f64, depth: f64, hw: f64) -> f64 {
        depth * hw * hw / ((x - at).powi(2) + hw * hw)
    }

    fn three_dips(x: f64) -> f64 {
        1.0 - lorentz_dip(x, -20.0, 0.5, 1.0) - lorentz_dip(x, 0.3, 0.3, 1.0) - lorentz_dip(x, 8.0, 0.1, 0.5)
    }

    #[test]
    fn monotone_curve_is_empty() {
        let x = grid(-30.0, 15.0, 200);
        let y: Vec<f64> = x.iter().map(|v| v.atan()).collect();
        assert!(find_resonances(&x, &y, 0.0, Some(-20.0), LabelWindows::default()).resonances.is_empty());
    }

    #[test]
    fn labels_three_dips() {
        let x = grid(-30.0, 15.0, 451);
        let y: Vec<f64> = x.iter().map(|&v| three_dips(v)).collect();
        let rep = find_resonances(&x, &y, 0.01, Some(-20.0), LabelWindows::default());
        assert_eq!(rep.resonances.len(), 3);
        let a = rep.get(ResonanceLabel::A).unwrap();
        let c = rep.get(ResonanceLabel::C).unwrap();
        assert!((a.position + 20.0).abs() < 0.2);
        assert!((rep.get(ResonanceLabel::B).unwrap().position - 0.3).abs() < 0.2);
        assert!((c.position - 8.0).abs() < 0.2);
        // an isolated Lorentzian of half width 0.5 has FWHM near 1
        assert!((c.width - 1.0).abs() < 0.2, "width {}", c.width);
        assert!((c.depth - 0.1).abs() < 0.02);
    }

    #[test]
    fn threshold_removes_shallow_dips() {
        let x = grid(-30.0, 15.0, 451);
        let y: Vec<f64> = x.iter().map(|&v| three_dips(v)).collect();
        let rep = find_resonances(&x, &y, 0.2, Some(-20.0), LabelWindows::default());
        assert!(rep.get(ResonanceLabel::C).is_none());
        assert!(rep.resonances.iter().all(|r| r.depth >= 0.2));
    }

    #[test]
    fn nan_samples_are_skipped() {
        let x = grid(-5.0, 5.0, 101);
        let mut y: Vec<f64> = x.iter().map(|&v| 1.0 - lorentz_dip(v, 2.0, 0.5, 0.5)).collect();
        y[20] = f64::NAN;
        let rep = find_resonances(&x, &y, 0.01, None, LabelWindows::default());
        assert_eq!(rep.resonances.len(), 1);
        assert!((rep.resonances[0].position - 2.0).abs() < 0.11);
    }

    proptest! {
        #[test]
        fn stable_under_refinement(at in -25.0f64..10.0, depth in 0.05f64..0.5) {
            let f = |v: f64| 1.0 - lorentz_dip(v, at, depth, 1.0);
            let coarse = grid(-30.0, 15.0, 226);
            let fine = grid(-30.0, 15.0, 451);
            let rc = find_resonances(&coarse, &coarse.iter().map(|&v| f(v)).collect::<Vec<_>>(), 0.01, None, LabelWindows::default());
            let rf = find_resonances(&fine, &fine.iter().map(|&v| f(v)).collect::<Vec<_>>(), 0.01, None, LabelWindows::default());
            prop_assert_eq!(rc.resonances.len(), 1);
            prop_assert_eq!(rf.resonances.len(), 1);
            prop_assert!((rc.resonances[0].position - rf.resonances[0].position).abs() <= 0.2 + 1e-12);
            for r in rc.resonances.iter().chain(&rf.resonances) {
                prop_assert!(r.depth > 0.0 && r.position >= -30.0 && r.position <= 15.0);
            }
        }
    }
}
