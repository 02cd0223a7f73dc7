use std::fmt;

use smallvec::SmallVec;

/// Photon mode `mode` in third-quantization state (m, n).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhotonEntry {
    pub mode: u32,
    pub m: u8,
    pub n: u8,
}

/// Qubit at `site` in eigenstate `mu` of its 4×4 Liouvillian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitEntry {
    pub site: u32,
    pub mu: u8,
}

/// Unperturbed eigenstate named by its deviations from the steady
/// configuration. Entries are sorted and never steady.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClusterLabel {
    photons: SmallVec<[PhotonEntry; 2]>,
    qubits: SmallVec<[QubitEntry; 2]>,
}

impl ClusterLabel {
    pub fn steady() -> Self {
        Self::default()
    }

    pub fn is_steady(&self) -> bool {
        self.photons.is_empty() && self.qubits.is_empty()
    }

    pub fn photons(&self) -> &[PhotonEntry] {
        &self.photons
    }

    pub fn qubits(&self) -> &[QubitEntry] {
        &self.qubits
    }

    pub fn photon(&self, mode: usize) -> (u8, u8) {
        match self.photons.binary_search_by_key(&(mode as u32), |p| p.mode) {
            Ok(i) => (self.photons[i].m, self.photons[i].n),
            Err(_) => (0, 0),
        }
    }

    pub fn qubit(&self, site: usize) -> u8 {
        match self.qubits.binary_search_by_key(&(site as u32), |q| q.site) {
            Ok(i) => self.qubits[i].mu,
            Err(_) => 0,
        }
    }

    pub fn set_photon(&mut self, mode: usize, (m, n): (u8, u8)) {
        let mode = mode as u32;
        match self.photons.binary_search_by_key(&mode, |p| p.mode) {
            Ok(i) if m == 0 && n == 0 => {
                self.photons.remove(i);
            }
            Ok(i) => {
                self.photons[i].m = m;
                self.photons[i].n = n;
            }
            Err(_) if m == 0 && n == 0 => {}
            Err(i) => self.photons.insert(i, PhotonEntry { mode, m, n }),
        }
    }

    pub fn set_qubit(&mut self, site: usize, mu: u8) {
        let site = site as u32;
        match self.qubits.binary_search_by_key(&site, |q| q.site) {
            Ok(i) if mu == 0 => {
                self.qubits.remove(i);
            }
            Ok(i) => self.qubits[i].mu = mu,
            Err(_) if mu == 0 => {}
            Err(i) => self.qubits.insert(i, QubitEntry { site, mu }),
        }
    }

    pub fn with_photon(mut self, mode: usize, mn: (u8, u8)) -> Self {
        self.set_photon(mode, mn);
        self
    }

    pub fn with_qubit(mut self, site: usize, mu: u8) -> Self {
        self.set_qubit(site, mu);
        self
    }

    /// Total photon excitation Σ_k (m_k + n_k).
    pub fn photon_excitation(&self) -> usize {
        self.photons.iter().map(|p| (p.m + p.n) as usize).sum()
    }
}

impl fmt::Display for ClusterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_steady() {
            return write!(f, "steady");
        }
        let mut first = true;
        for p in &self.photons {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "k{}:({},{})", p.mode, p.m, p.n)?;
        }
        for q in &self.qubits {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "r{}:{}", q.site, q.mu)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form() {
        let a = ClusterLabel::steady().with_photon(3, (1, 0)).with_qubit(2, 1).with_photon(1, (0, 1));
        let b = ClusterLabel::steady().with_photon(1, (0, 1)).with_qubit(2, 1).with_photon(3, (1, 0));
        assert_eq!(a, b);
        assert_eq!(a.photons()[0].mode, 1);
        assert_eq!(a.photon(3), (1, 0));
        assert_eq!(a.photon(2), (0, 0));
        let c = a.clone().with_photon(1, (0, 0)).with_photon(3, (0, 0)).with_qubit(2, 0);
        assert!(c.is_steady());
        assert_eq!(a.to_string(), "k1:(0,1) k3:(1,0) r2:1");
        assert_eq!(a.photon_excitation(), 2);
    }
}
