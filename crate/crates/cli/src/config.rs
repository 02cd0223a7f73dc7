//! Run configuration: one TOML file, versioned by `schema_version`.

use std::path::PathBuf;

use resum_core::analysis::{EffectiveConfig, Format};
use resum_core::lattice::{Geometry, LatticeSpec, ModelParams, Sites};
use resum_core::oracle::{SteadyOptions, TrajectoryConfig};
use resum_core::perturb::SweepConfig;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Perturb,
    Dense,
    Mcwf,
    EffectiveModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Used by `resum run`; the other subcommands imply their method.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default)]
    pub model: ModelSection,
    pub lattice: LatticeSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub perturb: SweepConfig,
    #[serde(default)]
    pub dense: DenseSection,
    #[serde(default)]
    pub mcwf: TrajectoryConfig,
    #[serde(default)]
    pub effective: EffectiveSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Rates and frequencies in angular-frequency units; the drive frequency is
/// set by the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub omega: f64,
    pub qubit_omega: f64,
    pub g: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub qubit_gamma: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let r = ModelParams::reference();
        ModelSection { omega: r.omega, qubit_omega: r.qubit_omega, g: r.g, epsilon: r.epsilon, gamma: r.gamma, qubit_gamma: r.qubit_gamma }
    }
}

impl ModelSection {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            omega: self.omega,
            qubit_omega: self.qubit_omega,
            drive_omega: self.qubit_omega,
            g: self.g,
            epsilon: self.epsilon,
            gamma: self.gamma,
            qubit_gamma: self.qubit_gamma,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteCount {
    Finite(usize),
    Word(Infinite),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Infinite {
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub geometry: Geometry,
    /// Site count, or "infinite".
    pub sites: SiteCount,
    pub hopping: f64,
}

impl LatticeSection {
    pub fn spec(&self) -> resum_core::Result<LatticeSpec> {
        let sites = match self.sites {
            SiteCount::Finite(n) => Sites::Finite(n),
            SiteCount::Word(Infinite::Infinite) => Sites::Infinite,
        };
        LatticeSpec::new(self.geometry, sites, self.hopping)
    }
}

/// δΩ/Γ grid, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { min: -30.0, max: 15.0, points: 200 }
    }
}

impl GridSection {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => vec![],
            1 => vec![self.min],
            n => (0..n).map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenseSection {
    pub cutoff: usize,
    pub max_dim: usize,
    pub check_cutoff: bool,
}

impl Default for DenseSection {
    fn default() -> Self {
        let o = SteadyOptions::default();
        DenseSection { cutoff: 5, max_dim: o.max_dim, check_cutoff: o.check_cutoff }
    }
}

impl DenseSection {
    pub fn options(&self) -> SteadyOptions {
        SteadyOptions { max_dim: self.max_dim, check_cutoff: self.check_cutoff, ..SteadyOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectiveSection {
    /// ε/Γ values.
    pub epsilons: Vec<f64>,
    #[serde(flatten)]
    pub scan: EffectiveConfig,
}

impl Default for EffectiveSection {
    fn default() -> Self {
        EffectiveSection { epsilons: vec![10.0, 15.0, 20.0, 25.0], scan: EffectiveConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Error text with the config path of the offending field.
fn prefix(section: &'static str) -> impl Fn(resum_core::Error) -> String {
    move |e| match e {
        resum_core::Error::InvalidParameter { field, reason } => format!("{section}.{field}: {reason}"),
        other => format!("{section}: {other}"),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("schema_version: expected {SCHEMA_VERSION}, found {}", self.schema_version));
        }
        self.model.params().validate().map_err(prefix("model"))?;
        self.lattice.spec().map_err(prefix("lattice"))?;
        if !(self.grid.min.is_finite() && self.grid.max.is_finite()) || self.grid.max < self.grid.min {
            return Err("grid: need finite min <= max".into());
        }
        self.mcwf.validate().map_err(prefix("mcwf"))?;
        if self.dense.cutoff < 2 {
            return Err("dense.cutoff: need at least two Fock levels".into());
        }
        Ok(())
    }

    /// Method-specific constraints.
    pub fn check_method(&self, method: Method) -> Result<(), String> {
        let infinite = matches!(self.lattice.sites, SiteCount::Word(_));
        match method {
            Method::Dense | Method::Mcwf if infinite => Err("lattice.sites: infinite lattices are only supported by the perturbative method".into()),
            Method::Mcwf if matches!(self.lattice.sites, SiteCount::Finite(n) if n > 4) => {
                Err("lattice.sites: trajectories are limited to N <= 4".into())
            }
            Method::EffectiveModel if self.lattice.sites != SiteCount::Finite(2) || self.lattice.geometry != Geometry::ChainPeriodic => {
                Err("lattice: the effective model is defined for the periodic dimer (chain-periodic, sites = 2)".into())
            }
            _ => Ok(()),
        }
    }

    /// The config as recorded in result headers. The output path is left out
    /// so that the same run written to two places gives identical files.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.output.path = None;
        toml::to_string(&c).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
[lattice]
geometry = "chain-periodic"
sites = 2
hopping = 10.0
"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.model.g, 3.0);
        assert_eq!(c.grid.values().len(), 200);
        assert_eq!(c.perturb.max_rank, 2);
        assert_eq!(c.output.format, Format::Csv);
    }

    #[test]
    fn canonical_form_round_trips() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        let again = RunConfig::parse(&c.canonical()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn infinite_sites() {
        let c = RunConfig::parse(&MINIMAL.replace("sites = 2", "sites = \"infinite\"")).unwrap();
        assert_eq!(c.lattice.spec().unwrap().sites, Sites::Infinite);
        assert!(c.check_method(Method::Dense).is_err());
        assert!(c.check_method(Method::Perturb).is_ok());
    }

    #[test]
    fn errors_name_the_field() {
        let e = RunConfig::parse(&format!("{MINIMAL}\n[model]\ngamma = -1.0\n")).unwrap_err();
        assert!(e.contains("model.") && e.contains("gamma"), "{e}");
        let e = RunConfig::parse(&format!("{MINIMAL}\n[grid]\npoints = \"many\"\n")).unwrap_err();
        assert!(e.contains("points"), "{e}");
        let e = RunConfig::parse(&MINIMAL.replace("schema_version = 1", "schema_version = 9")).unwrap_err();
        assert!(e.contains("schema_version"), "{e}");
        assert!(RunConfig::parse(&format!("{MINIMAL}\nbogus = 1\n")).is_err());
    }

    #[test]
    fn grid_edges() {
        assert!(GridSection { min: 0.0, max: 1.0, points: 0 }.values().is_empty());
        assert_eq!(GridSection { min: 2.0, max: 1.0, points: 1 }.values(), vec![2.0]);
        assert_eq!(GridSection { min: -1.0, max: 1.0, points: 3 }.values(), vec![-1.0, 0.0, 1.0]);
    }
}
