use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use resum_core::analysis::{compare as compare_tables, effective_model, find_resonances, Format, LabelWindows, ResultTable};
use resum_core::lattice::{build_modes, infinite_mode_density, DensityKind, LatticeSpec, ModelParams};
use resum_core::oracle::{dense_sweep, mcwf_sweep};
use resum_core::perturb::{sweep, SweepRow};
use resum_core::Error;
use serde::Serialize;

use crate::config::{Method, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::Unsupported(_) | Error::TooLarge { .. } | Error::Table(_) | Error::Io(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub struct Overrides {
    pub config: PathBuf,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

fn load(ov: &Overrides) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(&ov.config).map_err(|e| CliError::Config(format!("{}: {e}", ov.config.display())))?;
    let mut cfg = RunConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", ov.config.display())))?;
    if let Some(p) = &ov.output {
        cfg.output.path = Some(p.clone());
    }
    if let Some(f) = ov.format {
        cfg.output.format = f;
    }
    if let Some(s) = ov.seed {
        cfg.mcwf.seed = s;
    }
    Ok(cfg)
}

/// Writes through a single sink: the configured file or stdout.
fn emit(cfg: &RunConfig, write: impl FnOnce(&mut dyn Write) -> resum_core::Result<()>) -> Result<(), CliError> {
    match &cfg.output.path {
        Some(p) => {
            let mut f = std::io::BufWriter::new(fs::File::create(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?);
            write(&mut f)?;
            f.flush().map_err(|e| CliError::Config(e.to_string()))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn base_metadata(_cfg: &RunConfig, method: &str) -> Vec<(String, String)> {
    vec![("version".into(), env!("CARGO_PKG_VERSION").into()), ("method".into(), method.into())]
}

/// δΩ/Γ at which the drive hits the uniform mode.
fn uniform_detuning(params: &ModelParams, spec: &LatticeSpec) -> Option<f64> {
    let freq = match spec.site_count() {
        Some(_) => {
            let m = build_modes(spec, params).ok()?;
            m.modes[m.uniform?].frequency
        }
        None => infinite_mode_density(spec, params).ok()?.uniform_frequency,
    };
    Some((params.qubit_omega - freq) / params.qubit_gamma)
}

pub fn method(ov: &Overrides, forced: Option<Method>) -> Result<(), CliError> {
    let cfg = load(ov)?;
    let method = forced.or(cfg.method).ok_or_else(|| CliError::Config("method: `resum run` needs a method in the config".into()))?;
    cfg.check_method(method).map_err(CliError::Config)?;
    let params = cfg.model.params();
    let spec = cfg.lattice.spec()?;
    let grid = cfg.grid.values();
    if method == Method::EffectiveModel {
        return effective(&cfg, &params);
    }
    let (name, rows) = match method {
        Method::Perturb => ("perturb", sweep(&params, &spec, &grid, &cfg.perturb)?),
        Method::Dense => ("dense", dense_sweep(&params, &spec, &grid, cfg.dense.cutoff, &cfg.dense.options())?),
        Method::Mcwf => ("mcwf", mcwf_sweep(&params, &spec, &grid, &cfg.mcwf)?),
        Method::EffectiveModel => unreachable!(),
    };
    let mut meta = base_metadata(&cfg, name);
    if method == Method::Mcwf {
        meta.push(("seed".into(), cfg.mcwf.seed.to_string()));
    }
    if let Some(u) = uniform_detuning(&params, &spec) {
        meta.push(("uniform_detuning".into(), resum_core::analysis::table::format_number(u)));
    }
    meta.push(("config".into(), cfg.canonical()));
    let failures: Vec<&SweepRow> = rows.iter().filter(|r| r.error.is_some()).collect();
    let table = ResultTable::new(meta, rows.clone()).with_modes(spec.site_count().unwrap_or(0));
    emit(&cfg, |w| table.write(w, cfg.output.format))?;
    if let Some(first) = failures.first() {
        return Err(CliError::Numerical(format!(
            "{} of {} points failed; first at δΩ/Γ = {}: {}",
            failures.len(),
            rows.len(),
            first.detuning,
            first.error.as_deref().unwrap_or("")
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct PlainTable {
    metadata: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl PlainTable {
    fn write(&self, w: &mut dyn Write, format: Format) -> resum_core::Result<()> {
        match format {
            Format::Json => serde_json::to_writer_pretty(&mut *w, self).map_err(|e| Error::Table(e.to_string()))?,
            Format::Csv => {
                writeln!(w, "# schema_version = {}", resum_core::analysis::SCHEMA_VERSION)?;
                for (k, v) in &self.metadata {
                    for line in v.lines() {
                        writeln!(w, "# {k} = {line}")?;
                    }
                }
                let mut c = csv::Writer::from_writer(w);
                let err = |e: csv::Error| Error::Table(e.to_string());
                c.write_record(&self.columns).map_err(err)?;
                for r in &self.rows {
                    c.write_record(r.iter().map(|&x| resum_core::analysis::table::format_number(x))).map_err(err)?;
                }
                c.flush()?;
            }
        }
        Ok(())
    }
}

fn effective(cfg: &RunConfig, params: &ModelParams) -> Result<(), CliError> {
    let rep = effective_model(params, cfg.lattice.hopping, &cfg.effective.epsilons, &cfg.effective.scan)?;
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    let mut meta = base_metadata(cfg, "effective-model");
    meta.extend(rep.warnings.iter().map(|w| ("warning".to_string(), w.clone())));
    meta.push(("config".into(), cfg.canonical()));
    let rows = rep.points.iter().flat_map(|p| p.crossings.iter().map(move |&c| vec![p.epsilon, c])).collect();
    let t = PlainTable { metadata: meta, columns: vec!["epsilon".into(), "position".into()], rows };
    emit(cfg, |w| t.write(w, cfg.output.format))
}

pub fn modes(ov: &Overrides) -> Result<(), CliError> {
    let cfg = load(ov)?;
    let params = cfg.model.params();
    let spec = cfg.lattice.spec()?;
    let mut meta = base_metadata(&cfg, "modes");
    let rows = if spec.site_count().is_some() {
        let m = build_modes(&spec, &params)?;
        m.modes.iter().enumerate().map(|(k, mode)| vec![k as f64, mode.index as f64, mode.frequency, (m.uniform == Some(k)) as u8 as f64]).collect()
    } else {
        let d = infinite_mode_density(&spec, &params)?;
        let desc = match d.kind {
            DensityKind::Band { center, half_width } => format!("band centered at {center} with half width {half_width}"),
            DensityKind::PointMass { frequency } => format!("point mass at {frequency}"),
        };
        meta.push(("density".into(), desc));
        meta.push(("uniform_frequency".into(), d.uniform_frequency.to_string()));
        vec![]
    };
    meta.push(("config".into(), cfg.canonical()));
    let t = PlainTable { metadata: meta, columns: vec!["mode".into(), "index".into(), "frequency".into(), "uniform".into()], rows };
    emit(&cfg, |w| t.write(w, cfg.output.format))
}

fn read_table(p: &Path) -> Result<ResultTable, CliError> {
    let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
    ResultTable::read_any(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
}

pub fn compare(a: &Path, b: &Path, min: Option<f64>, max: Option<f64>, exclude: Option<f64>) -> Result<(), CliError> {
    let (ta, tb) = (read_table(a)?, read_table(b)?);
    let keep = |x: f64| min.is_none_or(|m| x >= m) && max.is_none_or(|m| x <= m) && exclude.is_none_or(|w| x.abs() > w);
    let d = compare_tables(&ta, &tb, keep)?;
    println!("{}", serde_json::to_string_pretty(&d).map_err(|e| CliError::Config(e.to_string()))?);
    Ok(())
}

pub fn resonances(file: &Path, threshold: f64) -> Result<(), CliError> {
    let t = read_table(file)?;
    let uniform = t.meta("uniform_detuning").and_then(|s| s.parse().ok());
    let rep = find_resonances(&t.detunings(), &t.sigma_minus_abs(), threshold, uniform, LabelWindows::default());
    println!("{}", serde_json::to_string_pretty(&rep).map_err(|e| CliError::Config(e.to_string()))?);
    Ok(())
}
