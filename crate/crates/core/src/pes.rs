//! Potential-energy-surface sweeps: every configured method on every point,
//! relative-energy curves against the first point and RMSE tables.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_kupccgsd, build_uccsd, AnsatzCircuit};
use crate::encoding::{EncodingKind, EncodingScheme};
use crate::error::{Error, Result};
use crate::fci::fci_ground_energy;
use crate::hamiltonian::{
    build_qubit_hamiltonian, load_integrals, ActiveSpaceSpec, FixtureMetadata, MolecularIntegrals,
};
use crate::pauli::PauliSum;
use crate::simulator::{derive_seed, NoiseSpec};
use crate::units::hartree_to_kcal_per_mol;
use crate::vqe::{minimize, repeat_and_average, Backend, OptimizerKind, OptimizerSettings, VqeProblem, VqeResult};

/// Name of the oracle curve in the output tables.
pub const ORACLE_NAME: &str = "fci";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub label: String,
    pub integrals: PathBuf,
    /// Falls back to the `.meta` sidecar, then to the full orbital space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_space: Option<ActiveSpaceSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzKind {
    Uccsd,
    Kupccgsd,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Exact,
    Sampled,
    Noisy,
}

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub name: String,
    pub ansatz: AnsatzKind,
    /// Layer count for k-UpCCGSD.
    #[serde(default = "default_one")]
    pub k: usize,
    #[serde(default = "default_true")]
    pub spin_symmetrize: bool,
    #[serde(default)]
    pub backend: BackendKind,
    /// Required for `sampled`; optional for `noisy` (exact trace when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default = "default_one")]
    pub repeats: usize,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<usize>,
    /// Noise-spec file for the `noisy` backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<PathBuf>,
    /// Loaded from `noise` by [`SweepConfig::load`].
    #[serde(skip)]
    pub noise_spec: Option<NoiseSpec>,
}

impl MethodConfig {
    pub fn exact(name: &str, ansatz: AnsatzKind, k: usize) -> Self {
        MethodConfig {
            name: name.into(),
            ansatz,
            k,
            spin_symmetrize: true,
            backend: BackendKind::Exact,
            shots: None,
            repeats: 1,
            optimizer: OptimizerKind::Cobyla,
            max_evaluations: None,
            noise: None,
            noise_spec: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(format!("method `{}`: {m}", self.name)));
        if self.name.is_empty()
            || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return err("name must be non-empty and use only letters, digits, `-`, `_` or `.`".into());
        }
        if self.name == ORACLE_NAME || self.name == "rmse_matrix" {
            return err(format!("name `{}` is reserved", self.name));
        }
        if self.k == 0 {
            return err("k must be at least 1".into());
        }
        if self.ansatz == AnsatzKind::Uccsd && self.k != 1 {
            return err("k only applies to kupccgsd".into());
        }
        if self.repeats == 0 {
            return err("repeats must be at least 1".into());
        }
        if self.max_evaluations == Some(0) {
            return err("max_evaluations must be at least 1".into());
        }
        if self.shots == Some(0) {
            return err("shots must be at least 1".into());
        }
        match self.backend {
            BackendKind::Exact => {
                if self.shots.is_some() || self.noise.is_some() || self.noise_spec.is_some() {
                    return err("the exact backend takes neither shots nor noise".into());
                }
            }
            BackendKind::Sampled => {
                if self.shots.is_none() {
                    return err("the sampled backend needs shots".into());
                }
                if self.noise.is_some() || self.noise_spec.is_some() {
                    return err("the sampled backend takes no noise spec".into());
                }
            }
            BackendKind::Noisy => {
                if self.noise_spec.is_none() {
                    return err("the noisy backend needs a noise spec".into());
                }
            }
        }
        let stochastic = self.backend == BackendKind::Sampled || self.shots.is_some();
        if self.repeats > 1 && !stochastic {
            return err("repeats > 1 needs a shot-sampled backend".into());
        }
        Ok(())
    }

    pub fn build_ansatz(&self, active: &ActiveSpaceSpec, scheme: &EncodingScheme) -> Result<AnsatzCircuit> {
        let n_modes = active.n_qubits();
        let n_e = active.n_active_electrons;
        match self.ansatz {
            AnsatzKind::Uccsd => build_uccsd(n_modes, n_e, scheme, self.spin_symmetrize),
            AnsatzKind::Kupccgsd => build_kupccgsd(n_modes, n_e, self.k, scheme),
        }
    }

    pub fn backend(&self, seed: u64) -> Result<Backend> {
        Ok(match self.backend {
            BackendKind::Exact => Backend::Exact,
            BackendKind::Sampled => Backend::Sampled {
                shots: self.shots.ok_or_else(|| Error::Config("sampled backend needs shots".into()))?,
                seed,
            },
            BackendKind::Noisy => {
                let noise = self
                    .noise_spec
                    .clone()
                    .ok_or_else(|| Error::Config("noisy backend needs a noise spec".into()))?;
                Backend::Noisy {
                    noise: NoiseSpec { seed, ..noise },
                    shots: self.shots,
                }
            }
        })
    }
}

fn default_encoding() -> EncodingKind {
    EncodingKind::BravyiKitaev
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_encoding")]
    pub encoding: EncodingKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub points: Vec<PointConfig>,
    #[serde(default)]
    pub methods: Vec<MethodConfig>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl SweepConfig {
    /// Parses TOML; relative paths are resolved against `base_dir` and noise
    /// specs are loaded.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for p in &mut cfg.points {
            p.integrals = resolve(base_dir, &p.integrals);
        }
        if let Some(out) = &cfg.out_dir {
            cfg.out_dir = Some(resolve(base_dir, out));
        }
        for m in &mut cfg.methods {
            if let Some(path) = &m.noise {
                let path = resolve(base_dir, path);
                m.noise_spec = Some(NoiseSpec::load(&path).map_err(|e| match e {
                    Error::Noise(msg) => Error::Config(format!("{}: {msg}", path.display())),
                    other => other,
                })?);
                m.noise = Some(path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config(format!("seed {} exceeds {}", self.seed, i64::MAX)));
        }
        if self.points.is_empty() {
            return Err(Error::Config("at least one point is required".into()));
        }
        let mut labels = BTreeSet::new();
        for p in &self.points {
            if p.label.is_empty() {
                return Err(Error::Config("point labels must be non-empty".into()));
            }
            if !labels.insert(p.label.as_str()) {
                return Err(Error::Config(format!("duplicate point label `{}`", p.label)));
            }
        }
        let mut names = BTreeSet::new();
        for m in &self.methods {
            m.validate()?;
            if !names.insert(m.name.as_str()) {
                return Err(Error::Config(format!("duplicate method name `{}`", m.name)));
            }
        }
        Ok(())
    }

    pub fn method(&self, name: &str) -> Result<&MethodConfig> {
        self.methods
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::Config(format!("no method named `{name}`")))
    }

    pub fn point(&self, label: &str) -> Result<&PointConfig> {
        self.points
            .iter()
            .find(|p| p.label == label)
            .ok_or_else(|| Error::Config(format!("no point labelled `{label}`")))
    }

    /// Seed for a stochastic run of method `m` at point `p`.
    pub fn run_seed(&self, method_index: usize, point_index: usize) -> u64 {
        derive_seed(derive_seed(self.seed, method_index as u64), point_index as u64)
    }
}

/// A point with its Hamiltonian built and oracle energy computed.
#[derive(Clone, Debug)]
pub struct PreparedPoint {
    pub label: String,
    pub integrals: MolecularIntegrals,
    pub active_space: ActiveSpaceSpec,
    pub scheme: EncodingScheme,
    pub hamiltonian: PauliSum,
    pub fci_energy: f64,
}

/// Active space from the config, else the sidecar, else the full space.
pub fn point_active_space(point: &PointConfig, ints: &MolecularIntegrals) -> Result<ActiveSpaceSpec> {
    if let Some(spec) = &point.active_space {
        return Ok(spec.clone());
    }
    let sidecar = FixtureMetadata::sidecar_path(&point.integrals);
    if sidecar.exists() {
        return Ok(FixtureMetadata::load(&sidecar)?.active_space(ints.n_electrons));
    }
    Ok(ActiveSpaceSpec::full(ints))
}

pub fn prepare_point(point: &PointConfig, encoding: EncodingKind) -> Result<PreparedPoint> {
    let wrap = |e: Error| Error::Point {
        label: point.label.clone(),
        source: Box::new(e),
    };
    let inner = || -> Result<PreparedPoint> {
        let integrals = load_integrals(&point.integrals)?;
        let active_space = point_active_space(point, &integrals)?;
        active_space.validate(&integrals)?;
        let hamiltonian = build_qubit_hamiltonian(&integrals, &active_space, encoding)?;
        let scheme = EncodingScheme::new(encoding, active_space.n_qubits())?;
        let fci_energy = fci_ground_energy(&hamiltonian, Some(active_space.n_active_electrons), &scheme)?.ground_energy();
        Ok(PreparedPoint {
            label: point.label.clone(),
            integrals,
            active_space,
            scheme,
            hamiltonian,
            fci_energy,
        })
    };
    inner().map_err(wrap)
}

/// One method evaluated at one point.
#[derive(Clone, Debug)]
pub struct PointResult {
    pub energy: f64,
    /// Standard error of the reported energy; the error of the mean for
    /// repeated runs, 0 on deterministic backends.
    pub stderr: f64,
    pub seed: Option<u64>,
    pub runs: Vec<VqeResult>,
}

impl PointResult {
    pub fn converged(&self) -> bool {
        self.runs.iter().all(|r| r.converged)
    }

    pub fn n_evaluations(&self) -> usize {
        self.runs.iter().map(|r| r.n_evaluations).sum()
    }
}

pub fn run_method(method: &MethodConfig, point: &PreparedPoint, seed: u64, initial: Option<&[f64]>) -> Result<PointResult> {
    let inner = || -> Result<PointResult> {
        let ansatz = method.build_ansatz(&point.active_space, &point.scheme)?;
        let backend = method.backend(seed)?;
        let mut optimizer = OptimizerSettings::for_backend(method.optimizer, &backend);
        if let Some(max) = method.max_evaluations {
            optimizer.max_evaluations = max;
        }
        let seed = backend.seed();
        let problem = VqeProblem::new(point.hamiltonian.clone(), ansatz, backend)?.with_optimizer(optimizer);
        let zeros = vec![0.0; problem.ansatz.n_parameters];
        let initial = initial.unwrap_or(&zeros);
        if problem.backend.is_stochastic() && method.repeats > 1 {
            let summary = repeat_and_average(&problem, method.repeats, initial)?;
            Ok(PointResult {
                energy: summary.mean,
                stderr: summary.std / (method.repeats as f64).sqrt(),
                seed,
                runs: summary.runs,
            })
        } else {
            let run = minimize(&problem, initial)?;
            Ok(PointResult {
                energy: run.energy,
                stderr: run.stderr,
                seed,
                runs: vec![run],
            })
        }
    };
    inner().map_err(|e| Error::Point {
        label: point.label.clone(),
        source: Box::new(e),
    })
}

/// Energies relative to the first entry, in kcal/mol.
pub fn relative_kcal_per_mol(absolute: &[f64]) -> Vec<f64> {
    let Some(&first) = absolute.first() else {
        return Vec::new();
    };
    absolute.iter().map(|e| hartree_to_kcal_per_mol(e - first)).collect()
}

/// Root-mean-square difference over all points, the shared zero first point
/// included.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidRequest(format!(
            "curve lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidRequest("curves are empty".into()));
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / a.len() as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub name: String,
    pub absolute_hartree: Vec<f64>,
    pub relative_kcalmol: Vec<f64>,
    pub stderr_hartree: Vec<f64>,
}

impl Curve {
    pub fn new(name: &str, absolute_hartree: Vec<f64>, stderr_hartree: Vec<f64>) -> Self {
        Curve {
            name: name.into(),
            relative_kcalmol: relative_kcal_per_mol(&absolute_hartree),
            absolute_hartree,
            stderr_hartree,
        }
    }
}

/// Curves for the oracle (first) and every method, plus their pairwise RMSE
/// in kcal/mol.
#[derive(Clone, Debug, PartialEq)]
pub struct PesTable {
    pub labels: Vec<String>,
    pub curves: Vec<Curve>,
    pub rmse_kcalmol: Vec<Vec<f64>>,
}

impl PesTable {
    pub fn new(labels: Vec<String>, curves: Vec<Curve>) -> Result<Self> {
        let mut matrix = vec![vec![0.0; curves.len()]; curves.len()];
        for i in 0..curves.len() {
            for j in 0..curves.len() {
                matrix[i][j] = rmse(&curves[i].relative_kcalmol, &curves[j].relative_kcalmol)?;
            }
        }
        Ok(PesTable {
            labels,
            curves,
            rmse_kcalmol: matrix,
        })
    }

    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.name == name)
    }

    /// RMSE between two named curves.
    pub fn rmse_between(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.curves.iter().position(|c| c.name == a)?;
        let j = self.curves.iter().position(|c| c.name == b)?;
        Some(self.rmse_kcalmol[i][j])
    }

    pub fn curve_csv(&self, curve: &Curve) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["label", "e_abs_hartree", "e_rel_kcalmol", "stderr_hartree"])?;
        for (i, label) in self.labels.iter().enumerate() {
            w.write_record([
                label.clone(),
                format_float(curve.absolute_hartree[i]),
                format_float(curve.relative_kcalmol[i]),
                format_float(curve.stderr_hartree[i]),
            ])?;
        }
        finish_csv(w)
    }

    pub fn rmse_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["rmse_kcalmol".to_string()];
        header.extend(self.curves.iter().map(|c| c.name.clone()));
        w.write_record(&header)?;
        for (curve, row) in self.curves.iter().zip(&self.rmse_kcalmol) {
            let mut record = vec![curve.name.clone()];
            record.extend(row.iter().map(|v| format_float(*v)));
            w.write_record(&record)?;
        }
        finish_csv(w)
    }
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidRequest(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Shortest representation that round-trips.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

/// Everything a sweep produced.
#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub table: PesTable,
    pub points: Vec<PreparedPoint>,
    /// `results[m][p]` for method `m` at point `p`.
    pub results: Vec<Vec<PointResult>>,
}

/// Runs the oracle and every method at every point. Points and methods run
/// in parallel; the first failure aborts the sweep with its point label.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let points: Vec<PreparedPoint> = cfg
        .points
        .par_iter()
        .map(|p| prepare_point(p, cfg.encoding))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..cfg.methods.len())
        .flat_map(|m| (0..points.len()).map(move |p| (m, p)))
        .collect();
    let flat: Vec<PointResult> = jobs
        .par_iter()
        .map(|&(m, p)| run_method(&cfg.methods[m], &points[p], cfg.run_seed(m, p), None))
        .collect::<Result<_>>()?;
    let mut results: Vec<Vec<PointResult>> = Vec::with_capacity(cfg.methods.len());
    let mut it = flat.into_iter();
    for _ in &cfg.methods {
        results.push(it.by_ref().take(points.len()).collect());
    }

    let labels: Vec<String> = points.iter().map(|p| p.label.clone()).collect();
    let mut curves = vec![Curve::new(
        ORACLE_NAME,
        points.iter().map(|p| p.fci_energy).collect(),
        vec![0.0; points.len()],
    )];
    for (m, rs) in cfg.methods.iter().zip(&results) {
        curves.push(Curve::new(
            &m.name,
            rs.iter().map(|r| r.energy).collect(),
            rs.iter().map(|r| r.stderr).collect(),
        ));
    }
    Ok(SweepOutput {
        table: PesTable::new(labels, curves)?,
        points,
        results,
    })
}

#[derive(Serialize)]
struct ManifestRun {
    method: String,
    point: String,
    /// Decimal string: derived seeds exceed the TOML integer range.
    seed: Option<String>,
    repeats: usize,
    n_evaluations: usize,
    converged: bool,
    n_parameters: usize,
    energy_hartree: f64,
    stderr_hartree: f64,
}

#[derive(Serialize)]
struct ManifestPoint {
    label: String,
    n_qubits: usize,
    n_active_electrons: usize,
    active_indices: Vec<usize>,
    frozen_occupied_indices: Vec<usize>,
    n_pauli_terms: usize,
    fci_energy_hartree: f64,
}

#[derive(Serialize)]
struct ManifestNoise {
    method: String,
    spec: NoiseSpec,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a SweepConfig,
    points: Vec<ManifestPoint>,
    noise: Vec<ManifestNoise>,
    runs: Vec<ManifestRun>,
}

impl SweepOutput {
    /// Writes `fci.csv`, `<method>.csv`, `rmse_matrix.csv`, `manifest.toml`
    /// and per-run iteration traces under `traces/`.
    pub fn write(&self, cfg: &SweepConfig, out_dir: &Path) -> Result<()> {
        let write = |path: PathBuf, text: String| fs::write(&path, text).map_err(|e| Error::io(path, e));
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        for curve in &self.table.curves {
            write(out_dir.join(format!("{}.csv", curve.name)), self.table.curve_csv(curve)?)?;
        }
        write(out_dir.join("rmse_matrix.csv"), self.table.rmse_csv()?)?;

        let traces = out_dir.join("traces");
        for (m, rs) in cfg.methods.iter().zip(&self.results) {
            let dir = traces.join(&m.name);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for (point, r) in self.points.iter().zip(rs) {
                for (i, run) in r.runs.iter().enumerate() {
                    let name = if r.runs.len() == 1 {
                        format!("{}.csv", point.label)
                    } else {
                        format!("{}_r{i}.csv", point.label)
                    };
                    run.save_trace(&dir.join(name))?;
                }
            }
        }
        write(out_dir.join("manifest.toml"), self.manifest(cfg)?)
    }

    pub fn manifest(&self, cfg: &SweepConfig) -> Result<String> {
        let points = self
            .points
            .iter()
            .map(|p| ManifestPoint {
                label: p.label.clone(),
                n_qubits: p.active_space.n_qubits(),
                n_active_electrons: p.active_space.n_active_electrons,
                active_indices: p.active_space.active_indices.clone(),
                frozen_occupied_indices: p.active_space.frozen_occupied_indices.clone(),
                n_pauli_terms: p.hamiltonian.len(),
                fci_energy_hartree: p.fci_energy,
            })
            .collect();
        let noise = cfg
            .methods
            .iter()
            .filter_map(|m| {
                m.noise_spec.clone().map(|spec| ManifestNoise {
                    method: m.name.clone(),
                    spec,
                })
            })
            .collect();
        let mut runs = Vec::new();
        for (m, rs) in cfg.methods.iter().zip(&self.results) {
            for (p, r) in self.points.iter().zip(rs) {
                runs.push(ManifestRun {
                    method: m.name.clone(),
                    point: p.label.clone(),
                    seed: r.seed.map(|s| s.to_string()),
                    repeats: r.runs.len(),
                    n_evaluations: r.n_evaluations(),
                    converged: r.converged(),
                    n_parameters: r.runs.first().map_or(0, |run| run.params.len()),
                    energy_hartree: r.energy,
                    stderr_hartree: r.stderr,
                });
            }
        }
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            points,
            noise,
            runs,
        };
        toml::to_string(&manifest).map_err(|e| Error::InvalidRequest(format!("manifest: {e}")))
    }
}
