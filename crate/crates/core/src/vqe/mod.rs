//! The variational loop: derivative-free minimization of an ansatz energy on
//! an exact, shot-sampled or noisy backend.

pub mod cobyla;
pub mod nelder_mead;
pub mod polish;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{bind_and_compile, AnsatzCircuit};
use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::simulator::{
    derive_seed, expectation_exact, expectation_sampled, run_noisy, run_statevector, NoiseSpec,
};

pub const DEFAULT_MAX_EVALUATIONS: usize = 5000;
pub const DEFAULT_TOL_EXACT: f64 = 1e-8;
pub const DEFAULT_TOL_SAMPLED: f64 = 1e-5;

pub(crate) type Objective<'a> = dyn FnMut(&[f64]) -> Result<f64> + 'a;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Cobyla,
    NelderMead,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub kind: OptimizerKind,
    /// Initial trust-region radius (or simplex edge).
    pub rho_begin: f64,
    /// Final radius below which the search stops.
    pub rho_end: f64,
    /// Energy change (hartree) treated as converged.
    pub tol_energy: f64,
    pub max_evaluations: usize,
    /// Least-squares quadratic refinement after the search; 0 disables it.
    #[serde(default)]
    pub polish_samples_per_coefficient: usize,
    /// Half-width of the refinement design.
    #[serde(default = "default_polish_radius")]
    pub polish_radius: f64,
}

fn default_polish_radius() -> f64 {
    0.1
}

impl OptimizerSettings {
    pub fn for_backend(kind: OptimizerKind, backend: &Backend) -> Self {
        let (tol_energy, rho_end) = if backend.is_stochastic() {
            (DEFAULT_TOL_SAMPLED, 1e-4)
        } else {
            (DEFAULT_TOL_EXACT, 1e-7)
        };
        OptimizerSettings {
            kind,
            rho_begin: 0.25,
            rho_end,
            tol_energy,
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
            polish_samples_per_coefficient: if backend.is_stochastic() { 8 } else { 0 },
            polish_radius: default_polish_radius(),
        }
    }

    pub fn run(&self, objective: &mut Objective<'_>, x0: &[f64]) -> Result<OptimizeOutcome> {
        let outcome = match self.kind {
            OptimizerKind::Cobyla => cobyla::minimize(objective, x0, self)?,
            OptimizerKind::NelderMead => nelder_mead::minimize(objective, x0, self)?,
        };
        polish::refine(objective, outcome, self)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Backend {
    Exact,
    Sampled { shots: u64, seed: u64 },
    /// Density-matrix evolution; exact `Tr(rho H)` when `shots` is `None`.
    /// Sampling uses `noise.seed`.
    Noisy { noise: NoiseSpec, shots: Option<u64> },
}

impl Backend {
    pub fn is_stochastic(&self) -> bool {
        matches!(self, Backend::Sampled { .. } | Backend::Noisy { shots: Some(_), .. })
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Backend::Exact => None,
            Backend::Sampled { seed, .. } => Some(*seed),
            Backend::Noisy { noise, .. } => Some(noise.seed),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Backend {
        match self {
            Backend::Exact => Backend::Exact,
            Backend::Sampled { shots, .. } => Backend::Sampled { shots: *shots, seed },
            Backend::Noisy { noise, shots } => Backend::Noisy {
                noise: NoiseSpec { seed, ..noise.clone() },
                shots: *shots,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub energy: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug)]
pub struct VqeProblem {
    pub hamiltonian: PauliSum,
    pub ansatz: AnsatzCircuit,
    pub backend: Backend,
    pub optimizer: OptimizerSettings,
}

impl VqeProblem {
    pub fn new(hamiltonian: PauliSum, ansatz: AnsatzCircuit, backend: Backend) -> Result<Self> {
        if hamiltonian.n_qubits() != ansatz.n_qubits {
            return Err(Error::QubitMismatch {
                left: hamiltonian.n_qubits(),
                right: ansatz.n_qubits,
            });
        }
        let optimizer = OptimizerSettings::for_backend(OptimizerKind::Cobyla, &backend);
        Ok(VqeProblem {
            hamiltonian,
            ansatz,
            backend,
            optimizer,
        })
    }

    pub fn with_optimizer(mut self, optimizer: OptimizerSettings) -> Self {
        self.optimizer = optimizer;
        self
    }

    /// Energy at `params`. Stochastic backends draw from a stream derived
    /// from the backend seed and `eval_index`.
    pub fn evaluate(&self, params: &[f64], eval_index: usize) -> Result<Evaluation> {
        let program = bind_and_compile(&self.ansatz, params)?;
        let h = &self.hamiltonian;
        let evaluation = match &self.backend {
            Backend::Exact => Evaluation {
                energy: expectation_exact(&run_statevector(&program)?, h)?,
                stderr: 0.0,
            },
            Backend::Sampled { shots, seed } => {
                let state = run_statevector(&program)?;
                let e = expectation_sampled(&state, h, *shots, derive_seed(*seed, eval_index as u64))?;
                Evaluation {
                    energy: e.mean,
                    stderr: e.stderr,
                }
            }
            Backend::Noisy { noise, shots } => {
                let rho = run_noisy(&program, noise)?;
                match shots {
                    None => Evaluation {
                        energy: expectation_exact(&rho, h)?,
                        stderr: 0.0,
                    },
                    Some(shots) => {
                        let e = expectation_sampled(&rho, h, *shots, derive_seed(noise.seed, eval_index as u64))?;
                        Evaluation {
                            energy: e.mean,
                            stderr: e.stderr,
                        }
                    }
                }
            }
        };
        if !evaluation.energy.is_finite() {
            return Err(Error::NonFinite(eval_index));
        }
        Ok(evaluation)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub eval_index: usize,
    pub energy: f64,
    pub stderr: f64,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VqeResult {
    pub energy: f64,
    pub stderr: f64,
    pub params: Vec<f64>,
    pub trace: Vec<TraceEntry>,
    pub n_evaluations: usize,
    pub converged: bool,
    /// Backend seed; evaluation `i` used `derive_seed(seed, i)`.
    pub seed: Option<u64>,
}

impl VqeResult {
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let n_params = self.params.len();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "eval_index".to_string(),
            "energy_hartree".to_string(),
            "stderr_hartree".to_string(),
        ];
        header.extend((0..n_params).map(|i| format!("param_{i}")));
        w.write_record(&header)?;
        for t in &self.trace {
            let mut row = vec![t.eval_index.to_string(), format!("{:?}", t.energy), format!("{:?}", t.stderr)];
            row.extend(t.params.iter().map(|p| format!("{p:?}")));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }

    pub fn save_trace(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_trace_csv(file)
    }
}

/// Runs the configured optimizer from `initial`. On stochastic backends the
/// reported energy is a fresh evaluation at the final parameters, appended
/// to the trace.
pub fn minimize(problem: &VqeProblem, initial: &[f64]) -> Result<VqeResult> {
    if initial.len() != problem.ansatz.n_parameters {
        return Err(Error::ParameterLength {
            expected: problem.ansatz.n_parameters,
            got: initial.len(),
        });
    }
    let mut trace: Vec<TraceEntry> = Vec::new();
    let outcome = {
        let mut objective = |x: &[f64]| -> Result<f64> {
            let eval_index = trace.len();
            let e = problem.evaluate(x, eval_index)?;
            trace.push(TraceEntry {
                eval_index,
                energy: e.energy,
                stderr: e.stderr,
                params: x.to_vec(),
            });
            Ok(e.energy)
        };
        problem.optimizer.run(&mut objective, initial)?
    };

    let (energy, stderr) = if problem.backend.is_stochastic() {
        let eval_index = trace.len();
        let e = problem.evaluate(&outcome.x, eval_index)?;
        trace.push(TraceEntry {
            eval_index,
            energy: e.energy,
            stderr: e.stderr,
            params: outcome.x.clone(),
        });
        (e.energy, e.stderr)
    } else {
        (outcome.f, 0.0)
    };
    Ok(VqeResult {
        energy,
        stderr,
        params: outcome.x,
        n_evaluations: trace.len(),
        trace,
        converged: outcome.converged,
        seed: problem.backend.seed(),
    })
}

#[derive(Clone, Debug)]
pub struct RepeatSummary {
    pub mean: f64,
    /// Sample standard deviation over runs; 0 for a single run.
    pub std: f64,
    pub runs: Vec<VqeResult>,
}

/// Independent minimizations with seeds `derive_seed(base, r)`, run in
/// parallel and reported in repeat order.
pub fn repeat_and_average(problem: &VqeProblem, n_repeats: usize, initial: &[f64]) -> Result<RepeatSummary> {
    let Some(base) = problem.backend.seed() else {
        return Err(Error::InvalidRequest(
            "repeated runs need a sampled or noisy backend".into(),
        ));
    };
    if n_repeats == 0 {
        return Err(Error::InvalidRequest("n_repeats must be at least 1".into()));
    }
    let runs: Vec<VqeResult> = (0..n_repeats)
        .into_par_iter()
        .map(|r| {
            let p = VqeProblem {
                backend: problem.backend.with_seed(derive_seed(base, r as u64)),
                ..problem.clone()
            };
            minimize(&p, initial)
        })
        .collect::<Result<_>>()?;
    let n = runs.len() as f64;
    let mean = runs.iter().map(|r| r.energy).sum::<f64>() / n;
    let std = if runs.len() > 1 {
        (runs.iter().map(|r| (r.energy - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(RepeatSummary { mean, std, runs })
}
