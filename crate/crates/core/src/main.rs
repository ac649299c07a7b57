use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qchem_vqe::ansatz::{bind_and_compile, GateProgram};
use qchem_vqe::encoding::{EncodingKind, EncodingScheme};
use qchem_vqe::fermion::FermionOperator;
use qchem_vqe::pauli::PauliSum;
use qchem_vqe::pes::{self, prepare_point, run_method, run_sweep, PointConfig, SweepConfig};
use qchem_vqe::simulator::{expectation_exact, expectation_sampled, run_noisy, run_statevector, NoiseSpec};
use qchem_vqe::{Error, Result};

#[derive(Parser)]
#[command(name = "qchem-vqe", version, about = "VQE potential-energy surfaces on simulated qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Map a fermion operator (or the Hamiltonian of an integral file) to qubits.
    Map(MapArgs),
    /// Exact ground-state energies as `point_label,e_fci_hartree` CSV.
    Fci(FciArgs),
    /// Run one method at one point of a sweep config.
    Energy(EnergyArgs),
    /// Run a full sweep and write the result tables.
    Pes(PesArgs),
    /// Evaluate a fixed gate program under a noise spec.
    NoiseSim(NoiseSimArgs),
}

#[derive(Args)]
struct EncodingArg {
    /// Fermion-to-qubit encoding: jw, parity or bk.
    #[arg(long, default_value = "bk")]
    encoding: EncodingKind,
}

#[derive(Args)]
struct MapArgs {
    /// Fermion-operator text file, or an integral file with `--integrals`.
    input: PathBuf,
    /// Treat the input as an integral file; the active space comes from its sidecar.
    #[arg(long)]
    integrals: bool,
    #[command(flatten)]
    encoding: EncodingArg,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FciArgs {
    /// Integral files; labels are the file stems.
    integrals: Vec<PathBuf>,
    /// Sweep config whose points are evaluated instead.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    encoding: EncodingArg,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnergyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Point label; the first point when absent.
    #[arg(long)]
    point: Option<String>,
    /// Method name; the first method when absent.
    #[arg(long)]
    method: Option<String>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the iteration trace.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Writes the optimized gate program to this path.
    #[arg(long)]
    emit_circuit: Option<PathBuf>,
}

#[derive(Args)]
struct PesArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct NoiseSimArgs {
    /// Gate program in the `--emit-circuit` text format.
    #[arg(long)]
    circuit: PathBuf,
    /// Qubit Hamiltonian in Pauli-sum text form.
    #[arg(long, conflicts_with = "integrals", required_unless_present = "integrals")]
    hamiltonian: Option<PathBuf>,
    /// Integral file to build the Hamiltonian from.
    #[arg(long)]
    integrals: Option<PathBuf>,
    #[command(flatten)]
    encoding: EncodingArg,
    /// Noise spec; noiseless when absent.
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Shots per measurement group; exact trace when absent.
    #[arg(long)]
    shots: Option<u64>,
    /// Overrides the noise-spec seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
    }
}

fn point_from_file(path: &Path) -> PointConfig {
    PointConfig {
        label: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        integrals: path.to_path_buf(),
        active_space: None,
    }
}

fn map(args: &MapArgs) -> Result<()> {
    let kind = args.encoding.encoding;
    let qubit = if args.integrals {
        prepare_point(&point_from_file(&args.input), kind)?.hamiltonian
    } else {
        let f = FermionOperator::from_text(&read(&args.input)?, &args.input)?;
        EncodingScheme::new(kind, f.n_modes())?.map_operator(&f)?
    };
    emit(args.out.as_deref(), &qubit.to_text())
}

fn fci(args: &FciArgs) -> Result<()> {
    let (points, kind) = match &args.config {
        Some(path) => {
            if !args.integrals.is_empty() {
                return Err(Error::Config("give either integral files or --config, not both".into()));
            }
            let cfg = SweepConfig::load(path)?;
            (cfg.points, cfg.encoding)
        }
        None => {
            if args.integrals.is_empty() {
                return Err(Error::Config("no integral files given".into()));
            }
            (args.integrals.iter().map(|p| point_from_file(p)).collect(), args.encoding.encoding)
        }
    };
    let mut out = String::from("point_label,e_fci_hartree\n");
    for p in &points {
        let prepared = prepare_point(p, kind)?;
        out.push_str(&format!("{},{}\n", prepared.label, pes::format_float(prepared.fci_energy)));
    }
    emit(args.out.as_deref(), &out)
}

fn energy(args: &EnergyArgs) -> Result<()> {
    let mut cfg = SweepConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let p_idx = match &args.point {
        Some(label) => cfg.points.iter().position(|p| &p.label == label),
        None => Some(0),
    }
    .ok_or_else(|| Error::Config(format!("no point labelled `{}`", args.point.as_deref().unwrap_or(""))))?;
    let m_idx = match &args.method {
        Some(name) => cfg.methods.iter().position(|m| &m.name == name),
        None => (!cfg.methods.is_empty()).then_some(0),
    }
    .ok_or_else(|| Error::Config(format!("no method `{}` in the config", args.method.as_deref().unwrap_or(""))))?;
    let method = &cfg.methods[m_idx];
    let point = prepare_point(&cfg.points[p_idx], cfg.encoding)?;
    let result = run_method(method, &point, cfg.run_seed(m_idx, p_idx), None)?;

    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        for (i, run) in result.runs.iter().enumerate() {
            let name = if result.runs.len() == 1 {
                format!("{}_{}.csv", method.name, point.label)
            } else {
                format!("{}_{}_r{i}.csv", method.name, point.label)
            };
            run.save_trace(&dir.join(name))?;
        }
    }
    if let Some(path) = &args.emit_circuit {
        let ansatz = method.build_ansatz(&point.active_space, &point.scheme)?;
        let best = result
            .runs
            .iter()
            .min_by(|a, b| a.energy.total_cmp(&b.energy))
            .expect("at least one run");
        emit(Some(path), &bind_and_compile(&ansatz, &best.params)?.to_text())?;
    }
    let f = pes::format_float;
    let text = format!(
        "point_label,method,e_hartree,stderr_hartree,e_fci_hartree,error_hartree,n_evaluations,converged\n{},{},{},{},{},{},{},{}\n",
        point.label,
        method.name,
        f(result.energy),
        f(result.stderr),
        f(point.fci_energy),
        f(result.energy - point.fci_energy),
        result.n_evaluations(),
        result.converged(),
    );
    emit(None, &text)
}

fn pes_cmd(args: &PesArgs) -> Result<()> {
    let mut cfg = SweepConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &args.out_dir {
        cfg.out_dir = Some(dir.clone());
    }
    let out_dir = cfg
        .out_dir
        .clone()
        .ok_or_else(|| Error::Config("no output directory: set out_dir or pass --out-dir".into()))?;
    let output = run_sweep(&cfg)?;
    output.write(&cfg, &out_dir)?;
    emit(None, &output.table.rmse_csv()?)
}

fn noise_sim(args: &NoiseSimArgs) -> Result<()> {
    let program = GateProgram::from_text(&read(&args.circuit)?, &args.circuit)?;
    let h: PauliSum = match (&args.hamiltonian, &args.integrals) {
        (Some(path), _) => PauliSum::from_text(&read(path)?, path)?,
        (None, Some(path)) => prepare_point(&point_from_file(path), args.encoding.encoding)?.hamiltonian,
        (None, None) => return Err(Error::Config("need --hamiltonian or --integrals".into())),
    };
    let mut noise = match &args.noise {
        Some(path) => NoiseSpec::load(path)?,
        None => NoiseSpec::noiseless(),
    };
    if let Some(seed) = args.seed {
        noise.seed = seed;
    }
    let clean = expectation_exact(&run_statevector(&program)?, &h)?;
    let rho = run_noisy(&program, &noise)?;
    let (noisy, stderr) = match args.shots {
        Some(shots) => {
            let est = expectation_sampled(&rho, &h, shots, noise.seed)?;
            (est.mean, est.stderr)
        }
        None => (expectation_exact(&rho, &h)?, 0.0),
    };
    let f = pes::format_float;
    emit(
        None,
        &format!(
            "e_noiseless_hartree,e_noisy_hartree,stderr_hartree,noise_shift_hartree\n{},{},{},{}\n",
            f(clean),
            f(noisy),
            f(stderr),
            f(noisy - clean)
        ),
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Map(a) => map(a),
        Command::Fci(a) => fci(a),
        Command::Energy(a) => energy(a),
        Command::Pes(a) => pes_cmd(a),
        Command::NoiseSim(a) => noise_sim(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
