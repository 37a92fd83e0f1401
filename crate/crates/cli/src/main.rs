mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phasespace::PsError;
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "phasespace", version, about = "Phase-space kernels, functions, metrics and dynamics")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Stratonovich-Weyl axiom checks.
    Kernel {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// s-ordered (default s = 0) function on a grid.
    Wigner {
        #[command(subcommand)]
        action: EvalAction,
    },
    /// Husimi Q function (s = -1) on a grid.
    Qfunc {
        #[command(subcommand)]
        action: EvalAction,
    },
    /// Weyl (characteristic) function on a grid.
    Weyl {
        #[command(subcommand)]
        action: EvalAction,
    },
    /// Change the ordering parameter of a sampled function.
    Transform(TransformArgs),
    /// Multi-qubit Wigner function along a slice of the product of spheres.
    Slice(SliceArgs),
    /// Scalar figures of merit.
    Metrics(MetricsArgs),
    /// Direct fidelity estimation by Pauli sampling.
    Dfe(DfeArgs),
    /// Spin state from sampled function values.
    Reconstruct(ReconstructArgs),
    /// Moyal evolution of a Wigner function on a (q, p) grid.
    Evolve(EvolveArgs),
    /// Re-run the command recorded in a manifest and compare output hashes.
    Replay(ReplayArgs),
}

#[derive(Debug, Subcommand, Serialize)]
pub enum KernelAction {
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand, Serialize)]
pub enum EvalAction {
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Hw,
    Su2,
    Wootters,
    Sun,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SystemArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Spin j (su2).
    #[arg(long)]
    pub j: Option<f64>,
    /// N (sun).
    #[arg(long)]
    pub n: Option<usize>,
    /// Fock cutoff n_max (hw).
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Number of qubits (wootters, named states).
    #[arg(long)]
    pub qubits: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Auto,
    MonteCarlo,
    BareParity,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub s: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    /// Samples for the Monte Carlo mode.
    #[arg(long, default_value_t = 400_000)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// State file or built-in name.
    #[arg(long)]
    pub state: String,
    /// THETAxPHI (su2), QxP (hw) or `net` (su2 tomography net).
    #[arg(long)]
    pub grid: Option<String>,
    /// Half width of the (q, p) square (hw).
    #[arg(long, default_value_t = 6.0)]
    pub extent: f64,
    /// Ordering parameter (wigner only).
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
    /// Number of Haar points (sun).
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TransformArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub from_s: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub to_s: f64,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SliceKindArg {
    EqualAngle,
    Equatorial,
    AxisPair,
}

#[derive(Debug, Args, Serialize)]
pub struct SliceArgs {
    #[arg(value_enum)]
    pub kind: SliceKindArg,
    #[arg(long)]
    pub state: String,
    #[arg(long)]
    pub qubits: usize,
    /// Points per swept angle.
    #[arg(long, default_value_t = 360)]
    pub points: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub s: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricArg {
    Purity,
    Fidelity,
    TraceDistance,
    Negativity,
    Wehrl,
    Expect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisArg {
    X,
    Y,
    Z,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricsArgs {
    #[arg(value_enum)]
    pub metric: MetricArg,
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long)]
    pub state: String,
    /// Second state for fidelity and trace distance.
    #[arg(long)]
    pub state2: Option<String>,
    #[arg(long, value_enum)]
    pub axis: Option<AxisArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DfeArgs {
    /// Built-in pure target (bell, ghz, w_state, ...).
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub state: String,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub j: f64,
    /// CSV with columns theta,phi,value.
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub s: f64,
    /// State file output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report JSON output.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianArg {
    Harmonic,
    Linear,
    Quartic,
    File,
}

#[derive(Debug, Args, Serialize)]
pub struct EvolveArgs {
    #[arg(long, value_enum)]
    pub hamiltonian: HamiltonianArg,
    /// JSON {"terms": [[a, b, c], ...]} for c q^a p^b.
    #[arg(long)]
    pub hamiltonian_file: Option<PathBuf>,
    /// State file, built-in name or snapshot.
    #[arg(long)]
    pub state: String,
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// QxP nodes.
    #[arg(long, default_value = "128x128")]
    pub grid: String,
    #[arg(long, default_value_t = 8.0)]
    pub extent: f64,
    #[arg(long, default_value_t = 1.0)]
    pub hbar: f64,
    /// Time step; defaults to 0.9 of the stability limit.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: usize,
    /// Snapshot output.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV copy of the final grid.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Core(PsError),
    Usage(String),
    Io(String),
    Tolerance(String),
}

impl From<PsError> for CliError {
    fn from(e: PsError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                PsError::Domain(_) => "domain",
                PsError::Dimension { .. } => "dimension",
                PsError::NotHermitian(_) => "not_hermitian",
                PsError::NotDensity(_) => "not_density",
                PsError::GridDegree { .. } => "grid_degree",
                PsError::Family(_) => "family",
                PsError::Pairing(_) => "pairing",
                PsError::Normalization(_) => "normalization",
                PsError::Aliasing(_) => "aliasing",
                PsError::StepBound { .. } => "step_bound",
                PsError::GridCoverage(_) => "grid_coverage",
                PsError::RankDeficient(_) => "rank_deficient",
                PsError::SeedRequired => "seed_required",
                PsError::Parse(_) => "parse",
                PsError::Io(_) => "io",
            },
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Tolerance(_) => "tolerance",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) | CliError::Io(m) | CliError::Tolerance(m) => m.clone(),
        }
    }

    /// 1 for a computed result outside tolerance, 2 for invalid input or I/O.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Tolerance(_) => 1,
            _ => 2,
        }
    }
}

fn report_error(e: &CliError) -> ExitCode {
    let body = serde_json::json!({ "error": { "kind": e.kind(), "message": e.message() } });
    eprintln!("{body}");
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return report_error(&CliError::Usage(e.to_string().trim().to_string()));
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            return report_error(&CliError::Usage(e.to_string()));
        }
    }
    let start = Instant::now();
    let mut run = commands::Run::new(argv[1..].to_vec(), true);
    let result = commands::dispatch(&cli, &mut run);
    let manifest = run.finish(&cli, start.elapsed().as_secs_f64());
    match (result, manifest) {
        (Err(e), _) | (Ok(()), Err(e)) => report_error(&e),
        (Ok(()), Ok(())) => ExitCode::SUCCESS,
    }
}
