use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use macroent::mcsim::{self, Bipartition, RunConfig};
use macroent::optimizer::{self, OptResultFile, SearchMode};
use macroent::quantum::{ime_state, rme_state, PairScenario};
use macroent::robustness::{self, noise_domain, uniform_grid};
use macroent::witness::{self, AdversaryOptions, NoiseKind, NoiseSpec, WitnessForm};
use macroent::Error;

#[derive(Parser)]
#[command(name = "macroent", version, about = "Macroscopic entanglement witnesses from collective measurements")]
struct Cli {
    /// Worker threads, defaults to the available cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a witness.
    Witness(WitnessArgs),
    /// Tabulate a witness over a parameter grid as CSV.
    Sweep(SweepArgs),
    /// Locate the noise level at which the violation disappears.
    Threshold(ThresholdArgs),
    /// Search for maximal violations.
    Optimize(OptimizeArgs),
    /// Monte Carlo estimate of the witness from sampled outcomes.
    Simulate(SimulateArgs),
    /// Check a scenario file.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Iid,
    Avg,
    Q,
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    Depolarize,
    Loss,
    Povm,
}

impl From<Noise> for NoiseKind {
    fn from(n: Noise) -> Self {
        match n {
            Noise::Depolarize => NoiseKind::Depolarize,
            Noise::Loss => NoiseKind::Loss,
            Noise::Povm => NoiseKind::Povm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    Q,
    Lambda,
    P,
    Epsilon,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Rme,
    Ime,
}

#[derive(Args)]
struct ScenarioArg {
    /// `rme`, `ime`, or a scenario or optimizer JSON file.
    #[arg(long, default_value = "rme")]
    scenario: String,
}

#[derive(Args)]
struct FormArgs {
    #[arg(long, value_enum, default_value = "iid")]
    mode: Mode,
    /// Bipartition fraction for `--mode q`.
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Args)]
struct AdversaryArgs {
    /// Starts of the worst-case measurement search.
    #[arg(long = "adversary-starts", default_value_t = 32)]
    starts: usize,
    #[arg(long, env = "MACROENT_SEED", default_value_t = 0)]
    seed: u64,
}

impl AdversaryArgs {
    fn options(&self) -> AdversaryOptions {
        AdversaryOptions { starts: self.starts, seed: self.seed, ..AdversaryOptions::default() }
    }
}

#[derive(Args)]
struct WitnessArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    #[command(flatten)]
    form: FormArgs,
    #[arg(long, value_enum, requires = "level")]
    noise: Option<Noise>,
    #[arg(long, requires = "noise")]
    level: Option<f64>,
    /// Exit with status 1 when the witness is not violated.
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    adversary: AdversaryArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    #[command(flatten)]
    form: FormArgs,
    #[arg(long, value_enum)]
    param: Param,
    #[arg(long, default_value_t = 101)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    adversary: AdversaryArgs,
}

#[derive(Args)]
struct ThresholdArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    #[command(flatten)]
    form: FormArgs,
    #[arg(long, value_enum)]
    noise: Noise,
    /// Width of the final bracket.
    #[arg(long)]
    tol: Option<f64>,
    /// Exit with status 1 when the noiseless witness is not violated.
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    adversary: AdversaryArgs,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long, value_enum)]
    target: Target,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 64)]
    starts: usize,
    #[arg(long, env = "MACROENT_SEED", default_value_t = 0)]
    seed: u64,
    /// Observable family searched for the `rme` target.
    #[arg(long, value_enum, default_value = "spin-plane")]
    search: Search,
}

#[derive(Clone, Copy, ValueEnum)]
enum Search {
    SpinPlane,
    General,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    #[arg(long)]
    pairs: usize,
    #[arg(long)]
    shots: usize,
    #[arg(long, env = "MACROENT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    loss: f64,
    #[arg(long, default_value_t = 0.0)]
    depolarize: f64,
    /// `split`, `fixed:Q` or `random`.
    #[arg(long, default_value = "split", value_parser = parse_bipartition)]
    bipartition: Bipartition,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
}

fn parse_bipartition(s: &str) -> Result<Bipartition, String> {
    match s {
        "split" => Ok(Bipartition::FixedSplit),
        "random" => Ok(Bipartition::Random),
        _ => {
            let q = s.strip_prefix("fixed:").ok_or_else(|| format!("expected split, fixed:Q or random, got {s:?}"))?;
            q.parse::<f64>().map(Bipartition::Fixed).map_err(|e| format!("bad fraction {q:?}: {e}"))
        }
    }
}

enum Failure {
    Usage(String),
    Domain(String),
    NoViolation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn load_scenario(name: &str) -> Result<PairScenario, Error> {
    match name {
        "rme" => Ok(rme_state()),
        "ime" => Ok(ime_state()),
        path => {
            let text = std::fs::read_to_string(Path::new(path))
                .map_err(|e| Error::Scenario(format!("{path}: {e}")))?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Scenario(e.to_string()))?;
            if value.get("best_f").is_some() {
                let file: OptResultFile = serde_json::from_value(value).map_err(|e| Error::Scenario(e.to_string()))?;
                file.scenario.to_scenario()
            } else {
                PairScenario::from_json_str(&text)
            }
        }
    }
}

fn form(args: &FormArgs) -> Result<WitnessForm, Failure> {
    match (args.mode, args.q) {
        (Mode::Iid, None) => Ok(WitnessForm::Iid),
        (Mode::Avg, None) => Ok(WitnessForm::Averaged),
        (Mode::Q, Some(q)) => Ok(WitnessForm::Bipartition(q)),
        (Mode::Q, None) => Err(Failure::Usage("--mode q requires --q".into())),
        (_, Some(_)) => Err(Failure::Usage("--q is only valid with --mode q".into())),
    }
}

fn print_json(value: &impl serde::Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Domain(e.to_string()))?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Domain(e.to_string())),
        _ => Ok(()),
    }
}

fn run_witness(a: &WitnessArgs) -> Outcome {
    let s = load_scenario(&a.scenario.scenario)?;
    let form = form(&a.form)?;
    let noise = match (a.noise, a.level) {
        (Some(kind), Some(level)) => NoiseSpec::new(kind.into(), level)?,
        _ => NoiseSpec::none(),
    };
    let report = witness::evaluate(&s, form, &noise, &a.adversary.options())?;
    print_json(&report)?;
    if a.check && report.f >= 0.0 {
        return Err(Failure::NoViolation);
    }
    Ok(())
}

fn run_sweep(a: &SweepArgs) -> Outcome {
    let s = load_scenario(&a.scenario.scenario)?;
    let table = match a.param {
        Param::Q => robustness::sweep_q(&s, a.steps)?,
        p => {
            let kind = match p {
                Param::Lambda => NoiseKind::Depolarize,
                Param::P => NoiseKind::Loss,
                _ => NoiseKind::Povm,
            };
            if a.steps < 2 {
                return Err(Failure::Domain(format!("sweep needs at least 2 steps, got {}", a.steps)));
            }
            let [lo, hi] = noise_domain(kind)?;
            let grid = uniform_grid(lo, hi, a.steps);
            robustness::sweep_noise(&s, form(&a.form)?, kind, &grid, &a.adversary.options())?
        }
    };
    let file = std::fs::File::create(&a.out).map_err(|e| Failure::Domain(format!("{}: {e}", a.out.display())))?;
    table.write_csv(std::io::BufWriter::new(file))?;
    print_json(&json!({
        "parameter": table.parameter,
        "rows": table.grid.len(),
        "out": a.out.display().to_string(),
        "negative_fraction": table.negative_fraction(),
        "negative_intervals": table.negative_intervals(),
        "trapezoid": table.trapezoid(),
    }))
}

fn run_threshold(a: &ThresholdArgs) -> Outcome {
    let s = load_scenario(&a.scenario.scenario)?;
    let form = form(&a.form)?;
    match robustness::witness_threshold(&s, form, a.noise.into(), a.tol, &a.adversary.options()) {
        Ok(r) => print_json(&r),
        Err(e @ Error::NoSignChange { .. }) if a.check => {
            eprintln!("{e}");
            Err(Failure::NoViolation)
        }
        Err(e) => Err(e.into()),
    }
}

fn run_optimize(a: &OptimizeArgs) -> Outcome {
    let result = match a.target {
        Target::Rme => {
            let mode = match a.search {
                Search::SpinPlane => SearchMode::SpinPlane,
                Search::General => SearchMode::General,
            };
            optimizer::optimize_rme(a.dim.unwrap_or(2), a.starts, a.seed, mode)?
        }
        Target::Ime => optimizer::optimize_ime(a.dim.unwrap_or(3), a.starts, a.seed)?,
    };
    print_json(&result.to_file()?)
}

fn run_simulate(a: &SimulateArgs) -> Outcome {
    let s = load_scenario(&a.scenario.scenario)?;
    let cfg = RunConfig {
        pairs: a.pairs,
        shots: a.shots,
        loss_p: a.loss,
        depolarize_lambda: a.depolarize,
        bipartition: a.bipartition,
        seed: a.seed,
    };
    print_json(&mcsim::estimate(&s, &cfg)?)
}

fn run_validate(a: &ValidateArgs) -> Outcome {
    let s = load_scenario(&a.scenario.scenario)?;
    let bounds = [&s.a1, &s.a2, &s.b1, &s.b2].map(|o| macroent::linalg::operator_norm(o.matrix()));
    print_json(&json!({
        "valid": true,
        "dim": s.dim(),
        "pure": s.pure_state().is_ok(),
        "swap_symmetric": s.is_swap_symmetric(),
        "swap_asymmetry": s.swap_asymmetry(),
        "observable_norms": bounds,
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let outcome = match &cli.command {
        Command::Witness(a) => run_witness(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Threshold(a) => run_threshold(a),
        Command::Optimize(a) => run_optimize(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Validate(a) => run_validate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NoViolation) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
