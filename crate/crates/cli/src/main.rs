mod input;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gft_core::ball::{ball_experiment, covering_experiment};
use gft_core::claims::{claim_registry, run_claim};
use gft_core::distortion::{
    extremal_scaffold, inversion_polynomials, transform_functional, Alphabet, FunctionalSpec,
    KernelChoice,
};
use gft_core::grunsky::{coefficient_bound_check, grunsky_matrix, grunsky_of_inverse, GrunskySummary};
use gft_core::report::Envelope;
use gft_core::schwarzian::{
    ahlfors_weill_admissible, becker_norm, bnorm, schwarzian, BeckerGrid, LaurentTail,
};
use gft_core::series::io::to_text;
use gft_core::univalence::{
    biunivalence_certificates, covering_estimate, univalence_check, Overall,
};
use gft_core::{ClaimReport, GftError, Result, RunConfig, Verdict};

use input::Length;

/// Exit code for command-line usage errors.
const EXIT_USAGE: u8 = 64;
/// Exit code under `--strict` when any verdict is a fail.
const EXIT_STRICT: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "gftlab", version, about = "Numerical laboratory for univalent and biunivalent maps")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// File of `key = value` lines applied before any --set.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory reports are written to.
    #[arg(long, global = true, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    /// Exit with status 2 if any verdict is a fail.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Grunsky coefficients, form norm and coefficient bound.
    Grunsky {
        #[arg(long)]
        input: String,
        /// Truncation N of the Grunsky matrix.
        #[arg(long)]
        order: Option<usize>,
        /// Use the inverse series.
        #[arg(long)]
        inverse: bool,
        /// Also write the matrix as CSV.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Schwarzian derivative, its norm, and the exterior norm of 1/f(1/z).
    Schwarzian {
        #[arg(long)]
        input: String,
        #[arg(long)]
        order: Option<usize>,
        /// Check (1-|z|^2)^2 |S_f| <= 2k.
        #[arg(long)]
        k: Option<f64>,
    },
    /// Inverse series by Lagrange inversion.
    Invert {
        #[arg(long)]
        input: String,
        #[arg(long)]
        order: Option<usize>,
        /// Series file to write; stdout if absent.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Univalence, covering and biunivalence certificate.
    Verify {
        #[arg(long)]
        input: String,
    },
    /// Seeded experiment over Schwarzians of norm at most 2k.
    Ball {
        #[arg(long)]
        k: f64,
        #[arg(long)]
        trials: Option<usize>,
        /// Also run the covering comparison.
        #[arg(long)]
        covering: bool,
    },
    /// Coefficient functional: transfer, lower-bound search, extremal data.
    Distortion {
        /// Monomial-list file (`re im : n^p ...` per line).
        #[arg(long, value_name = "FILE", conflicts_with = "coefficient")]
        functional: Option<PathBuf>,
        /// Use the single coefficient x_N.
        #[arg(long, value_name = "N")]
        coefficient: Option<usize>,
        #[arg(long, value_enum, default_value_t = AlphabetArg::A)]
        alphabet: AlphabetArg,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        budget: Option<usize>,
        /// Kernel z^(n + shift) for the extremal differential.
        #[arg(long, default_value_t = 1)]
        kernel_shift: usize,
    },
    /// Registered claim checks.
    Claims {
        #[command(subcommand)]
        action: ClaimsAction,
    },
}

#[derive(Subcommand, Debug)]
enum ClaimsAction {
    /// List claim ids and statements.
    List,
    /// Run claims and write one report per claim.
    Run {
        #[arg(long, conflicts_with = "id", required_unless_present = "id")]
        all: bool,
        #[arg(long)]
        id: Vec<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AlphabetArg {
    A,
    B,
}

impl From<AlphabetArg> for Alphabet {
    fn from(a: AlphabetArg) -> Self {
        match a {
            AlphabetArg::A => Alphabet::A,
            AlphabetArg::B => Alphabet::B,
        }
    }
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &g.config {
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
    }
    for kv in &g.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| GftError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &g.output_dir {
        cfg.output_dir = dir.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Collects what a command produced and how it should affect the exit code.
struct Outcome {
    verdicts: Vec<Verdict>,
}

fn write_report<T: Serialize>(cfg: &RunConfig, name: &str, kind: &str, body: &T) -> Result<PathBuf> {
    let env = Envelope::wrap(kind, cfg, body)?;
    let path = Path::new(&cfg.output_dir).join(format!("{name}.json"));
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&path, env.to_json()?)?;
    Ok(path)
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(body: &T) -> Result<()> {
    emit(&(serde_json::to_string_pretty(body)? + "\n"))
}

#[derive(Serialize)]
struct GrunskyOutput {
    input: String,
    inverse: bool,
    summary: GrunskySummary,
    coefficient_bound: ClaimReport,
}

#[derive(Serialize)]
struct SchwarzianOutput {
    input: String,
    order: usize,
    coefficients: Vec<[f64; 2]>,
    bnorm: f64,
    becker_norm_of_inversion: Option<f64>,
    ahlfors_weill: Option<ClaimReport>,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct VerifyOutput {
    input: String,
    certificate: gft_core::univalence::BiunivalenceCertificate,
    univalence: gft_core::univalence::UnivalenceCheck,
    covering: gft_core::univalence::CoveringEstimate,
}

#[derive(Serialize)]
struct DistortionOutput {
    functional: FunctionalSpec,
    transformed: FunctionalSpec,
    scaffold: gft_core::distortion::ExtremalScaffold,
}

fn run(cli: Cli) -> Result<Outcome> {
    let cfg = load_config(&cli.global)?;
    let mut verdicts = Vec::new();
    match cli.command {
        Command::Grunsky { input, order, inverse, csv } => {
            let n = order.unwrap_or(cfg.grunsky_order);
            let f = input::load(&input, Length::Exact(2 * n + 1))?;
            let g = if inverse { grunsky_of_inverse(&f, n)? } else { grunsky_matrix(&f, n)? };
            if let Some(path) = csv {
                std::fs::write(path, g.to_csv())?;
            }
            let out = GrunskyOutput {
                input,
                inverse,
                summary: GrunskySummary::of(&g)?,
                coefficient_bound: coefficient_bound_check(&g),
            };
            verdicts.push(out.coefficient_bound.verdict);
            write_report(&cfg, "grunsky", "grunsky", &out)?;
            print_json(&out)?;
        }
        Command::Schwarzian { input, order, k } => {
            let order = order.unwrap_or(cfg.order);
            let f = input::load(&input, Length::Exact(order))?;
            let s = schwarzian(&f)?;
            let mut notes = Vec::new();
            let becker = match LaurentTail::inverted(&f).and_then(|t| becker_norm(&t, &BeckerGrid::canonical())) {
                Ok(v) => Some(v),
                Err(e) => {
                    notes.push(format!("becker norm: {e}"));
                    None
                }
            };
            let aw = k.map(|k| ahlfors_weill_admissible(&f, k, &cfg.grid)).transpose()?;
            if let Some(r) = &aw {
                verdicts.push(r.verdict);
            }
            let out = SchwarzianOutput {
                input,
                order: s.phi().order(),
                coefficients: s.phi().coeffs().iter().map(|c| [c.re, c.im]).collect(),
                bnorm: bnorm(&s, &cfg.grid)?,
                becker_norm_of_inversion: becker,
                ahlfors_weill: aw,
                notes,
            };
            write_report(&cfg, "schwarzian", "schwarzian", &out)?;
            print_json(&out)?;
        }
        Command::Invert { input, order, output } => {
            let f = input::load(&input, Length::Exact(order.unwrap_or(cfg.order)))?;
            let text = to_text(&f.lagrange_invert()?);
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => emit(&text)?,
            }
        }
        Command::Verify { input } => {
            let f = input::load(&input, Length::Boundary { min: 2 * cfg.grunsky_order + 1, cap: cfg.eval_order })?;
            let out = VerifyOutput {
                certificate: biunivalence_certificates(&f, &cfg)?,
                univalence: univalence_check(&f, &cfg.ladder, cfg.curve_points)?,
                covering: covering_estimate(&f, &cfg.ladder, cfg.curve_points)?,
                input,
            };
            verdicts.push(Verdict::from_bool(out.certificate.overall != Overall::Refuted));
            write_report(&cfg, "verify", "certificate", &out)?;
            print_json(&out)?;
        }
        Command::Ball { k, trials, covering } => {
            let mut cfg = cfg;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            let report = ball_experiment(k, &cfg)?;
            write_report(&cfg, "ball", "experiment", &report)?;
            print_json(&report.aggregates)?;
            if covering {
                let r = covering_experiment(k, &cfg)?;
                verdicts.push(r.verdict);
                write_report(&cfg, "covering", "claim", &r)?;
                print_json(&r)?;
            }
        }
        Command::Distortion { functional, coefficient, alphabet, k, budget, kernel_shift } => {
            let alphabet = Alphabet::from(alphabet);
            let j = match (functional, coefficient) {
                (Some(path), _) => FunctionalSpec::parse(&std::fs::read_to_string(path)?, alphabet)?,
                (None, Some(n)) => FunctionalSpec::coefficient(alphabet, n)?,
                (None, None) => return Err(GftError::Usage("distortion needs --functional or --coefficient".into())),
            };
            let table = inversion_polynomials(j.max_index().max(2))?;
            let out = DistortionOutput {
                transformed: transform_functional(&j, &table)?,
                scaffold: extremal_scaffold(
                    &j,
                    k,
                    budget.unwrap_or(cfg.search_budget),
                    cfg.seed,
                    KernelChoice::MonomialShift(kernel_shift),
                    &cfg,
                )?,
                functional: j,
            };
            write_report(&cfg, "distortion", "distortion", &out)?;
            print_json(&out)?;
        }
        Command::Claims { action: ClaimsAction::List } => {
            for d in claim_registry() {
                emit(&format!("{:<30} {}\n", d.id, d.anchor))?;
            }
        }
        Command::Claims { action: ClaimsAction::Run { all, id } } => {
            let ids: Vec<String> = if all {
                claim_registry().iter().map(|d| d.id.to_owned()).collect()
            } else {
                id
            };
            let mut summary = BTreeMap::new();
            for id in &ids {
                let r = run_claim(id, &cfg)?;
                write_report(&cfg, &format!("claims/{id}"), "claim", &r)?;
                emit(&format!("{:<30} {:?}\n", r.claim_id, r.verdict))?;
                summary.insert(r.claim_id.clone(), r.verdict);
                verdicts.push(r.verdict);
            }
            write_report(&cfg, "claims/index", "claim-index", &summary)?;
        }
    }
    Ok(Outcome { verdicts })
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("GFT_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("gftlab: GFT_THREADS: {e}");
                }
            }
            _ => {
                eprintln!("gftlab: GFT_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(EXIT_USAGE);
            }
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let strict = cli.global.strict;
    match run(cli) {
        Ok(out) => {
            if strict && out.verdicts.contains(&Verdict::Fail) {
                ExitCode::from(EXIT_STRICT)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("gftlab: {e}");
            match e {
                GftError::Usage(_) | GftError::Parse(_) => ExitCode::from(EXIT_USAGE),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
