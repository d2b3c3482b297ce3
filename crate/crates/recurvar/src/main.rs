//! Command-line front end: estimation on data files, exact p-variation of a
//! supplied step function, scenario simulation, and the Monte Carlo studies.
//!
//! Output conventions. Data interchange files (subjects/events, the latent
//! truth) are written with full round-trip precision, so a simulated sample
//! read back from disk reproduces the in-memory estimates bit for bit.
//! Result files and stdout summaries use 9 significant digits. Failures
//! print a single `ERROR <code>: <message>` line to stderr: 2 for bad
//! arguments or option/config semantics, 3 for file and format problems,
//! 4 for estimator risk-set failures, 5 for study preconditions.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use recurvar::estimators::{estimate, CovariateMix, EstimateError, TruthSpec};
use recurvar::process::{read_sample, write_sample, DataError, Design};
use recurvar::pseudo::{pseudo_values, PseudoError};
use recurvar::sim::{
    as_bound_study, convergence_study, coverage_and_variance_study, generate, kind_for,
    Scenario, SimError, StudyConfigFile,
};
use recurvar::stepfn::{pvar, pvar_bruteforce, StepFunction};

#[derive(Parser)]
#[command(
    name = "recurvar",
    version,
    about = "Recurrent-event mean functions, IPCW variance, and p-variation rate studies"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Estimate the mean function from subjects/events files.
    Estimate(EstimateArgs),
    /// Exact p-variation of a step function given as a time,value CSV.
    Pvar(PvarArgs),
    /// Draw a synthetic sample and write it together with its latent truth.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo study and write its report.
    Study(StudyArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// Analysis design: uncensored, observed, or censored.
    #[arg(long, value_parser = parse_design)]
    design: Design,
    /// Subjects CSV (id,followup,reason,z).
    #[arg(long)]
    subjects: PathBuf,
    /// Events CSV (id,time).
    #[arg(long)]
    events: PathBuf,
    /// Right end of the estimation interval.
    #[arg(long)]
    horizon: f64,
    /// Evaluation grid; defaults to the estimate's jump times plus the horizon.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Curve CSV to write (s,mu_hat,k_hat,var_hat,se_hat).
    #[arg(long)]
    out: PathBuf,
    /// Also compute jackknife pseudo-values at this time.
    #[arg(long, requires = "pseudo_out")]
    pseudo: Option<f64>,
    /// Pseudo-value CSV to write (id,z,pseudo).
    #[arg(long, requires = "pseudo")]
    pseudo_out: Option<PathBuf>,
    /// Also write the influence matrix (id,s,influence).
    #[arg(long)]
    dump_influence: Option<PathBuf>,
}

#[derive(Args)]
struct PvarArgs {
    /// Step-function CSV: header time,value, first row 0,<initial>.
    #[arg(long)]
    input: PathBuf,
    /// Variation exponent, p >= 1.
    #[arg(long)]
    p: f64,
    /// Cross-check against the exhaustive-partition oracle.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(value_enum)]
    kind: StudyKind,
    /// Study configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Caps study parallelism (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StudyKind {
    /// L¹ rate of ‖F_n − F‖_[p] over a grid of sample sizes.
    Convergence,
    /// Single-event-time v_p(F_n − F) rate.
    Prop1,
    /// Trajectory of n^{(p−1)/p}‖F_n − F‖_[p] for a capped process.
    Asbound,
    /// Wald coverage, plug-in versus empirical variance, design comparison.
    Coverage,
}

fn parse_design(s: &str) -> Result<Design, String> {
    match s {
        "uncensored" => Ok(Design::Uncensored),
        "observed" => Ok(Design::Observed),
        "censored" => Ok(Design::Censored),
        other => Err(format!("must be uncensored, observed, or censored (got {other})")),
    }
}

fn design_name(design: Design) -> &'static str {
    match design {
        Design::Uncensored => "uncensored",
        Design::Observed => "observed",
        Design::Censored => "censored",
    }
}

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

fn estimate_code(e: &EstimateError) -> u8 {
    match e {
        EstimateError::Data(_) => 3,
        EstimateError::WrongDesign { .. }
        | EstimateError::BadHorizon(_)
        | EstimateError::BadGrid(_)
        | EstimateError::InvalidTruth(_) => 2,
        EstimateError::RiskSetExhausted { .. } => 4,
        EstimateError::UnsupportedTruth(_) => 5,
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        Self::new(3, e.to_string())
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        Self::new(estimate_code(&e), e.to_string())
    }
}

impl From<PseudoError> for CliError {
    fn from(e: PseudoError) -> Self {
        let code = match &e {
            PseudoError::Estimate(inner)
            | PseudoError::LeaveOneOut { source: inner, .. } => estimate_code(inner),
            PseudoError::MissingCovariate { .. } | PseudoError::NonBinaryCovariate { .. } => 3,
        };
        Self::new(code, e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let code = match &e {
            SimError::Estimate(inner) => estimate_code(inner),
            SimError::StepFn(_)
            | SimError::BadExponent(_)
            | SimError::TooFewSizes(_)
            | SimError::Config(_) => 5,
        };
        Self::new(code, e.to_string())
    }
}

fn file_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::new(3, format!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

/// 9 significant digits: plain decimal for moderate magnitudes, scientific
/// otherwise, and a bare `0` for zero. Deterministic, so identical runs
/// produce byte-identical files.
fn g9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude: i32 = {
        let sci = format!("{:e}", x.abs());
        let at = sci.find('e').expect("exponent marker");
        sci[at + 1..].parse().expect("decimal exponent")
    };
    if (-4..9).contains(&magnitude) {
        format!("{:.*}", (8 - magnitude) as usize, x)
    } else {
        format!("{:.8e}", x)
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| file_err(path, e))
}

// ---------------------------------------------------------------------------
// Configuration resolution
// ---------------------------------------------------------------------------

fn load_config(path: &Path) -> Result<StudyConfigFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    StudyConfigFile::parse(&text)
        .map_err(|e| CliError::new(3, format!("{}: {e}", path.display())))
}

/// Builds the truth from config keys, with verb-specific defaults for the
/// censoring and terminal rates.
fn truth_from(cfg: &StudyConfigFile, default_censor: f64, default_terminal: f64) -> TruthSpec {
    let covariate_mix = match (cfg.z_prob, cfg.z_multiplier) {
        (None, None) => None,
        (prob, mult) => Some(CovariateMix {
            prob_z1: prob.unwrap_or(0.5),
            rate_multiplier: mult.unwrap_or(2.0),
        }),
    };
    TruthSpec {
        event_rate: cfg.lambda.unwrap_or(1.0),
        censor_rate: cfg.censor_rate.unwrap_or(default_censor),
        terminal_rate: cfg.terminal_rate.unwrap_or(default_terminal),
        horizon: cfg.tau.unwrap_or(5.0),
        covariate_mix,
    }
}

fn config_design(cfg: &StudyConfigFile, fallback: Design) -> Result<Design, CliError> {
    Ok(cfg
        .design()
        .map_err(|e| CliError::new(2, e.to_string()))?
        .unwrap_or(fallback))
}

// ---------------------------------------------------------------------------
// Verbs
// ---------------------------------------------------------------------------

fn run_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let sample = read_sample(&args.subjects, &args.events, args.design)?;
    let kind = kind_for(args.design);
    let curve = estimate(&sample, kind, args.horizon, args.grid.as_deref())?;

    let mut text = String::from("s,mu_hat,k_hat,var_hat,se_hat\n");
    for (k, &s) in curve.grid().iter().enumerate() {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            g9(s),
            g9(curve.mu_at(s)),
            g9(curve.k_at(s)),
            g9(curve.variance()[k]),
            g9(curve.se(k))
        );
    }
    write_text(&args.out, &text)?;

    if let Some(path) = &args.dump_influence {
        let mut text = String::from("id,s,influence\n");
        for (row, subject) in curve.influence().iter().zip(sample.subjects()) {
            for (&value, &s) in row.iter().zip(curve.grid()) {
                let _ = writeln!(text, "{},{},{}", subject.id(), g9(s), g9(value));
            }
        }
        write_text(path, &text)?;
    }

    let last = curve.grid().len() - 1;
    let s_last = curve.grid()[last];
    println!("design: {}", design_name(args.design));
    println!("n = {}, horizon = {}", sample.n(), g9(args.horizon));
    println!(
        "mu_hat({}) = {}, se = {}",
        g9(s_last),
        g9(curve.mu_at(s_last)),
        g9(curve.se(last))
    );
    println!("wrote {} ({} rows)", args.out.display(), curve.grid().len());

    if let Some(t) = args.pseudo {
        let set = pseudo_values(&sample, t, kind)?;
        let out = args.pseudo_out.as_ref().expect("clap enforces the pair");
        let mut text = String::from("id,z,pseudo\n");
        for (subject, &value) in sample.subjects().iter().zip(set.values()) {
            let z = subject.z().map(g9).unwrap_or_default();
            let _ = writeln!(text, "{},{},{}", subject.id(), z, g9(value));
        }
        write_text(out, &text)?;
        println!(
            "pseudo values at t = {}: full estimate = {}, mean gap = {}",
            g9(t),
            g9(set.full_estimate()),
            g9(set.mean_gap())
        );
        println!("wrote {} ({} rows)", out.display(), set.values().len());
    }
    Ok(())
}

fn read_step_csv(path: &Path) -> Result<StepFunction, CliError> {
    let bad = |msg: String| CliError::new(3, format!("{}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::new(3, e.to_string()))?;
    let headers = rdr.headers().map_err(|e| CliError::new(3, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["time", "value"] {
        return Err(bad("header must be `time,value`".into()));
    }
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::new(3, e.to_string()))?;
        if rec.len() != 2 {
            return Err(bad(format!("expected 2 fields, got {}", rec.len())));
        }
        let t: f64 = rec[0].parse().map_err(|_| bad(format!("bad time `{}`", &rec[0])))?;
        let v: f64 = rec[1].parse().map_err(|_| bad(format!("bad value `{}`", &rec[1])))?;
        rows.push((t, v));
    }
    let Some(&(t0, initial)) = rows.first() else {
        return Err(bad("no data rows".into()));
    };
    if t0 != 0.0 {
        return Err(bad(format!("first row must be at time 0 (got {t0})")));
    }
    for w in rows.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(bad(format!(
                "times must be strictly increasing (saw {} after {})",
                w[1].0, w[0].0
            )));
        }
    }
    let jumps: Vec<(f64, f64)> = rows.windows(2).map(|w| (w[1].0, w[1].1 - w[0].1)).collect();
    StepFunction::new(initial, jumps).map_err(|e| CliError::new(3, e.to_string()))
}

fn run_pvar(args: &PvarArgs) -> Result<(), CliError> {
    let f = read_step_csv(&args.input)?;
    let result = pvar(&f, args.p).map_err(|e| CliError::new(2, e.to_string()))?;
    println!("p = {}", g9(result.p));
    println!("v_p = {}", g9(result.v_p));
    println!("seminorm = {}", g9(result.seminorm));
    println!("sup = {}", g9(result.sup_norm));
    println!("norm = {}", g9(result.norm));
    let partition: Vec<String> = result.partition.iter().map(|&t| g9(t)).collect();
    println!("partition: {}", partition.join(" "));
    if args.oracle {
        let brute = pvar_bruteforce(&f, args.p).map_err(|e| CliError::new(2, e.to_string()))?;
        println!("oracle v_p = {}", g9(brute.v_p));
        let scale = result.v_p.abs().max(brute.v_p.abs()).max(1.0);
        if (result.v_p - brute.v_p).abs() > 1e-12 * scale {
            return Err(CliError::new(
                1,
                format!("p-variation mismatch: {} vs oracle {}", g9(result.v_p), g9(brute.v_p)),
            ));
        }
        println!("oracle agreement: within 1e-12 relative");
    }
    Ok(())
}

fn run_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let scenario = Scenario {
        truth: truth_from(&cfg, 0.5, 0.0),
        n: cfg.n.unwrap_or(100),
        seed: args.seed.or(cfg.seed).unwrap_or(0),
        design: config_design(&cfg, Design::Observed)?,
    };
    let (sample, latents) = generate(&scenario)?;

    fs::create_dir_all(&args.out).map_err(|e| file_err(&args.out, e))?;
    write_sample(&sample, &args.out.join("subjects.csv"), &args.out.join("events.csv"))?;

    // latent truth with round-trip precision: the covariate, terminal and
    // censoring times (blank when absent/infinite), and the uncensored
    // stopped paths in a companion events file
    let mut latent = String::from("id,z,terminal,censor\n");
    let mut latent_events = String::from("id,time\n");
    for (i, l) in latents.iter().enumerate() {
        let id = i as u64 + 1;
        let z = l.z.map(|b| if b { "1" } else { "0" }).unwrap_or("");
        let terminal = l.terminal.map(|t| t.to_string()).unwrap_or_default();
        let censor = if l.censor.is_finite() { l.censor.to_string() } else { String::new() };
        let _ = writeln!(latent, "{id},{z},{terminal},{censor}");
        for &e in l.path.times() {
            let _ = writeln!(latent_events, "{id},{e}");
        }
    }
    write_text(&args.out.join("latent.csv"), &latent)?;
    write_text(&args.out.join("latent_events.csv"), &latent_events)?;

    let events: usize = sample.subjects().iter().map(|s| s.path().times().len()).sum();
    println!("design: {}", design_name(scenario.design));
    println!("n = {}, seed = {}", scenario.n, scenario.seed);
    println!("observed events: {events}");
    println!(
        "wrote subjects.csv, events.csv, latent.csv, latent_events.csv in {}",
        args.out.display()
    );
    Ok(())
}

fn run_study(args: &StudyArgs) -> Result<(), CliError> {
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::new(2, format!("could not configure thread pool: {e}")))?;
    }
    let cfg = load_config(&args.config)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    fs::create_dir_all(&args.out).map_err(|e| file_err(&args.out, e))?;

    match args.kind {
        StudyKind::Convergence | StudyKind::Prop1 => {
            let truth = truth_from(&cfg, 0.0, 0.0);
            let design = config_design(&cfg, Design::Uncensored)?;
            let p = cfg.p.unwrap_or(1.5);
            let n_list = cfg
                .n_list
                .clone()
                .unwrap_or_else(|| vec![25, 50, 100, 200, 400, 800, 1600, 3200]);
            let b = cfg.b.unwrap_or(500);
            let report = convergence_study(&truth, design, p, &n_list, b, seed)?;
            if args.kind == StudyKind::Convergence {
                let mut text = String::from("n,mean_norm\n");
                for (&n, &m) in report.n_list.iter().zip(&report.mean_norms) {
                    let _ = writeln!(text, "{n},{}", g9(m));
                }
                let path = args.out.join("convergence.csv");
                write_text(&path, &text)?;
                println!(
                    "p-variation norm rate: p = {}, B = {}, n from {} to {}",
                    g9(report.p),
                    report.replications,
                    report.n_list[0],
                    report.n_list[report.n_list.len() - 1]
                );
                println!(
                    "fitted slope = {}, theoretical (1 - p)/p = {}",
                    g9(report.fitted_slope),
                    g9(report.theoretical_slope)
                );
                println!("wrote {}", path.display());
            } else {
                let mut text = String::from("n,mean_vp\n");
                for (&n, &m) in report.n_list.iter().zip(&report.prop1_mean_vp) {
                    let _ = writeln!(text, "{n},{}", g9(m));
                }
                let path = args.out.join("prop1.csv");
                write_text(&path, &text)?;
                println!(
                    "single-event-time v_p rate: p = {}, B = {}, n from {} to {}",
                    g9(report.p),
                    report.replications,
                    report.n_list[0],
                    report.n_list[report.n_list.len() - 1]
                );
                println!(
                    "fitted slope = {}, theoretical 1 - p = {}",
                    g9(report.prop1_fitted_slope),
                    g9(report.prop1_theoretical_slope)
                );
                println!("wrote {}", path.display());
            }
        }
        StudyKind::Asbound => {
            let truth = truth_from(&cfg, 0.0, 0.0);
            let p = cfg.p.unwrap_or(1.5);
            let cap = cfg.cap.unwrap_or(3);
            let n_max = cfg.n.unwrap_or(10_000);
            let report = as_bound_study(&truth, p, cap, n_max, seed)?;
            let mut text = String::from("n,r_n\n");
            for (i, &r) in report.r.iter().enumerate() {
                let _ = writeln!(text, "{},{}", i + 1, g9(r));
            }
            let path = args.out.join("trajectory.csv");
            write_text(&path, &text)?;
            println!(
                "almost-sure bound trajectory: p = {}, cap = {}, n_max = {}",
                g9(report.p),
                report.cap,
                report.n_max
            );
            println!(
                "max r_n on [100, n_max] = {} at n = {}",
                g9(report.max_r),
                report.argmax_n
            );
            println!(
                "stabilized (no new max in the final half): {}",
                if report.stabilized { "yes" } else { "no" }
            );
            println!("wrote {}", path.display());
        }
        StudyKind::Coverage => {
            let truth = truth_from(&cfg, 0.5, 0.0);
            let design = config_design(&cfg, Design::Observed)?;
            let t = cfg.t.unwrap_or(2.0);
            let n = cfg.n.unwrap_or(400);
            let b = cfg.b.unwrap_or(1000);
            let report = coverage_and_variance_study(&truth, design, t, n, b, seed)?;
            let mut text = String::from("rep,mu_hat,se_hat,lower,upper,covered\n");
            for r in &report.reps {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{},{}",
                    r.rep,
                    g9(r.mu_hat),
                    g9(r.std_error),
                    g9(r.lower),
                    g9(r.upper),
                    u8::from(r.covered)
                );
            }
            let path = args.out.join("replications.csv");
            write_text(&path, &text)?;
            println!(
                "coverage study: design = {}, t = {}, n = {}, B = {}",
                design_name(report.design),
                g9(report.t),
                report.n,
                report.replications
            );
            println!(
                "truth mu(t) = {}, estimator failures = {}",
                g9(report.truth_mean),
                report.failures
            );
            println!("95% Wald coverage = {}", g9(report.coverage));
            println!(
                "mean plug-in variance = {}, empirical = {}, ratio = {}",
                g9(report.mean_plugin_variance),
                g9(report.empirical_variance),
                g9(report.variance_ratio)
            );
            let ts = &report.truth_side;
            let oracle = match ts.oracle_variance {
                Some(v) => format!("vs oracle {}", g9(v)),
                None => "no oracle for covariate mixtures".to_string(),
            };
            println!(
                "truth-side influence: mean = {} (se {}), variance = {} (se {}) {}",
                g9(ts.mean_influence),
                g9(ts.se_mean),
                g9(ts.mc_variance),
                g9(ts.se_variance),
                oracle
            );
            if let Some(cmp) = &report.comparison {
                println!(
                    "design comparison on {} shared draws ({} failures):",
                    cmp.replications_used, cmp.failures
                );
                println!(
                    "  plug-in variance: observed = {}, censored = {}; MC: observed = {}, censored = {}",
                    g9(cmp.mean_plugin_observed),
                    g9(cmp.mean_plugin_censored),
                    g9(cmp.mc_variance_observed),
                    g9(cmp.mc_variance_censored)
                );
                println!(
                    "  oracle: observed = {}, censored = {}, gap = {}; mean plug-in gap = {} (se {})",
                    g9(cmp.oracle_observed),
                    g9(cmp.oracle_censored),
                    g9(cmp.oracle_gap),
                    g9(cmp.mean_plugin_gap),
                    g9(cmp.se_plugin_gap)
                );
            }
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.verb {
        Verb::Estimate(args) => run_estimate(args),
        Verb::Pvar(args) => run_pvar(args),
        Verb::Simulate(args) => run_simulate(args),
        Verb::Study(args) => run_study(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let message = e.to_string();
            let first = message
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("bad arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("ERROR 2: {first}");
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR {}: {}", e.code, e.message);
            ExitCode::from(e.code)
        }
    }
}
