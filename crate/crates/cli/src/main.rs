//! `games-lab`: values, parallel-repetition experiments and inequality suites
//! for two-player one-round games.
//!
//! Exit codes: 0 success, 1 failed verification or internal error,
//! 2 usage/parse, 3 budget, 4 unsupported arity, 5 non-product μ.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use games_lab::games::{classical_value, Game};
use games_lab::harness::{self, Lemma5Config, Lemma6Config, VerifierReport};
use games_lab::io::{fmt_f64, load_game, load_strategy, strategy_to_json, CsvTable};
use games_lab::repetition::{
    build_theta, condition_success, lemma3_check, lemma7_budget, lemma8_scan, sample_success, theorem_bound,
    EmbeddingConfig, ScanConfig,
};
use games_lab::strategies::{evaluate, product_strategy, seesaw, EntangledStrategy, SeesawConfig};
use games_lab::{derive_seed, seeded_rng, Error};

const THREADS_ENV: &str = "GAMES_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "games-lab", version, about = "Nonlocal game values and parallel-repetition numerics")]
struct Cli {
    /// Directory receiving CSV and plot-script outputs.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact classical value by exhaustive deterministic search.
    Classical {
        /// Game file, or a built-in name (chsh).
        game: String,
    },
    /// See-saw lower bound on the entangled value at a fixed local dimension.
    Entangled {
        game: String,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        dim: u64,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        restarts: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Fail on more than two answers instead of using projected ascent.
        #[arg(long)]
        no_fallback: bool,
    },
    /// Conditioned-state pipeline on the k-fold repetition of a product strategy.
    Repetition {
        game: String,
        #[arg(short = 'k', default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        /// Initially conditioned coordinates, 1-based and comma separated.
        #[arg(long, default_value = "")]
        coords: String,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        dim: u64,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        restarts: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Sampled protocol runs per embedding; 0 reports exact values.
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0.01)]
        delta1: f64,
        #[arg(long, default_value_t = 0.01)]
        delta2: f64,
        /// Single-game strategy file; skips the see-saw search.
        #[arg(long)]
        strategy: Option<PathBuf>,
    },
    /// Randomized inequality suites.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Closed-form parallel-repetition bound.
    Bound {
        #[arg(long)]
        epsilon: f64,
        #[arg(short = 'k')]
        k: u64,
        #[arg(long)]
        na: usize,
        #[arg(long)]
        nb: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Lemma5,
    Lemma6,
    Lemma3,
    Facts,
    All,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(String),
    /// Verification ran but recorded violations.
    Violations(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Lib(
                Error::Parse(_) | Error::InvalidArgument(_) | Error::InvalidGame(_) | Error::InvalidStrategy(_),
            ) => 2,
            Failure::Lib(Error::Budget { .. }) => 3,
            Failure::Lib(Error::UnsupportedArity { .. }) => 4,
            Failure::Lib(Error::NonProduct { .. }) => 5,
            Failure::Lib(_) | Failure::Io(_) | Failure::Violations(_) => 1,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Lib(Error::NonProduct { residual }) => {
                    eprintln!("error: question distribution is not product; residual {}", fmt_f64(*residual))
                }
                Failure::Lib(e) => eprintln!("error: {e}"),
                Failure::Io(msg) => eprintln!("error: {msg}"),
                Failure::Violations(n) => eprintln!("verification failed: {n} violation(s)"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|_| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        return Err(format!("{THREADS_ENV} must be positive"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run(cli: Cli) -> CmdResult {
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::Classical { game } => cmd_classical(out, &game),
        Command::Entangled { game, dim, iters, restarts, seed, no_fallback } => {
            let cfg = SeesawConfig {
                dim: dim as usize,
                iters,
                restarts: restarts as usize,
                seed,
                allow_ascent: !no_fallback,
            };
            cmd_entangled(out, &game, &cfg)
        }
        Command::Repetition { game, k, coords, dim, iters, restarts, seed, shots, delta1, delta2, strategy } => {
            let opts = RepetitionOptions {
                k: k as usize,
                coords: parse_coords(&coords)?,
                seesaw: SeesawConfig {
                    dim: dim as usize,
                    iters,
                    restarts: restarts as usize,
                    seed,
                    allow_ascent: true,
                },
                seed,
                shots,
                delta1,
                delta2,
                strategy,
            };
            cmd_repetition(out, &game, &opts)
        }
        Command::Verify { suite, trials, seed } => cmd_verify(out, suite, trials, seed),
        Command::Bound { epsilon, k, na, nb } => {
            println!("{}", fmt_f64(theorem_bound(epsilon, k, na, nb)?));
            Ok(())
        }
    }
}

fn write_output(dir: &Path, name: &str, contents: &str) -> CmdResult {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn join_answers(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn cmd_classical(out: &Path, spec: &str) -> CmdResult {
    let game = load_game(spec)?;
    let cv = classical_value(&game)?;
    println!("value {}", fmt_f64(cv.value));
    println!("alice {}", join_answers(&cv.strategy.f));
    println!("bob {}", join_answers(&cv.strategy.g));
    let mut t = CsvTable::new(&["value", "alice", "bob"]);
    t.push(vec![fmt_f64(cv.value), join_answers(&cv.strategy.f), join_answers(&cv.strategy.g)]);
    write_output(out, "classical.csv", &t.render())
}

fn cmd_entangled(out: &Path, spec: &str, cfg: &SeesawConfig) -> CmdResult {
    let game = load_game(spec)?;
    let (strategy, report) = seesaw(&game, cfg)?;
    println!("value {}", fmt_f64(report.final_value));
    println!("restarts {} best {} converged {}", report.restarts_used, report.best_restart, report.converged);
    let mut t = CsvTable::new(&["iteration", "value"]);
    for (i, v) in report.value_trace.iter().enumerate() {
        t.push(vec![(i + 1).to_string(), fmt_f64(*v)]);
    }
    write_output(out, "seesaw.csv", &t.render())?;
    write_output(out, "seesaw_strategy.json", &strategy_to_json(&strategy))
}

/// Parses `"1,3"` into zero-based `[0, 2]`; empty means no coordinates.
fn parse_coords(raw: &str) -> Result<Vec<usize>, Failure> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s.parse::<usize>() {
            Ok(c) if c >= 1 => Ok(c - 1),
            _ => Err(Error::InvalidArgument(format!("coordinate `{s}` is not a positive integer")).into()),
        })
        .collect()
}

struct RepetitionOptions {
    k: usize,
    coords: Vec<usize>,
    seesaw: SeesawConfig,
    seed: u64,
    shots: u64,
    delta1: f64,
    delta2: f64,
    strategy: Option<PathBuf>,
}

fn cmd_repetition(out: &Path, spec: &str, opts: &RepetitionOptions) -> CmdResult {
    let game = load_game(spec)?;
    let k = opts.k;
    let single: EntangledStrategy = match &opts.strategy {
        Some(path) => load_strategy(path)?,
        None => seesaw(&game, &opts.seesaw)?.0,
    };
    single.check_game(&game)?;
    let omega = evaluate(&game, &single)?;
    let strategy = product_strategy(&single, k)?;
    let theta = build_theta(&game, k, &strategy, &opts.coords)?;

    let mut summary = CsvTable::new(&["quantity", "value"]);
    let mut put = |name: &str, v: String| summary.push(vec![name.to_string(), v]);
    put("k", k.to_string());
    put("coords", opts.coords.iter().map(|c| (c + 1).to_string()).collect::<Vec<_>>().join(" "));
    put("omega_single", fmt_f64(omega));
    println!("omega_single {}", fmt_f64(omega));
    match condition_success(&theta, &game, &opts.coords) {
        Ok(cgs) => {
            let l7 = lemma7_budget(&cgs, &game)?;
            let l3 = lemma3_check(&cgs)?;
            println!("q {}", fmt_f64(cgs.q));
            println!("lemma7 {} <= {} {}", fmt_f64(l7.lhs), fmt_f64(l7.rhs), l7.holds());
            println!("lemma3 {} <= {} {}", fmt_f64(l3.lhs), fmt_f64(l3.rhs), l3.holds());
            put("q", fmt_f64(cgs.q));
            put("lemma7_lhs", fmt_f64(l7.lhs));
            put("lemma7_rhs", fmt_f64(l7.rhs));
            put("lemma3_lhs", fmt_f64(l3.lhs));
            put("lemma3_rhs", fmt_f64(l3.rhs));
        }
        Err(Error::ZeroProbability) => {
            println!("q {}", fmt_f64(0.0));
            put("q", fmt_f64(0.0));
        }
        Err(e) => return Err(e.into()),
    }

    let embedding = EmbeddingConfig {
        shots: (opts.shots > 0).then_some(opts.shots),
        seed: derive_seed(opts.seed, 11, 0),
        ..EmbeddingConfig::default()
    };
    let scan_cfg = ScanConfig {
        delta1: opts.delta1,
        delta2: opts.delta2,
        omega_oracle: omega,
        initial_coords: opts.coords.clone(),
        embedding,
    };
    let scan = lemma8_scan(&game, k, &strategy, &scan_cfg)?;
    put("scan_dichotomy_holds", scan.all_hold().to_string());
    put("scan_chain_holds", scan.steps.iter().all(|s| s.diagnostics.chain_holds()).to_string());
    println!("scan steps {} dichotomy {}", scan.steps.len(), scan.all_hold());
    write_output(out, "repetition.csv", &scan.to_csv().render())?;
    write_output(out, "repetition_summary.csv", &summary.render())?;

    let curve = success_curve(&game, &strategy, k, omega, opts)?;
    write_output(out, "repetition_curve.csv", &curve.render())?;
    write_output(out, "repetition_plot.py", PLOT_SCRIPT)
}

/// Sampled success on the first `m` coordinates for `m = 1..=k`, alongside
/// the exact product value and the theorem bound at `ε = 1 − ω`.
fn success_curve(
    game: &Game,
    strategy: &EntangledStrategy,
    k: usize,
    omega: f64,
    opts: &RepetitionOptions,
) -> Result<CsvTable, Failure> {
    let mut t = CsvTable::new(&["m", "empirical", "stderr", "exact_product", "theorem_bound"]);
    let (na, nb) = (game.na(), game.nb());
    let shots = opts.shots.max(1);
    for m in 1..=k {
        let coords: Vec<usize> = (0..m).collect();
        let mut rng = seeded_rng(derive_seed(opts.seed, 12, m as u64));
        let (est, se) = sample_success(game, k, strategy, &coords, shots, &mut rng);
        let bound = theorem_bound(1.0 - omega, m as u64, na, nb).map(fmt_f64).unwrap_or_default();
        t.push(vec![m.to_string(), fmt_f64(est), fmt_f64(se), fmt_f64(omega.powi(m as i32)), bound]);
    }
    Ok(t)
}

const PLOT_SCRIPT: &str = r#"# Renders repetition_curve.csv: sampled success on m coordinates against the
# exact product value and the parallel-repetition bound.
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "repetition_curve.csv"
with open(path, newline="") as fh:
    rows = list(csv.DictReader(fh))
m = [int(r["m"]) for r in rows]
emp = [float(r["empirical"]) for r in rows]
err = [3 * float(r["stderr"]) for r in rows]
exact = [float(r["exact_product"]) for r in rows]
bound = [(int(r["m"]), float(r["theorem_bound"])) for r in rows if r["theorem_bound"]]

fig, ax = plt.subplots()
ax.errorbar(m, emp, yerr=err, fmt="o", label="sampled success (3 sigma)")
ax.plot(m, exact, "-", label="omega^m")
if bound:
    ax.plot([b[0] for b in bound], [b[1] for b in bound], "--", label="theorem bound")
ax.set_xlabel("coordinates m")
ax.set_ylabel("winning probability")
ax.legend()
fig.savefig("repetition_plot.png", dpi=150)
"#;

fn report_line(r: &VerifierReport) {
    let verdict = if r.diagnostic {
        "diagnostic"
    } else if r.passed() {
        "pass"
    } else {
        "FAIL"
    };
    let gap = r.max_uhlmann_gap.map(|g| format!(" uhlmann_gap {}", fmt_f64(g))).unwrap_or_default();
    println!(
        "{:<36} {verdict:<10} trials {:>5} violations {:>4} worst_slack {}{gap}",
        r.name,
        r.records.len(),
        r.violations,
        fmt_f64(r.worst_slack)
    );
}

fn cmd_verify(out: &Path, suite: Suite, trials: usize, seed: u64) -> CmdResult {
    let want = |s: Suite| suite == s || suite == Suite::All;
    let mut reports = Vec::new();
    if want(Suite::Lemma5) {
        reports.push(harness::verify_lemma5(&Lemma5Config { trials, seed, ..Lemma5Config::default() })?);
    }
    if want(Suite::Lemma6) {
        reports.push(harness::verify_lemma6(&Lemma6Config { trials, seed, ..Lemma6Config::default() })?);
        let correlated = trials.div_ceil(4);
        reports.push(harness::verify_lemma6(&Lemma6Config {
            trials: correlated,
            seed,
            correlated: true,
            ..Lemma6Config::default()
        })?);
    }
    if want(Suite::Lemma3) {
        reports.push(harness::verify_lemma3(3, trials, seed)?);
    }
    if want(Suite::Facts) {
        reports.extend(harness::verify_facts(trials, seed)?.reports);
    }

    let mut summary = CsvTable::new(&["name", "trials", "violations", "worst_slack", "diagnostic"]);
    let mut violations = 0;
    for r in &reports {
        report_line(r);
        write_output(out, &format!("verify_{}.csv", r.name), &r.to_csv().render())?;
        summary.push(vec![
            r.name.clone(),
            r.records.len().to_string(),
            r.violations.to_string(),
            fmt_f64(r.worst_slack),
            r.diagnostic.to_string(),
        ]);
        if !r.diagnostic {
            violations += r.violations;
        }
    }
    write_output(out, "verify_summary.csv", &summary.render())?;
    if violations > 0 {
        return Err(Failure::Violations(violations));
    }
    Ok(())
}
