use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rescon::codesign::{codesign_with, verify_codesign, CoDesignSolution, Mode, Representative};
use rescon::fixed_modes::{analyze, numeric_fixed_modes, AnalysisOptions, NumericOptions};
use rescon::io::{parse_json, to_dot, to_json, GainFile, SystemFile};
use rescon::pattern::{
    build_scenario_digraph, build_system_digraph, FailureCollection, FailureScenario, LinkSet,
};
use rescon::stabilizer::{
    ccl_iterate_with, feasibility_init, pad_to_square, verify_stabilization, CclOptions, CclStatus,
    StabilityReport,
};
use rescon::Error;

/// Resilient decentralized control structures: analysis, co-design and gain synthesis.
#[derive(Parser)]
#[command(name = "rescon", version)]
struct Cli {
    /// Seed for the randomized numeric oracle.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Numeric tolerance for eigenvalue matching in the numeric oracle.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check for structurally fixed modes under every failure scenario.
    Analyze {
        system: PathBuf,
        #[command(flatten)]
        failures: FailureArgs,
        /// Only require the SCC condition (fixed modes at zero are tolerated).
        #[arg(long)]
        stabilization_only: bool,
    },
    /// Place dedicated actuators and sensors and choose the links.
    Codesign {
        system: PathBuf,
        /// Number of simultaneous failures to tolerate.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Full)]
        mode: ModeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize a gain on the link pattern that is stable under every scenario.
    Stabilize {
        system: PathBuf,
        /// Co-design output whose links replace the system file's links.
        #[arg(long)]
        pattern: Option<PathBuf>,
        #[command(flatten)]
        failures: FailureArgs,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        /// Separate Lyapunov pair per scenario.
        #[arg(long)]
        per_scenario: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the cost after every iteration on stderr.
        #[arg(long)]
        verbose: bool,
    },
    /// Spectral radii of a given gain under every scenario.
    Verify {
        system: PathBuf,
        #[arg(long)]
        gain: PathBuf,
        #[command(flatten)]
        failures: FailureArgs,
    },
    /// Graphviz rendering of the system digraph.
    ExportDot {
        system: PathBuf,
        /// Include the feedback links.
        #[arg(long)]
        closed_loop: bool,
        /// 1-based index into the failure list; implies --closed-loop.
        #[arg(long)]
        scenario: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct FailureArgs {
    /// JSON list of failure scenarios (overrides the system file).
    #[arg(long, conflicts_with = "budget")]
    failures: Option<PathBuf>,
    /// Enumerate every failure of at most this many links, actuators or sensors.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Stabilization,
}

/// Process outcome: a verdict (0 or 1) or an error.
enum Failure {
    Verdict(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::AssumptionA1Violated => {
                Failure::Verdict(format!("{e}; try --mode stabilization"))
            }
            Error::Infeasible(_)
            | Error::InfeasibleAfterExclusion(_)
            | Error::MaxIterations(_)
            | Error::NotControllable
            | Error::NotObservable
            | Error::EmptyMatching
            | Error::NumericalBreakdown(_) => Failure::Verdict(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_system(path: &Path) -> Result<SystemFile, Failure> {
    Ok(SystemFile::from_json(&read(path)?)?)
}

fn failures_for(
    sys: &SystemFile,
    links: &LinkSet,
    args: &FailureArgs,
) -> Result<FailureCollection, Failure> {
    if let Some(p) = &args.failures {
        return Ok(parse_json(&read(p)?)?);
    }
    if let Some(k) = args.budget {
        return Ok(FailureCollection::budget(links, sys.p, sys.m, k));
    }
    Ok(sys.failure_collection())
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Analyze {
            system,
            failures,
            stabilization_only,
        } => {
            let sys = load_system(system)?;
            let pattern = sys.pattern()?;
            let links = sys.link_set()?;
            let failures = failures_for(&sys, &links, failures)?;
            let opts = AnalysisOptions {
                include_nominal: true,
                stabilization_only: *stabilization_only,
            };
            let report = analyze(&pattern, &links, &failures, opts)?;
            if cli.json {
                println!("{}", to_json(&report));
            } else {
                for s in &report.scenarios {
                    let b = match s.condition_b {
                        Some(true) => "holds",
                        Some(false) => "fails",
                        None => "skipped",
                    };
                    print!(
                        "{:<24} SCC condition {:<6} matching condition {b}",
                        s.scenario.to_string(),
                        if s.condition_a { "holds" } else { "fails" }
                    );
                    if !s.violating_states.is_empty() {
                        print!("  uncovered states {:?}", s.violating_states);
                    }
                    println!();
                }
                if sys.has_values() {
                    let r = sys.realization()?;
                    let opts = NumericOptions {
                        seed: cli.seed,
                        tol: cli.tol,
                        ..Default::default()
                    };
                    let modes = numeric_fixed_modes(&r, &links, &LinkSet::new(), opts)?;
                    println!("numeric fixed modes (nominal): {}", modes.len());
                }
                if report.has_fixed_modes {
                    println!("resilient structurally fixed modes present");
                } else {
                    println!("no resilient structurally fixed modes");
                }
            }
            Ok(!report.has_fixed_modes)
        }
        Command::Codesign {
            system,
            k,
            mode,
            out,
        } => {
            let sys = load_system(system)?;
            let pattern = sys.pattern()?;
            let mode = match mode {
                ModeArg::Full => Mode::Full,
                ModeArg::Stabilization => Mode::Stabilization,
            };
            let sol = codesign_with(&pattern, *k, mode, Representative::default())?;
            let verdict = verify_codesign(&pattern, &sol, *k, mode)?;
            if let Some(p) = out {
                write_or_print(Some(p), &to_json(&sol))?;
            }
            if cli.json {
                println!("{}", to_json(&sol));
            } else {
                println!("actuators {:?}", sol.actuators.indices());
                println!("sensors   {:?}", sol.sensors.indices());
                println!("links     {}", sol.links);
                for (i, s) in sol.sub_patterns.iter().enumerate() {
                    println!("  sub-pattern {}: {s}", i + 1);
                }
                println!(
                    "|I_B| = {}, |I_C| = {}, |K| = {}, total {}",
                    sol.actuators.len(),
                    sol.sensors.len(),
                    sol.links.len(),
                    sol.cost()
                );
                println!(
                    "verification over {} scenarios: {}",
                    verdict.scenarios_checked,
                    if verdict.passed { "passed" } else { "FAILED" }
                );
            }
            Ok(verdict.passed)
        }
        Command::Stabilize {
            system,
            pattern,
            failures,
            max_iter,
            per_scenario,
            out,
            verbose,
        } => {
            let sys = load_system(system)?;
            let r = sys.realization()?;
            let links = match pattern {
                Some(p) => parse_json::<CoDesignSolution>(&read(p)?)?.links,
                None => sys.link_set()?,
            };
            let failures = failures_for(&sys, &links, failures)?;
            failures.check_against(&links)?;
            let opts = CclOptions {
                max_iter: *max_iter,
                shared_lyapunov: !per_scenario,
                ..Default::default()
            };
            let bs = pad_to_square(&r, &links)?;
            let init = feasibility_init(&bs, &failures, &opts)?;
            let outcome = ccl_iterate_with(&bs, &failures, init, &opts, |it, s| {
                if *verbose {
                    eprintln!("iteration {it}: cost {:.8}", s.cost);
                }
            })?;
            let report = verify_stabilization(&r, outcome.gain(), &failures)?;
            let gain = GainFile::from_gain(outcome.gain());
            if let Some(p) = out {
                write_or_print(Some(p), &gain.to_json())?;
            }
            if cli.json {
                println!(
                    "{}",
                    to_json(&StabilizeOutput {
                        status: outcome.status,
                        gain,
                        cost_trace: outcome.cost_trace.clone(),
                        report: report.clone(),
                    })
                );
            } else {
                println!(
                    "status {:?} after {} iterations",
                    outcome.status,
                    outcome.cost_trace.len()
                );
                if let Some(c) = outcome.cost_trace.last() {
                    println!("final cost {c:.8} (target {})", outcome.state.target());
                }
                for (i, row) in gain.k.iter().enumerate() {
                    println!("K[{}] = {row:?}", i + 1);
                }
                print_report(&report);
            }
            Ok(outcome.status == CclStatus::Stabilized && report.all_schur())
        }
        Command::Verify {
            system,
            gain,
            failures,
        } => {
            let sys = load_system(system)?;
            let r = sys.realization()?;
            let gain = GainFile::from_json(&read(gain)?)?;
            let g = gain.to_gain()?;
            let failures = failures_for(&sys, g.pattern(), failures)?;
            failures.check_against(g.pattern())?;
            let report = verify_stabilization(&r, &g, &failures)?;
            if cli.json {
                println!("{}", to_json(&report));
            } else {
                print_report(&report);
            }
            Ok(report.all_schur())
        }
        Command::ExportDot {
            system,
            closed_loop,
            scenario,
            out,
        } => {
            let sys = load_system(system)?;
            let pattern = sys.pattern()?;
            let d = if *closed_loop || scenario.is_some() {
                let links = sys.link_set()?;
                let s = match scenario {
                    None => FailureScenario::none(),
                    Some(i) => sys
                        .failure_collection()
                        .0
                        .get(i.wrapping_sub(1))
                        .cloned()
                        .ok_or_else(|| Failure::Usage(format!("no failure scenario {i}")))?,
                };
                build_scenario_digraph(&pattern, &links, &s)?
            } else {
                build_system_digraph(&pattern)
            };
            let name = system
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("system");
            write_or_print(out.as_ref(), &to_dot(&d, name))?;
            Ok(true)
        }
    }
}

#[derive(serde::Serialize)]
struct StabilizeOutput {
    status: CclStatus,
    gain: GainFile,
    cost_trace: Vec<f64>,
    report: StabilityReport,
}

fn print_report(report: &StabilityReport) {
    println!("open-loop spectral radius {:.6}", report.open_loop_radius);
    println!(
        "{:<24} {:>12} {:>12}  schur",
        "scenario", "rho(A+BKC)", "rho([A B;C K])"
    );
    for s in &report.scenarios {
        println!(
            "{:<24} {:>12.6} {:>12.6}  {}",
            s.scenario.to_string(),
            s.closed_loop_radius,
            s.block_radius,
            if s.schur { "yes" } else { "no" }
        );
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Verdict(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
