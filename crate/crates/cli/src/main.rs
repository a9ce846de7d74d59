//! `matroidx` command line: gen | solve | verify | bench.
//!
//! Exit codes: 0 success, 1 input/budget error or failed verification, 2 parse error,
//! 3 contract or protocol violation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use matroidx::bench::{run_bench, summarize, BenchMatrix, DEFAULT_REFERENCE_MAX_N};
use matroidx::generate::{FamilyKind, GeneratorSpec, WeightDist};
use matroidx::models::{
    comm_weighted_wrapper, one_pass_greedy_weighted, run_protocol, run_stream,
    streaming_weighted_wrapper, ExactOffline, GreedyProtocol, PartitionSpec, StreamOptions,
    StreamingGreedy, WrapperConfig,
};
use matroidx::order::OrderSpec;
use matroidx::rational::{self, Rational};
use matroidx::solvers::pipeline::Extraction;
use matroidx::solvers::{solver_by_name, weighted_mi_reduce_with, PipelineConfig};
use matroidx::suites::{run_suite, Suite, SuiteConfig};
use matroidx::{Error, InstanceSpec, Result};

/// Env var capping the number of unfolded copies per unfolding.
const BUDGET_ENV: &str = "MATROIDX_BUDGET_COPIES";

#[derive(Parser)]
#[command(
    name = "matroidx",
    version,
    about = "Weighted matroid intersection through unweighted solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance as JSON.
    Gen {
        #[arg(long, default_value = "graphic")]
        family1: FamilyKind,
        #[arg(long, default_value = "partition")]
        family2: FamilyKind,
        #[arg(long, short = 'n', default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `uniform:<W>` or `log-uniform:<R>`.
        #[arg(long, default_value = "uniform:4")]
        weights: WeightDist,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance file and print the JSON report.
    Solve {
        #[command(flatten)]
        args: SolveArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite; exits 1 with a minimized counterexample on any violation.
    Verify {
        suite: Suite,
        /// Cases per parameter setting; defaults to the suite's acceptance size.
        #[arg(long)]
        cases: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Axiom suite only: include the corrupted-oracle negative control.
        #[arg(long)]
        corrupt: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark matrix and write CSV rows; prints a growth summary to stderr.
    Bench {
        /// Family pairs as `a:b`, comma-separated.
        #[arg(long, default_value = "graphic:partition", value_delimiter = ',', value_parser = parse_pair)]
        pairs: Vec<(FamilyKind, FamilyKind)>,
        #[arg(long, short = 'n', default_value = "8", value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(
            long,
            default_value = "uniform:1,uniform:2,uniform:4,uniform:8",
            value_delimiter = ','
        )]
        weights: Vec<WeightDist>,
        #[arg(long, default_value_t = 4)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "1/4", value_delimiter = ',', value_parser = parse_rational)]
        epsilon: Vec<Rational>,
        #[arg(long, default_value = "exact,greedy", value_delimiter = ',')]
        solver: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_REFERENCE_MAX_N)]
        reference_max_n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the summary as JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value = "1/10", value_parser = parse_rational)]
    epsilon: Rational,
    #[arg(long, default_value = "exact")]
    solver: String,
    #[arg(long, value_enum, default_value_t = Model::Static)]
    model: Model,
    /// Greedy scan order (static) or arrival order (stream): natural | reverse | random:<seed>.
    #[arg(long, default_value = "natural")]
    order: OrderSpec,
    /// Alice's elements for the comm model: comma-separated ids, `none`, or random:<seed>:<fraction>.
    #[arg(long, default_value = "random:0:0.5")]
    partition: PartitionSpec,
    /// Pass count of the wrapped streaming greedy (stream model, greedy solver).
    #[arg(long)]
    passes: Option<u32>,
    #[arg(long, value_enum, default_value_t = ExtractionArg::Auction)]
    extraction: ExtractionArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Model {
    Static,
    Stream,
    Comm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExtractionArg {
    Auction,
    Exhaustive,
}

impl From<ExtractionArg> for Extraction {
    fn from(e: ExtractionArg) -> Self {
        match e {
            ExtractionArg::Auction => Extraction::Auction,
            ExtractionArg::Exhaustive => Extraction::Exhaustive,
        }
    }
}

fn parse_rational(s: &str) -> Result<Rational> {
    rational::parse(s)
}

fn parse_pair(s: &str) -> Result<(FamilyKind, FamilyKind)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("family pair {s:?} is not a:b")))?;
    Ok((a.parse()?, b.parse()?))
}

fn copy_budget() -> Result<Option<usize>> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Parse(format!("{BUDGET_ENV}={v:?} is not a count"))),
        Err(_) => Ok(None),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::Input(e.to_string()))?;
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn solve(a: &SolveArgs) -> Result<String> {
    let SolveArgs {
        instance: path,
        epsilon: eps,
        solver,
        model,
        order,
        partition,
        passes,
        extraction,
    } = a;
    let (model, passes, extraction) = (*model, *passes, Extraction::from(*extraction));
    let (solver, order) = (solver.as_str(), *order);
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let inst = InstanceSpec::from_json(&text)?.build()?;
    let budget = copy_budget()?;
    let wrapper = || {
        let mut cfg = WrapperConfig::for_instance(eps.clone(), &inst);
        cfg.copy_budget = budget;
        cfg.extraction = extraction;
        cfg
    };
    match model {
        Model::Static => {
            let s = solver_by_name(solver, order)?;
            let mut cfg = PipelineConfig::new(eps.clone());
            cfg.copy_budget = budget;
            cfg.extraction = extraction;
            Ok(json(&weighted_mi_reduce_with(&inst, &*s, &cfg)?))
        }
        Model::Stream => {
            let opts = StreamOptions {
                order,
                passes: None,
                space_cap: None,
            };
            let report = match (solver, passes) {
                ("greedy", None | Some(1)) => {
                    let mut alg =
                        one_pass_greedy_weighted(inst.m1.clone(), inst.m2.clone(), wrapper())?;
                    run_stream(&mut alg, &inst, &opts)?
                }
                ("greedy", Some(p)) => {
                    let factory = Box::new(move || {
                        Box::new(StreamingGreedy::with_passes(p))
                            as Box<dyn matroidx::models::UnweightedStreaming>
                    });
                    let mut alg = streaming_weighted_wrapper(
                        factory,
                        inst.m1.clone(),
                        inst.m2.clone(),
                        wrapper(),
                    )?;
                    run_stream(&mut alg, &inst, &opts)?
                }
                ("exact", _) => {
                    let factory = Box::new(|| {
                        Box::new(ExactOffline::default())
                            as Box<dyn matroidx::models::UnweightedStreaming>
                    });
                    let mut alg = streaming_weighted_wrapper(
                        factory,
                        inst.m1.clone(),
                        inst.m2.clone(),
                        wrapper(),
                    )?;
                    run_stream(&mut alg, &inst, &opts)?
                }
                _ => {
                    return Err(Error::Input(format!(
                        "unknown solver {solver:?}; expected exact or greedy"
                    )))
                }
            };
            Ok(json(&report))
        }
        Model::Comm => {
            if solver != "greedy" {
                return Err(Error::Input(
                    "the comm model runs the greedy protocol; use --solver greedy".into(),
                ));
            }
            let (alice, bob) = partition.split(&inst.support);
            let p = comm_weighted_wrapper(GreedyProtocol, wrapper())?;
            Ok(json(&run_protocol(&p, &inst, &alice, &bob)?))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen {
            family1,
            family2,
            n,
            seed,
            weights,
            out,
        } => {
            let spec = GeneratorSpec {
                family1,
                family2,
                n,
                seed,
                weights,
            }
            .generate();
            spec.build()?;
            emit(out.as_deref(), &spec.to_json())?;
        }
        Command::Solve { args, out } => {
            let text = solve(&args)?;
            emit(out.as_deref(), &text)?;
        }
        Command::Verify {
            suite,
            cases,
            seed,
            corrupt,
            out,
        } => {
            let cfg = SuiteConfig {
                cases: cases.unwrap_or_else(|| suite.default_cases()),
                seed,
                corrupt,
            };
            let report = run_suite(suite, &cfg)?;
            emit(out.as_deref(), &json(&report))?;
            eprintln!(
                "{} {suite}: {} cases, {} violations",
                if report.passed() { "PASS" } else { "FAIL" },
                report.cases,
                report.violations
            );
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Bench {
            pairs,
            n,
            weights,
            instances,
            seed,
            epsilon,
            solver,
            reference_max_n,
            out,
            summary,
        } => {
            let m = BenchMatrix {
                pairs,
                sizes: n,
                weights,
                instances,
                seed,
                epsilons: epsilon,
                solvers: solver,
                reference_max_n,
            };
            let rows = run_bench(&m)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r).map_err(|e| Error::Input(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
            emit(
                out.as_deref(),
                &String::from_utf8(bytes).expect("csv is utf-8"),
            )?;
            let s = summarize(&m, &rows)?;
            eprint!("{s}");
            if let Some(path) = summary {
                emit(Some(&path), &json(&s))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
