use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use opineq_core::bounds::{
    alpha_difference_bound, difference_bound, g_range, general_bound, ratio_bound, BoundReport, FKind, GSign,
    InequalityInstance, Side, VERDICT_TOL,
};
use opineq_core::sobolev::{
    embedding_norms, sobolev_conjugate, sobolev_constants, verify_sobolev_mean, verify_sobolev_original,
};
use opineq_harness::files::{read_instance, read_json, to_json, write_json};
use opineq_harness::generate::{build_instance, InstanceSpec, DEFAULT_ENVELOPE_GRID};
use opineq_harness::{run_suite, HarnessError, Result, Suite, SuiteReport};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "opineq", version, about = "Operator inequalities for positive linear maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Materialize an instance from a seeded spec.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run randomized verification suites.
    Verify {
        /// A suite tag or `all`.
        #[arg(long)]
        suite: String,
        /// Trials per configuration.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = VERDICT_TOL)]
        tol: f64,
        #[arg(long)]
        report: PathBuf,
    },
    /// Evaluate one bound on an instance file.
    Bounds {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        theorem: String,
        #[arg(long, value_enum, default_value_t = SideArg::Both)]
        side: SideArg,
        /// `α` for thm2.3 and thm2.4.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Form of `F` for thm2.3.
        #[arg(long, value_enum, default_value_t = KindArg::Difference)]
        kind: KindArg,
        #[arg(long, default_value_t = VERDICT_TOL)]
        tol: f64,
    },
    /// Sobolev constants and verdicts on an instance file.
    Sobolev {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = VERDICT_TOL)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Upper,
    Lower,
    Both,
}

impl SideArg {
    fn sides(self) -> Vec<Side> {
        match self {
            SideArg::Upper => vec![Side::Upper],
            SideArg::Lower => vec![Side::Lower],
            SideArg::Both => vec![Side::Upper, Side::Lower],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Difference,
    Congruence,
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    trials: usize,
    tol: f64,
    all_passed: bool,
    suites: Vec<SuiteReport>,
    wall_time_secs: f64,
}

#[derive(Serialize)]
struct BoundsOutput {
    reports: Vec<BoundReport<f64>>,
}

fn threads() -> Result<usize> {
    match std::env::var("OPINEQ_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(HarnessError::Usage(format!("OPINEQ_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

fn load(path: &Path, tol: f64) -> Result<InequalityInstance<f64>> {
    let mut inst = read_instance(path, DEFAULT_ENVELOPE_GRID)?;
    inst.set_verdict_tol(tol);
    Ok(inst)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol >= 0.0 {
        Ok(())
    } else {
        Err(HarnessError::Usage(format!("--tol must be finite and nonnegative, got {tol}")))
    }
}

fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Gen { spec, out } => {
            let spec: InstanceSpec = read_json(&spec)?;
            let inst = build_instance(&spec)?;
            write_json(&out, &inst)?;
            Ok(true)
        }
        Command::Verify {
            suite,
            trials,
            seed,
            tol,
            report,
        } => {
            check_tol(tol)?;
            let suites = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![suite.parse::<Suite>()?]
            };
            let threads = threads()?;
            let start = Instant::now();
            let mut reports = Vec::new();
            for s in suites {
                let r = run_suite(s, trials, seed, tol, threads)?;
                println!(
                    "{:<13} {} passed={} failed={} time={:.2}s",
                    s.tag(),
                    if r.all_passed() { "PASS" } else { "FAIL" },
                    r.passed,
                    r.failed,
                    r.wall_time_secs
                );
                for f in r.failures.iter().take(10) {
                    println!("  failure config={} seed={} check={}", f.config, f.seed, f.check);
                }
                reports.push(r);
            }
            let all_passed = reports.iter().all(SuiteReport::all_passed);
            let out = VerifyReport {
                seed,
                trials,
                tol,
                all_passed,
                suites: reports,
                wall_time_secs: start.elapsed().as_secs_f64(),
            };
            write_json(&report, &out)?;
            Ok(all_passed)
        }
        Command::Bounds {
            instance,
            theorem,
            side,
            alpha,
            kind,
            tol,
        } => {
            check_tol(tol)?;
            let inst = load(&instance, tol)?;
            let mut reports = Vec::new();
            for s in side.sides() {
                let r = match theorem.as_str() {
                    "thm2.3" => {
                        let fk = match kind {
                            KindArg::Difference => FKind::Difference(alpha),
                            KindArg::Congruence => FKind::Congruence,
                        };
                        general_bound(&inst, fk, s)?
                    }
                    "thm2.4" => alpha_difference_bound(&inst, alpha, s)?,
                    "thm2.9" => {
                        let (lo, _) = g_range(&inst)?;
                        let sign = if lo > 0.0 { GSign::Positive } else { GSign::Negative };
                        ratio_bound(&inst, s, sign)?
                    }
                    "thm2.15" => difference_bound(&inst, s)?,
                    other => {
                        return Err(HarnessError::Usage(format!(
                            "unknown theorem {other:?}; expected thm2.3, thm2.4, thm2.9 or thm2.15"
                        )))
                    }
                };
                eprintln!(
                    "{} {:?}: constant={:e} holds={} margin={:e}",
                    r.theorem, r.side, r.scalar_constant, r.verdict.holds, r.verdict.margin
                );
                reports.push(r);
            }
            let ok = reports.iter().all(|r| r.verdict.holds);
            println!("{}", to_json(&BoundsOutput { reports })?);
            Ok(ok)
        }
        Command::Sobolev { instance, m, p, tol } => {
            check_tol(tol)?;
            let inst = load(&instance, tol)?;
            let exps = sobolev_conjugate(m, p)?;
            let constants = sobolev_constants(&inst, &exps)?;
            let original = verify_sobolev_original(&inst, &exps)?;
            let mean = match verify_sobolev_mean(&inst, &exps) {
                Ok(r) => Some(r),
                Err(opineq_core::Error::Unsupported(msg)) => {
                    eprintln!("mean variant skipped: {msg}");
                    None
                }
                Err(e) => return Err(e.into()),
            };
            let norms = embedding_norms(&inst, &exps)?;
            eprintln!(
                "C1={:e} C2={:e} C3={:e} original holds={}",
                constants.c1, constants.c2, constants.c3, original.verdict.holds
            );
            let ok = original.verdict.holds && mean.as_ref().is_none_or(|r| r.verdict.holds);
            #[derive(Serialize)]
            struct Out {
                exponents: opineq_core::sobolev::SobolevExponents<f64>,
                constants: opineq_core::sobolev::SobolevConstants<f64>,
                original: BoundReport<f64>,
                mean: Option<BoundReport<f64>>,
                norms: opineq_core::sobolev::EmbeddingNorms<f64>,
            }
            let out = Out {
                exponents: exps,
                constants,
                original,
                mean,
                norms,
            };
            println!("{}", to_json(&out)?);
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
