//! Command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
//! and domain errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factoriality::{
    build_jacobi, key_estimate_check, spectral_level, weak_decay_experiments, DecayConfig, DecayReport, KeyEstimate,
};
use crate::quantization::{moment_table, moments_csv, MomentRow};
use crate::report::{checks_csv, to_json, CheckResult, Format, Report, RunConfig};
use crate::suite::verify_suite;
use crate::symmetrizer::{pn_matrix, SymmetrizerExport};
use crate::word::{Word, E};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qfock", version, about = "Numerical checks on truncated q-deformed Fock spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the identity suite: positivity, factorization, commutation,
    /// adjoints, Wick vacuum, reversal, trace symmetry, moments.
    Verify(Common),
    /// Weak-decay experiment with Rademacher vectors, plus the key estimate.
    Factoriality(FactorialityArgs),
    /// Emit a symmetrizer matrix, a moment table or a key-estimate sweep.
    Table(TableArgs),
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Deformation parameter, -1 < q < 1.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    q: f64,
    /// Dimension of the one-particle space.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Truncation level N (defaults: verify 6, factoriality 12, table 6).
    #[arg(long)]
    max_level: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Cut level for the head/tail split.
    #[arg(long)]
    cut: Option<usize>,
    #[arg(long, default_value_t = 6)]
    steps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the machine-readable report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
struct FactorialityArgs {
    #[command(flatten)]
    common: Common,
    /// Word z, letters separated by commas; must contain a letter other than 0.
    #[arg(long, default_value = "1")]
    z: String,
    /// Word t (repeatable); an empty string or "omega" is the vacuum.
    #[arg(long)]
    t: Vec<String>,
    #[arg(long, default_value_t = 5)]
    k_min: usize,
    #[arg(long, default_value_t = 20)]
    k_max: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableKind {
    Pn,
    Moments,
    Estimate,
}

#[derive(Debug, Clone, Args)]
struct TableArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    kind: TableKind,
    /// Level for pn (default 2), largest k for moments (10) and estimate (20).
    #[arg(long)]
    n: Option<usize>,
}

impl Common {
    fn config(&self, default_level: usize) -> Result<RunConfig> {
        let config = RunConfig {
            q: self.q,
            dim: self.dim,
            max_level: self.max_level.unwrap_or(default_level),
            tol: self.tol,
            cut: self.cut,
            steps: self.steps,
            report_path: self.report.as_ref().map(|p| p.display().to_string()),
            seed: self.seed,
            format: match self.format {
                FormatArg::Json => Format::Json,
                FormatArg::Csv => Format::Csv,
            },
        };
        config.validate()?;
        Ok(config)
    }
}

/// Human summary for stdout and machine report for the file.
struct Outcome {
    passed: bool,
    summary: String,
    machine: String,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let (outcome, config, print_machine) = match cli.command {
        Command::Verify(common) => {
            let config = common.config(6)?;
            (cmd_verify(&config)?, config, false)
        }
        Command::Factoriality(args) => {
            let config = args.common.config(12)?;
            (cmd_factoriality(&config, &args)?, config, false)
        }
        Command::Table(args) => {
            let config = args.common.config(6)?;
            (cmd_table(&config, args.kind, args.n)?, config, true)
        }
    };
    match &config.report_path {
        Some(path) => {
            std::fs::write(path, &outcome.machine)?;
            print!("{}", outcome.summary);
        }
        None if print_machine => print!("{}", outcome.machine),
        None => print!("{}", outcome.summary),
    }
    Ok(if outcome.passed { EXIT_PASS } else { EXIT_FAIL })
}

#[derive(Serialize)]
struct VerifyBody {
    passed: bool,
    checks: Vec<CheckResult>,
}

fn cmd_verify(config: &RunConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let checks = verify_suite(config.q, config.dim, config.max_level, config.tol, &mut rng)?;
    let passed = checks.iter().all(|c| c.passed);
    let mut summary = String::new();
    for c in &checks {
        let _ = writeln!(
            summary,
            "{} {:<40} residual {:.3e} bound {:.3e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.residual,
            c.bound
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(summary, "{} checks, {} failed", checks.len(), failed);
    let machine = match config.format {
        Format::Json => to_json(&Report::new("verify", config.clone(), VerifyBody { passed, checks })),
        Format::Csv => checks_csv(&checks),
    };
    Ok(Outcome {
        passed,
        summary,
        machine,
    })
}

#[derive(Serialize)]
struct FactorialityBody {
    passed: bool,
    spectral_level: usize,
    experiments: Vec<DecayReport>,
    key_estimate: KeyEstimate,
}

#[derive(Serialize)]
struct Empty {}

fn parse_word(s: &str) -> Result<Word> {
    s.parse()
}

fn cmd_factoriality(config: &RunConfig, args: &FactorialityArgs) -> Result<Outcome> {
    let z = parse_word(&args.z)?;
    if z.is_power_of(E) {
        return Err(Error::PureWord(z.to_string()));
    }
    let ts: Vec<Word> = if args.t.is_empty() {
        vec![Word::empty()]
    } else {
        args.t.iter().map(|t| parse_word(t)).collect::<Result<_>>()?
    };
    if config.steps == 0 {
        let machine = match config.format {
            Format::Json => to_json(&Report::new("factoriality", config.clone(), Empty {})),
            Format::Csv => String::from("t,i,direct,transposed,residual,head,tail\n"),
        };
        return Ok(Outcome {
            passed: true,
            summary: "no steps requested\n".into(),
            machine,
        });
    }
    let m = spectral_level(config.max_level, config.steps);
    let jacobi = build_jacobi(m, config.q)?;
    let decay = DecayConfig {
        dim: config.dim,
        z: z.clone(),
        steps: config.steps,
        cut: config.cut,
        pairings: 8,
    };
    let experiments = weak_decay_experiments(&decay, &ts, &jacobi)?;
    let marker = z.letters().find(|&a| a != E).expect("z has a letter other than e");
    if args.k_min > args.k_max {
        return Err(Error::InvalidArgument(format!("k-min {} exceeds k-max {}", args.k_min, args.k_max)));
    }
    let key_estimate = key_estimate_check(&[marker], &[marker], args.k_min.max(1)..=args.k_max, config.q, 1.01)?;
    let passed = experiments.iter().all(DecayReport::passed);

    let mut summary = String::new();
    let _ = writeln!(summary, "z = {z}, q = {}, spectral level {m}", config.q);
    for rep in &experiments {
        let first = rep.rows.first().map_or(0.0, |r| r.direct);
        let last = rep.rows.last().map_or(0.0, |r| r.direct);
        let _ = writeln!(
            summary,
            "{} t = {:<8} I_1 {:+.6e}  I_{} {:+.6e}  max residual {:.2e}  tail constant {}",
            if rep.passed() { "PASS" } else { "FAIL" },
            rep.t.to_string(),
            first,
            rep.steps,
            last,
            rep.max_residual,
            rep.tail_constant.map_or("none".into(), |c| format!("{c:.4e}")),
        );
    }
    let _ = writeln!(
        summary,
        "key estimate: constant {:.6e}, dominated {}, eventually non-increasing {} (informational)",
        key_estimate.constant, key_estimate.dominated, key_estimate.eventually_nonincreasing
    );

    let machine = match config.format {
        Format::Json => to_json(&Report::new(
            "factoriality",
            config.clone(),
            FactorialityBody {
                passed,
                spectral_level: m,
                experiments,
                key_estimate,
            },
        )),
        Format::Csv => {
            let mut out = String::from("t,i,direct,transposed,residual,head,tail\n");
            for rep in &experiments {
                for line in rep.csv().lines().skip(1) {
                    let _ = writeln!(out, "{},{line}", rep.t);
                }
            }
            out
        }
    };
    Ok(Outcome {
        passed,
        summary,
        machine,
    })
}

#[derive(Serialize)]
struct PnBody {
    table: &'static str,
    #[serde(flatten)]
    matrix: SymmetrizerExport,
}

#[derive(Serialize)]
struct MomentBody {
    table: &'static str,
    rows: Vec<MomentRow>,
}

#[derive(Serialize)]
struct EstimateBody {
    table: &'static str,
    #[serde(flatten)]
    estimate: KeyEstimate,
}

fn cmd_table(config: &RunConfig, kind: TableKind, n: Option<usize>) -> Result<Outcome> {
    let (machine, summary) = match kind {
        TableKind::Pn => {
            let n = n.unwrap_or(2);
            let export = pn_matrix(n, config.dim, config.q)?.export();
            let summary = format!("P_{n} on {} words\n", export.words.len());
            let machine = match config.format {
                Format::Json => to_json(&Report::new("table", config.clone(), PnBody { table: "pn", matrix: export })),
                Format::Csv => {
                    let mut out = String::from("word");
                    for w in &export.words {
                        let _ = write!(out, ",{w}");
                    }
                    out.push('\n');
                    for (w, row) in export.words.iter().zip(&export.matrix) {
                        let _ = write!(out, "{w}");
                        for v in row {
                            let _ = write!(out, ",{v:.16e}");
                        }
                        out.push('\n');
                    }
                    out
                }
            };
            (machine, summary)
        }
        TableKind::Moments => {
            let rows = moment_table(n.unwrap_or(10), &[config.q])?;
            let worst = rows.iter().map(|r| r.delta).fold(0.0, f64::max);
            let summary = format!("{} moments, largest delta {worst:.3e}\n", rows.len());
            let machine = match config.format {
                Format::Json => to_json(&Report::new("table", config.clone(), MomentBody { table: "moments", rows })),
                Format::Csv => moments_csv(&rows),
            };
            (machine, summary)
        }
        TableKind::Estimate => {
            let estimate = key_estimate_check(&[1], &[1], 5..=n.unwrap_or(20).max(5), config.q, 1.01)?;
            let summary = format!("{} rows, fitted constant {:.6e}\n", estimate.rows.len(), estimate.constant);
            let machine = match config.format {
                Format::Json => to_json(&Report::new("table", config.clone(), EstimateBody { table: "estimate", estimate })),
                Format::Csv => estimate.csv(),
            };
            (machine, summary)
        }
    };
    Ok(Outcome {
        passed: true,
        summary,
        machine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn run_args(args: &[&str]) -> i32 {
        run(std::iter::once("qfock").chain(args.iter().copied()))
    }

    fn report(args: &[&str]) -> (i32, Value) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let mut full = args.to_vec();
        let p = path.display().to_string();
        full.extend(["--report", &p]);
        let code = run_args(&full);
        let text = std::fs::read_to_string(&path).unwrap();
        (code, serde_json::from_str(&text).unwrap())
    }

    #[test]
    fn verify_passes_at_zero() {
        let (code, v) = report(&["verify", "--q", "0", "--max-level", "5"]);
        assert_eq!(code, EXIT_PASS);
        assert_eq!(v["schema"], 1);
        assert_eq!(v["command"], "verify");
        assert_eq!(v["config"]["q"].as_f64(), Some(0.0));
        assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    }

    #[test]
    fn impossible_tolerance_fails() {
        assert_eq!(run_args(&["verify", "--q", "0.5", "--max-level", "4", "--tol", "1e-300"]), EXIT_FAIL);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_args(&["verify", "--q", "1.0"]), EXIT_USAGE);
        assert_eq!(run_args(&["verify", "--q=-1"]), EXIT_USAGE);
        assert_eq!(run_args(&["verify", "--dim", "0"]), EXIT_USAGE);
        assert_eq!(run_args(&["table", "--kind", "bogus"]), EXIT_USAGE);
        assert_eq!(run_args(&["factoriality", "--z", "0,0"]), EXIT_USAGE);
        assert_eq!(run_args(&["factoriality", "--z", "x"]), EXIT_USAGE);
        assert_eq!(run_args(&["nonsense"]), EXIT_USAGE);
    }

    #[test]
    fn zero_steps_echoes_config() {
        let (code, v) = report(&["factoriality", "--steps", "0"]);
        assert_eq!(code, EXIT_PASS);
        assert_eq!(v["config"]["steps"], 0);
        assert!(v.get("experiments").is_none());
    }

    #[test]
    fn pn_table() {
        let (code, v) = report(&["table", "--kind", "pn", "--n", "2", "--q", "0.5"]);
        assert_eq!(code, EXIT_PASS);
        let m = v["matrix"].as_array().unwrap();
        assert_eq!(m.len(), 4);
        let entry = |i: usize, j: usize| m[i][j].as_f64().unwrap();
        // words ee, ef, fe, ff: swaps pair ef with fe at weight q
        assert_eq!(entry(0, 0), 1.5);
        assert_eq!(entry(1, 2), 0.5);
        assert_eq!(entry(1, 1), 1.0);
        assert_eq!(entry(0, 1), 0.0);
    }

    #[test]
    fn small_factoriality_run() {
        let (code, v) = report(&["factoriality", "--steps", "2", "--max-level", "4", "--t", "1"]);
        assert_eq!(code, EXIT_PASS);
        assert_eq!(v["experiments"].as_array().unwrap().len(), 1);
        assert_eq!(v["experiments"][0]["rows"].as_array().unwrap().len(), 2);
    }
}
