use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ssmd::config::{parse_config, ExperimentConfig};
use ssmd::error::{HarnessError, Result};
use ssmd::experiment::{best_of, bound_curves, build_instance, run_sweep};
use ssmd::output::emit_csv;
use ssmd::verify::verify_suite;

#[derive(Parser)]
#[command(name = "ssmd", version, about = "Stochastic subgradient mirror descent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo experiment and write CSV summaries.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the stepsize schedules for k = 0..=KMAX.
    Verify {
        #[arg(long = "kmax", default_value_t = 100_000)]
        k_max: usize,
    },
    /// Print the reference optimal value of the configured instance.
    Reference {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Print the theoretical bound curve of the configured experiment.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(parse_config(&text)?)
}

fn experiment(config_path: &Path, out: Option<PathBuf>) -> Result<()> {
    let config = load(config_path)?;
    let dir = match out.or_else(|| config.out.clone().map(PathBuf::from)) {
        Some(d) => d,
        None => {
            return Err(ssmd::ConfigError::Invalid(vec!["no output directory: pass --out or set `out`".into()]).into())
        }
    };
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let summaries = run_sweep(&config)?;
    if summaries.len() > 1 {
        let mut table = String::from("a,final_mean_f_avg,final_stderr_f_avg\n");
        for (i, s) in summaries.iter().enumerate() {
            emit_csv(s, &dir.join(format!("sweep_{i}.csv")))?;
            let a = s.metadata.a.expect("compact summaries carry a");
            table.push_str(&format!("{a:?},{:?},{:?}\n", s.final_mean(), s.stderr_f_avg.last().unwrap()));
        }
        let path = dir.join("sweep.csv");
        fs::write(&path, table).map_err(|e| HarnessError::io(path, e))?;
    }
    let best = best_of(summaries);
    emit_csv(&best, &dir.join("summary.csv"))?;
    println!("{}", dir.join("summary.csv").display());
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Experiment { config, out } => experiment(&config, out).map(|_| true),
        Command::Verify { k_max } => {
            if k_max < 1 {
                return Err(ssmd::ConfigError::Invalid(vec!["--kmax must be at least 1".into()]).into());
            }
            let report = verify_suite(k_max);
            print!("{report}");
            Ok(report.passed())
        }
        Command::Reference { config, tol } => {
            let config = load(&config)?;
            let tol = tol.unwrap_or(config.reference_tol);
            if !(tol > 0.0) {
                return Err(ssmd::ConfigError::Invalid(vec!["--tol must be positive".into()]).into());
            }
            let (_, f_ref) = build_instance(&config)?.reference_solution(tol)?;
            println!("{f_ref:?}");
            Ok(true)
        }
        Command::Bounds { config } => {
            let config = load(&config)?;
            for (a, curve) in bound_curves(&config)? {
                match a {
                    Some(a) => println!("# a = {a:?}\nk,bound"),
                    None => println!("k,bound"),
                }
                for (k, b) in curve {
                    println!("{k},{b:?}");
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
