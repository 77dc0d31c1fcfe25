use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kgres::condition::{check_condition, search_matrix, SearchOptions};
use kgres::reduced::ReducedSystem;
use kgres_cli::config::ConditionConfig;
use kgres_cli::run::SearchSummary;
use kgres_cli::{builtin_scenarios, load_scenario, refit, run_scenario, RunOptions, ScenarioConfig};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "kgres", version, about = "Cubic Klein-Gordon systems: resonance algebra, dissipativity checks and decay runs")]
struct Cli {
    /// parent directory for run outputs
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    /// suppress progress messages
    #[arg(long, global = true)]
    quiet: bool,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (TOML path or built-in name); writes `<out>/<name>/`
    Run {
        scenarios: Vec<String>,
        /// run several scenarios concurrently, each in its own directory
        #[arg(long)]
        batch: bool,
    },
    /// Check the matrix condition for a scenario's system
    CheckCondition {
        scenario: String,
        /// 0 (non-positive form), 1 or 3 (strict forms)
        #[arg(long)]
        k: Option<u32>,
        /// diagonal matrix entries, comma separated
        #[arg(long, value_delimiter = ',')]
        diag: Option<Vec<f64>>,
        /// search for a matrix
        #[arg(long)]
        search: bool,
    },
    /// Print the reduced nonlinearity
    Reduce { scenario: String },
    /// List built-in scenarios
    Scenarios {
        /// write each as `<dir>/<name>.toml`
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Recompute fits for an existing run directory
    Fit {
        dir: PathBuf,
        /// fit window `t_min,t_max`
        #[arg(long, value_delimiter = ',')]
        window: Option<Vec<f64>>,
    },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn verdict(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run_one(cfg: &ScenarioConfig, cli: &Cli) -> Result<bool, String> {
    let dir = cfg.output.clone().unwrap_or_else(|| cli.out.join(&cfg.name));
    let outcome = run_scenario(cfg, &dir, &RunOptions { quiet: cli.quiet }).map_err(|e| e.to_string())?;
    if !cli.quiet {
        for c in &outcome.report.checks {
            eprintln!("  {} {} = {:.4}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value);
        }
    }
    println!("{} {} -> {}", if outcome.pass() { "PASS" } else { "FAIL" }, cfg.name, dir.display());
    Ok(outcome.pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(e);
        }
    }
    match &cli.command {
        Command::Run { scenarios, batch } => {
            if scenarios.is_empty() {
                return fail("no scenario given");
            }
            if scenarios.len() > 1 && !batch {
                return fail("several scenarios need --batch");
            }
            let configs: Result<Vec<_>, _> = scenarios.iter().map(|s| load_scenario(s)).collect();
            let configs = match configs {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let results: Vec<Result<bool, String>> = if *batch {
                configs.par_iter().map(|c| run_one(c, &cli)).collect()
            } else {
                configs.iter().map(|c| run_one(c, &cli)).collect()
            };
            let mut all = true;
            for (name, r) in scenarios.iter().zip(results) {
                match r {
                    Ok(p) => all &= p,
                    Err(e) => {
                        eprintln!("error: {name}: {e}");
                        return ExitCode::from(2);
                    }
                }
            }
            verdict(all)
        }
        Command::CheckCondition { scenario, k, diag, search } => {
            let cfg = match load_scenario(scenario) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let sys = match cfg.system() {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let n = cfg.n_components();
            let mut cond = cfg.condition.clone().unwrap_or_else(|| ConditionConfig::diagonal(vec![1.0; n], 0));
            if let Some(d) = diag {
                cond.diagonal = Some(d.clone());
                cond.entries = None;
            }
            if let Some(k) = k {
                cond.exponent = *k;
            }
            let red = match ReducedSystem::<f64>::new(sys.masses, sys.nonlinearity) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            let spec = cond.sampling();
            if *search {
                let opts = SearchOptions { verify: spec, ..SearchOptions::default() };
                match search_matrix(&red, cond.exponent, &opts) {
                    Ok(o) => {
                        println!("{}", serde_json::to_string_pretty(&SearchSummary::from_outcome(&o)).expect("json"));
                        verdict(o.is_found())
                    }
                    Err(e) => fail(e),
                }
            } else {
                let a = match cond.matrix(n) {
                    Ok(Some(a)) => a,
                    Ok(None) => return fail("no matrix given; pass --diag or --search"),
                    Err(e) => return fail(e),
                };
                match check_condition(&a, &red, cond.exponent, &spec) {
                    Ok(r) => {
                        println!("{}", serde_json::to_string_pretty(&r).expect("json"));
                        verdict(r.pass)
                    }
                    Err(e) => fail(e),
                }
            }
        }
        Command::Reduce { scenario } => {
            let cfg = match load_scenario(scenario) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let red = match cfg.system().map_err(|e| e.to_string()).and_then(|s| {
                ReducedSystem::<f64>::new(s.masses, s.nonlinearity).map_err(|e| e.to_string())
            }) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            let terms = red.symbolic();
            if terms.is_empty() {
                println!("F^red = 0");
            }
            for t in terms {
                println!("{t}");
            }
            ExitCode::SUCCESS
        }
        Command::Scenarios { write } => {
            for s in builtin_scenarios() {
                println!("{:<24} {}", s.name, s.description);
                if let Some(dir) = write {
                    if let Err(e) = std::fs::create_dir_all(dir) {
                        return fail(e);
                    }
                    let path = dir.join(format!("{}.toml", s.name));
                    if let Err(e) = std::fs::write(&path, s.to_toml()) {
                        return fail(format!("{}: {e}", path.display()));
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Command::Fit { dir, window } => {
            let window = match window.as_deref() {
                None => None,
                Some(&[a, b]) => Some([a, b]),
                Some(_) => return fail("--window takes two values, `t_min,t_max`"),
            };
            match refit(dir, window) {
                Ok(r) => {
                    for c in &r.checks {
                        println!("{} {} = {:.4}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value);
                    }
                    verdict(r.pass)
                }
                Err(e) => fail(e),
            }
        }
    }
}
