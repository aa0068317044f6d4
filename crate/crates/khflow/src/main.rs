use clap::{Parser, Subcommand};
use khflow::compare::{compare, load_series};
use khflow::config::RunConfig;
use khflow::driver;
use khflow::perturb::DEFAULT_THRESHOLD;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "khflow", version, about = "Kelvin-Helmholtz benchmark runs with a divergence-free H(div) DG solver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a simulation described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `key=value`, dotted keys reach tables (e.g. perturbation.kind=solver_rtol).
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Compare two QoI time series over [0, tmax] (times in units of t̄).
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        tmax: f64,
        #[arg(long = "tol-k", default_value_t = 0.01)]
        tol_k: f64,
        #[arg(long = "tol-e", default_value_t = 0.01)]
        tol_e: f64,
        #[arg(long = "tol-p", default_value_t = 0.05)]
        tol_p: f64,
    },
    /// Run the config with and without its perturbation and report divergence.
    Pair {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            match e {
                khflow::Error::Config(list) => {
                    eprintln!("configuration invalid:");
                    for l in list {
                        eprintln!("  - {l}");
                    }
                }
                e => eprintln!("error: {e}"),
            }
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool, khflow::Error> {
    match Cli::parse().cmd {
        Cmd::Run { config, overrides } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            let out = driver::run(&cfg)?;
            let last = out.records.last().copied().unwrap_or_default();
            println!(
                "{} run finished: {} steps, t/tbar = {:.3}, K = {:.6e}, E = {:.6e}, P = {:.6e}",
                out.engine, out.steps, last.t_over_tbar, last.k, last.e, last.p
            );
            if let Some(s) = out.refinements {
                println!("refinements per solve: mean {:.2}, max {}", s.mean(), s.max);
            }
            for w in &out.warnings {
                println!("note: {w}");
            }
            println!("outputs in {} (config hash {})", cfg.output_dir.display(), out.config_hash);
            Ok(true)
        }
        Cmd::Compare { a, b, tmax, tol_k, tol_e, tol_p } => {
            let (sa, sb) = (load_series(&a)?, load_series(&b)?);
            let rows = compare(&sa, &sb, tmax, &[("K", tol_k), ("E", tol_e), ("P", tol_p)])?;
            println!("qoi,max_rel_deviation,at_t_over_tbar,tolerance,result");
            for r in &rows {
                println!(
                    "{},{:.6e},{:.4},{:e},{}",
                    r.qoi,
                    r.max_rel_deviation,
                    r.at_tbar,
                    r.tolerance,
                    if r.pass { "pass" } else { "fail" }
                );
            }
            Ok(rows.iter().all(|r| r.pass))
        }
        Cmd::Pair { config, overrides, threshold } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            let (_, _, rep) = driver::run_pair(&cfg, threshold)?;
            print!("{}", rep.summary());
            Ok(rep.failure.is_none())
        }
    }
}
