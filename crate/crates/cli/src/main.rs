use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use morreylab::harness::suites::counterexample_sweep;
use morreylab::morrey::{validate_trace_params, TraceParams};
use morreylab::suite::{describe, parse_config, run_suite, write_sweep_csv};
use morreylab::INEQUALITY_IDS;

#[derive(Parser)]
#[command(name = "morreylab", version, about = "Empirical checks of Morrey-space inequalities")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "MORREYLAB_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the suites described by a TOML config; exits 0 iff all pass.
    Run {
        config: PathBuf,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the registered inequality IDs.
    List,
    /// Check a trace parameter tuple against the admissible window.
    ValidateParams {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        mu: f64,
    },
    /// Sweep the counterexample family down to `kappa_min`.
    Sweep {
        #[arg(long, default_value_t = 0.0625)]
        kappa_min: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 65)]
        n: usize,
        /// Also write the log-log table here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("thread pool")?;
    }
    match cli.cmd {
        Cmd::Run { config, out } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = parse_config(&text)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            let (reports, summary) = run_suite(&cfg)?;
            for r in &reports {
                let c = r.empirical_constant.map_or("null".into(), |c| format!("{c:.4}"));
                let d = r.scale_drift.map_or("null".into(), |d| format!("{d:.3}"));
                let status = if r.pass { "PASS" } else { "FAIL" };
                println!("{status} {:<20} C = {c:<10} drift = {d:<8} cases = {}", r.inequality_id, r.cases.len());
                if let Some(reason) = &r.reason {
                    println!("     {reason}");
                }
            }
            println!("reports in {}", cfg.output_dir.display());
            Ok(summary.all_pass)
        }
        Cmd::List => {
            for id in INEQUALITY_IDS {
                println!("{id:<20} {}", describe(id));
            }
            Ok(true)
        }
        Cmd::ValidateParams { d, p, q, r, beta, gamma, mu } => {
            let v = validate_trace_params(d, &TraceParams { p, q, r, beta, gamma, mu });
            println!("{}", serde_json::to_string_pretty(&v)?);
            Ok(v.valid)
        }
        Cmd::Sweep { kappa_min, p, d, n, csv } => {
            anyhow::ensure!(kappa_min > 0.0 && kappa_min <= 0.25, "kappa_min must lie in (0, 1/4]");
            let mut kappas = vec![0.25];
            while kappas.last().unwrap() / 2.0 >= kappa_min * (1.0 - 1e-12) {
                kappas.push(kappas.last().unwrap() / 2.0);
            }
            let res = counterexample_sweep(&kappas, p, d, n)?;
            if let Some(path) = csv {
                write_sweep_csv(&res, &path)?;
            }
            println!("{}", serde_json::to_string_pretty(&res)?);
            Ok(true)
        }
    }
}
