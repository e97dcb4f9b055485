use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adalab::harness::{self, SweepMetric, SweepSpec};
use adalab::lower_bound::{query_complexity_trial, TrialMethod};
use adalab::par;

#[derive(Parser)]
#[command(name = "adalab", version, about = "AdaGrad / SGD l1-rate experiments and lower-bound trials")]
struct Cli {
    /// Worker threads for seed and cell parallelism.
    #[arg(long, global = true, env = "ADALAB_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every seed of one config and write summary/trajectory CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a (d, T) grid and fit the rate exponents.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        d_grid: Vec<usize>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        t_grid: Vec<usize>,
        #[arg(long, default_value = "avg_grad_l1")]
        metric: SweepMetric,
    },
    /// Bound and AdaGrad-vs-SGD tables plus plot data from summary CSVs.
    Report {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Run a method against the resisting oracle and certify the instance.
    Lowerbound {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        eps: f64,
        /// gd | adagrad | adagrad_norm
        #[arg(long)]
        method: String,
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value_t = 1e-8)]
        delta: f64,
        #[arg(long, default_value = "lowerbound_report.txt")]
        report: PathBuf,
    },
    /// Run the invariant suite.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        par::set_workers(n);
    }
    match dispatch(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Cmd) -> adalab::Result<bool> {
    match cmd {
        Cmd::Run { config } => {
            let cfg = harness::load_config_file(&config)?;
            let out = harness::run_experiment(&cfg)?;
            let failed = out.results.iter().filter(|r| !r.row.is_ok()).count();
            println!(
                "{} seeds, {} failed; summary: {}",
                out.results.len(),
                failed,
                out.summary_path.display()
            );
            Ok(true)
        }
        Cmd::Sweep { config, d_grid, t_grid, metric } => {
            let base = harness::load_config_file(&config)?;
            let out = harness::sweep(&SweepSpec { base, d_grid, t_grid, metric })?;
            for c in &out.cells {
                println!("d = {:>6}  T = {:>8}  {} = {:.6e}  failed = {}", c.d, c.horizon, metric.name(), c.metric, c.n_failed);
            }
            match (&out.fit, &out.fit_note) {
                (Some(f), _) => println!(
                    "fit: alpha_d = {:.4}  beta_T = {:.4}  R^2 = {:.4}",
                    f.alpha_d, f.beta_t, f.r_squared
                ),
                (None, note) => println!("fit skipped: {}", note.as_deref().unwrap_or("")),
            }
            if let Some(p) = &out.grid_path {
                println!("grid: {}", p.display());
            }
            Ok(true)
        }
        Cmd::Report { csv, out } => {
            let r = harness::report(&csv, &out)?;
            print!("{}", std::fs::read_to_string(out.join("report.txt"))?);
            println!("{} files written to {}", r.files.len(), out.display());
            Ok(true)
        }
        Cmd::Lowerbound { d, eps, method, budget, eta, delta, report } => {
            let m = match method.as_str() {
                "gd" | "sgd" => TrialMethod::gradient_descent(eta),
                "adagrad" => TrialMethod::adagrad(eta, delta),
                "adagrad_norm" => TrialMethod::adagrad_norm(eta, delta),
                other => {
                    return Err(adalab::Error::InvalidArgument(format!("unknown method `{other}`")))
                }
            };
            let out = query_complexity_trial(&m, d, eps, budget)?;
            let ok = out.report.passed() && out.contract_holds();
            let text = format!(
                "method = {method}\nbudget = {budget}\nqueries_used = {}\nthreshold = {}\nfinal_grad_l1 = {}\ncontract_holds = {}\n{}",
                out.queries_used,
                out.threshold,
                out.final_grad_l1,
                out.contract_holds(),
                out.report
            );
            std::fs::write(&report, text)?;
            println!(
                "{}: {method} d={d} eps={eps} queries={} threshold={:.3} ||grad p(x_hat)||_1={:.6e} instance={} (report: {})",
                if ok { "PASS" } else { "FAIL" },
                out.queries_used,
                out.threshold,
                out.final_grad_l1,
                if out.report.passed() { "verified" } else { "rejected" },
                report.display()
            );
            Ok(ok)
        }
        Cmd::Verify => {
            let checks = harness::verify_suite()?;
            let mut all = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                all &= c.passed;
            }
            Ok(all)
        }
    }
}
