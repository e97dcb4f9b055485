use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::metrics::{density_phi, density_phi_tilde, norms, BoundInputs};
use crate::optimizers::{run, RecordFlags, RunConfig, TraceRow, Trajectory};
use crate::oracle::NoiseModel;
use crate::par;
use crate::problems::Problem;

pub const SUMMARY_COLUMNS: [&str; 20] = [
    "run_id", "seed", "d", "T", "eta", "delta", "method", "problem", "delta1", "avg_grad_l1",
    "min_grad_l1", "avg_grad_l2", "grad1_l1", "phi_grad1", "phi_tilde_L", "phi_sigma", "Q", "hT",
    "theorem_rhs", "status",
];

pub const TRACE_COLUMNS: [&str; 8] =
    ["t", "f_value", "grad_l1", "grad_l2", "grad_linf", "step_min", "step_max", "etahat_min"];

/// Shortest round-trip text; exponent form outside `[1e-4, 1e15)`.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// One summary CSV line. Undefined quantities are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub run_id: String,
    pub seed: u64,
    pub d: usize,
    pub horizon: usize,
    pub eta: f64,
    pub delta: f64,
    pub method: String,
    pub problem: String,
    pub delta1: f64,
    pub avg_grad_l1: f64,
    pub min_grad_l1: f64,
    pub avg_grad_l2: f64,
    pub grad1_l1: f64,
    pub phi_grad1: f64,
    pub phi_tilde_l: f64,
    pub phi_sigma: f64,
    pub q: f64,
    pub h_t: f64,
    /// Displayed bound when `delta < 1/d`, else the unsimplified variant.
    pub theorem_rhs: f64,
    /// `ok`, `diverged` or `error`.
    pub status: String,
}

impl SummaryRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn fields(&self) -> Vec<String> {
        let f = fmt_num;
        vec![
            self.run_id.clone(),
            self.seed.to_string(),
            self.d.to_string(),
            self.horizon.to_string(),
            f(self.eta),
            f(self.delta),
            self.method.clone(),
            self.problem.clone(),
            f(self.delta1),
            f(self.avg_grad_l1),
            f(self.min_grad_l1),
            f(self.avg_grad_l2),
            f(self.grad1_l1),
            f(self.phi_grad1),
            f(self.phi_tilde_l),
            f(self.phi_sigma),
            f(self.q),
            f(self.h_t),
            f(self.theorem_rhs),
            self.status.clone(),
        ]
    }
}

pub struct SeedResult {
    pub row: SummaryRow,
    /// `None` when the run failed.
    pub trajectory: Option<Trajectory>,
}

pub struct ExperimentOutput {
    pub results: Vec<SeedResult>,
    pub summary_path: PathBuf,
    pub trajectory_paths: Vec<PathBuf>,
}

/// Everything resolved from a config before any seed runs.
pub struct Prepared {
    pub problem: Problem,
    pub noise: NoiseModel,
    pub eta: f64,
    pub delta: f64,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let problem = cfg.build_problem()?;
    let noise = cfg.build_noise()?;
    let eta = cfg.resolve_eta(&problem, &noise)?;
    Ok(Prepared { eta, delta: cfg.resolve_delta(), problem, noise })
}

pub fn run_id(cfg: &ExperimentConfig, seed: u64) -> String {
    format!(
        "{}-{}-d{}-T{}-s{}",
        cfg.name, cfg.optimizer.method, cfg.problem.d, cfg.horizon, seed
    )
}

fn base_row(cfg: &ExperimentConfig, prep: &Prepared, seed: u64) -> SummaryRow {
    let p = &prep.problem;
    let nan = f64::NAN;
    SummaryRow {
        run_id: run_id(cfg, seed),
        seed,
        d: p.dim,
        horizon: cfg.horizon,
        eta: prep.eta,
        delta: prep.delta,
        method: cfg.optimizer.method.to_string(),
        problem: p.label().to_string(),
        delta1: p.delta1(),
        avg_grad_l1: nan,
        min_grad_l1: nan,
        avg_grad_l2: nan,
        grad1_l1: nan,
        phi_grad1: nan,
        phi_tilde_l: density_phi_tilde(&p.smoothness).unwrap_or(nan),
        phi_sigma: density_phi(&prep.noise.sigma).unwrap_or(nan),
        q: nan,
        h_t: nan,
        theorem_rhs: nan,
        status: "error".into(),
    }
}

/// Bound columns for a finished run.
pub fn bound_inputs(prep: &Prepared, horizon: usize, grad1: &[f64]) -> BoundInputs {
    BoundInputs {
        delta1: prep.problem.delta1(),
        eta: prep.eta,
        delta: prep.delta,
        sigma: prep.noise.sigma.clone(),
        smoothness: prep.problem.smoothness.clone(),
        grad1_l2: norms(grad1).1,
        horizon,
        dim: prep.problem.dim,
    }
}

/// Runs one seed; failures become a row with a non-`ok` status.
pub fn run_seed(cfg: &ExperimentConfig, prep: &Prepared, seed: u64) -> SeedResult {
    let mut row = base_row(cfg, prep, seed);
    let rc = RunConfig {
        method: cfg.optimizer.method,
        eta: prep.eta,
        delta: prep.delta,
        horizon: cfg.horizon,
        seed,
        flags: RecordFlags {
            records: false,
            trace: cfg.record.trajectory && !cfg.record.summary_only,
        },
    };
    let traj = match run(&prep.problem, &prep.noise, &rc) {
        Ok(t) => t,
        Err(Error::Diverged { .. }) => {
            row.status = "diverged".into();
            return SeedResult { row, trajectory: None };
        }
        Err(_) => return SeedResult { row, trajectory: None },
    };
    let s = &traj.summary;
    row.avg_grad_l1 = s.avg_grad_l1;
    row.min_grad_l1 = s.min_grad_l1;
    row.avg_grad_l2 = s.avg_grad_l2;
    row.grad1_l1 = norms(&s.grad1).0;
    row.phi_grad1 = density_phi(&s.grad1).unwrap_or(f64::NAN);
    let b = bound_inputs(prep, cfg.horizon, &s.grad1);
    if let (Ok(h), Ok(q)) = (b.h(), b.q()) {
        row.h_t = h;
        row.q = q;
        row.theorem_rhs = b
            .theorem_bound()
            .or_else(|_| b.theorem_bound_unsimplified())
            .unwrap_or(f64::NAN);
    }
    row.status = "ok".into();
    SeedResult { row, trajectory: Some(traj) }
}

/// All seeds of `cfg`, in seed-list order, without touching the disk.
pub fn run_seeds(cfg: &ExperimentConfig) -> Result<Vec<SeedResult>> {
    let prep = prepare(cfg)?;
    Ok(par::map(cfg.seeds.clone(), |seed| run_seed(cfg, &prep, seed)))
}

pub fn write_summary_csv<'a>(path: &Path, rows: impl IntoIterator<Item = &'a SummaryRow>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_csv(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRACE_COLUMNS)?;
    for r in trace {
        w.write_record([
            r.t.to_string(),
            fmt_num(r.f_value),
            fmt_num(r.grad_l1),
            fmt_num(r.grad_l2),
            fmt_num(r.grad_linf),
            fmt_num(r.step_min),
            fmt_num(r.step_max),
            fmt_num(r.etahat_min),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a summary CSV, locating columns by header name.
pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 20];
    for (k, col) in SUMMARY_COLUMNS.iter().enumerate() {
        idx[k] = headers.iter().position(|h| h.trim() == *col).ok_or_else(|| Error::MissingColumn {
            column: col.to_string(),
            path: path.to_path_buf(),
        })?;
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let s = |k: usize| rec.get(idx[k]).unwrap_or("").trim().to_string();
        let f = |k: usize| -> Result<f64> {
            s(k).parse().map_err(|_| {
                Error::InvalidArgument(format!("{}: column `{}` is not a number", path.display(), SUMMARY_COLUMNS[k]))
            })
        };
        let u = |k: usize| -> Result<u64> {
            s(k).parse().map_err(|_| {
                Error::InvalidArgument(format!("{}: column `{}` is not an integer", path.display(), SUMMARY_COLUMNS[k]))
            })
        };
        rows.push(SummaryRow {
            run_id: s(0),
            seed: u(1)?,
            d: u(2)? as usize,
            horizon: u(3)? as usize,
            eta: f(4)?,
            delta: f(5)?,
            method: s(6),
            problem: s(7),
            delta1: f(8)?,
            avg_grad_l1: f(9)?,
            min_grad_l1: f(10)?,
            avg_grad_l2: f(11)?,
            grad1_l1: f(12)?,
            phi_grad1: f(13)?,
            phi_tilde_l: f(14)?,
            phi_sigma: f(15)?,
            q: f(16)?,
            h_t: f(17)?,
            theorem_rhs: f(18)?,
            status: s(19),
        });
    }
    Ok(rows)
}

/// Runs every seed, then writes `<output_dir>/<name>_summary.csv` and, when
/// requested, one trajectory CSV per seed. Files are written after all runs
/// finish, in seed-list order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let results = run_seeds(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let summary_path = cfg.output_dir.join(format!("{}_summary.csv", cfg.name));
    write_summary_csv(&summary_path, results.iter().map(|r| &r.row))?;
    let mut trajectory_paths = Vec::new();
    if cfg.record.trajectory && !cfg.record.summary_only {
        let dir = cfg.output_dir.join("trajectories");
        fs::create_dir_all(&dir)?;
        for r in &results {
            if let Some(t) = &r.trajectory {
                let path = dir.join(format!("{}.csv", r.row.run_id));
                write_trajectory_csv(&path, &t.trace)?;
                trajectory_paths.push(path);
            }
        }
    }
    Ok(ExperimentOutput { results, summary_path, trajectory_paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::load_config;

    fn cfg(dir: &Path, extra: &str) -> ExperimentConfig {
        let text = format!(
            "problem.kind = quadratic\nproblem.d = 1\noptimizer.method = adagrad\noptimizer.eta = 1\n\
             optimizer.delta = 0\nT = 1\nseeds = [7]\noutput_dir = {}\n{extra}",
            dir.display()
        );
        load_config(&text).unwrap()
    }

    #[test]
    fn single_step_summary() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&cfg(dir.path(), "")).unwrap();
        let row = &out.results[0].row;
        assert_eq!(row.avg_grad_l1, 1.0);
        assert_eq!(row.status, "ok");
        // delta = 0 leaves h(T) undefined.
        assert!(row.h_t.is_nan());
        let back = read_summary_csv(&out.summary_path).unwrap();
        assert_eq!(back[0].avg_grad_l1, 1.0);
        assert_eq!(back[0].run_id, row.run_id);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let outs: Vec<_> = dirs
            .iter()
            .map(|dir| {
                let c = load_config(&format!(
                    "problem.kind = separable_nonconvex\nproblem.d = 8\noptimizer.method = adagrad_norm\n\
                     noise.scale = 0.5\nT = 200\nseeds = 0..6\nrecord.trajectory = true\noutput_dir = {}\n",
                    dir.path().display()
                ))
                .unwrap();
                run_experiment(&c).unwrap()
            })
            .collect();
        assert_eq!(fs::read(&outs[0].summary_path).unwrap(), fs::read(&outs[1].summary_path).unwrap());
        assert_eq!(outs[0].trajectory_paths.len(), 6);
        for (pa, pb) in outs[0].trajectory_paths.iter().zip(&outs[1].trajectory_paths) {
            assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
        }
    }

    #[test]
    fn divergence_is_a_row() {
        let dir = tempfile::tempdir().unwrap();
        let c = load_config(&format!(
            "problem.kind = quadratic\nproblem.d = 2\nproblem.scale = 10\noptimizer.method = sgd\n\
             optimizer.eta = 1\nT = 2000\nseeds = [1, 2]\noutput_dir = {}\n",
            dir.path().display()
        ))
        .unwrap();
        let out = run_experiment(&c).unwrap();
        assert!(out.results.iter().all(|r| r.row.status == "diverged"));
        assert_eq!(read_summary_csv(&out.summary_path).unwrap().len(), 2);
    }

    #[test]
    fn missing_column_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "run_id,seed\nx,1\n").unwrap();
        match read_summary_csv(&path) {
            Err(Error::MissingColumn { column, .. }) => assert_eq!(column, "d"),
            other => panic!("{:?}", other.map(|v| v.len())),
        }
    }
}
