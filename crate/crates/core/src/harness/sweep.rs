use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use super::config::ExperimentConfig;
use super::experiment::{prepare, run_seed, write_summary_csv, Prepared, SummaryRow};
use crate::error::{Error, Result};
use crate::metrics::{fit_rate, RateFit};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMetric {
    #[default]
    AvgGradL1,
    MinGradL1,
    AvgGradL2,
}

impl SweepMetric {
    pub fn name(self) -> &'static str {
        match self {
            Self::AvgGradL1 => "avg_grad_l1",
            Self::MinGradL1 => "min_grad_l1",
            Self::AvgGradL2 => "avg_grad_l2",
        }
    }

    pub fn of(self, row: &SummaryRow) -> f64 {
        match self {
            Self::AvgGradL1 => row.avg_grad_l1,
            Self::MinGradL1 => row.min_grad_l1,
            Self::AvgGradL2 => row.avg_grad_l2,
        }
    }
}

impl FromStr for SweepMetric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "avg_grad_l1" => Ok(Self::AvgGradL1),
            "min_grad_l1" => Ok(Self::MinGradL1),
            "avg_grad_l2" => Ok(Self::AvgGradL2),
            _ => Err(format!("unknown metric `{s}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    pub d_grid: Vec<usize>,
    pub t_grid: Vec<usize>,
    pub metric: SweepMetric,
}

/// Seed-averaged results of one `(d, T)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub d: usize,
    pub horizon: usize,
    pub metric: f64,
    pub theorem_rhs: f64,
    pub q: f64,
    /// Seed mean of the weighted squared-gradient sum.
    pub weighted_grad_sum: f64,
    /// Diagnostic violation counts summed over seeds.
    pub etahat_violations: usize,
    pub growth_violations: usize,
    pub step_increases: usize,
    pub n_ok: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub cells: Vec<CellResult>,
    pub rows: Vec<SummaryRow>,
    pub fit: Option<RateFit>,
    /// Why the fit was skipped.
    pub fit_note: Option<String>,
    pub grid_path: Option<PathBuf>,
    pub summary_path: Option<PathBuf>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 { f64::NAN } else { s / n as f64 }
}

fn try_fit(cells: &[CellResult]) -> (Option<RateFit>, Option<String>) {
    let samples: Vec<_> = cells
        .iter()
        .filter(|c| c.n_ok > 0 && c.metric > 0.0 && c.metric.is_finite())
        .map(|c| (c.d, c.horizon, c.metric))
        .collect();
    match fit_rate(&samples) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn validate(spec: &SweepSpec) -> Result<()> {
    if spec.d_grid.is_empty() || spec.t_grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grids must be non-empty".into()));
    }
    if spec.d_grid.contains(&0) || spec.t_grid.contains(&0) {
        return Err(Error::InvalidArgument("grid values must be >= 1".into()));
    }
    Ok(())
}

/// Runs the grid without writing files. Work is spread over every
/// `(cell, seed)` pair and merged back in grid order.
pub fn sweep_in_memory(spec: &SweepSpec) -> Result<SweepOutput> {
    validate(spec)?;
    let mut cells_cfg: Vec<(ExperimentConfig, Prepared)> = Vec::new();
    for &d in &spec.d_grid {
        for &t in &spec.t_grid {
            let cfg = spec.base.with_dim(d).with_horizon(t);
            let prep = prepare(&cfg)?;
            cells_cfg.push((cfg, prep));
        }
    }
    let jobs: Vec<(usize, u64)> = (0..cells_cfg.len())
        .flat_map(|c| spec.base.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let results = par::map(jobs, |(c, seed)| {
        let (cfg, prep) = &cells_cfg[c];
        let r = run_seed(cfg, prep, seed);
        let diag = r.trajectory.map(|t| t.diagnostics);
        (c, r.row, diag)
    });

    let mut cells = Vec::with_capacity(cells_cfg.len());
    for (c, (cfg, _)) in cells_cfg.iter().enumerate() {
        let mine: Vec<_> = results.iter().filter(|r| r.0 == c).collect();
        let ok: Vec<_> = mine.iter().filter(|r| r.1.is_ok()).collect();
        cells.push(CellResult {
            d: cfg.problem.d,
            horizon: cfg.horizon,
            metric: mean(ok.iter().map(|r| spec.metric.of(&r.1))),
            theorem_rhs: mean(ok.iter().map(|r| r.1.theorem_rhs)),
            q: mean(ok.iter().map(|r| r.1.q)),
            weighted_grad_sum: mean(ok.iter().filter_map(|r| r.2.as_ref().map(|g| g.weighted_grad_sum))),
            etahat_violations: ok.iter().filter_map(|r| r.2.as_ref()).map(|g| g.etahat_violations).sum(),
            growth_violations: ok.iter().filter_map(|r| r.2.as_ref()).map(|g| g.growth_violations).sum(),
            step_increases: ok.iter().filter_map(|r| r.2.as_ref()).map(|g| g.step_increases).sum(),
            n_ok: ok.len(),
            n_failed: mine.len() - ok.len(),
        });
    }
    let (fit, fit_note) = try_fit(&cells);
    Ok(SweepOutput {
        cells,
        rows: results.into_iter().map(|r| r.1).collect(),
        fit,
        fit_note,
        grid_path: None,
        summary_path: None,
    })
}

/// Test mode: fills every cell from `metric(d, T)` instead of running.
pub fn sweep_synthetic(spec: &SweepSpec, metric: impl Fn(usize, usize) -> f64) -> Result<SweepOutput> {
    validate(spec)?;
    let mut cells = Vec::new();
    for &d in &spec.d_grid {
        for &t in &spec.t_grid {
            cells.push(CellResult {
                d,
                horizon: t,
                metric: metric(d, t),
                theorem_rhs: f64::NAN,
                q: f64::NAN,
                weighted_grad_sum: f64::NAN,
                etahat_violations: 0,
                growth_violations: 0,
                step_increases: 0,
                n_ok: 1,
                n_failed: 0,
            });
        }
    }
    let (fit, fit_note) = try_fit(&cells);
    Ok(SweepOutput { cells, rows: Vec::new(), fit, fit_note, grid_path: None, summary_path: None })
}

/// Runs the grid and writes `<name>_sweep_summary.csv` (one row per seed)
/// and `<name>_grid.csv` (one row per cell, fit appended as comments).
pub fn sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    let mut out = sweep_in_memory(spec)?;
    let dir = &spec.base.output_dir;
    fs::create_dir_all(dir)?;
    let summary_path = dir.join(format!("{}_sweep_summary.csv", spec.base.name));
    write_summary_csv(&summary_path, &out.rows)?;
    let grid_path = dir.join(format!("{}_grid.csv", spec.base.name));
    write_grid(&grid_path, spec.metric, &out)?;
    out.summary_path = Some(summary_path);
    out.grid_path = Some(grid_path);
    Ok(out)
}

fn write_grid(path: &std::path::Path, metric: SweepMetric, out: &SweepOutput) -> Result<()> {
    let mut text = format!("d,T,{},theorem_rhs,Q,n_ok,n_failed\n", metric.name());
    for c in &out.cells {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.d, c.horizon, c.metric, c.theorem_rhs, c.q, c.n_ok, c.n_failed
        ));
    }
    match (&out.fit, &out.fit_note) {
        (Some(f), _) => text.push_str(&format!(
            "# fit alpha_d = {} beta_T = {} intercept = {} r_squared = {}\n",
            f.alpha_d, f.beta_t, f.intercept, f.r_squared
        )),
        (None, Some(note)) => text.push_str(&format!("# fit skipped: {note}\n")),
        (None, None) => {}
    }
    fs::write(path, text)?;
    Ok(())
}
