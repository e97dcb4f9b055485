use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::{read_summary_csv, SummaryRow};
use crate::error::{Error, Result};
use crate::metrics::r1_r2;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub method: String,
    pub problem: String,
    pub d: usize,
    pub horizon: usize,
    pub seeds: usize,
    pub avg_grad_l1: f64,
    pub q: f64,
    pub theorem_rhs: f64,
    /// `theorem_rhs - avg_grad_l1`; positive means the bound holds.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub problem: String,
    pub d: usize,
    pub horizon: usize,
    pub adagrad_min_l1: f64,
    pub sgd_min_l1: f64,
    /// SGD over AdaGrad; above 1 means AdaGrad wins.
    pub ratio: f64,
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone)]
pub struct ReportOutput {
    pub bounds: Vec<BoundRow>,
    pub comparison: Vec<ComparisonRow>,
    pub files: Vec<PathBuf>,
}

fn mean(rows: &[&SummaryRow], f: impl Fn(&SummaryRow) -> f64) -> f64 {
    rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64
}

pub fn bound_table(rows: &[SummaryRow]) -> Vec<BoundRow> {
    let mut groups: BTreeMap<(String, String, usize, usize), Vec<&SummaryRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        groups.entry((r.method.clone(), r.problem.clone(), r.d, r.horizon)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((method, problem, d, horizon), g)| {
            let emp = mean(&g, |r| r.avg_grad_l1);
            let rhs = mean(&g, |r| r.theorem_rhs);
            BoundRow {
                method,
                problem,
                d,
                horizon,
                seeds: g.len(),
                avg_grad_l1: emp,
                q: mean(&g, |r| r.q),
                theorem_rhs: rhs,
                margin: rhs - emp,
            }
        })
        .collect()
}

pub fn comparison_table(rows: &[SummaryRow]) -> Vec<ComparisonRow> {
    type Key = (String, usize, usize);
    let mut ada: BTreeMap<Key, Vec<&SummaryRow>> = BTreeMap::new();
    let mut sgd: BTreeMap<Key, Vec<&SummaryRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        let key = (r.problem.clone(), r.d, r.horizon);
        match r.method.as_str() {
            "adagrad" => ada.entry(key).or_default().push(r),
            "sgd" => sgd.entry(key).or_default().push(r),
            _ => {}
        }
    }
    let mut out = Vec::new();
    for (key, a) in &ada {
        let Some(s) = sgd.get(key) else { continue };
        let a_min = mean(a, |r| r.min_grad_l1);
        let s_min = mean(s, |r| r.min_grad_l1);
        let (r1, r2) = r1_r2(mean(a, |r| r.phi_grad1), mean(a, |r| r.phi_tilde_l), mean(a, |r| r.phi_sigma))
            .unwrap_or((f64::NAN, f64::NAN));
        out.push(ComparisonRow {
            problem: key.0.clone(),
            d: key.1,
            horizon: key.2,
            adagrad_min_l1: a_min,
            sgd_min_l1: s_min,
            ratio: s_min / a_min,
            r1,
            r2,
        });
    }
    out
}

fn write_series(dir: &Path, name: &str, pts: &[(f64, f64)], files: &mut Vec<PathBuf>) -> Result<()> {
    let mut text = String::new();
    for (x, y) in pts {
        let _ = writeln!(text, "{x} {y}");
    }
    let path = dir.join(name);
    fs::write(&path, text)?;
    files.push(path);
    Ok(())
}

/// Reads summary CSVs and writes `bounds.csv`, `comparison.csv`,
/// `report.txt` and one `plot_*.dat` series per curve into `out_dir`.
pub fn report(paths: &[PathBuf], out_dir: &Path) -> Result<ReportOutput> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("report needs at least one summary CSV".into()));
    }
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(read_summary_csv(p)?);
    }
    fs::create_dir_all(out_dir)?;
    let bounds = bound_table(&rows);
    let comparison = comparison_table(&rows);
    let mut files = Vec::new();

    let mut csv_text = String::from("method,problem,d,T,seeds,avg_grad_l1,Q,theorem_rhs,margin\n");
    let mut txt = String::from("Bound vs empirics (seed means)\n");
    let _ = writeln!(
        txt,
        "{:<13} {:<20} {:>6} {:>8} {:>5} {:>13} {:>13} {:>13} {:>13}",
        "method", "problem", "d", "T", "seeds", "avg_grad_l1", "Q", "theorem_rhs", "margin"
    );
    for b in &bounds {
        let _ = writeln!(
            csv_text,
            "{},{},{},{},{},{},{},{},{}",
            b.method, b.problem, b.d, b.horizon, b.seeds, b.avg_grad_l1, b.q, b.theorem_rhs, b.margin
        );
        let _ = writeln!(
            txt,
            "{:<13} {:<20} {:>6} {:>8} {:>5} {:>13.6e} {:>13.6e} {:>13.6e} {:>13.6e}",
            b.method, b.problem, b.d, b.horizon, b.seeds, b.avg_grad_l1, b.q, b.theorem_rhs, b.margin
        );
    }
    let path = out_dir.join("bounds.csv");
    fs::write(&path, csv_text)?;
    files.push(path);

    let mut csv_text = String::from("problem,d,T,adagrad_min_l1,sgd_min_l1,ratio,R1,R2\n");
    let _ = writeln!(txt, "\nAdaGrad vs SGD (min_grad_l1, seed means)");
    let _ = writeln!(
        txt,
        "{:<20} {:>6} {:>8} {:>13} {:>13} {:>10} {:>10} {:>10}",
        "problem", "d", "T", "adagrad", "sgd", "ratio", "R1", "R2"
    );
    for c in &comparison {
        let _ = writeln!(
            csv_text,
            "{},{},{},{},{},{},{},{}",
            c.problem, c.d, c.horizon, c.adagrad_min_l1, c.sgd_min_l1, c.ratio, c.r1, c.r2
        );
        let _ = writeln!(
            txt,
            "{:<20} {:>6} {:>8} {:>13.6e} {:>13.6e} {:>10.4} {:>10.4} {:>10.4}",
            c.problem, c.d, c.horizon, c.adagrad_min_l1, c.sgd_min_l1, c.ratio, c.r1, c.r2
        );
    }
    let path = out_dir.join("comparison.csv");
    fs::write(&path, csv_text)?;
    files.push(path);
    let path = out_dir.join("report.txt");
    fs::write(&path, txt)?;
    files.push(path);

    // Curves: metric against d per (method, problem, T) and against T per
    // (method, problem, d); the bound gets its own curve next to each.
    let mut vs_d: BTreeMap<(String, String, usize), Vec<&BoundRow>> = BTreeMap::new();
    let mut vs_t: BTreeMap<(String, String, usize), Vec<&BoundRow>> = BTreeMap::new();
    for b in &bounds {
        vs_d.entry((b.method.clone(), b.problem.clone(), b.horizon)).or_default().push(b);
        vs_t.entry((b.method.clone(), b.problem.clone(), b.d)).or_default().push(b);
    }
    for ((m, p, t), g) in &vs_d {
        let emp: Vec<_> = g.iter().map(|b| (b.d as f64, b.avg_grad_l1)).collect();
        let rhs: Vec<_> = g.iter().map(|b| (b.d as f64, b.theorem_rhs)).collect();
        write_series(out_dir, &format!("plot_{m}_{p}_T{t}_avg_l1_vs_d.dat"), &emp, &mut files)?;
        write_series(out_dir, &format!("plot_{m}_{p}_T{t}_bound_vs_d.dat"), &rhs, &mut files)?;
    }
    for ((m, p, d), g) in &vs_t {
        let emp: Vec<_> = g.iter().map(|b| (b.horizon as f64, b.avg_grad_l1)).collect();
        let rhs: Vec<_> = g.iter().map(|b| (b.horizon as f64, b.theorem_rhs)).collect();
        write_series(out_dir, &format!("plot_{m}_{p}_d{d}_avg_l1_vs_T.dat"), &emp, &mut files)?;
        write_series(out_dir, &format!("plot_{m}_{p}_d{d}_bound_vs_T.dat"), &rhs, &mut files)?;
    }
    let mut by_problem: BTreeMap<(String, usize), Vec<&ComparisonRow>> = BTreeMap::new();
    for c in &comparison {
        by_problem.entry((c.problem.clone(), c.horizon)).or_default().push(c);
    }
    for ((p, t), g) in &by_problem {
        let pts: Vec<_> = g.iter().map(|c| (c.d as f64, c.ratio)).collect();
        write_series(out_dir, &format!("plot_ratio_{p}_T{t}_vs_d.dat"), &pts, &mut files)?;
    }
    Ok(ReportOutput { bounds, comparison, files })
}
