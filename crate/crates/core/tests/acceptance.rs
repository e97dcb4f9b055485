//! Acceptance criteria A1 to A8. Each test writes one `A<k> PASS|FAIL` line
//! straight to stdout (visible without `--nocapture`) and then asserts.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use adalab::harness::experiment::run_seeds;
use adalab::harness::sweep::{sweep_in_memory, CellResult, SweepMetric, SweepOutput, SweepSpec};
use adalab::harness::{load_config, ExperimentConfig};
use adalab::lower_bound::{query_complexity_trial, query_threshold, TrialMethod};
use adalab::metrics::{
    density_phi, density_phi_tilde, fit_power_law, log_sum_lemma_check, norms, r1_r2,
};
use adalab::oracle::estimate_noise_stats;
use adalab::problems::make_quadratic;
use adalab::{Method, NoiseDistribution, NoiseModel, OptimizerState};

fn verdict(id: &str, pass: bool, detail: &str) {
    let line = format!("{id} {}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn config(text: &str) -> ExperimentConfig {
    load_config(text).expect("acceptance config")
}

const WORST_CASE: &str = "problem.kind = quadratic\nproblem.d = 4\nproblem.scale = 1\n\
    optimizer.method = adagrad\noptimizer.eta_rule = inv_sqrt_d\noptimizer.delta_rule = half_inv_d\n\
    T = 100\nseeds = [0]\n";

struct Timed<T> {
    value: T,
    elapsed: Duration,
}

fn timed<T>(f: impl FnOnce() -> T) -> Timed<T> {
    let start = Instant::now();
    let value = f();
    Timed { value, elapsed: start.elapsed() }
}

/// A1 grid: noiseless quadratic, one seed.
fn a1_sweep() -> &'static Timed<SweepOutput> {
    static CELL: OnceLock<Timed<SweepOutput>> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = SweepSpec {
            base: config(WORST_CASE),
            d_grid: vec![4, 16, 64, 256],
            t_grid: vec![100, 1_000, 10_000, 100_000],
            metric: SweepMetric::AvgGradL1,
        };
        timed(|| sweep_in_memory(&spec).expect("A1 sweep"))
    })
}

/// A2 grid: Rademacher sigma_i = 1, d = 16, 100 seeds.
fn a2_sweep() -> &'static Timed<SweepOutput> {
    static CELL: OnceLock<Timed<SweepOutput>> = OnceLock::new();
    CELL.get_or_init(|| {
        let text = format!("{WORST_CASE}noise.profile = constant\nnoise.scale = 1\nnoise.distribution = rademacher\n")
            .replace("seeds = [0]", "seeds = 0..100");
        let spec = SweepSpec {
            base: config(&text),
            d_grid: vec![16],
            t_grid: vec![1_000, 10_000, 100_000],
            metric: SweepMetric::AvgGradL1,
        };
        timed(|| sweep_in_memory(&spec).expect("A2 sweep"))
    })
}

#[test]
fn a1_worst_case_noiseless_rate() {
    let run = a1_sweep();
    let out = &run.value;
    let all_ok = out.cells.iter().all(|c| c.n_ok == 1);
    let fit = out.fit.expect("A1 fit");
    let beta_ok = (-0.6..=-0.4).contains(&fit.beta_t);
    let alpha_ok = (0.3..=0.7).contains(&fit.alpha_d);
    let r2_ok = fit.r_squared >= 0.95;
    let time_ok = run.elapsed <= Duration::from_secs(600);
    let pass = all_ok && beta_ok && alpha_ok && r2_ok && time_ok;
    verdict(
        "A1",
        pass,
        &format!(
            "beta_T = {:.4} (need [-0.6, -0.4]), alpha_d = {:.4} (need [0.3, 0.7]), R^2 = {:.4} (need >= 0.95), {:.1}s",
            fit.beta_t,
            fit.alpha_d,
            fit.r_squared,
            run.elapsed.as_secs_f64()
        ),
    );
    assert!(all_ok, "A1: some runs failed");
    assert!(beta_ok, "A1: beta_T = {} outside [-0.6, -0.4]", fit.beta_t);
    assert!(alpha_ok, "A1: alpha_d = {} outside [0.3, 0.7]", fit.alpha_d);
    assert!(r2_ok, "A1: R^2 = {}", fit.r_squared);
    assert!(time_ok);
}

#[test]
fn a2_noise_dominated_rate() {
    let run = a2_sweep();
    let pts: Vec<(f64, f64)> = run.value.cells.iter().map(|c| (c.horizon as f64, c.metric)).collect();
    let fit = fit_power_law(&pts).expect("A2 fit");
    let all_ok = run.value.cells.iter().all(|c| c.n_ok == 100);
    let slope_ok = (-0.35..=-0.15).contains(&fit.exponent);
    let time_ok = run.elapsed <= Duration::from_secs(1200);
    let pass = all_ok && slope_ok && time_ok;
    verdict(
        "A2",
        pass,
        &format!(
            "T-exponent = {:.4} (need [-0.35, -0.15]), R^2 = {:.4}, {:.1}s",
            fit.exponent,
            fit.r_squared,
            run.elapsed.as_secs_f64()
        ),
    );
    assert!(all_ok && slope_ok && time_ok, "A2: exponent {}", fit.exponent);
}

struct GapResult {
    ratios: Vec<(f64, f64)>,
    slope: f64,
    r1_r2: Vec<(usize, f64, f64)>,
}

fn geometry_gap(kind: &str, profile: &str) -> GapResult {
    let dims = [16usize, 64, 256];
    let mut ratios = Vec::new();
    let mut rs = Vec::new();
    for &d in &dims {
        let common = format!(
            "problem.kind = {kind}\nproblem.d = {d}\nproblem.scale = 1\nproblem.plateau = 3\n\
             noise.profile = {profile}\nnoise.scale = 1e-4\nnoise.distribution = rademacher\n\
             T = 10000\nseeds = 0..50\n"
        );
        let ada = config(&format!(
            "{common}optimizer.method = adagrad\noptimizer.eta = 0.5\noptimizer.delta = 1e-8\n"
        ));
        let sgd = config(&format!("{common}optimizer.method = sgd\noptimizer.eta_rule = sgd_tuned\n"));
        let mean_min = |c: &ExperimentConfig| {
            let res = run_seeds(c).expect("A3 run");
            assert!(res.iter().all(|r| r.row.is_ok()), "A3: a run failed");
            let m = res.iter().map(|r| r.row.min_grad_l1).sum::<f64>() / res.len() as f64;
            (m, res[0].row.clone())
        };
        let (a, row) = mean_min(&ada);
        let (s, _) = mean_min(&sgd);
        ratios.push((d as f64, s / a));
        let (r1, r2) = r1_r2(row.phi_grad1, row.phi_tilde_l, row.phi_sigma).expect("R1, R2");
        rs.push((d, r1, r2));
    }
    let slope = fit_power_law(&ratios).expect("A3 fit").exponent;
    GapResult { ratios, slope, r1_r2: rs }
}

#[test]
fn a3_geometry_gap() {
    let dense = geometry_gap("dense_grad_sparse_curv", "spike");
    let sparse = geometry_gap("sparse_grad_dense_curv", "constant");
    let within2 = |x: f64, target: f64| (0.5..=2.0).contains(&(x / target));
    let dense_r_ok = dense.r1_r2.iter().all(|&(d, r1, r2)| {
        let s = (d as f64).sqrt();
        within2(r1, s) && within2(r2, s)
    });
    let sparse_r_ok = sparse.r1_r2.iter().all(|&(d, r1, r2)| {
        let s = 1.0 / (d as f64).sqrt();
        within2(r1, s) && within2(r2, s)
    });
    let dense_ok = dense.slope >= 0.25;
    let sparse_ok = sparse.slope <= 0.0;
    let pass = dense_ok && sparse_ok && dense_r_ok && sparse_r_ok;
    let fmt_r = |g: &GapResult| {
        g.r1_r2
            .iter()
            .zip(&g.ratios)
            .map(|(&(d, r1, r2), &(_, q))| format!("d={d}: ratio {q:.3}, R1 {r1:.3}, R2 {r2:.3}"))
            .collect::<Vec<_>>()
            .join("; ")
    };
    verdict(
        "A3",
        pass,
        &format!(
            "dense slope = {:.4} (need >= 0.25) [{}]; sparse slope = {:.4} (need <= 0) [{}]",
            dense.slope,
            fmt_r(&dense),
            sparse.slope,
            fmt_r(&sparse)
        ),
    );
    assert!(dense_ok, "A3: dense slope {}", dense.slope);
    assert!(sparse_ok, "A3: sparse slope {}", sparse.slope);
    assert!(dense_r_ok && sparse_r_ok, "A3: R1/R2 outside factor 2");
}

fn bound_checks(cells: &[CellResult]) -> (usize, usize, Vec<String>) {
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut q_checked = 0;
    for c in cells {
        if c.n_ok == 0 {
            bad.push(format!("d={} T={}: no successful runs", c.d, c.horizon));
            continue;
        }
        // half_inv_d always gives delta < 1/d.
        checked += 1;
        if c.metric.partial_cmp(&c.theorem_rhs) == Some(std::cmp::Ordering::Greater) || c.metric.is_nan() {
            bad.push(format!("d={} T={}: avg {} > bound {}", c.d, c.horizon, c.metric, c.theorem_rhs));
        }
        q_checked += 1;
        if c.weighted_grad_sum.is_nan() || c.weighted_grad_sum > 1.1 * c.q {
            bad.push(format!("d={} T={}: weighted sum {} > 1.1 Q = {}", c.d, c.horizon, c.weighted_grad_sum, 1.1 * c.q));
        }
    }
    (checked, q_checked, bad)
}

#[test]
fn a4_bound_soundness() {
    let mut cells = a1_sweep().value.cells.clone();
    cells.extend(a2_sweep().value.cells.iter().cloned());
    let (n_rate, n_q, bad) = bound_checks(&cells);
    let tightest = cells
        .iter()
        .map(|c| c.metric / c.theorem_rhs)
        .fold(0.0f64, f64::max);
    let pass = bad.is_empty();
    verdict(
        "A4",
        pass,
        &format!(
            "{n_rate} cells avg_grad_l1 <= theorem RHS (max ratio {tightest:.3e}), {n_q} cells weighted sum <= 1.1 Q; failures: {bad:?}"
        ),
    );
    assert!(pass, "A4: {bad:?}");
}

#[test]
fn a5_lemma_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut log_sum_fail = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..200);
        let a: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..100.0) })
            .collect();
        let delta = rng.random_range(1e-3..10.0);
        log_sum_fail += (!log_sum_lemma_check(&a, delta).unwrap().holds) as usize;
    }

    let cells: Vec<&CellResult> = a1_sweep().value.cells.iter().chain(&a2_sweep().value.cells).collect();
    let etahat: usize = cells.iter().map(|c| c.etahat_violations).sum();
    let growth: usize = cells.iter().map(|c| c.growth_violations).sum();
    let increases: usize = cells.iter().map(|c| c.step_increases).sum();
    let runs: usize = cells.iter().map(|c| c.n_ok).sum();

    let mut bitwise = true;
    for _ in 0..200 {
        let eta = rng.random_range(1e-3..10.0);
        let delta = rng.random_range(0.0..1.0);
        let w0 = rng.random_range(-5.0..5.0);
        let mut a = OptimizerState::new(Method::AdaGrad, vec![w0], eta, delta).unwrap();
        let mut b = OptimizerState::new(Method::AdaGradNorm, vec![w0], eta, delta).unwrap();
        for _ in 0..500 {
            let g = [rng.random_range(-10.0..10.0)];
            a.step(&g).unwrap();
            b.step(&g).unwrap();
            bitwise &= a.w[0].to_bits() == b.w[0].to_bits() && a.b_sq[0].to_bits() == b.b_sq[0].to_bits();
        }
    }

    let pass = log_sum_fail == 0 && etahat == 0 && growth == 0 && increases == 0 && bitwise;
    verdict(
        "A5",
        pass,
        &format!(
            "log-sum failures {log_sum_fail}/1000; over {runs} AdaGrad trajectories: etahat < etatilde {etahat}, growth violations {growth}, step increases {increases}; d=1 bitwise equal: {bitwise}"
        ),
    );
    assert!(pass);
}

#[test]
fn a6_oracle_statistics() {
    let n = 100_000;
    let sigma = vec![0.1, 1.0, 3.0];
    let p = make_quadratic(&[1.0, 2.0, 0.5]).unwrap();
    let w = [0.7, -1.3, 2.0];
    let mut worst_bias = 0.0f64;
    let mut worst_var = 0.0f64;
    for (k, dist) in [NoiseDistribution::Rademacher, NoiseDistribution::Gaussian].into_iter().enumerate() {
        let nm = NoiseModel::new(sigma.clone(), dist).unwrap();
        let s = estimate_noise_stats(&p, &nm, &w, n, 1000 + k as u64).unwrap();
        for (i, &sd) in sigma.iter().enumerate() {
            worst_bias = worst_bias.max(s.mean_error[i].abs() / (sd / (n as f64).sqrt()));
            worst_var = worst_var.max((s.variance[i] / (sd * sd) - 1.0).abs());
        }
    }
    let pass = worst_bias <= 4.0 && worst_var <= 0.05;
    verdict(
        "A6",
        pass,
        &format!("max |mean error| = {worst_bias:.3} sigma/sqrt(n) (need <= 4), max relative variance error = {worst_var:.4} (need <= 0.05)"),
    );
    assert!(pass);
}

#[test]
fn a7_lower_bound() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut trials = 0;
    let mut min_ratio = f64::INFINITY;
    let mut max_curv = 0.0f64;
    let mut max_gap = 0.0f64;
    let methods = [
        TrialMethod::gradient_descent(1.0),
        TrialMethod::adagrad(1.0, 1e-8),
        TrialMethod::adagrad_norm(1.0, 1e-8),
    ];
    for m in &methods {
        for d in [1usize, 4, 16] {
            for eps in [0.2, 0.1, 0.05] {
                let budget = query_threshold(d, eps).ceil() as usize - 1;
                let out = query_complexity_trial(m, d, eps, budget).unwrap();
                trials += 1;
                let r = &out.report;
                min_ratio = min_ratio.min(out.final_grad_l1 / eps);
                max_curv = max_curv.max(r.max_second_derivative);
                max_gap = max_gap.max(r.p0_minus_min);
                let ok = r.passed()
                    && r.max_second_derivative <= 1.0 + 1e-3
                    && r.p0_minus_min <= 1.0 + 1e-6
                    && r.max_value_residual <= 1e-10
                    && r.max_derivative_residual <= 1e-10
                    && out.final_grad_l1 >= eps * (1.0 - 1e-6);
                if !ok {
                    failures.push(format!("{} d={d} eps={eps} budget={budget}: {:?}", m.method, r.failures));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed <= Duration::from_secs(300);
    verdict(
        "A7",
        pass,
        &format!(
            "{trials} trials; min ||grad p(x_hat)||_1 / eps = {min_ratio:.9}, max |f''| = {max_curv:.6}, max p(0) - min p = {max_gap:.4e}, {:.1}s; failures: {failures:?}",
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass, "A7: {failures:?}");
}

#[test]
fn a8_density_identities() {
    let mut ok = true;
    for d in [1usize, 2, 7, 64, 1000] {
        let ones = vec![1.0; d];
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        let inv = 1.0 / d as f64;
        ok &= density_phi(&ones).unwrap() == 1.0 && density_phi_tilde(&ones).unwrap() == 1.0;
        ok &= density_phi(&e1).unwrap() == inv && density_phi_tilde(&e1).unwrap() == inv;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut range_ok = true;
    for _ in 0..10_000 {
        let d = rng.random_range(1..300);
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1e3..1e3)).collect();
        if v.iter().all(|x| *x == 0.0) {
            continue;
        }
        let (l1, l2, _) = norms(&v);
        let phi = density_phi(&v).unwrap();
        let phit = density_phi_tilde(&v).unwrap();
        let lo = (1.0 / d as f64) * (1.0 - 1e-12);
        range_ok &= (lo..=1.0 + 1e-12).contains(&phi) && (lo..=1.0 + 1e-12).contains(&phit);
        worst = worst.max(((d as f64 * phi).sqrt() * l2 - l1).abs() / l1);
    }
    let pass = ok && range_ok && worst <= 1e-12;
    verdict(
        "A8",
        pass,
        &format!("extreme vectors exact: {ok}; ranges hold: {range_ok}; max relative identity error on 1e4 vectors = {worst:.2e} (need <= 1e-12)"),
    );
    assert!(pass);
}
