//! Invariant suite behind the `verify` subcommand. Each check is a small
//! deterministic instance of a property also covered by the test suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::lower_bound::{query_complexity_trial, query_threshold, TrialMethod};
use crate::metrics::{density_phi, density_phi_tilde, log_sum_lemma_check, norms};
use crate::optimizers::{run, Method, OptimizerState, RecordFlags, RunConfig};
use crate::oracle::{estimate_noise_stats, NoiseDistribution, NoiseModel};
use crate::problems::{
    make_extreme_case, make_quadratic, make_separable_nonconvex, ExtremeCase, Problem,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn problems(rng: &mut ChaCha8Rng) -> Result<Vec<Problem>> {
    let c: Vec<f64> = (0..8).map(|_| rng.random_range(0.1..3.0)).collect();
    Ok(vec![
        make_quadratic(&c)?,
        make_separable_nonconvex(&c)?,
        make_extreme_case(ExtremeCase::DenseGradSparseCurv, 8, 1.0)?,
        make_extreme_case(ExtremeCase::SparseGradDenseCurv, 8, 1.0)?,
    ])
}

fn gradients(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut worst_fd = 0.0f64;
    let mut worst_smooth = f64::NEG_INFINITY;
    for _ in 0..50 {
        for p in problems(rng)? {
            let w: Vec<f64> = (0..p.dim).map(|_| rng.random_range(-3.0..3.0)).collect();
            worst_fd = worst_fd.max(p.check_gradient_fd(&w, 1e-5)?);
            let s: Vec<f64> = (0..p.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = w.iter().zip(&s).map(|(a, b)| a + b).collect();
            let (fx, gx) = p.eval(&w)?;
            let lin: f64 = gx.iter().zip(&s).map(|(g, d)| g * d).sum();
            let lhs = (p.value(&y) - fx - lin).abs();
            let rhs: f64 = p.smoothness.iter().zip(&s).map(|(l, d)| 0.5 * l * d * d).sum();
            worst_smooth = worst_smooth.max(lhs - rhs - 1e-12 * (1.0 + fx.abs()));
        }
    }
    Ok(check(
        "gradients and coordinate smoothness",
        worst_fd <= 1e-5 && worst_smooth <= 0.0,
        format!("max fd rel err {worst_fd:.2e}, max smoothness excess {worst_smooth:.2e}"),
    ))
}

fn oracle_stats() -> Result<CheckResult> {
    let n = 100_000;
    let p = make_quadratic(&[1.0, 2.0])?;
    let mut ok = true;
    let mut detail = Vec::new();
    for (k, dist) in [NoiseDistribution::Rademacher, NoiseDistribution::Gaussian].into_iter().enumerate() {
        let nm = NoiseModel::new(vec![0.5, 2.0], dist)?;
        let s = estimate_noise_stats(&p, &nm, &[0.3, -0.7], n, 100 + k as u64)?;
        for i in 0..2 {
            let sigma = nm.sigma[i];
            let bias_ok = s.mean_error[i].abs() <= 4.0 * sigma / (n as f64).sqrt();
            let var_ok = (s.variance[i] / (sigma * sigma) - 1.0).abs() <= 0.05;
            ok &= bias_ok && var_ok;
            detail.push(format!("{dist:?}[{i}] mean {:+.2e} var/sigma^2 {:.4}", s.mean_error[i], s.variance[i] / (sigma * sigma)));
        }
    }
    Ok(check("oracle unbiased with coordinate variance", ok, detail.join("; ")))
}

fn optimizer_runs(rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let mut bitwise = true;
    for _ in 0..50 {
        let eta = rng.random_range(0.01..2.0);
        let delta = rng.random_range(0.0..0.1);
        let mut a = OptimizerState::new(Method::AdaGrad, vec![0.5], eta, delta)?;
        let mut b = OptimizerState::new(Method::AdaGradNorm, vec![0.5], eta, delta)?;
        for _ in 0..100 {
            let g = [rng.random_range(-3.0..3.0)];
            a.step(&g)?;
            b.step(&g)?;
            bitwise &= a.w[0].to_bits() == b.w[0].to_bits();
        }
    }

    let mut etahat = 0;
    let mut growth = 0;
    let mut increases = 0;
    let mut runs = 0;
    for p in problems(rng)? {
        for (s, seed) in [(0.0, 1u64), (0.3, 2), (1.0, 3)] {
            let nm = NoiseModel::constant(p.dim, s, NoiseDistribution::Rademacher)?;
            let cfg = RunConfig {
                method: Method::AdaGrad,
                eta: 1.0 / (p.dim as f64).sqrt(),
                delta: 1e-8,
                horizon: 2000,
                seed,
                flags: RecordFlags::default(),
            };
            let t = run(&p, &nm, &cfg)?;
            etahat += t.diagnostics.etahat_violations;
            growth += t.diagnostics.growth_violations;
            increases += t.diagnostics.step_increases;
            runs += 1;
        }
    }
    Ok(vec![
        check("d=1 AdaGrad equals AdaGrad-Norm bitwise", bitwise, "50 random sequences of 100 steps".into()),
        check(
            "decorrelated step dominates auxiliary step",
            etahat == 0,
            format!("{etahat} violations over {runs} runs"),
        ),
        check("gradient growth bound", growth == 0, format!("{growth} violations over {runs} runs")),
        check("step sizes non-increasing", increases == 0, format!("{increases} increases over {runs} runs")),
    ])
}

fn lemmas(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut failures = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..100);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let delta = rng.random_range(0.01..10.0);
        failures += (!log_sum_lemma_check(&a, delta)?.holds) as usize;
    }
    Ok(check("log-sum lemma", failures == 0, format!("{failures}/1000 failures")))
}

fn densities(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let mut in_range = true;
    for _ in 0..10_000 {
        let d = rng.random_range(1..256);
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
        let (l1, l2, _) = norms(&v);
        let phi = density_phi(&v)?;
        let phit = density_phi_tilde(&v)?;
        let lo = (1.0 / d as f64) * (1.0 - 1e-12);
        in_range &= phi >= lo && phi <= 1.0 + 1e-12 && phit >= lo && phit <= 1.0 + 1e-12;
        worst = worst.max(((d as f64 * phi).sqrt() * l2 - l1).abs() / l1);
    }
    Ok(check(
        "density ranges and l1 identity",
        in_range && worst <= 1e-12,
        format!("max rel identity error {worst:.2e}"),
    ))
}

fn lower_bound() -> Result<CheckResult> {
    let mut bad = Vec::new();
    let mut n = 0;
    for m in [TrialMethod::gradient_descent(1.0), TrialMethod::adagrad(1.0, 1e-8), TrialMethod::adagrad_norm(1.0, 1e-8)] {
        for d in [1, 4] {
            for eps in [0.2, 0.1] {
                let budget = query_threshold(d, eps).ceil() as usize - 1;
                let out = query_complexity_trial(&m, d, eps, budget)?;
                n += 1;
                if !(out.report.passed() && out.contract_holds()) {
                    bad.push(format!("{} d={d} eps={eps}", m.method));
                }
            }
        }
    }
    Ok(check("lower-bound instances and contract", bad.is_empty(), format!("{} trials, failing: {bad:?}", n)))
}

/// Runs every check; errors inside a check surface as `Err`.
pub fn verify_suite() -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut out = vec![gradients(&mut rng)?, oracle_stats()?];
    out.extend(optimizer_runs(&mut rng)?);
    out.push(lemmas(&mut rng)?);
    out.push(densities(&mut rng)?);
    out.push(lower_bound()?);
    Ok(out)
}
