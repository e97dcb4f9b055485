use crate::error::{Error, Result};
use crate::metrics::norms;
use crate::optimizers::{Method, OptimizerState};

use super::instance::{hard_eval, materialize, verify_instance, VerificationReport};
use super::oracle::ResistingOracle;

/// Deterministic optimizer run against the resisting oracle from `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMethod {
    pub method: Method,
    pub eta: f64,
    pub delta: f64,
    /// Must be zero; nonzero values are rejected.
    pub noise_sigma: f64,
}

impl TrialMethod {
    pub fn gradient_descent(eta: f64) -> Self {
        Self { method: Method::Sgd, eta, delta: 0.0, noise_sigma: 0.0 }
    }

    pub fn adagrad(eta: f64, delta: f64) -> Self {
        Self { method: Method::AdaGrad, eta, delta, noise_sigma: 0.0 }
    }

    pub fn adagrad_norm(eta: f64, delta: f64) -> Self {
        Self { method: Method::AdaGradNorm, eta, delta, noise_sigma: 0.0 }
    }
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub queries_used: usize,
    pub final_grad_l1: f64,
    pub threshold: f64,
    pub x_hat: Vec<f64>,
    pub report: VerificationReport,
}

impl TrialOutcome {
    /// Below the threshold the returned point must not be eps-stationary.
    pub fn contract_holds(&self) -> bool {
        (self.queries_used as f64) >= self.threshold
            || self.final_grad_l1 >= self.report.eps * (1.0 - 1e-6)
    }
}

/// `d / (32 eps^2)`.
pub fn query_threshold(d: usize, eps: f64) -> f64 {
    d as f64 / (32.0 * eps * eps)
}

pub const VERIFY_SAMPLES: usize = 2000;

pub fn query_complexity_trial(m: &TrialMethod, d: usize, eps: f64, budget: usize) -> Result<TrialOutcome> {
    if m.noise_sigma != 0.0 {
        return Err(Error::LowerBound(format!(
            "trials need a deterministic method, got noise sigma {}",
            m.noise_sigma
        )));
    }
    let mut oracle = ResistingOracle::new(d, eps)?;
    let mut state = OptimizerState::new(m.method, vec![0.0; d], m.eta, m.delta)?;
    for _ in 0..budget {
        let g = oracle.resisting_gradient(&state.w)?;
        state.step(&g)?;
    }
    let x_hat = state.w;
    oracle.reveal(&x_hat)?;
    let h = materialize(&oracle);
    let report = verify_instance(&h, VERIFY_SAMPLES)?;
    let (_, grad) = hard_eval(&h, &x_hat)?;
    Ok(TrialOutcome {
        queries_used: oracle.query_count,
        final_grad_l1: norms(&grad).0,
        threshold: query_threshold(d, eps),
        x_hat,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gd_one_dim() {
        let out = query_complexity_trial(&TrialMethod::gradient_descent(1.0), 1, 0.1, 3).unwrap();
        assert_eq!(out.queries_used, 3);
        assert!((out.threshold - 3.125).abs() < 1e-12);
        assert!(out.final_grad_l1 >= 0.1 * (1.0 - 1e-6));
        assert!(out.report.passed(), "{}", out.report);
        assert!(out.contract_holds());
    }

    #[test]
    fn adagrad_four_dim() {
        let out = query_complexity_trial(&TrialMethod::adagrad(1.0, 1e-8), 4, 0.1, 12).unwrap();
        assert!((out.threshold - 12.5).abs() < 1e-12);
        assert!(out.final_grad_l1 >= 0.1 * (1.0 - 1e-6));
        assert!(out.report.passed(), "{}", out.report);
    }

    #[test]
    fn zero_budget_returns_start() {
        let out = query_complexity_trial(&TrialMethod::adagrad_norm(1.0, 1e-8), 4, 0.2, 0).unwrap();
        assert_eq!(out.queries_used, 0);
        assert_eq!(out.x_hat, vec![0.0; 4]);
        assert!(out.final_grad_l1 >= 0.2 * (1.0 - 1e-6));
        assert!(out.report.passed());
    }

    #[test]
    fn long_adagrad_run_verifies() {
        let out = query_complexity_trial(&TrialMethod::adagrad(0.1, 1e-8), 4, 0.1, 1000).unwrap();
        assert!(out.report.passed(), "{}", out.report);
        assert_eq!(out.queries_used, 1000);
    }

    #[test]
    fn dense_wrapped_queries_break_boundedness() {
        // Far past the threshold with a large step the iterates wrap the
        // period and every gap is short, so each period loses height.
        let out = query_complexity_trial(&TrialMethod::adagrad(1.0, 1e-8), 4, 0.1, 1000).unwrap();
        assert!(out.report.min_period_increment < 0.0);
        assert!(!out.report.passed());
    }

    #[test]
    fn stochastic_config_rejected() {
        let mut m = TrialMethod::gradient_descent(1.0);
        m.noise_sigma = 0.1;
        assert!(matches!(query_complexity_trial(&m, 1, 0.1, 1), Err(Error::LowerBound(_))));
    }
}
