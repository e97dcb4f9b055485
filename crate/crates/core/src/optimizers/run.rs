use super::{Method, OptimizerState};
use crate::error::{check_dim, Error, Result};
use crate::oracle::NoiseModel;
use crate::problems::Problem;

/// What to keep besides the streaming summary and diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecordFlags {
    /// Full per-iteration vectors (memory is `O(T d)`).
    pub records: bool,
    /// One scalar row per iteration, the trajectory CSV payload.
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    /// Base step size; the constant step for SGD.
    pub eta: f64,
    pub delta: f64,
    pub horizon: usize,
    pub seed: u64,
    pub flags: RecordFlags,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub w: Vec<f64>,
    pub true_gradient: Vec<f64>,
    pub stochastic_gradient: Vec<f64>,
    pub f_value: f64,
    pub step_sizes: Vec<f64>,
    pub etahat: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub f_value: f64,
    pub grad_l1: f64,
    pub grad_l2: f64,
    pub grad_linf: f64,
    pub step_min: f64,
    pub step_max: f64,
    pub etahat_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub iterations: usize,
    pub delta1: f64,
    pub grad1: Vec<f64>,
    pub avg_grad_l1: f64,
    pub avg_grad_l2: f64,
    pub min_grad_l1: f64,
    /// Iteration attaining `min_grad_l1`; earliest on ties.
    pub argmin_t: usize,
    pub final_grad_l1: f64,
    pub final_f: f64,
}

/// Analysis quantities accumulated along the run. They use the true
/// gradient and `sigma`, which only a synthetic problem can provide, and
/// never feed back into the updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// `sum_t sum_i (etahat_{t,i} / 2) (grad_i F(w_t))^2`.
    pub weighted_grad_sum: f64,
    /// `min_t etahat_{t,i}` per coordinate.
    pub etahat_min: Vec<f64>,
    /// Auxiliary step size `etatilde_{T,i}` per coordinate.
    pub aux_stepsize: Vec<f64>,
    /// Coordinates where `min_t etahat < etatilde` (beyond rounding).
    pub etahat_violations: usize,
    /// Largest `| ||grad_{t+1}|| - ||grad_t|| | / (eta sqrt(d) L_inf)` over
    /// consecutive iterates.
    pub max_growth_ratio: f64,
    pub growth_violations: usize,
    /// `(t, i)` pairs whose step size increased.
    pub step_increases: usize,
    /// Noiseless steps with `step_i * L_i <= 1` on all active coordinates
    /// that nonetheless increased `F`.
    pub descent_violations: usize,
    pub descent_checks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: RunConfig,
    pub problem: &'static str,
    pub dim: usize,
    pub sigma: Vec<f64>,
    pub records: Vec<StepRecord>,
    pub trace: Vec<TraceRow>,
    pub summary: RunSummary,
    pub diagnostics: Diagnostics,
}

const REL_TOL: f64 = 1e-12;

/// Runs `cfg.horizon` steps from `p.init_point`, one stochastic gradient per
/// step drawn at `(cfg.seed, t)`.
pub fn run(p: &Problem, nm: &NoiseModel, cfg: &RunConfig) -> Result<Trajectory> {
    check_dim(p.dim, nm.dim())?;
    if cfg.horizon < 1 {
        return Err(Error::InvalidArgument("horizon T must be >= 1".into()));
    }
    let d = p.dim;
    let horizon = cfg.horizon;
    let method = cfg.method;
    let mut state = OptimizerState::new(method, p.init_point.clone(), cfg.eta, cfg.delta)?;

    let sigma_sq: Vec<f64> = nm.sigma.iter().map(|s| s * s).collect();
    let sigma_sq_total: f64 = sigma_sq.iter().sum();
    let l_inf = p.smoothness_linf();
    let growth_bound = cfg.eta * (d as f64).sqrt() * l_inf;
    let noiseless = nm.is_noiseless();

    let mut grad = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut etahat = vec![0.0; d];
    let mut steps = vec![0.0; d];
    let mut prev_steps = vec![f64::INFINITY; d];

    let mut etahat_min = vec![f64::INFINITY; d];
    let mut grad_sq_sum = vec![0.0; d];
    let mut g_hist_sq_sum = vec![0.0; d];
    let mut grad_sq_total = 0.0;
    let mut g_hist_sq_total = 0.0;

    let mut records = Vec::new();
    let mut trace = Vec::new();
    if cfg.flags.records {
        records.reserve(horizon);
    }
    if cfg.flags.trace {
        trace.reserve(horizon);
    }

    let mut diag = Diagnostics {
        weighted_grad_sum: 0.0,
        etahat_min: Vec::new(),
        aux_stepsize: Vec::new(),
        etahat_violations: 0,
        max_growth_ratio: 0.0,
        growth_violations: 0,
        step_increases: 0,
        descent_violations: 0,
        descent_checks: 0,
    };

    let mut sum_l1 = 0.0;
    let mut sum_l2 = 0.0;
    let mut min_l1 = f64::INFINITY;
    let mut argmin_t = 1;
    let mut grad1 = Vec::new();
    let mut prev_l2: Option<f64> = None;
    // (f_t, whether the step taken at t satisfied the descent condition)
    let mut pending_descent: Option<(f64, bool)> = None;
    let mut last_f = f64::NAN;
    let mut last_l1 = f64::NAN;

    for t in 1..=horizon {
        let f = p.eval_into(&state.w, &mut grad);
        if !f.is_finite() || grad.iter().any(|x| !x.is_finite()) {
            return Err(diverged(t, &state, last_f));
        }
        if t == 1 {
            grad1 = grad.clone();
        }

        let (mut l1, mut l2sq, mut linf) = (0.0, 0.0, 0.0f64);
        for &x in &grad {
            l1 += x.abs();
            l2sq += x * x;
            linf = linf.max(x.abs());
        }
        let l2 = l2sq.sqrt();
        sum_l1 += l1;
        sum_l2 += l2;
        if l1 < min_l1 {
            min_l1 = l1;
            argmin_t = t;
        }

        if let Some(prev) = prev_l2 {
            let change = (l2 - prev).abs();
            if growth_bound > 0.0 {
                diag.max_growth_ratio = diag.max_growth_ratio.max(change / growth_bound);
            }
            if change > growth_bound + REL_TOL * (1.0 + l2 + prev) {
                diag.growth_violations += 1;
            }
        }
        prev_l2 = Some(l2);

        if let Some((f_prev, eligible)) = pending_descent.take() {
            if eligible {
                diag.descent_checks += 1;
                if f > f_prev + REL_TOL * (1.0 + f_prev.abs()) {
                    diag.descent_violations += 1;
                }
            }
        }

        nm.perturb_into(&grad, cfg.seed, t as u64, &mut g);

        // Decorrelated step sizes, measured before the accumulator update.
        let mut etahat_lo = f64::INFINITY;
        match method {
            Method::AdaGrad => {
                for i in 0..d {
                    let r = state.b_sq[i] + sigma_sq[i] + grad[i] * grad[i];
                    etahat[i] = cfg.eta / (r.sqrt() + cfg.delta);
                }
            }
            Method::AdaGradNorm => {
                let r = state.b_sq[0] + sigma_sq_total + l2sq;
                etahat.fill(cfg.eta / (r.sqrt() + cfg.delta));
            }
            Method::Sgd => etahat.fill(cfg.eta),
        }
        let mut weighted = 0.0;
        let mut g_sq_total = 0.0;
        for i in 0..d {
            weighted += 0.5 * etahat[i] * grad[i] * grad[i];
            etahat_min[i] = etahat_min[i].min(etahat[i]);
            etahat_lo = etahat_lo.min(etahat[i]);
            grad_sq_sum[i] += grad[i] * grad[i];
            if t < horizon {
                g_hist_sq_sum[i] += g[i] * g[i];
            }
            g_sq_total += g[i] * g[i];
        }
        diag.weighted_grad_sum += weighted;
        grad_sq_total += l2sq;
        if t < horizon {
            g_hist_sq_total += g_sq_total;
        }

        if cfg.flags.records {
            records.push(StepRecord {
                t,
                w: state.w.clone(),
                true_gradient: grad.clone(),
                stochastic_gradient: g.clone(),
                f_value: f,
                step_sizes: Vec::new(),
                etahat: etahat.clone(),
            });
        }

        state.step(&g)?;
        if state.w.iter().any(|x| !x.is_finite()) {
            return Err(diverged(t, &state, f));
        }

        let (mut step_lo, mut step_hi) = (f64::INFINITY, 0.0f64);
        let mut eligible = noiseless;
        for i in 0..d {
            steps[i] = state.step_size(i);
            if steps[i] > prev_steps[i] {
                diag.step_increases += 1;
            }
            prev_steps[i] = steps[i];
            step_lo = step_lo.min(steps[i]);
            step_hi = step_hi.max(steps[i]);
            if grad[i] != 0.0 && steps[i] * p.smoothness[i] > 1.0 {
                eligible = false;
            }
        }
        pending_descent = Some((f, eligible));

        if let Some(rec) = records.last_mut() {
            rec.step_sizes = steps.clone();
        }
        if cfg.flags.trace {
            trace.push(TraceRow {
                t,
                f_value: f,
                grad_l1: l1,
                grad_l2: l2,
                grad_linf: linf,
                step_min: step_lo,
                step_max: step_hi,
                etahat_min: etahat_lo,
            });
        }
        last_f = f;
        last_l1 = l1;
    }

    // Auxiliary step sizes over the whole horizon.
    let aux: Vec<f64> = match method {
        Method::AdaGrad => (0..d)
            .map(|i| {
                cfg.eta / ((g_hist_sq_sum[i] + grad_sq_sum[i] + sigma_sq[i]).sqrt() + cfg.delta)
            })
            .collect(),
        Method::AdaGradNorm => {
            let r = g_hist_sq_total + grad_sq_total + sigma_sq_total;
            vec![cfg.eta / (r.sqrt() + cfg.delta); d]
        }
        Method::Sgd => vec![cfg.eta; d],
    };
    diag.etahat_violations = etahat_min
        .iter()
        .zip(&aux)
        .filter(|(lo, a)| **lo < **a * (1.0 - REL_TOL))
        .count();
    diag.etahat_min = etahat_min;
    diag.aux_stepsize = aux;

    let n = horizon as f64;
    let summary = RunSummary {
        iterations: horizon,
        delta1: p.delta1(),
        grad1,
        avg_grad_l1: sum_l1 / n,
        avg_grad_l2: sum_l2 / n,
        min_grad_l1: min_l1,
        argmin_t,
        final_grad_l1: last_l1,
        final_f: last_f,
    };

    Ok(Trajectory {
        config: cfg.clone(),
        problem: p.label(),
        dim: d,
        sigma: nm.sigma.clone(),
        records,
        trace,
        summary,
        diagnostics: diag,
    })
}

fn diverged(t: usize, state: &OptimizerState, last_f: f64) -> Error {
    Error::Diverged {
        t,
        last_w: state.w.clone(),
        last_f,
    }
}
