use crate::error::{Error, Result};

fn finite(xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("step-size inputs"))
    }
}

/// `min{1/L_inf, sqrt(2 delta1) / (sigma_l2 sqrt(L_inf T))}`; `1/L_inf` when
/// the noise is zero.
pub fn sgd_tuned_eta(l_inf: f64, sigma_l2: f64, delta1: f64, t: usize) -> Result<f64> {
    finite(&[l_inf, sigma_l2, delta1])?;
    if l_inf <= 0.0 {
        return Err(Error::InvalidArgument(format!("L_inf must be positive, got {l_inf}")));
    }
    if t < 1 {
        return Err(Error::InvalidArgument("horizon T must be >= 1".into()));
    }
    let base = 1.0 / l_inf;
    if sigma_l2 == 0.0 {
        return Ok(base);
    }
    let noisy = (2.0 * delta1).sqrt() / (sigma_l2 * (l_inf * t as f64).sqrt());
    Ok(base.min(noisy))
}

/// Decorrelated step size: the current stochastic `g_{t,i}^2` replaced by
/// its conditional second moment bound `(grad_i F)^2 + sigma_i^2`.
pub fn decorrelated_stepsize(
    b_sq_prev_i: f64,
    grad_i: f64,
    sigma_i: f64,
    eta: f64,
    delta: f64,
) -> Result<f64> {
    finite(&[b_sq_prev_i, grad_i, sigma_i, eta, delta])?;
    Ok(eta / ((b_sq_prev_i + sigma_i * sigma_i + grad_i * grad_i).sqrt() + delta))
}

/// Whole-horizon lower bound on the decorrelated step sizes of one
/// coordinate: `g_hist_sq_sum_i` sums `g^2` over `t < T`, `grad_sq_sum_i`
/// sums `(grad_i F)^2` over `t <= T`.
pub fn auxiliary_stepsize(
    g_hist_sq_sum_i: f64,
    grad_sq_sum_i: f64,
    sigma_i: f64,
    eta: f64,
    delta: f64,
) -> Result<f64> {
    finite(&[g_hist_sq_sum_i, grad_sq_sum_i, sigma_i, eta, delta])?;
    if g_hist_sq_sum_i < 0.0 || grad_sq_sum_i < 0.0 {
        return Err(Error::InvalidArgument("squared sums must be nonnegative".into()));
    }
    Ok(eta / ((g_hist_sq_sum_i + grad_sq_sum_i + sigma_i * sigma_i).sqrt() + delta))
}
