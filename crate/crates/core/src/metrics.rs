//! Norms, density functions, closed-form bound evaluators, helper-lemma
//! checks and log-log rate fitting.
//!
//! Bound formulas use natural logarithms. Rate fits use base 10; exponents
//! do not depend on the base but intercepts do.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_finite, Error, Result};

/// `(l1, l2, linf)`.
pub fn norms(v: &[f64]) -> (f64, f64, f64) {
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    let mut linf = 0.0f64;
    for &x in v {
        l1 += x.abs();
        l2 += x * x;
        linf = linf.max(x.abs());
    }
    (l1, l2.sqrt(), linf)
}

/// `(l1, l2^2, linf)` of a nonzero finite vector.
fn nonzero(v: &[f64]) -> Result<(f64, f64, f64)> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    check_finite(v, "density input")?;
    let (l1, _, linf) = norms(v);
    if linf == 0.0 {
        return Err(Error::InvalidArgument("density of the zero vector".into()));
    }
    Ok((l1, v.iter().map(|x| x * x).sum(), linf))
}

/// `||v||_1^2 / (d ||v||_2^2)`, in `[1/d, 1]`.
pub fn density_phi(v: &[f64]) -> Result<f64> {
    let (l1, l2_sq, _) = nonzero(v)?;
    Ok(l1 * l1 / (v.len() as f64 * l2_sq))
}

/// `||v||_1 / (d ||v||_inf)`, in `[1/d, 1]`.
pub fn density_phi_tilde(v: &[f64]) -> Result<f64> {
    let (l1, _, linf) = nonzero(v)?;
    Ok(l1 / (linf * v.len() as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    /// `F(w_1) - F*`.
    pub delta1: f64,
    pub eta: f64,
    pub delta: f64,
    pub sigma: Vec<f64>,
    pub smoothness: Vec<f64>,
    /// `||grad F(w_1)||_2`.
    pub grad1_l2: f64,
    pub horizon: usize,
    pub dim: usize,
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        check_finite(&self.sigma, "sigma")?;
        check_finite(&self.smoothness, "smoothness")?;
        check_finite(&[self.delta1, self.eta, self.delta, self.grad1_l2], "bound inputs")?;
        if self.delta <= 0.0 {
            return Err(Error::InvalidArgument("h(T) needs delta > 0".into()));
        }
        if self.horizon < 1 {
            return Err(Error::InvalidArgument("horizon T must be >= 1".into()));
        }
        Ok(())
    }

    fn sigma_linf(&self) -> f64 {
        norms(&self.sigma).2
    }

    fn smoothness_linf(&self) -> f64 {
        norms(&self.smoothness).2
    }

    /// `h(T) = 1 + T ||sigma||_inf^2 / delta^2
    ///          + T (||grad F(w_1)|| + eta sqrt(d) ||L||_inf T)^2 / delta^2`.
    pub fn h(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.h_with(self.sigma_linf(), self.smoothness_linf()))
    }

    /// Per-coordinate `h_i(T)`, same form with `sigma_i` and `L_i`.
    pub fn h_coord(&self, i: usize) -> Result<f64> {
        self.validate()?;
        let (s, l) = match (self.sigma.get(i), self.smoothness.get(i)) {
            (Some(&s), Some(&l)) => (s, l),
            _ => return Err(Error::DimensionMismatch { expected: self.dim, got: i + 1 }),
        };
        Ok(self.h_with(s, l))
    }

    fn h_with(&self, sigma: f64, l: f64) -> f64 {
        let t = self.horizon as f64;
        let d2 = self.delta * self.delta;
        let drift = self.grad1_l2 + self.eta * (self.dim as f64).sqrt() * l * t;
        1.0 + t * sigma * sigma / d2 + t * drift * drift / d2
    }

    /// `Q = Delta_1 + (2 eta ||sigma||_1 + eta^2 ||L||_1 / 2) ln h(T)`.
    pub fn q(&self) -> Result<f64> {
        let h = self.h()?;
        let sigma_l1 = norms(&self.sigma).0;
        let l_l1 = norms(&self.smoothness).0;
        Ok(q_from_h(self.delta1, self.eta, sigma_l1, l_l1, h))
    }

    /// l1 rate bound for these inputs; requires `delta < 1/d`.
    pub fn theorem_bound(&self) -> Result<f64> {
        check_delta_hypothesis(self.delta, self.dim)?;
        theorem_bound(self.q()?, self.eta, self.horizon, norms(&self.sigma).0)
    }

    /// Variant that keeps the `sqrt(2 d delta Q / eta)` term instead of
    /// absorbing it via `delta < 1/d`; valid for any `delta > 0`.
    pub fn theorem_bound_unsimplified(&self) -> Result<f64> {
        let q = self.q()?;
        let t = self.horizon as f64;
        let sigma_l1 = norms(&self.sigma).0;
        let sum_sqrt = 2.0 * 3f64.sqrt() * q / self.eta
            + (2.0 * self.dim as f64 * self.delta * q / self.eta).sqrt()
            + 2.0 * (sigma_l1 * q / self.eta).sqrt() * t.powf(0.25);
        Ok(sum_sqrt / t.sqrt())
    }
}

pub fn q_from_h(delta1: f64, eta: f64, sigma_l1: f64, l_l1: f64, h: f64) -> f64 {
    delta1 + (2.0 * eta * sigma_l1 + 0.5 * eta * eta * l_l1) * h.ln()
}

pub fn check_delta_hypothesis(delta: f64, d: usize) -> Result<()> {
    if delta * (d as f64) < 1.0 {
        Ok(())
    } else {
        Err(Error::Hypothesis(format!("delta = {delta} is not below 1/d = {}", 1.0 / d as f64)))
    }
}

/// `2 sqrt(3) Q / (eta sqrt(T)) + sqrt(2 Q / (eta T))
///  + 2 sqrt(||sigma||_1 Q / eta) / T^(1/4)`.
pub fn theorem_bound(q: f64, eta: f64, horizon: usize, sigma_l1: f64) -> Result<f64> {
    check_finite(&[q, eta, sigma_l1], "theorem inputs")?;
    if q < 0.0 || sigma_l1 < 0.0 {
        return Err(Error::InvalidArgument("Q and ||sigma||_1 must be nonnegative".into()));
    }
    if eta <= 0.0 {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    if horizon < 1 {
        return Err(Error::InvalidArgument("horizon T must be >= 1".into()));
    }
    let t = horizon as f64;
    Ok(2.0 * 3f64.sqrt() * q / (eta * t.sqrt())
        + (2.0 * q / (eta * t)).sqrt()
        + 2.0 * (sigma_l1 * q / eta).sqrt() / t.powf(0.25))
}

/// `R1 = sqrt(phi(grad) / phi~(L))`, `R2 = sqrt(phi(grad)) / (phi(sigma) phi~(L))^(1/4)`.
pub fn r1_r2(phi_grad: f64, phi_tilde_l: f64, phi_sigma: f64) -> Result<(f64, f64)> {
    for (name, x) in [("phi(grad)", phi_grad), ("phi~(L)", phi_tilde_l), ("phi(sigma)", phi_sigma)] {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {x}")));
        }
    }
    let r1 = (phi_grad / phi_tilde_l).sqrt();
    let r2 = phi_grad.sqrt() / (phi_sigma * phi_tilde_l).powf(0.25);
    Ok((r1, r2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSumCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `sum_t a_t / (A_t + delta^2) <= ln(1 + A_T / delta^2)` with
/// `A_t = sum_{s<=t} a_s`.
pub fn log_sum_lemma_check(a: &[f64], delta: f64) -> Result<LogSumCheck> {
    check_finite(a, "sequence")?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    if let Some((index, &value)) = a.iter().enumerate().find(|(_, x)| **x < 0.0) {
        return Err(Error::NegativeEntry { index, value });
    }
    let d2 = delta * delta;
    let mut acc = 0.0;
    let mut lhs = 0.0;
    for &x in a {
        acc += x;
        lhs += x / (acc + d2);
    }
    let rhs = (acc / d2).ln_1p();
    Ok(LogSumCheck {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-12),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub alpha_d: f64,
    pub beta_t: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

fn distinct(xs: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = xs.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Least squares on `log10 m = alpha log10 d + beta log10 T + c`.
pub fn fit_rate(samples: &[(usize, usize, f64)]) -> Result<RateFit> {
    let nd = distinct(samples.iter().map(|s| s.0 as f64));
    let nt = distinct(samples.iter().map(|s| s.1 as f64));
    if nd < 3 || nt < 3 {
        return Err(Error::DegenerateGrid(format!("{nd} distinct d, {nt} distinct T")));
    }
    if let Some(s) = samples.iter().find(|s| !(s.2 > 0.0 && s.2.is_finite()) || s.0 == 0 || s.1 == 0) {
        return Err(Error::InvalidArgument(format!("nonpositive sample {s:?}")));
    }
    let n = samples.len();
    let x = DMatrix::from_fn(n, 3, |r, c| match c {
        0 => (samples[r].0 as f64).log10(),
        1 => (samples[r].1 as f64).log10(),
        _ => 1.0,
    });
    let y = DVector::from_iterator(n, samples.iter().map(|s| s.2.log10()));
    let coef = least_squares(&x, &y)?;
    Ok(RateFit {
        alpha_d: coef[0],
        beta_t: coef[1],
        intercept: coef[2],
        r_squared: r_squared(&x, &y, &coef),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Single-axis fit `log10 y = k log10 x + c`; needs >= 2 distinct `x`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerFit> {
    if distinct(points.iter().map(|p| p.0)) < 2 {
        return Err(Error::DegenerateGrid("power-law fit needs >= 2 distinct x".into()));
    }
    if let Some(p) = points.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0 && p.1.is_finite())) {
        return Err(Error::InvalidArgument(format!("nonpositive point {p:?}")));
    }
    let n = points.len();
    let x = DMatrix::from_fn(n, 2, |r, c| if c == 0 { points[r].0.log10() } else { 1.0 });
    let y = DVector::from_iterator(n, points.iter().map(|p| p.1.log10()));
    let coef = least_squares(&x, &y)?;
    Ok(PowerFit {
        exponent: coef[0],
        intercept: coef[1],
        r_squared: r_squared(&x, &y, &coef),
    })
}

fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    x.clone()
        .svd(true, true)
        .solve(y, 1e-12)
        .map_err(|e| Error::InvalidArgument(format!("least squares failed: {e}")))
}

fn r_squared(x: &DMatrix<f64>, y: &DVector<f64>, coef: &DVector<f64>) -> f64 {
    let resid = y - x * coef;
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return 1.0;
    }
    (1.0 - resid.norm_squared() / ss_tot).clamp(0.0, 1.0)
}
