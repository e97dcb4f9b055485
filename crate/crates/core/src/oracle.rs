//! Unbiased stochastic first-order oracle with exact per-coordinate variance.
//!
//! Noise is drawn from a ChaCha8 stream keyed by `seed` with stream id `t`;
//! coordinate `i` reads a fixed word offset of that stream, so a draw is a
//! pure function of `(seed, t, i)` and trajectories can be generated in any
//! order or on any thread.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, check_finite, Error, Result};
use crate::problems::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseDistribution {
    /// `+sigma_i` or `-sigma_i` with probability 1/2 each.
    #[default]
    Rademacher,
    /// `sigma_i * N(0, 1)`.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub sigma: Vec<f64>,
    pub distribution: NoiseDistribution,
}

impl NoiseModel {
    pub fn new(sigma: Vec<f64>, distribution: NoiseDistribution) -> Result<Self> {
        check_finite(&sigma, "noise sigma")?;
        if let Some((index, &value)) = sigma.iter().enumerate().find(|(_, s)| **s < 0.0) {
            return Err(Error::NegativeEntry { index, value });
        }
        Ok(Self {
            sigma,
            distribution,
        })
    }

    pub fn noiseless(d: usize) -> Self {
        Self {
            sigma: vec![0.0; d],
            distribution: NoiseDistribution::Rademacher,
        }
    }

    pub fn constant(d: usize, s: f64, distribution: NoiseDistribution) -> Result<Self> {
        Self::new(vec![s; d], distribution)
    }

    /// `sigma = (s, s/d, ..., s/d)`.
    pub fn spike(d: usize, s: f64, distribution: NoiseDistribution) -> Result<Self> {
        let mut sigma = vec![s / d as f64; d];
        if let Some(first) = sigma.first_mut() {
            *first = s;
        }
        Self::new(sigma, distribution)
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma.iter().all(|&s| s == 0.0)
    }

    /// Writes `xi_i` for `(seed, t, i)` into `out`.
    pub fn fill_noise(&self, seed: u64, t: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.sigma.len());
        if self.is_noiseless() {
            out.fill(0.0);
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t);
        match self.distribution {
            NoiseDistribution::Rademacher => {
                for (x, &s) in out.iter_mut().zip(&self.sigma) {
                    // One word per coordinate.
                    let bit = rng.next_u32() >> 31;
                    *x = if bit == 1 { s } else { -s };
                }
            }
            NoiseDistribution::Gaussian => {
                for (x, &s) in out.iter_mut().zip(&self.sigma) {
                    // Four words per coordinate (two u64), Box-Muller.
                    let u1 = unit_open(rng.next_u64());
                    let u2 = unit_open(rng.next_u64());
                    let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                    *x = s * z;
                }
            }
        }
    }

    /// `grad + xi` written into `out`.
    pub fn perturb_into(&self, grad: &[f64], seed: u64, t: u64, out: &mut [f64]) {
        self.fill_noise(seed, t, out);
        for (o, g) in out.iter_mut().zip(grad) {
            *o += g;
        }
    }
}

/// Uniform in `(0, 1]` from the top 53 bits.
#[inline]
fn unit_open(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stochastic gradient `grad F(w) + xi` at iteration `t >= 1`.
pub fn sample_gradient(
    p: &Problem,
    nm: &NoiseModel,
    w: &[f64],
    seed: u64,
    t: u64,
) -> Result<Vec<f64>> {
    check_dim(p.dim, nm.dim())?;
    if t < 1 {
        return Err(Error::InvalidArgument("iteration index starts at 1".into()));
    }
    let (_, grad) = p.eval(w)?;
    let mut out = vec![0.0; p.dim];
    nm.perturb_into(&grad, seed, t, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStats {
    /// Sample mean of `g - grad F(w)` per coordinate.
    pub mean_error: Vec<f64>,
    /// Unbiased sample variance per coordinate.
    pub variance: Vec<f64>,
}

/// Draws `n` stochastic gradients at `w` (iterations `1..=n` of `seed`) and
/// returns per-coordinate error mean and variance.
pub fn estimate_noise_stats(
    p: &Problem,
    nm: &NoiseModel,
    w: &[f64],
    n: usize,
    seed: u64,
) -> Result<NoiseStats> {
    const MIN_SAMPLES: usize = 100;
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples { n, min: MIN_SAMPLES });
    }
    check_dim(p.dim, nm.dim())?;
    let (_, grad) = p.eval(w)?;
    let d = p.dim;
    let mut g = vec![0.0; d];
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    for k in 1..=n {
        nm.perturb_into(&grad, seed, k as u64, &mut g);
        let kf = k as f64;
        for i in 0..d {
            // Welford on the error.
            let e = g[i] - grad[i];
            let delta = e - mean[i];
            mean[i] += delta / kf;
            m2[i] += delta * (e - mean[i]);
        }
    }
    let variance = m2.iter().map(|v| v / (n - 1) as f64).collect();
    Ok(NoiseStats {
        mean_error: mean,
        variance,
    })
}
