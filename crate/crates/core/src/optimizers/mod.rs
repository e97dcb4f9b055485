//! AdaGrad (coordinate-wise), AdaGrad-Norm and constant-step SGD.
//!
//! The accumulator starts empty (`b^2_0 = 0`) and is updated with the current
//! gradient before the step, so the step size used at iteration `t` is
//! `eta / (sqrt(b^2_t) + delta)` with `b^2_t` including `g_t`.

mod run;
mod stepsize;

pub use run::{run, Diagnostics, RecordFlags, RunConfig, RunSummary, StepRecord, TraceRow, Trajectory};
pub use stepsize::{auxiliary_stepsize, decorrelated_stepsize, sgd_tuned_eta};

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, check_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    AdaGrad,
    AdaGradNorm,
    Sgd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::AdaGrad => "adagrad",
            Method::AdaGradNorm => "adagrad_norm",
            Method::Sgd => "sgd",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "adagrad" => Ok(Method::AdaGrad),
            "adagrad_norm" | "adagradnorm" => Ok(Method::AdaGradNorm),
            "sgd" | "gd" => Ok(Method::Sgd),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub w: Vec<f64>,
    /// Per-coordinate accumulator. AdaGrad-Norm keeps its scalar in
    /// `b_sq[0]`; use [`OptimizerState::accumulator`] for the broadcast view.
    pub b_sq: Vec<f64>,
    pub eta: f64,
    pub delta: f64,
    pub t: usize,
    pub method: Method,
}

impl OptimizerState {
    pub fn new(method: Method, w0: Vec<f64>, eta: f64, delta: f64) -> Result<Self> {
        if w0.is_empty() {
            return Err(Error::EmptyVector);
        }
        check_finite(&w0, "initial point")?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "delta must be nonnegative, got {delta}"
            )));
        }
        let slots = match method {
            Method::AdaGrad => w0.len(),
            Method::AdaGradNorm => 1,
            Method::Sgd => 0,
        };
        Ok(Self {
            b_sq: vec![0.0; slots],
            w: w0,
            eta,
            delta,
            t: 0,
            method,
        })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// Accumulator seen by coordinate `i`.
    #[inline]
    pub fn accumulator(&self, i: usize) -> f64 {
        match self.method {
            Method::AdaGrad => self.b_sq[i],
            Method::AdaGradNorm => self.b_sq[0],
            Method::Sgd => 0.0,
        }
    }

    /// Current effective step size of coordinate `i`.
    #[inline]
    pub fn step_size(&self, i: usize) -> f64 {
        match self.method {
            Method::Sgd => self.eta,
            _ => self.eta / (self.accumulator(i).sqrt() + self.delta),
        }
    }

    fn check_gradient(&self, g: &[f64], expected: Method) -> Result<()> {
        if self.method != expected {
            return Err(Error::InvalidArgument(format!(
                "{} step called on a {} state",
                expected, self.method
            )));
        }
        check_dim(self.dim(), g.len())?;
        check_finite(g, "gradient")
    }

    pub fn adagrad_step(&mut self, g: &[f64]) -> Result<()> {
        self.check_gradient(g, Method::AdaGrad)?;
        for ((w, b), &gi) in self.w.iter_mut().zip(self.b_sq.iter_mut()).zip(g) {
            *b += gi * gi;
            // A zero coordinate leaves the iterate alone even when b = delta = 0.
            if gi != 0.0 {
                *w -= self.eta * gi / (b.sqrt() + self.delta);
            }
        }
        self.t += 1;
        Ok(())
    }

    pub fn adagrad_norm_step(&mut self, g: &[f64]) -> Result<()> {
        self.check_gradient(g, Method::AdaGradNorm)?;
        let sq: f64 = g.iter().map(|x| x * x).sum();
        self.b_sq[0] += sq;
        if sq > 0.0 {
            let denom = self.b_sq[0].sqrt() + self.delta;
            for (w, &gi) in self.w.iter_mut().zip(g) {
                if gi != 0.0 {
                    *w -= self.eta * gi / denom;
                }
            }
        }
        self.t += 1;
        Ok(())
    }

    pub fn sgd_step(&mut self, g: &[f64], eta_const: f64) -> Result<()> {
        self.check_gradient(g, Method::Sgd)?;
        if !(eta_const > 0.0 && eta_const.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "SGD step must be positive, got {eta_const}"
            )));
        }
        for (w, &gi) in self.w.iter_mut().zip(g) {
            *w -= eta_const * gi;
        }
        self.t += 1;
        Ok(())
    }

    /// One step of whichever method the state was built for. SGD uses
    /// `self.eta` as its constant step.
    pub fn step(&mut self, g: &[f64]) -> Result<()> {
        match self.method {
            Method::AdaGrad => self.adagrad_step(g),
            Method::AdaGradNorm => self.adagrad_norm_step(g),
            Method::Sgd => self.sgd_step(g, self.eta),
        }
    }
}
