use crate::error::{check_finite, Error, Result};

use super::reduce;

/// Gradient-only adversary. Every answer in z-space is `-eps_1d`; the
/// queried points become knots of the instance built later.
#[derive(Debug, Clone)]
pub struct ResistingOracle {
    pub d: usize,
    pub eps: f64,
    pub eps_1d: f64,
    /// Interior knots in `(0, 1/eps_1d)` per coordinate, in query order.
    /// Queries past the period are stored after reduction.
    pub query_log: Vec<Vec<f64>>,
    /// Every `(z, f'(z))` pair issued, per coordinate, including outer ones.
    pub answers: Vec<Vec<(f64, f64)>>,
    pub query_count: usize,
}

impl ResistingOracle {
    pub fn new(d: usize, eps: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::EmptyVector);
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        Ok(Self {
            d,
            eps,
            eps_1d: eps / (d as f64).sqrt(),
            query_log: vec![Vec::new(); d],
            answers: vec![Vec::new(); d],
            query_count: 0,
        })
    }

    pub fn period(&self) -> f64 {
        1.0 / self.eps_1d
    }

    /// `grad p(x)`; each coordinate is `-eps_1d / sqrt(d)`.
    pub fn resisting_gradient(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self.record(x)?;
        self.query_count += 1;
        Ok(g)
    }

    /// Logs `x` as knots without charging a query. Used to pin the
    /// returned iterate so the certificate is checked at a known point.
    pub fn reveal(&mut self, x: &[f64]) -> Result<()> {
        self.record(x).map(|_| ())
    }

    fn record(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_dim(self.d, x.len())?;
        check_finite(x, "query point")?;
        let sqrt_d = (self.d as f64).sqrt();
        let period = self.period();
        // Reduce everything first so a failing coordinate leaves no partial log.
        let mut knots = Vec::with_capacity(self.d);
        for &xi in x {
            let z = sqrt_d * xi;
            let knot = if z <= 0.0 {
                None
            } else if z < period {
                Some(z)
            } else {
                let (_, r) = reduce(z, period)?;
                (r > 0.0).then_some(r)
            };
            knots.push((z, knot));
        }
        let slope = -self.eps_1d;
        for (i, (z, knot)) in knots.into_iter().enumerate() {
            if let Some(k) = knot {
                self.query_log[i].push(k);
            }
            self.answers[i].push((z, slope));
        }
        Ok(vec![slope / sqrt_d; self.d])
    }
}
