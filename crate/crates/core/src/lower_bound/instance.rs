use std::fmt;

use crate::error::{check_dim, check_finite, Result};

use super::bump::bump_unchecked;
use super::oracle::ResistingOracle;
use super::{reduce, KNOT_MERGE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    /// Slope `-eps_1d`.
    Linear,
    /// `f(y_lo) + Phi(z)` on `[y_lo, y_hi]`.
    Bump,
}

/// One materialized `f_i` on `[0, 1/eps_1d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordFunction {
    /// `y_0 = 0 < ... < y_{N+1} = 1/eps_1d`.
    pub knots: Vec<f64>,
    /// `f(y_t)`, same length as `knots`.
    pub values: Vec<f64>,
    /// `segments[t]` covers `[knots[t], knots[t + 1]]`.
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardInstance {
    pub d: usize,
    pub eps: f64,
    pub eps_1d: f64,
    pub coords: Vec<CoordFunction>,
    /// Oracle answers copied at materialization, for consistency checks.
    pub answers: Vec<Vec<(f64, f64)>>,
}

fn segment_end(seg: Segment, y_lo: f64, y_hi: f64, eps_1d: f64) -> (f64, f64) {
    match seg {
        Segment::Linear => (-eps_1d * (y_hi - y_lo), -eps_1d),
        Segment::Bump => bump_unchecked(y_lo, y_hi, eps_1d, y_hi),
    }
}

fn build_coord(raw: &[f64], eps_1d: f64) -> CoordFunction {
    let period = 1.0 / eps_1d;
    let mut pts: Vec<f64> = raw.iter().copied().filter(|&z| z > 0.0 && z < period).collect();
    pts.sort_by(f64::total_cmp);
    let mut knots = vec![0.0];
    for z in pts {
        if z - knots[knots.len() - 1] >= KNOT_MERGE_TOL && period - z >= KNOT_MERGE_TOL {
            knots.push(z);
        }
    }
    knots.push(period);

    let mut values = Vec::with_capacity(knots.len());
    let mut segments = Vec::with_capacity(knots.len() - 1);
    values.push(1.0);
    for w in knots.windows(2) {
        let l = w[1] - w[0];
        let seg = if l < 8.0 * eps_1d { Segment::Linear } else { Segment::Bump };
        let (inc, _) = segment_end(seg, w[0], w[1], eps_1d);
        segments.push(seg);
        values.push(values[values.len() - 1] + inc);
    }
    CoordFunction { knots, values, segments }
}

/// Builds the hard instance consistent with every answer the oracle gave.
pub fn materialize(o: &ResistingOracle) -> HardInstance {
    HardInstance {
        d: o.d,
        eps: o.eps,
        eps_1d: o.eps_1d,
        coords: o.query_log.iter().map(|raw| build_coord(raw, o.eps_1d)).collect(),
        answers: o.answers.clone(),
    }
}

impl CoordFunction {
    pub fn period(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// `f(1/eps_1d) - f(0)`, added once per period to the right.
    pub fn period_increment(&self) -> f64 {
        self.values[self.values.len() - 1] - self.values[0]
    }

    fn segment_of(&self, r: f64) -> usize {
        let t = self.knots.partition_point(|&y| y <= r);
        t.saturating_sub(1).min(self.segments.len() - 1)
    }

    /// `(f, f')` for `r` in `[0, period]`.
    fn eval_interior(&self, r: f64, eps_1d: f64) -> (f64, f64) {
        let t = self.segment_of(r);
        let (y_lo, y_hi) = (self.knots[t], self.knots[t + 1]);
        let base = self.values[t];
        match self.segments[t] {
            Segment::Linear => (base - eps_1d * (r - y_lo), -eps_1d),
            Segment::Bump => {
                let (v, dv) = bump_unchecked(y_lo, y_hi, eps_1d, r);
                (base + v, dv)
            }
        }
    }

    /// `(f(z), f'(z))` on all of the real line.
    pub fn eval(&self, z: f64, eps_1d: f64) -> Result<(f64, f64)> {
        let period = self.period();
        if z <= 0.0 {
            return Ok((1.0 - eps_1d * z, -eps_1d));
        }
        if z < period {
            return Ok(self.eval_interior(z, eps_1d));
        }
        let (k, r) = reduce(z, period)?;
        let (v, dv) = self.eval_interior(r, eps_1d);
        Ok((v + k * self.period_increment(), dv))
    }
}

impl HardInstance {
    pub fn period(&self) -> f64 {
        1.0 / self.eps_1d
    }
}

/// `p(x) = (1/d) sum_i f_i(sqrt(d) x_i)` and its gradient.
pub fn hard_eval(h: &HardInstance, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_dim(h.d, x.len())?;
    check_finite(x, "evaluation point")?;
    let sqrt_d = (h.d as f64).sqrt();
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(h.d);
    for (c, &xi) in h.coords.iter().zip(x) {
        let (f, df) = c.eval(sqrt_d * xi, h.eps_1d)?;
        value += f;
        grad.push(df / sqrt_d);
    }
    Ok((value / h.d as f64, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub d: usize,
    pub eps: f64,
    pub n_samples: usize,
    /// Largest `|f''|` estimate over all coordinates.
    pub max_second_derivative: f64,
    /// `p(0) - min p` over the sampled box.
    pub p0_minus_min: f64,
    pub max_value_residual: f64,
    pub max_derivative_residual: f64,
    pub max_oracle_mismatch: f64,
    /// Smallest `f_i(P) - f_i(0)`; negative means `p` is unbounded below.
    pub min_period_increment: f64,
    pub failures: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "d = {}", self.d)?;
        writeln!(f, "eps = {}", self.eps)?;
        writeln!(f, "n_samples = {}", self.n_samples)?;
        writeln!(f, "max_second_derivative = {:.6e}", self.max_second_derivative)?;
        writeln!(f, "p0_minus_min = {:.6e}", self.p0_minus_min)?;
        writeln!(f, "max_value_residual = {:.3e}", self.max_value_residual)?;
        writeln!(f, "max_derivative_residual = {:.3e}", self.max_derivative_residual)?;
        writeln!(f, "max_oracle_mismatch = {:.3e}", self.max_oracle_mismatch)?;
        writeln!(f, "min_period_increment = {:.6e}", self.min_period_increment)?;
        writeln!(f, "passed = {}", self.passed())?;
        for msg in &self.failures {
            writeln!(f, "failure: {msg}")?;
        }
        Ok(())
    }
}

pub const SMOOTHNESS_TOL: f64 = 1e-3;
pub const GAP_TOL: f64 = 1e-6;
pub const VALUE_RESIDUAL_TOL: f64 = 1e-10;
pub const DERIVATIVE_RESIDUAL_TOL: f64 = 1e-12;
pub const ORACLE_TOL: f64 = 1e-12;

const FD_STEP: f64 = 1e-2;
const POINTS_PER_SEGMENT: usize = 16;

struct CoordStats {
    max_second: f64,
    min_value: f64,
    value_residual: (f64, usize),
    derivative_residual: (f64, usize),
    oracle_mismatch: f64,
}

fn check_coord(c: &CoordFunction, answers: &[(f64, f64)], eps_1d: f64, n: usize) -> Result<CoordStats> {
    let period = c.period();
    let ev = |z: f64| c.eval(z, eps_1d);

    // Knot residuals: stored values against the segment formula, and
    // one-sided derivatives across every junction including 0 and P.
    let mut value_residual = (0.0f64, 0usize);
    let mut derivative_residual = (0.0f64, 0usize);
    let mut left_slope = -eps_1d;
    for (t, seg) in c.segments.iter().enumerate() {
        let (y_lo, y_hi) = (c.knots[t], c.knots[t + 1]);
        let start_slope = match seg {
            Segment::Linear => -eps_1d,
            Segment::Bump => bump_unchecked(y_lo, y_hi, eps_1d, y_lo).1,
        };
        let dres = (start_slope - left_slope).abs();
        if dres > derivative_residual.0 {
            derivative_residual = (dres, t);
        }
        let (inc, end_slope) = segment_end(*seg, y_lo, y_hi, eps_1d);
        let vres = (c.values[t] + inc - c.values[t + 1]).abs() / (1.0 + c.values[t + 1].abs());
        if vres > value_residual.0 {
            value_residual = (vres, t);
        }
        left_slope = end_slope;
    }
    // Past P the function restarts on segment 0.
    let first = match c.segments[0] {
        Segment::Linear => -eps_1d,
        Segment::Bump => bump_unchecked(c.knots[0], c.knots[1], eps_1d, c.knots[0]).1,
    };
    let dres = (first - left_slope).abs();
    if dres > derivative_residual.0 {
        derivative_residual = (dres, c.segments.len());
    }

    let mut oracle_mismatch = 0.0f64;
    let mut z_lo = -1.0f64;
    let mut z_hi = period + 1.0;
    for &(z, answer) in answers {
        oracle_mismatch = oracle_mismatch.max((ev(z)?.1 - answer).abs());
        z_lo = z_lo.min(z - 1.0);
        z_hi = z_hi.max(z + 1.0);
    }

    // Sample points: uniform over the box, knots, bump minima and a few
    // points inside every segment of the base period.
    let mut zs: Vec<f64> = (0..n).map(|k| z_lo + (z_hi - z_lo) * k as f64 / (n - 1) as f64).collect();
    for (t, seg) in c.segments.iter().enumerate() {
        let (y_lo, y_hi) = (c.knots[t], c.knots[t + 1]);
        zs.push(y_lo);
        for k in 1..POINTS_PER_SEGMENT {
            zs.push(y_lo + (y_hi - y_lo) * k as f64 / POINTS_PER_SEGMENT as f64);
        }
        if *seg == Segment::Bump {
            zs.push(y_lo + eps_1d);
        }
    }
    zs.push(period);

    let mut max_second = 0.0f64;
    let mut min_interior = f64::INFINITY;
    for &z in &zs {
        let (f0, _) = ev(z)?;
        let (fp, dfp) = ev(z + FD_STEP)?;
        let (fm, dfm) = ev(z - FD_STEP)?;
        let second = (fp - 2.0 * f0 + fm) / (FD_STEP * FD_STEP);
        let slope_change = (dfp - dfm) / (2.0 * FD_STEP);
        max_second = max_second.max(second.abs()).max(slope_change.abs());
        if (0.0..=period).contains(&z) {
            min_interior = min_interior.min(f0);
        }
    }

    // Box minimum: outer branch is >= 1, each period to the right is
    // shifted by the increment.
    let inc = c.period_increment();
    let periods = (z_hi / period).floor().max(0.0);
    let min_value = (min_interior + (inc * periods).min(0.0)).min(1.0);
    let sampled_min = zs.iter().map(|&z| ev(z).map(|v| v.0)).collect::<Result<Vec<_>>>()?;
    let min_value = sampled_min.into_iter().fold(min_value, f64::min);

    Ok(CoordStats {
        max_second,
        min_value,
        value_residual,
        derivative_residual,
        oracle_mismatch,
    })
}

/// Numerically certifies 1-smoothness, the `p(0) - inf p` gap, C1
/// continuity at knots and agreement with the logged oracle answers.
pub fn verify_instance(h: &HardInstance, n_samples: usize) -> Result<VerificationReport> {
    if n_samples < 1000 {
        return Err(crate::Error::TooFewSamples { n: n_samples, min: 1000 });
    }
    let mut report = VerificationReport {
        d: h.d,
        eps: h.eps,
        n_samples,
        max_second_derivative: 0.0,
        p0_minus_min: 0.0,
        max_value_residual: 0.0,
        max_derivative_residual: 0.0,
        max_oracle_mismatch: 0.0,
        min_period_increment: f64::INFINITY,
        failures: Vec::new(),
    };
    let no_answers = Vec::new();
    let mut min_sum = 0.0;
    for (i, c) in h.coords.iter().enumerate() {
        let answers = h.answers.get(i).unwrap_or(&no_answers);
        let s = check_coord(c, answers, h.eps_1d, n_samples)?;
        if s.max_second > 1.0 + SMOOTHNESS_TOL {
            report.failures.push(format!("coordinate {i}: |f''| estimate {:.6e} exceeds 1", s.max_second));
        }
        if s.value_residual.0 > VALUE_RESIDUAL_TOL {
            report.failures.push(format!(
                "coordinate {i}: value mismatch {:.3e} at end of segment {}",
                s.value_residual.0, s.value_residual.1
            ));
        }
        if s.derivative_residual.0 > DERIVATIVE_RESIDUAL_TOL {
            report.failures.push(format!(
                "coordinate {i}: derivative jump {:.3e} entering segment {}",
                s.derivative_residual.0, s.derivative_residual.1
            ));
        }
        if s.oracle_mismatch > ORACLE_TOL {
            report.failures.push(format!(
                "coordinate {i}: oracle answer differs from f' by {:.3e}",
                s.oracle_mismatch
            ));
        }
        let inc = c.period_increment();
        if inc < 0.0 {
            report.failures.push(format!("coordinate {i}: period increment {inc:.6e} < 0, unbounded below"));
        }
        report.min_period_increment = report.min_period_increment.min(inc);
        report.max_second_derivative = report.max_second_derivative.max(s.max_second);
        report.max_value_residual = report.max_value_residual.max(s.value_residual.0);
        report.max_derivative_residual = report.max_derivative_residual.max(s.derivative_residual.0);
        report.max_oracle_mismatch = report.max_oracle_mismatch.max(s.oracle_mismatch);
        min_sum += s.min_value;
    }
    let p0 = hard_eval(h, &vec![0.0; h.d])?.0;
    report.p0_minus_min = p0 - min_sum / h.d as f64;
    if report.p0_minus_min > 1.0 + GAP_TOL {
        report.failures.push(format!("p(0) - min p = {:.6e} exceeds 1", report.p0_minus_min));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_oracle_gives_single_bump() {
        let o = ResistingOracle::new(1, 0.1).unwrap();
        let h = materialize(&o);
        let c = &h.coords[0];
        assert_eq!(c.knots, vec![0.0, 10.0]);
        assert_eq!(c.segments, vec![Segment::Bump]);
        assert!((c.values[1] - 25.0).abs() < 1e-12);
        assert_eq!(hard_eval(&h, &[0.0]).unwrap().0, 1.0);
        let r = verify_instance(&h, 1000).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn short_gap_is_linear() {
        let mut o = ResistingOracle::new(1, 0.1).unwrap();
        o.resisting_gradient(&[4.0]).unwrap();
        o.resisting_gradient(&[4.5]).unwrap();
        let h = materialize(&o);
        let c = &h.coords[0];
        assert_eq!(c.knots, vec![0.0, 4.0, 4.5, 10.0]);
        assert_eq!(c.segments, vec![Segment::Bump, Segment::Linear, Segment::Bump]);
        assert!((c.values[2] - (c.values[1] - 0.05)).abs() < 1e-15);
        for z in [4.0, 4.5] {
            assert_eq!(c.eval(z, 0.1).unwrap().1, -0.1);
        }
        assert!(verify_instance(&h, 1000).unwrap().passed());
    }

    #[test]
    fn duplicate_and_near_queries_merge() {
        let mut o = ResistingOracle::new(1, 0.1).unwrap();
        for z in [3.0, 3.0, 3.0 + 1e-13, 7.0] {
            o.resisting_gradient(&[z]).unwrap();
        }
        let h = materialize(&o);
        assert_eq!(h.coords[0].knots, vec![0.0, 3.0, 7.0, 10.0]);
        let r = verify_instance(&h, 1000).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn origin_value_and_logged_gradient() {
        let mut o = ResistingOracle::new(4, 0.2).unwrap();
        let x = [0.3, 1.1, 2.0, 4.9];
        o.resisting_gradient(&x).unwrap();
        let h = materialize(&o);
        assert_eq!(hard_eval(&h, &[0.0; 4]).unwrap().0, 1.0);
        let g = hard_eval(&h, &x).unwrap().1;
        let l1: f64 = g.iter().map(|v| v.abs()).sum();
        assert!((l1 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn shift_branch_adds_increment() {
        let mut o = ResistingOracle::new(1, 0.1).unwrap();
        o.resisting_gradient(&[2.0]).unwrap();
        let h = materialize(&o);
        let c = &h.coords[0];
        let inc = c.period_increment();
        for z in [0.5, 2.0, 6.3] {
            let base = c.eval(z, 0.1).unwrap();
            let shifted = c.eval(z + 20.0, 0.1).unwrap();
            assert!((shifted.0 - base.0 - 2.0 * inc).abs() < 1e-9);
            assert!((shifted.1 - base.1).abs() < 1e-12);
        }
        assert!(c.eval(1e9, 0.1).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut o = ResistingOracle::new(3, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..10.0)).collect();
            o.resisting_gradient(&x).unwrap();
        }
        let h = materialize(&o);
        let step = 1e-6;
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..25.0)).collect();
            let (_, g) = hard_eval(&h, &x).unwrap();
            for i in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += step;
                xm[i] -= step;
                let fd = (hard_eval(&h, &xp).unwrap().0 - hard_eval(&h, &xm).unwrap().0) / (2.0 * step);
                assert!((fd - g[i]).abs() < 1e-6, "x = {x:?}, i = {i}: fd {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn tampered_knot_value_fails() {
        let mut o = ResistingOracle::new(2, 0.2).unwrap();
        o.resisting_gradient(&[1.0, 2.0]).unwrap();
        o.resisting_gradient(&[3.0, 2.1]).unwrap();
        let mut h = materialize(&o);
        assert!(verify_instance(&h, 1000).unwrap().passed());
        h.coords[1].values[2] += 1e-3;
        let r = verify_instance(&h, 1000).unwrap();
        assert!(!r.passed());
        assert!(r.failures.iter().any(|m| m.contains("coordinate 1") && m.contains("value mismatch")));
    }

    #[test]
    fn needs_enough_samples() {
        let h = materialize(&ResistingOracle::new(1, 0.1).unwrap());
        assert!(verify_instance(&h, 999).is_err());
    }
}
