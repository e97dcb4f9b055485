//! Synthetic separable objectives with exactly known coordinate smoothness.
//!
//! Every objective is a sum of one-dimensional pieces `c_i * q(w_i)`, so the
//! Lipschitz constant of the i-th partial derivative is `c_i * sup |q''|` and
//! the infimum is known in closed form. Two primitives are provided:
//!
//! - quadratic, `q(x) = x^2 / 2`, with `L_i = c_i` and `F* = 0`;
//! - saturating, `q(x) = x^2 / (1 + x^2)`, bounded and non-convex, with
//!   `sup |q''| = q''(0) = 2` so `L_i = 2 c_i`, and `F* = 0`.
//!
//! The family is a choice made for this lab; nothing about the analysis
//! depends on these particular shapes beyond smoothness and a finite `F*`.

use crate::error::{check_dim, check_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Quadratic,
    SeparableNonconvex,
    /// Saturating primitive with one stiff coordinate and `d - 1` flat ones.
    SpikeProfile,
}

impl ProblemKind {
    fn is_saturating(self) -> bool {
        !matches!(self, ProblemKind::Quadratic)
    }
}

/// The two extreme `l1 / l2` geometries used to compare AdaGrad and SGD.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremeCase {
    /// Equal gradient magnitudes everywhere, curvature concentrated on one
    /// coordinate.
    DenseGradSparseCurv,
    /// Gradient on one coordinate only, equal curvature everywhere.
    SparseGradDenseCurv,
}

/// Default plateau position for the flat coordinates of
/// [`ExtremeCase::DenseGradSparseCurv`].
pub const DEFAULT_PLATEAU: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub dim: usize,
    pub kind: ProblemKind,
    pub coeffs: Vec<f64>,
    pub smoothness: Vec<f64>,
    pub f_star: f64,
    pub init_point: Vec<f64>,
}

fn check_coeffs(c: &[f64]) -> Result<()> {
    if c.is_empty() {
        return Err(Error::EmptyVector);
    }
    check_finite(c, "coefficients")?;
    if let Some((index, &value)) = c.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeEntry { index, value });
    }
    Ok(())
}

/// `F(w) = 1/2 sum L_i w_i^2`, started from all-ones.
pub fn make_quadratic(l_vec: &[f64]) -> Result<Problem> {
    check_coeffs(l_vec)?;
    Ok(Problem {
        dim: l_vec.len(),
        kind: ProblemKind::Quadratic,
        coeffs: l_vec.to_vec(),
        smoothness: l_vec.to_vec(),
        f_star: 0.0,
        init_point: vec![1.0; l_vec.len()],
    })
}

/// `F(w) = sum c_i w_i^2 / (1 + w_i^2)`, started from all-ones.
pub fn make_separable_nonconvex(c_vec: &[f64]) -> Result<Problem> {
    check_coeffs(c_vec)?;
    Ok(Problem {
        dim: c_vec.len(),
        kind: ProblemKind::SeparableNonconvex,
        coeffs: c_vec.to_vec(),
        smoothness: c_vec.iter().map(|c| 2.0 * c).collect(),
        f_star: 0.0,
        init_point: vec![1.0; c_vec.len()],
    })
}

pub fn make_extreme_case(kind: ExtremeCase, d: usize, scale: f64) -> Result<Problem> {
    make_extreme_case_with_plateau(kind, d, scale, DEFAULT_PLATEAU)
}

/// Extreme-geometry instance. `plateau` is where the flat coordinates of the
/// dense-gradient case start; it must lie past the peak of `|q'|` at
/// `1/sqrt(3)`. It is ignored for the sparse-gradient case.
pub fn make_extreme_case_with_plateau(
    kind: ExtremeCase,
    d: usize,
    scale: f64,
    plateau: f64,
) -> Result<Problem> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "extreme cases need d >= 2, got {d}"
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "scale must be positive, got {scale}"
        )));
    }
    match kind {
        ExtremeCase::DenseGradSparseCurv => {
            if !(plateau >= PEAK && plateau.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "plateau must be >= {PEAK:.4}, got {plateau}"
                )));
            }
            let mut coeffs = vec![scale / d as f64; d];
            coeffs[0] = scale;
            let mut p = make_separable_nonconvex(&coeffs)?;
            p.kind = ProblemKind::SpikeProfile;

            // Flat coordinates sit on the plateau; the stiff coordinate is
            // placed on the near side of the peak with the same |gradient|.
            let target = coeffs[1] * saturating_slope(plateau);
            let w0 = solve_on_rising_side(target / scale);
            p.init_point = vec![plateau; d];
            p.init_point[0] = w0;
            Ok(p)
        }
        ExtremeCase::SparseGradDenseCurv => {
            let mut p = make_separable_nonconvex(&vec![scale; d])?;
            p.init_point = vec![0.0; d];
            p.init_point[0] = 1.0;
            Ok(p)
        }
    }
}

/// Maximizer of `q'(x) = 2x / (1 + x^2)^2` on `x >= 0`.
const PEAK: f64 = 0.577_350_269_189_625_8;

#[inline]
fn saturating_slope(x: f64) -> f64 {
    let s = 1.0 + x * x;
    2.0 * x / (s * s)
}

/// Bisection for `q'(x) = y` on `[0, PEAK]`, where `q'` is increasing.
fn solve_on_rising_side(y: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, PEAK);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if saturating_slope(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl Problem {
    /// Value and gradient with input validation.
    pub fn eval(&self, w: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(self.dim, w.len())?;
        check_finite(w, "iterate")?;
        let mut grad = vec![0.0; self.dim];
        let f = self.eval_into(w, &mut grad);
        Ok((f, grad))
    }

    /// Unchecked hot path: writes the gradient into `grad`, returns `F(w)`.
    pub fn eval_into(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        debug_assert_eq!(w.len(), self.dim);
        debug_assert_eq!(grad.len(), self.dim);
        let mut f = 0.0;
        if self.kind.is_saturating() {
            for ((g, &x), &c) in grad.iter_mut().zip(w).zip(&self.coeffs) {
                let s = 1.0 + x * x;
                f += c * x * x / s;
                *g = c * 2.0 * x / (s * s);
            }
        } else {
            for ((g, &x), &c) in grad.iter_mut().zip(w).zip(&self.coeffs) {
                f += 0.5 * c * x * x;
                *g = c * x;
            }
        }
        f
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        let pieces = w.iter().zip(&self.coeffs);
        if self.kind.is_saturating() {
            pieces.map(|(&x, &c)| c * x * x / (1.0 + x * x)).sum()
        } else {
            pieces.map(|(&x, &c)| 0.5 * c * x * x).sum()
        }
    }

    /// Initial gap `F(w_1) - F*`.
    pub fn delta1(&self) -> f64 {
        self.value(&self.init_point) - self.f_star
    }

    pub fn smoothness_linf(&self) -> f64 {
        self.smoothness.iter().fold(0.0, |m, &l| m.max(l))
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> &'static str {
        match self.kind {
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::SeparableNonconvex => "separable_nonconvex",
            ProblemKind::SpikeProfile => "spike_profile",
        }
    }

    /// Maximum relative error between the analytic gradient and a central
    /// finite difference with step `h`. Relative errors use
    /// `max(|analytic|, 1e-8)` as denominator.
    pub fn check_gradient_fd(&self, w: &[f64], h: f64) -> Result<f64> {
        if !(h > 0.0 && h <= 1e-2) {
            return Err(Error::InvalidArgument(format!(
                "finite-difference step must be in (0, 1e-2], got {h}"
            )));
        }
        let (_, grad) = self.eval(w)?;
        let mut x = w.to_vec();
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            let orig = x[i];
            x[i] = orig + h;
            let fp = self.value(&x);
            x[i] = orig - h;
            let fm = self.value(&x);
            x[i] = orig;
            let fd = (fp - fm) / (2.0 * h);
            let err = (fd - grad[i]).abs() / grad[i].abs().max(1e-8);
            worst = worst.max(err);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{density_phi, density_phi_tilde, norms};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn quadratic_examples() {
        let p = make_quadratic(&[1.0, 1.0]).unwrap();
        assert_eq!(p.eval(&[1.0, 1.0]).unwrap(), (1.0, vec![1.0, 1.0]));
        assert_eq!(p.eval(&[0.0, 0.0]).unwrap(), (0.0, vec![0.0, 0.0]));

        let p = make_quadratic(&[2.0, 0.0]).unwrap();
        assert_eq!(p.eval(&[3.0, 5.0]).unwrap(), (9.0, vec![6.0, 0.0]));

        let p = make_quadratic(&[1.0]).unwrap();
        let (f, g) = p.eval(&[0.0]).unwrap();
        assert_eq!((f, g), (p.f_star, vec![0.0]));

        let p = make_quadratic(&[3.0]).unwrap();
        assert_eq!(p.eval(&[2.0]).unwrap(), (6.0, vec![6.0]));
        assert_eq!(p.init_point, vec![1.0]);
    }

    #[test]
    fn quadratic_rejects_bad_input() {
        assert!(matches!(make_quadratic(&[]), Err(Error::EmptyVector)));
        assert!(matches!(
            make_quadratic(&[1.0, -0.5]),
            Err(Error::NegativeEntry { index: 1, .. })
        ));
        assert!(make_separable_nonconvex(&[-1.0]).is_err());
    }

    #[test]
    fn separable_examples() {
        let p = make_separable_nonconvex(&[1.0]).unwrap();
        assert_eq!(p.eval(&[0.0]).unwrap(), (0.0, vec![0.0]));
        assert_eq!(p.eval(&[1.0]).unwrap(), (0.5, vec![0.5]));
        assert_eq!(p.smoothness, vec![2.0]);

        // Independent high-precision evaluation: 100/101 and 20/101^2.
        let (f, g) = p.eval(&[10.0]).unwrap();
        assert_abs_diff_eq!(f, 0.990_099_009_900_990_1, epsilon = 1e-12);
        assert_abs_diff_eq!(g[0], 0.001_960_592_098_813_842, epsilon = 1e-15);

        let p = make_separable_nonconvex(&[2.0]).unwrap();
        assert_eq!(p.eval(&[1.0]).unwrap(), (1.0, vec![1.0]));
    }

    #[test]
    fn eval_errors() {
        let p = make_quadratic(&[1.0, 2.0]).unwrap();
        assert!(matches!(
            p.eval(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(matches!(p.eval(&[1.0, f64::NAN]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn fd_checker_examples() {
        let p = make_quadratic(&[1.0]).unwrap();
        assert!(p.check_gradient_fd(&[1.0], 1e-5).unwrap() <= 1e-8);

        let p = make_separable_nonconvex(&[1.0]).unwrap();
        assert!(p.check_gradient_fd(&[0.7], 1e-5).unwrap() <= 1e-6);
        assert!(p.check_gradient_fd(&[0.7, 1.0], 1e-5).is_err());
        assert!(p.check_gradient_fd(&[f64::INFINITY], 1e-5).is_err());
        assert!(p.check_gradient_fd(&[0.7], 0.1).is_err());
    }

    #[test]
    fn sparse_grad_case() {
        let p = make_extreme_case(ExtremeCase::SparseGradDenseCurv, 4, 1.0).unwrap();
        let (_, g) = p.eval(&p.init_point).unwrap();
        assert_eq!(density_phi(&g).unwrap(), 0.25);
        assert!(make_extreme_case(ExtremeCase::SparseGradDenseCurv, 1, 1.0).is_err());
    }

    #[test]
    fn dense_grad_case_geometry() {
        let p = make_extreme_case(ExtremeCase::DenseGradSparseCurv, 4, 1.0).unwrap();
        let (l1, _, linf) = norms(&p.smoothness);
        assert_abs_diff_eq!(l1 / linf, 1.75, epsilon = 1e-15);
        assert!(density_phi_tilde(&p.smoothness).unwrap() <= 3.0 / 4.0);

        for d in [2, 16, 64, 256] {
            let p = make_extreme_case(ExtremeCase::DenseGradSparseCurv, d, 1.0).unwrap();
            let (_, g) = p.eval(&p.init_point).unwrap();
            let max = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let min = g.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
            assert!(max / min - 1.0 < 0.01, "d = {d}: {min} .. {max}");
            assert!(p.init_point[0] < PEAK && p.init_point[1] > PEAK);
            assert!(density_phi(&g).unwrap() > 0.99);
        }
    }

    #[test]
    fn dense_grad_case_rejects_bad_plateau() {
        assert!(
            make_extreme_case_with_plateau(ExtremeCase::DenseGradSparseCurv, 4, 1.0, 0.1).is_err()
        );
        assert!(make_extreme_case(ExtremeCase::DenseGradSparseCurv, 4, 0.0).is_err());
    }

    fn any_problem() -> impl Strategy<Value = (Problem, Vec<f64>, Vec<f64>)> {
        (1usize..8, any::<bool>()).prop_flat_map(|(d, quad)| {
            (
                prop::collection::vec(0.0f64..5.0, d),
                prop::collection::vec(-3.0f64..3.0, d),
                prop::collection::vec(-1.0f64..1.0, d),
            )
                .prop_map(move |(c, w, step)| {
                    let p = if quad {
                        make_quadratic(&c).unwrap()
                    } else {
                        make_separable_nonconvex(&c).unwrap()
                    };
                    (p, w, step)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn fd_gradient_matches((p, w, _) in any_problem()) {
            let err = p.check_gradient_fd(&w, 1e-5).unwrap();
            prop_assert!(err <= 1e-5, "err = {err}");
        }

        #[test]
        fn coordinate_smoothness_holds((p, x, step) in any_problem()) {
            let y: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            let (fx, gx) = p.eval(&x).unwrap();
            let fy = p.value(&y);
            let lin: f64 = gx.iter().zip(x.iter().zip(&y)).map(|(g, (a, b))| g * (a - b)).sum();
            let lhs = (fy - fx + lin).abs();
            let rhs: f64 = p.smoothness.iter().zip(&step).map(|(l, s)| 0.5 * l * s * s).sum();
            prop_assert!(lhs <= rhs + 1e-12 * (1.0 + fx.abs()), "{lhs} > {rhs}");
        }

        #[test]
        fn f_star_is_lower_bound((p, w, _) in any_problem()) {
            prop_assert!(p.f_star <= p.value(&w));
        }
    }
}
