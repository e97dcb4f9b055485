use crate::error::{Error, Result};

/// C1 connector on `[y_lo, y_hi]`: `Phi(x) = -eps (x - y_lo) + psi(x)` where
/// `psi` is the piecewise quadratic with hat-shaped derivative peaking at the
/// midpoint. Returns `(Phi(x), Phi'(x))`.
///
/// With `l = y_hi - y_lo`: `Phi(y_lo) = 0`, `Phi(y_hi) = l (l/4 - eps)`,
/// `Phi'(y_lo) = Phi'(y_hi) = -eps`, and `|Phi''| = 1` away from the midpoint.
pub fn bump_phi(y_lo: f64, y_hi: f64, eps_1d: f64, x: f64) -> Result<(f64, f64)> {
    if y_lo.partial_cmp(&y_hi) != Some(std::cmp::Ordering::Less) {
        return Err(Error::InvalidArgument(format!(
            "bump needs y_lo < y_hi, got [{y_lo}, {y_hi}]"
        )));
    }
    if !(x >= y_lo && x <= y_hi) {
        return Err(Error::InvalidArgument(format!(
            "x = {x} outside bump [{y_lo}, {y_hi}]"
        )));
    }
    Ok(bump_unchecked(y_lo, y_hi, eps_1d, x))
}

#[inline]
pub(crate) fn bump_unchecked(y_lo: f64, y_hi: f64, eps_1d: f64, x: f64) -> (f64, f64) {
    let l = y_hi - y_lo;
    let mid = y_lo + 0.5 * l;
    let (psi, dpsi) = if x <= mid {
        let u = x - y_lo;
        (0.5 * u * u, u)
    } else {
        let v = y_hi - x;
        (0.25 * l * l - 0.5 * v * v, v)
    };
    (-eps_1d * (x - y_lo) + psi, -eps_1d + dpsi)
}
