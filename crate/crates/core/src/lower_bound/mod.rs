//! Resisting-oracle lower bound for finding l1-stationary points.
//!
//! All one-dimensional bookkeeping happens in the scaled coordinate
//! `z = sqrt(d) x_i` with per-coordinate tolerance `eps_1d = eps / sqrt(d)`.
//! The oracle answers `-eps_1d` (scaled back by `1/sqrt(d)`) on every
//! coordinate and logs the queried `z`. Afterwards [`materialize`] builds,
//! per coordinate, a C1 function through the logged points with slope
//! `-eps_1d` at each of them: short gaps (`l < 8 eps_1d`) are linear, long
//! gaps get a [`bump_phi`] segment. The hard instance is
//! `p(x) = (1/d) sum_i f_i(sqrt(d) x_i)`.

mod bump;
mod instance;
mod oracle;
mod trial;

pub use bump::bump_phi;
pub use instance::{hard_eval, materialize, verify_instance, CoordFunction, HardInstance, Segment, VerificationReport};
pub use oracle::ResistingOracle;
pub use trial::{query_complexity_trial, query_threshold, TrialMethod, TrialOutcome};

/// Queries closer than this in `z` are merged into one knot.
pub const KNOT_MERGE_TOL: f64 = 1e-12;

/// Cap on how many periods `1/eps_1d` a query may sit past the origin.
pub const MAX_PERIODS: f64 = 1e6;

/// Splits `z >= period` into `(k, r)` with `z = k * period + r`,
/// `0 <= r < period`. Shared by the oracle and the instance so both land on
/// bitwise-identical reduced points.
pub(crate) fn reduce(z: f64, period: f64) -> crate::Result<(f64, f64)> {
    let mut k = (z / period).floor();
    if k > MAX_PERIODS {
        return Err(crate::Error::LowerBound(format!(
            "query z = {z} is more than {MAX_PERIODS} periods out"
        )));
    }
    let mut r = z - k * period;
    if r < 0.0 {
        k -= 1.0;
        r += period;
    } else if r >= period {
        k += 1.0;
        r -= period;
    }
    Ok((k, r))
}
