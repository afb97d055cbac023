//! The log envelope `g(x) = x·log2 r + log2 f(x)` and its chord geometry.
//!
//! `g` is continuous, strictly decreasing, convex, and bounded above by −1.
//! The construction walks chords of `g`: the chord over `[v, y]` has slope
//! `ζ = (g(y) − g(v))/(y − v)` and lies above `g` between its endpoints;
//! the gap
//!
//! ```text
//! M(v, y) = sup_{x in [v,y]} [chord(x) − g(x)]
//! ```
//!
//! is nondecreasing and continuous in `y`, which makes the unit-gap
//! breakpoint (the `w > v` with `M(v, w) = 1`) findable by bracketing and
//! bisection.
//!
//! Every chord difference is evaluated on the convex profile
//! `φ(x) = log2 f(x)` alone: the linear `x·log2 r` part cancels
//! algebraically, and keeping it out of the arithmetic avoids catastrophic
//! cancellation once breakpoints reach x ~ 1e20 (the polynomial family gets
//! there within twenty legs).

mod ratefn;
mod scaffold;

pub use ratefn::{
    validate_curve, validate_rate_function, GridSpec, Hypothesis, HypothesisCheck, RateCurve,
    RateFnError, RateFunction, ValidationReport, AUTO_SHIFT_CAP, AUTO_SHIFT_START,
    MIN_GRID_POINTS, MIN_GRID_X_MAX, MIN_REMARK14_SHIFT,
};
pub use scaffold::{build_scaffold, Leg, Scaffold, ScaffoldOptions};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvelopeError {
    #[error("decay parameter r = {r} must lie in (0, 1]")]
    InvalidDecay { r: f64 },
    #[error("argument x = {x} outside the domain [0, ∞)")]
    DomainError { x: f64 },
    #[error("chord endpoints must satisfy 0 <= v < y (got v = {v}, y = {y})")]
    BadChord { v: f64, y: f64 },
    #[error("tolerance {name} = {value} must be positive")]
    BadTolerance { name: &'static str, value: f64 },
    #[error("envelope evaluation not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error(
        "chord gap never reaches 1 before x_cap = {x_cap} (from v = {v}); \
         the rate function decays too slowly for this cap"
    )]
    EnvelopeExhausted { v: f64, x_cap: f64 },
    #[error("scaffold would exceed the configured cap of {cap} legs")]
    LegCap { cap: usize },
    #[error("x = {x} outside the scaffold coverage [0, {y_last}]")]
    OutOfCoverage { x: f64, y_last: f64 },
    #[error("numerical failure: {what}")]
    Numerical { what: String },
}

/// Root tolerances used throughout the scaffold construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Tolerance on root equalities (unit-gap and endpoint conditions).
    pub tol_root: f64,
    /// Tolerance on supremum searches and grid sandwich checks.
    pub tol_sup: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_root: 1e-9,
            tol_sup: 1e-8,
        }
    }
}

/// The decay envelope `g(x) = x·log2 r + log2 f(x)` for r in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LogEnvelope {
    r: f64,
    log2_r: f64,
    f: RateFunction,
}

impl LogEnvelope {
    pub fn new(r: f64, f: RateFunction) -> Result<Self, EnvelopeError> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(EnvelopeError::InvalidDecay { r });
        }
        Ok(LogEnvelope {
            r,
            log2_r: r.log2(),
            f,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn log2_r(&self) -> f64 {
        self.log2_r
    }

    pub fn rate_function(&self) -> &RateFunction {
        &self.f
    }

    /// The convex profile `φ(x) = log2 f(x)` (no domain check).
    pub(crate) fn phi(&self, x: f64) -> f64 {
        self.f.log2_f(x)
    }

    /// Evaluates `g(x) = x·log2 r + log2 f(x)`.
    pub fn g(&self, x: f64) -> Result<f64, EnvelopeError> {
        if !(x >= 0.0) {
            return Err(EnvelopeError::DomainError { x });
        }
        let value = self.log2_r * x + self.phi(x);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EnvelopeError::NonFinite { x })
        }
    }

    /// Slope of the chord of `g` over `[v, y]`; always negative.
    pub fn chord_slope(&self, v: f64, y: f64) -> Result<f64, EnvelopeError> {
        self.check_chord(v, y)?;
        Ok(self.log2_r + self.sigma_slope(v, y))
    }

    /// Slope of the chord of the convex profile `φ` over `[v, y]`.
    ///
    /// The full chord slope is `log2 r + sigma`; the two parts are kept
    /// separate because `sigma` shrinks below the float resolution of the
    /// sum once legs grow long.
    pub(crate) fn sigma_slope(&self, v: f64, y: f64) -> f64 {
        (self.phi(y) - self.phi(v)) / (y - v)
    }

    /// The chord gap `M(v, y) = sup_x [chord(x) − g(x)]` over `[v, y]`.
    ///
    /// The chord-minus-envelope difference is concave (affine minus
    /// convex), so ternary search locates the supremum; `tol_sup` is the
    /// guaranteed accuracy, though the search runs to float resolution.
    pub fn chord_gap(&self, v: f64, y: f64, tol_sup: f64) -> Result<f64, EnvelopeError> {
        self.check_chord(v, y)?;
        if !(tol_sup > 0.0) {
            return Err(EnvelopeError::BadTolerance {
                name: "tol_sup",
                value: tol_sup,
            });
        }
        let (x_star, gap) = self.gap_max(v, y);
        if !gap.is_finite() {
            return Err(EnvelopeError::NonFinite { x: x_star });
        }
        // The chord touches g at both endpoints, so the sup is >= 0 up to
        // rounding in the chord arithmetic.
        Ok(gap.max(0.0))
    }

    /// Maximizer and value of the concave difference `chord − g` on `[v, y]`.
    pub(crate) fn gap_max(&self, v: f64, y: f64) -> (f64, f64) {
        let sigma = self.sigma_slope(v, y);
        let phi_v = self.phi(v);
        let diff = |x: f64| phi_v + sigma * (x - v) - self.phi(x);
        concave_max(diff, v, y)
    }

    /// Finds `w > v` with `M(v, w) = 1` (within `tol_root`) by doubling a
    /// bracket until the gap reaches 1, then bisecting; valid because
    /// `u ↦ M(v, u)` is nondecreasing and continuous.
    pub fn next_breakpoint(&self, v: f64, tol_root: f64, x_cap: f64) -> Result<f64, EnvelopeError> {
        if !(v >= 0.0) {
            return Err(EnvelopeError::DomainError { x: v });
        }
        if !(tol_root > 0.0) {
            return Err(EnvelopeError::BadTolerance {
                name: "tol_root",
                value: tol_root,
            });
        }

        // Initial step large enough that v + h is representable away from v.
        let mut h = 1f64.max(v * 1e-9);
        let mut lo = v;
        loop {
            let y = v + h;
            if y > x_cap {
                return Err(EnvelopeError::EnvelopeExhausted { v, x_cap });
            }
            let gap = self.gap_max(v, y).1;
            if gap >= 1.0 {
                return self.bisect_unit_gap(v, lo, y, tol_root);
            }
            lo = y;
            h *= 2.0;
        }
    }

    fn bisect_unit_gap(
        &self,
        v: f64,
        mut lo: f64,
        mut hi: f64,
        tol_root: f64,
    ) -> Result<f64, EnvelopeError> {
        for _ in 0..256 {
            let mid = 0.5 * (lo + hi);
            let gap = self.gap_max(v, mid).1;
            if (gap - 1.0).abs() <= tol_root {
                return Ok(mid);
            }
            if gap < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.abs() {
                break;
            }
        }
        let gap = self.gap_max(v, hi).1;
        if (gap - 1.0).abs() <= tol_root {
            Ok(hi)
        } else {
            Err(EnvelopeError::Numerical {
                what: format!("unit-gap bisection stalled at [{lo}, {hi}] from v = {v}"),
            })
        }
    }

    fn check_chord(&self, v: f64, y: f64) -> Result<(), EnvelopeError> {
        if v >= 0.0 && v < y && y.is_finite() {
            Ok(())
        } else {
            Err(EnvelopeError::BadChord { v, y })
        }
    }
}

/// Ternary search for the maximum of a concave function on `[lo, hi]`.
///
/// Runs to float resolution of the interval; near the maximum the function
/// is locally flat, so the value error is far below the position error.
pub(crate) fn concave_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    for _ in 0..200 {
        let third = (hi - lo) / 3.0;
        let m1 = lo + third;
        let m2 = hi - third;
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
        if hi - lo <= f64::EPSILON * (1.0 + hi.abs()) {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}
