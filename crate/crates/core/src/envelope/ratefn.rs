//! Rate functions: parametric, log-convex, strictly decreasing decay profiles
//! `f: [0, ∞) → (0, 1/2]` together with grid-based validation of the
//! properties the envelope construction relies on.
//!
//! Three built-in families are provided:
//!
//! * `polynomial`:            f(x) = (1/2)·(x+1)^(−p),              p > 0
//! * `stretched_exponential`: f(x) = (1/2)·exp(−q·x^a),             q > 0, a ∈ (0,1)
//! * `remark14`:              f(x) = K·exp(−q·(T+x)^a)·(T+x)^b·(log(T+x))^c
//!
//! where the `remark14` family is rescaled by the constant K so that
//! f(0) = 1/2 exactly, and the shift T must be large enough for the family
//! to be strictly decreasing and log-convex from x = 0 on.  Every family
//! exposes `log2_f` analytically; downstream code works in log space so
//! that deep tails (f(x) ~ 2^(−10^5)) never underflow.

use std::f64::consts::LN_2;

use thiserror::Error;

/// Smallest admissible shift for the `remark14` family (the shifted
/// argument must stay above e so the iterated logarithm is positive).
pub const MIN_REMARK14_SHIFT: f64 = std::f64::consts::E;

/// Starting point of the doubling search for an admissible shift.
pub const AUTO_SHIFT_START: f64 = 8.0;

/// The doubling search gives up past this shift.
pub const AUTO_SHIFT_CAP: f64 = 1.0995116e12; // 2^40

#[derive(Debug, Error)]
pub enum RateFnError {
    #[error("parameter `{name}` = {value} violates {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("validation grid must have at least {min_points} points and x_max >= {min_x_max} (got {points} points, x_max = {x_max})")]
    InvalidGrid {
        points: usize,
        x_max: f64,
        min_points: usize,
        min_x_max: f64,
    },
    #[error("rate function evaluation is not finite at x = {x}")]
    NonFiniteEvaluation { x: f64 },
    #[error("no admissible shift up to {cap} makes the remark14 family valid on the grid")]
    NoValidShift { cap: f64 },
}

/// A decay profile exposed through its base-2 logarithm.
///
/// Implementors must return `log2 f(x)` for x >= 0.  The default `f`
/// simply exponentiates; it may underflow to zero for very deep tails,
/// which is fine for reporting but not for envelope arithmetic — the
/// envelope machinery only ever consumes `log2_f`.
pub trait RateCurve {
    fn log2_f(&self, x: f64) -> f64;

    fn f(&self, x: f64) -> f64 {
        self.log2_f(x).exp2()
    }
}

/// Built-in rate-function families with validated parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum RateFunction {
    Polynomial {
        p: f64,
    },
    StretchedExponential {
        q: f64,
        a: f64,
    },
    Remark14 {
        q: f64,
        a: f64,
        b: f64,
        c: f64,
        shift: f64,
        /// log2 of the constant that rescales the family so f(0) = 1/2.
        log2_scale: f64,
    },
}

impl RateFunction {
    pub fn polynomial(p: f64) -> Result<Self, RateFnError> {
        require(p, "p", p > 0.0 && p.is_finite(), "p > 0")?;
        Ok(RateFunction::Polynomial { p })
    }

    pub fn stretched_exponential(q: f64, a: f64) -> Result<Self, RateFnError> {
        require(q, "q", q > 0.0 && q.is_finite(), "q > 0")?;
        require(a, "a", a > 0.0 && a < 1.0, "a in (0, 1)")?;
        Ok(RateFunction::StretchedExponential { q, a })
    }

    pub fn remark14(q: f64, a: f64, b: f64, c: f64, shift: f64) -> Result<Self, RateFnError> {
        require(q, "q", q > 0.0 && q.is_finite(), "q > 0")?;
        require(a, "a", a > 0.0 && a < 1.0, "a in (0, 1)")?;
        require(b, "b", b.is_finite(), "finite b")?;
        require(c, "c", c.is_finite(), "finite c")?;
        require(shift, "shift", shift > MIN_REMARK14_SHIFT, "shift > e")?;
        let log2_scale = -1.0 - log2_eta(q, a, b, c, shift);
        Ok(RateFunction::Remark14 {
            q,
            a,
            b,
            c,
            shift,
            log2_scale,
        })
    }

    /// Picks the shift for the `remark14` family by doubling from 8 until
    /// the resulting function passes validation on `grid`.
    pub fn remark14_auto_shift(
        q: f64,
        a: f64,
        b: f64,
        c: f64,
        grid: &GridSpec,
    ) -> Result<Self, RateFnError> {
        let mut shift = AUTO_SHIFT_START;
        while shift <= AUTO_SHIFT_CAP {
            let candidate = Self::remark14(q, a, b, c, shift)?;
            if let Ok(report) = validate_rate_function(&candidate, grid) {
                if report.passed() {
                    return Ok(candidate);
                }
            }
            shift *= 2.0;
        }
        Err(RateFnError::NoValidShift {
            cap: AUTO_SHIFT_CAP,
        })
    }
}

fn require(
    value: f64,
    name: &'static str,
    ok: bool,
    constraint: &'static str,
) -> Result<(), RateFnError> {
    if ok {
        Ok(())
    } else {
        Err(RateFnError::InvalidParameter {
            name,
            value,
            constraint,
        })
    }
}

/// log2 of exp(−q·t^a)·t^b·(log t)^c for t > e.
fn log2_eta(q: f64, a: f64, b: f64, c: f64, t: f64) -> f64 {
    (-q * t.powf(a) + b * t.ln() + c * t.ln().ln()) / LN_2
}

impl RateCurve for RateFunction {
    fn log2_f(&self, x: f64) -> f64 {
        match *self {
            RateFunction::Polynomial { p } => -1.0 - p * (x + 1.0).log2(),
            RateFunction::StretchedExponential { q, a } => -1.0 - q * x.powf(a) / LN_2,
            RateFunction::Remark14 {
                q,
                a,
                b,
                c,
                shift,
                log2_scale,
            } => log2_scale + log2_eta(q, a, b, c, shift + x),
        }
    }
}

/// Evaluation grid for the hypothesis checks.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub x_max: f64,
    pub points: usize,
}

pub const MIN_GRID_POINTS: usize = 1000;
pub const MIN_GRID_X_MAX: f64 = 100.0;

impl GridSpec {
    pub fn new(x_max: f64, points: usize) -> Result<Self, RateFnError> {
        if points < MIN_GRID_POINTS || !(x_max >= MIN_GRID_X_MAX) {
            return Err(RateFnError::InvalidGrid {
                points,
                x_max,
                min_points: MIN_GRID_POINTS,
                min_x_max: MIN_GRID_X_MAX,
            });
        }
        Ok(GridSpec { x_max, points })
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        let step = self.x_max / (self.points - 1) as f64;
        (0..self.points).map(move |k| (k as f64 * step).min(self.x_max))
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            x_max: 400.0,
            points: 4001,
        }
    }
}

/// Which property of the rate function a check verifies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hypothesis {
    /// f(0) <= 1/2 and f > 0 on the grid.
    Range,
    /// f strictly decreasing on the grid.
    StrictDecrease,
    /// log f has nonnegative discrete second differences.
    LogConvexity,
    /// u^x / f(x) eventually decreasing and < 1e-6 at the grid's right end.
    DominatesExponential { u: f64 },
    /// f(x_max) has dropped noticeably below f(0).
    DecayTrend,
}

impl Hypothesis {
    fn label(&self) -> String {
        match self {
            Hypothesis::Range => "range in (0, 1/2]".to_string(),
            Hypothesis::StrictDecrease => "strictly decreasing".to_string(),
            Hypothesis::LogConvexity => "log-convexity".to_string(),
            Hypothesis::DominatesExponential { u } => {
                format!("dominates exponentials (u = {u})")
            }
            Hypothesis::DecayTrend => "decays toward zero".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisCheck {
    pub hypothesis: Hypothesis,
    pub passed: bool,
    /// Grid point witnessing a failure.
    pub witness: Option<(f64, String)>,
    /// Set for checks that a finite grid cannot decide conclusively.
    pub note: Option<&'static str>,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<HypothesisCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                let verdict = if c.passed { "pass" } else { "FAIL" };
                match &c.witness {
                    Some((x, detail)) => {
                        format!("{}: {} (x = {}, {})", c.hypothesis.label(), verdict, x, detail)
                    }
                    None => format!("{}: {}", c.hypothesis.label(), verdict),
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

const NUMERIC_EVIDENCE: &str = "numeric evidence only; a finite grid cannot decide this";

/// Sampled decay ratios used by the exponential-domination proxy.
const DOMINATION_SAMPLES: [f64; 3] = [0.9, 0.5, 0.1];

/// Ratio threshold at the right end of the grid for the domination proxy.
const DOMINATION_RATIO_CAP_LOG2: f64 = -19.931568569324174; // log2(1e-6)

/// Checks a built-in rate function against the construction hypotheses.
pub fn validate_rate_function(
    f: &RateFunction,
    grid: &GridSpec,
) -> Result<ValidationReport, RateFnError> {
    validate_curve(f, grid)
}

/// Grid validation for any curve exposed through `log2 f`.
pub fn validate_curve(
    curve: &dyn RateCurve,
    grid: &GridSpec,
) -> Result<ValidationReport, RateFnError> {
    GridSpec::new(grid.x_max, grid.points)?;

    let xs: Vec<f64> = grid.xs().collect();
    let mut phis = Vec::with_capacity(xs.len());
    let mut range_witness: Option<(f64, String)> = None;
    for &x in &xs {
        let phi = curve.log2_f(x);
        if phi.is_nan() || phi == f64::INFINITY {
            return Err(RateFnError::NonFiniteEvaluation { x });
        }
        if phi == f64::NEG_INFINITY && range_witness.is_none() {
            range_witness = Some((x, "f(x) = 0".to_string()));
        }
        phis.push(phi);
    }

    let mut checks = Vec::new();

    // Range: f(0) <= 1/2 and f > 0 everywhere on the grid.
    if range_witness.is_none() && phis[0] > -1.0 + 1e-12 {
        range_witness = Some((xs[0], format!("f(0) = {} > 1/2", phis[0].exp2())));
    }
    let range_ok = range_witness.is_none();
    checks.push(HypothesisCheck {
        hypothesis: Hypothesis::Range,
        passed: range_ok,
        witness: range_witness,
        note: None,
    });

    if !range_ok {
        // The remaining checks assume a finite log profile.
        return Ok(ValidationReport { checks });
    }

    // Strict decrease.
    let mut witness = None;
    for k in 0..xs.len() - 1 {
        if !(phis[k + 1] < phis[k]) {
            witness = Some((xs[k + 1], format!("log2 f rose to {}", phis[k + 1])));
            break;
        }
    }
    checks.push(HypothesisCheck {
        hypothesis: Hypothesis::StrictDecrease,
        passed: witness.is_none(),
        witness,
        note: None,
    });

    // Log-convexity via discrete second differences, with a small slack
    // for float noise in nearly flat regions.
    let mut witness = None;
    for k in 1..xs.len() - 1 {
        let second = phis[k - 1] - 2.0 * phis[k] + phis[k + 1];
        let slack = 64.0 * f64::EPSILON * (1.0 + phis[k].abs());
        if second < -slack {
            witness = Some((xs[k], format!("second difference = {second}")));
            break;
        }
    }
    checks.push(HypothesisCheck {
        hypothesis: Hypothesis::LogConvexity,
        passed: witness.is_none(),
        witness,
        note: None,
    });

    // u^x = o(f(x)) proxy: the log-ratio x·log2 u − log2 f(x) must be
    // strictly decreasing over the last quarter of the grid and below
    // log2(1e-6) at the right end.
    for u in DOMINATION_SAMPLES {
        let log2_u = u.log2();
        let ratio = |k: usize| xs[k] * log2_u - phis[k];
        let tail_start = xs.len() - xs.len() / 4;
        let mut witness = None;
        for k in tail_start..xs.len() - 1 {
            if !(ratio(k + 1) < ratio(k)) {
                witness = Some((xs[k + 1], "ratio u^x / f(x) not decreasing".to_string()));
                break;
            }
        }
        if witness.is_none() {
            let end = ratio(xs.len() - 1);
            if end >= DOMINATION_RATIO_CAP_LOG2 {
                witness = Some((
                    xs[xs.len() - 1],
                    format!("log2 of u^x / f(x) = {end} >= log2(1e-6)"),
                ));
            }
        }
        checks.push(HypothesisCheck {
            hypothesis: Hypothesis::DominatesExponential { u },
            passed: witness.is_none(),
            witness,
            note: Some(NUMERIC_EVIDENCE),
        });
    }

    // Decay trend: f(x_max) <= 0.9 f(0).
    let drop = phis[xs.len() - 1] - phis[0];
    let decays = drop <= 0.9f64.log2();
    checks.push(HypothesisCheck {
        hypothesis: Hypothesis::DecayTrend,
        passed: decays,
        witness: if decays {
            None
        } else {
            Some((
                xs[xs.len() - 1],
                format!("f(x_max)/f(0) = {}", drop.exp2()),
            ))
        },
        note: Some(NUMERIC_EVIDENCE),
    });

    Ok(ValidationReport { checks })
}
