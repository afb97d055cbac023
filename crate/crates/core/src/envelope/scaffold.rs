//! Piecewise-linear scaffolding of the log envelope.
//!
//! Starting from `y_0 = 0`, each leg extends to the next unit-gap
//! breakpoint: `y_n` is chosen so the chord of `g` over `[y_{n−1}, y_n]`
//! exceeds `g` by exactly 1 at its interior maximum `w_n`.  Extending the
//! chord to a full line `L_n(x) = a_n + s_n·x` gives the leg parameters:
//!
//! * `s_n` — the chord slope, strictly increasing in n with `s_n < log2 r`;
//! * `a_n` — the intercept `L_n(0)`, with `a_n <= −n`;
//! * on the leg's own interval, `g <= L_n <= g + 1`;
//! * against any other leg j, `L_j <= g + 1 − |n − j|`.
//!
//! Legs store `sigma = s − log2 r` rather than `s`: the slopes approach
//! `log2 r` so fast that for long legs the difference drops below the
//! float resolution of `s` itself, while `sigma` keeps full relative
//! precision at every scale.  All invariant checks evaluate chords on the
//! convex profile `log2 f`, where the linear part has cancelled exactly.

use super::{EnvelopeError, LogEnvelope, Tolerances};

/// One leg of the scaffold: the chord of `g` over `[y_prev, y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    /// 1-based leg index.
    pub index: usize,
    pub y_prev: f64,
    pub y: f64,
    /// Interior point where the chord exceeds the envelope by exactly 1.
    pub w: f64,
    /// Chord slope minus `log2 r`; the full slope is `log2 r + sigma`.
    pub sigma: f64,
    /// Intercept of the extended chord at x = 0.
    pub a: f64,
}

impl Leg {
    /// Full chord slope `s = log2 r + sigma`.
    pub fn slope(&self, log2_r: f64) -> f64 {
        log2_r + self.sigma
    }
}

/// Stopping and safety parameters for the scaffold recursion.
#[derive(Debug, Clone, Copy)]
pub struct ScaffoldOptions {
    /// Extend legs until the coverage reaches at least this point.
    pub x_max: f64,
    /// And until at least this many legs exist.
    pub min_legs: usize,
    /// Hard cap on the number of legs.
    pub max_legs: usize,
    /// Abort the breakpoint search past this abscissa.
    pub x_cap: f64,
    pub tolerances: Tolerances,
}

impl ScaffoldOptions {
    pub fn covering(x_max: f64) -> Self {
        ScaffoldOptions {
            x_max,
            min_legs: 1,
            max_legs: 10_000,
            x_cap: 1e300,
            tolerances: Tolerances::default(),
        }
    }

    pub fn with_min_legs(mut self, min_legs: usize) -> Self {
        self.min_legs = min_legs.max(1);
        self
    }

    pub fn with_x_cap(mut self, x_cap: f64) -> Self {
        self.x_cap = x_cap;
        self
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }
}

/// The ordered legs of the envelope scaffolding.
#[derive(Debug, Clone)]
pub struct Scaffold {
    env: LogEnvelope,
    legs: Vec<Leg>,
    tolerances: Tolerances,
}

/// Builds the scaffold by iterating the unit-gap breakpoint recursion from
/// `y_0 = 0` until the options' coverage and leg-count targets are met.
pub fn build_scaffold(
    env: &LogEnvelope,
    opts: &ScaffoldOptions,
) -> Result<Scaffold, EnvelopeError> {
    if !(opts.x_max > 0.0) {
        return Err(EnvelopeError::DomainError { x: opts.x_max });
    }
    let tol = opts.tolerances;
    let mut legs: Vec<Leg> = Vec::new();
    let mut v = 0.0_f64;
    let mut prev_sigma = f64::NEG_INFINITY;

    loop {
        let index = legs.len() + 1;
        if index > opts.max_legs {
            return Err(EnvelopeError::LegCap { cap: opts.max_legs });
        }
        let y = env.next_breakpoint(v, tol.tol_root, opts.x_cap)?;
        let sigma = env.sigma_slope(v, y);
        let a = env.phi(v) - sigma * v;
        let (w, gap_at_w) = env.gap_max(v, y);

        if !(sigma < 0.0 && sigma > prev_sigma) {
            return Err(EnvelopeError::Numerical {
                what: format!("leg {index}: slope ordering violated (sigma = {sigma})"),
            });
        }
        if !(a <= -(index as f64) + tol.tol_root) {
            return Err(EnvelopeError::Numerical {
                what: format!("leg {index}: intercept a = {a} exceeds -{index}"),
            });
        }
        if !(v < w && w < y) {
            return Err(EnvelopeError::Numerical {
                what: format!("leg {index}: unit-gap point w = {w} outside ({v}, {y})"),
            });
        }
        if (gap_at_w - 1.0).abs() > tol.tol_root {
            return Err(EnvelopeError::Numerical {
                what: format!("leg {index}: gap at w is {gap_at_w}, not 1"),
            });
        }

        legs.push(Leg {
            index,
            y_prev: v,
            y,
            w,
            sigma,
            a,
        });
        prev_sigma = sigma;
        v = y;

        if y >= opts.x_max && legs.len() >= opts.min_legs {
            break;
        }
    }

    Ok(Scaffold {
        env: env.clone(),
        legs,
        tolerances: tol,
    })
}

impl Scaffold {
    pub fn envelope(&self) -> &LogEnvelope {
        &self.env
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances
    }

    pub fn y_last(&self) -> f64 {
        self.legs.last().map(|l| l.y).unwrap_or(0.0)
    }

    /// Index (1-based) of the leg whose interval contains `x`; a boundary
    /// point `x = y_n` resolves to leg n.
    pub fn leg_for(&self, x: f64) -> Result<usize, EnvelopeError> {
        if !(x >= 0.0 && x <= self.y_last()) {
            return Err(EnvelopeError::OutOfCoverage {
                x,
                y_last: self.y_last(),
            });
        }
        let i = self.legs.partition_point(|leg| leg.y < x);
        Ok((i + 1).min(self.legs.len()))
    }

    /// Chord of leg `index` minus the envelope, evaluated at `x`.
    ///
    /// This is `L_n(x) − g(x)` computed on the convex profile, stable at
    /// any scale.
    pub fn leg_gap(&self, index: usize, x: f64) -> f64 {
        let leg = &self.legs[index - 1];
        self.env.phi(leg.y_prev) + leg.sigma * (x - leg.y_prev) - self.env.phi(x)
    }

    /// log2 of the partial sum `Σ_j 2^(a_j + sigma_j·x)` over computed
    /// legs, i.e. the envelope sum with the common factor `r^x` removed.
    pub fn envelope_sum_log2_reduced(&self, x: f64) -> f64 {
        let mut top = f64::NEG_INFINITY;
        for leg in &self.legs {
            top = top.max(leg.a + leg.sigma * x);
        }
        let mut acc = 0.0;
        for leg in &self.legs {
            acc += (leg.a + leg.sigma * x - top).exp2();
        }
        top + acc.log2()
    }

    /// log2 of the partial sum `Σ_j 2^(a_j + s_j·x)` over computed legs.
    pub fn envelope_sum_log2(&self, x: f64) -> Result<f64, EnvelopeError> {
        if !(x >= 0.0) {
            return Err(EnvelopeError::DomainError { x });
        }
        Ok(self.env.log2_r() * x + self.envelope_sum_log2_reduced(x))
    }

    /// The partial sum `Σ_j 2^(a_j + s_j·x)` over computed legs; a lower
    /// bound on the full series, so comparing it against `6·r^x·f(x)`
    /// checks the series bound a fortiori.
    pub fn envelope_sum(&self, x: f64) -> Result<f64, EnvelopeError> {
        Ok(self.envelope_sum_log2(x)?.exp2())
    }

    /// Runs every scaffold invariant on dense per-leg grids and returns
    /// the list of violations (empty when all hold).
    pub fn check_invariants(&self, points_per_leg: usize) -> Vec<String> {
        let tol = self.tolerances;
        let mut bad = Vec::new();
        let legs = &self.legs;

        if legs.first().map(|l| l.y_prev) != Some(0.0) {
            bad.push("first leg does not start at 0".to_string());
        }
        for pair in legs.windows(2) {
            if pair[0].y != pair[1].y_prev {
                bad.push(format!(
                    "legs {} and {} do not chain: {} vs {}",
                    pair[0].index, pair[1].index, pair[0].y, pair[1].y_prev
                ));
            }
            if !(pair[0].sigma < pair[1].sigma) {
                bad.push(format!(
                    "slopes not strictly increasing at leg {}",
                    pair[1].index
                ));
            }
        }

        for leg in legs {
            let n = leg.index;
            if !(leg.y_prev < leg.w && leg.w < leg.y) {
                bad.push(format!("leg {n}: w outside the open interval"));
            }
            if !(leg.sigma < 0.0) {
                bad.push(format!("leg {n}: slope not below log2 r"));
            }
            if !(leg.a <= -(n as f64) + tol.tol_root) {
                bad.push(format!("leg {n}: a = {} above -{n}", leg.a));
            }
            // Endpoint and unit-gap equalities for the chord.
            if self.leg_gap(n, leg.y_prev).abs() > tol.tol_root {
                bad.push(format!("leg {n}: chord misses g at y_prev"));
            }
            if self.leg_gap(n, leg.y).abs() > tol.tol_root {
                bad.push(format!("leg {n}: chord misses g at y"));
            }
            if (self.leg_gap(n, leg.w) - 1.0).abs() > tol.tol_root {
                bad.push(format!("leg {n}: gap at w is {}", self.leg_gap(n, leg.w)));
            }

            // Sandwich g <= L_n <= g + 1 on the leg's own interval, and the
            // cross-leg bound L_j <= g + 1 − |n − j| everywhere else.
            for x in leg_grid(leg, points_per_leg) {
                let own = self.leg_gap(n, x);
                if own < -tol.tol_root || own > 1.0 + tol.tol_sup {
                    bad.push(format!("leg {n}: sandwich violated at x = {x}: {own}"));
                    break;
                }
            }
            for other in legs {
                let j = other.index;
                if j == n {
                    continue;
                }
                let limit = 1.0 - (n as f64 - j as f64).abs() + tol.tol_sup;
                for x in leg_grid(leg, points_per_leg) {
                    let cross = self.leg_gap(j, x);
                    if cross > limit {
                        bad.push(format!(
                            "legs {n}/{j}: cross bound violated at x = {x}: {cross} > {limit}"
                        ));
                        break;
                    }
                }
            }
        }
        bad
    }

    /// Checks the partial envelope sum against `6·r^x·f(x)` on a grid of
    /// `points_total` abscissas spread across the legs (in reduced form:
    /// the common `r^x` factor cancels).
    pub fn check_envelope_sum(&self, points_total: usize) -> Vec<String> {
        let mut bad = Vec::new();
        let per_leg = (points_total / self.legs.len()).max(2);
        let bound = 6f64.log2();
        for leg in &self.legs {
            for x in leg_grid(leg, per_leg) {
                let lhs = self.envelope_sum_log2_reduced(x);
                let rhs = bound + self.env.phi(x);
                if lhs > rhs + self.tolerances.tol_sup {
                    bad.push(format!(
                        "envelope sum exceeds 6·r^x·f(x) at x = {x}: 2^{lhs} vs 2^{rhs}"
                    ));
                    break;
                }
            }
        }
        bad
    }

    /// Renders the leg table as CSV with full round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,y_prev,y,w,s,a\n");
        let log2_r = self.env.log2_r();
        for leg in &self.legs {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                leg.index,
                leg.y_prev,
                leg.y,
                leg.w,
                leg.slope(log2_r),
                leg.a
            ));
        }
        out
    }
}

fn leg_grid(leg: &Leg, points: usize) -> impl Iterator<Item = f64> {
    let (lo, hi) = (leg.y_prev, leg.y);
    let n = points.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |k| (lo + k as f64 * step).min(hi))
}
