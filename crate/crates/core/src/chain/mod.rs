//! The truncated product chain and its mixing-rate verification.
//!
//! Each scaffold leg j contributes an independent two-state block with
//! marginal mass `ε_j = 2^(a_j)` on state 1 and correlation `θ_j = 2^(s_j)`.
//! The assembled chain packs the block states into binary digits,
//! `X_k = Σ_j 2^(j−1)·W_k^(j)`, and is truncated at level J chosen so the
//! discarded tail contributes at most `2^(1−J) <= tail_tol` to every
//! absolute-regularity coefficient (the intercepts satisfy `a_j <= −j`).
//!
//! Per-lag coefficients of the truncated chain:
//!
//! * maximal correlation is exactly `θ_J^n` (an independent product takes
//!   the largest component correlation, and block correlations increase
//!   in j);
//! * strong mixing is at least `(1/2)·max_j ε_j θ_j^n` (each block pair of
//!   σ-fields embeds into the chain's);
//! * absolute regularity is at most `Σ_j 2·ε_j θ_j^n` plus the tail bound
//!   (subadditivity over independent coordinates).
//!
//! Blocks are stored through their exponents `(a_j, σ_j = s_j − log2 r)`:
//! the slopes approach `log2 r` so closely that resolved `θ_j` values
//! collapse in f64 for deep legs, while the exponent form keeps every
//! comparison sharp.  Bound verdicts are evaluated in log2 space with the
//! common `r^n` factor cancelled.

mod sample;

pub use sample::{estimate_beta_empirical, BetaEstimate, SampledPath, BOOTSTRAP_RESAMPLES};

use rayon::prelude::*;
use thiserror::Error;

use crate::depcoeff::{alpha_exact, product_joint, rho_exact, DepCoeffError, JointPMF};
use crate::envelope::{EnvelopeError, LogEnvelope, RateCurve, Scaffold};
use crate::two_state::{make_joint, make_transition, BlockParams, TwoStateError};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error(
        "scaffold has {have} legs covering [0, {y_last}], but the truncation needs {need} \
         blocks; rebuild with min_legs >= {need} and x_max >= {required_x_max}"
    )]
    NeedsMoreLegs {
        have: usize,
        need: usize,
        y_last: f64,
        required_x_max: f64,
    },
    #[error("tail tolerance {0} must lie in (0, 1)")]
    BadTailTol(f64),
    #[error("{count} blocks exceed the cap {cap} for this operation")]
    CapExceeded { count: usize, cap: usize },
    #[error("chain needs at least one block")]
    Empty,
    #[error("block {index} is not representable in f64 probabilities ({what}); {hint}")]
    Unrepresentable {
        index: usize,
        what: String,
        hint: &'static str,
    },
    #[error("path of length {len} too short for lag {lag}; need at least {required}")]
    SampleSize {
        len: usize,
        lag: usize,
        required: usize,
    },
    #[error("sample support of {states} states exceeds {cap}")]
    SampleSupport { states: usize, cap: usize },
    #[error("path is empty")]
    EmptyPath,
    #[error("consistency check failed: {what}")]
    Consistency { what: String },
    #[error(transparent)]
    TwoState(#[from] TwoStateError),
    #[error(transparent)]
    DepCoeff(#[from] DepCoeffError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
}

/// Dense-vector state cap (stationary law, transition matrix).
pub const DENSE_STATE_CAP: usize = 20;

/// Block cap for exact joint tables feeding the strong-mixing search.
pub const JOINT_CAP_EXACT_ALPHA: usize = 5;

/// Block cap for exact joint tables feeding β and ρ.
pub const JOINT_CAP_COEFF: usize = 10;

/// Default truncation level J for exact α inside `verify_theorem`.
pub const DEFAULT_EXACT_ALPHA_J: usize = 4;

/// Slack (in log2 units) granted to bound verdicts; matches the root
/// tolerance the breakpoints were located with.
const VERDICT_LOG2_SLACK: f64 = 1e-9;

/// One two-state block of the truncated chain, in exponent form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainBlock {
    /// 1-based block index (= scaffold leg index).
    pub index: usize,
    /// log2 of the stationary mass on state 1; `a <= −index`.
    pub a: f64,
    /// Correlation exponent gap: `log2 θ = log2 r + sigma`, `sigma < 0`.
    pub sigma: f64,
}

/// The product chain of independent two-state blocks, in resolved f64
/// probabilities; supports sampling and exact dense computations.
#[derive(Debug, Clone)]
pub struct ProductChain {
    blocks: Vec<BlockParams>,
}

impl ProductChain {
    pub fn new(blocks: Vec<BlockParams>) -> Result<Self, ChainError> {
        if blocks.is_empty() {
            return Err(ChainError::Empty);
        }
        Ok(ProductChain { blocks })
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[BlockParams] {
        &self.blocks
    }

    fn check_cap(&self, cap: usize) -> Result<(), ChainError> {
        if self.blocks.len() > cap {
            return Err(ChainError::CapExceeded {
                count: self.blocks.len(),
                cap,
            });
        }
        Ok(())
    }

    /// Stationary law as a dense vector over the `2^J` packed states;
    /// bit j−1 of the state index is block j's state.
    pub fn stationary_dist(&self, cap: usize) -> Result<Vec<f64>, ChainError> {
        self.check_cap(cap.min(DENSE_STATE_CAP))?;
        let mut pi = vec![1.0f64];
        for bp in &self.blocks {
            let mut next = vec![0.0; pi.len() * 2];
            for (code, &mass) in pi.iter().enumerate() {
                next[code] = mass * (1.0 - bp.epsilon());
                next[code + pi.len()] = mass * bp.epsilon();
            }
            pi = next;
        }
        Ok(pi)
    }

    /// Exact joint law of `(X_0, X_n)` as a tensor product of lagged
    /// block joints.
    pub fn joint_at_lag(&self, n: u32, cap: usize) -> Result<JointPMF, ChainError> {
        assert!(n >= 1, "lag must be at least 1");
        self.check_cap(cap)?;
        let lagged: Vec<JointPMF> = self
            .blocks
            .iter()
            .map(|bp| {
                let theta_n = bp.theta().powi(n as i32);
                Ok(make_joint(BlockParams::new(bp.epsilon(), theta_n)?).to_pmf())
            })
            .collect::<Result<_, ChainError>>()?;
        let refs: Vec<&JointPMF> = lagged.iter().collect();
        Ok(product_joint(&refs, usize::MAX)?)
    }

    /// Dense one-step transition matrix over packed states.
    pub fn transition_matrix(&self, cap: usize) -> Result<Vec<Vec<f64>>, ChainError> {
        self.check_cap(cap.min(DENSE_STATE_CAP))?;
        let rows: Vec<[[f64; 2]; 2]> = self
            .blocks
            .iter()
            .map(|&bp| *make_transition(bp).rows())
            .collect();
        let size = 1usize << self.blocks.len();
        let matrix = (0..size)
            .map(|from| {
                (0..size)
                    .map(|to| {
                        rows.iter()
                            .enumerate()
                            .map(|(j, p)| p[from >> j & 1][to >> j & 1])
                            .product()
                    })
                    .collect()
            })
            .collect();
        Ok(matrix)
    }
}

/// The truncated chain specification: scaffold-derived blocks in exponent
/// form plus the envelope they came from.
#[derive(Debug, Clone)]
pub struct ChainSpec {
    envelope: LogEnvelope,
    blocks: Vec<ChainBlock>,
    y_last: f64,
    tail_tol: f64,
}

/// Truncates the scaffold-derived block sequence at the level J that
/// caps the discarded absolute-regularity tail by `tail_tol`: the block
/// masses satisfy `ε_j <= 2^(−j)`, so dropping blocks above J costs at
/// most `Σ_{j>J} 2·2^(−j) = 2^(1−J)`.
pub fn build_chain(scaffold: &Scaffold, tail_tol: f64) -> Result<ChainSpec, ChainError> {
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(ChainError::BadTailTol(tail_tol));
    }
    let need = (1.0 - tail_tol.log2()).ceil() as usize;
    let legs = scaffold.legs();
    if legs.len() < need {
        return Err(ChainError::NeedsMoreLegs {
            have: legs.len(),
            need,
            y_last: scaffold.y_last(),
            required_x_max: scaffold.y_last(),
        });
    }
    let blocks = legs[..need]
        .iter()
        .map(|leg| ChainBlock {
            index: leg.index,
            a: leg.a,
            sigma: leg.sigma,
        })
        .collect();
    Ok(ChainSpec {
        envelope: scaffold.envelope().clone(),
        blocks,
        y_last: scaffold.y_last(),
        tail_tol,
    })
}

impl ChainSpec {
    /// Assembles a chain from explicit block exponents (used for fault
    /// injection and tests); the exponents must satisfy the same
    /// invariants the scaffold guarantees.
    pub fn from_parts(
        envelope: LogEnvelope,
        blocks: Vec<(f64, f64)>,
        y_last: f64,
        tail_tol: f64,
    ) -> Result<Self, ChainError> {
        if blocks.is_empty() {
            return Err(ChainError::Empty);
        }
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(ChainError::BadTailTol(tail_tol));
        }
        let mut prev_sigma = f64::NEG_INFINITY;
        let blocks = blocks
            .into_iter()
            .enumerate()
            .map(|(k, (a, sigma))| {
                let index = k + 1;
                if !(a <= -(index as f64) + 1e-9) || !(sigma < 0.0 && sigma > prev_sigma) {
                    return Err(ChainError::Consistency {
                        what: format!("block {index}: a = {a}, sigma = {sigma}"),
                    });
                }
                prev_sigma = sigma;
                Ok(ChainBlock { index, a, sigma })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ChainSpec {
            envelope,
            blocks,
            y_last,
            tail_tol,
        })
    }

    pub fn envelope(&self) -> &LogEnvelope {
        &self.envelope
    }

    /// Truncation level J.
    pub fn truncation_level(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[ChainBlock] {
        &self.blocks
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn y_last(&self) -> f64 {
        self.y_last
    }

    /// Lag-uniform bound on the absolute regularity lost to truncation.
    pub fn beta_tail_bound(&self) -> f64 {
        (1.0 - self.blocks.len() as f64).exp2()
    }

    /// Resolves the blocks into f64 probabilities for sampling and dense
    /// joint computations.
    ///
    /// Deep blocks can be unrepresentable: `θ_j = r·2^(σ_j)` rounds to r
    /// itself (and to 1.0 when r = 1) once `σ_j` drops below the float
    /// resolution of the product.  Coefficient bounds stay in exponent
    /// form and are unaffected.
    pub fn product(&self) -> Result<ProductChain, ChainError> {
        let log2_r = self.envelope.log2_r();
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let epsilon = b.a.exp2();
                let theta = (log2_r + b.sigma).exp2();
                BlockParams::new(epsilon, theta).map_err(|e| ChainError::Unrepresentable {
                    index: b.index,
                    what: e.to_string(),
                    hint: "use fewer blocks (larger tail_tol) or exponent-form bounds",
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        ProductChain::new(blocks)
    }

    /// Per-lag coefficient bounds and envelope verdicts.
    pub fn coeff_bounds(&self, n: u32) -> CoeffRow {
        assert!(n >= 1, "lag must be at least 1");
        let nf = n as f64;
        let log2_r = self.envelope.log2_r();
        let phi_n = self.envelope.rate_function().log2_f(nf);
        let g_n = log2_r * nf + phi_n;

        // Reduced exponents t_j = a_j + sigma_j·n (common r^n factor out).
        let reduced: Vec<f64> = self
            .blocks
            .iter()
            .map(|b| b.a + b.sigma * nf)
            .collect();
        let top = reduced.iter().fold(f64::NEG_INFINITY, |m, &t| m.max(t));
        let sum_log2 = top
            + reduced
                .iter()
                .map(|&t| (t - top).exp2())
                .sum::<f64>()
                .log2();

        let last = self.blocks.last().expect("chain is nonempty");
        let rho_trunc = ((log2_r + last.sigma) * nf).exp2();
        let alpha_lb = 0.5 * (log2_r * nf + top).exp2();
        let beta_partial_ub = (log2_r * nf + 1.0 + sum_log2).exp2();

        // Verdicts in log2 space: alpha needs max_j t_j >= phi(n) and the
        // beta sum needs Σ 2^(1 + t_j) <= 12·2^(phi(n)).
        let alpha_pass = top >= phi_n - VERDICT_LOG2_SLACK;
        let beta_pass = 1.0 + sum_log2 <= 12f64.log2() + phi_n + VERDICT_LOG2_SLACK;

        CoeffRow {
            n,
            rho_trunc,
            r_pow_n: (log2_r * nf).exp2(),
            alpha_lb,
            alpha_exact: None,
            beta_partial_ub,
            beta_tail_ub: self.beta_tail_bound(),
            lower_env: 0.5 * g_n.exp2(),
            upper_env: 12.0 * g_n.exp2(),
            alpha_pass,
            beta_pass,
        }
    }

    /// Verifies the prescribed mixing-rate bracket for lags `1..=n_max`.
    ///
    /// When the truncation level J is at most `exact_alpha_j`, each row
    /// additionally carries the exact strong-mixing coefficient of the
    /// truncated chain, cross-checked against the analytic bounds.
    pub fn verify_theorem(
        &self,
        n_max: u32,
        exact_alpha_j: usize,
    ) -> Result<CoeffReport, ChainError> {
        assert!(n_max >= 1, "n_max must be at least 1");
        if (n_max as f64) > self.y_last {
            return Err(ChainError::NeedsMoreLegs {
                have: self.blocks.len(),
                need: self.blocks.len(),
                y_last: self.y_last,
                required_x_max: n_max as f64,
            });
        }
        // Exact alpha needs the event-pair search, which enumerates
        // column subsets of the 2^J-state joint.
        let exact = self.blocks.len() <= exact_alpha_j
            && (1usize << self.blocks.len()) <= crate::depcoeff::ALPHA_EXACT_CAP;
        let product = if exact { Some(self.product()?) } else { None };

        let mut rows = (1..=n_max)
            .into_par_iter()
            .map(|n| -> Result<CoeffRow, ChainError> {
                let mut row = self.coeff_bounds(n);
                if let Some(chain) = &product {
                    let joint = chain.joint_at_lag(n, JOINT_CAP_EXACT_ALPHA)?;
                    let a = alpha_exact(&joint)?;
                    let r = rho_exact(&joint)?;
                    if a < row.alpha_lb - 1e-12 {
                        return Err(ChainError::Consistency {
                            what: format!("lag {n}: exact alpha {a} below bound {}", row.alpha_lb),
                        });
                    }
                    if (r - row.rho_trunc).abs() > 1e-10 {
                        return Err(ChainError::Consistency {
                            what: format!(
                                "lag {n}: exact rho {r} differs from {}",
                                row.rho_trunc
                            ),
                        });
                    }
                    row.alpha_exact = Some(a);
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.sort_by_key(|r| r.n);

        let all_pass = rows.iter().all(|r| r.alpha_pass && r.beta_pass);
        Ok(CoeffReport {
            truncation_level: self.blocks.len(),
            rho_limit_only: self.envelope.r() == 1.0,
            all_pass,
            rows,
        })
    }
}

/// One per-lag record of the coefficient report.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffRow {
    pub n: u32,
    /// Maximal correlation of the truncated chain, `θ_J^n`.
    pub rho_trunc: f64,
    pub r_pow_n: f64,
    /// Certified lower bound `(1/2)·max_j ε_j θ_j^n` on strong mixing.
    pub alpha_lb: f64,
    /// Exact strong mixing of the truncated chain (small J only).
    pub alpha_exact: Option<f64>,
    /// Upper bound `Σ_j 2·ε_j θ_j^n` on the retained blocks' regularity.
    pub beta_partial_ub: f64,
    /// Lag-uniform bound `2^(1−J)` on the truncated tail.
    pub beta_tail_ub: f64,
    /// `(1/2)·r^n·f(n)`.
    pub lower_env: f64,
    /// `12·r^n·f(n)`.
    pub upper_env: f64,
    pub alpha_pass: bool,
    pub beta_pass: bool,
}

/// Full verification report over a lag range.
#[derive(Debug, Clone)]
pub struct CoeffReport {
    pub rows: Vec<CoeffRow>,
    pub all_pass: bool,
    /// With r = 1 every truncation has maximal correlation strictly below
    /// 1; the prescribed value is attained only in the infinite limit.
    pub rho_limit_only: bool,
    pub truncation_level: usize,
}

impl CoeffReport {
    pub fn failures(&self) -> Vec<&CoeffRow> {
        self.rows
            .iter()
            .filter(|r| !(r.alpha_pass && r.beta_pass))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,rho_trunc,r_pow_n,alpha_lb,alpha_exact,beta_partial_ub,beta_tail_ub,lower_env,upper_env,alpha_pass,beta_pass\n",
        );
        for r in &self.rows {
            let alpha_exact = r
                .alpha_exact
                .map(|a| format!("{a:.16e}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
                r.n,
                r.rho_trunc,
                r.r_pow_n,
                r.alpha_lb,
                alpha_exact,
                r.beta_partial_ub,
                r.beta_tail_ub,
                r.lower_env,
                r.upper_env,
                r.alpha_pass,
                r.beta_pass
            ));
        }
        out
    }
}
