//! Two-state reversible Markov building blocks.
//!
//! A block is parameterized by `(ε, θ)` with ε ∈ (0, 1/2] and θ ∈ (0, 1).
//! Its stationary law puts mass `1 − ε` on state 0 and `ε` on state 1, its
//! one-step transition matrix is
//!
//! ```text
//! P(ε, θ) = θ·I + (1 − θ)·A(ε),     A(ε) = rows [1 − ε, ε],
//! ```
//!
//! and the joint law of two consecutive states is the symmetric matrix
//!
//! ```text
//! Λ(ε, θ) = [ (1−ε)² + (1−ε)εθ     (1−ε)ε(1−θ)      ]
//!           [ (1−ε)ε(1−θ)          ε² + (1−ε)εθ     ]
//! ```
//!
//! Every two-state stationary chain is reversible, and the block's mixing
//! coefficients have closed forms: at lag n the maximal correlation is θⁿ,
//! the strong mixing coefficient is (1−ε)εθⁿ, and the absolute regularity
//! coefficient is 2(1−ε)εθⁿ.  These closed forms are the primary oracle
//! against the generic coefficient engine in [`crate::depcoeff`].

use thiserror::Error;

use crate::depcoeff::JointPMF;

#[derive(Debug, Error)]
pub enum TwoStateError {
    #[error("epsilon = {0} outside (0, 1/2]")]
    EpsilonRange(f64),
    #[error("theta = {0} outside (0, 1)")]
    ThetaRange(f64),
    #[error("cannot compose blocks with different epsilon ({a} vs {b})")]
    EpsilonMismatch { a: f64, b: f64 },
    #[error("lag must be at least 1")]
    LagRange,
}

/// Validated block parameters `(ε, θ)`.
///
/// The domain boundaries are rejected: positivity of the joint entries and
/// the closed-form coefficients fail at ε = 0, θ = 0 and θ = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockParams {
    epsilon: f64,
    theta: f64,
}

impl BlockParams {
    pub fn new(epsilon: f64, theta: f64) -> Result<Self, TwoStateError> {
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(TwoStateError::EpsilonRange(epsilon));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(TwoStateError::ThetaRange(theta));
        }
        Ok(BlockParams { epsilon, theta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Joint probability matrix of one block step, indexed by {0,1}².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointMatrix2 {
    params: BlockParams,
    lambda: [[f64; 2]; 2],
}

impl JointMatrix2 {
    pub fn params(&self) -> BlockParams {
        self.params
    }

    pub fn lambda(&self) -> &[[f64; 2]; 2] {
        &self.lambda
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.lambda[i][j]
    }

    /// Marginal mass on state 1 (both coordinates share it).
    pub fn marginal_one(&self) -> f64 {
        self.params.epsilon
    }

    pub fn to_pmf(&self) -> JointPMF {
        JointPMF::from_rows(vec![self.lambda[0].to_vec(), self.lambda[1].to_vec()])
            .expect("block joint is a valid pmf")
    }
}

/// One-step transition matrix of a block, rows indexed by current state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix2 {
    params: BlockParams,
    rows: [[f64; 2]; 2],
}

impl TransitionMatrix2 {
    pub fn params(&self) -> BlockParams {
        self.params
    }

    pub fn rows(&self) -> &[[f64; 2]; 2] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> [f64; 2] {
        self.rows[i]
    }
}

/// Joint matrix Λ(ε, θ) of two consecutive block states.
pub fn make_joint(bp: BlockParams) -> JointMatrix2 {
    let (e, t) = (bp.epsilon, bp.theta);
    let cross = (1.0 - e) * e * t;
    JointMatrix2 {
        params: bp,
        lambda: [
            [(1.0 - e) * (1.0 - e) + cross, (1.0 - e) * e - cross],
            [(1.0 - e) * e - cross, e * e + cross],
        ],
    }
}

/// One-step transition matrix P(ε, θ) = θ·I + (1 − θ)·A(ε).
pub fn make_transition(bp: BlockParams) -> TransitionMatrix2 {
    let (e, t) = (bp.epsilon, bp.theta);
    TransitionMatrix2 {
        params: bp,
        rows: [
            [(1.0 - e) + e * t, e - e * t],
            [(1.0 - e) - (1.0 - e) * t, e + (1.0 - e) * t],
        ],
    }
}

/// Matrix product of two block transitions sharing ε.
///
/// The result carries parameters `(ε, θ·τ)`: the family is closed under
/// composition, so the product equals `make_transition(ε, θ·τ)` entrywise
/// up to rounding.
pub fn compose(
    a: &TransitionMatrix2,
    b: &TransitionMatrix2,
) -> Result<TransitionMatrix2, TwoStateError> {
    if a.params.epsilon != b.params.epsilon {
        return Err(TwoStateError::EpsilonMismatch {
            a: a.params.epsilon,
            b: b.params.epsilon,
        });
    }
    let mut rows = [[0.0; 2]; 2];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a.rows[i][0] * b.rows[0][j] + a.rows[i][1] * b.rows[1][j];
        }
    }
    Ok(TransitionMatrix2 {
        params: BlockParams {
            epsilon: a.params.epsilon,
            theta: a.params.theta * b.params.theta,
        },
        rows,
    })
}

/// Pushes the stationary marginal (1−ε, ε) through the transition matrix;
/// the result reproduces Λ(ε, θ).
pub fn joint_from_transition(bp: BlockParams) -> JointMatrix2 {
    let p = make_transition(bp);
    let marginal = [1.0 - bp.epsilon, bp.epsilon];
    let mut lambda = [[0.0; 2]; 2];
    for (i, row) in lambda.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = marginal[i] * p.rows[i][j];
        }
    }
    JointMatrix2 { params: bp, lambda }
}

/// Closed-form lag-n mixing coefficients of a block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
}

/// `rho = θⁿ`, `alpha = (1−ε)εθⁿ`, `beta = 2(1−ε)εθⁿ`.
pub fn block_coeffs(bp: BlockParams, n: u32) -> Result<BlockCoeffs, TwoStateError> {
    if n < 1 {
        return Err(TwoStateError::LagRange);
    }
    let rho = bp.theta.powi(n as i32);
    let alpha = (1.0 - bp.epsilon) * bp.epsilon * rho;
    Ok(BlockCoeffs {
        alpha,
        beta: 2.0 * alpha,
        rho,
    })
}
