//! mixforge-core: a numerical laboratory for reversible Markov chains with
//! prescribed simultaneous mixing rates.
//!
//! Given a decay parameter `r ∈ (0, 1]` and a log-convex, strictly
//! decreasing rate function `f: [0, ∞) → (0, 1/2]`, the crate
//!
//! 1. builds the piecewise-linear scaffolding of the log envelope
//!    `g(x) = log2(r^x f(x))` ([`envelope`]),
//! 2. derives two-state reversible building blocks from the scaffold legs
//!    ([`two_state`]),
//! 3. assembles a truncated product chain whose state packs the block
//!    states into binary digits ([`chain`]), and
//! 4. verifies — exactly where feasible, by bound or Monte Carlo
//!    elsewhere — that the assembled chain mixes at the prescribed rates:
//!    maximal correlation exactly `r^n`, and strong mixing / absolute
//!    regularity sandwiched between `(1/2)·r^n·f(n)` and `12·r^n·f(n)`
//!    ([`depcoeff`] is the measuring instrument).

pub mod chain;
pub mod depcoeff;
pub mod envelope;
pub mod two_state;

pub use chain::{
    build_chain, estimate_beta_empirical, BetaEstimate, ChainError, ChainSpec, CoeffReport,
    CoeffRow, ProductChain, SampledPath,
};
pub use depcoeff::{
    alpha_exact, alpha_lower_altmax, beta_exact, product_joint, rho_exact, rho_power_oracle,
    DepCoeffError, JointPMF,
};
pub use envelope::{
    build_scaffold, validate_rate_function, EnvelopeError, GridSpec, Leg, LogEnvelope,
    RateCurve, RateFnError, RateFunction, Scaffold, ScaffoldOptions, Tolerances,
    ValidationReport,
};
pub use two_state::{
    block_coeffs, compose, joint_from_transition, make_joint, make_transition, BlockCoeffs,
    BlockParams, JointMatrix2, TransitionMatrix2, TwoStateError,
};
