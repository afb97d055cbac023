//! Maximal correlation of a finite joint distribution.
//!
//! For a joint table `p_ij` with strictly positive marginals `p_i`, `q_j`,
//! the maximal correlation `sup |Corr(g(Y), h(Z))|` equals the second
//! singular value of
//!
//! ```text
//! Q_ij = p_ij / sqrt(p_i · q_j),
//! ```
//!
//! whose leading singular pair is the constant functions with σ₁ = 1.
//! Two independent routes are provided: `rho_exact` takes the singular
//! values of Q, and `rho_power_oracle` runs power iteration on the pair of
//! conditional-expectation operators (alternating E[·|Y], E[·|Z] with
//! centering and normalization), which converges to the same quantity and
//! guards the linear-algebra route against implementation bugs.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DepCoeffError, JointPMF};

/// Minimum iteration budget accepted by the power oracle.
pub const MIN_ORACLE_ITERS: usize = 1000;

/// Per-iteration settlement tolerance of the power oracle.
const ORACLE_SETTLE_TOL: f64 = 1e-13;

/// Consecutive settled iterations required to declare convergence.
const ORACLE_SETTLE_RUNS: usize = 8;

fn check_marginals(j: &JointPMF) -> Result<(), DepCoeffError> {
    if let Some(i) = j.row_marginals().iter().position(|&p| p <= 0.0) {
        return Err(DepCoeffError::DegenerateSupport {
            axis: "row",
            index: i,
        });
    }
    if let Some(k) = j.col_marginals().iter().position(|&q| q <= 0.0) {
        return Err(DepCoeffError::DegenerateSupport {
            axis: "column",
            index: k,
        });
    }
    Ok(())
}

/// Maximal correlation as the second singular value of the normalized
/// joint matrix.
pub fn rho_exact(j: &JointPMF) -> Result<f64, DepCoeffError> {
    check_marginals(j)?;
    let q = DMatrix::from_fn(j.nrows(), j.ncols(), |i, k| {
        j.prob(i, k) / (j.row_marginals()[i] * j.col_marginals()[k]).sqrt()
    });
    let mut sv: Vec<f64> = q.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let sigma1 = sv.first().copied().unwrap_or(0.0);
    if (sigma1 - 1.0).abs() > 1e-10 {
        return Err(DepCoeffError::Numerical {
            what: format!("leading singular value {sigma1} differs from 1"),
        });
    }
    Ok(sv.get(1).copied().unwrap_or(0.0).min(1.0))
}

/// Independent oracle: power iteration on the conditional-expectation
/// operators.
///
/// Starting from a seeded random function of Y, alternate
/// `h(z) = E[g(Y) | Z = z]` and `g(y) = E[h(Z) | Y = y]`, centering and
/// normalizing in the marginal L2 norms each round; the correlation
/// `E[g(Y) h(Z)]` converges to the maximal correlation.  Returns the
/// inconclusive error when the iterate has not settled within `iters`
/// rounds (second and third singular values nearly tied).
pub fn rho_power_oracle(j: &JointPMF, iters: usize, seed: u64) -> Result<f64, DepCoeffError> {
    if iters < MIN_ORACLE_ITERS {
        return Err(DepCoeffError::TooFewIterations {
            min: MIN_ORACLE_ITERS,
            got: iters,
        });
    }
    check_marginals(j)?;

    let p = j.row_marginals();
    let q = j.col_marginals();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g: Vec<f64> = (0..j.nrows()).map(|_| rng.random::<f64>() - 0.5).collect();
    if center_normalize(&mut g, p).is_none() {
        g = vec![0.0; j.nrows()];
        if !g.is_empty() {
            g[0] = 1.0;
            center_normalize(&mut g, p);
        }
    }

    let mut h = vec![0.0f64; j.ncols()];
    let mut corr_prev = f64::NAN;
    let mut settled = 0usize;
    for _ in 0..iters {
        // h(z) = E[g(Y) | Z = z]
        for (k, hk) in h.iter_mut().enumerate() {
            *hk = (0..j.nrows()).map(|i| j.prob(i, k) * g[i]).sum::<f64>() / q[k];
        }
        if center_normalize(&mut h, q).is_none() {
            return Ok(0.0); // conditional expectations vanish: independence
        }
        // g(y) = E[h(Z) | Y = y]
        for (i, gi) in g.iter_mut().enumerate() {
            *gi = (0..j.ncols()).map(|k| j.prob(i, k) * h[k]).sum::<f64>() / p[i];
        }
        if center_normalize(&mut g, p).is_none() {
            return Ok(0.0);
        }
        let corr: f64 = (0..j.nrows())
            .map(|i| (0..j.ncols()).map(|k| j.prob(i, k) * g[i] * h[k]).sum::<f64>())
            .sum();
        if (corr - corr_prev).abs() <= ORACLE_SETTLE_TOL {
            settled += 1;
            if settled >= ORACLE_SETTLE_RUNS {
                return Ok(corr.abs().min(1.0));
            }
        } else {
            settled = 0;
        }
        corr_prev = corr;
    }
    Err(DepCoeffError::OracleInconclusive { iters })
}

/// Norm² below which a conditional-expectation image counts as zero.
///
/// The operators are contractions of unit-norm inputs, so an image this
/// small is rounding noise; normalizing it would amplify the centering
/// residual into a spurious O(1) mean.
const IMAGE_NULL_NORM2: f64 = 1e-28;

/// Centers and normalizes `v` in the weighted L2 norm; `None` when the
/// centered vector is numerically zero.
fn center_normalize(v: &mut [f64], weights: &[f64]) -> Option<()> {
    for _ in 0..2 {
        let mean: f64 = v.iter().zip(weights).map(|(x, w)| x * w).sum();
        for x in v.iter_mut() {
            *x -= mean;
        }
        let norm2: f64 = v.iter().zip(weights).map(|(x, w)| x * x * w).sum();
        if norm2 <= IMAGE_NULL_NORM2 {
            return None;
        }
        let inv = norm2.sqrt().recip();
        for x in v.iter_mut() {
            *x *= inv;
        }
    }
    Some(())
}
