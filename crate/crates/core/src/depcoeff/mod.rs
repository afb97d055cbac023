//! Exact dependence coefficients of finite joint distributions.
//!
//! For two discrete random variables (Y, Z) with joint table `p_ij` and
//! marginals `p_i`, `q_j`, this module computes:
//!
//! * `beta_exact` — the absolute regularity coefficient
//!   `β = (1/2) Σ_ij |p_ij − p_i q_j|`.  The supremum over pairs of finite
//!   partitions is attained at the atomic partitions: merging cells can
//!   only shrink the sum by the triangle inequality, so refinement is
//!   optimal (tested against explicit partition enumeration).
//! * `alpha_exact` — the strong mixing coefficient
//!   `α = sup_{A,B} |P(A×B) − P(A)P(B)|`.  For a fixed column event B the
//!   optimal row event collects the rows with positive (resp. negative)
//!   residual, so the search is exact over the `2^|S_Z|` column subsets.
//! * `alpha_lower_altmax` — an alternating-maximization lower bound for
//!   tables whose column support exceeds the exact cap.
//! * `rho_exact` / `rho_power_oracle` — the maximal correlation as the
//!   second singular value of the normalized joint, with an alternating
//!   conditional-expectation oracle.
//! * `product_joint` — tensor products of independent pairs.

mod rho;

pub use rho::{rho_exact, rho_power_oracle, MIN_ORACLE_ITERS};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DepCoeffError {
    #[error("invalid pmf: {reason}")]
    InvalidPmf { reason: String },
    #[error(
        "column support {size} exceeds the exact cap {cap}; \
         use alpha_lower_altmax for a certified lower bound"
    )]
    SupportAboveCap { size: usize, cap: usize },
    #[error("product table would have {entries} entries, above the cap {cap}")]
    ProductCap { entries: usize, cap: usize },
    #[error("marginal of {axis} atom {index} is zero; drop empty atoms first")]
    DegenerateSupport { axis: &'static str, index: usize },
    #[error("power iteration did not settle within {iters} iterations (near-tied singular values)")]
    OracleInconclusive { iters: usize },
    #[error("power oracle needs at least {min} iterations (got {got})")]
    TooFewIterations { min: usize, got: usize },
    #[error("csv parse error: {reason}")]
    CsvParse { reason: String },
    #[error("numerical failure: {what}")]
    Numerical { what: String },
}

/// Column-subset count cap for the exact strong-mixing search.
pub const ALPHA_EXACT_CAP: usize = 22;

/// Entry-count cap for tensor products.
pub const PRODUCT_ENTRY_CAP: usize = 1 << 22;

/// Total-mass tolerance accepted at construction.
pub const PMF_MASS_TOL: f64 = 1e-12;

/// A finite joint probability table with derived marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPMF {
    probs: Vec<f64>,
    nrows: usize,
    ncols: usize,
    row_marg: Vec<f64>,
    col_marg: Vec<f64>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl JointPMF {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, DepCoeffError> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
        let row_labels = (0..nrows).map(|i| i.to_string()).collect();
        let col_labels = (0..ncols).map(|j| j.to_string()).collect();
        Self::with_labels(rows, row_labels, col_labels)
    }

    pub fn with_labels(
        rows: Vec<Vec<f64>>,
        row_labels: Vec<String>,
        col_labels: Vec<String>,
    ) -> Result<Self, DepCoeffError> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
        if nrows == 0 || ncols == 0 {
            return Err(DepCoeffError::InvalidPmf {
                reason: "empty table".into(),
            });
        }
        if row_labels.len() != nrows || col_labels.len() != ncols {
            return Err(DepCoeffError::InvalidPmf {
                reason: "label count does not match table shape".into(),
            });
        }
        let mut probs = Vec::with_capacity(nrows * ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(DepCoeffError::InvalidPmf {
                    reason: format!("row {i} has {} cells, expected {ncols}", row.len()),
                });
            }
            for (j, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(DepCoeffError::InvalidPmf {
                        reason: format!("cell ({i}, {j}) = {p}"),
                    });
                }
                probs.push(p);
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_MASS_TOL {
            return Err(DepCoeffError::InvalidPmf {
                reason: format!("total mass {total} differs from 1"),
            });
        }
        let mut row_marg = vec![0.0; nrows];
        let mut col_marg = vec![0.0; ncols];
        for i in 0..nrows {
            for j in 0..ncols {
                row_marg[i] += probs[i * ncols + j];
                col_marg[j] += probs[i * ncols + j];
            }
        }
        Ok(JointPMF {
            probs,
            nrows,
            ncols,
            row_marg,
            col_marg,
            row_labels,
            col_labels,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.ncols + j]
    }

    pub fn row_marginals(&self) -> &[f64] {
        &self.row_marg
    }

    pub fn col_marginals(&self) -> &[f64] {
        &self.col_marg
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    /// Residual against independence: `p_ij − p_i q_j`.
    pub fn residual(&self, i: usize, j: usize) -> f64 {
        self.prob(i, j) - self.row_marg[i] * self.col_marg[j]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.nrows == self.ncols
            && (0..self.nrows).all(|i| {
                (i + 1..self.ncols).all(|j| (self.prob(i, j) - self.prob(j, i)).abs() <= tol)
            })
    }

    /// Copy without rows/columns of zero marginal mass.
    pub fn without_null_atoms(&self) -> JointPMF {
        let keep_r: Vec<usize> = (0..self.nrows).filter(|&i| self.row_marg[i] > 0.0).collect();
        let keep_c: Vec<usize> = (0..self.ncols).filter(|&j| self.col_marg[j] > 0.0).collect();
        let rows = keep_r
            .iter()
            .map(|&i| keep_c.iter().map(|&j| self.prob(i, j)).collect())
            .collect();
        let row_labels = keep_r.iter().map(|&i| self.row_labels[i].clone()).collect();
        let col_labels = keep_c.iter().map(|&j| self.col_labels[j].clone()).collect();
        JointPMF::with_labels(rows, row_labels, col_labels).expect("filtered pmf stays valid")
    }

    /// CSV with column labels in the first row and row labels in the
    /// first column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push(',');
        out.push_str(&self.col_labels.join(","));
        out.push('\n');
        for i in 0..self.nrows {
            out.push_str(&self.row_labels[i]);
            for j in 0..self.ncols {
                out.push_str(&format!(",{:.16e}", self.prob(i, j)));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, DepCoeffError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| DepCoeffError::CsvParse {
            reason: "empty document".into(),
        })?;
        let col_labels: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
        let mut row_labels = Vec::new();
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let mut cells = line.split(',');
            let label = cells.next().unwrap_or_default().to_string();
            let row: Result<Vec<f64>, _> = cells
                .map(|c| {
                    c.trim().parse::<f64>().map_err(|e| DepCoeffError::CsvParse {
                        reason: format!("row {k}: {e}"),
                    })
                })
                .collect();
            row_labels.push(label);
            rows.push(row?);
        }
        JointPMF::with_labels(rows, row_labels, col_labels)
    }
}

/// Absolute regularity coefficient: half the L1 distance between the
/// joint table and the product of its marginals.
pub fn beta_exact(j: &JointPMF) -> f64 {
    let mut sum = 0.0;
    for i in 0..j.nrows {
        for k in 0..j.ncols {
            sum += j.residual(i, k).abs();
        }
    }
    0.5 * sum
}

/// Exact strong mixing coefficient by enumerating column events.
///
/// For each of the `2^|S_Z|` column subsets B the row residuals
/// `d_i = Σ_{j in B} (p_ij − p_i q_j)` sum to zero, and the optimal row
/// event for either sign collects the rows of that sign; the best value
/// over all B and both signs is the supremum.  Subsets walk in Gray-code
/// order so each step updates the residual vector with one column, and
/// high-bit prefixes split the walk into independent parallel chunks.
pub fn alpha_exact(j: &JointPMF) -> Result<f64, DepCoeffError> {
    if j.ncols > ALPHA_EXACT_CAP {
        return Err(DepCoeffError::SupportAboveCap {
            size: j.ncols,
            cap: ALPHA_EXACT_CAP,
        });
    }
    let residuals: Vec<f64> = (0..j.nrows)
        .flat_map(|i| (0..j.ncols).map(move |k| j.residual(i, k)))
        .collect::<Vec<_>>();

    let low_bits = j.ncols.min(16);
    let prefix_bits = j.ncols - low_bits;
    let best = (0u64..(1u64 << prefix_bits))
        .into_par_iter()
        .map(|prefix| {
            alpha_scan_chunk(
                &residuals,
                j.nrows,
                j.ncols,
                prefix << low_bits,
                low_bits,
            )
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Gray-code walk over the low-bit subsets above a fixed high-bit prefix.
fn alpha_scan_chunk(
    residuals: &[f64],
    nrows: usize,
    ncols: usize,
    prefix: u64,
    low_bits: usize,
) -> f64 {
    let mut d = vec![0.0f64; nrows];
    for col in 0..ncols {
        if prefix >> col & 1 == 1 {
            for (i, di) in d.iter_mut().enumerate() {
                *di += residuals[i * ncols + col];
            }
        }
    }
    let value = |d: &[f64]| {
        let (mut pos, mut neg) = (0.0f64, 0.0f64);
        for &x in d {
            if x > 0.0 {
                pos += x;
            } else {
                neg -= x;
            }
        }
        pos.max(neg)
    };
    let mut best = value(&d);
    for step in 1u64..(1u64 << low_bits) {
        let col = step.trailing_zeros() as usize;
        let gray = step ^ (step >> 1);
        let sign = if gray >> col & 1 == 1 { 1.0 } else { -1.0 };
        for (i, di) in d.iter_mut().enumerate() {
            *di += sign * residuals[i * ncols + col];
        }
        best = best.max(value(&d));
    }
    best
}

/// Alternating-maximization lower bound on the strong mixing coefficient.
///
/// Fixing the column event, the analytically optimal row event collects
/// rows with positive residual; fixing the row event symmetrically. Each
/// half-step is nondecreasing, so every start converges to a fixed point
/// and every visited pair is feasible — the result is always a valid
/// lower bound on `alpha`.  The first start is the full column space
/// (which collapses to the zero fixed point on its own), the next starts
/// are the singleton columns, and the rest are seeded random subsets.
pub fn alpha_lower_altmax(j: &JointPMF, starts: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for start in 0..starts.max(1) {
        let mut in_b: Vec<bool> = if start == 0 {
            vec![true; j.ncols]
        } else if start <= j.ncols {
            (0..j.ncols).map(|c| c == start - 1).collect()
        } else {
            (0..j.ncols).map(|_| rng.random::<bool>()).collect()
        };
        let mut value = 0.0f64;
        for _ in 0..64 {
            // Optimal row event for the current column event.
            let d: Vec<f64> = (0..j.nrows)
                .map(|i| {
                    (0..j.ncols)
                        .filter(|&c| in_b[c])
                        .map(|c| j.residual(i, c))
                        .sum()
                })
                .collect();
            let in_a: Vec<bool> = d.iter().map(|&x| x > 0.0).collect();
            // Optimal column event for that row event.
            let e: Vec<f64> = (0..j.ncols)
                .map(|c| {
                    (0..j.nrows)
                        .filter(|&i| in_a[i])
                        .map(|i| j.residual(i, c))
                        .sum()
                })
                .collect();
            let next_b: Vec<bool> = e.iter().map(|&x| x > 0.0).collect();
            let next_value: f64 = e.iter().filter(|&&x| x > 0.0).sum();
            if next_b == in_b && (next_value - value).abs() <= f64::EPSILON {
                value = next_value;
                break;
            }
            in_b = next_b;
            value = next_value;
        }
        best = best.max(value);
    }
    best
}

/// Tensor product of independent joint tables.
///
/// The first table varies fastest in the combined index, so a product of
/// 2-state blocks lands on the binary state encoding used by the product
/// chain: bit j−1 of the combined index is block j's state.
pub fn product_joint(parts: &[&JointPMF], cap_entries: usize) -> Result<JointPMF, DepCoeffError> {
    if parts.is_empty() {
        return Err(DepCoeffError::InvalidPmf {
            reason: "empty product".into(),
        });
    }
    let mut nrows = 1usize;
    let mut ncols = 1usize;
    for part in parts {
        nrows = nrows.saturating_mul(part.nrows);
        ncols = ncols.saturating_mul(part.ncols);
        let entries = nrows.saturating_mul(ncols);
        if entries > cap_entries {
            return Err(DepCoeffError::ProductCap {
                entries,
                cap: cap_entries,
            });
        }
    }

    let mut acc = vec![1.0f64];
    let (mut r_acc, mut c_acc) = (1usize, 1usize);
    for part in parts {
        let mut next = vec![0.0f64; r_acc * part.nrows * c_acc * part.ncols];
        let next_cols = c_acc * part.ncols;
        for pi in 0..part.nrows {
            for pj in 0..part.ncols {
                let w = part.prob(pi, pj);
                for i in 0..r_acc {
                    for j in 0..c_acc {
                        next[(i + r_acc * pi) * next_cols + (j + c_acc * pj)] =
                            acc[i * c_acc + j] * w;
                    }
                }
            }
        }
        acc = next;
        r_acc *= part.nrows;
        c_acc *= part.ncols;
    }

    let rows = (0..r_acc)
        .map(|i| acc[i * c_acc..(i + 1) * c_acc].to_vec())
        .collect();
    JointPMF::from_rows(rows)
}

/// Columnwise independence: reusable check that all three coefficients
/// vanish together.
pub fn is_product_within(j: &JointPMF, tol: f64) -> bool {
    (0..j.nrows()).all(|i| (0..j.ncols()).all(|k| j.residual(i, k).abs() <= tol))
}
