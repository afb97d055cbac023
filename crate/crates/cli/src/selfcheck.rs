//! Built-in closed-form fixtures: the fast integrity gate run by
//! `mixforge selfcheck`.
//!
//! Each group pits an independent route against the generic coefficient
//! engine: two-state closed forms, transition composition, the
//! marginal-through-transition identity, product coefficient laws, and
//! envelope chord fixtures.

use mixforge_core::depcoeff::{
    alpha_exact, beta_exact, product_joint, rho_exact, JointPMF, PRODUCT_ENTRY_CAP,
};
use mixforge_core::envelope::{LogEnvelope, RateFunction};
use mixforge_core::two_state::{
    block_coeffs, compose, joint_from_transition, make_joint, make_transition, BlockParams,
};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct FixtureOutcome {
    pub group: &'static str,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl FixtureOutcome {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs every fixture group; `perturb` shifts the expected closed forms
/// (the fault-injection hook behind `--debug-perturb-fixture`).
pub fn run_selfcheck(perturb: f64) -> Vec<FixtureOutcome> {
    vec![
        closed_forms(perturb),
        composition(),
        marginal_through_transition(),
        product_coefficients(),
        envelope_chords(),
    ]
}

const GRID_EPS: [f64; 3] = [0.5, 0.25, 0.015625];
const GRID_THETA: [f64; 3] = [0.9, 0.5, 0.1];

fn closed_forms(perturb: f64) -> FixtureOutcome {
    let mut failures = Vec::new();
    let mut checks = 0;
    for &e in &GRID_EPS {
        for &t in &GRID_THETA {
            for n in 1..=20u32 {
                checks += 1;
                let bp = BlockParams::new(e, t).unwrap();
                let closed = block_coeffs(bp, n).unwrap();
                let lagged = make_joint(BlockParams::new(e, t.powi(n as i32)).unwrap()).to_pmf();
                let alpha = alpha_exact(&lagged).unwrap();
                let beta = beta_exact(&lagged);
                let rho = rho_exact(&lagged).unwrap();
                let bad_alpha = (alpha - (closed.alpha + perturb)).abs() > 1e-10;
                let bad_beta = (beta - (closed.beta + perturb)).abs() > 1e-10;
                let bad_rho = (rho - (closed.rho + perturb)).abs() > 1e-10;
                if bad_alpha || bad_beta || bad_rho {
                    failures.push(format!(
                        "engine vs closed form at (eps={e}, theta={t}, n={n}): \
                         alpha {alpha} vs {}, beta {beta} vs {}, rho {rho} vs {}",
                        closed.alpha + perturb,
                        closed.beta + perturb,
                        closed.rho + perturb
                    ));
                }
            }
        }
    }
    FixtureOutcome {
        group: "two_state_closed_forms",
        checks,
        failures,
    }
}

fn composition() -> FixtureOutcome {
    let mut failures = Vec::new();
    let mut checks = 0;

    // Exact rational fixture: P(1/4, 1/2)^2 = P(1/4, 1/4).
    checks += 1;
    let p = make_transition(BlockParams::new(0.25, 0.5).unwrap());
    let sq = compose(&p, &p).unwrap();
    let expected = [[13.0 / 16.0, 3.0 / 16.0], [9.0 / 16.0, 7.0 / 16.0]];
    for i in 0..2 {
        for j in 0..2 {
            if (sq.rows()[i][j] - expected[i][j]).abs() > 1e-14 {
                failures.push(format!("squared transition cell ({i},{j}) = {}", sq.rows()[i][j]));
            }
        }
    }

    for &e in &GRID_EPS {
        for &t in &GRID_THETA {
            for &u in &GRID_THETA {
                checks += 1;
                let a = make_transition(BlockParams::new(e, t).unwrap());
                let b = make_transition(BlockParams::new(e, u).unwrap());
                let prod = compose(&a, &b).unwrap();
                let direct = make_transition(BlockParams::new(e, t * u).unwrap());
                for i in 0..2 {
                    for j in 0..2 {
                        if (prod.rows()[i][j] - direct.rows()[i][j]).abs() > 1e-14 {
                            failures.push(format!(
                                "composition at (eps={e}, {t}x{u}) cell ({i},{j})"
                            ));
                        }
                    }
                }
            }
        }
    }
    FixtureOutcome {
        group: "transition_composition",
        checks,
        failures,
    }
}

fn marginal_through_transition() -> FixtureOutcome {
    let mut failures = Vec::new();
    let mut checks = 0;
    for &e in &GRID_EPS {
        for &t in &GRID_THETA {
            checks += 1;
            let bp = BlockParams::new(e, t).unwrap();
            let via_rows = joint_from_transition(bp);
            let direct = make_joint(bp);
            for i in 0..2 {
                for j in 0..2 {
                    if (via_rows.entry(i, j) - direct.entry(i, j)).abs() > 1e-14 {
                        failures.push(format!(
                            "marginal-through-transition at (eps={e}, theta={t}) cell ({i},{j})"
                        ));
                    }
                }
            }
            let col0 = via_rows.entry(0, 0) + via_rows.entry(1, 0);
            if (col0 - (1.0 - e)).abs() > 1e-14 {
                failures.push(format!("column marginal at (eps={e}, theta={t}): {col0}"));
            }
        }
    }
    FixtureOutcome {
        group: "joint_from_transition",
        checks,
        failures,
    }
}

fn product_coefficients() -> FixtureOutcome {
    let mut failures = Vec::new();
    let mut checks = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(271828);
    for case in 0..50 {
        checks += 1;
        let k = if case % 2 == 0 { 2 } else { 3 };
        let blocks: Vec<JointPMF> = (0..k)
            .map(|_| {
                let e = 0.01 + 0.49 * rng.random::<f64>();
                let t = 0.05 + 0.9 * rng.random::<f64>();
                make_joint(BlockParams::new(e, t).unwrap()).to_pmf()
            })
            .collect();
        let refs: Vec<&JointPMF> = blocks.iter().collect();
        let prod = product_joint(&refs, PRODUCT_ENTRY_CAP).unwrap();
        let max_rho = blocks
            .iter()
            .map(|b| rho_exact(b).unwrap())
            .fold(0.0f64, f64::max);
        let rho = rho_exact(&prod).unwrap();
        if (rho - max_rho).abs() > 1e-10 {
            failures.push(format!("case {case}: product rho {rho} vs max component {max_rho}"));
        }
        let beta_sum: f64 = blocks.iter().map(beta_exact).sum();
        let beta = beta_exact(&prod);
        if beta > beta_sum + 1e-12 {
            failures.push(format!("case {case}: product beta {beta} above sum {beta_sum}"));
        }
    }
    FixtureOutcome {
        group: "product_coefficients",
        checks,
        failures,
    }
}

fn envelope_chords() -> FixtureOutcome {
    let mut failures = Vec::new();
    let env = LogEnvelope::new(0.5, RateFunction::polynomial(1.0).unwrap()).unwrap();
    if env.g(0.0).unwrap() != -1.0 {
        failures.push(format!("g(0) = {}", env.g(0.0).unwrap()));
    }
    if env.chord_slope(0.0, 1.0).unwrap() != -2.0 {
        failures.push(format!("chord slope = {}", env.chord_slope(0.0, 1.0).unwrap()));
    }
    let expected_gap =
        1.0 - 1.0 / std::f64::consts::LN_2 - std::f64::consts::LN_2.ln() / std::f64::consts::LN_2;
    let gap = env.chord_gap(0.0, 1.0, 1e-8).unwrap();
    if (gap - expected_gap).abs() > 1e-8 {
        failures.push(format!("unit chord gap = {gap}, expected {expected_gap}"));
    }
    FixtureOutcome {
        group: "envelope_chords",
        checks: 3,
        failures,
    }
}
