//! Acceptance suite: one test per release criterion, each printing a
//! pass line with its runtime (visible under `--nocapture`).
//!
//! Every tolerance is pinned here, in code.  Monte Carlo cases run fixed
//! seeds so the suite is deterministic.

use std::time::Instant;

use mixforge_core::chain::{build_chain, estimate_beta_empirical, DENSE_STATE_CAP, JOINT_CAP_COEFF};
use mixforge_core::depcoeff::{
    alpha_exact, beta_exact, product_joint, rho_exact, rho_power_oracle, JointPMF,
    PRODUCT_ENTRY_CAP,
};
use mixforge_core::envelope::{
    build_scaffold, validate_rate_function, GridSpec, LogEnvelope, RateCurve, RateFunction,
    Scaffold, ScaffoldOptions,
};
use mixforge_core::two_state::{block_coeffs, make_joint, BlockParams};
use mixforge_core::ProductChain;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn announce(name: &str, started: Instant) {
    println!(
        "acceptance {name}: PASS ({} ms)",
        started.elapsed().as_millis()
    );
}

fn poly(p: f64) -> RateFunction {
    RateFunction::polynomial(p).unwrap()
}

fn sexp(q: f64, a: f64) -> RateFunction {
    RateFunction::stretched_exponential(q, a).unwrap()
}

fn scaffold_for(r: f64, f: RateFunction, x_max: f64, min_legs: usize) -> Scaffold {
    let env = LogEnvelope::new(r, f).unwrap();
    build_scaffold(&env, &ScaffoldOptions::covering(x_max).with_min_legs(min_legs)).unwrap()
}

fn random_pmf(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> JointPMF {
    let mut table: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.random::<f64>() + 0.01).collect())
        .collect();
    let total: f64 = table.iter().flatten().sum();
    for row in &mut table {
        for cell in row {
            *cell /= total;
        }
    }
    JointPMF::from_rows(table).unwrap()
}

/// Criterion 1: the generic coefficient engine reproduces the two-state
/// closed forms ((1−ε)εθⁿ, 2(1−ε)εθⁿ, θⁿ) over the parameter grid.
#[test]
fn criterion_1_closed_form_cross_validation() {
    let t0 = Instant::now();
    for &eps in &[0.5, 0.25, 0.015625] {
        for &theta in &[0.9, 0.5, 0.1] {
            for n in 1..=20u32 {
                let closed = block_coeffs(BlockParams::new(eps, theta).unwrap(), n).unwrap();
                let lagged =
                    make_joint(BlockParams::new(eps, theta.powi(n as i32)).unwrap()).to_pmf();
                let alpha = alpha_exact(&lagged).unwrap();
                let beta = beta_exact(&lagged);
                let rho = rho_exact(&lagged).unwrap();
                assert!(
                    (alpha - closed.alpha).abs() <= 1e-10,
                    "alpha at ({eps}, {theta}, {n}): {alpha} vs {}",
                    closed.alpha
                );
                assert!(
                    (beta - closed.beta).abs() <= 1e-10,
                    "beta at ({eps}, {theta}, {n}): {beta} vs {}",
                    closed.beta
                );
                assert!(
                    (rho - closed.rho).abs() <= 1e-10,
                    "rho at ({eps}, {theta}, {n}): {rho} vs {}",
                    closed.rho
                );
            }
        }
    }
    announce("criterion 1 (closed-form cross-validation)", t0);
}

/// Criterion 2: independent products take the maximum component maximal
/// correlation and at most the sum of component regularities.
#[test]
fn criterion_2_composition_laws() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(314159);
    for case in 0..50 {
        let k = if case % 2 == 0 { 2 } else { 3 };
        let blocks: Vec<JointPMF> = (0..k)
            .map(|_| {
                let eps = 0.01 + 0.49 * rng.random::<f64>();
                let theta = 0.05 + 0.9 * rng.random::<f64>();
                make_joint(BlockParams::new(eps, theta).unwrap()).to_pmf()
            })
            .collect();
        let refs: Vec<&JointPMF> = blocks.iter().collect();
        let prod = product_joint(&refs, PRODUCT_ENTRY_CAP).unwrap();

        let max_rho = blocks
            .iter()
            .map(|b| rho_exact(b).unwrap())
            .fold(0.0f64, f64::max);
        let rho = rho_exact(&prod).unwrap();
        assert!(
            (rho - max_rho).abs() <= 1e-10,
            "case {case}: rho {rho} vs max component {max_rho}"
        );

        let beta_sum: f64 = blocks.iter().map(beta_exact).sum();
        assert!(
            beta_exact(&prod) <= beta_sum + 1e-12,
            "case {case}: beta {} above sum {beta_sum}",
            beta_exact(&prod)
        );
    }
    announce("criterion 2 (composition laws)", t0);
}

/// Criterion 3: scaffold invariants for four (r, f) combinations, first
/// twenty or more legs each.
#[test]
fn criterion_3_scaffolding_suite() {
    let t0 = Instant::now();
    let remark14 =
        RateFunction::remark14_auto_shift(1.0, 0.5, 1.0, 0.0, &GridSpec::default()).unwrap();
    let combos: Vec<(f64, RateFunction)> = vec![
        (1.0, poly(1.0)),
        (1.0, sexp(1.0, 0.5)),
        (0.9, poly(1.0)),
        (0.5, remark14),
    ];
    for (r, f) in combos {
        let label = format!("r = {r}, {f:?}");
        let report = validate_rate_function(&f, &GridSpec::default()).unwrap();
        assert!(report.passed(), "{label}: {}", report.summary());

        let scaffold = scaffold_for(r, f, 200.0, 20);
        assert!(scaffold.legs().len() >= 20, "{label}");

        // Chain ordering, intercepts, slope monotonicity, unit-gap roots,
        // per-leg sandwich and cross-leg bound on 1e3-point grids.
        let violations = scaffold.check_invariants(1000);
        assert!(violations.is_empty(), "{label}: {violations:?}");

        // Partial envelope sums against 6·r^x·f(x) on a 1e4-point grid.
        let sums = scaffold.check_envelope_sum(10_000);
        assert!(sums.is_empty(), "{label}: {sums:?}");

        for leg in scaffold.legs() {
            assert!(leg.a <= -(leg.index as f64) + 1e-9, "{label} leg {}", leg.index);
            assert!(leg.sigma < 0.0, "{label} leg {}: slope above log2 r", leg.index);
            let gap = scaffold.leg_gap(leg.index, leg.w);
            assert!((gap - 1.0).abs() <= 1e-9, "{label} leg {}: unit gap {gap}", leg.index);
        }
    }
    announce("criterion 3 (scaffolding suite)", t0);
}

/// Criterion 4: the mixing-rate bracket at truncation level J = 20 for
/// lags 1..=200, plus monotone approach of the truncated correlation.
#[test]
fn criterion_4_theorem_bracket() {
    let t0 = Instant::now();
    let tail = 0.5f64.powi(19);
    for &r in &[1.0, 0.9] {
        for f in [poly(1.0), sexp(1.0, 0.5)] {
            let label = format!("r = {r}, {f:?}");
            let scaffold = scaffold_for(r, f.clone(), 200.0, 20);
            let chain = build_chain(&scaffold, tail).unwrap();
            assert_eq!(chain.truncation_level(), 20, "{label}");

            for n in 1..=200u32 {
                let row = chain.coeff_bounds(n);
                let envelope = r.powi(n as i32) * f.f(n as f64);
                assert!(row.alpha_pass && row.beta_pass, "{label} n = {n}");
                assert!(
                    row.alpha_lb >= 0.5 * envelope * (1.0 - 1e-9),
                    "{label} n = {n}: alpha_lb {} vs {}",
                    row.alpha_lb,
                    0.5 * envelope
                );
                assert!(
                    row.beta_partial_ub + tail <= 12.0 * envelope + tail,
                    "{label} n = {n}: beta {} vs {}",
                    row.beta_partial_ub,
                    12.0 * envelope
                );
            }

            // Truncated maximal correlation increases toward r^n in J
            // (monotonicity asserted; no rate threshold).
            let chains: Vec<_> = [4, 9, 19]
                .iter()
                .map(|&e| build_chain(&scaffold, 0.5f64.powi(e)).unwrap())
                .collect();
            assert_eq!(chains[0].truncation_level(), 5);
            assert_eq!(chains[1].truncation_level(), 10);
            assert_eq!(chains[2].truncation_level(), 20);
            for n in 1..=200u32 {
                let r5 = chains[0].coeff_bounds(n).rho_trunc;
                let r10 = chains[1].coeff_bounds(n).rho_trunc;
                let r20 = chains[2].coeff_bounds(n).rho_trunc;
                let top = r.powi(n as i32);
                assert!(r5 < r10 && r10 < r20, "{label} n = {n}: {r5} {r10} {r20}");
                assert!(r20 <= top, "{label} n = {n}: {r20} vs {top}");
            }
        }
    }
    announce("criterion 4 (theorem bracket)", t0);
}

/// Criterion 5: exact coefficients of the J = 3 truncation sit inside the
/// analytic bounds; the joint is symmetric, reversible, and the maximal
/// correlation is a power of its lag-1 value.
#[test]
fn criterion_5_exact_small_truncation() {
    let t0 = Instant::now();
    let scaffold = scaffold_for(0.9, poly(1.0), 200.0, 20);
    let chain = build_chain(&scaffold, 0.25).unwrap();
    assert_eq!(chain.truncation_level(), 3);
    let product = chain.product().unwrap();
    let theta_top = product.blocks().last().unwrap().theta();

    let pi = product.stationary_dist(DENSE_STATE_CAP).unwrap();
    let tm = product.transition_matrix(DENSE_STATE_CAP).unwrap();
    for x in 0..pi.len() {
        for y in 0..pi.len() {
            assert!(
                (pi[x] * tm[x][y] - pi[y] * tm[y][x]).abs() <= 1e-12,
                "detailed balance at ({x}, {y})"
            );
        }
    }

    let rho_1 = rho_exact(&product.joint_at_lag(1, JOINT_CAP_COEFF).unwrap()).unwrap();
    for &n in &[1u32, 2, 5, 10] {
        let joint = product.joint_at_lag(n, JOINT_CAP_COEFF).unwrap();
        assert!(joint.is_symmetric(1e-15), "asymmetric joint at n = {n}");
        let row = chain.coeff_bounds(n);
        let alpha = alpha_exact(&joint).unwrap();
        let beta = beta_exact(&joint);
        let rho = rho_exact(&joint).unwrap();
        assert!(alpha >= row.alpha_lb - 1e-12, "n = {n}: {alpha} vs {}", row.alpha_lb);
        assert!(
            beta <= row.beta_partial_ub + 1e-12,
            "n = {n}: {beta} vs {}",
            row.beta_partial_ub
        );
        assert!(
            (rho - theta_top.powi(n as i32)).abs() <= 1e-10,
            "n = {n}: rho {rho} vs {}",
            theta_top.powi(n as i32)
        );
        assert!(
            (rho - rho_1.powi(n as i32)).abs() <= 1e-9,
            "n = {n}: rho {rho} vs rho(1)^n {}",
            rho_1.powi(n as i32)
        );
    }
    announce("criterion 5 (exact small truncation)", t0);
}

/// Criterion 6: Monte Carlo agreement at fixed seeds — one-step joint and
/// lag-1 regularity of a single block, stationary bit frequencies of the
/// J = 3 chain.
#[test]
fn criterion_6_monte_carlo() {
    let t0 = Instant::now();
    let steps = 1_000_000usize;

    let block = ProductChain::new(vec![BlockParams::new(0.25, 0.5).unwrap()]).unwrap();
    let path = block.sample_path(steps, 42).unwrap();

    let expected = [[21.0 / 32.0, 3.0 / 32.0], [3.0 / 32.0, 5.0 / 32.0]];
    let mut counts = [[0.0f64; 2]; 2];
    for k in 0..steps - 1 {
        counts[(path.states[k] & 1) as usize][(path.states[k + 1] & 1) as usize] += 1.0;
    }
    let total = (steps - 1) as f64;
    for i in 0..2 {
        for j in 0..2 {
            let p = expected[i][j];
            let se = (p * (1.0 - p) / total).sqrt();
            assert!(
                (counts[i][j] / total - p).abs() <= 3.0 * se,
                "one-step joint cell ({i}, {j}): {} vs {p} (3 se = {})",
                counts[i][j] / total,
                3.0 * se
            );
        }
    }

    let est = estimate_beta_empirical(&path.states, 1, 4242).unwrap();
    let exact = 3.0 / 16.0;
    assert!(
        (est.estimate - exact).abs() <= 3.0 * est.std_error,
        "beta estimate {} vs {exact} (3 se = {})",
        est.estimate,
        3.0 * est.std_error
    );

    // J = 3 chain: stationary frequency of each block bit.  The empirical
    // frequency of a two-state chain has asymptotic variance inflated by
    // (1+θ)/(1−θ) relative to binomial sampling.
    let scaffold = scaffold_for(0.9, poly(1.0), 200.0, 20);
    let chain = build_chain(&scaffold, 0.25).unwrap();
    let product = chain.product().unwrap();
    let path = product.sample_path(steps, 1729).unwrap();
    for (j, (bp, block)) in product.blocks().iter().zip(chain.blocks()).enumerate() {
        let mass = block.a.exp2();
        let theta = bp.theta();
        let se =
            (mass * (1.0 - mass) * (1.0 + theta) / (1.0 - theta) / steps as f64).sqrt();
        let freq = path.bit_frequency(j + 1);
        assert!(
            (freq - mass).abs() <= 3.0 * se,
            "bit {}: frequency {freq} vs mass {mass} (3 se = {})",
            j + 1,
            3.0 * se
        );
    }
    announce("criterion 6 (monte carlo)", t0);
}

/// Criterion 7: the two maximal-correlation routes agree on random
/// tables, and the fast strong-mixing search matches naive enumeration.
#[test]
fn criterion_7_oracle_agreement() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    for case in 0..100 {
        let rows = 2 + (rng.random::<u32>() % 7) as usize;
        let cols = 2 + (rng.random::<u32>() % 7) as usize;
        let j = random_pmf(&mut rng, rows, cols);
        let exact = rho_exact(&j).unwrap();
        let oracle = rho_power_oracle(&j, 500_000, 1000 + case).unwrap();
        assert!(
            (exact - oracle).abs() <= 1e-8,
            "case {case} ({rows}x{cols}): svd {exact} vs oracle {oracle}"
        );
    }

    for case in 0..20 {
        let j = random_pmf(&mut rng, 4, 4);
        let fast = alpha_exact(&j).unwrap();
        let naive = alpha_event_pair_enumeration(&j);
        assert!(
            (fast - naive).abs() <= 5e-15,
            "case {case}: fast {fast} vs naive {naive}"
        );
    }
    announce("criterion 7 (oracle agreement)", t0);
}

/// Brute-force strong mixing straight from the definition: every pair of
/// a row event and a column event.
fn alpha_event_pair_enumeration(j: &JointPMF) -> f64 {
    let mut best = 0.0f64;
    for a in 0u64..(1 << j.nrows()) {
        for b in 0u64..(1 << j.ncols()) {
            let mut joint = 0.0;
            let mut pa = 0.0;
            let mut pb = 0.0;
            for i in 0..j.nrows() {
                if a >> i & 1 == 1 {
                    pa += j.row_marginals()[i];
                    for k in 0..j.ncols() {
                        if b >> k & 1 == 1 {
                            joint += j.prob(i, k);
                        }
                    }
                }
            }
            for k in 0..j.ncols() {
                if b >> k & 1 == 1 {
                    pb += j.col_marginals()[k];
                }
            }
            best = best.max((joint - pa * pb).abs());
        }
    }
    best
}
