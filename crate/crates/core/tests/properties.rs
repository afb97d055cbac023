//! Property tests: coefficient inequalities and invariances on random
//! tables, chord-gap agreement with a grid-scan oracle, and composition
//! laws on random parameter triples.

use proptest::prelude::*;

use mixforge_core::depcoeff::{alpha_exact, beta_exact, rho_exact, JointPMF};
use mixforge_core::envelope::{LogEnvelope, RateCurve, RateFunction};
use mixforge_core::two_state::{compose, make_transition, BlockParams};

fn table_strategy(max_dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=max_dim, 2..=max_dim).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(0.01..1.0f64, c), r).prop_map(|mut t| {
            let total: f64 = t.iter().flatten().sum();
            for row in &mut t {
                for cell in row {
                    *cell /= total;
                }
            }
            t
        })
    })
}

fn rate_fn_strategy() -> impl Strategy<Value = RateFunction> {
    prop_oneof![
        (0.2..3.0f64).prop_map(|p| RateFunction::polynomial(p).unwrap()),
        ((0.2..2.0f64), (0.2..0.8f64))
            .prop_map(|(q, a)| RateFunction::stretched_exponential(q, a).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coefficient_inequalities(table in table_strategy(6)) {
        let j = JointPMF::from_rows(table).unwrap();
        let alpha = alpha_exact(&j).unwrap();
        let beta = beta_exact(&j);
        let rho = rho_exact(&j).unwrap();
        prop_assert!(alpha >= 0.0 && alpha <= 0.25 + 1e-12);
        prop_assert!(beta >= 0.0 && beta <= 1.0 + 1e-12);
        prop_assert!(rho >= 0.0 && rho <= 1.0 + 1e-10);
        prop_assert!(2.0 * alpha <= beta + 1e-12);
        prop_assert!(4.0 * alpha <= rho + 1e-9);
    }

    #[test]
    fn coefficients_invariant_under_permutations(
        table in table_strategy(5),
        row_swap in (0usize..4, 0usize..4),
        col_swap in (0usize..4, 0usize..4),
    ) {
        let j = JointPMF::from_rows(table.clone()).unwrap();
        let mut permuted = table;
        let (a, b) = (row_swap.0 % permuted.len(), row_swap.1 % permuted.len());
        permuted.swap(a, b);
        let cols = permuted[0].len();
        let (c, d) = (col_swap.0 % cols, col_swap.1 % cols);
        for row in &mut permuted {
            row.swap(c, d);
        }
        let k = JointPMF::from_rows(permuted).unwrap();
        prop_assert!((alpha_exact(&j).unwrap() - alpha_exact(&k).unwrap()).abs() <= 1e-12);
        prop_assert!((beta_exact(&j) - beta_exact(&k)).abs() <= 1e-12);
        prop_assert!((rho_exact(&j).unwrap() - rho_exact(&k).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn product_tables_have_zero_coefficients(
        p in prop::collection::vec(0.05..1.0f64, 2..5),
        q in prop::collection::vec(0.05..1.0f64, 2..5),
    ) {
        let ps: f64 = p.iter().sum();
        let qs: f64 = q.iter().sum();
        let table: Vec<Vec<f64>> = p
            .iter()
            .map(|pi| q.iter().map(|qj| (pi / ps) * (qj / qs)).collect())
            .collect();
        let j = JointPMF::from_rows(table).unwrap();
        prop_assert!(alpha_exact(&j).unwrap() <= 1e-12);
        prop_assert!(beta_exact(&j) <= 1e-12);
        prop_assert!(rho_exact(&j).unwrap() <= 1e-8);
    }

    /// The ternary-search chord gap matches a dense grid scan within
    /// 10x the sup tolerance.
    #[test]
    fn chord_gap_matches_grid_scan(
        f in rate_fn_strategy(),
        r in 0.3..1.0f64,
        v in 0.0..40.0f64,
        width in 0.1..20.0f64,
    ) {
        let env = LogEnvelope::new(r, f.clone()).unwrap();
        let y = v + width;
        let tol_sup = 1e-8;
        let gap = env.chord_gap(v, y, tol_sup).unwrap();
        let phi = |x: f64| f.log2_f(x);
        let sigma = (phi(y) - phi(v)) / (y - v);
        let scan = (0..=100_000)
            .map(|k| {
                let x = v + width * k as f64 / 100_000.0;
                phi(v) + sigma * (x - v) - phi(x)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((gap - scan).abs() <= 10.0 * tol_sup, "gap {gap} vs scan {scan}");
        prop_assert!(gap >= -1e-12);
    }

    /// Composition is associative, and commutative in the correlation
    /// parameter, for a shared block mass.
    #[test]
    fn composition_associative_and_commutative(
        eps in 0.01..0.5f64,
        t1 in 0.05..0.95f64,
        t2 in 0.05..0.95f64,
        t3 in 0.05..0.95f64,
    ) {
        let p1 = make_transition(BlockParams::new(eps, t1).unwrap());
        let p2 = make_transition(BlockParams::new(eps, t2).unwrap());
        let p3 = make_transition(BlockParams::new(eps, t3).unwrap());
        let left = compose(&compose(&p1, &p2).unwrap(), &p3).unwrap();
        let right = compose(&p1, &compose(&p2, &p3).unwrap()).unwrap();
        let swapped = compose(&p2, &p1).unwrap();
        let direct = compose(&p1, &p2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((left.rows()[i][j] - right.rows()[i][j]).abs() <= 1e-13);
                prop_assert!((swapped.rows()[i][j] - direct.rows()[i][j]).abs() <= 1e-13);
            }
        }
    }
}
