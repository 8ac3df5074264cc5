use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use subopt::bounds::{ball_from_suboptimal, error_bounds, validation_bounds, BoundSource};
use subopt::dataset::{Dataset, KernelSpec};
use subopt::geometry::{bound_inner, bound_inner_intersection, Ball, FeatureVector, Interval};
use subopt::lasso::{lambda_max, lasso_dual_ball, safe_screen};
use subopt::loss::{validation_error, EvalSet, LossKind, Problem};
use subopt::selection::{select_model, CandidateGrid};
use subopt::trainer::{lasso_dual_point, train, train_lasso, SolverConfig};

fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, d)
}

fn dataset(values: &[f64], n: usize, d: usize) -> Dataset {
    let x = DMatrix::from_row_slice(n, d, &values[..n * d]);
    let y: Vec<f64> = (0..n)
        .map(|i| if (i * 7 + 3) % 5 < 2 { -1.0 } else { 1.0 })
        .collect();
    Dataset::from_dense(&x, &y).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bound_inner_symmetry_and_exactness(m in vec_strategy(4), t in vec_strategy(4), r in 0.0..5.0f64) {
        let theta = FeatureVector::primal(DVector::from_vec(t.clone()));
        let neg = FeatureVector::primal(-DVector::from_vec(t));
        let ball = Ball::new(FeatureVector::primal(DVector::from_vec(m.clone())), r).unwrap();
        let a = bound_inner(&ball, &theta).unwrap();
        let b = bound_inner(&ball, &neg).unwrap();
        prop_assert_eq!(a.negate(), b);
        let point = Ball::new(FeatureVector::primal(DVector::from_vec(m)), 0.0).unwrap();
        let iv = bound_inner(&point, &theta).unwrap();
        prop_assert_eq!(iv.lo, iv.hi);
    }

    #[test]
    fn intersection_dominates_single_balls(
        m1 in vec_strategy(5),
        dir in vec_strategy(5),
        t in vec_strategy(5),
        r1 in 0.01..3.0f64,
        r2 in 0.01..3.0f64,
        frac in 0.0..1.0f64,
    ) {
        let m1 = DVector::from_vec(m1);
        let dir = DVector::from_vec(dir);
        prop_assume!(dir.norm() > 1e-6);
        let m2 = &m1 + dir.normalize() * (frac * (r1 + r2));
        let b1 = Ball::new(FeatureVector::primal(m1), r1).unwrap();
        let b2 = Ball::new(FeatureVector::primal(m2), r2).unwrap();
        let theta = FeatureVector::primal(DVector::from_vec(t));
        let lens = bound_inner_intersection(&b1, &b2, &theta).unwrap();
        prop_assert!(lens.is_subset_of(&bound_inner(&b1, &theta).unwrap(), 1e-12));
        prop_assert!(lens.is_subset_of(&bound_inner(&b2, &theta).unwrap(), 1e-12));
        prop_assert!(lens.lo <= lens.hi);
    }

    #[test]
    fn error_bounds_sandwich_any_contained_values(
        z in prop::collection::vec(-2.0..2.0f64, 1..30),
        widths in prop::collection::vec(0.0..1.0f64, 30),
        flips in prop::collection::vec(any::<bool>(), 30),
    ) {
        let labels: Vec<f64> = flips[..z.len()].iter().map(|&f| if f { 1.0 } else { -1.0 }).collect();
        let intervals: Vec<Interval> = z.iter().zip(&widths).map(|(&v, &w)| Interval::new(v - w, v + w)).collect();
        let (lo, hi) = error_bounds(&labels, &intervals).unwrap();
        let truth = validation_error(&labels, &DVector::from_vec(z));
        prop_assert!(lo <= truth && truth <= hi, "lo {lo} truth {truth} hi {hi}");
    }

    #[test]
    fn validation_bounds_sandwich_oracle_error(values in vec_strategy(60), c in 0.05..20.0f64, c_ref in 0.05..20.0f64) {
        let train_set = dataset(&values, 12, 3);
        let val = dataset(&values[36..], 8, 3);
        for loss in [LossKind::Logistic, LossKind::Hinge] {
            let p = Problem::new(train_set.clone(), KernelSpec::Linear, loss).unwrap();
            let eval = EvalSet::new(&p, &val).unwrap();
            let oracle = train(&p, c, &SolverConfig::default()).unwrap();
            let truth = validation_error(eval.labels(), &eval.decision_values(&oracle.w).unwrap());
            let reference = train(&p, c_ref, &SolverConfig::default()).unwrap();
            let curve = validation_bounds(BoundSource::Curve { model: &reference, c }, &eval).unwrap();
            prop_assert!(curve.error_lo <= truth && truth <= curve.error_hi);
            let ball = ball_from_suboptimal(&p, &reference.w, c).unwrap();
            let single = validation_bounds(BoundSource::Ball(&ball), &eval).unwrap();
            prop_assert!(single.error_lo <= truth && truth <= single.error_hi);
        }
    }

    #[test]
    fn selection_history_is_monotone_and_sound(values in vec_strategy(60), hinge in any::<bool>()) {
        let loss = if hinge { LossKind::Hinge } else { LossKind::Logistic };
        let p = Problem::new(dataset(&values, 12, 3), KernelSpec::Linear, loss).unwrap();
        let val = dataset(&values[36..], 8, 3);
        let eval = EvalSet::new(&p, &val).unwrap();
        let grid = CandidateGrid::from_log_range(0.01, 100.0, 12).unwrap();
        let cfg = SolverConfig::default();
        let report = select_model(&p, &val, grid.clone(), &cfg).unwrap();
        let mut sweep_min = 1.0f64;
        for (t, &c) in grid.values().iter().enumerate() {
            let w = train(&p, c, &cfg).unwrap().w;
            let truth = validation_error(eval.labels(), &eval.decision_values(&w).unwrap());
            sweep_min = sweep_min.min(truth);
            for pair in report.history[t].windows(2) {
                prop_assert!(pair[1].lower >= pair[0].lower);
                prop_assert!(pair[1].upper <= pair[0].upper);
            }
            for u in &report.history[t] {
                prop_assert!(u.lower <= truth && truth <= u.upper, "candidate {t}: [{}, {}] vs {truth}", u.lower, u.upper);
            }
        }
        prop_assert_eq!(report.best_error, sweep_min);
    }

    #[test]
    fn lasso_dual_optimum_inside_ball(values in vec_strategy(80), frac in 0.05..0.95f64, scale in 0.0..1.0f64) {
        let x = DMatrix::from_row_slice(10, 6, &values[..60]);
        let y = DVector::from_row_slice(&values[60..70]);
        let lmax = lambda_max(&x, &y);
        prop_assume!(lmax > 1e-6);
        let lambda = frac * lmax;
        let sol = train_lasso(&x, &y, lambda, &SolverConfig::with_tolerance(1e-12)).unwrap();
        let exact = (&y - &x * &sol.beta) / lambda;
        // any feasible dual point: a shrunken rescaled vector
        let probe = DVector::from_row_slice(&values[70..80]);
        let feasible = &probe / x.tr_mul(&probe).amax().max(1e-12) * scale;
        let ball = lasso_dual_ball(&feasible, &y, lambda).unwrap();
        prop_assert!(ball.contains(&exact, 1e-6));
    }
}

#[test]
fn screening_is_safe_across_lambda_ratios() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let x = DMatrix::from_fn(25, 12, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(25, |_, _| rng.random_range(-1.0..1.0));
        let lmax = lambda_max(&x, &y);
        for ratio in [0.9, 0.5, 0.1] {
            let lambda = ratio * lmax;
            let oracle = train_lasso(&x, &y, lambda, &SolverConfig::with_tolerance(1e-12)).unwrap();
            let rough = lasso_dual_point(&x, &y, &(&oracle.beta * 0.9), lambda);
            let ball = lasso_dual_ball(&rough, &y, lambda).unwrap();
            for j in safe_screen(&x, &ball).unwrap() {
                assert!(
                    oracle.beta[j].abs() <= 1e-9,
                    "λ = {ratio}·λ_max, feature {j}: {}",
                    oracle.beta[j]
                );
            }
        }
    }
}

#[test]
fn radius_shrinks_along_gradient_descent() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
    let x = DMatrix::from_fn(30, 4, |_, _| rng.random_range(-1.0..1.0));
    let y: Vec<f64> = (0..30)
        .map(|i| {
            if x[(i, 0)] + 0.3 * x[(i, 1)] > 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    let p = Problem::new(
        Dataset::from_dense(&x, &y).unwrap(),
        KernelSpec::Linear,
        LossKind::Logistic,
    )
    .unwrap();
    let c = 0.5;
    let lipschitz = 1.0 + c * 0.25 * x.norm_squared();
    let mut w = DVector::zeros(4);
    let mut radii = Vec::new();
    for _ in 0..400 {
        let wf = FeatureVector::primal(w.clone());
        radii.push(ball_from_suboptimal(&p, &wf, c).unwrap().radius);
        let g = p.loss_gradient_sum(&wf).unwrap();
        w -= (&w + g.as_primal().unwrap() * c) / lipschitz;
    }
    let tail = &radii[200..];
    assert!(tail.windows(2).all(|r| r[1] <= r[0] * (1.0 + 1e-12)));
    assert!(*radii.last().unwrap() < 1e-3 * radii[0]);
}
