use ghg_nowcast::models::{
    fit_bvls, fit_ensemble, fit_unbounded, Ensemble, Hyperparameters, Matrix, ModelKind, SignBound, TrainedModel,
};
use proptest::prelude::*;

fn sse(x: &[Vec<f64>], y: &[f64], coef: &[f64], intercept: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(r, v)| {
            let p = intercept + r.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>();
            (v - p).powi(2)
        })
        .sum()
}

fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<SignBound>)> {
    (1usize..5, 8usize..30).prop_flat_map(|(p, n)| {
        (
            prop::collection::vec(prop::collection::vec(-3f64..3.0, p), n),
            prop::collection::vec(-3f64..3.0, p),
            prop::collection::vec(-0.5f64..0.5, n),
            prop::collection::vec(any::<bool>(), p),
        )
            .prop_map(|(x, beta, noise, signs)| {
                let y = x
                    .iter()
                    .zip(&noise)
                    .map(|(r, e)| 1.0 + r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + e)
                    .collect();
                let bounds = signs
                    .into_iter()
                    .map(|s| if s { SignBound::NonNegative } else { SignBound::NonPositive })
                    .collect();
                (x, y, bounds)
            })
    })
}

/// Solve the normal equations of the centered problem by Gaussian elimination
/// with partial pivoting.
fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    let p = x[0].len();
    let xm: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let ym = y.iter().sum::<f64>() / n;
    let mut a: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut row: Vec<f64> = (0..p).map(|j| x.iter().map(|r| (r[i] - xm[i]) * (r[j] - xm[j])).sum()).collect();
            row.push(x.iter().zip(y).map(|(r, v)| (r[i] - xm[i]) * (v - ym)).sum());
            row
        })
        .collect();
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in c + 1..p {
            let f = a[r][c] / a[c][c];
            for k in c..=p {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    let mut b = vec![0.0; p];
    for c in (0..p).rev() {
        b[c] = (a[c][p] - (c + 1..p).map(|k| a[c][k] * b[k]).sum::<f64>()) / a[c][c];
    }
    b
}

fn hp(depth: usize) -> Hyperparameters {
    Hyperparameters {
        n_trees: 25,
        max_depth: depth,
        min_samples_split: 2,
        min_samples_leaf: 1,
    }
}

fn kinds() -> impl Strategy<Value = ModelKind> {
    prop_oneof![Just(ModelKind::RF), Just(ModelKind::ET)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn bvls_respects_bounds_and_beats_intercept_only((x, y, bounds) in instance()) {
        let m = Matrix::from_rows(&x).unwrap();
        let fit = fit_bvls(&m, &y, &bounds).unwrap();
        for (b, s) in fit.coefficients.iter().zip(&bounds) {
            prop_assert!(s.admits(*b));
        }
        let ym = y.iter().sum::<f64>() / y.len() as f64;
        let null = sse(&x, &y, &vec![0.0; bounds.len()], ym);
        prop_assert!(sse(&x, &y, &fit.coefficients, fit.intercept) <= null * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn unbounded_fit_matches_normal_equations((x, y, _) in instance()) {
        let m = Matrix::from_rows(&x).unwrap();
        let fit = fit_unbounded(&m, &y).unwrap();
        prop_assume!(!fit.degenerate);
        let b = normal_equations(&x, &y);
        for (got, want) in fit.coefficients.iter().zip(&b) {
            prop_assert!((got - want).abs() <= 1e-8 * (1.0 + want.abs()), "{} vs {}", got, want);
        }
    }

    #[test]
    fn ensemble_importances_and_range(
        rows in prop::collection::vec((0f64..10.0, 0f64..10.0, 1f64..50.0), 6..25),
        kind in kinds(),
        seed in any::<u64>(),
        depth in 1usize..4,
    ) {
        let x = Matrix::from_rows(&rows.iter().map(|r| vec![r.0, r.1, 3.0]).collect::<Vec<_>>()).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let e = fit_ensemble(&x, &y, &hp(depth), kind, seed).unwrap();
        prop_assert_eq!(e.trees.len(), 25);
        prop_assert!(e.importances.iter().all(|&v| v >= 0.0));
        // The constant column can never be split on.
        prop_assert_eq!(e.importances[2], 0.0);
        let total: f64 = e.importances.iter().sum();
        prop_assert!(total == 0.0 || (total - 1.0).abs() <= 1e-12);
        prop_assert!(e.trees.iter().all(|t| t.depth() <= depth));
        let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        for p in e.predict(&x).unwrap() {
            prop_assert!(p >= lo && p <= hi);
        }
    }

    #[test]
    fn ensemble_is_invariant_to_tree_order(
        rows in prop::collection::vec((0f64..10.0, 0f64..10.0, 1f64..50.0), 6..20),
        kind in kinds(),
        seed in any::<u64>(),
        rot in 1usize..24,
    ) {
        let x = Matrix::from_rows(&rows.iter().map(|r| vec![r.0, r.1]).collect::<Vec<_>>()).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let e = fit_ensemble(&x, &y, &hp(3), kind, seed).unwrap();
        let mut shuffled: Ensemble = e.clone();
        shuffled.trees.rotate_left(rot);
        shuffled.trees.reverse();
        prop_assert_eq!(e.predict(&x).unwrap(), shuffled.predict(&x).unwrap());
    }

    #[test]
    fn two_rows_depth_one_predicts_within_range(a in -10f64..10.0, b in -10f64..10.0, kind in kinds(), seed in any::<u64>()) {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let y = [a, b];
        let e = fit_ensemble(&x, &y, &Hyperparameters { max_depth: 1, ..hp(1) }, kind, seed).unwrap();
        for p in e.predict(&Matrix::from_rows(&[vec![-1.0], vec![0.5], vec![2.0]]).unwrap()).unwrap() {
            prop_assert!(p >= a.min(b) && p <= a.max(b));
        }
    }
}

#[test]
fn same_seed_same_ensemble() {
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
    let y: Vec<f64> = (0..20).map(|i| 10.0 + (i as f64).sqrt()).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    for kind in [ModelKind::RF, ModelKind::ET] {
        let a = fit_ensemble(&x, &y, &hp(3), kind, 9).unwrap();
        let b = fit_ensemble(&x, &y, &hp(3), kind, 9).unwrap();
        assert_eq!(a, b);
        let ja = TrainedModel::Ensemble(a).to_json().unwrap();
        assert_eq!(TrainedModel::from_json(&ja).unwrap().to_json().unwrap(), ja);
    }
}
