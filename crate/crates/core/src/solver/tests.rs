use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::metrics::clustering_accuracy;
use crate::oracle::{
    brute_force_label, exhaustive_novel_fit, naive_objective, procrustes_bound_check, random_orthonormal,
    simplex_minimize_numeric, singular_value_sum, OracleTerm,
};
use crate::synthetic::{generate_synthetic, SyntheticSpec};

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Random problem with `n_l` labeled and `n_u` unlabeled columns and a
/// random (not optimized) state on it.
fn random_instance(
    seed: u64,
    dims: &[usize],
    k: usize,
    k_known: usize,
    n_l: usize,
    n_u: usize,
) -> (Problem, ModelState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_l + n_u;
    let views: Vec<DMatrix<f64>> = dims
        .iter()
        .map(|&d| DMatrix::from_fn(d, n, |_, _| gaussian(&mut rng)))
        .collect();
    let truth: Vec<usize> = (0..n_l).map(|_| rng.random_range(0..k_known)).collect();
    let problem = Problem::from_parts(views, truth, k, k_known).unwrap();
    let raw: Vec<f64> = dims.iter().map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = raw.iter().sum();
    let state = ModelState {
        bases: dims.iter().map(|&d| random_orthonormal(d, k, &mut rng)).collect(),
        centroids: dims
            .iter()
            .map(|_| DMatrix::from_fn(k, k, |_, _| gaussian(&mut rng)))
            .collect(),
        labels: OneHotLabels::new((0..n).map(|_| rng.random_range(0..k)).collect(), k).unwrap(),
        alpha: raw.iter().map(|r| r / total).collect(),
    };
    (problem, state)
}

fn separated(seed: u64) -> MultiViewDataset {
    generate_synthetic(&SyntheticSpec {
        seed,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn config_validation() {
    assert!(SolverConfig::default().validate().is_ok());
    assert!(SolverConfig {
        lambda1: -1.0,
        ..Default::default()
    }
    .validate()
    .is_err());
    assert!(SolverConfig {
        lambda2: f64::NAN,
        ..Default::default()
    }
    .validate()
    .is_err());
    assert!(SolverConfig {
        max_iter: 0,
        ..Default::default()
    }
    .validate()
    .is_err());
    assert!(SolverConfig {
        tol: -1e-3,
        ..Default::default()
    }
    .validate()
    .is_err());
}

#[test]
fn centroids_are_class_means() {
    let x = DMatrix::from_row_slice(2, 3, &[1., 3., 5., 2., 4., 6.]);
    let problem = Problem::from_parts(vec![x], vec![], 2, 0).unwrap();
    let mut state = ModelState {
        bases: vec![DMatrix::identity(2, 2)],
        centroids: vec![DMatrix::zeros(2, 2)],
        labels: OneHotLabels::new(vec![0, 0, 1], 2).unwrap(),
        alpha: vec![1.0],
    };
    update_centroids(&problem, &mut state);
    let expected = DMatrix::from_row_slice(2, 2, &[2., 5., 3., 6.]);
    assert!((&state.centroids[0] - expected).amax() < 1e-7);
}

#[test]
fn centroids_recover_exact_factorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let w = random_orthonormal(5, 3, &mut rng);
    let a = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let labels = vec![0, 1, 2, 2, 1, 0, 0];
    let y = OneHotLabels::new(labels.clone(), 3).unwrap();
    let x = &w * &a * y.to_matrix();
    let problem = Problem::from_parts(vec![x], vec![], 3, 0).unwrap();
    let mut state = ModelState {
        bases: vec![w],
        centroids: vec![DMatrix::zeros(3, 3)],
        labels: y,
        alpha: vec![1.0],
    };
    update_centroids(&problem, &mut state);
    assert!((&state.centroids[0] - a).amax() < 1e-8);
}

#[test]
fn empty_class_gets_zero_centroid() {
    let x = DMatrix::from_row_slice(2, 2, &[1., 3., 2., 4.]);
    let problem = Problem::from_parts(vec![x], vec![], 2, 0).unwrap();
    let mut state = ModelState {
        bases: vec![DMatrix::identity(2, 2)],
        centroids: vec![DMatrix::zeros(2, 2)],
        labels: OneHotLabels::new(vec![0, 0], 2).unwrap(),
        alpha: vec![1.0],
    };
    update_centroids(&problem, &mut state);
    assert_eq!(state.centroids[0].column(1).amax(), 0.0);
    assert!(state.centroids[0].iter().all(|v| v.is_finite()));
}

#[test]
fn known_label_examples() {
    let b = [1.0, 1.0];
    let c = [0.9, 0.1];
    let term = |lambda1| LabelTerm::Supervised { lambda1, truth_row: 1 };
    assert_eq!(best_row(&b, &c, term(0.0), 0..2), 0);
    assert_eq!(best_row(&b, &c, term(1.0), 0..2), 1);
    // Overwhelming supervision always returns the truth.
    assert_eq!(best_row(&b, &[100.0, -100.0], term(1e6), 0..2), 1);
}

#[test]
fn novel_label_examples() {
    let b = [1.0, 1.0];
    let none = LabelTerm::Disjoint {
        lambda2: 0.0,
        label_counts: &[0.0, 0.0],
    };
    assert_eq!(best_row(&b, &[0.2, 0.8], none, 0..2), 1);
    let t = [3.0, 0.0];
    let c = [0.9, 0.1];
    assert_eq!(
        best_row(
            &b,
            &c,
            LabelTerm::Disjoint {
                lambda2: 0.2,
                label_counts: &t
            },
            0..2
        ),
        0
    );
    assert_eq!(
        best_row(
            &b,
            &c,
            LabelTerm::Disjoint {
                lambda2: 0.3,
                label_counts: &t
            },
            0..2
        ),
        1
    );
    // Restricting to novel rows ignores a better known row.
    assert_eq!(best_row(&b, &[5.0, 0.0], none, 1..2), 1);
}

#[test]
fn ties_go_to_lowest_row() {
    let none = LabelTerm::Disjoint {
        lambda2: 0.0,
        label_counts: &[0.0; 3],
    };
    assert_eq!(best_row(&[1.0, 1.0, 1.0], &[0.5, 0.5, 0.5], none, 0..3), 0);
    assert_eq!(best_row(&[1.0, 1.0, 1.0], &[0.5, 0.5, 0.5], none, 1..3), 1);
}

#[test]
fn penalty_dominance_pushes_novel_samples_out_of_known_rows() {
    let (problem, mut state) = random_instance(21, &[4, 3], 3, 1, 5, 6);
    let mut buffers = WorkBuffers::new(&problem);
    buffers.refresh_projections(&state);
    let scores: Vec<DVector<f64>> = (0..problem.num_samples())
        .map(|j| {
            let mut c = DVector::zeros(3);
            for (v, x) in problem.views().iter().enumerate() {
                c += buffers.projections[v].transpose() * x.column(j) * state.alpha[v].powi(2);
            }
            c
        })
        .collect();
    let b_range =
        buffers.diag.iter().copied().fold(f64::MIN, f64::max) - buffers.diag.iter().copied().fold(f64::MAX, f64::min);
    let max_c = scores.iter().map(|c| c.amax()).fold(0.0, f64::max);
    let min_t = problem
        .label_counts()
        .iter()
        .copied()
        .filter(|&t| t > 0.0)
        .fold(f64::MAX, f64::min);
    let lambda2 = (b_range + 2.0 * max_c) / (2.0 * min_t) * 1.0001;
    let cfg = SolverConfig {
        lambda2,
        ..Default::default()
    };
    update_labels_novel(&problem, &mut state, &cfg, &mut buffers);
    let known_with_labels: Vec<usize> = (0..1).filter(|&r| problem.label_counts()[r] > 0.0).collect();
    for &r in state.novel_rows(&problem) {
        assert!(!known_with_labels.contains(&r));
    }
}

#[test]
fn view_weight_examples() {
    let a = closed_form_view_weights(&[1.0, 1.0, 1.0]);
    assert!(a.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    let a = closed_form_view_weights(&[1.0, 4.0]);
    assert!((a[0] - 0.8).abs() < 1e-15 && (a[1] - 0.2).abs() < 1e-15);
    assert_eq!(closed_form_view_weights(&[3.5]), vec![1.0]);
    assert_eq!(closed_form_view_weights(&[0.0, 2.0, 0.0]), vec![0.5, 0.0, 0.5]);
    assert_eq!(closed_form_view_weights(&[0.0, 0.0]), vec![0.5, 0.5]);
}

#[test]
fn view_weights_frozen_when_ablated() {
    let (problem, mut state) = random_instance(4, &[3, 3], 2, 1, 3, 3);
    let before = state.alpha.clone();
    let mut buffers = WorkBuffers::new(&problem);
    let cfg = SolverConfig {
        ablate_alpha: true,
        ..Default::default()
    };
    update_view_weights(&problem, &mut state, &mut buffers, &cfg);
    assert_eq!(state.alpha, before);
}

#[test]
fn objective_of_exact_factorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let k = 3;
    let w = random_orthonormal(4, k, &mut rng);
    let a = DMatrix::from_fn(k, k, |_, _| gaussian(&mut rng));
    // labeled rows 0 (known); unlabeled in novel rows 1, 2
    let labels = vec![0, 0, 0, 1, 2, 1, 2];
    let y = OneHotLabels::new(labels.clone(), k).unwrap();
    let x = &w * &a * y.to_matrix();
    let problem = Problem::from_parts(vec![x], vec![0, 0, 0], k, 1).unwrap();
    let state = ModelState {
        bases: vec![w],
        centroids: vec![a],
        labels: y,
        alpha: vec![1.0],
    };

    let cfg = SolverConfig {
        lambda1: 3.0,
        lambda2: 0.0,
        ..Default::default()
    };
    assert!(objective_value(&problem, &state, &cfg).abs() < 1e-12);

    let cfg = SolverConfig {
        lambda1: 3.0,
        lambda2: 0.5,
        ..Default::default()
    };
    let expected = -2.0 * 0.5 * 3.0 * 4.0;
    assert!((objective_value(&problem, &state, &cfg) - expected).abs() < 1e-10);
    assert_eq!(objective_lower_bound(&problem, &cfg), expected);
}

#[test]
fn initial_state_passes_invariants_and_is_deterministic() {
    let ds = separated(3);
    let cfg = SolverConfig::default();
    let problem = Problem::new(&ds, &cfg).unwrap();
    let s1 = initialize(&problem, &cfg).unwrap();
    s1.check_invariants(&problem).unwrap();
    assert_eq!(s1, initialize(&problem, &cfg).unwrap());
    assert_eq!(&s1.labels.assignment()[..problem.num_labeled()], problem.truth_rows());
    let truth: Vec<usize> = ds.novel_truth();
    assert_eq!(clustering_accuracy(s1.novel_rows(&problem), &truth).unwrap(), 1.0);
    assert!(s1.novel_rows(&problem).iter().all(|&r| r >= problem.num_known_rows()));

    let random = SolverConfig {
        init_y_novel: InitStrategy::Random,
        ..Default::default()
    };
    let s2 = initialize(&problem, &random).unwrap();
    s2.check_invariants(&problem).unwrap();
    assert!(s2.novel_rows(&problem).iter().all(|&r| r >= problem.num_known_rows()));
}

#[test]
fn rank_larger_than_view_dimension_is_rejected() {
    let ds = generate_synthetic(&SyntheticSpec {
        dims: vec![8, 3],
        ..Default::default()
    })
    .unwrap();
    assert!(matches!(
        Problem::new(&ds, &SolverConfig::default()),
        Err(Error::RankTooLarge {
            view: 1,
            dim: 3,
            rank: 6
        })
    ));
}

#[test]
fn rank_deficient_view_is_padded() {
    // Second view is a single repeated feature: rank one, four rows.
    let ds0 = separated(1);
    let n = ds0.num_samples();
    let flat = DMatrix::from_fn(6, n, |_, j| (j % 3) as f64);
    let mut views: Vec<DMatrix<f64>> = ds0.views().iter().map(|v| v.data().clone()).collect();
    views.push(flat);
    let ds = MultiViewDataset::with_default_split(views, ds0.labels().to_vec(), 6).unwrap();
    let cfg = SolverConfig::default();
    let problem = Problem::new(&ds, &cfg).unwrap();
    let state = initialize(&problem, &cfg).unwrap();
    state.check_invariants(&problem).unwrap();
    let result = fit(&ds, &cfg).unwrap();
    assert!(result.state.max_orthonormality_error() <= 1e-8);
}

#[test]
fn fit_recovers_separated_classes() {
    for seed in 0..3 {
        let ds = separated(seed);
        let result = fit(
            &ds,
            &SolverConfig {
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(result.converged);
        assert!(result.iterations < 50);
        assert!(result.is_monotone(1e-9));
        let acc = clustering_accuracy(&result.novel_assignment, &ds.novel_truth()).unwrap();
        assert!(acc >= 0.95, "seed {seed}: acc {acc}");
        assert!(result.objective_trace.iter().all(|&j| j >= result.lower_bound));
    }
}

#[test]
fn fit_is_deterministic() {
    let ds = generate_synthetic(&SyntheticSpec {
        separation: 2.0,
        seed: 9,
        ..Default::default()
    })
    .unwrap();
    let cfg = SolverConfig {
        seed: 4,
        ..Default::default()
    };
    assert_eq!(fit(&ds, &cfg).unwrap(), fit(&ds, &cfg).unwrap());
}

#[test]
fn every_block_is_monotone_and_keeps_invariants() {
    let spec = SyntheticSpec {
        num_classes: 4,
        per_class: 15,
        dims: vec![5, 7],
        separation: 1.5,
        seed: 3,
        ..Default::default()
    };
    let ds = generate_synthetic(&spec).unwrap();
    for cfg in [
        SolverConfig::default(),
        SolverConfig {
            lambda1: 0.0,
            lambda2: 10.0,
            init_y_novel: InitStrategy::Random,
            ..Default::default()
        },
        SolverConfig {
            ablate_alpha: true,
            ..Default::default()
        },
        SolverConfig {
            ablate_labeled: true,
            ..Default::default()
        },
        SolverConfig {
            hard_restrict_novel: true,
            normalize: NormalizeMode::L2,
            ..Default::default()
        },
    ] {
        let mut last = f64::INFINITY;
        let mut count = 0;
        let mut observer = BlockObserver(|e: &FitEvent<'_>| match e {
            FitEvent::Initialized { objective, .. } => last = *objective,
            FitEvent::Block { objective, .. } => {
                assert!(
                    *objective <= last + 1e-9 * (last.abs() + 1.0),
                    "{objective} after {last}"
                );
                last = *objective;
                count += 1;
            }
            FitEvent::IterationEnd { state, .. } => {
                assert!(state.max_orthonormality_error() <= 1e-8);
                let s: f64 = state.alpha.iter().sum();
                assert!((s - 1.0).abs() <= 1e-10 && state.alpha.iter().all(|&a| a >= 0.0));
            }
        });
        let result = fit_observed(&ds, &cfg, &mut observer).unwrap();
        assert_eq!(count, 5 * result.iterations);
    }
}

#[test]
fn ablated_labeled_set_only_uses_novel_rows() {
    let ds = separated(6);
    let cfg = SolverConfig {
        ablate_labeled: true,
        ..Default::default()
    };
    let problem = Problem::new(&ds, &cfg).unwrap();
    assert_eq!(problem.num_labeled(), 0);
    assert_eq!(problem.rank(), 3);
    let result = fit(&ds, &cfg).unwrap();
    assert!(result.novel_assignment.iter().all(|&r| (3..6).contains(&r)));
    assert_eq!(result.lower_bound, 0.0);
    let classes = result.novel_classes(&ds);
    assert!(classes.iter().all(|c| ds.novel_classes().contains(c)));
}

#[test]
fn hard_restriction_keeps_novel_rows() {
    let ds = generate_synthetic(&SyntheticSpec {
        separation: 0.5,
        seed: 2,
        ..Default::default()
    })
    .unwrap();
    let cfg = SolverConfig {
        lambda2: 0.0,
        hard_restrict_novel: true,
        ..Default::default()
    };
    let result = fit(&ds, &cfg).unwrap();
    assert!(result.novel_assignment.iter().all(|&r| r >= 3));
}

/// The per-column update and the brute-force oracle on one random instance.
fn check_label_updates(seed: u64) -> core::result::Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    let k = rng.random_range(2..=3usize);
    let k_known = rng.random_range(1..k);
    let dims: Vec<usize> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(k..=4)).collect();
    let n_l = rng.random_range(0..=4);
    let n_u = rng.random_range(0..=4);
    let (problem, mut state) = random_instance(seed, &dims, k, k_known, n_l, n_u);
    let cfg = SolverConfig {
        lambda1: rng.random::<f64>() * 3.0,
        lambda2: rng.random::<f64>() * 0.5,
        ..Default::default()
    };
    let mut buffers = WorkBuffers::new(&problem);
    let before = state.clone();
    update_labels_known(&problem, &mut state, &cfg, &mut buffers);
    update_labels_novel(&problem, &mut state, &cfg, &mut buffers);

    let projections: Vec<DMatrix<f64>> = before.bases.iter().zip(&before.centroids).map(|(w, a)| w * a).collect();
    for j in 0..problem.num_samples() {
        let sample: Vec<DVector<f64>> = problem.views().iter().map(|x| x.column(j).into_owned()).collect();
        let term = if j < n_l {
            OracleTerm::Supervised {
                lambda1: cfg.lambda1,
                truth_row: problem.truth_rows()[j],
            }
        } else {
            OracleTerm::Disjoint {
                lambda2: cfg.lambda2,
                label_counts: problem.label_counts().to_vec(),
            }
        };
        let expected = brute_force_label(&sample, &projections, &before.alpha, &term);
        prop_assert_eq!(state.labels.assignment()[j], expected, "column {}", j);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn label_updates_match_brute_force(seed in any::<u64>()) {
        check_label_updates(seed)?;
    }

    #[test]
    fn objective_matches_naive_sum(seed in any::<u64>(), l1 in 0.0f64..5.0, l2 in 0.0f64..5.0) {
        let (problem, state) = random_instance(seed, &[3, 4], 3, 1, 4, 4);
        let cfg = SolverConfig { lambda1: l1, lambda2: l2, ..Default::default() };
        let fast = objective_value(&problem, &state, &cfg);
        let slow = naive_objective(&problem, &state, &cfg);
        prop_assert!((fast - slow).abs() <= 1e-9 * slow.abs().max(1.0));
    }

    #[test]
    fn novel_block_is_globally_optimal(seed in any::<u64>(), l2 in 0.0f64..2.0) {
        let (problem, mut state) = random_instance(seed, &[3, 3], 3, 1, 3, 5);
        let cfg = SolverConfig { lambda2: l2, ..Default::default() };
        let (_, best) = exhaustive_novel_fit(&problem, &state, &cfg).unwrap();
        let mut buffers = WorkBuffers::new(&problem);
        update_labels_novel(&problem, &mut state, &cfg, &mut buffers);
        let ours = naive_objective(&problem, &state, &cfg);
        prop_assert!(ours <= best + 1e-9 * best.abs().max(1.0));
    }

    #[test]
    fn view_weights_match_numeric_minimizer(r in proptest::collection::vec(0.1f64..10.0, 1..5)) {
        let closed = closed_form_view_weights(&r);
        let numeric = simplex_minimize_numeric(&r);
        for (a, b) in closed.iter().zip(&numeric) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn basis_update_attains_procrustes_optimum(seed in any::<u64>()) {
        let (problem, mut state) = random_instance(seed, &[4, 3], 3, 1, 3, 4);
        let mut buffers = WorkBuffers::new(&problem);
        update_basis(&problem, &mut state, &mut buffers);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (b, w) in buffers.cross.iter().zip(&state.bases) {
            prop_assert!(crate::linalg::orthonormality_error(w) <= 1e-8);
            let value = (w.transpose() * b).trace();
            prop_assert!((value - singular_value_sum(b)).abs() <= 1e-8 * (1.0 + value.abs()));
            prop_assert!(procrustes_bound_check(b, w, 200, &mut rng).unwrap().passed);
        }
    }

    #[test]
    fn centroid_normal_equations_hold(seed in any::<u64>()) {
        let (problem, mut state) = random_instance(seed, &[4, 3], 3, 1, 3, 5);
        update_centroids(&problem, &mut state);
        let y = state.labels.to_matrix();
        for (v, x) in problem.views().iter().enumerate() {
            let lhs = state.bases[v].transpose() * x * y.transpose();
            let rhs = &state.centroids[v] * &y * y.transpose();
            prop_assert!((lhs - rhs).amax() <= 1e-6);
        }
    }
}
