use proptest::prelude::*;
use tomography_core::geometry::{
    escape_probability_bound, gaussian_width_mc, local_angular_dimension_bound, project_onto_sphere,
    PointCloud,
};
use tomography_core::landscapes::{min_loss_in_subspace_exact, QuadraticWell, Spectrum, SubspaceBasis};
use tomography_core::numerics::{dot, gaussian_matrix, normalize_columns, top_k_svd, Matrix, RngStream};
use tomography_core::pruning::{lottery_ticket_mask, running_max};
use tomography_core::sweep::{
    extract_threshold, MetricKind, RunOutcome, SubspaceKind, SuccessGrid, ThresholdAxis,
};

fn matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    gaussian_matrix(&mut RngStream::new(seed, 0).rng(), rows, cols)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_idempotent(rows in 1usize..12, cols in 1usize..6, seed in any::<u64>()) {
        let once = normalize_columns(&matrix(rows, cols, seed)).unwrap();
        let twice = normalize_columns(&once).unwrap();
        for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
            prop_assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn svd_vectors_orthonormal(rows in 1usize..15, cols in 1usize..15, seed in any::<u64>()) {
        let m = matrix(rows, cols, seed);
        let k = rows.min(cols);
        let svd = top_k_svd(&m, k).unwrap();
        for i in 0..k {
            for j in 0..k {
                let g = dot(&svd.left.column(i), &svd.left.column(j));
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g - target).abs() < 1e-8);
            }
        }
        prop_assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(svd.singular_values.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn width_monotone_under_inclusion(n in 2usize..20, extra in 1usize..10, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 1).rng();
        let pts: Vec<Vec<f64>> = (0..n + extra)
            .map(|_| tomography_core::numerics::gaussian_vector(&mut rng, 4))
            .collect();
        let small = PointCloud::new(pts[..n].to_vec()).unwrap();
        let big = PointCloud::new(pts).unwrap();
        let a = gaussian_width_mc(&small, &mut RngStream::new(seed, 2).rng(), 50).unwrap();
        let b = gaussian_width_mc(&big, &mut RngStream::new(seed, 2).rng(), 50).unwrap();
        prop_assert!(a.mean <= b.mean + 1e-12);
    }

    #[test]
    fn angular_dimension_monotone(
        lambdas in prop::collection::vec(1e-3f64..10.0, 1..20),
        eps in 1e-3f64..1.0,
        r in 0.1f64..3.0,
    ) {
        let s = Spectrum::new(lambdas).unwrap();
        let base = local_angular_dimension_bound(&s, eps, r).unwrap();
        prop_assert!(local_angular_dimension_bound(&s, eps * 1.5, r).unwrap() > base);
        prop_assert!(local_angular_dimension_bound(&s, eps, r * 1.5).unwrap() < base);
    }

    #[test]
    fn escape_bound_monotone_in_k(k in 1usize..500, w in 0.0f64..15.0) {
        let a = escape_probability_bound(k, w).unwrap();
        let b = escape_probability_bound(k + 1, w).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a);
    }

    #[test]
    fn sphere_projection_idempotent(n in 1usize..10, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0).rng();
        let cloud = tomography_core::geometry::uniform_sphere_cloud(5, n, &mut rng).unwrap();
        let p = project_onto_sphere(&cloud, &[0.0; 5]).unwrap();
        for (a, b) in p.points().iter().zip(cloud.points()) {
            prop_assert!((dot(a, a) - 1.0).abs() < 1e-12);
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exact_minimum_never_above_offset(
        lambdas in prop::collection::vec(1e-2f64..10.0, 3..12),
        d in 0usize..4,
        seed in any::<u64>(),
    ) {
        let dim = lambdas.len();
        let well = QuadraticWell::new(Spectrum::new(lambdas).unwrap());
        let mut rng = RngStream::new(seed, 0).rng();
        let offset = tomography_core::landscapes::sample_offset_at_distance(dim, 1.0, &mut rng).unwrap();
        let basis = SubspaceBasis::random(offset.clone(), d.min(dim), &mut rng).unwrap();
        let m = min_loss_in_subspace_exact(&well, &basis).unwrap();
        prop_assert!(m.loss >= 0.0);
        prop_assert!(m.loss <= well.loss(&offset) + 1e-15);
    }

    #[test]
    fn chain_rule_matches_explicit_transpose(d in 1usize..6, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0).rng();
        let basis = SubspaceBasis::random(vec![0.5; 9], d, &mut rng).unwrap();
        let g = tomography_core::numerics::gaussian_vector(&mut rng, 9);
        let mut pulled = vec![0.0; d];
        basis.pullback_into(&g, &mut pulled);
        let explicit = basis.basis().transpose().mul_vec(&g);
        for (a, b) in pulled.iter().zip(&explicit) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mask_idempotent_and_sized(w in prop::collection::vec(-5.0f64..5.0, 1..40), f in 0.01f64..1.0) {
        let m = lottery_ticket_mask(&w, f).unwrap();
        prop_assert_eq!(m.kept(), ((f * w.len() as f64) - 1e-9).ceil() as usize);
        prop_assert_eq!(m.apply(&m.apply(&w)), m.apply(&w));
    }

    #[test]
    fn running_max_monotone(v in prop::collection::vec(-1.0f64..1.0, 0..30)) {
        let r = running_max(&v);
        prop_assert!(r.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(r.iter().zip(&v).all(|(a, b)| a >= b));
    }

    #[test]
    fn success_flags_form_an_up_set(loss in 0.0f64..2.0, acc in 0.0f64..1.0) {
        let o = RunOutcome {
            kind: SubspaceKind::Random, t: 0, d: 1, run: 0, seed: 0,
            best_loss: loss, best_accuracy: Some(acc),
        };
        let eps: Vec<f64> = (0..40).map(|i| i as f64 * 0.05).collect();
        let flags: Vec<bool> = eps.iter().map(|&e| o.succeeds(MetricKind::Loss, e)).collect();
        prop_assert!(flags.windows(2).all(|w| !w[0] || w[1]));
        let accs: Vec<bool> = eps.iter().map(|&a| o.succeeds(MetricKind::Accuracy, a)).collect();
        prop_assert!(accs.windows(2).all(|w| w[0] || !w[1]));
    }

    #[test]
    fn larger_delta_never_raises_threshold(
        losses in prop::collection::vec(0.0f64..1.0, 24),
        d1 in 0.01f64..0.98,
        bump in 0.0f64..0.5,
    ) {
        let dims = [1usize, 2, 4, 8];
        let outcomes: Vec<RunOutcome> = losses.iter().enumerate().map(|(i, &l)| RunOutcome {
            kind: SubspaceKind::Random, t: 0, d: dims[i % 4], run: i / 4, seed: 0,
            best_loss: l / dims[i % 4] as f64, best_accuracy: None,
        }).collect();
        let axis = ThresholdAxis { metric: MetricKind::Loss, values: vec![0.05, 0.1, 0.2, 0.5] };
        let grid = SuccessGrid::new(dims.to_vec(), vec![0], vec![axis], outcomes).unwrap();
        let d2 = (d1 + bump).min(0.99);
        let a = extract_threshold(&grid, MetricKind::Loss, d1, 0).unwrap();
        let b = extract_threshold(&grid, MetricKind::Loss, d2, 0).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            let (p, q) = (p.d_star.unwrap_or(usize::MAX), q.d_star.unwrap_or(usize::MAX));
            prop_assert!(q <= p);
        }
    }
}
