mod common;

use common::{det_cofactor, stream_of};
use dppselect::dpp::{enumerate_oracle, esp, rng_from_seed, KdppSampler};
use dppselect::{
    build_kernel, clamp_scores, merge_by_timestamp, normalize, sample_kdpp_cholesky, sample_kdpp_exact,
    score_view, soft_allocate, EmbeddingVector, QueryEmbedding, RelevanceVector, StreamPair, View,
};
use proptest::prelude::*;

fn unit_rows(n: std::ops::RangeInclusive<usize>, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, dim), n)
        .prop_filter("non-zero rows", |rows| rows.iter().all(|r| r.iter().any(|x| x.abs() > 1e-3)))
}

fn scores(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6f64..1.0, n)
}

fn relevance(view: View, scores: Vec<f64>) -> RelevanceVector {
    RelevanceVector { view, scores }
}

fn query(v: &[f64]) -> QueryEmbedding {
    QueryEmbedding::new(EmbeddingVector::new(v.to_vec()).unwrap())
}

proptest! {
    #[test]
    fn normalize_is_idempotent(v in prop::collection::vec(-10.0f64..10.0, 2..16)
        .prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))) {
        let once = normalize(&v).unwrap();
        let twice = normalize(&once).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let norm: f64 = once.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scores_match_dot_products_and_are_bounded(rows in unit_rows(1..=12, 4), q in prop::collection::vec(-1.0f64..1.0, 4)
        .prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))) {
        let stream = stream_of(View::Ego, &rows);
        let s = score_view(&stream, &query(&q)).unwrap();
        prop_assert_eq!(s.len(), rows.len());
        let qn: f64 = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (r, got) in rows.iter().zip(&s.scores) {
            let rn: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            let expected: f64 = r.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>() / (rn * qn);
            prop_assert!((got - expected).abs() < 1e-9);
            prop_assert!(got.abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn embedding_scale_does_not_change_scores(rows in unit_rows(1..=8, 5), q in prop::collection::vec(-1.0f64..1.0, 5)
        .prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3)), c in 1e-3f64..1e3) {
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| x * c).collect()).collect();
        let qs: Vec<f64> = q.iter().map(|x| x * c).collect();
        let a = score_view(&stream_of(View::Ego, &rows), &query(&q)).unwrap();
        let b = score_view(&stream_of(View::Ego, &scaled), &query(&qs)).unwrap();
        for (x, y) in a.scores.iter().zip(&b.scores) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn ego_scores_ignore_exo_stream(ego in unit_rows(3..=3, 4), exo_a in unit_rows(3..=3, 4), exo_b in unit_rows(3..=3, 4)) {
        let q = query(&[1.0, 0.5, -0.25, 0.0]);
        let pa = StreamPair::new(stream_of(View::Ego, &ego), stream_of(View::Exo, &exo_a)).unwrap();
        let pb = StreamPair::new(stream_of(View::Ego, &ego), stream_of(View::Exo, &exo_b)).unwrap();
        prop_assert_eq!(score_view(pa.ego(), &q).unwrap(), score_view(pb.ego(), &q).unwrap());
    }

    #[test]
    fn clamp_keeps_scores_positive(raw in prop::collection::vec(-1.0f64..1.0, 1..20)) {
        let c = clamp_scores(&relevance(View::Exo, raw.clone()), 1e-6);
        for (r, s) in raw.iter().zip(&c.scores) {
            prop_assert_eq!(*s, r.max(1e-6));
        }
    }

    #[test]
    fn allocation_conserves_and_caps(e in scores(1..=20), x in scores(1..=20), k in 1usize..40) {
        prop_assume!(k <= e.len() + x.len());
        let split = soft_allocate(&relevance(View::Ego, e.clone()), &relevance(View::Exo, x.clone()), k).unwrap();
        prop_assert_eq!(split.k_ego + split.k_exo, k);
        prop_assert!(split.k_ego <= e.len());
        prop_assert!(split.k_exo <= x.len());
    }

    #[test]
    fn allocation_monotone_in_ego_mass(e in scores(10..=10), x in scores(10..=10), boost in 1.0f64..5.0, k in 1usize..=10) {
        let ex = relevance(View::Exo, x);
        let before = soft_allocate(&relevance(View::Ego, e.clone()), &ex, k).unwrap();
        let boosted: Vec<f64> = e.iter().map(|s| s * boost).collect();
        let after = soft_allocate(&relevance(View::Ego, boosted), &ex, k).unwrap();
        prop_assert!(after.k_ego >= before.k_ego);
    }

    #[test]
    fn allocation_dominance(e in scores(16..=16), k in 1usize..=16) {
        let ego_sum: f64 = e.iter().sum();
        // exo small enough that the ego share exceeds 1 - 1/(2k)
        let exo_sum = ego_sum / (4.0 * k as f64);
        let x = vec![exo_sum / 4.0; 4];
        let split = soft_allocate(&relevance(View::Ego, e), &relevance(View::Exo, x), k).unwrap();
        prop_assert_eq!(split.k_ego, k);
    }

    #[test]
    fn allocation_invariant_to_uniform_scaling(e in scores(1..=12), x in scores(1..=12), k in 1usize..=24, c in 0.01f64..100.0) {
        prop_assume!(k <= e.len() + x.len());
        let (re, rx) = (relevance(View::Ego, e), relevance(View::Exo, x));
        let a = soft_allocate(&re, &rx, k).unwrap();
        let b = soft_allocate(&re.scaled(c), &rx.scaled(c), k).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn kernel_symmetric_with_score_diagonal_and_hadamard_bound(rows in unit_rows(2..=7, 4), s in scores(7..=7)) {
        let n = rows.len();
        let s = relevance(View::Ego, s[..n].to_vec());
        let l = build_kernel(&stream_of(View::Ego, &rows), &s).unwrap();
        for i in 0..n {
            prop_assert!((l.get(i, i) - s.scores[i] * s.scores[i]).abs() < 1e-9);
            for j in 0..n {
                prop_assert_eq!(l.get(i, j), l.get(j, i));
            }
        }
        for subset in common::subsets(n, 2).into_iter().chain(common::subsets(n, 3)) {
            let bound: f64 = subset.iter().map(|&i| s.scores[i] * s.scores[i]).product();
            prop_assert!(det_cofactor(l.matrix(), &subset) <= bound * (1.0 + 1e-9));
        }
    }

    #[test]
    fn kernel_scales_by_c_squared(rows in unit_rows(2..=6, 3), s in scores(6..=6), c in 0.1f64..10.0) {
        let n = rows.len();
        let s = relevance(View::Ego, s[..n].to_vec());
        let stream = stream_of(View::Ego, &rows);
        let a = build_kernel(&stream, &s).unwrap();
        let b = build_kernel(&stream, &s.scaled(c)).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((b.get(i, j) - c * c * a.get(i, j)).abs() < 1e-12 * (1.0 + c * c));
            }
        }
    }

    #[test]
    fn esp_e_n_is_product_of_eigenvalues(l in prop::collection::vec(0.0f64..3.0, 1..10)) {
        let n = l.len();
        let t = esp(&l, n).unwrap();
        let prod: f64 = l.iter().product();
        prop_assert!((t.get(n, n) - prod).abs() <= 1e-12 * (1.0 + prod));
        for m in 0..=n {
            prop_assert_eq!(t.get(m, 0), 1.0);
        }
        prop_assert!(t.rows().iter().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn samplers_are_seed_deterministic(rows in unit_rows(5..=5, 5), s in scores(5..=5), seed in any::<u64>()) {
        let l = build_kernel(&stream_of(View::Ego, &rows), &relevance(View::Ego, s)).unwrap();
        prop_assume!(KdppSampler::new(&l, 2).is_ok());
        prop_assert_eq!(sample_kdpp_exact(&l, 2, seed).unwrap(), sample_kdpp_exact(&l, 2, seed).unwrap());
        prop_assert_eq!(sample_kdpp_cholesky(&l, 2, seed).unwrap(), sample_kdpp_cholesky(&l, 2, seed).unwrap());
    }

    #[test]
    fn oracle_probabilities_sum_to_one(rows in unit_rows(3..=7, 6), s in scores(7..=7), k in 1usize..=3) {
        let n = rows.len();
        let l = build_kernel(&stream_of(View::Ego, &rows), &relevance(View::Ego, s[..n].to_vec())).unwrap();
        if let Ok(t) = enumerate_oracle(&l, k) {
            let total: f64 = t.probabilities().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_draws_never_hold_duplicates(seed in any::<u64>()) {
        // frames 0 and 1 identical, 2..5 distinct
        let mut g = common::rng(seed);
        let mut rows: Vec<Vec<f64>> = (0..5).map(|_| common::random_unit(&mut g, 6)).collect();
        rows[1] = rows[0].clone();
        let l = build_kernel(&stream_of(View::Ego, &rows), &relevance(View::Ego, vec![0.5; 5])).unwrap();
        let sampler = KdppSampler::new(&l, 3).unwrap();
        let mut r = rng_from_seed(seed);
        for _ in 0..50 {
            let s = sampler.draw_exact(&mut r);
            prop_assert!(!(s.contains(&0) && s.contains(&1)), "{:?}", s);
        }
    }

    #[test]
    fn merge_is_time_sorted(ego_sel in prop::sample::subsequence((0..10).collect::<Vec<usize>>(), 0..10),
                            exo_sel in prop::sample::subsequence((0..10).collect::<Vec<usize>>(), 0..10)) {
        let mut g = common::rng(0);
        let rows: Vec<Vec<f64>> = (0..10).map(|_| common::random_unit(&mut g, 3)).collect();
        let pair = StreamPair::new(stream_of(View::Ego, &rows), stream_of(View::Exo, &rows)).unwrap();
        let sel = merge_by_timestamp(&ego_sel, &exo_sel, &pair).unwrap();
        prop_assert_eq!(sel.entries.len(), ego_sel.len() + exo_sel.len());
        prop_assert!(sel.entries.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        prop_assert_eq!(sel.indices(View::Ego), ego_sel);
        prop_assert_eq!(sel.indices(View::Exo), exo_sel);
    }
}
