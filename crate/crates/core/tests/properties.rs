use driftmix::engine::{compute_beta, mahalanobis_distance};
use driftmix::merge::{bhattacharyya_distance, merge_pass};
use driftmix::{
    AdaptiveModel, InitialVariance, Mixture, Mode, ModeId, ModelConfig, ModelSnapshot, PcaModel,
};
use proptest::prelude::*;

const DIM: usize = 3;

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0..20.0f64, dim)
}

/// Samples drawn around a handful of centres so that both hits and misses
/// occur.
fn clustered_stream(len: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (
        prop::collection::vec(point(DIM), 1..5),
        prop::collection::vec((any::<prop::sample::Index>(), point(DIM)), 1..len),
    )
        .prop_map(|(centres, picks)| {
            picks
                .into_iter()
                .map(|(idx, noise)| {
                    let c = idx.get(&centres);
                    c.iter().zip(&noise).map(|(c, n)| c + n * 0.05).collect()
                })
                .collect()
        })
}

fn arb_mode(id: u64, dim: usize) -> impl Strategy<Value = Mode> {
    (
        0.01..1.0f64,
        prop::collection::vec(-3.0..3.0f64, dim),
        prop::collection::vec(0.1..4.0f64, dim),
    )
        .prop_map(move |(weight, mean, variance)| Mode {
            id: ModeId(id),
            weight,
            mean,
            variance,
        })
}

fn arb_mixture(dim: usize) -> impl Strategy<Value = Mixture> {
    (1usize..8).prop_flat_map(move |n| {
        (0..n as u64)
            .map(|id| arb_mode(id, dim))
            .collect::<Vec<_>>()
            .prop_map(move |modes| Mixture::from_parts(modes, n as u64, 0).unwrap())
    })
}

fn config(capacity: Option<usize>) -> ModelConfig {
    let cfg = match capacity {
        Some(k) => ModelConfig::agmm(DIM, k),
        None => ModelConfig::uagmm(DIM),
    };
    cfg.with_z(InitialVariance::Scalar(0.5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_stay_normalized(stream in clustered_stream(200), k in prop::option::of(1usize..6)) {
        let mut model = AdaptiveModel::new(config(k)).unwrap();
        let mut previous = 0;
        for x in &stream {
            let s = model.process(x).unwrap();
            let mix = model.mixture();
            prop_assert!((mix.total_weight() - 1.0).abs() <= 1e-9);
            prop_assert!((0.0..=1.0).contains(&s.score));
            prop_assert_eq!(s.mode_count_after, mix.len());
            prop_assert!(mix.len() <= previous + 1);
            if let Some(k) = k {
                prop_assert!(mix.len() <= k);
            }
            prop_assert!(mix.modes().iter().all(|m| m.weight >= 0.0));
            prop_assert!(mix.modes().iter().flat_map(|m| &m.variance).all(|v| *v >= 1e-6));
            previous = mix.len();
        }
        prop_assert_eq!(model.mixture().samples_seen(), stream.len() as u64);
    }

    #[test]
    fn beta_is_positive_and_bounded(dist in 0.0..4.8f64, alpha in 1e-6..0.999f64) {
        let b = compute_beta(dist, 4.8, alpha).unwrap();
        prop_assert!(b > 0.0 && b <= alpha);
        prop_assert!(compute_beta(dist / 2.0, 4.8, alpha).unwrap() >= b);
    }

    #[test]
    fn mahalanobis_is_zero_at_the_mean(m in arb_mode(0, 4), x in point(4)) {
        prop_assert_eq!(mahalanobis_distance(&m.mean, &m).unwrap(), 0.0);
        prop_assert!(mahalanobis_distance(&x, &m).unwrap() >= 0.0);
    }

    #[test]
    fn bhattacharyya_is_symmetric_and_non_negative(a in arb_mode(0, 4), b in arb_mode(1, 4)) {
        let ab = bhattacharyya_distance(&a, &b).unwrap();
        let ba = bhattacharyya_distance(&b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
        prop_assert_eq!(bhattacharyya_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn merge_pass_is_idempotent(mix in arb_mixture(2)) {
        let mut merged = mix.clone();
        let before = mix.total_weight();
        let events = merge_pass(&mut merged, 0.95, 1e-6).unwrap();
        prop_assert_eq!(merged.len() + events.len(), mix.len());
        prop_assert!((merged.total_weight() - before).abs() <= 1e-12);
        for (i, a) in merged.modes().iter().enumerate() {
            for b in &merged.modes()[i + 1..] {
                prop_assert!(bhattacharyya_distance(a, b).unwrap() >= 0.95);
            }
        }
        let settled = merged.clone();
        prop_assert!(merge_pass(&mut merged, 0.95, 1e-6).unwrap().is_empty());
        prop_assert_eq!(merged, settled);
    }

    #[test]
    fn snapshot_resume_continues_identically(stream in clustered_stream(60), split in 0usize..60) {
        let split = split.min(stream.len());
        let mut straight = AdaptiveModel::new(config(None)).unwrap();
        let mut resumed = AdaptiveModel::new(config(None)).unwrap();
        for x in &stream[..split] {
            straight.process(x).unwrap();
            resumed.process(x).unwrap();
        }
        let json = ModelSnapshot::capture(&resumed).to_json().unwrap();
        let mut resumed = ModelSnapshot::from_json(&json).unwrap().restore().unwrap();
        for x in &stream[split..] {
            prop_assert_eq!(straight.process(x).unwrap(), resumed.process(x).unwrap());
        }
    }

    #[test]
    fn incremental_merging_matches_full_rescans(stream in clustered_stream(120)) {
        // A restored model rescans every pair on its next step, so restoring
        // before each sample gives the full-rescan trajectory.
        let mut incremental = AdaptiveModel::new(config(None)).unwrap();
        let mut rescanning = AdaptiveModel::new(config(None)).unwrap();
        for x in &stream {
            let a = incremental.process(x).unwrap();
            rescanning = ModelSnapshot::capture(&rescanning).restore().unwrap();
            let b = rescanning.process(x).unwrap();
            prop_assert_eq!(a, b);
            prop_assert_eq!(incremental.mixture(), rescanning.mixture());
        }
    }

    #[test]
    fn config_text_round_trips(alpha in 1e-4..0.5f64, k in prop::option::of(1usize..50), z in prop::collection::vec(0.01..10.0f64, DIM)) {
        let mut cfg = config(k).with_alpha(alpha).with_z(InitialVariance::PerDimension(z));
        cfg.theta_bhat = alpha * 3.0;
        let parsed = ModelConfig::parse_kv(&cfg.to_kv()).unwrap();
        prop_assert_eq!(parsed, cfg);
    }

    #[test]
    fn pca_variances_are_ordered_and_mean_maps_to_origin(
        samples in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 5), 8..40),
        k in 1usize..=5,
    ) {
        let model = PcaModel::fit(&samples, k).unwrap();
        let ev = &model.explained_variance;
        prop_assert!(ev.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(ev.iter().all(|v| *v >= 0.0));
        let origin = model.transform(&model.mean).unwrap().into_inner();
        prop_assert!(origin.iter().all(|v| *v == 0.0));
        // Projection onto orthonormal rows never lengthens a centred vector.
        for s in &samples {
            let d = model.transform(s).unwrap().into_inner();
            let proj: f64 = d.iter().map(|v| v * v).sum();
            let full: f64 = s.iter().zip(&model.mean).map(|(a, m)| (a - m).powi(2)).sum();
            prop_assert!(proj <= full * (1.0 + 1e-9) + 1e-12);
        }
    }
}
