mod common;

use common::{
    all_vectors, brute_force_conditional_entropies, check_against_ml, matrix_transform,
    moderate_channel, MlCheck,
};
use polarq::codec::sc_decode_u;
use polarq::construction::{CodeSpec, Method, StatsDigest};
use polarq::{compress, inverse_transform, track_channels_exact, transform, JointChannel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn digest() -> StatsDigest {
    StatsDigest {
        method: Method::Bound,
        samples: 0,
        seed: 0,
    }
}

#[test]
fn fast_transform_matches_dense_matrix() {
    for q in [2, 3, 5] {
        for n in 0..=2 {
            for x in all_vectors(q, 1 << n) {
                assert_eq!(transform(&x, q).unwrap(), matrix_transform(&x, q));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for q in [2, 3, 7] {
        for n in 3..=6 {
            for _ in 0..50 {
                let x: Vec<u32> = (0..1 << n).map(|_| rng.random_range(0..q as u32)).collect();
                let u = transform(&x, q).unwrap();
                assert_eq!(u, matrix_transform(&x, q));
                assert_eq!(inverse_transform(&u, q).unwrap(), x);
            }
        }
    }
}

#[test]
fn tracked_entropies_match_enumerated_conditional_entropies() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cases: Vec<(JointChannel, u32)> = vec![
        (JointChannel::sample_random(2, 3, &mut rng).unwrap(), 3),
        (JointChannel::sample_random(2, 2, &mut rng).unwrap(), 3),
        (JointChannel::sample_random(3, 2, &mut rng).unwrap(), 2),
        (JointChannel::sample_random(3, 3, &mut rng).unwrap(), 2),
        (JointChannel::qsc(3, 0.2).unwrap(), 2),
        (JointChannel::sample_random(5, 2, &mut rng).unwrap(), 1),
    ];
    for (w, n) in cases {
        let oracle = brute_force_conditional_entropies(&w, n);
        let tracked = track_channels_exact(&w, n, 1 << 24).unwrap();
        for (i, (o, r)) in oracle.iter().zip(&tracked.stats.records).enumerate() {
            assert!(
                (o - r.h_hat).abs() < 1e-10,
                "q={} n={n} index {i}: oracle {o} tracker {}",
                w.q(),
                r.h_hat
            );
        }
    }
}

#[test]
fn sc_decoder_matches_sequential_ml() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut total = MlCheck::default();
    for q in [2, 3] {
        let w = moderate_channel(q, &mut rng);
        for _ in 0..4 {
            let frozen: Vec<usize> = (0..4).filter(|_| rng.random_bool(0.5)).collect();
            let spec = CodeSpec::new(2, frozen, w.clone(), digest()).unwrap();
            let mask = spec.frozen_mask();
            for y in all_vectors(w.len(), 4) {
                let y: Vec<usize> = y.into_iter().map(|a| a as usize).collect();
                for x in all_vectors(q, 4) {
                    let block = compress(&x, &spec).unwrap();
                    let u = sc_decode_u(&block, &y, &spec).unwrap();
                    let c = check_against_ml(&w, &y, &mask, &block.payload, &u, 1e-12)
                        .unwrap_or_else(|e| panic!("q={q} y={y:?} x={x:?}: {e}"));
                    total.unique += c.unique;
                    total.tied += c.tied;
                }
            }
        }
    }
    // Repeated observations make some decisions genuinely symmetric.
    assert!(total.unique > 4 * total.tied, "{total:?}");
}
