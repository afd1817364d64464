//! Randomised algebraic properties.

use polar_aed::gf2::random_invertible;
use polar_aed::perm::{build_bdl_perm, Permutation};
use polar_aed::polar::polar_transform;
use polar_aed::sim::{ci_bounds, frame_seed};
use polar_aed::{BitMatrix, CodeSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn table(len: usize) -> impl Strategy<Value = Vec<u32>> {
    Just((0..len as u32).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inverse_times_matrix_is_identity(s in 1usize..=16, seed in any::<u64>()) {
        let a = random_invertible(s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let inv = a.inverse().unwrap();
        prop_assert!(a.mul(&inv).unwrap().is_identity());
        prop_assert!(inv.mul(&a).unwrap().is_identity());
        prop_assert_eq!(a.rank(), s);
    }

    #[test]
    fn matrix_action_is_linear(s in 1usize..=12, seed in any::<u64>(), x in any::<u32>(), y in any::<u32>()) {
        let a = random_invertible(s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mask = (1u32 << s) - 1;
        let (x, y) = (x & mask, y & mask);
        prop_assert_eq!(a.apply(x ^ y), a.apply(x) ^ a.apply(y));
    }

    #[test]
    fn polar_transform_is_an_involution(bits in prop::collection::vec(0u8..2, 64)) {
        let mut x = bits.clone();
        polar_transform(&mut x);
        polar_transform(&mut x);
        prop_assert_eq!(x, bits);
    }

    #[test]
    fn encoding_is_linear(
        gens in prop::collection::vec(0usize..64, 1..4),
        a in prop::collection::vec(0u8..2, 64),
        b in prop::collection::vec(0u8..2, 64),
    ) {
        let code = CodeSpec::from_generators(6, &gens, &[]).unwrap();
        let (a, b) = (&a[..code.k()], &b[..code.k()]);
        let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x ^ y).collect();
        let (ca, cb) = (code.encode(a).unwrap(), code.encode(b).unwrap());
        let cs: Vec<u8> = ca.iter().zip(&cb).map(|(x, y)| x ^ y).collect();
        prop_assert_eq!(code.encode(&sum).unwrap(), cs.clone());
        prop_assert_eq!(code.extract_message(&cs).unwrap(), sum);
    }

    #[test]
    fn permutation_group_laws(p in table(32), q in table(32), x in prop::collection::vec(any::<i16>(), 32)) {
        let (p, q) = (Permutation::from_table(p).unwrap(), Permutation::from_table(q).unwrap());
        prop_assert!(p.compose(&p.inverse()).unwrap().is_identity());
        let pq = p.compose(&q).unwrap();
        prop_assert_eq!(pq.inverse(), q.inverse().compose(&p.inverse()).unwrap());
        // applying the composition equals applying q then p
        prop_assert_eq!(pq.apply(&x), p.apply(&q.apply(&x)));
        prop_assert_eq!(p.apply_inverse(&p.apply(&x)), x);
        prop_assert_eq!(p.pow(p.order()), Permutation::identity(32));
    }

    #[test]
    fn bdl_permutation_of_product_is_product(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profile = [2usize, 3];
        let a: Vec<BitMatrix> = profile.iter().map(|&s| random_invertible(s, &mut rng).unwrap()).collect();
        let b: Vec<BitMatrix> = profile.iter().map(|&s| random_invertible(s, &mut rng).unwrap()).collect();
        let ab: Vec<BitMatrix> = a.iter().zip(&b).map(|(x, y)| x.mul(y).unwrap()).collect();
        let pa = build_bdl_perm(&a, &profile).unwrap();
        let pb = build_bdl_perm(&b, &profile).unwrap();
        prop_assert_eq!(build_bdl_perm(&ab, &profile).unwrap(), pa.compose(&pb).unwrap());
    }

    #[test]
    fn wilson_interval_contains_the_estimate(frames in 1u64..1_000_000, frac in 0.0f64..=1.0) {
        let errors = ((frames as f64) * frac) as u64;
        let (lo, hi) = ci_bounds(errors, frames);
        let p = errors as f64 / frames as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }

    #[test]
    fn frame_seeds_do_not_collide(master in any::<u64>(), point in 0u64..16) {
        let seeds: std::collections::HashSet<u64> =
            (0..4096).map(|f| frame_seed(master, point, f)).collect();
        prop_assert_eq!(seeds.len(), 4096);
    }
}
