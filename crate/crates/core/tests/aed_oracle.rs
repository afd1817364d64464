//! Ensemble decoding on a 16-bit code against exhaustive maximum-likelihood
//! search.

use polar_aed::aed::correlation;
use polar_aed::perm::{sample_ensemble, BasePerm, SamplingPolicy};
use polar_aed::sc::PlanOptions;
use polar_aed::{AeDecoder, Architecture, CodeSpec, EnsembleSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn code16() -> CodeSpec {
    // every index of weight >= 2: K = 11, invariant under the affine group
    CodeSpec::from_generators(4, &[3], &[2, 2]).unwrap()
}

fn all_codewords(code: &CodeSpec) -> Vec<Vec<u8>> {
    (0..1u32 << code.k())
        .map(|m| {
            let bits: Vec<u8> = (0..code.k()).map(|i| (m >> i & 1) as u8).collect();
            code.encode(&bits).unwrap()
        })
        .collect()
}

fn hamming(a: &[u8], b: &[u8]) -> i64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as i64
}

#[test]
fn ensemble_decoding_against_ml_oracle() {
    let code = code16();
    assert_eq!(code.k(), 11);
    let book = all_codewords(&code);
    let mut rng = ChaCha8Rng::seed_from_u64(301);
    let spec = sample_ensemble(
        &code,
        Architecture::Independent,
        8,
        SamplingPolicy {
            identity_first_block: false,
        },
        &mut rng,
    )
    .unwrap();
    let mut aed = AeDecoder::new(&code, &spec, PlanOptions::binary(Some(3))).unwrap();

    let (mut aed_errors, mut ml_strict_errors, mut not_selected) = (0, 0, 0);
    let mut unique_ml_in_list = 0;
    for _ in 0..1000 {
        let truth = &book[rng.random_range(0..book.len())];
        let rx: Vec<u8> = truth
            .iter()
            .map(|&c| c ^ rng.random_bool(0.12) as u8)
            .collect();
        let llr: Vec<i32> = rx.iter().map(|&b| 1 - 2 * b as i32).collect();

        let result = aed.decode(&llr).unwrap();
        let cands = aed.candidates(&llr).unwrap();
        assert_eq!(result.attempts, 8);
        for (c, &m) in cands.iter().zip(&result.metrics) {
            assert!(code.is_codeword(c).unwrap());
            assert_eq!(correlation(c, &llr), m);
            // on binary inputs the correlation is N - 2 d_H(c, y)
            assert_eq!(m, 16 - 2 * hamming(c, &rx));
        }
        let best = *result.metrics.iter().max().unwrap();
        let first = result.metrics.iter().position(|&m| m == best).unwrap();
        assert_eq!(result.winner, first);
        assert_eq!(result.codeword, cands[first]);

        let truth_metric = correlation(truth, &llr);
        let ml_best = book.iter().map(|c| correlation(c, &llr)).max().unwrap();
        assert!(best <= ml_best);
        if ml_best > truth_metric {
            ml_strict_errors += 1;
        }
        let unique_ml = book
            .iter()
            .filter(|c| correlation(c, &llr) >= truth_metric)
            .count()
            == 1;
        if unique_ml && cands.contains(truth) {
            unique_ml_in_list += 1;
            assert_eq!(result.codeword, *truth);
        }
        let truth_wins = cands.iter().position(|c| c == truth).is_some_and(|j| {
            result.metrics[j] == best && result.metrics[..j].iter().all(|&m| m < best)
        });
        if !truth_wins {
            not_selected += 1;
        }
        if result.codeword != *truth {
            aed_errors += 1;
            let in_list = cands.iter().position(|c| c == truth);
            assert!(in_list.is_none_or(|j| result.metrics[j] <= best));
        }
    }
    assert!(aed_errors <= not_selected);
    assert!(unique_ml_in_list > 0);
    eprintln!("AED errors {aed_errors}, ML errors {ml_strict_errors}");
}

#[test]
fn architecture_does_not_change_results_for_equal_tables() {
    let code = polar_aed::polar::puf_code_1024();
    let mut rng = ChaCha8Rng::seed_from_u64(302);
    let policy = SamplingPolicy::for_code(&code);
    let plan = PlanOptions::binary(Some(3));
    for arch in [Architecture::Cascaded, Architecture::Recursive] {
        let spec = sample_ensemble(&code, arch, 16, policy, &mut rng).unwrap();
        let members = spec.members(1024).unwrap();
        let flat = EnsembleSpec::independent(
            members[1..]
                .iter()
                .cloned()
                .map(BasePerm::from_perm)
                .collect(),
        )
        .unwrap();
        let mut a = AeDecoder::new(&code, &spec, plan.clone()).unwrap();
        let mut b = AeDecoder::new(&code, &flat, plan.clone()).unwrap();
        for _ in 0..30 {
            let llr: Vec<i32> = (0..1024)
                .map(|_| if rng.random_bool(0.27) { -1 } else { 1 })
                .collect();
            assert_eq!(a.decode(&llr).unwrap(), b.decode(&llr).unwrap());
        }
    }
}

#[test]
fn early_exit_never_changes_the_decision() {
    let code = code16();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let spec = sample_ensemble(
        &code,
        Architecture::Independent,
        8,
        SamplingPolicy {
            identity_first_block: false,
        },
        &mut rng,
    )
    .unwrap();
    let plan = PlanOptions::binary(Some(3));
    let mut full = AeDecoder::new(&code, &spec, plan.clone()).unwrap();
    let mut early = AeDecoder::new(&code, &spec, plan)
        .unwrap()
        .with_early_exit(true);
    for _ in 0..500 {
        let llr: Vec<i32> = (0..16)
            .map(|_| if rng.random_bool(0.1) { -1 } else { 1 })
            .collect();
        let (a, b) = (full.decode(&llr).unwrap(), early.decode(&llr).unwrap());
        assert_eq!((a.codeword, a.winner), (b.codeword, b.winner));
        assert!(b.attempts <= a.attempts);
    }
}
