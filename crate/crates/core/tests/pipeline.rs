//! Enrollment, activation and the Monte Carlo engine on the (1024, 78) code.

use std::sync::Arc;

use polar_aed::puf::{activate, enroll, vnpo_enroll, vnpo_llrs, PufDevice, SegmentedScheme};
use polar_aed::sc::{PlanOptions, ValueSet};
use polar_aed::sim::{ci_bounds, Simulation, StopRule, SweepRow};
use polar_aed::{AeDecoder, EnsembleSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sc_simulation(segments: usize, seed: u64, min_errors: u64) -> Simulation {
    let code = Arc::new(polar_aed::polar::puf_code_1024());
    let dec = AeDecoder::new(
        &code,
        &EnsembleSpec::identity(),
        PlanOptions::binary(Some(3)),
    )
    .unwrap();
    let mut sim =
        Simulation::new(SegmentedScheme::new(code, segments).unwrap(), dec, seed).unwrap();
    sim.stop = StopRule {
        min_errors,
        max_frames: 1_000_000,
    };
    sim.timing = false;
    sim
}

fn overlap(a: &SweepRow, b: &SweepRow) -> bool {
    a.ci_low <= b.ci_high && b.ci_low <= a.ci_high
}

#[test]
fn four_segments_fail_as_four_independent_codes() {
    let p1 = sc_simulation(1, 11, 400).run_point(0.2, 0).unwrap();
    let p4 = sc_simulation(4, 12, 400).run_point(0.2, 0).unwrap();
    let lift = |p: f64| 1.0 - (1.0 - p).powi(4);
    let (lo, hi) = (lift(p1.ci_low), lift(p1.ci_high));
    assert!(
        lo <= p4.ci_high && p4.ci_low <= hi,
        "S=1 {p1:?}, S=4 {p4:?}"
    );
    assert!(p4.bler > p1.bler);
}

#[test]
fn all_zero_shortcut_agrees_statistically() {
    let full = sc_simulation(1, 21, 300).run_point(0.21, 0).unwrap();
    let mut sim = sc_simulation(1, 21, 300);
    sim.all_zero = true;
    let zero = sim.run_point(0.21, 0).unwrap();
    assert!(overlap(&full, &zero), "{full:?} vs {zero:?}");
}

#[test]
fn refreshed_helper_data_keeps_the_error_rate() {
    let code = Arc::new(polar_aed::polar::puf_code_1024());
    let scheme = SegmentedScheme::new(code.clone(), 1).unwrap();
    let mut dec = AeDecoder::new(
        &code,
        &EnsembleSpec::identity(),
        PlanOptions::binary(Some(3)),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let device = PufDevice::random(1024, 0.21, None, &mut rng).unwrap();
    let m1: Vec<u8> = (0..78).map(|_| rng.random::<bool>() as u8).collect();
    let m2: Vec<u8> = (0..78).map(|_| rng.random::<bool>() as u8).collect();
    let (h1, h2) = (
        enroll(&device, &m1, &scheme).unwrap(),
        enroll(&device, &m2, &scheme).unwrap(),
    );
    assert_ne!(h1, h2);
    let frames = 3000u64;
    let (mut e1, mut e2) = (0u64, 0u64);
    for f in 0..frames {
        // the same readout noise for both enrollments
        let a = activate(
            &device,
            &h1,
            &scheme,
            &mut dec,
            &mut ChaCha8Rng::seed_from_u64(f),
        )
        .unwrap();
        let b = activate(
            &device,
            &h2,
            &scheme,
            &mut dec,
            &mut ChaCha8Rng::seed_from_u64(f),
        )
        .unwrap();
        assert_eq!(a.noise, b.noise);
        e1 += !a.success(&m1) as u64;
        e2 += !b.success(&m2) as u64;
    }
    let (l1, u1) = ci_bounds(e1, frames);
    let (l2, u2) = ci_bounds(e2, frames);
    assert!(l1 <= u2 && l2 <= u1, "{e1} vs {e2} errors");
    assert!(e1 > 0);
}

#[test]
fn received_word_is_codeword_plus_noise_on_every_segment() {
    let code = Arc::new(polar_aed::polar::puf_code_1024());
    let scheme = SegmentedScheme::new(code.clone(), 4).unwrap();
    let mut dec = AeDecoder::new(
        &code,
        &EnsembleSpec::identity(),
        PlanOptions::binary(Some(3)),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let device = PufDevice::random(4096, 0.1, None, &mut rng).unwrap();
    let m: Vec<u8> = (0..312).map(|_| rng.random::<bool>() as u8).collect();
    let helper = enroll(&device, &m, &scheme).unwrap();
    let c: Vec<u8> = m.chunks(78).flat_map(|s| code.encode(s).unwrap()).collect();
    for _ in 0..100 {
        let act = activate(&device, &helper, &scheme, &mut dec, &mut rng).unwrap();
        let expect: Vec<u8> = c.iter().zip(&act.noise).map(|(c, e)| c ^ e).collect();
        assert_eq!(act.received, expect);
        assert_eq!(act.segment_ok(&m).len(), 4);
    }
}

fn within(count: u64, total: u64, p: f64) -> bool {
    let sd = (total as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - total as f64 * p).abs() <= 4.0 * sd
}

#[test]
fn pair_debiasing_channel_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let (bias, eps, cells) = (0.7, 0.2, 400_000);
    let device = PufDevice::random(cells, eps, Some(bias), &mut rng).unwrap();
    let (mask, golden) = vnpo_enroll(&device.golden, 0).unwrap();
    let pairs = (cells / 2) as u64;
    assert!(within(
        golden.len() as u64,
        pairs,
        2.0 * bias * (1.0 - bias)
    ));

    let (raw, _) = device.read(&mut rng);
    let llrs = vnpo_llrs(&raw, &mask).unwrap();
    assert_eq!(llrs.len(), golden.len());
    let (mut erased, mut flipped) = (0u64, 0u64);
    for (&l, &g) in llrs.iter().zip(&golden) {
        let correct = if g == 0 { 2 } else { -2 };
        assert!([-2, 0, 2].contains(&l));
        erased += (l == 0) as u64;
        flipped += (l == -correct) as u64;
    }
    let kept = llrs.len() as u64;
    assert!(
        within(erased, kept, 2.0 * eps * (1.0 - eps)),
        "erased {erased}/{kept}"
    );
    assert!(within(flipped, kept, eps * eps), "flipped {flipped}/{kept}");
}

#[test]
fn debiased_soft_readout_decodes_better_than_single_cells() {
    let code = polar_aed::polar::puf_code_1024();
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let eps = 0.25;
    let device = PufDevice::random(6000, eps, Some(0.7), &mut rng).unwrap();
    let (mask, golden) = vnpo_enroll(&device.golden, 1024).unwrap();
    let soft = PlanOptions {
        channel: ValueSet::new([-2, 0, 2]),
        ..PlanOptions::binary(Some(3))
    };
    let mut vn = AeDecoder::new(&code, &EnsembleSpec::identity(), soft).unwrap();
    let mut hard = AeDecoder::new(
        &code,
        &EnsembleSpec::identity(),
        PlanOptions::binary(Some(3)),
    )
    .unwrap();
    let (mut vn_err, mut hard_err) = (0, 0);
    for _ in 0..200 {
        let m: Vec<u8> = (0..78).map(|_| rng.random::<bool>() as u8).collect();
        let c = code.encode(&m).unwrap();
        let offset: Vec<u8> = c.iter().zip(&golden).map(|(c, x)| c ^ x).collect();
        let (raw, _) = device.read(&mut rng);
        let llr: Vec<i32> = vnpo_llrs(&raw, &mask).unwrap()[..1024]
            .iter()
            .zip(&offset)
            .map(|(&l, &w)| if w == 1 { -l } else { l })
            .collect();
        vn_err += (vn.decode(&llr).unwrap().codeword != c) as u32;

        let noisy: Vec<i32> = c
            .iter()
            .map(|&b| 1 - 2 * (b ^ rng.random_bool(eps) as u8) as i32)
            .collect();
        hard_err += (hard.decode(&noisy).unwrap().codeword != c) as u32;
    }
    assert!(
        vn_err < hard_err,
        "debiased {vn_err}, single cell {hard_err}"
    );
}
