use proptest::prelude::*;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

use qrir::adapt::{EstimatorConfig, FrameGeometry, QberEstimatorState};
use qrir::bits::hamming_distance;
use qrir::simchannel::{
    generate_decoy_stream, generate_frame_pair, generate_pair, model_qber, read_qkey, simulate_block, write_qkey,
    ChannelParams, QberProfile,
};

/// Two-sided `1 - 2 * tail` interval of Binomial(n, p).
fn binomial_interval(n: u64, p: f64, tail: f64) -> (u64, u64) {
    let b = Binomial::new(p, n).unwrap();
    (b.inverse_cdf(tail), b.inverse_cdf(1.0 - tail))
}

#[test]
fn burst_frames_flip_at_the_burst_rate() {
    let params = ChannelParams::default();
    let profile = QberProfile::constant(0.02).with_burst(5, 10, 0.08);
    let n = 27200;
    let (lo, hi) = binomial_interval(n as u64, 0.08, 0.005);
    for frame in 5..10 {
        let (a, b, q) = generate_frame_pair(&params, &profile, frame, n, 11);
        let flips = hamming_distance(&a, &b) as u64;
        assert!((lo..=hi).contains(&flips), "frame {frame}: {flips} outside [{lo}, {hi}]");
        assert!((q - flips as f64 / n as f64).abs() < 1e-15);
    }
    let (lo, hi) = binomial_interval(n as u64, 0.02, 0.005);
    let (a, b, _) = generate_frame_pair(&params, &profile, 4, n, 11);
    assert!((lo..=hi).contains(&(hamming_distance(&a, &b) as u64)));
}

#[test]
fn flip_counts_fit_the_binomial() {
    // 2000 frames of 1000 bits at q = 0.05, bucketed into equiprobable-ish
    // bins of the binomial CDF.
    let (n, p, frames) = (1000u64, 0.05, 2000);
    let dist = Binomial::new(p, n).unwrap();
    let edges: Vec<u64> = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9].iter().map(|&c| dist.inverse_cdf(c)).collect();
    let mut observed = vec![0usize; edges.len() + 1];
    for i in 0..frames {
        let (a, b, _) = generate_pair(p, n as usize, 1000 + i);
        let k = hamming_distance(&a, &b) as u64;
        observed[edges.iter().take_while(|&&e| k > e).count()] += 1;
    }
    let mut prev = 0.0;
    let mut chi2 = 0.0;
    for (bin, &obs) in observed.iter().enumerate() {
        let upto = edges.get(bin).map_or(1.0, |&e| dist.cdf(e));
        let expected = (upto - prev) * frames as f64;
        prev = upto;
        chi2 += (obs as f64 - expected).powi(2) / expected;
    }
    let p_value = 1.0 - ChiSquared::new((observed.len() - 1) as f64).unwrap().cdf(chi2);
    assert!(p_value > 0.001, "chi2 {chi2}, p {p_value}");
}

#[test]
fn alice_bits_are_balanced() {
    let (a, _, _) = generate_pair(0.1, 1_000_000, 3);
    let ones = a.iter().filter(|&&x| x == 1).count() as u64;
    let (lo, hi) = binomial_interval(1_000_000, 0.5, 0.0005);
    assert!((lo..=hi).contains(&ones), "{ones}");
}

#[test]
fn model_ordering_over_thirty_db() {
    let params = ChannelParams::default();
    for i in 0..=300 {
        let m = model_qber(&params.with_loss(i as f64 * 0.1));
        assert!(m.e_mu <= m.e_nu1 && m.e_nu1 <= m.e_nu2, "loss {}", i as f64 * 0.1);
        assert!(m.q_mu > m.q_nu1 && m.q_nu1 > m.q_nu2);
    }
}

#[test]
fn decoy_flips_follow_the_model_ratio() {
    let params = ChannelParams::default().with_loss(20.0);
    let ratio = model_qber(&params).decoy_ratio();
    let expected = 0.02 * ratio;
    let segments = generate_decoy_stream(&params, &QberProfile::constant(0.02), 0, 50, 20_000, 9);
    let flips: usize = segments.iter().map(|(a, b)| hamming_distance(a, b)).sum();
    let (lo, hi) = binomial_interval(1_000_000, expected, 0.005);
    assert!((lo..=hi).contains(&(flips as u64)), "{flips} vs {expected}");
}

#[test]
fn burst_decoys_trip_the_detector() {
    let params = ChannelParams::default();
    let geometry = FrameGeometry::default();
    let profile = QberProfile::constant(0.02).with_burst(30, 35, 0.08);
    let block = simulate_block(&params, &profile, &geometry, 0, 50, 4);
    let mut estimator = QberEstimatorState::new(EstimatorConfig::default());
    let decoy_qber = |i: usize| {
        let (a, b) = (&block.alice.decoy[i], &block.bob.decoy[i]);
        hamming_distance(a, b) as f64 / a.len() as f64
    };
    for i in 0..30 {
        estimator.record_decoy(decoy_qber(i), false);
    }
    for i in 30..35 {
        assert!(estimator.detect_burst(decoy_qber(i)), "frame {i}");
    }
}

#[test]
fn qkey_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.qkey");
    let (a, b, _) = generate_pair(0.03, 12_345, 2);
    write_qkey(&path, &a, &b).unwrap();
    assert_eq!(read_qkey(&path).unwrap(), (a, b));
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"QKEY");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 12_345);
    assert_eq!(bytes.len(), 8 + 2 * 12_345usize.div_ceil(8));
}

proptest! {
    #[test]
    fn same_seed_same_pair(q in 0.0f64..0.5, len in 1usize..4000, seed: u64) {
        prop_assert_eq!(generate_pair(q, len, seed), generate_pair(q, len, seed));
    }

    #[test]
    fn realized_qber_is_the_hamming_fraction(q in 0.0f64..0.5, len in 1usize..4000, seed: u64) {
        let (a, b, r) = generate_pair(q, len, seed);
        prop_assert_eq!(r, hamming_distance(&a, &b) as f64 / len as f64);
    }
}
