mod common;

use std::thread;

use common::{ci_geometry, ci_pool};
use qrir::adapt::Scheme;
use qrir::experiment::{party_seeds, run_point, PointSpec};
use qrir::session::{drive, run_block, AbortReason, Alice, Bob, FrameRecord, MemoryLink, SessionConfig};
use qrir::simchannel::{simulate_block, ChannelParams, QberProfile};

fn spec(profile: QberProfile, frames: usize, seed: u64) -> PointSpec {
    PointSpec {
        frames,
        frames_per_block: 50,
        channel: ChannelParams::default(),
        profile,
        channel_seed: seed,
    }
}

fn check_consistent(alice: &[FrameRecord], bob: &[FrameRecord]) {
    assert_eq!(alice.len(), bob.len());
    for (a, b) in alice.iter().zip(bob) {
        assert_eq!(a.frame_id, b.frame_id);
        assert_eq!(a.verified, b.verified, "frame {}", a.frame_id);
        assert_eq!(a.d_total, b.d_total, "frame {}", a.frame_id);
        assert_eq!(a.rounds_additional, b.rounds_additional, "frame {}", a.frame_id);
        assert_eq!(a.selection, b.selection, "frame {}", a.frame_id);
        assert_eq!(a.measured_qber, b.measured_qber, "frame {}", a.frame_id);
    }
}

#[test]
fn every_scheme_reconciles_and_both_sides_agree() {
    let pool = ci_pool();
    for scheme in Scheme::ALL {
        let session = SessionConfig::new(scheme, ci_geometry(), 3);
        let run = run_point(pool, &session, &spec(QberProfile::constant(0.05), 100, 5), |_| Ok(())).unwrap();
        assert_eq!(run.mismatched, 0, "{scheme}");
        check_consistent(&run.alice, &run.bob);
        let verified = run.bob.iter().filter(|r| r.verified).count();
        assert!(verified >= 50, "{scheme}: only {verified}/100 verified");
        // Request, syndrome, two per additional round, verify, result; the
        // symmetric scheme sends one more syndrome.
        let (n_add, extra) = (session.policy.n_add_max, usize::from(scheme == Scheme::Symmetric));
        assert!(run.max_messages <= 2 + 2 * n_add + 2 + extra, "{scheme}: {}", run.max_messages);
        for r in &run.bob {
            assert!(r.d_total <= r.selection.punctured + r.payload_len());
            if scheme.is_blind() {
                assert!(r.d_total <= r.selection.punctured);
            }
            if !r.verified {
                assert!(r.abort.is_some() || r.success, "frame {} failed without a reason", r.frame_id);
            }
        }
    }
}

#[test]
fn disclosure_is_accounted_per_frame() {
    let pool = ci_pool();
    for scheme in Scheme::ALL {
        let config = SessionConfig::new(scheme, ci_geometry(), 21);
        let (sa, sb) = party_seeds(config.seed);
        let mut alice = Alice::new(pool, config.clone(), sa).unwrap();
        let mut bob = Bob::new(pool, config, sb).unwrap();
        let block = simulate_block(&ChannelParams::default(), &QberProfile::constant(0.05), &ci_geometry(), 0, 30, 8);
        let out = run_block(&mut alice, &mut bob, block.alice, block.bob).unwrap();
        for (i, r) in out.bob.iter().enumerate() {
            assert_eq!(r.d_total, out.disclosed_per_frame[i], "{scheme} frame {i}");
            assert!(r.d_punctured <= r.d_total);
        }
    }
}

#[test]
fn error_free_keys_verify_in_the_basic_round() {
    let pool = ci_pool();
    let session = SessionConfig::new(Scheme::AdaptiveAsym, ci_geometry(), 4);
    let run = run_point(pool, &session, &spec(QberProfile::constant(0.0), 50, 1), |_| Ok(())).unwrap();
    assert!(run.bob.iter().all(|r| r.verified && r.rounds_additional == 0));
    assert!(run.bob.iter().all(|r| r.measured_qber == Some(0.0)));
}

#[test]
fn no_additional_rounds_fails_cleanly() {
    let pool = ci_pool();
    let mut session = SessionConfig::new(Scheme::AdaptiveAsym, ci_geometry(), 4);
    session.policy.n_add_max = 0;
    session.policy.f_start = 1.01;
    let run = run_point(pool, &session, &spec(QberProfile::constant(0.08), 50, 2), |_| Ok(())).unwrap();
    assert_eq!(run.mismatched, 0);
    let failed: Vec<_> = run.bob.iter().filter(|r| !r.verified).collect();
    assert!(!failed.is_empty());
    for r in failed {
        assert_eq!(r.rounds_additional, 0);
        assert_eq!(r.d_total, 0);
        assert_eq!(r.abort, Some(AbortReason::RoundsExhausted));
    }
}

#[test]
fn failures_raise_the_next_estimate() {
    let pool = ci_pool();
    let mut session = SessionConfig::new(Scheme::AdaptiveAsym, ci_geometry(), 6);
    session.policy.n_add_max = 0;
    let run = run_point(pool, &session, &spec(QberProfile::constant(0.06), 100, 3), |_| Ok(())).unwrap();
    let mut rises = 0;
    for pair in run.bob.windows(2) {
        if !pair[0].verified && !pair[1].burst {
            assert!(pair[1].selection.qber_hat > pair[0].selection.qber_hat, "frame {}", pair[1].frame_id);
            rises += 1;
        }
    }
    assert!(rises > 0, "no failure to observe");
}

#[test]
fn burst_frames_select_lower_rates() {
    let pool = ci_pool();
    let session = SessionConfig::new(Scheme::AdaptiveAsym, ci_geometry(), 9);
    let profile = QberProfile::constant(0.02).with_burst(20, 26, 0.08);
    let run = run_point(pool, &session, &spec(profile, 50, 4), |_| Ok(())).unwrap();
    assert_eq!(run.mismatched, 0);
    // A failed frame folds the 0.5 penalty into the estimate, so single
    // calm frames can also drop to low rates; compare on average.
    let mean_rate = |rs: &mut dyn Iterator<Item = &FrameRecord>| {
        let v: Vec<f64> = rs.map(|r| r.selection.rate.value()).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let burst = mean_rate(&mut run.bob[20..26].iter());
    let calm = mean_rate(&mut run.bob.iter().filter(|r| !(20..26).contains(&(r.frame_id as usize))));
    assert!(burst < calm - 0.05, "burst {burst} vs calm {calm}");
    assert!(run.bob[20..26].iter().all(|r| r.burst && (r.selection.qber_hat - 0.08).abs() < 0.02));
    // Decoy QBERs of short frames are noisy; a 3-sigma rule flags a calm
    // frame now and then.
    let false_alarms = run.bob.iter().filter(|r| r.burst && !(20..26).contains(&(r.frame_id as usize))).count();
    assert!(false_alarms <= 2, "{false_alarms} calm frames flagged");
}

#[test]
fn threaded_link_matches_in_memory_run() {
    let pool = ci_pool();
    let config = SessionConfig::new(Scheme::Symmetric, ci_geometry(), 13);
    let block = simulate_block(&ChannelParams::default(), &QberProfile::constant(0.04), &ci_geometry(), 0, 20, 6);

    let (sa, sb) = party_seeds(config.seed);
    let mut alice = Alice::new(pool, config.clone(), sa).unwrap();
    let mut bob = Bob::new(pool, config.clone(), sb).unwrap();
    let reference = run_block(&mut alice, &mut bob, block.alice.clone(), block.bob.clone()).unwrap();

    let (mut link_a, mut link_b) = MemoryLink::pair();
    let (alice_records, bob_records) = thread::scope(|s| {
        let a = s.spawn(|| {
            let mut alice = Alice::new(pool, config.clone(), sa).unwrap();
            let initial = alice.start_block(block.alice.clone()).unwrap();
            drive(&mut alice, &mut link_a, initial).unwrap();
            alice.records().to_vec()
        });
        let b = s.spawn(|| {
            let mut bob = Bob::new(pool, config.clone(), sb).unwrap();
            let initial = bob.start_block(block.bob.clone()).unwrap();
            drive(&mut bob, &mut link_b, initial).unwrap();
            bob.records().to_vec()
        });
        (a.join().unwrap(), b.join().unwrap())
    });
    let strip = |rs: &[FrameRecord]| rs.iter().map(|r| (r.verified, r.d_total, r.iterations_total)).collect::<Vec<_>>();
    assert_eq!(strip(&alice_records), strip(&reference.alice));
    assert_eq!(strip(&bob_records), strip(&reference.bob));
}

#[test]
fn runs_are_deterministic() {
    let pool = ci_pool();
    let session = SessionConfig::new(Scheme::BlindLinear, ci_geometry(), 17);
    let a = run_point(pool, &session, &spec(QberProfile::constant(0.05), 60, 7), |_| Ok(())).unwrap();
    let b = run_point(pool, &session, &spec(QberProfile::constant(0.05), 60, 7), |_| Ok(())).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.bob.len(), 60);
}
