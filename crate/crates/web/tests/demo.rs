use qrir::adapt::Scheme;
use qrir::ldpc::{pool_distribution, CodeRate};
use qrir::simchannel::ChannelParams;
use qrir_web::{channel_curve, embedded_distribution, Demo};

#[test]
fn embedded_distributions_match_the_repository_files() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/distributions");
    for rate in CodeRate::POOL {
        assert_eq!(embedded_distribution(rate).unwrap(), pool_distribution(rate, Some(&dir)).unwrap(), "{rate}");
    }
}

#[test]
fn selection_curve_is_monotone() {
    let demo = Demo::build(1000, 1).unwrap();
    for scheme in Scheme::ALL {
        let curve = demo.selection_curve(scheme, 1.15, 0.005, 0.11, 60);
        assert_eq!(curve.len(), 60);
        for w in curve.windows(2) {
            assert!(w[1].rate <= w[0].rate + 1e-12, "{scheme} at {}", w[1].qber);
        }
        assert!(curve.iter().all(|p| p.punctured + p.shortened == 150));
    }
}

#[test]
fn simulation_reports_every_frame() {
    let demo = Demo::build(1000, 1).unwrap();
    let r = demo.simulate_point(Scheme::AdaptiveAsym, 0.05, 30, 3).unwrap();
    assert_eq!(r.frames, 30);
    assert_eq!(r.mismatched, 0);
    assert_eq!(r.f_ec.len(), 30);
    assert_eq!(r.iterations.len(), 30);
    let failed = r.f_ec.iter().filter(|f| f.is_none()).count();
    assert!((r.fer - failed as f64 / 30.0).abs() < 1e-12);
    assert_eq!(demo.simulate_point(Scheme::Symmetric, 0.05, 30, 3).unwrap().frames, 30);
}

#[test]
fn bad_geometry_is_rejected() {
    assert!(Demo::build(3, 1).is_err());
}

#[test]
fn channel_curve_spans_the_range() {
    let pts = channel_curve(&ChannelParams::default(), 30.0, 31);
    assert_eq!(pts.len(), 31);
    assert_eq!(pts[0].loss_db, 0.0);
    assert_eq!(pts[30].loss_db, 30.0);
    assert!(pts.iter().all(|p| p.e_mu <= p.e_nu1));
    assert!(pts.windows(2).all(|w| w[1].q_mu < w[0].q_mu));
}
