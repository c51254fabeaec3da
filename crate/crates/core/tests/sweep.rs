use dftce::estimators::EstimatorId;
use dftce::harness::{self, SimConfig};

#[test]
fn ideal_ber_falls_with_snr() {
    let mut cfg = SimConfig::lte_etu();
    cfg.estimators = vec![EstimatorId::Ideal];
    cfg.snr_points_db = vec![0.0, 5.0, 10.0, 15.0, 20.0];
    cfg.subframes_per_point = 10_000;
    let records = harness::sweep(&cfg).unwrap();
    for w in records.windows(2) {
        let slack = 2.0 * w[0].std_error().hypot(w[1].std_error());
        assert!(w[1].ber <= w[0].ber + slack, "{:?} then {:?}", w[0], w[1]);
    }
}

#[test]
fn records_account_for_every_data_bit() {
    let mut cfg = SimConfig::lte_etu();
    cfg.estimators = EstimatorId::ALL.to_vec();
    cfg.snr_points_db = vec![10.0, 20.0];
    cfg.subframes_per_point = 37;
    let records = harness::sweep(&cfg).unwrap();
    assert_eq!(records.len(), EstimatorId::ALL.len() * 2);
    for (r, (id, snr)) in records.iter().zip(
        EstimatorId::ALL
            .iter()
            .flat_map(|&id| [(id, 10.0), (id, 20.0)]),
    ) {
        assert_eq!((r.estimator, r.snr_db), (id, snr));
        assert_eq!(r.total_bits, 37 * 2 * (512 - 64) * 2);
        assert!((0.0..=1.0).contains(&r.ber));
        assert_eq!(r.ber, r.bit_errors as f64 / r.total_bits as f64);
        assert_eq!(r.mean_sigma2_hat.is_nan(), matches!(id, EstimatorId::Ideal | EstimatorId::LsOnly));
    }
}

#[test]
fn estimators_see_the_same_channel_and_noise() {
    let cfg = SimConfig::lte_etu();
    let pilots = harness::sweep_pilots(&cfg);
    let a = harness::simulate_block(&cfg, &pilots, 12.0, 5).unwrap();
    let b = harness::simulate_block(&cfg, &pilots, 12.0, 5).unwrap();
    assert_eq!(a.rx_samples, b.rx_samples);
    let ideal = harness::run_trial(&cfg, 12.0, 5, EstimatorId::Ideal).unwrap();
    let proposed = harness::run_trial(&cfg, 12.0, 5, EstimatorId::Proposed).unwrap();
    assert_eq!(ideal.bits, proposed.bits);
    assert_eq!(ideal.mse, 0.0);
    assert!(proposed.mse > 0.0);
}

#[test]
fn csv_round_trips_a_real_sweep() {
    let mut cfg = SimConfig::lte_etu();
    cfg.snr_points_db = vec![5.0, 15.0, 25.0];
    cfg.subframes_per_point = 20;
    let records = harness::sweep(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ber.csv");
    harness::write_csv(&records, &path).unwrap();
    let back = harness::read_csv(&path).unwrap();
    assert_eq!(back.len(), records.len());
    for (a, b) in records.iter().zip(&back) {
        assert!(a.same_as(b), "{a:?} vs {b:?}");
    }
}
