use dftce::channel::{self, ChannelRealization};
use dftce::estimators::{self, ConventionalParams, EstimatorId, PilotLsGrid};
use dftce::phy::{self, ComplexMatrix, GridConfig, ResourceGrid};
use dftce::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn complex() -> impl Strategy<Value = C64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(re, im)| C64::new(re, im))
}

// Distinct sorted delays below `bound` with nonzero gains.
fn taps(bound: usize) -> impl Strategy<Value = (Vec<usize>, Vec<C64>)> {
    proptest::collection::btree_set(0..bound, 1..8).prop_flat_map(|set| {
        let delays: Vec<usize> = set.into_iter().collect();
        let n = delays.len();
        (
            Just(delays),
            proptest::collection::vec(complex().prop_filter("nonzero", |g| g.norm() > 1e-3), n),
        )
    })
}

fn pilot_grid(h: &ChannelRealization, cfg: &GridConfig) -> PilotLsGrid {
    let mut values = ComplexMatrix::zeros(cfg.n_pilots, cfg.symbols);
    for m in 0..cfg.symbols {
        for n in 0..cfg.n_pilots {
            values.set(n, m, h.freq_response[n * cfg.pilot_spacing()]);
        }
    }
    PilotLsGrid::new(values)
}

fn max_rel_err(est: &[C64], truth: &[C64]) -> f64 {
    let scale = truth.iter().map(|v| v.norm()).fold(0.0, f64::max);
    est.iter().zip(truth).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn conventional_recovers_channels_inside_threshold((delays, gains) in taps(39)) {
        let cfg = GridConfig::lte_like();
        let h = ChannelRealization::from_taps(delays, gains, cfg.n_subcarriers);
        let ls = pilot_grid(&h, &cfg);
        let params = ConventionalParams::new(39, 2.0).unwrap();
        let est = estimators::conventional_estimate(ls.column(0), &params, cfg.n_subcarriers).unwrap();
        prop_assert!(max_rel_err(&est.h_hat, &h.freq_response) <= 1e-9);
    }

    #[test]
    fn proposed_recovers_any_channel_shorter_than_pilot_count((delays, gains) in taps(64)) {
        let cfg = GridConfig::lte_like();
        let h = ChannelRealization::from_taps(delays, gains, cfg.n_subcarriers);
        let est = estimators::proposed_estimate(&pilot_grid(&h, &cfg), cfg.n_subcarriers).unwrap();
        prop_assert!(max_rel_err(&est.h_hat, &h.freq_response) <= 1e-9);
    }

    #[test]
    fn noise_block_ignores_a_common_channel(
        (delays, gains) in taps(64),
        noise in proptest::collection::vec(complex(), 128),
    ) {
        let cfg = GridConfig::lte_like();
        let h = ChannelRealization::from_taps(delays, gains, cfg.n_subcarriers);
        let clean = pilot_grid(&h, &cfg);
        let noise_only = PilotLsGrid::new(ComplexMatrix::from_columns(64, 2, noise.clone()).unwrap());
        let sum: Vec<C64> = clean.values().as_slice().iter().zip(&noise).map(|(a, b)| a + b).collect();
        let noisy = PilotLsGrid::new(ComplexMatrix::from_columns(64, 2, sum).unwrap());
        let a = estimators::proposed_stack_idft(&noisy).unwrap().noise_block();
        let b = estimators::proposed_stack_idft(&noise_only).unwrap().noise_block();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).norm() <= 1e-12);
        }
    }

    #[test]
    fn matrix_view_is_a_reindexing(values in proptest::collection::vec(complex(), 128)) {
        let ls = PilotLsGrid::new(ComplexMatrix::from_columns(64, 2, values).unwrap());
        let s = estimators::proposed_stack_idft(&ls).unwrap();
        let view = s.matrix_view();
        for n in 0..64 {
            for v in 0..2 {
                prop_assert_eq!(view.get(n, v), s.samples()[n * 2 + v]);
                prop_assert_eq!(s.get(n, v), s.samples()[n * 2 + v]);
            }
        }
        prop_assert_eq!(s.noise_block().len(), 64);
        prop_assert_eq!(s.channel_column().len(), 64);
    }

    #[test]
    fn noise_estimates_are_nonnegative_with_fixed_counts(
        values in proptest::collection::vec(complex(), 128),
        th in 0usize..64,
    ) {
        let ls = PilotLsGrid::new(ComplexMatrix::from_columns(64, 2, values).unwrap());
        let p = estimators::proposed_noise_var(&estimators::proposed_stack_idft(&ls).unwrap()).unwrap();
        prop_assert!(p.sigma2_hat >= 0.0);
        prop_assert_eq!(p.sample_count, 64);
        let cir = dftce::spectral::idft(ls.column(0)).unwrap();
        let c = estimators::conventional_noise_var(&cir, th).unwrap();
        prop_assert!(c.sigma2_hat >= 0.0);
        prop_assert_eq!(c.sample_count, 64 - th);
    }

    #[test]
    fn conventional_zeroes_everything_past_threshold(
        values in proptest::collection::vec(complex(), 64),
        th in 1usize..64,
    ) {
        let params = ConventionalParams::new(th, 2.0).unwrap();
        let (est, trace) = estimators::conventional_trace(&values, &params, 512).unwrap();
        prop_assert_eq!(est.h_hat.len(), 512);
        prop_assert_eq!(trace.noise.sample_count, 64 - th);
        for (l, v) in trace.cleaned_cir.iter().enumerate() {
            if l >= th {
                prop_assert_eq!(*v, C64::default());
            } else if *v != C64::default() {
                prop_assert_eq!(*v, trace.raw_cir[l]);
                prop_assert!(v.norm_sqr() >= 2.0 * trace.noise.sigma2_hat);
            }
        }
    }

    #[test]
    fn noiseless_link_round_trips_bits(seed in any::<u64>(), (delays, gains) in taps(41)) {
        let cfg = GridConfig::lte_like();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = ChannelRealization::from_taps(delays, gains, cfg.n_subcarriers);
        let pilots = phy::generate_pilots(seed, &cfg);
        let bits: Vec<u8> = (0..cfg.bits_per_block()).map(|_| rng.random_range(0..2u8)).collect();
        let grid = ResourceGrid::assemble(&cfg, &phy::qpsk_modulate(&bits).unwrap(), &pilots).unwrap();
        let mut rx = channel::apply(&phy::ofdm_modulate(&grid.cells, &cfg).unwrap(), &h, &cfg).unwrap();
        channel::add_awgn(&mut rx, &channel::NoiseSpec::noiseless(), &mut rng);
        let rx_grid = phy::ofdm_demodulate(&rx, &cfg).unwrap();
        let est = estimators::ideal_estimate(&h);
        prop_assert_eq!(est.estimator, EstimatorId::Ideal);
        let mut decided = Vec::new();
        for m in 0..cfg.symbols {
            decided.extend(phy::qpsk_demodulate(&estimators::equalize(&rx_grid, &est, &cfg, m)));
        }
        prop_assert_eq!(decided, bits);
    }
}

#[test]
fn proposed_beats_nearest_pilot_fill() {
    let cfg = GridConfig::lte_like();
    let profile = channel::build_profile("etu", channel::LTE_SAMPLE_RATE_HZ).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sigma = 0.1f64.sqrt();
    let (mut ls_mse, mut prop_mse) = (0.0, 0.0);
    for _ in 0..500 {
        let h = channel::realize(&profile, cfg.n_subcarriers, &mut rng);
        let clean = pilot_grid(&h, &cfg);
        let noisy: Vec<C64> = clean
            .values()
            .as_slice()
            .iter()
            .map(|v| v + channel::standard_cn(&mut rng) * sigma)
            .collect();
        let ls = PilotLsGrid::new(ComplexMatrix::from_columns(64, 2, noisy).unwrap());
        ls_mse += estimators::estimator_mse(&estimators::ls_only_estimate(ls.column(0), cfg.n_subcarriers), &h);
        prop_mse += estimators::estimator_mse(&estimators::proposed_estimate(&ls, cfg.n_subcarriers).unwrap(), &h);
    }
    assert!(prop_mse < ls_mse, "proposed {prop_mse} vs ls-only {ls_mse}");
}
