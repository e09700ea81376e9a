use mqrng_core::adc::AdcConfig;
use mqrng_core::pipeline::{run_pipeline, ExtractorKind, PipelineConfig};
use mqrng_core::source::ChannelModel;
use proptest::prelude::*;

fn config(kind: ExtractorKind, channels: u16, block: usize, workers: usize) -> PipelineConfig {
    let models = (1..=channels)
        .map(|id| ChannelModel::default_for(id, 100 + u64::from(id)))
        .collect();
    let mut cfg = PipelineConfig::new(models, AdcConfig::new(14.865, 55e6).unwrap(), kind);
    cfg.block_samples = block;
    cfg.workers = workers;
    cfg
}

fn kind_strategy() -> impl Strategy<Value = ExtractorKind> {
    prop_oneof![
        Just(ExtractorKind::Raw),
        Just(ExtractorKind::Cmac),
        Just(ExtractorKind::TwoSource)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn output_bits_equal_rounds_times_lane_yield(
        kind in kind_strategy(),
        pairs in 1u16..4,
        blocks in 1usize..6,
        rounds in 1u64..4,
        workers in 1usize..5,
    ) {
        let channels = pairs * 2;
        let cfg = config(kind, channels, 48 * blocks, workers);
        let (bits, report) = run_pipeline(&cfg, rounds).unwrap();
        let lanes = match kind {
            ExtractorKind::TwoSource => u64::from(pairs),
            _ => u64::from(channels),
        };
        let expected = rounds * lanes * cfg.units_per_round() as u64 * u64::from(cfg.unit_bits());
        prop_assert_eq!(report.lanes as u64, lanes);
        prop_assert_eq!(bits.bit_len(), expected);
        prop_assert_eq!(report.total_bits, expected);
        let first = report.bits_per_lane[0];
        prop_assert!(report.bits_per_lane.iter().all(|&b| b == first));
        prop_assert_eq!(first * report.bits_per_lane.len() as u64, expected);

        let mut single = cfg.clone();
        single.workers = 1;
        prop_assert_eq!(run_pipeline(&single, rounds).unwrap().0, bits);
    }
}
