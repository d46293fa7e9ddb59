use chemostat_core::config::RunConfig;
use chemostat_core::datasets::Figure;
use proptest::prelude::*;

proptest! {
    #[test]
    fn canonical_text_round_trips(
        fig in 0usize..6,
        s in 0.01f64..0.99,
        log_lambda in -3.0f64..3.0,
        seed in any::<u64>(),
        horizon in 1.0f64..1e6,
    ) {
        let mut cfg = RunConfig::from_model(Figure::ALL[fig].config(s, 10f64.powf(log_lambda)));
        cfg.seed = Some(seed);
        cfg.horizon = Some(horizon);
        let text = cfg.to_canonical();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_canonical(), text);
    }
}

#[test]
fn every_figure_validates_through_text() {
    for f in Figure::ALL {
        let cfg = RunConfig::parse(&RunConfig::from_model(f.config(0.3, 2.0)).to_canonical()).unwrap();
        cfg.validate().unwrap();
    }
}
