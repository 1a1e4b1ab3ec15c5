//! Serialization round trips.

use fsrm_core::io::{ingest_reader, parse_config, write_series};
use fsrm_core::SamplePath;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_round_trip(r in 4usize..40, days in 2usize..6, seed in prop::collection::vec(-1e6f64..1e6, 1..8)) {
        let values: Vec<f64> = (0..r * days).map(|k| seed[k % seed.len()] * (1.0 + k as f64).ln()).collect();
        let path = SamplePath::new(1.0 / r as f64, 0.0, values).unwrap();
        let mut buf = Vec::new();
        write_series(&mut buf, &path).unwrap();
        let ing = ingest_reader(buf.as_slice(), None).unwrap();
        prop_assert_eq!(ing.r, r);
        prop_assert_eq!(ing.n_days(), days);
        prop_assert_eq!(&ing.log_prices.values, &path.values);
        let closes: Vec<f64> = (0..days).map(|d| path.values[(d + 1) * r - 1]).collect();
        prop_assert_eq!(ing.closes, closes);
    }

    #[test]
    fn config_round_trip(entries in prop::collection::btree_map("[a-z][a-z_]{0,8}", "[A-Za-z0-9.,_-]{1,12}", 0..8)) {
        let text: String = entries.iter().map(|(k, v)| format!("# note\n{k} = {v}\n")).collect();
        prop_assert_eq!(parse_config(&text).unwrap(), entries);
    }
}
