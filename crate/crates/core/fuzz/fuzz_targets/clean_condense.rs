#![no_main]

use libfuzzer_sys::fuzz_target;
use sensor_anomaly::ingest::{clean, condense_dst, group_by_sensor, parse_sensor_csv, CleaningConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(readings) = parse_sensor_csv(data, None) else {
        return;
    };
    for series in group_by_sensor(&readings) {
        let (cleaned, report) = clean(&series, &CleaningConfig::default());
        assert_eq!(cleaned.len() + report.removed(), series.len());
        if let Ok((condensed, _)) = condense_dst(&cleaned) {
            assert!(condensed.is_strictly_increasing());
        }
    }
});
