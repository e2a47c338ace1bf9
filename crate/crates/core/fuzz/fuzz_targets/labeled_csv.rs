#![no_main]

use libfuzzer_sys::fuzz_target;
use sensor_anomaly::synth::{read_labeled_csv, write_labeled_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(labeled) = read_labeled_csv(data, "x") {
        assert_eq!(labeled.labels.len(), labeled.series.len());
        let mut buf = Vec::new();
        write_labeled_csv(&mut buf, &labeled).unwrap();
        let again = read_labeled_csv(buf.as_slice(), "x").expect("written csv parses");
        assert_eq!(again.labels, labeled.labels);
    }
});
