#![no_main]

use libfuzzer_sys::fuzz_target;
use sensor_anomaly::detect::{read_report_csv, write_report_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok((series, report)) = read_report_csv(data) {
        assert_eq!(series.len(), report.len());
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &series, &report).unwrap();
        let (_, again) = read_report_csv(buf.as_slice()).expect("written report parses");
        assert_eq!(again.flags, report.flags);
    }
});
