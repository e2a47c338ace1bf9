#![no_main]

use libfuzzer_sys::fuzz_target;
use sensor_anomaly::ingest::{group_by_sensor, parse_sensor_csv, write_sensor_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(readings) = parse_sensor_csv(data, None) else {
        return;
    };
    let groups = group_by_sensor(&readings);
    let mut buf = Vec::new();
    write_sensor_csv(&mut buf, &groups).unwrap();
    let again = parse_sensor_csv(buf.as_slice(), None).expect("written csv parses");
    assert_eq!(again.len(), readings.len());
});
