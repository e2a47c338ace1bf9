#![no_main]

use libfuzzer_sys::fuzz_target;
use sensor_anomaly::cluster::{ldcof_score, read_model, write_model};

fuzz_target!(|data: &[u8]| {
    let Ok(model) = read_model(data) else {
        return;
    };
    let mut buf = Vec::new();
    write_model(&mut buf, &model).unwrap();
    let again = read_model(buf.as_slice()).expect("written model parses");
    assert_eq!(again.k(), model.k());
    let origin = vec![0.0; model.dim()];
    let _ = ldcof_score(&model, &origin);
});
