#![no_main]

use libfuzzer_sys::fuzz_target;
use sensor_anomaly::config::Config;
use sensor_anomaly::pipeline::PipelineConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = Config::parse(text) {
        let _ = PipelineConfig::from_config(&cfg);
    }
});
