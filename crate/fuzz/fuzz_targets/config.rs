#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ergokit::ExperimentConfig::from_json(text) {
        let _ = cfg.hash();
        let _ = ergokit::validate_config(&cfg);
    }
});
