#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = ergokit_core::io::parse_gibbs_spec(text) {
        let q = vec![0.5; spec.dim()];
        let _ = ergokit_core::gibbs::log_density(&spec, &q);
    }
});
