#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = ergokit_core::io::parse_complex_vector(text);
    let _ = ergokit_core::io::parse_real_vector(text);
});
