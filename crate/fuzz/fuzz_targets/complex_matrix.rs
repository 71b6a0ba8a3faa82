#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = ergokit_core::io::parse_complex_matrix(text) {
        assert!(m.nrows() > 0 && m.ncols() > 0);
    }
    if let Ok(h) = ergokit_core::io::parse_hermitian(text) {
        // keep the decomposition cheap
        if h.dim() <= 16 {
            let _ = ergokit_core::spectral::spectral_decompose(&h);
        }
    }
});
