#![no_main]

use ergokit_core::chain::ChainParams;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let prm = ChainParams::new(4, 1.0, 1.0, 2).unwrap();
    if let Ok(s) = ergokit_core::io::parse_chain_state(text, &prm) {
        assert_eq!(s.q.len(), 4);
    }
});
