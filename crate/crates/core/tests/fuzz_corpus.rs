//! Replays the checked-in fuzz corpus through the decoders.

use std::fs;
use std::path::PathBuf;

use ergokit_core::chain::ChainParams;
use ergokit_core::io;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn complex_matrix_seeds() {
    for (name, text) in seeds("complex_matrix") {
        let parsed = io::parse_complex_matrix(&text);
        assert_eq!(parsed.is_ok(), name != "ragged.json", "{name}");
    }
}

#[test]
fn complex_vector_seeds() {
    for (name, text) in seeds("complex_vector") {
        assert!(io::parse_complex_vector(&text).is_ok(), "{name}");
    }
}

#[test]
fn chain_state_seeds() {
    let prm = ChainParams::new(4, 1.0, 1.0, 2).unwrap();
    for (name, text) in seeds("chain_state") {
        let parsed = io::parse_chain_state(&text, &prm);
        assert_eq!(parsed.is_ok(), name != "short.json", "{name}");
    }
}

#[test]
fn gibbs_spec_seeds() {
    for (name, text) in seeds("gibbs_spec") {
        let spec = io::parse_gibbs_spec(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let q = vec![0.5; spec.dim()];
        assert!(ergokit_core::gibbs::log_density(&spec, &q).unwrap().is_finite(), "{name}");
    }
}
