//! The example configs shipped in `configs/` parse and validate.

use std::path::PathBuf;

use democode::harness::ExperimentConfig;

#[test]
fn shipped_configs_validate() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(cfg.output.as_ref().is_some_and(|o| o.starts_with(&dir)), "{}", path.display());
            seen += 1;
        }
    }
    assert_eq!(seen, 5);
}
