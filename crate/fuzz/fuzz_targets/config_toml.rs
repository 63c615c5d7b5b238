#![no_main]

use democode::harness::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

// Parsing and validation only; running an accepted config could be slow.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ExperimentConfig::from_toml(text);
    }
});
