#![no_main]

use democode::harness::parse_csv_dataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(d) = parse_csv_dataset(text) {
            assert_eq!(d.points.nrows(), d.labels.len());
        }
    }
});
