#![no_main]

use democode::harness::parse_idx;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(a) = parse_idx(data) {
        assert_eq!(a.dims.iter().product::<usize>(), a.values.len());
    }
});
