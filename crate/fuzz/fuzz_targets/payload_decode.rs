#![no_main]

use democode::quantizers::QuantizedPayload;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = QuantizedPayload::from_bytes(data) {
        let bytes = p.to_bytes().expect("decoded payload re-encodes");
        let back = QuantizedPayload::from_bytes(&bytes).expect("re-encoded payload decodes");
        assert_eq!(back, p);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }
});
