#![no_main]

use libfuzzer_sys::fuzz_target;
use qbundle_harness::parse_scenario;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = parse_scenario(text) {
            // accepted specs must digest and revalidate
            let _ = spec.digest();
            assert!(spec.validated().is_ok());
        }
    }
});
