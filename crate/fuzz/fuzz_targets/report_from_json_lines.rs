#![no_main]

use libfuzzer_sys::fuzz_target;
use qbundle_harness::Report;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(report) = Report::from_json_lines(text) {
            // whatever is accepted must read back identically once re-emitted
            let again = Report::from_json_lines(&report.to_json_lines()).expect("re-emitted report parses");
            assert_eq!(again.to_json_lines(), report.to_json_lines());
        }
    }
});
