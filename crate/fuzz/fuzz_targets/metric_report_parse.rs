#![no_main]

use itof_core::eval::parse_kv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(report) = parse_kv(data) {
        let again = parse_kv(&report.to_kv()).expect("written report must parse");
        assert_eq!(report, again);
    }
});
