#![no_main]

use itof_core::oracle::OraclePredictor;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(p) = data.parse::<OraclePredictor>() {
        let again: OraclePredictor = p.to_string().parse().expect("displayed predictor must parse");
        assert_eq!(p, again);
    }
});
