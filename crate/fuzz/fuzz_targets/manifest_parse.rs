#![no_main]

use itof_core::io::Manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(m) = Manifest::parse(data) {
        let text = m.to_json().expect("parsed manifest must serialize");
        let again = Manifest::parse(&text).expect("serialized manifest must parse");
        let ids = |m: &Manifest| m.frames.iter().map(|f| f.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&m), ids(&again));
        assert_eq!(m.shape(), again.shape());
    }
});
