#![no_main]

use itof_core::io::pgm;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = pgm::decode(data) {
        // Anything accepted re-encodes to an equal image.
        let again = pgm::decode(&pgm::encode(&img)).expect("re-encoded image must parse");
        assert_eq!(img, again);
        assert!(img.samples().iter().all(|s| *s <= img.maxval()));
    }
});
