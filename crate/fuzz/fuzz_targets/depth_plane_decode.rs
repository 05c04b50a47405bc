#![no_main]

use itof_core::io::{decode_depth_bytes, encode_depth, DepthScale};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // First two bytes give the split point between the depth and flag files.
    if data.len() < 2 {
        return;
    }
    let split = usize::from(u16::from_le_bytes([data[0], data[1]])).min(data.len() - 2);
    let (depth, flags) = data[2..].split_at(split);
    let scale = DepthScale::default();
    if let Ok(map) = decode_depth_bytes(depth, flags, &scale) {
        assert!(map.depths().iter().all(|d| (0.0..=scale.max_depth_m).contains(d)));
        encode_depth(&map, &scale).expect("decoded map must re-encode");
    }
});
