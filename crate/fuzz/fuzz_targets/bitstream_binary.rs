#![no_main]

use libfuzzer_sys::fuzz_target;
use mqrng_core::io::{decode_bitstream, encode_bitstream};

fuzz_target!(|data: &[u8]| {
    if let Ok(bits) = decode_bitstream(data) {
        assert_eq!(encode_bitstream(&bits), data);
    }
});
