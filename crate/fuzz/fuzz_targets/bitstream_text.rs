#![no_main]

use libfuzzer_sys::fuzz_target;
use mqrng_core::io::{decode_ascii, decode_bits, encode_ascii, InputFormat};

fuzz_target!(|data: &[u8]| {
    if let Ok(bits) = decode_ascii(data) {
        assert_eq!(
            decode_ascii(&encode_ascii(&bits)).expect("re-encoded text decodes"),
            bits
        );
    }
    for fmt in [
        InputFormat::Auto,
        InputFormat::Raw,
        InputFormat::Bin,
        InputFormat::Ascii,
    ] {
        let _ = decode_bits(data, fmt);
    }
});
