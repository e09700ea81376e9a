#![no_main]

use libfuzzer_sys::fuzz_target;
use mqrng_core::io::{
    decode_analog_file, decode_codes_file, encode_codes_file, SampleKind, SampleReader,
};

fuzz_target!(|data: &[u8]| {
    if let Ok((header, codes)) = decode_codes_file(data) {
        assert_eq!(encode_codes_file(&header, &codes), data);
    }
    let _ = decode_analog_file(data);
    if let Ok(mut reader) = SampleReader::new(data) {
        while reader.remaining() > 0 {
            let chunk = if reader.header().kind == SampleKind::Analog {
                reader.read_analog(1000).map(|v| v.len())
            } else {
                reader.read_codes(1000).map(|v| v.len())
            };
            match chunk {
                Ok(0) | Err(_) => break,
                Ok(_) => {}
            }
        }
    }
});
