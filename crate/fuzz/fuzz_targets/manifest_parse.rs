#![no_main]

use libfuzzer_sys::fuzz_target;
use mqrng_core::io::RunManifest;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = RunManifest::parse(text) {
        let again = RunManifest::parse(&m.to_toml().expect("manifest serializes"))
            .expect("serialized manifest parses");
        assert_eq!(again, m);
    }
});
