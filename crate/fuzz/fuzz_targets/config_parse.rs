#![no_main]

use libfuzzer_sys::fuzz_target;
use mqrng_core::io::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::parse(text) {
        let again = RunConfig::parse(&cfg.to_toml().expect("valid config serializes"))
            .expect("serialized config parses");
        assert_eq!(again, cfg);
        let _ = cfg.resolved();
    }
});
