#![no_main]

use armpipe::config::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(entries) = parse_config(s) {
            for e in entries {
                assert!(!e.key.is_empty());
            }
        }
    }
});
