#![no_main]

use libfuzzer_sys::fuzz_target;
use lrdwaved::io::read_config_json;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = read_config_json(text);
    }
});
