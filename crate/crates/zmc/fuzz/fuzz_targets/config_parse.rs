#![no_main]

use libfuzzer_sys::fuzz_target;
use std::str::FromStr;
use zmc::config::RunConfig;

// Config files come from users; schema rejection must be an error value,
// never a panic.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = RunConfig::from_str(text);
});
