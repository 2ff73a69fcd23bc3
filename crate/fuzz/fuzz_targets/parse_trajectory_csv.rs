#![no_main]

use libfuzzer_sys::fuzz_target;
use sirb_core::io::parse_trajectory_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_trajectory_csv(text);
    }
});
