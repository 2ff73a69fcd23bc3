#![no_main]

use libfuzzer_sys::fuzz_target;
use sirb_core::io::{decode_event_log, encode_event_log};

fuzz_target!(|data: &[u8]| {
    if let Ok(log) = decode_event_log(data) {
        assert_eq!(encode_event_log(&log), data);
    }
});
