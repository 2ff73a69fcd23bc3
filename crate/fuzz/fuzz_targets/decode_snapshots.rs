#![no_main]

use libfuzzer_sys::fuzz_target;
use sirb_core::io::{decode_snapshots, encode_snapshots};

fuzz_target!(|data: &[u8]| {
    if let Ok(traj) = decode_snapshots(data) {
        assert_eq!(encode_snapshots(&traj), data);
        let _ = traj.rescaled();
    }
});
