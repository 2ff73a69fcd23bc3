#![no_main]

use libfuzzer_sys::fuzz_target;
use sirb_core::config::parse_config_str;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = parse_config_str(text) {
        // the canonical echo must parse back to the same config
        let again = parse_config_str(&config.to_toml()).expect("echoed config rejected");
        assert_eq!(again, config);
    }
});
