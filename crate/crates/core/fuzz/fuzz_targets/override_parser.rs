#![no_main]

use fluctsel::cli_io::{parse_config_str, parse_override};
use libfuzzer_sys::fuzz_target;

const BASE: &str = "[model]\nkind = \"constant\"\na0 = 1.0\nperiod = 1.0\n";

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(ov) = parse_override(spec) {
        assert!(!ov.path.is_empty());
        let _ = parse_config_str(BASE, &[ov]);
    }
});
