#![no_main]

use fluctsel::cli_io::{config_to_toml, parse_config_str};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_config_str(text, &[]) {
        // anything accepted must survive a round trip unchanged
        let again = parse_config_str(&config_to_toml(&cfg), &[]).expect("canonical text parses");
        assert_eq!(cfg, again);
    }
});
