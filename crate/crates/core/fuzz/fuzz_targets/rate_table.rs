#![no_main]

use fluctsel::env_models::TabulatedRate;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = TabulatedRate::parse(text, -1.0, 1.0) {
        for (t, x) in [(0.0, -1.0), (0.3, 0.0), (-2.5, 1.0), (1e9, 0.7)] {
            assert!(table.eval(t, x).is_finite());
        }
    }
});
