//! Replays the checked-in fuzz corpus through the same checks as the fuzz
//! targets, so the seeds stay meaningful on stable toolchains.

use std::path::PathBuf;

use fluctsel::cli_io::{config_to_toml, parse_config_str, parse_override};
use fluctsel::env_models::TabulatedRate;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let text = std::fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn config_seeds() {
    let mut accepted = 0;
    for (path, text) in seeds("config_parser") {
        if let Ok(cfg) = parse_config_str(&text, &[]) {
            let again = parse_config_str(&config_to_toml(&cfg), &[]).unwrap();
            assert_eq!(cfg, again, "{}", path.display());
            accepted += 1;
        }
    }
    assert!(accepted >= 3);
}

#[test]
fn rate_table_seeds() {
    for (path, text) in seeds("rate_table") {
        let parsed = TabulatedRate::parse(&text, -1.0, 1.0);
        let expect_ok = !path.ends_with("short.txt");
        assert_eq!(parsed.is_ok(), expect_ok, "{}", path.display());
        if let Ok(t) = parsed {
            assert!(t.eval(0.25, 0.3).is_finite());
        }
    }
}

#[test]
fn override_seeds() {
    for (path, text) in seeds("override_parser") {
        let parsed = parse_override(&text);
        assert_eq!(
            parsed.is_ok(),
            !path.ends_with("empty_segment"),
            "{}",
            path.display()
        );
    }
}
