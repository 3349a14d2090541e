//! The committed annotated config documents the built-in defaults.

use safecross::config::ScenarioConfig;

#[test]
fn committed_default_matches_built_in() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.toml");
    let text = std::fs::read_to_string(path).unwrap();
    let cfg = ScenarioConfig::from_toml(&text).unwrap();
    assert_eq!(cfg, ScenarioConfig::default());
    // and the canonical form reloads to the same value
    assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
}
