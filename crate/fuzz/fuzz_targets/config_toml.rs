#![no_main]

use libfuzzer_sys::fuzz_target;

use isac_core::config::ScenarioConfig;

// The scenario parser must reject arbitrary input with an error, never
// panic; accepted configs must survive codebook construction.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ScenarioConfig::from_toml_str(text) {
        let _ = cfg.codebook();
    }
});
