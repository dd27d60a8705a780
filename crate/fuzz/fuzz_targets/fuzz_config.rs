#![no_main]

use libfuzzer_sys::fuzz_target;
use luminal::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = ExperimentConfig::from_toml_str(text) {
        // anything that validates must re-serialize to a fixed point
        let once = config.to_toml_string().unwrap();
        let twice = ExperimentConfig::from_toml_str(&once).unwrap().to_toml_string().unwrap();
        assert_eq!(once, twice);
    }
});
