#![no_main]

use libfuzzer_sys::fuzz_target;
use lrtrunc::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        // Canonical output must parse back to the same config.
        let again = ExperimentConfig::parse(&cfg.to_ini_string()).expect("canonical form parses");
        assert_eq!(again, cfg);
    }
});
