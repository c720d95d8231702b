#![no_main]

use libfuzzer_sys::fuzz_target;
use orbitsplit::experiment::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(c) = ExperimentConfig::from_toml(text) {
            let _ = c.validate();
            let again = ExperimentConfig::from_toml(&c.to_toml()).expect("resolved config parses");
            assert_eq!(again.to_toml(), c.to_toml());
        }
    }
});
