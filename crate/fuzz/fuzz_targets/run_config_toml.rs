#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = fockml_cli::config::RunConfig::from_toml_str(text) {
            let again = fockml_cli::config::RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
            assert_eq!(again, cfg);
        }
    }
});
