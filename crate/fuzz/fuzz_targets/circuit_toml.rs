#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = fockml::circuit::CircuitSpec::from_toml_str(text) {
            let again = fockml::circuit::CircuitSpec::from_toml_str(&spec.to_toml_string().unwrap()).unwrap();
            assert_eq!(again, spec);
        }
    }
});
