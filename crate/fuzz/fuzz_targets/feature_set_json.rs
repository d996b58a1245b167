#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(fs) = fockml::rks::RandomFeatureSet::from_json(text) {
            let _ = fockml::rks::classical_feature_matrix(&[vec![0.25; fs.dims()]], &fs);
        }
    }
});
