#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(model) = fockml::variational::TrainedModel::from_json(text) {
            let _ = model.predict(&vec![0.5; model.spec.features().min(64)]);
        }
    }
});
