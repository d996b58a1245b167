#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(ds) = fockml::data::LabeledDataset::from_csv_str(text) {
            let again = fockml::data::LabeledDataset::from_csv_str(&ds.to_csv_string().unwrap()).unwrap();
            assert_eq!(again.y, ds.y);
        }
    }
});
