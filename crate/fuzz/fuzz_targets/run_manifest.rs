#![no_main]

use bdclt_cli::RunManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(manifest) = RunManifest::from_report_json(text) {
        let json = serde_json::to_string(&manifest).unwrap();
        assert_eq!(RunManifest::from_report_json(&json).unwrap(), manifest);
    }
});
