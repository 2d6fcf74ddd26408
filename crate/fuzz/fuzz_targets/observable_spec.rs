#![no_main]

use bdclt::chain::{build_chain, ChainSpec};
use bdclt::measure::stationary_weights;
use bdclt::observable::{center, phi_star, Observable, ObservableSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = ObservableSpec::from_json(text) else { return };
    let chain = build_chain(ChainSpec::lamperti(0.25, 0.5)).unwrap();
    let measure = stationary_weights(&chain, 256).normalize().unwrap();
    let Ok(v) = Observable::from_spec(&spec, &measure) else { return };
    if let Ok(v) = center(&v, &measure) {
        let report = phi_star(&v, &measure, &[16, 32, 64, 128, 256]);
        assert!(report.phi_star_partial.windows(2).all(|w| !(w[1] < w[0])));
    }
});
