#![no_main]

use bdclt::chain::{build_chain, ChainSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = ChainSpec::from_json(text) else { return };
    let again = ChainSpec::from_json(&spec.to_json()).expect("round trip");
    assert_eq!(again, spec);
    let Ok(chain) = build_chain(spec) else { return };
    for x in 0..64 {
        let (p, q) = (chain.p(x), chain.q(x));
        assert!(p > 0.0 && p <= 1.0 && q >= 0.0 && q < 1.0);
        assert_eq!(p + q, 1.0);
    }
});
