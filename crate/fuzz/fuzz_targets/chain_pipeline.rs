#![no_main]

use bdclt::chain::{build_chain, classify, ChainSpec};
use bdclt::measure::{detailed_balance_residual, stationary_weights};
use bdclt::spectral::{spectral_report, witness_rayleigh};
use libfuzzer_sys::fuzz_target;

// Table chains drive every numeric stage with arbitrary probabilities.
fuzz_target!(|data: &[u8]| {
    if data.is_empty() || data.len() > 512 {
        return;
    }
    let p: Vec<f64> = data.iter().map(|&b| (f64::from(b) + 0.5) / 256.0).collect();
    let spec = ChainSpec::table(p);
    let chain = build_chain(spec.clone()).unwrap();
    let _ = classify(&spec);
    let weights = stationary_weights(&chain, 2 * data.len());
    if let Ok(measure) = weights.normalize() {
        assert!(detailed_balance_residual(&chain, &measure) < 1e-9);
    }
    let report = spectral_report(&chain, &[4, 16, 64], 0).unwrap();
    assert!(report.lambda1_raw.iter().all(|l| *l <= 1.0 + 1e-9));
    assert!(witness_rayleigh(&chain, 64) <= 1.0 + 1e-12);
});
