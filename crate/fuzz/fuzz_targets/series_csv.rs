#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(xs) = heavytail::generators::read_series_csv(data) {
        // Accepted values are finite by contract; the estimators must not
        // panic on anything the reader lets through.
        assert!(xs.iter().all(|x| x.is_finite()));
        if !xs.is_empty() {
            let _ = heavytail::estimators::sample_mean(&xs);
            let _ = heavytail::estimators::decompose(&xs, 1.0, None);
            let _ = heavytail::estimators::huber_estimate(&xs, 1.0);
            if xs.len() >= 2 {
                let _ = heavytail::estimators::hill_estimate(&xs, 1);
            }
        }
    }
});
