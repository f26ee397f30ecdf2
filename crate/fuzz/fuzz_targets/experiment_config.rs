#![no_main]

use libfuzzer_sys::fuzz_target;

use heavytail::experiments::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = serde_json::from_str::<ExperimentConfig>(text) {
        // A config that validates must yield constants without panicking
        // and survive a serialization round trip.
        let _ = cfg.constants();
        let js = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&js).unwrap();
        assert_eq!(cfg, back);
    }
});
