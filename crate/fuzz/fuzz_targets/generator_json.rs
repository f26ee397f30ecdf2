#![no_main]

use libfuzzer_sys::fuzz_target;

use heavytail::generators::GeneratorDescriptor;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(gen) = serde_json::from_str::<GeneratorDescriptor>(text) {
        // A descriptor that deserializes must uphold its contracts:
        // serializable, re-loadable, and able to sample deterministically.
        let js = serde_json::to_string(&gen).unwrap();
        let back: GeneratorDescriptor = serde_json::from_str(&js).unwrap();
        let a = gen.sample_path(4).unwrap();
        let b = back.sample_path(4).unwrap();
        assert_eq!(a, b);
    }
});
