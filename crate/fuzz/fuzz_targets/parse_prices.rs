#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // The parser must reject or accept without panicking; on success the
    // series must satisfy its own invariants well enough to round-trip.
    if let Ok(series) = heavytail::ingest::parse_prices(data) {
        let returns = heavytail::ingest::log_returns(&series);
        assert_eq!(returns.len() + 1, series.len());
        let mut buf = Vec::new();
        heavytail::ingest::write_prices_csv(&mut buf, &series).unwrap();
        let back = heavytail::ingest::parse_prices(buf.as_slice()).unwrap();
        assert_eq!(series, back);
    }
});
