#![no_main]

use libfuzzer_sys::fuzz_target;
use nowcast::ingest::{aggregate_storms_monthly, parse_storms};

fuzz_target!(|data: &str| {
    if let Ok(events) = parse_storms(data) {
        let _ = aggregate_storms_monthly(&events);
    }
});
