#![no_main]

use libfuzzer_sys::fuzz_target;
use nowcast::ingest::{aggregate_claims_monthly, parse_claims};

fuzz_target!(|data: &str| {
    if let Ok(weeks) = parse_claims(data) {
        let _ = aggregate_claims_monthly(&weeks);
    }
});
