#![no_main]

use libfuzzer_sys::fuzz_target;
use nowcast::ingest::{matched_panel_aggregate, parse_employers};

fuzz_target!(|data: &str| {
    if let Ok(records) = parse_employers(data) {
        let _ = matched_panel_aggregate(&records);
    }
});
