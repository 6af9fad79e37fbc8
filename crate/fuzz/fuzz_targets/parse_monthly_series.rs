#![no_main]

use libfuzzer_sys::fuzz_target;
use nowcast::ingest::{monthly_series_csv, parse_monthly_series};

fuzz_target!(|data: &str| {
    if let Ok(series) = parse_monthly_series(data, "fuzz", "units") {
        // written series must parse back to the same values
        let again = parse_monthly_series(&monthly_series_csv(&series), "fuzz", "units").unwrap();
        assert_eq!(again, series);
    }
});
