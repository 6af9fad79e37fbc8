#![no_main]

use libfuzzer_sys::fuzz_target;
use nowcast::timeseries::MonthKey;

fuzz_target!(|data: &str| {
    if let Ok(month) = data.parse::<MonthKey>() {
        assert_eq!(month.to_string(), data.trim());
        assert!((1..=12).contains(&month.month()));
    }
});
