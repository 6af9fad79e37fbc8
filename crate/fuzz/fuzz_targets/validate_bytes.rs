#![no_main]

use libfuzzer_sys::fuzz_target;
use nowcast::ingest::{validate_bytes, Schema};

fuzz_target!(|data: &[u8]| {
    for schema in [
        Schema::Employer,
        Schema::Storm,
        Schema::Claims,
        Schema::MonthlySeries,
    ] {
        let report = validate_bytes(data, schema);
        assert_eq!(report.pass, report.errors == 0);
        assert_eq!(report.errors + report.warnings, report.findings.len());
    }
});
