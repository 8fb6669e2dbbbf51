#![no_main]

use libfuzzer_sys::fuzz_target;
use wlsreg_cli::parse_dataset;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = parse_dataset(data) {
        assert_eq!(d.design().nrows(), d.y().len());
        assert!(d.y().iter().all(|v| v.is_finite()));
    }
});
