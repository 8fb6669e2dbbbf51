#![no_main]

use libfuzzer_sys::fuzz_target;
use wlsreg_cli::parse_number_list;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(v) = parse_number_list(s) {
            assert!(!v.is_empty() && v.iter().all(|x| x.is_finite()));
        }
    }
});
