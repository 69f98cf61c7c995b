#![no_main]

use armpipe::report::{parse_csv_column, parse_report};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_report(data);
    let _ = parse_csv_column(data, "best_fitness");
});
