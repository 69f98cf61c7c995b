#![no_main]

use armpipe::dataset::parse_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    for header in [true, false] {
        if let Ok(db) = parse_csv(data, header) {
            assert!(db.n_transactions() > 0);
            for row in db.rows() {
                assert_eq!(row.len(), db.n_attributes());
            }
        }
    }
});
