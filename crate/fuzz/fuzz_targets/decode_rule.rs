#![no_main]

use armpipe::dataset::parse_csv;
use armpipe::metrics::evaluate_all;
use armpipe::rules::{decode_rule, rule_dimension};
use libfuzzer_sys::fuzz_target;

const DB: &str = "a,b,c\n2,r,0.5\n5,r,-1\n7,g,3\n9,b,3\n";

fuzz_target!(|data: &[u8]| {
    let db = parse_csv(DB.as_bytes(), true).unwrap();
    let dim = rule_dimension(&db);
    let Some((&mode, rest)) = data.split_first() else {
        return;
    };
    // mode 0 reads raw little-endian floats (NaN, infinities, wrong lengths);
    // anything else scales bytes onto [0, 1] at the right length
    let genes: Vec<f64> = if mode == 0 {
        rest.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    } else {
        let mut g: Vec<f64> = rest.iter().map(|&b| b as f64 / 255.0).collect();
        g.resize(dim, 0.0);
        g
    };
    match decode_rule(&genes, &db) {
        Ok(Some(rule)) => {
            assert!(!rule.antecedent.is_empty() && !rule.consequent.is_empty());
            let _ = evaluate_all(&rule, &db);
        }
        Ok(None) => {}
        Err(_) => assert_ne!(genes.len(), dim),
    }
});
