//! Replays the checked-in fuzz seeds through the fuzzed entry points.

use std::fs;
use std::path::PathBuf;

use armpipe::config::parse_config;
use armpipe::dataset::parse_csv;
use armpipe::metrics::{evaluate_all, MetricKind};
use armpipe::pipeline::{decode_pipeline, DecodeOutcome, PipelineGenotype, SearchConfig};
use armpipe::report::{parse_csv_column, parse_report};
use armpipe::rules::{decode_rule, rule_dimension};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with("seed-")
        })
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn genes(mode: u8, rest: &[u8], dim: usize) -> Vec<f64> {
    if mode == 0 {
        rest.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    } else {
        let mut g: Vec<f64> = rest.iter().map(|&b| b as f64 / 255.0).collect();
        g.resize(dim, 0.0);
        g
    }
}

#[test]
fn csv_seeds() {
    for (name, data) in seeds("parse_csv") {
        let ok = parse_csv(data.as_slice(), true);
        let _ = parse_csv(data.as_slice(), false);
        let valid = !name.contains("ragged") && !name.contains("missing");
        assert_eq!(ok.is_ok(), valid, "{name}");
    }
}

#[test]
fn config_seeds() {
    for (name, data) in seeds("parse_config") {
        let r = parse_config(std::str::from_utf8(&data).unwrap());
        assert_eq!(r.is_ok(), name == "seed-basic.conf", "{name}");
    }
}

#[test]
fn report_seeds() {
    for (name, data) in seeds("parse_report") {
        let json = parse_report(data.as_slice());
        let csv = parse_csv_column(data.as_slice(), "best_fitness");
        if name.ends_with(".json") {
            assert!(json.is_ok(), "{name}");
        } else {
            assert_eq!(csv.unwrap().len(), 2, "{name}");
        }
    }
}

#[test]
fn rule_seeds() {
    let db = parse_csv("a,b,c\n2,r,0.5\n5,r,-1\n7,g,3\n9,b,3\n".as_bytes(), true).unwrap();
    let dim = rule_dimension(&db);
    for (name, data) in seeds("decode_rule") {
        let (&mode, rest) = data.split_first().unwrap();
        let rule = decode_rule(&genes(mode, rest, dim), &db)
            .unwrap()
            .unwrap_or_else(|| panic!("{name} encodes no rule"));
        assert!(!rule.antecedent.is_empty() && !rule.consequent.is_empty());
        let m = evaluate_all(&rule, &db);
        assert!(
            MetricKind::ALL.iter().all(|&k| m.get(k).is_finite()),
            "{name}"
        );
    }
}

#[test]
fn pipeline_seeds() {
    for (name, data) in seeds("decode_pipeline") {
        let (&mode, rest) = data.split_first().unwrap();
        let cfg = SearchConfig {
            weight_adaptation: mode % 2 == 1,
            ..SearchConfig::default()
        };
        let g = PipelineGenotype(genes(mode, rest, cfg.dimension()));
        match decode_pipeline(&g, &cfg).unwrap() {
            DecodeOutcome::Pipeline(spec) => {
                assert!(spec.preprocessing.len() <= cfg.max_preprocess, "{name}");
                assert!(spec.weights.values().all(|w| (1e-6..=1.0).contains(w)));
            }
            DecodeOutcome::Failure => panic!("{name} selects no metric"),
        }
    }
}
