#![no_main]

use armpipe::pipeline::{decode_pipeline, DecodeOutcome, PipelineGenotype, SearchConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&mode, rest)) = data.split_first() else {
        return;
    };
    let cfg = SearchConfig {
        weight_adaptation: mode % 2 == 1,
        ..SearchConfig::default()
    };
    let genes: Vec<f64> = if mode == 0 {
        rest.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    } else {
        let mut g: Vec<f64> = rest.iter().map(|&b| b as f64 / 255.0).collect();
        g.resize(cfg.dimension(), 0.0);
        g
    };
    match decode_pipeline(&PipelineGenotype(genes), &cfg) {
        Ok(DecodeOutcome::Pipeline(spec)) => {
            assert!((10..=30).contains(&spec.np));
            assert!((2000..=10000).contains(&spec.maxfes));
            assert!(!spec.metrics.is_empty());
            assert!(spec.preprocessing.len() <= cfg.max_preprocess);
            assert!(spec.weights.values().all(|w| (1e-6..=1.0).contains(w)));
        }
        Ok(DecodeOutcome::Failure) => {}
        Err(_) => assert!(mode == 0),
    }
});
