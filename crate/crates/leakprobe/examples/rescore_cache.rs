//! Generate once, score many times: the cache split in action.
//!
//! A run's generations are the expensive part; leak values are cheap to
//! recompute. This example fills a cache with one batch, then scores it
//! under three settings without another provider call: the default ε, a
//! huge ε (everything ties), and the precision component instead of F1.
//!
//! ```sh
//! cargo run -p leakprobe --example rescore_cache
//! ```

use std::sync::Arc;

use leakprobe::dataset::builtin_dataset;
use leakprobe::genclient::{run_batch, EchoConceptProvider, GenerationCache, GenerationConfig};
use leakprobe::leakrate::{mean_leak_rate, score_run};
use leakprobe::similarity::{ScoringBackend, SimilarityMode, TokenScoreComponent, TrigramEmbedder};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let instances: Vec<_> = builtin_dataset().into_iter().take(50).collect();
    let dir = tempfile::tempdir()?;
    let cache = GenerationCache::open(&dir.path().join("cache.jsonl"))?;
    let config = GenerationConfig::for_model("echo-mock");

    let provider = EchoConceptProvider::from_instances(&instances, " something unrelated");
    let records = run_batch(&instances, &config, &provider, &cache)?;
    println!(
        "generated {} records with {} provider calls",
        records.len(),
        provider.calls()
    );

    let mean_under = |backend: &ScoringBackend, epsilon: f64| {
        let results = score_run(&instances, &records, backend, epsilon).unwrap();
        let values: Vec<u8> = results.iter().map(|r| r.leak_value).collect();
        mean_leak_rate(&values).unwrap()
    };

    let f1 = ScoringBackend::trigram_token_f1();
    println!("token F1, ε = 1e-9     → mean leak-rate {:.2}", mean_under(&f1, 1e-9));
    println!("token F1, ε = 2.0      → mean leak-rate {:.2} (band swallows everything)", mean_under(&f1, 2.0));

    let precision = ScoringBackend {
        id: "token-precision-trigram".into(),
        mode: SimilarityMode::TokenF1,
        component: TokenScoreComponent::Precision,
        embedder: Arc::new(TrigramEmbedder),
    };
    println!(
        "token precision, ε = 1e-9 → mean leak-rate {:.2}",
        mean_under(&precision, 1e-9)
    );

    println!("\nno further provider calls were made: {}", provider.calls());
    Ok(())
}
