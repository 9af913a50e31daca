//! Implement `GenerationProvider` by hand and run it through the batch
//! machinery: truncation, caching, and control-prompt dedup all apply to
//! custom providers too.
//!
//! ```sh
//! cargo run -p leakprobe --example custom_provider
//! ```

use leakprobe::dataset::builtin_dataset;
use leakprobe::genclient::{
    run_batch, GenerationCache, GenerationConfig, GenerationProvider, ProviderError,
};

/// Continues every prompt with its last word, then rambles past the first
/// full stop (which truncation removes again).
struct LastWordProvider;

impl GenerationProvider for LastWordProvider {
    fn id(&self) -> &str {
        "example:last-word"
    }

    fn complete(&self, prompt: &str, _config: &GenerationConfig) -> Result<String, ProviderError> {
        let last = prompt.split_whitespace().last().unwrap_or("nothing");
        Ok(format!(" {last} again. And some trailing words"))
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let instances: Vec<_> = builtin_dataset().into_iter().take(4).collect();
    let dir = tempfile::tempdir()?;
    let cache = GenerationCache::open(&dir.path().join("cache.jsonl"))?;
    let config = GenerationConfig::for_model("last-word");

    let records = run_batch(&instances, &config, &LastWordProvider, &cache)?;
    for record in &records {
        println!(
            "[{}/{}] raw = {:?}",
            record.instance_id, record.kind, record.raw_text
        );
        println!("{:>12} text = {:?}", "", record.text);
    }

    println!("\ncache now holds {} records at {}", cache.len(), dir.path().display());
    Ok(())
}
