//! The whole pipeline without any network access: built-in dataset, echo
//! mock provider, built-in trigram backends, rendered report.
//!
//! The echo mock answers every test prompt with its concept, so this run
//! shows the metric's ceiling: Mean Leak-Rate 100.00 in every group. Swap
//! `MockKind::Echo` for `MockKind::Constant` to see the 50.00 null baseline.
//!
//! ```sh
//! cargo run -p leakprobe --example offline_run
//! ```

use leakprobe::cli::{cmd_run, HarnessConfig, MockKind, ProviderSelection};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;

    let mut config = HarnessConfig::default();
    config.provider = ProviderSelection::Mock(MockKind::Echo);
    config.generation.model_id = "echo-mock".into();
    config.generation.run_epoch = Some(1_722_000_000); // byte-reproducible
    config.out_dir = dir.path().to_path_buf();

    let summary = cmd_run(&config)?;
    println!("{}", summary.dataset);
    println!("{}", summary.generate);
    println!("{}", summary.score);
    println!();
    print!("{}", summary.report.stdout_text);

    println!("\npipeline files under {}:", config.out_dir.display());
    for entry in std::fs::read_dir(&config.out_dir)? {
        println!("  {}", entry?.file_name().to_string_lossy());
    }
    Ok(())
}
