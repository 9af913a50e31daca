//! Score concept/generation pairs with both similarity modes.
//!
//! ```sh
//! cargo run -p leakprobe --example similarity_backends
//! ```

use leakprobe::similarity::ScoringBackend;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let token_f1 = ScoringBackend::trigram_token_f1();
    let cosine = ScoringBackend::trigram_cosine();

    let pairs = [
        ("white", "white"),
        ("Ivory", "white, like her name"),
        ("tangerine orange", "tangerine orange icing"),
        ("tangerine orange", "vanilla"),
        ("red", "firefighter"),
        ("golden yellow", "yellow"),
        ("navy blue", ""),
    ];

    println!("{:<20} {:<24} {:>9} {:>9}", "concept", "generation", "token-f1", "cosine");
    for (concept, generation) in pairs {
        let f1 = token_f1.score(concept, generation)?;
        let cos = cosine.score(concept, generation)?;
        let flag = if f1.degenerate || cos.degenerate { "  (degenerate)" } else { "" };
        println!(
            "{:<20} {:<24} {:>9.4} {:>9.4}{flag}",
            concept, generation, f1.value, cos.value
        );
    }

    println!(
        "\nthe trigram backend only measures surface overlap; point the config's \
         [[scoring.backends]] at an embedding endpoint for semantic scores"
    );
    Ok(())
}
