//! Construct the built-in color dataset and inspect it.
//!
//! ```sh
//! cargo run -p leakprobe --example build_dataset
//! ```

use leakprobe::dataset::{
    builtin_color_vocabulary, builtin_dataset, validate_instance, Category,
};

fn main() {
    let vocab = builtin_color_vocabulary();
    println!("color vocabulary ({} terms):", vocab.len());
    for term in &vocab {
        println!("  {:<8} {}", term.basic, term.variations.join(", "));
    }

    let instances = builtin_dataset();
    let count = |category| {
        instances
            .iter()
            .filter(|i| i.category == category)
            .count()
    };
    println!(
        "\n{} instances: cat1 {}, cat2 {}, cat3 {}",
        instances.len(),
        count(Category::Cat1),
        count(Category::Cat2),
        count(Category::Cat3),
    );

    let invalid = instances
        .iter()
        .filter(|i| !validate_instance(i).is_empty())
        .count();
    println!("instances failing validation: {invalid}");

    println!("\nsample instances:");
    for id in ["cat1-01:red", "cat2-01:tangerine-orange", "cat3:ivory"] {
        let instance = instances.iter().find(|i| i.id == id).unwrap();
        println!("  [{}] concept = {:?}", instance.id, instance.concept);
        println!("      test:    {:?}", instance.test_prompt);
        println!("      control: {:?}", instance.control_prompt);
    }
}
