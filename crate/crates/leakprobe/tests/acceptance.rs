//! Acceptance gate for the harness. One test per criterion, each printing a
//! PASS line (visible with `--nocapture`):
//!
//! 1. dataset cardinality and validation (330 + 330 + 45, under a second)
//! 2. leak decision unit suite (branches, ε band, antisymmetry,
//!    shift/scale invariance, 100k randomized pairs)
//! 3. mean and n-weighted recombination over 1,000 random partitions
//! 4. token-F1 equals an independent brute force on every pair of ≤4-token
//!    strings over a 6-word one-hot vocabulary
//! 5. end-to-end oracles: echo mock ⇒ 100.00 everywhere, constant mock ⇒
//!    50.00 everywhere, full offline run under a minute
//! 6. truncation protocol (50 fixtures plus property checks)
//! 7. byte-identical reruns with a pinned epoch
//! 8. report golden files (structure, two decimals, bold marking)
//! 9. optional live smoke against a real endpoint (network-gated)

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use leakprobe::cli::{cmd_dataset_build, cmd_run, HarnessConfig, MockKind, ProviderSelection};
use leakprobe::dataset::{builtin_dataset, load_instances, validate_instance, Category};
use leakprobe::genclient::{run_batch, GenerationCache, GenerationConfig, HttpProvider};
use leakprobe::leakrate::{
    aggregate, attach_context, leak_rate_single, mean_leak_rate, score_run, Grouping,
};
use leakprobe::report::{render_table2, render_table3, ReportFormat, RunManifest};
use leakprobe::similarity::{
    token_f1_similarity, Embedder, EmbeddingVector, ScoringBackend, SimilarityError,
    TokenScoreComponent,
};

fn offline_config(out_dir: &Path, mock: MockKind) -> HarnessConfig {
    let mut config = HarnessConfig::default();
    config.provider = ProviderSelection::Mock(mock);
    config.generation.model_id = "mock".into();
    config.generation.run_epoch = Some(1_722_000_000);
    config.out_dir = out_dir.to_path_buf();
    config
}

// ---------------------------------------------------------------- criterion 1

const NAME_CONCEPTS: [&str; 15] = [
    "Rose", "Amber", "Ruby", "Scarlett", "Violet", "Jade", "Hazel", "Indigo", "Ivory", "Coral",
    "Sienna", "Olive", "Ebony", "Gray", "Pearl",
];

const TOPONYM_CONCEPTS: [&str; 11] = [
    "Yellowknife",
    "Redmond",
    "Purple Springs",
    "Greenwich",
    "Bluefield",
    "Roseland",
    "Blackfoot",
    "White Plains",
    "Brownsville",
    "Orange",
    "Grayling",
];

const EXPRESSION_CONCEPTS: [&str; 19] = [
    "to be a black sheep",
    "to be tickled pink",
    "to be in the red",
    "to tell a white lie",
    "to come out of the blue",
    "to see a golden opportunity",
    "to be in a gray area",
    "to get the green light",
    "to paint the town red",
    "to have a silver tongue",
    "to have a rosy outlook",
    "to be as gray as the cloudy sky",
    "to be in a black mood",
    "to think in black and white",
    "to have white-hot anger",
    "to feel like a green rookie",
    "to have rosy cheeks",
    "to be in a brown study",
    "to see the world through rose-colored glasses",
];

#[test]
fn c1_dataset_cardinality_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let summary = cmd_dataset_build(&offline_config(dir.path(), MockKind::Constant)).unwrap();
    let elapsed = started.elapsed();

    assert_eq!(summary.counts.get(&Category::Cat1), Some(&330));
    assert_eq!(summary.counts.get(&Category::Cat2), Some(&330));
    let cat3 = *summary.counts.get(&Category::Cat3).unwrap();
    assert!(cat3 >= 45, "expected at least 45 cat3 instances, got {cat3}");

    let instances = load_instances(&summary.path).unwrap();
    assert_eq!(instances.len(), summary.total);
    for instance in &instances {
        assert!(
            validate_instance(instance).is_empty(),
            "instance {} failed validation",
            instance.id
        );
    }

    // 20 templates x 33 fillers behind the expanded categories
    let template_ids: BTreeSet<_> = instances
        .iter()
        .filter(|i| matches!(i.category, Category::Cat1 | Category::Cat2))
        .filter_map(|i| i.template_id.clone())
        .collect();
    assert_eq!(template_ids.len(), 20);
    let fillers: BTreeSet<_> = instances
        .iter()
        .filter(|i| i.category == Category::Cat1)
        .map(|i| i.concept.clone())
        .collect();
    assert_eq!(fillers.len(), 33);

    // every curated concept present
    let concepts: BTreeSet<&str> = instances
        .iter()
        .filter(|i| i.category == Category::Cat3)
        .map(|i| i.concept.as_str())
        .collect();
    for concept in NAME_CONCEPTS
        .iter()
        .chain(&TOPONYM_CONCEPTS)
        .chain(&EXPRESSION_CONCEPTS)
    {
        assert!(concepts.contains(concept), "missing cat3 concept {concept:?}");
    }

    assert!(
        elapsed.as_secs_f64() < 1.0,
        "dataset build took {elapsed:?}, expected < 1 s"
    );
    println!(
        "ACCEPTANCE C1 PASS — 330 + 330 + {cat3} instances validated in {elapsed:?}"
    );
}

// ---------------------------------------------------------------- criterion 2

/// Independent re-statement of the three-way decision, used as the oracle.
fn leak_oracle(sim_test: f64, sim_control: f64, epsilon: f64) -> u8 {
    let diff = sim_test - sim_control;
    if diff > epsilon {
        100
    } else if diff < -epsilon {
        0
    } else {
        50
    }
}

#[test]
fn c2_leak_decision_suite() {
    // branch fixtures
    assert_eq!(leak_rate_single(0.8, 0.5, 1e-9).unwrap(), 100);
    assert_eq!(leak_rate_single(0.2, 0.9, 1e-9).unwrap(), 0);
    assert_eq!(leak_rate_single(0.5, 0.5, 1e-9).unwrap(), 50);
    // ε band
    assert_eq!(leak_rate_single(0.5 + 5e-10, 0.5, 1e-9).unwrap(), 50);
    assert_eq!(leak_rate_single(0.5 - 5e-10, 0.5, 1e-9).unwrap(), 50);
    assert_eq!(leak_rate_single(0.5 + 2e-9, 0.5, 1e-9).unwrap(), 100);
    assert_eq!(leak_rate_single(0.5 - 2e-9, 0.5, 1e-9).unwrap(), 0);

    let mut rng = ChaCha8Rng::seed_from_u64(0x1ea4);
    let mut checked = 0u64;
    // grid values are exact in f64, so shifting and scaling stay exact and
    // the decision must be bit-stable
    const GRID: f64 = 1.0 / (1 << 20) as f64;
    for _ in 0..100_000 {
        let a = f64::from(rng.gen_range(-(1 << 20)..=(1 << 20))) * GRID;
        let b = if rng.gen_bool(0.2) {
            a // forced ties
        } else {
            f64::from(rng.gen_range(-(1 << 20)..=(1 << 20))) * GRID
        };
        let epsilon = *[0.0, 1e-9, GRID].choose(&mut rng).unwrap();

        let value = leak_rate_single(a, b, epsilon).unwrap();
        assert_eq!(value, leak_oracle(a, b, epsilon), "a={a} b={b} eps={epsilon}");

        // antisymmetry: swap maps 100 <-> 0, fixes 50
        let swapped = leak_rate_single(b, a, epsilon).unwrap();
        assert_eq!(value + swapped, 100, "a={a} b={b} eps={epsilon}");

        // shift invariance (exact arithmetic on the grid)
        let shift = f64::from(rng.gen_range(-(8 << 20)..=(8 << 20))) * GRID;
        let shifted = leak_rate_single(a + shift, b + shift, epsilon).unwrap();
        assert_eq!(value, shifted, "a={a} b={b} shift={shift} eps={epsilon}");

        // positive scale invariance at ε = 0
        let scale = 2f64.powi(rng.gen_range(-3..=6));
        let base = leak_rate_single(a, b, 0.0).unwrap();
        let scaled = leak_rate_single(a * scale, b * scale, 0.0).unwrap();
        assert_eq!(base, scaled, "a={a} b={b} scale={scale}");

        checked += 1;
    }
    assert!(checked >= 100_000);
    println!("ACCEPTANCE C2 PASS — {checked} randomized pairs, zero violations");
}

// ---------------------------------------------------------------- criterion 3

#[test]
fn c3_mean_and_recombination() {
    assert_eq!(mean_leak_rate(&[100, 0, 50]).unwrap(), 50.0);

    let mut rng = ChaCha8Rng::seed_from_u64(0x0e23);
    for _ in 0..1_000 {
        let len = rng.gen_range(1..=300);
        let values: Vec<u8> = (0..len)
            .map(|_| *[0u8, 50, 100].choose(&mut rng).unwrap())
            .collect();
        let group_count = rng.gen_range(1..=8.min(len));
        let assignment: Vec<usize> = (0..len).map(|_| rng.gen_range(0..group_count)).collect();

        let mut groups: Vec<Vec<u8>> = vec![Vec::new(); group_count];
        for (value, group) in values.iter().zip(&assignment) {
            groups[*group].push(*value);
        }
        let mut weighted = 0.0;
        for group in groups.iter().filter(|g| !g.is_empty()) {
            weighted += mean_leak_rate(group).unwrap() * group.len() as f64;
        }
        let total = mean_leak_rate(&values).unwrap();
        assert!(
            (weighted / len as f64 - total).abs() < 1e-9,
            "recombination mismatch on {len} values in {group_count} groups"
        );
    }
    println!("ACCEPTANCE C3 PASS — exact mean fixture and 1000 recombinations within 1e-9");
}

// ---------------------------------------------------------------- criterion 4

const ORACLE_VOCAB: [&str; 6] = ["amber", "birch", "cedar", "dune", "elm", "fjord"];

struct OneHotEmbedder;

impl Embedder for OneHotEmbedder {
    fn id(&self) -> &str {
        "one-hot-6"
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        Ok(texts
            .iter()
            .map(|text| {
                let idx = ORACLE_VOCAB
                    .iter()
                    .position(|w| w == text)
                    .expect("token from oracle vocabulary");
                let mut values = vec![0.0; ORACLE_VOCAB.len()];
                values[idx] = 1.0;
                EmbeddingVector::new(values)
            })
            .collect())
    }
}

/// Greedy matching evaluated from first principles: explicit cosines over
/// the one-hot vectors, per-token maxima, arithmetic means, harmonic mean.
fn brute_force_f1(concept: &[usize], generation: &[usize]) -> f64 {
    let unit = |idx: usize| {
        let mut v = [0.0f64; 6];
        v[idx] = 1.0;
        v
    };
    let cos = |a: &[f64; 6], b: &[f64; 6]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    };
    let concept: Vec<[f64; 6]> = concept.iter().map(|i| unit(*i)).collect();
    let generation: Vec<[f64; 6]> = generation.iter().map(|i| unit(*i)).collect();

    let mut precision = 0.0;
    for g in &generation {
        let mut best = f64::NEG_INFINITY;
        for c in &concept {
            best = best.max(cos(g, c));
        }
        precision += best;
    }
    precision /= generation.len() as f64;

    let mut recall = 0.0;
    for c in &concept {
        let mut best = f64::NEG_INFINITY;
        for g in &generation {
            best = best.max(cos(c, g));
        }
        recall += best;
    }
    recall /= concept.len() as f64;

    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn all_sequences(max_len: usize) -> Vec<Vec<usize>> {
    let mut sequences = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for word in 0..ORACLE_VOCAB.len() {
                let mut extended = seq.clone();
                extended.push(word);
                next.push(extended);
            }
        }
        sequences.extend(next.iter().cloned());
        frontier = next;
    }
    sequences
}

#[test]
fn c4_token_f1_matches_brute_force_exhaustively() {
    // the worked fixture: concept "golden yellow" vs generation "yellow"
    struct PairVocab;
    impl Embedder for PairVocab {
        fn id(&self) -> &str {
            "one-hot-2"
        }
        fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
            Ok(texts
                .iter()
                .map(|t| {
                    let mut v = vec![0.0; 2];
                    v[if *t == "golden" { 0 } else { 1 }] = 1.0;
                    EmbeddingVector::new(v)
                })
                .collect())
        }
    }
    let fixture =
        token_f1_similarity("golden yellow", "yellow", &PairVocab, TokenScoreComponent::F1)
            .unwrap();
    assert!((fixture.value - 2.0 / 3.0).abs() < 1e-9);

    let sequences = all_sequences(4);
    assert_eq!(sequences.len(), 6 + 36 + 216 + 1296);
    let strings: Vec<String> = sequences
        .iter()
        .map(|seq| {
            seq.iter()
                .map(|i| ORACLE_VOCAB[*i])
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();

    let embedder = OneHotEmbedder;
    let mut pairs = 0u64;
    for (concept_seq, concept_str) in sequences.iter().zip(&strings) {
        for (generation_seq, generation_str) in sequences.iter().zip(&strings) {
            let implementation = token_f1_similarity(
                concept_str,
                generation_str,
                &embedder,
                TokenScoreComponent::F1,
            )
            .unwrap();
            let oracle = brute_force_f1(concept_seq, generation_seq);
            assert!(
                (implementation.value - oracle).abs() <= 1e-9,
                "mismatch on {concept_str:?} vs {generation_str:?}: {} vs {oracle}",
                implementation.value
            );
            pairs += 1;
        }
    }
    assert_eq!(pairs, 1554 * 1554);
    println!("ACCEPTANCE C4 PASS — {pairs} pairs match the brute-force oracle within 1e-9");
}

// ---------------------------------------------------------------- criterion 5

fn all_report_means(out_dir: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(out_dir.join("report.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut means = Vec::new();
    for table in ["overall", "by_category"] {
        for row in value[table]["rows"].as_array().unwrap() {
            means.push(row["mean_leak_rate"].as_f64().unwrap());
        }
    }
    means
}

#[test]
fn c5_end_to_end_leakage_oracles() {
    let started = Instant::now();

    let echo_dir = tempfile::tempdir().unwrap();
    let summary = cmd_run(&offline_config(echo_dir.path(), MockKind::Echo)).unwrap();
    assert_eq!(summary.generate.records.len(), 705 * 2);
    let means = all_report_means(echo_dir.path());
    assert!(!means.is_empty());
    assert!(
        means.iter().all(|m| *m == 100.0),
        "echo mock must leak everywhere, got {means:?}"
    );
    let md = std::fs::read_to_string(echo_dir.path().join("report.md")).unwrap();
    assert!(md.contains("100.00"));

    let constant_dir = tempfile::tempdir().unwrap();
    cmd_run(&offline_config(constant_dir.path(), MockKind::Constant)).unwrap();
    let means = all_report_means(constant_dir.path());
    assert!(
        means.iter().all(|m| *m == 50.0),
        "constant mock must tie everywhere, got {means:?}"
    );
    let md = std::fs::read_to_string(constant_dir.path().join("report.md")).unwrap();
    assert!(md.contains("50.00"));

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() < 60,
        "offline runs took {elapsed:?}, expected < 60 s"
    );
    println!("ACCEPTANCE C5 PASS — echo ⇒ 100.00, constant ⇒ 50.00, both runs in {elapsed:?}");
}

// ---------------------------------------------------------------- criterion 6

#[test]
fn c6_truncation_protocol() {
    use leakprobe::genclient::truncate_generation;

    let fixtures: [(&str, &str); 50] = [
        ("rose petal soup. It was fragrant", "rose petal soup."),
        ("", ""),
        ("white and weathered", "white and weathered"),
        (" blue.", "blue."),
        ("blue", "blue"),
        ("blue.", "blue."),
        ("blue!", "blue!"),
        ("blue?", "blue?"),
        ("blue. green.", "blue."),
        ("blue! green!", "blue!"),
        ("blue? green?", "blue?"),
        ("a.b.c", "a."),
        (".", "."),
        ("!", "!"),
        ("?", "?"),
        ("...", "."),
        (" . ", "."),
        ("   ", ""),
        ("\t\n", ""),
        ("one two three", "one two three"),
        ("one two three.", "one two three."),
        (" leading space. tail", "leading space."),
        ("trailing space . tail", "trailing space ."),
        ("no terminator here,", "no terminator here,"),
        ("comma, then stop. rest", "comma, then stop."),
        ("question? answer.", "question?"),
        ("exclaim! then ask?", "exclaim!"),
        ("stop. exclaim! ask?", "stop."),
        ("semicolon; no stop", "semicolon; no stop"),
        ("colon: no stop", "colon: no stop"),
        ("ellipsis… unicode", "ellipsis… unicode"),
        ("naïve answer. more", "naïve answer."),
        ("emoji 🎨 paint. done", "emoji 🎨 paint."),
        ("tab\tseparated. rest", "tab\tseparated."),
        ("newline\nbreak. rest", "newline\nbreak."),
        ("  double  spaces  ", "double  spaces"),
        ("white.", "white."),
        (" white.", "white."),
        ("white. ", "white."),
        (" white. It was bright", "white."),
        ("firefighter", "firefighter"),
        ("a firefighter.", "a firefighter."),
        ("pink!", "pink!"),
        ("pink! obviously", "pink!"),
        ("is it pink?", "is it pink?"),
        ("is it pink? yes.", "is it pink?"),
        ("12.5 degrees", "12."),
        ("v1.0 released", "v1."),
        ("end", "end"),
        ("end. ", "end."),
    ];
    for (input, expected) in fixtures {
        assert_eq!(truncate_generation(input), expected, "input {input:?}");
    }

    // property sweep over the fixtures and derived variants
    for (input, _) in fixtures {
        let once = truncate_generation(input);
        assert_eq!(truncate_generation(&once), once, "idempotence on {input:?}");
        let chars: Vec<char> = once.chars().collect();
        for ch in chars.iter().rev().skip(1) {
            assert!(
                !matches!(ch, '.' | '!' | '?'),
                "interior terminator in {once:?}"
            );
        }
    }
    println!("ACCEPTANCE C6 PASS — 50 fixtures plus idempotence and interior-terminator checks");
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn c7_reruns_are_byte_identical() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    cmd_run(&offline_config(first.path(), MockKind::Echo)).unwrap();
    cmd_run(&offline_config(second.path(), MockKind::Echo)).unwrap();

    for file in [
        "instances.jsonl",
        "cache.jsonl",
        "results.jsonl",
        "manifest.json",
        "report.md",
        "report.csv",
        "report.json",
    ] {
        let a = std::fs::read(first.path().join(file)).unwrap();
        let b = std::fs::read(second.path().join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    println!("ACCEPTANCE C7 PASS — caches, results, manifests, and reports byte-identical");
}

// ---------------------------------------------------------------- criterion 8

fn fixture_manifest() -> RunManifest {
    RunManifest {
        dataset_id: "color-related".into(),
        model_id: "(fixture)".into(),
        config_fingerprint: "0000000000000000".into(),
        backend_ids: vec!["token-f1".into(), "cosine".into()],
        epsilon: 1e-9,
        token_score_component: TokenScoreComponent::F1,
        idf_weighting: false,
        baseline_rescaling: false,
        started_at: 1_722_000_000,
        finished_at: 1_722_000_000,
        instance_counts: [
            ("cat1".to_string(), 330usize),
            ("cat2".to_string(), 330),
            ("cat3".to_string(), 45),
        ]
        .into_iter()
        .collect(),
        tie_count: 0,
        degenerate_count: 0,
    }
}

fn fixture_row(
    dataset: &str,
    category: Option<Category>,
    model: &str,
    backend: &str,
    mean: f64,
) -> leakprobe::leakrate::AggregateRow {
    leakprobe::leakrate::AggregateRow {
        dataset_id: dataset.into(),
        model_id: model.into(),
        category,
        backend_id: backend.into(),
        mean_leak_rate: mean,
        n: if category.is_some() { 220 } else { 660 },
        tie_count: 0,
        degenerate_count: 0,
    }
}

fn overall_fixture() -> leakprobe::leakrate::AggregateReport {
    // two datasets x four model sizes x two backends
    let cells = [
        ("various-semantic", "m1-0.5b", 69.27, 77.52),
        ("various-semantic", "m2-1.5b", 75.23, 79.36),
        ("various-semantic", "m3-3b", 83.03, 73.85),
        ("various-semantic", "m4-7b", 74.77, 80.64),
        ("color-related", "m1-0.5b", 60.68, 61.23),
        ("color-related", "m2-1.5b", 71.77, 69.58),
        ("color-related", "m3-3b", 77.41, 80.33),
        ("color-related", "m4-7b", 73.41, 66.39),
    ];
    let mut rows = Vec::new();
    for (dataset, model, token, cosine) in cells {
        rows.push(fixture_row(dataset, None, model, "token-f1", token));
        rows.push(fixture_row(dataset, None, model, "cosine", cosine));
    }
    leakprobe::leakrate::AggregateReport {
        grouping: Grouping::ModelDatasetBackend,
        manifest: fixture_manifest(),
        rows,
    }
}

fn category_fixture() -> leakprobe::leakrate::AggregateReport {
    let cells = [
        (Category::Cat1, "m1-0.5b", 65.03, 70.61),
        (Category::Cat1, "m2-1.5b", 73.18, 72.79),
        (Category::Cat1, "m3-3b", 70.45, 73.76),
        (Category::Cat1, "m4-7b", 88.45, 70.3),
        (Category::Cat2, "m1-0.5b", 56.33, 51.85),
        (Category::Cat2, "m2-1.5b", 70.36, 66.36),
        (Category::Cat2, "m3-3b", 84.36, 86.91),
        (Category::Cat2, "m4-7b", 58.36, 62.48),
        (Category::Cat3, "m1-0.5b", 71.22, 70.61),
        (Category::Cat3, "m2-1.5b", 66.33, 61.02),
        (Category::Cat3, "m3-3b", 57.76, 72.45),
        (Category::Cat3, "m4-7b", 60.82, 64.9),
    ];
    let mut rows = Vec::new();
    for (category, model, token, cosine) in cells {
        rows.push(fixture_row("color-related", Some(category), model, "token-f1", token));
        rows.push(fixture_row("color-related", Some(category), model, "cosine", cosine));
    }
    leakprobe::leakrate::AggregateReport {
        grouping: Grouping::CategoryModelBackend,
        manifest: fixture_manifest(),
        rows,
    }
}

fn check_golden(name: &str, rendered: &str) {
    let path = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var("LEAKPROBE_UPDATE_GOLDEN").is_ok() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, rendered).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("golden file {} missing", path.display()));
    assert_eq!(rendered, expected, "golden mismatch for {name}");
}

#[test]
fn c8_report_golden_fixtures() {
    let overall = overall_fixture();
    let by_category = category_fixture();

    let overall_md = render_table2(&overall, ReportFormat::Markdown).unwrap();
    let category_md = render_table3(&by_category, ReportFormat::Markdown).unwrap();

    // two-decimal cells with the highest score per column group in bold
    assert!(overall_md.contains("**77.41**"));
    assert!(overall_md.contains("**83.03**"));
    assert!(overall_md.contains("| 74.77 |"));
    assert!(category_md.contains("**88.45**"));
    assert!(category_md.contains("| 58.36 |"));
    // the derived cross-model category averages (columns sort as cosine,
    // token-f1)
    assert!(category_md.contains("| _category average_ | 71.87 | 74.28 |"));
    assert!(category_md.contains("| _category average_ | 66.90 | 67.35 |"));
    assert!(category_md.contains("| _category average_ | 67.25 | 64.03 |"));

    check_golden("table2.md", &overall_md);
    check_golden("table3.md", &category_md);
    check_golden(
        "table2.csv",
        &render_table2(&overall, ReportFormat::Csv).unwrap(),
    );
    check_golden(
        "table3.csv",
        &render_table3(&by_category, ReportFormat::Csv).unwrap(),
    );

    // machine formats carry the same numbers at full precision
    let json_text = render_table2(&overall, ReportFormat::Json).unwrap();
    let value: serde_json::Value = serde_json::from_str(&json_text).unwrap();
    let best: Vec<(&str, &str, f64)> = value["rows"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["best"].as_bool().unwrap())
        .map(|r| {
            (
                r["dataset_id"].as_str().unwrap(),
                r["backend_id"].as_str().unwrap(),
                r["mean_leak_rate"].as_f64().unwrap(),
            )
        })
        .collect();
    assert!(best.contains(&("color-related", "token-f1", 77.41)));
    assert_eq!(best.len(), 4, "one best cell per dataset x backend");

    println!("ACCEPTANCE C8 PASS — table structures, marking, and goldens stable");
}

// ---------------------------------------------------------------- criterion 9

#[test]
fn c9_live_smoke_when_endpoint_configured() {
    let Ok(endpoint) = std::env::var("LEAKPROBE_LIVE_ENDPOINT") else {
        println!("ACCEPTANCE C9 SKIP — set LEAKPROBE_LIVE_ENDPOINT to run the live smoke");
        return;
    };
    let model = std::env::var("LEAKPROBE_LIVE_MODEL").unwrap_or_else(|_| "default".into());
    let api = match std::env::var("LEAKPROBE_LIVE_API").as_deref() {
        Ok("chat") => leakprobe::genclient::ApiStyle::Chat,
        _ => leakprobe::genclient::ApiStyle::Completions,
    };

    let instances: Vec<_> = builtin_dataset().into_iter().take(20).collect();
    let provider = HttpProvider::new(endpoint, api);
    let config = GenerationConfig::for_model(model);
    let dir = tempfile::tempdir().unwrap();
    let cache = GenerationCache::open(&dir.path().join("cache.jsonl")).unwrap();

    let records = run_batch(&instances, &config, &provider, &cache).unwrap();
    assert_eq!(records.len(), 40);
    assert_eq!(cache.len(), 40);

    let backend = ScoringBackend::trigram_token_f1();
    let results = score_run(&instances, &records, &backend, 1e-9).unwrap();
    assert!(results
        .iter()
        .all(|r| r.sim_test.is_finite() && r.sim_control.is_finite()));

    let rows = attach_context(
        &results,
        &instances,
        "live-smoke",
        &config.model_id,
        backend.mode,
        &config.fingerprint(),
    );
    let report = aggregate(&rows, Grouping::ModelDatasetBackend, &fixture_manifest()).unwrap();
    let text = render_table2(&report, ReportFormat::Markdown).unwrap();
    assert!(text.contains("live-smoke"));
    println!("ACCEPTANCE C9 PASS — 40 live records cached, scored, and reported");
}
