//! Built-in vocabularies, templates, and curated category 3 instances.

use super::{
    slugify, Category, ColorTerm, ExpectedGeneration, PromptInstance, PromptTemplate,
};

/// 11 basic English color terms, each with two shade variations. Every
/// variation ends in its basic term, so a variation always contains the basic
/// color as a token.
const COLOR_VOCABULARY: [(&str, [&str; 2]); 11] = [
    ("yellow", ["golden yellow", "lemon yellow"]),
    ("red", ["crimson red", "scarlet red"]),
    ("purple", ["violet purple", "lavender purple"]),
    ("green", ["emerald green", "olive green"]),
    ("blue", ["navy blue", "cobalt blue"]),
    ("pink", ["fuchsia pink", "blush pink"]),
    ("black", ["charcoal black", "jet black"]),
    ("white", ["ivory white", "snow white"]),
    ("brown", ["chestnut brown", "mahogany brown"]),
    ("orange", ["coral orange", "tangerine orange"]),
    ("gray", ["slate gray", "ash gray"]),
];

/// Returns the 11 built-in color terms in their canonical order.
pub fn builtin_color_vocabulary() -> Vec<ColorTerm> {
    COLOR_VOCABULARY
        .iter()
        .map(|(basic, variations)| ColorTerm {
            basic: (*basic).to_string(),
            variations: variations.iter().map(|v| (*v).to_string()).collect(),
        })
        .collect()
}

/// Category 1 templates: a color in the prompt, a non-color item expected in
/// the continuation. Category 2 templates: a color in the prompt, another
/// color expected. Fillers never start a sentence, and no control sentence
/// contains a color term (not even as a substring — "colored" would smuggle
/// in "red").
const TEMPLATES: [(&str, Category, &str, &str); 20] = [
    (
        "cat1-01",
        Category::Cat1,
        "He likes {INSERT}. He works as a",
        "He works as a",
    ),
    (
        "cat1-02",
        Category::Cat1,
        "The flowerpot is {INSERT}. The flower is a",
        "The flower is a",
    ),
    (
        "cat1-03",
        Category::Cat1,
        "The house was painted {INSERT}. She saw a",
        "She saw a",
    ),
    (
        "cat1-04",
        Category::Cat1,
        "Her dress was {INSERT}. For dinner she cooked",
        "For dinner she cooked",
    ),
    (
        "cat1-05",
        Category::Cat1,
        "The walls were {INSERT}. His favorite animal is a",
        "His favorite animal is a",
    ),
    (
        "cat1-06",
        Category::Cat1,
        "She bought a {INSERT} car. Her hobby is",
        "Her hobby is",
    ),
    (
        "cat1-07",
        Category::Cat1,
        "The notebook was {INSERT}. The first page mentioned a",
        "The first page mentioned a",
    ),
    (
        "cat1-08",
        Category::Cat1,
        "His backpack is {INSERT}. After school he plays",
        "After school he plays",
    ),
    (
        "cat1-09",
        Category::Cat1,
        "The curtains were {INSERT}. Outside the window stood a",
        "Outside the window stood a",
    ),
    (
        "cat1-10",
        Category::Cat1,
        "The mug on the desk was {INSERT}. For breakfast he ate",
        "For breakfast he ate",
    ),
    (
        "cat2-01",
        Category::Cat2,
        "The cake was topped with {INSERT} icing. The candles on it were painted",
        "The candles on it were painted",
    ),
    (
        "cat2-02",
        Category::Cat2,
        "The clouds were {INSERT} in the summer sky. The fence below was painted",
        "The fence below was painted",
    ),
    (
        "cat2-03",
        Category::Cat2,
        "Her scarf was {INSERT}. Her gloves were dyed",
        "Her gloves were dyed",
    ),
    (
        "cat2-04",
        Category::Cat2,
        "The front door was painted {INSERT}. The mailbox beside it was painted",
        "The mailbox beside it was painted",
    ),
    (
        "cat2-05",
        Category::Cat2,
        "He wore a {INSERT} jacket. His shoes were dyed",
        "His shoes were dyed",
    ),
    (
        "cat2-06",
        Category::Cat2,
        "The kite was {INSERT}. The balloons at the party were painted",
        "The balloons at the party were painted",
    ),
    (
        "cat2-07",
        Category::Cat2,
        "She dyed her hair {INSERT}. Her nails were painted",
        "Her nails were painted",
    ),
    (
        "cat2-08",
        Category::Cat2,
        "The team wore {INSERT} uniforms. Their flag was painted",
        "Their flag was painted",
    ),
    (
        "cat2-09",
        Category::Cat2,
        "The bicycle frame was {INSERT}. The matching helmet was painted",
        "The matching helmet was painted",
    ),
    (
        "cat2-10",
        Category::Cat2,
        "The umbrella was {INSERT}. Her raincoat was dyed",
        "Her raincoat was dyed",
    ),
];

/// Returns the 20 built-in slot-filling templates (10 per category).
pub fn builtin_templates() -> Vec<PromptTemplate> {
    TEMPLATES
        .iter()
        .map(|(id, category, pattern, control)| PromptTemplate {
            id: (*id).to_string(),
            category: *category,
            test_pattern: (*pattern).to_string(),
            control_prompt: (*control).to_string(),
            expected_generation: match category {
                Category::Cat1 => ExpectedGeneration::NonColor,
                _ => ExpectedGeneration::Color,
            },
        })
        .collect()
}

/// Color-bearing first names. All share one prompt frame.
const NAMES: [&str; 15] = [
    "Rose", "Amber", "Ruby", "Scarlett", "Violet", "Jade", "Hazel", "Indigo", "Ivory", "Coral",
    "Sienna", "Olive", "Ebony", "Gray", "Pearl",
];

/// Color-bearing place names.
const TOPONYMS: [&str; 11] = [
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

/// Color-bearing set expressions with hand-written prompts. Slot-filling
/// cannot keep these coherent, so each prompt embeds the full expression
/// verbatim and is stored written out.
const SET_EXPRESSIONS: [(&str, &str); 19] = [
    (
        "to be a black sheep",
        "Tom was considered to be a black sheep in the family. He was wearing a T-shirt colored",
    ),
    (
        "to be tickled pink",
        "Anna seemed to be tickled pink by the surprise. She was wearing a T-shirt colored",
    ),
    (
        "to be in the red",
        "Sam knew his bank account to be in the red again. He was wearing a T-shirt colored",
    ),
    (
        "to tell a white lie",
        "Nora decided to tell a white lie about the dinner. She was wearing a T-shirt colored",
    ),
    (
        "to come out of the blue",
        "For Leo the invitation seemed to come out of the blue. He was wearing a T-shirt colored",
    ),
    (
        "to see a golden opportunity",
        "Max was quick to see a golden opportunity in the offer. He was wearing a T-shirt colored",
    ),
    (
        "to be in a gray area",
        "The lawyer declared the case to be in a gray area. He was wearing a T-shirt colored",
    ),
    (
        "to get the green light",
        "Omar expected to get the green light for the project. He was wearing a T-shirt colored",
    ),
    (
        "to paint the town red",
        "Ben planned to paint the town red on Friday. He was wearing a T-shirt colored",
    ),
    (
        "to have a silver tongue",
        "The salesman was known to have a silver tongue. He was wearing a T-shirt colored",
    ),
    (
        "to have a rosy outlook",
        "Mia continued to have a rosy outlook on life. She was wearing a T-shirt colored",
    ),
    (
        "to be as gray as the cloudy sky",
        "His mood turned out to be as gray as the cloudy sky. He was wearing a T-shirt colored",
    ),
    (
        "to be in a black mood",
        "The captain appeared to be in a black mood all morning. He was wearing a T-shirt colored",
    ),
    (
        "to think in black and white",
        "The critic tended to think in black and white. He was wearing a T-shirt colored",
    ),
    (
        "to have white-hot anger",
        "The warrior was said to have white-hot anger. He was wearing a T-shirt colored",
    ),
    (
        "to feel like a green rookie",
        "On his first shift Jake started to feel like a green rookie. He was wearing a T-shirt colored",
    ),
    (
        "to have rosy cheeks",
        "The child happened to have rosy cheeks after the walk. She was wearing a T-shirt colored",
    ),
    (
        "to be in a brown study",
        "The professor seemed to be in a brown study at his desk. He was wearing a T-shirt colored",
    ),
    (
        "to see the world through rose-colored glasses",
        "Mary tended to see the world through rose-colored glasses. She was wearing a T-shirt colored",
    ),
];

/// Returns the curated category 3 instances: 15 names, 11 toponyms, and 19
/// set expressions, one instance per concept, ids of the form
/// `"cat3:{slugified concept}"`.
pub fn builtin_category3_instances() -> Vec<PromptInstance> {
    let mut instances = Vec::with_capacity(NAMES.len() + TOPONYMS.len() + SET_EXPRESSIONS.len());

    for name in NAMES {
        instances.push(PromptInstance {
            id: format!("cat3:{}", slugify(name)),
            category: Category::Cat3,
            concept: name.to_string(),
            test_prompt: format!("{name} is a student. Her favorite color is"),
            control_prompt: "Her favorite color is".to_string(),
            template_id: Some("cat3-name".to_string()),
        });
    }

    for place in TOPONYMS {
        instances.push(PromptInstance {
            id: format!("cat3:{}", slugify(place)),
            category: Category::Cat3,
            concept: place.to_string(),
            test_prompt: format!("He was born in {place}. His favorite color is"),
            control_prompt: "His favorite color is".to_string(),
            template_id: Some("cat3-toponym".to_string()),
        });
    }

    for (expression, test_prompt) in SET_EXPRESSIONS {
        let control = if test_prompt.contains("She was wearing") {
            "She was wearing a T-shirt colored"
        } else {
            "He was wearing a T-shirt colored"
        };
        instances.push(PromptInstance {
            id: format!("cat3:{}", slugify(expression)),
            category: Category::Cat3,
            concept: expression.to_string(),
            test_prompt: test_prompt.to_string(),
            control_prompt: control.to_string(),
            template_id: Some("cat3-expression".to_string()),
        });
    }

    instances
}
