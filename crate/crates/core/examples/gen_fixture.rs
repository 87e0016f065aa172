//! Writes the synthetic acceptance fixture: `lexicon.tsv`, `pairs.tsv` and
//! `golden.tsv`.
//!
//! ```text
//! cargo run -p affecton-core --example gen_fixture -- fixtures
//! ```
//!
//! VAD values approximate NRC-VAD entries for the same words.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_221_017;
const PAIRS: usize = 2000;

const ADJECTIVES: &[(&str, [f64; 3])] = &[
    ("amazing", [0.96, 0.78, 0.76]),
    ("awesome", [0.93, 0.79, 0.78]),
    ("wonderful", [0.97, 0.62, 0.74]),
    ("fantastic", [0.95, 0.76, 0.72]),
    ("great", [0.92, 0.60, 0.74]),
    ("excellent", [0.95, 0.58, 0.82]),
    ("brilliant", [0.93, 0.70, 0.82]),
    ("exciting", [0.90, 0.88, 0.70]),
    ("thrilling", [0.88, 0.93, 0.72]),
    ("incredible", [0.90, 0.80, 0.72]),
    ("perfect", [0.96, 0.50, 0.80]),
    ("happy", [0.96, 0.73, 0.85]),
    ("good", [0.94, 0.44, 0.77]),
    ("nice", [0.93, 0.44, 0.64]),
    ("lovely", [0.95, 0.52, 0.64]),
    ("fun", [0.92, 0.76, 0.62]),
    ("beautiful", [0.96, 0.56, 0.70]),
    ("glad", [0.91, 0.50, 0.68]),
    ("cheerful", [0.95, 0.60, 0.70]),
    ("joyful", [0.98, 0.79, 0.74]),
    ("delightful", [0.96, 0.60, 0.67]),
    ("pleasant", [0.93, 0.30, 0.62]),
    ("sweet", [0.90, 0.44, 0.55]),
    ("proud", [0.87, 0.68, 0.88]),
    ("thrilled", [0.94, 0.90, 0.76]),
    ("excited", [0.91, 0.93, 0.72]),
    ("fine", [0.75, 0.29, 0.60]),
    ("ok", [0.60, 0.25, 0.50]),
    ("ordinary", [0.45, 0.12, 0.43]),
    ("normal", [0.55, 0.15, 0.52]),
    ("average", [0.47, 0.20, 0.46]),
    ("usual", [0.50, 0.15, 0.48]),
    ("quiet", [0.52, 0.12, 0.38]),
    ("calm", [0.73, 0.07, 0.55]),
    ("plain", [0.44, 0.14, 0.40]),
    ("simple", [0.62, 0.14, 0.52]),
    ("gentle", [0.78, 0.20, 0.48]),
    ("slow", [0.35, 0.12, 0.30]),
    ("mild", [0.55, 0.18, 0.44]),
    ("steady", [0.65, 0.20, 0.63]),
    ("peaceful", [0.90, 0.08, 0.55]),
    ("soft", [0.68, 0.19, 0.35]),
    ("boring", [0.15, 0.10, 0.30]),
    ("dull", [0.18, 0.12, 0.28]),
    ("sad", [0.05, 0.45, 0.20]),
    ("terrible", [0.05, 0.78, 0.34]),
    ("awful", [0.06, 0.76, 0.33]),
    ("horrible", [0.04, 0.85, 0.35]),
    ("bad", [0.10, 0.60, 0.30]),
    ("miserable", [0.04, 0.60, 0.16]),
    ("lonely", [0.09, 0.34, 0.14]),
    ("depressing", [0.06, 0.45, 0.20]),
    ("upset", [0.12, 0.74, 0.32]),
    ("angry", [0.12, 0.86, 0.56]),
    ("scary", [0.10, 0.93, 0.38]),
    ("gloomy", [0.10, 0.28, 0.20]),
    ("unhappy", [0.07, 0.40, 0.20]),
    ("tired", [0.20, 0.20, 0.20]),
    ("sick", [0.10, 0.50, 0.20]),
    ("painful", [0.06, 0.80, 0.30]),
    ("weak", [0.15, 0.30, 0.10]),
    ("hopeless", [0.05, 0.40, 0.08]),
    ("poor", [0.12, 0.35, 0.14]),
    ("worried", [0.13, 0.70, 0.24]),
    ("afraid", [0.10, 0.80, 0.18]),
    ("nervous", [0.20, 0.82, 0.26]),
    ("disappointing", [0.10, 0.45, 0.28]),
    ("annoying", [0.10, 0.70, 0.38]),
    ("ugly", [0.08, 0.50, 0.28]),
    ("cruel", [0.04, 0.82, 0.60]),
    ("bitter", [0.10, 0.54, 0.40]),
    ("dark", [0.30, 0.40, 0.34]),
    ("empty", [0.15, 0.25, 0.18]),
    ("strange", [0.35, 0.58, 0.40]),
    ("weird", [0.30, 0.60, 0.36]),
];

const AFFECTIVE_NOUNS: &[(&str, [f64; 3])] = &[
    ("party", [0.90, 0.85, 0.60]),
    ("holiday", [0.94, 0.56, 0.63]),
    ("gift", [0.93, 0.60, 0.62]),
    ("victory", [0.95, 0.82, 0.90]),
    ("concert", [0.86, 0.80, 0.60]),
    ("wedding", [0.92, 0.73, 0.66]),
    ("dinner", [0.83, 0.40, 0.60]),
    ("trip", [0.80, 0.63, 0.58]),
    ("game", [0.77, 0.72, 0.60]),
    ("movie", [0.70, 0.55, 0.50]),
    ("music", [0.90, 0.60, 0.60]),
    ("friend", [0.91, 0.45, 0.67]),
    ("family", [0.90, 0.42, 0.67]),
    ("weekend", [0.86, 0.45, 0.60]),
    ("day", [0.64, 0.33, 0.52]),
    ("job", [0.60, 0.50, 0.68]),
    ("meeting", [0.45, 0.40, 0.60]),
    ("exam", [0.30, 0.74, 0.50]),
    ("funeral", [0.06, 0.40, 0.24]),
    ("accident", [0.05, 0.84, 0.27]),
    ("storm", [0.20, 0.85, 0.50]),
    ("fight", [0.14, 0.88, 0.62]),
    ("loss", [0.08, 0.50, 0.20]),
    ("disaster", [0.04, 0.88, 0.30]),
    ("illness", [0.07, 0.55, 0.18]),
    ("rain", [0.50, 0.30, 0.40]),
    ("news", [0.50, 0.55, 0.50]),
    ("weather", [0.55, 0.30, 0.45]),
    ("food", [0.85, 0.50, 0.60]),
    ("school", [0.60, 0.50, 0.55]),
    ("book", [0.72, 0.20, 0.55]),
    ("class", [0.58, 0.40, 0.55]),
    ("dog", [0.76, 0.54, 0.56]),
    ("baby", [0.94, 0.56, 0.37]),
];

const VERBS: &[(&str, [f64; 3])] = &[
    ("love", [1.00, 0.519, 0.673]),
    ("like", [0.77, 0.34, 0.58]),
    ("enjoy", [0.94, 0.55, 0.73]),
    ("adore", [0.95, 0.60, 0.70]),
    ("hate", [0.02, 0.90, 0.58]),
    ("miss", [0.22, 0.43, 0.30]),
    ("fear", [0.07, 0.84, 0.26]),
    ("dread", [0.08, 0.77, 0.25]),
    ("need", [0.45, 0.45, 0.40]),
    ("want", [0.60, 0.55, 0.60]),
    ("remember", [0.65, 0.35, 0.55]),
    ("regret", [0.10, 0.50, 0.25]),
];

const EXTRA_LEXICON: &[(&str, [f64; 3])] = &[
    ("smile", [0.95, 0.55, 0.60]),
    ("laugh", [0.94, 0.73, 0.64]),
    ("cry", [0.10, 0.70, 0.20]),
    ("hope", [0.90, 0.50, 0.62]),
    ("pain", [0.06, 0.80, 0.30]),
    ("peace", [0.95, 0.10, 0.60]),
    ("joy", [0.98, 0.82, 0.79]),
    ("anger", [0.10, 0.89, 0.58]),
    ("worry", [0.12, 0.70, 0.24]),
    ("surprise", [0.80, 0.88, 0.55]),
    ("win", [0.95, 0.83, 0.90]),
    ("lose", [0.08, 0.60, 0.20]),
    ("problem", [0.15, 0.60, 0.35]),
    ("success", [0.96, 0.72, 0.88]),
    ("failure", [0.05, 0.60, 0.15]),
];

const PLAIN_NOUNS: &[&str] = &[
    "table",
    "car",
    "office",
    "garden",
    "road",
    "window",
    "phone",
    "kitchen",
    "train",
    "park",
    "store",
    "river",
    "beach",
    "bus",
    "room",
    "street",
    "station",
    "hotel",
    "museum",
    "library",
    "restaurant",
    "bridge",
    "market",
    "village",
    "island",
    "lake",
    "mountain",
    "forest",
    "hospital",
    "airport",
    "church",
    "farm",
    "factory",
    "bank",
    "shop",
    "bakery",
    "theater",
    "stadium",
    "gym",
    "hall",
    "tower",
    "castle",
    "harbor",
    "valley",
    "desert",
    "camp",
    "cabin",
    "studio",
    "garage",
    "lobby",
    "corner",
    "square",
    "plaza",
    "cafe",
    "pool",
    "yard",
    "porch",
    "attic",
    "basement",
];

const TIMES: &[&str] = &["today", "yesterday", "tonight", "again", "lately", "recently", "now"];
const INTENSIFIERS: &[&str] = &["very", "really", "so", "quite", "pretty", "rather", "truly"];
const PEOPLE: &[&str] = &["he", "she", "they", "we", "mom", "dad", "everyone", "nobody"];

struct Sampler {
    weights: WeightedIndex<f64>,
    items: Vec<String>,
}

impl Sampler {
    /// Zipf weights over a seeded permutation of `items`.
    fn zipf(items: impl IntoIterator<Item = String>, rng: &mut ChaCha8Rng) -> Self {
        let mut items: Vec<String> = items.into_iter().collect();
        items.shuffle(rng);
        let weights = (0..items.len()).map(|r| 1.0 / (r as f64 + 1.0).powf(0.8));
        Sampler {
            weights: WeightedIndex::new(weights).expect("non-empty"),
            items,
        }
    }

    fn pick(&self, rng: &mut ChaCha8Rng) -> &str {
        &self.items[self.weights.sample(rng)]
    }
}

fn names<'a>(table: &'a [(&'a str, [f64; 3])]) -> impl Iterator<Item = String> + 'a {
    table.iter().map(|(w, _)| w.to_string())
}

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    fs::create_dir_all(&dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut lex = BufWriter::new(File::create(dir.join("lexicon.tsv"))?);
    writeln!(lex, "term\tvalence\tarousal\tdominance")?;
    let mut entries: Vec<_> = [ADJECTIVES, AFFECTIVE_NOUNS, VERBS, EXTRA_LEXICON].concat();
    entries.sort_by(|a, b| a.0.cmp(b.0));
    for (w, [v, a, d]) in &entries {
        writeln!(lex, "{w}\t{v:.3}\t{a:.3}\t{d:.3}")?;
    }
    lex.flush()?;

    let adj = Sampler::zipf(names(ADJECTIVES), &mut rng);
    let noun = Sampler::zipf(
        names(AFFECTIVE_NOUNS).chain(PLAIN_NOUNS.iter().map(|s| s.to_string())),
        &mut rng,
    );
    let verb = Sampler::zipf(names(VERBS), &mut rng);
    let time = Sampler::zipf(TIMES.iter().map(|s| s.to_string()), &mut rng);
    let intens = Sampler::zipf(INTENSIFIERS.iter().map(|s| s.to_string()), &mut rng);
    let person = Sampler::zipf(PEOPLE.iter().map(|s| s.to_string()), &mut rng);

    let mut pairs = BufWriter::new(File::create(dir.join("pairs.tsv"))?);
    for i in 0..PAIRS {
        let n = noun.pick(&mut rng).to_string();
        let source = match rng.random_range(0..9) {
            0 => format!("How was the {n}?"),
            1 => format!("How do you feel {}?", time.pick(&mut rng)),
            2 => format!("What did you think of the {n}?"),
            3 => format!("How was your {n}?"),
            4 => format!("Tell me about the {n}."),
            5 => format!("Did you like the {n}?"),
            6 => "How are you?".to_string(),
            7 => format!("What happened at the {n}?"),
            _ => format!("How did {} feel about the {n}?", person.pick(&mut rng)),
        };
        let a = adj.pick(&mut rng);
        let a2 = adj.pick(&mut rng);
        let m = intens.pick(&mut rng);
        let end = if rng.random_bool(0.3) { "!" } else { "." };
        let response = match rng.random_range(0..11) {
            0 => format!("It was {m} {a}{end}"),
            1 => format!("The {n} was {a}{end}"),
            2 => format!("I feel {a} {}{end}", time.pick(&mut rng)),
            3 => format!("I {} the {n}{end}", verb.pick(&mut rng)),
            4 => format!("We had a {a} {n}{end}"),
            5 => format!("That sounds {a}!"),
            6 => format!("My {n} was {m} {a}{end}"),
            7 => format!("I am so {a} about the {n}{end}"),
            8 => format!("What a {a} {n}!"),
            9 => format!("Honestly, it was {a} and {a2}{end}"),
            _ => format!("{} said it was {m} {a}{end}", capitalize(person.pick(&mut rng))),
        };
        writeln!(pairs, "p{:04}\t{source}\t{response}", i + 1)?;
    }
    pairs.flush()?;

    fs::write(
        dir.join("golden.tsv"),
        "happy-sad\tShe was very happy!\tShe was very sad!\n",
    )?;
    Ok(())
}

fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}
