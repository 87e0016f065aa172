//! Deterministic rule-based English lemmatizer.
//!
//! Exceptions are consulted first, then an ordered list of suffix rules.
//! A token no rule applies to is returned lowercased and otherwise unchanged.
//! Mis-lemmatized tokens only cost lexicon recall: the decoder passes them
//! through untouched.

use std::collections::HashMap;
use std::io::{self, BufRead};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RulesError {
    #[error("malformed exception line {line}: expected `token<TAB>lemma`")]
    Malformed { line: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Suffix rewrite applied when no exception matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuffixRule {
    /// `ies` -> `y`, `ied` -> `y`
    IesToY,
    /// strip `es` after s, x, z, ch, sh
    SibilantEs,
    /// strip plural `s` (not after ss, us, is)
    PluralS,
    /// strip `ed`, then undouble or restore a silent e
    Ed,
    /// strip `ing`, same restorations as `Ed`
    Ing,
}

const MAX_PASSES: usize = 8;

const DEFAULT_SUFFIX_RULES: [SuffixRule; 5] = [
    SuffixRule::IesToY,
    SuffixRule::SibilantEs,
    SuffixRule::PluralS,
    SuffixRule::Ed,
    SuffixRule::Ing,
];

const DEFAULT_EXCEPTIONS: &[(&str, &str)] = &[
    ("am", "be"),
    ("is", "be"),
    ("are", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("being", "be"),
    ("has", "have"),
    ("had", "have"),
    ("having", "have"),
    ("does", "do"),
    ("did", "do"),
    ("done", "do"),
    ("goes", "go"),
    ("went", "go"),
    ("gone", "go"),
    ("made", "make"),
    ("said", "say"),
    ("says", "say"),
    ("saw", "see"),
    ("seen", "see"),
    ("got", "get"),
    ("gotten", "get"),
    ("took", "take"),
    ("taken", "take"),
    ("came", "come"),
    ("gave", "give"),
    ("given", "give"),
    ("knew", "know"),
    ("known", "know"),
    ("thought", "think"),
    ("told", "tell"),
    ("felt", "feel"),
    ("left", "leave"),
    ("lost", "lose"),
    ("won", "win"),
    ("found", "find"),
    ("brought", "bring"),
    ("bought", "buy"),
    ("kept", "keep"),
    ("met", "meet"),
    ("ran", "run"),
    ("sat", "sit"),
    ("wrote", "write"),
    ("written", "write"),
    ("ate", "eat"),
    ("eaten", "eat"),
    ("fell", "fall"),
    ("broke", "break"),
    ("broken", "break"),
    ("died", "die"),
    ("dying", "die"),
    ("lying", "lie"),
    ("lied", "lie"),
    ("men", "man"),
    ("women", "woman"),
    ("children", "child"),
    ("people", "person"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("mice", "mouse"),
    ("better", "good"),
    ("best", "good"),
    ("worse", "bad"),
    ("worst", "bad"),
    ("excited", "excite"),
    ("exciting", "excite"),
    ("loses", "lose"),
    ("uses", "use"),
    ("causes", "cause"),
    ("houses", "house"),
    ("yes", "yes"),
    ("this", "this"),
    ("his", "his"),
    ("its", "its"),
    ("us", "us"),
    ("news", "news"),
    ("nothing", "nothing"),
    ("something", "something"),
    ("anything", "anything"),
    ("everything", "everything"),
    ("morning", "morning"),
    ("evening", "evening"),
    ("wedding", "wedding"),
    ("ceiling", "ceiling"),
    ("during", "during"),
    ("ring", "ring"),
    ("spring", "spring"),
];

/// Exception table plus ordered suffix rules.
#[derive(Debug, Clone)]
pub struct LemmaRules {
    exceptions: HashMap<String, String>,
    suffix_rules: Vec<SuffixRule>,
    min_stem: usize,
}

impl Default for LemmaRules {
    fn default() -> Self {
        LemmaRules {
            exceptions: DEFAULT_EXCEPTIONS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            suffix_rules: DEFAULT_SUFFIX_RULES.to_vec(),
            min_stem: 2,
        }
    }
}

impl LemmaRules {
    /// Built-in defaults, optionally overlaid with a `token<TAB>lemma` table.
    pub fn load<R: BufRead>(input: Option<R>) -> Result<Self, RulesError> {
        let mut rules = LemmaRules::default();
        let Some(reader) = input else {
            return Ok(rules);
        };
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(token), Some(lemma), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(RulesError::Malformed { line: idx + 1 });
            };
            let (token, lemma) = (token.trim().to_lowercase(), lemma.trim().to_lowercase());
            if token.is_empty() || lemma.is_empty() {
                return Err(RulesError::Malformed { line: idx + 1 });
            }
            rules.exceptions.insert(token, lemma);
        }
        Ok(rules)
    }

    pub fn add_exception(&mut self, token: &str, lemma: &str) {
        self.exceptions.insert(token.to_lowercase(), lemma.to_lowercase());
    }

    /// Applies one rewrite per pass until nothing changes. Every suffix rule
    /// shortens the word, so this terminates and the result is a fixed point.
    pub fn lemmatize(&self, token: &str) -> String {
        let mut word = token.to_lowercase();
        for _ in 0..MAX_PASSES {
            match self.step(&word) {
                Some(next) if next != word => word = next,
                _ => break,
            }
        }
        word
    }

    fn step(&self, word: &str) -> Option<String> {
        if word.is_empty() {
            return None;
        }
        if let Some(lemma) = self.exceptions.get(word) {
            return Some(lemma.clone());
        }
        if !word.chars().all(|c| c.is_ascii_alphabetic()) {
            return None;
        }
        self.suffix_rules.iter().find_map(|rule| self.apply(*rule, word))
    }

    fn apply(&self, rule: SuffixRule, word: &str) -> Option<String> {
        let min = self.min_stem;
        match rule {
            SuffixRule::IesToY => {
                let stem = word.strip_suffix("ies").or_else(|| word.strip_suffix("ied"))?;
                (stem.len() >= min).then(|| format!("{stem}y"))
            }
            SuffixRule::SibilantEs => {
                let stem = word.strip_suffix("es")?;
                let sibilant = ["ss", "x", "z", "ch", "sh"].iter().any(|s| stem.ends_with(s))
                    || (stem.ends_with('s') && !stem.ends_with("us"));
                (sibilant && stem.len() >= min).then(|| stem.to_string())
            }
            SuffixRule::PluralS => {
                let stem = word.strip_suffix('s')?;
                if ["s", "u", "i"].iter().any(|s| stem.ends_with(s)) {
                    return None;
                }
                (stem.len() >= min && has_vowel(stem)).then(|| stem.to_string())
            }
            SuffixRule::Ed => {
                if word.ends_with("eed") {
                    return None;
                }
                let stem = word.strip_suffix("ed")?;
                self.restore(stem)
            }
            SuffixRule::Ing => {
                let stem = word.strip_suffix("ing")?;
                self.restore(stem)
            }
        }
    }

    /// Undoubles a final double consonant or restores a silent e after an
    /// `ed`/`ing` strip.
    fn restore(&self, stem: &str) -> Option<String> {
        if stem.len() < self.min_stem || !has_vowel(stem) {
            return None;
        }
        let b = stem.as_bytes();
        let n = b.len();
        let last = b[n - 1];
        if n >= 2 && last == b[n - 2] && is_consonant(b, n - 1) && !b"lsz".contains(&last) {
            return Some(stem[..n - 1].to_string());
        }
        if stem.ends_with("at")
            || stem.ends_with("bl")
            || stem.ends_with("iz")
            || last == b'v'
            || last == b'c'
            || (last == b's' && n >= 2 && !is_consonant(b, n - 2) && b[n - 2] != b's')
        {
            return Some(format!("{stem}e"));
        }
        if measure(b) == 1 && ends_cvc(b) {
            return Some(format!("{stem}e"));
        }
        Some(stem.to_string())
    }
}

fn is_consonant(word: &[u8], i: usize) -> bool {
    match word[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(word, i - 1),
        _ => true,
    }
}

fn has_vowel(stem: &str) -> bool {
    let b = stem.as_bytes();
    (0..b.len()).any(|i| !is_consonant(b, i))
}

/// Number of vowel-consonant sequences in the word.
fn measure(word: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..word.len() {
        let vowel = !is_consonant(word, i);
        if prev_vowel && !vowel {
            m += 1;
        }
        prev_vowel = vowel;
    }
    m
}

fn ends_cvc(word: &[u8]) -> bool {
    let n = word.len();
    n >= 3
        && is_consonant(word, n - 3)
        && !is_consonant(word, n - 2)
        && is_consonant(word, n - 1)
        && !b"wxy".contains(&word[n - 1])
}
