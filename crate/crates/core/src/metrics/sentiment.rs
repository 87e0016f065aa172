//! Rule-based compound valence in the style of VADER, with word polarities
//! taken from the valence channel of the affective lexicon.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::lemmatizer::LemmaRules;
use crate::lexicon::AffectiveLexicon;

use super::MetricError;

pub const NEGATORS: [&str; 4] = ["not", "n't", "never", "no"];
pub const BOOSTERS: [&str; 3] = ["very", "really", "extremely"];
/// Compound scores with magnitude at most this are neutral.
pub const NEUTRAL_THRESHOLD: f64 = 0.05;

const NEGATION_WINDOW: usize = 3;
const BOOST: f64 = 1.5;
const EXCLAMATION_GAIN: f64 = 1.1;
const MAX_EXCLAMATIONS: usize = 3;
const SQUASH_ALPHA: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Positive,
    Neutral,
    Negative,
}

impl SentimentLabel {
    pub fn from_compound(compound: f64) -> Self {
        if compound > NEUTRAL_THRESHOLD {
            SentimentLabel::Positive
        } else if compound < -NEUTRAL_THRESHOLD {
            SentimentLabel::Negative
        } else {
            SentimentLabel::Neutral
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentVerdict {
    pub compound: f64,
    pub label: SentimentLabel,
}

/// Lemma polarities in `[-1, 1]`, `2 * (valence - 0.5)`.
#[derive(Debug, Clone)]
pub struct SentimentLexicon {
    polarity: HashMap<String, f64>,
    rules: LemmaRules,
}

impl SentimentLexicon {
    pub fn from_affective(lexicon: &AffectiveLexicon, rules: LemmaRules) -> Self {
        let polarity = lexicon
            .iter()
            .filter(|(lemma, _)| !NEGATORS.contains(lemma) && !BOOSTERS.contains(lemma))
            .map(|(lemma, p)| (lemma.to_string(), 2.0 * (p.valence() - 0.5)))
            .collect();
        SentimentLexicon { polarity, rules }
    }

    pub fn polarity(&self, token: &str) -> f64 {
        let lemma = self.rules.lemmatize(token);
        self.polarity.get(&lemma).copied().unwrap_or(0.0)
    }

    pub fn valence_score<S: AsRef<str>>(&self, utterance: &[S]) -> SentimentVerdict {
        let mut sum = 0.0;
        let mut negated_left = 0usize;
        let mut boost = 1.0;
        for token in utterance {
            let token = token.as_ref().to_lowercase();
            if NEGATORS.contains(&token.as_str()) {
                negated_left = NEGATION_WINDOW;
                continue;
            }
            if BOOSTERS.contains(&token.as_str()) {
                boost = BOOST;
                continue;
            }
            let mut p = self.polarity(&token) * boost;
            boost = 1.0;
            if negated_left > 0 {
                p = -p;
                negated_left -= 1;
            }
            sum += p;
        }
        let bangs = utterance
            .iter()
            .rev()
            .take_while(|t| t.as_ref() == "!")
            .take(MAX_EXCLAMATIONS)
            .count();
        sum *= EXCLAMATION_GAIN.powi(bangs as i32);
        let compound = sum / (sum * sum + SQUASH_ALPHA).sqrt();
        SentimentVerdict {
            compound,
            label: SentimentLabel::from_compound(compound),
        }
    }
}

/// Mean compound score over a corpus.
pub fn mean_valence<S: AsRef<str>>(corpus: &[Vec<S>], lexicon: &SentimentLexicon) -> Result<f64, MetricError> {
    if corpus.is_empty() {
        return Err(MetricError::Empty("mean_valence"));
    }
    let total: f64 = corpus.iter().map(|u| lexicon.valence_score(u).compound).sum();
    Ok(total / corpus.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::VadPoint;
    use proptest::prelude::*;

    fn lexicon() -> SentimentLexicon {
        let p = |v| VadPoint::new(v, 0.5, 0.5).unwrap();
        let lex = AffectiveLexicon::from_entries(
            "t",
            [
                ("happy", p(1.0)),
                ("sad", p(0.225)),
                ("good", p(0.9)),
                ("bad", p(0.1)),
                ("table", p(0.5)),
                ("very", p(0.6)),
            ],
        );
        SentimentLexicon::from_affective(&lex, LemmaRules::default())
    }

    fn s(line: &str) -> Vec<String> {
        line.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn golden_pair_signs() {
        let lex = lexicon();
        let happy = lex.valence_score(&s("she was very happy !"));
        let sad = lex.valence_score(&s("she was very sad !"));
        assert!(happy.compound > 0.05);
        assert_eq!(happy.label, SentimentLabel::Positive);
        assert!(sad.compound < -0.05);
        assert_eq!(sad.label, SentimentLabel::Negative);
    }

    #[test]
    fn no_affective_tokens_is_neutral() {
        let v = lexicon().valence_score(&s("the table"));
        assert_eq!(v.compound, 0.0);
        assert_eq!(v.label, SentimentLabel::Neutral);
    }

    #[test]
    fn hand_computed_compound() {
        // 1.0 * 1.5 booster, one "!" -> 1.65
        let v = lexicon().valence_score(&s("she was very happy !"));
        let raw: f64 = 1.65;
        assert!((v.compound - raw / (raw * raw + 15.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn negation_window_is_three_tokens() {
        let lex = lexicon();
        assert!(lex.valence_score(&s("not good")).compound < 0.0);
        assert!(lex.valence_score(&s("was n't bad")).compound > 0.0);
        assert!(lex.valence_score(&s("not a b c good")).compound > 0.0);
        assert!(lex.valence_score(&s("not a b good")).compound < 0.0);
    }

    #[test]
    fn exclamations_cap_at_three() {
        let lex = lexicon();
        let three = lex.valence_score(&s("good ! ! !")).compound;
        let five = lex.valence_score(&s("good ! ! ! ! !")).compound;
        assert_eq!(three, five);
        assert!(three > lex.valence_score(&s("good")).compound);
    }

    #[test]
    fn boundaries_are_strict() {
        assert_eq!(SentimentLabel::from_compound(0.05), SentimentLabel::Neutral);
        assert_eq!(SentimentLabel::from_compound(-0.05), SentimentLabel::Neutral);
        assert_eq!(SentimentLabel::from_compound(0.0500001), SentimentLabel::Positive);
        assert_eq!(SentimentLabel::from_compound(-0.0500001), SentimentLabel::Negative);
    }

    #[test]
    fn mean_valence_examples() {
        let lex = lexicon();
        assert_eq!(mean_valence(&[s("the table"), s("table")], &lex).unwrap(), 0.0);
        let m = mean_valence(&[s("good"), s("bad")], &lex).unwrap();
        assert!(m.abs() < 1e-12);
        let empty: Vec<Vec<String>> = vec![];
        assert!(mean_valence(&empty, &lex).is_err());
    }

    proptest! {
        #[test]
        fn negation_flips_single_word(word in proptest::sample::select(vec!["happy", "sad", "good", "bad"])) {
            let lex = lexicon();
            let plain = lex.valence_score(&[word]).compound;
            let negated = lex.valence_score(&["not", word]).compound;
            prop_assert!(plain != 0.0);
            prop_assert!(plain.signum() == -negated.signum());
        }
    }
}
