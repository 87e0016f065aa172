//! Affect-steered decoding: a language model's top-k candidates are re-weighted
//! toward a target point in valence-arousal-dominance space. Also carries the
//! evaluation metrics and the human rating protocol.

pub mod api;
pub mod corpus;
pub mod decoder;
pub mod langmodel;
pub mod lemmatizer;
pub mod lexicon;
pub mod metrics;
pub mod pipeline;
pub mod rating;
