use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";
pub const SEP: &str = "<sep>";
pub const UNK: &str = "<unk>";

pub const BOS_ID: TokenId = TokenId(0);
pub const EOS_ID: TokenId = TokenId(1);
pub const SEP_ID: TokenId = TokenId(2);
pub const UNK_ID: TokenId = TokenId(3);

const RESERVED: [&str; 4] = [BOS, EOS, SEP, UNK];

/// Token <-> id bijection. Ids 0..4 are the reserved BOS, EOS, SEP and UNK
/// tokens; ordinary tokens follow in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, TokenId>,
}

impl Vocabulary {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let ordinary: BTreeSet<String> = tokens
            .into_iter()
            .map(|t| t.as_ref().to_string())
            .filter(|t| !RESERVED.contains(&t.as_str()))
            .collect();
        let all = RESERVED.iter().map(|s| s.to_string()).chain(ordinary);
        Self::from_ordered(all.collect()).expect("reserved tokens present and unique")
    }

    /// Rebuilds a vocabulary from an explicit id-ordered token list, as stored
    /// in a model file. The first four entries must be the reserved tokens.
    pub(crate) fn from_ordered(tokens: Vec<String>) -> Option<Self> {
        if tokens.len() < RESERVED.len() || tokens[..4] != RESERVED {
            return None;
        }
        let ids: HashMap<String, TokenId> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TokenId(i as u32)))
            .collect();
        (ids.len() == tokens.len()).then_some(Vocabulary { tokens, ids })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> TokenId {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id.index()).map(String::as_str)
    }

    pub fn contains_id(&self, id: TokenId) -> bool {
        id.index() < self.tokens.len()
    }

    pub fn is_reserved(&self, id: TokenId) -> bool {
        id.index() < RESERVED.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}
