//! Token counting.
//!
//! The default counter approximates BPE token counts from whitespace-separated
//! words (4/3 tokens per word, rounded up). Exact tokenizers plug in through
//! [`TokenCounter`].

use serde::{Deserialize, Serialize};

pub trait TokenCounter: Send + Sync {
    fn count(&self, text: &str) -> usize;
}

/// `ceil(words * 4 / 3)` where words are whitespace-separated.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordApprox;

impl TokenCounter for WordApprox {
    fn count(&self, text: &str) -> usize {
        let words = text.split_whitespace().count();
        (words * 4).div_ceil(3)
    }
}

/// One token per whitespace-separated word.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceWords;

impl TokenCounter for WhitespaceWords {
    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

impl<F> TokenCounter for F
where
    F: Fn(&str) -> usize + Send + Sync,
{
    fn count(&self, text: &str) -> usize {
        self(text)
    }
}

/// Named tokenizer selection for configs and the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenizerSpec {
    #[default]
    WordApprox,
    Whitespace,
}

impl TokenizerSpec {
    pub fn counter(self) -> &'static dyn TokenCounter {
        match self {
            TokenizerSpec::WordApprox => &WordApprox,
            TokenizerSpec::Whitespace => &WhitespaceWords,
        }
    }
}

impl std::str::FromStr for TokenizerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "word-approx" => Ok(TokenizerSpec::WordApprox),
            "whitespace" => Ok(TokenizerSpec::Whitespace),
            other => Err(format!("unknown tokenizer {other:?}")),
        }
    }
}

pub fn count_tokens(text: &str, tokenizer: TokenizerSpec) -> usize {
    tokenizer.counter().count(text)
}
