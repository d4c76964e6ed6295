use std::fmt;

use super::tokenize::{SimpleTokenizer, Tokenizer};
use super::EncoderConfig;
use crate::ingest::FileChange;

pub const CLS_TOKEN: &str = "[CLS]";
pub const SEP_TOKEN: &str = "[SEP]";
pub const EOS_TOKEN: &str = "[EOS]";

/// Encoder input for one file: `[CLS] removed-code [SEP] added-code [EOS]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchInput {
    tokens: Vec<String>,
}

impl PatchInput {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn separator_position(&self) -> usize {
        self.tokens
            .iter()
            .position(|t| t == SEP_TOKEN)
            .expect("a patch input always holds a separator")
    }

    pub fn removed(&self) -> &[String] {
        &self.tokens[1..self.separator_position()]
    }

    pub fn added(&self) -> &[String] {
        &self.tokens[self.separator_position() + 1..self.tokens.len() - 1]
    }
}

impl fmt::Display for PatchInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

pub fn build_patch_input(file_change: &FileChange, config: &EncoderConfig) -> PatchInput {
    build_patch_input_with(file_change, config, &SimpleTokenizer::CODE)
}

/// Lays out one file's change as `[CLS] removed [SEP] added [EOS]`. When the
/// result would exceed `max_tokens`, each side keeps at most its first
/// `(max_tokens - 3) / 2` tokens.
pub fn build_patch_input_with(
    file_change: &FileChange,
    config: &EncoderConfig,
    tokenizer: &dyn Tokenizer,
) -> PatchInput {
    let side = |lines: &[String]| -> Vec<String> {
        lines
            .iter()
            .flat_map(|line| tokenizer.tokenize(line))
            .collect()
    };
    let mut removed = side(&file_change.removed_lines);
    let mut added = side(&file_change.added_lines);

    if removed.len() + added.len() + 3 > config.max_tokens {
        let budget = config.max_tokens.saturating_sub(3) / 2;
        removed.truncate(budget);
        added.truncate(budget);
    }

    let mut tokens = Vec::with_capacity(removed.len() + added.len() + 3);
    tokens.push(CLS_TOKEN.to_string());
    tokens.extend(removed);
    tokens.push(SEP_TOKEN.to_string());
    tokens.extend(added);
    tokens.push(EOS_TOKEN.to_string());
    PatchInput { tokens }
}

/// `[CLS] text [EOS]`, truncated to `max_tokens`.
pub fn build_text_input(
    text: &str,
    config: &EncoderConfig,
    tokenizer: &dyn Tokenizer,
) -> Vec<String> {
    let mut tokens = Vec::new();
    tokens.push(CLS_TOKEN.to_string());
    tokens.extend(
        tokenizer
            .tokenize(text)
            .into_iter()
            .take(config.max_tokens.saturating_sub(2)),
    );
    tokens.push(EOS_TOKEN.to_string());
    tokens
}
