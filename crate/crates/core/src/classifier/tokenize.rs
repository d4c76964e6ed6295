/// Splits text into model tokens.
pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<String>;
}

/// Word-and-symbol tokenizer: runs of alphanumerics and `_` form one token,
/// every other non-whitespace character is a token of its own. Special
/// tokens such as `[SEP]` can never be produced from input text, since the
/// brackets are split off.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimpleTokenizer {
    pub lowercase: bool,
}

impl SimpleTokenizer {
    pub const TEXT: SimpleTokenizer = SimpleTokenizer { lowercase: true };
    pub const CODE: SimpleTokenizer = SimpleTokenizer { lowercase: false };
}

impl Tokenizer for SimpleTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        let mut tokens = Vec::new();
        let mut word = String::new();
        let flush = |word: &mut String, tokens: &mut Vec<String>| {
            if !word.is_empty() {
                tokens.push(std::mem::take(word));
            }
        };
        for c in text.chars() {
            if c.is_alphanumeric() || c == '_' {
                if self.lowercase {
                    word.extend(c.to_lowercase());
                } else {
                    word.push(c);
                }
            } else {
                flush(&mut word, &mut tokens);
                if !c.is_whitespace() {
                    tokens.push(c.to_string());
                }
            }
        }
        flush(&mut word, &mut tokens);
        tokens
    }
}
