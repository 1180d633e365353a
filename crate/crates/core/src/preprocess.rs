//! Normalize raw code text into the token stream both classifiers consume.
//!
//! The pipeline is fixed: split on non-alphanumeric characters, split
//! camelCase/snake_case identifiers, lowercase, then drop numbers, short and
//! long words, and Java keywords.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::PreprocessConfig;
use crate::error::Result;

/// The 50 reserved words of the Java language.
pub const JAVA_RESERVED: [&str; 50] = [
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
];

/// Literal keywords; reserved in practice even though the language spec
/// classifies them as literals.
pub const JAVA_LITERALS: [&str; 3] = ["true", "false", "null"];

/// The stoplist applied at the end of the pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stoplist(BTreeSet<String>);

impl Default for Stoplist {
    fn default() -> Self {
        Self(
            JAVA_RESERVED
                .iter()
                .chain(JAVA_LITERALS.iter())
                .map(|w| (*w).to_string())
                .collect(),
        )
    }
}

impl Stoplist {
    /// Load a stoplist file: one word per line, `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        Ok(Self(words))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Normalized token stream of one snippet or file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub origin_snippet_id: String,
}

/// Remove the license header of a Java source file.
///
/// If the first non-whitespace bytes open a `/* ... */` block comment, that
/// single block is removed; anything else, including later comments, is left
/// alone. An unterminated leading block is removed to end of file with a
/// warning.
pub fn strip_license_header(source: &str) -> String {
    let trimmed_start = source.trim_start();
    if !trimmed_start.starts_with("/*") {
        return source.to_string();
    }
    let leading_ws_len = source.len() - trimmed_start.len();
    match trimmed_start.find("*/") {
        Some(end) => {
            let mut out = String::with_capacity(source.len());
            out.push_str(&source[..leading_ws_len]);
            out.push_str(&trimmed_start[end + 2..]);
            out
        }
        None => {
            log::warn!("unterminated leading block comment; removing to end of file");
            source[..leading_ws_len].to_string()
        }
    }
}

/// Split an identifier at underscores and camel-case boundaries and lowercase
/// the pieces.
///
/// Boundaries sit at lower-to-upper transitions and before the last upper of
/// an upper-case run that is followed by a lower-case letter, so acronyms
/// stay whole: `parseHTTPRequest` becomes `parse`, `http`, `request`.
pub fn split_identifier(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    for piece in word.split('_') {
        if piece.is_empty() {
            continue;
        }
        let chars: Vec<char> = piece.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let prev = chars[i - 1];
            let cur = chars[i];
            let lower_to_upper = prev.is_ascii_lowercase() && cur.is_ascii_uppercase();
            let acronym_end = prev.is_ascii_uppercase()
                && cur.is_ascii_uppercase()
                && chars.get(i + 1).is_some_and(char::is_ascii_lowercase);
            if lower_to_upper || acronym_end {
                out.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        out.push(chars[start..].iter().collect::<String>().to_lowercase());
    }
    out
}

/// Applies the full normalization pipeline with a fixed configuration.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    config: PreprocessConfig,
    stoplist: Stoplist,
}

impl Preprocessor {
    /// Build a preprocessor, loading the stoplist override when configured.
    pub fn new(config: PreprocessConfig) -> Result<Self> {
        let stoplist = match &config.stoplist_path {
            Some(path) => Stoplist::from_file(path)?,
            None => Stoplist::default(),
        };
        Ok(Self { config, stoplist })
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.config
    }

    /// Normalize raw text into tokens.
    ///
    /// Pipeline order: split on non-alphanumeric/non-underscore characters,
    /// split identifiers, lowercase, drop purely numeric tokens, drop tokens
    /// outside `[min_len, max_len]`, drop stoplist words.
    pub fn tokens(&self, raw_text: &str) -> Vec<String> {
        raw_text
            .split(|c: char| !c.is_ascii_alphanumeric() && c != '_')
            .filter(|piece| !piece.is_empty())
            .flat_map(|piece| split_identifier(piece))
            .filter(|token| !token.chars().all(|c| c.is_ascii_digit()))
            .filter(|token| {
                token.chars().count() >= self.config.min_len
                    && token.chars().count() <= self.config.max_len
            })
            .filter(|token| !self.stoplist.contains(token))
            .collect()
    }

    /// Normalize raw text, tagging the output with its origin id.
    pub fn token_sequence(&self, raw_text: &str, origin_snippet_id: &str) -> TokenSequence {
        TokenSequence {
            tokens: self.tokens(raw_text),
            origin_snippet_id: origin_snippet_id.to_string(),
        }
    }
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self {
            config: PreprocessConfig::dataset(),
            stoplist: Stoplist::default(),
        }
    }
}
