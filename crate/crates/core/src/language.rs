use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Source language of a snippet and of the API generated for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Java,
    Python,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unsupported language `{0}` (expected java or python)")]
pub struct UnsupportedLanguage(pub String);

impl Language {
    /// The Stack Overflow tag used to select posts in this language.
    pub fn tag(self) -> &'static str {
        match self {
            Language::Java => "java",
            Language::Python => "python",
        }
    }

    /// Human-facing name used inside prompts.
    pub fn display_name(self) -> &'static str {
        match self {
            Language::Java => "Java",
            Language::Python => "Python",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Language::Java => "java",
            Language::Python => "py",
        }
    }

    /// `method` for Java, `function` for Python.
    pub fn callable_noun(self) -> &'static str {
        match self {
            Language::Java => "method",
            Language::Python => "function",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Language {
    type Err = UnsupportedLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "java" => Ok(Language::Java),
            "python" | "py" => Ok(Language::Python),
            other => Err(UnsupportedLanguage(other.to_string())),
        }
    }
}
