//! Rule-based tweet normalization.
//!
//! Three composable steps, each deterministic and idempotent:
//!
//! - [`selective_lowercase`]: lowercase every token except whole-word
//!   uppercase tokens (at least two alphabetic characters, all uppercase),
//!   which are kept as an emphasis signal.
//! - [`strip_noise`]: drop URL tokens, @-username tokens, and standalone
//!   decimal-number tokens, then remove punctuation characters (Unicode `P*`
//!   categories) from the remaining tokens. Emoji and other symbols pass
//!   through; a hashtag loses its `#` but keeps the tag word.
//! - [`remove_stopwords`]: drop tokens whose case-folded form is in the
//!   stopword list.
//!
//! Tokens are whitespace-delimited and rejoined with single spaces, so the
//! steps never introduce characters beyond the space joiner (and lowercased
//! forms of input characters). Stemming and lemmatization are deliberately
//! not offered. Encoder-specific start/end tokens are the tokenizer's job,
//! never inserted here.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

/// Bundled English stopword list (one token per line, `#` comments).
const STOPWORDS_EN: &str = include_str!("../data/stopwords_en.txt");

/// Version tag of the bundled list, recorded in run logs.
pub const STOPWORDS_VERSION: &str = "snowball-english-v1";

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("stopword removal is enabled but the stopword list is empty")]
    EmptyStopwordList,
    #[error("unknown preprocessing step {name:?}")]
    UnknownStep { name: String },
    #[error("step_order {order:?} is not a permutation of the enabled steps {enabled:?}")]
    StepOrderMismatch {
        order: Vec<Step>,
        enabled: Vec<Step>,
    },
}

/// The three normalization steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    SelectiveLowercase,
    StripNoise,
    RemoveStopwords,
}

impl Step {
    pub fn name(self) -> &'static str {
        match self {
            Step::SelectiveLowercase => "selective_lowercase",
            Step::StripNoise => "strip_noise",
            Step::RemoveStopwords => "remove_stopwords",
        }
    }

    pub fn parse(name: &str) -> Result<Step, PreprocessError> {
        match name.trim() {
            "selective_lowercase" => Ok(Step::SelectiveLowercase),
            "strip_noise" => Ok(Step::StripNoise),
            "remove_stopwords" => Ok(Step::RemoveStopwords),
            other => Err(PreprocessError::UnknownStep {
                name: other.to_string(),
            }),
        }
    }
}

/// Which steps run, in what order, with which stopword list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub enable_case: bool,
    pub enable_stopwords: bool,
    pub enable_clean: bool,
    pub stopword_list: BTreeSet<String>,
    pub step_order: Vec<Step>,
}

impl Default for PreprocessConfig {
    fn default() -> PreprocessConfig {
        PreprocessConfig {
            enable_case: true,
            enable_stopwords: true,
            enable_clean: true,
            stopword_list: default_stopwords(),
            step_order: alloc::vec![
                Step::SelectiveLowercase,
                Step::StripNoise,
                Step::RemoveStopwords,
            ],
        }
    }
}

impl PreprocessConfig {
    /// A config with every step disabled (identity pipeline).
    pub fn disabled() -> PreprocessConfig {
        PreprocessConfig {
            enable_case: false,
            enable_stopwords: false,
            enable_clean: false,
            stopword_list: BTreeSet::new(),
            step_order: Vec::new(),
        }
    }

    fn enabled_steps(&self) -> Vec<Step> {
        let mut steps = Vec::new();
        if self.enable_case {
            steps.push(Step::SelectiveLowercase);
        }
        if self.enable_clean {
            steps.push(Step::StripNoise);
        }
        if self.enable_stopwords {
            steps.push(Step::RemoveStopwords);
        }
        steps
    }

    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.enable_stopwords && self.stopword_list.is_empty() {
            return Err(PreprocessError::EmptyStopwordList);
        }
        let enabled = self.enabled_steps();
        let mut order = self.step_order.clone();
        order.sort();
        let mut expected = enabled.clone();
        expected.sort();
        if order != expected {
            return Err(PreprocessError::StepOrderMismatch {
                order: self.step_order.clone(),
                enabled,
            });
        }
        Ok(())
    }
}

/// Parses a stopword list: one token per line, `#` starts a comment,
/// entries are case-folded.
pub fn parse_stopword_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|line| match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        })
        .map(str::trim)
        .filter(|line| !line.is_empty())
        .map(|word| word.to_lowercase())
        .collect()
}

/// The bundled English list.
pub fn default_stopwords() -> BTreeSet<String> {
    parse_stopword_list(STOPWORDS_EN)
}

fn is_exempt_from_lowercasing(token: &str) -> bool {
    let mut alphabetic = 0usize;
    for c in token.chars() {
        if c.is_alphabetic() {
            alphabetic += 1;
            if !c.is_uppercase() {
                return false;
            }
        }
    }
    alphabetic >= 2
}

/// Lowercases every whitespace token except whole-word uppercase ones.
pub fn selective_lowercase(text: &str) -> String {
    let tokens: Vec<String> = text
        .split_whitespace()
        .map(|token| {
            if is_exempt_from_lowercasing(token) {
                token.to_string()
            } else {
                token.to_lowercase()
            }
        })
        .collect();
    tokens.join(" ")
}

fn is_url_token(token: &str) -> bool {
    let folded = token.to_lowercase();
    folded.starts_with("http://")
        || folded.starts_with("https://")
        || folded.starts_with("www.")
}

fn is_mention_token(token: &str) -> bool {
    token.len() > 1 && token.starts_with('@')
}

/// Standalone decimal number: digits, one dot, digits.
fn is_decimal_token(token: &str) -> bool {
    let Some((whole, frac)) = token.split_once('.') else {
        return false;
    };
    !whole.is_empty()
        && !frac.is_empty()
        && whole.chars().all(|c| c.is_ascii_digit())
        && frac.chars().all(|c| c.is_ascii_digit())
}

fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ClosePunctuation
            | GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Removes URLs, @-usernames, standalone decimal numbers, and punctuation
/// characters.
pub fn strip_noise(text: &str) -> String {
    let mut kept: Vec<String> = Vec::new();
    for token in text.split_whitespace() {
        if is_url_token(token) || is_mention_token(token) || is_decimal_token(token) {
            continue;
        }
        let cleaned: String = token.chars().filter(|&c| !is_punctuation(c)).collect();
        if !cleaned.is_empty() {
            kept.push(cleaned);
        }
    }
    kept.join(" ")
}

/// Drops tokens whose case-folded form is in the list.
pub fn remove_stopwords(
    text: &str,
    stopword_list: &BTreeSet<String>,
) -> Result<String, PreprocessError> {
    if stopword_list.is_empty() {
        return Err(PreprocessError::EmptyStopwordList);
    }
    let kept: Vec<&str> = text
        .split_whitespace()
        .filter(|token| !stopword_list.contains(&token.to_lowercase()))
        .collect();
    Ok(kept.join(" "))
}

/// Applies the enabled steps in the configured order.
pub fn preprocess(text: &str, config: &PreprocessConfig) -> Result<String, PreprocessError> {
    config.validate()?;
    let mut current = text.to_string();
    for step in &config.step_order {
        current = match step {
            Step::SelectiveLowercase => selective_lowercase(&current),
            Step::StripNoise => strip_noise(&current),
            Step::RemoveStopwords => remove_stopwords(&current, &config.stopword_list)?,
        };
    }
    Ok(current)
}

/// A validated config, for call sites that normalize many texts.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    config: PreprocessConfig,
}

impl Preprocessor {
    pub fn new(config: PreprocessConfig) -> Result<Preprocessor, PreprocessError> {
        config.validate()?;
        Ok(Preprocessor { config })
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.config
    }

    pub fn run(&self, text: &str) -> String {
        // Config was validated in `new`; steps cannot fail afterwards.
        preprocess(text, &self.config).expect("validated preprocess config")
    }
}
