//! Domain types for sentences, spans, roles, and predicate-argument structures.
//!
//! Everything here is immutable after construction and cheap to share across
//! worker threads. Annotation ground truth and predictions alike are reduced
//! to [`SrlTriple`] sets for evaluation.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Corpus language. Controls token joining ("word word" vs "词词") and
/// lemmatizer behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    English,
    Chinese,
}

impl Language {
    /// Separator inserted between tokens when rendering sentence text.
    pub fn separator(self) -> &'static str {
        match self {
            Language::English => " ",
            Language::Chinese => "",
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Language::English => "en",
            Language::Chinese => "zh",
        }
    }
}

#[derive(Debug, Error)]
pub enum SentenceError {
    #[error("sentence {id:?} has no tokens")]
    EmptyTokens { id: String },
    #[error("sentence {id:?}, token {index}: surface is empty or contains whitespace: {surface:?}")]
    BadSurface {
        id: String,
        index: usize,
        surface: String,
    },
}

/// A single token of a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 0-based position within the parent sentence.
    pub index: usize,
    pub surface: String,
    /// Base form, when a corpus provides one. The rule lemmatizer does not
    /// read this; it works from the surface.
    pub lemma: Option<String>,
}

/// A tokenized sentence with a stable identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub language: Language,
    tokens: Vec<Token>,
}

impl Sentence {
    /// Builds a sentence from token surfaces, assigning indices 0..n-1.
    pub fn new<S: Into<String>>(
        id: impl Into<String>,
        language: Language,
        surfaces: impl IntoIterator<Item = S>,
    ) -> Result<Self, SentenceError> {
        let id = id.into();
        let tokens: Vec<Token> = surfaces
            .into_iter()
            .enumerate()
            .map(|(index, s)| Token {
                index,
                surface: s.into(),
                lemma: None,
            })
            .collect();
        if tokens.is_empty() {
            return Err(SentenceError::EmptyTokens { id });
        }
        for t in &tokens {
            if t.surface.is_empty() || t.surface.chars().any(char::is_whitespace) {
                return Err(SentenceError::BadSurface {
                    id,
                    index: t.index,
                    surface: t.surface.clone(),
                });
            }
        }
        Ok(Sentence {
            id,
            language,
            tokens,
        })
    }

    /// Splits English text on whitespace. Convenience for tests and fixtures.
    pub fn from_space_separated(
        id: impl Into<String>,
        text: &str,
    ) -> Result<Self, SentenceError> {
        Sentence::new(id, Language::English, text.split_whitespace())
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surface(&self, index: usize) -> &str {
        &self.tokens[index].surface
    }

    /// Attaches a corpus-provided lemma to one token.
    pub fn set_lemma(&mut self, index: usize, lemma: impl Into<String>) {
        self.tokens[index].lemma = Some(lemma.into());
    }

    /// The untagged sentence text: tokens joined by the language separator.
    pub fn text(&self) -> String {
        let sep = self.language.separator();
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push_str(sep);
            }
            out.push_str(&t.surface);
        }
        out
    }
}

/// Token-index span, end-inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    /// `start` must not exceed `end`; bounds against a sentence are checked
    /// by [`validate_structure`].
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start <= end, "span start {start} exceeds end {end}");
        Span { start, end }
    }

    pub fn width(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// R-/C- prefix of a role label.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub enum RolePrefix {
    #[default]
    None,
    /// Renders as `R-`: the argument references another argument.
    Reference,
    /// Renders as `C-`: a discontinuous continuation of another argument.
    Continuation,
}

impl RolePrefix {
    pub fn as_str(self) -> &'static str {
        match self {
            RolePrefix::None => "",
            RolePrefix::Reference => "R-",
            RolePrefix::Continuation => "C-",
        }
    }
}

/// Numbered (predicate-specific) vs adjunct (predicate-independent) role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RoleKind {
    Core,
    Adjunct,
}

#[derive(Debug, Error)]
pub enum RoleLabelError {
    #[error("role label base {0:?} is not uppercase alphanumeric")]
    BadBase(String),
}

/// A semantic role label such as `A0`, `ARG1`, `R-A0`, or `TMP`.
///
/// The base spelling is kept verbatim (`A0` and `ARG0` stay distinct here;
/// the scorer normalizes them when matching). `kind` is derived from the
/// base: the numbered-argument family (A0-A5, ARG0-ARG5, ARGA and its short
/// spelling AA) is core, everything else adjunct.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoleLabel {
    base: String,
    prefix: RolePrefix,
    kind: RoleKind,
}

impl RoleLabel {
    pub fn new(base: impl Into<String>, prefix: RolePrefix) -> Result<Self, RoleLabelError> {
        let base = base.into();
        let mut chars = base.chars();
        let head_ok = chars.next().is_some_and(|c| c.is_ascii_uppercase());
        let tail_ok = chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit());
        if !head_ok || !tail_ok {
            return Err(RoleLabelError::BadBase(base));
        }
        let kind = if is_core_base(&base) {
            RoleKind::Core
        } else {
            RoleKind::Adjunct
        };
        Ok(RoleLabel { base, prefix, kind })
    }

    pub fn core(base: impl Into<String>) -> Result<Self, RoleLabelError> {
        let label = RoleLabel::new(base, RolePrefix::None)?;
        debug_assert_eq!(label.kind, RoleKind::Core);
        Ok(label)
    }

    /// Parses a rendered label, peeling an `R-`/`C-` prefix and normalizing
    /// `ARGM-`/`AM-` adjunct spellings to their bare base (`ARGM-TMP` -> `TMP`).
    pub fn parse(rendered: &str) -> Result<Self, RoleLabelError> {
        let upper = rendered.trim().to_ascii_uppercase();
        let (prefix, rest) = if let Some(rest) = upper.strip_prefix("R-") {
            (RolePrefix::Reference, rest)
        } else if let Some(rest) = upper.strip_prefix("C-") {
            (RolePrefix::Continuation, rest)
        } else {
            (RolePrefix::None, upper.as_str())
        };
        let base = rest
            .strip_prefix("ARGM-")
            .or_else(|| rest.strip_prefix("AM-"))
            .unwrap_or(rest);
        RoleLabel::new(base, prefix)
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn prefix(&self) -> RolePrefix {
        self.prefix
    }

    pub fn kind(&self) -> RoleKind {
        self.kind
    }

    /// The rendered form used in tags and reports, e.g. `R-A0`.
    pub fn rendered(&self) -> String {
        format!("{}{}", self.prefix.as_str(), self.base)
    }

    /// Canonical form for exact-match scoring: uppercase with the long
    /// numbered spellings squashed (`ARG0` == `A0`, `ARGA` == `AA`).
    pub fn canonical(&self) -> String {
        format!("{}{}", self.prefix.as_str(), canonical_base(&self.base))
    }
}

impl fmt::Display for RoleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.prefix.as_str(), self.base)
    }
}

impl Serialize for RoleLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.rendered())
    }
}

impl<'de> Deserialize<'de> for RoleLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        RoleLabel::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Whether the base belongs to the numbered-argument family.
fn is_core_base(base: &str) -> bool {
    matches!(
        base,
        "A0" | "A1"
            | "A2"
            | "A3"
            | "A4"
            | "A5"
            | "ARG0"
            | "ARG1"
            | "ARG2"
            | "ARG3"
            | "ARG4"
            | "ARG5"
            | "ARGA"
            | "AA"
    )
}

/// Squashes the `ARGN` spellings onto `AN` (and `ARGA` onto `AA`).
pub(crate) fn canonical_base(base: &str) -> String {
    let upper = base.to_ascii_uppercase();
    match upper.as_str() {
        "ARG0" => "A0".to_string(),
        "ARG1" => "A1".to_string(),
        "ARG2" => "A2".to_string(),
        "ARG3" => "A3".to_string(),
        "ARG4" => "A4".to_string(),
        "ARG5" => "A5".to_string(),
        "ARGA" => "AA".to_string(),
        _ => upper,
    }
}

/// One predicate occurrence. Predicates are single tokens; the tag parser
/// rejects multi-word predicate tags with a deviation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateInstance {
    pub token: usize,
    pub surface: String,
    pub lemma: String,
}

/// An argument span with its role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentAnnotation {
    pub span: Span,
    pub role: RoleLabel,
}

/// All arguments of one predicate. Argument spans must be pairwise disjoint
/// and must not cover the predicate token; see [`validate_structure`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateArgumentStructure {
    pub predicate: PredicateInstance,
    pub arguments: Vec<ArgumentAnnotation>,
}

/// The atomic evaluation unit: one (predicate, argument, role) tuple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SrlTriple {
    pub predicate_token: usize,
    pub argument: Span,
    pub role: RoleLabel,
}

/// Flattens structures into the triple set. Duplicates collapse.
pub fn triples_of(structures: &[PredicateArgumentStructure]) -> BTreeSet<SrlTriple> {
    let mut out = BTreeSet::new();
    for s in structures {
        for arg in &s.arguments {
            out.insert(SrlTriple {
                predicate_token: s.predicate.token,
                argument: arg.span,
                role: arg.role.clone(),
            });
        }
    }
    out
}

/// One violated structure invariant; names the offending field and the rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Checks every structure invariant against a sentence of length `n`.
/// Violations are data, not failures: an empty list means the structure is
/// valid.
pub fn validate_structure(s: &PredicateArgumentStructure, n: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    if s.predicate.token >= n {
        out.push(Violation {
            field: "predicate.token".to_string(),
            rule: format!("index {} out of bounds for sentence length {n}", s.predicate.token),
        });
    }
    for (i, arg) in s.arguments.iter().enumerate() {
        let field = format!("arguments[{i}].span");
        if arg.span.start > arg.span.end {
            out.push(Violation {
                field: field.clone(),
                rule: format!("span start {} exceeds end {}", arg.span.start, arg.span.end),
            });
            continue;
        }
        if arg.span.end >= n {
            out.push(Violation {
                field: field.clone(),
                rule: format!("span {} out of bounds for sentence length {n}", arg.span),
            });
        }
        if arg.span.contains(s.predicate.token) {
            out.push(Violation {
                field: field.clone(),
                rule: "argument covers predicate".to_string(),
            });
        }
        for (j, other) in s.arguments.iter().enumerate().skip(i + 1) {
            if arg.span.overlaps(&other.span) {
                let at = arg.span.start.max(other.span.start);
                out.push(Violation {
                    field: format!("arguments[{i}].span / arguments[{j}].span"),
                    rule: format!("spans overlap at token {at}"),
                });
            }
        }
    }
    out
}
