//! Bidirectional codec between span annotations and inline-tagged text.
//!
//! The tag grammar is bit-exact: predicates are wrapped `@@`...`##`,
//! arguments `<LABEL>`...`</LABEL>` with the rendered role label (prefix
//! included, e.g. `R-A0`). There is no escaping mechanism; corpus loading
//! rejects sentences whose tokens already contain tag sequences.
//!
//! Parsing is total: arbitrary model output never aborts. Every irregularity
//! becomes a typed [`Deviation`] and the best-effort structure is returned
//! alongside, so the self-correction loop can route problems back to the
//! model instead of failing the sentence.

mod parse;

pub use parse::{parse_arguments, parse_predicates, AllowedRoles};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{
    validate_structure, PredicateArgumentStructure, Sentence, Violation,
};

/// Which tag inventory a rendered string carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagStage {
    /// Only `@@`...`##` predicate tags.
    Predicate,
    /// Predicate tags plus `<LABEL>`...`</LABEL>` argument tags.
    Argument,
}

/// A rendered, inline-tagged sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedText {
    pub text: String,
    pub stage: TagStage,
}

impl fmt::Display for TaggedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Everything that can be wrong with a parsed model response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeviationKind {
    /// Response text disagrees with the source sentence.
    TextMismatch,
    /// An argument tag opened without closing, or closed under another name.
    UnbalancedTag,
    /// A structurally broken tag: stray close, unterminated or empty
    /// predicate tag, invalid role label.
    MalformedTag,
    /// A role label outside the allowed set (the argument is kept).
    UnknownRole,
    /// A predicate tag wrapping more than one token.
    MultiTokenPredicate,
    /// The requested predicate tag is absent from an argument response.
    MissingPredicate,
    /// Argument spans overlap; the later span is dropped.
    OverlappingArguments,
}

/// One typed problem found while parsing a response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deviation {
    pub kind: DeviationKind,
    pub message: String,
    /// Byte offset into the raw response, when one is attributable.
    pub location: Option<usize>,
}

impl Deviation {
    pub(crate) fn new(kind: DeviationKind, message: impl Into<String>, location: Option<usize>) -> Self {
        Deviation {
            kind,
            message: message.into(),
            location,
        }
    }
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)?;
        if let Some(at) = self.location {
            write!(f, " (at byte {at})")?;
        }
        Ok(())
    }
}

/// Raised by [`render_arguments`] when the structure violates its invariants.
#[derive(Debug, Error)]
#[error("invalid structure: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct InvalidStructure {
    pub violations: Vec<Violation>,
}

/// Renders a sentence with the given predicate tokens wrapped `@@`...`##`.
///
/// Tokens are joined by a single space for English and no separator for
/// Chinese. Indices must be valid for the sentence.
pub fn render_predicates(sentence: &Sentence, predicates: &BTreeSet<usize>) -> TaggedText {
    if let Some(&max) = predicates.iter().next_back() {
        assert!(max < sentence.len(), "predicate index {max} out of bounds");
    }
    let sep = sentence.language.separator();
    let mut text = String::new();
    for token in sentence.tokens() {
        if token.index > 0 {
            text.push_str(sep);
        }
        if predicates.contains(&token.index) {
            text.push_str("@@");
            text.push_str(&token.surface);
            text.push_str("##");
        } else {
            text.push_str(&token.surface);
        }
    }
    TaggedText {
        text,
        stage: TagStage::Predicate,
    }
}

/// Renders one predicate's argument structure with role tags around each
/// argument span and the predicate wrapped `@@`...`##`.
pub fn render_arguments(
    sentence: &Sentence,
    structure: &PredicateArgumentStructure,
) -> Result<TaggedText, InvalidStructure> {
    let violations = validate_structure(structure, sentence.len());
    if !violations.is_empty() {
        return Err(InvalidStructure { violations });
    }
    let mut opens = vec![None; sentence.len()];
    let mut closes = vec![None; sentence.len()];
    for arg in &structure.arguments {
        let label = arg.role.rendered();
        opens[arg.span.start] = Some(label.clone());
        closes[arg.span.end] = Some(label);
    }
    let sep = sentence.language.separator();
    let mut text = String::new();
    for token in sentence.tokens() {
        let i = token.index;
        if i > 0 {
            text.push_str(sep);
        }
        if let Some(label) = &opens[i] {
            text.push('<');
            text.push_str(label);
            text.push('>');
        }
        if i == structure.predicate.token {
            text.push_str("@@");
            text.push_str(&token.surface);
            text.push_str("##");
        } else {
            text.push_str(&token.surface);
        }
        if let Some(label) = &closes[i] {
            text.push_str("</");
            text.push_str(label);
            text.push('>');
        }
    }
    Ok(TaggedText {
        text,
        stage: TagStage::Argument,
    })
}

/// Checks a corpus token for literal tag sequences the grammar cannot carry.
/// Returns the offending fragment, if any.
pub fn tag_conflict(token: &str) -> Option<&'static str> {
    if token.contains("@@") {
        return Some("@@");
    }
    if token.contains("##") {
        return Some("##");
    }
    if parse::contains_role_tag(token) {
        return Some("<label>");
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{
        ArgumentAnnotation, Language, PredicateInstance, RoleLabel, Span,
    };

    fn sugar_sentence() -> Sentence {
        Sentence::from_space_separated(
            "t6c1",
            "That country recently bought 200,000 tons of sugar .",
        )
        .unwrap()
    }

    fn arg(start: usize, end: usize, role: &str) -> ArgumentAnnotation {
        ArgumentAnnotation {
            span: Span::new(start, end),
            role: RoleLabel::parse(role).unwrap(),
        }
    }

    fn structure(
        s: &Sentence,
        pred: usize,
        args: Vec<ArgumentAnnotation>,
    ) -> PredicateArgumentStructure {
        PredicateArgumentStructure {
            predicate: PredicateInstance {
                token: pred,
                surface: s.surface(pred).to_string(),
                lemma: s.surface(pred).to_lowercase(),
            },
            arguments: args,
        }
    }

    #[test]
    fn render_predicate_tags() {
        let s = sugar_sentence();
        let tagged = render_predicates(&s, &BTreeSet::from([3]));
        assert_eq!(
            tagged.text,
            "That country recently @@bought## 200,000 tons of sugar ."
        );
    }

    #[test]
    fn render_empty_predicate_set_is_identity() {
        let s = sugar_sentence();
        let tagged = render_predicates(&s, &BTreeSet::new());
        assert_eq!(tagged.text, s.text());
    }

    #[test]
    fn render_chinese_without_separators() {
        let s = Sentence::new(
            "zh1",
            Language::Chinese,
            ["集团", "在", "上海", "追加", "投资", "二千四百万", "美元", "。"],
        )
        .unwrap();
        let tagged = render_predicates(&s, &BTreeSet::from([3]));
        assert_eq!(tagged.text, "集团在上海@@追加##投资二千四百万美元。");
    }

    #[test]
    fn render_argument_tags() {
        let s = sugar_sentence();
        let st = structure(&s, 3, vec![arg(0, 1, "A0"), arg(2, 2, "ADV"), arg(4, 7, "A1")]);
        let tagged = render_arguments(&s, &st).unwrap();
        assert_eq!(
            tagged.text,
            "<A0>That country</A0> <ADV>recently</ADV> @@bought## <A1>200,000 tons of sugar</A1> ."
        );
    }

    #[test]
    fn render_no_arguments_tags_only_predicate() {
        let s = sugar_sentence();
        let st = structure(&s, 3, vec![]);
        let tagged = render_arguments(&s, &st).unwrap();
        assert_eq!(
            tagged.text,
            "That country recently @@bought## 200,000 tons of sugar ."
        );
    }

    #[test]
    fn render_single_token_span_inside_phrase() {
        let s = Sentence::from_space_separated("t6c2", "That 's the biggest risk of all .").unwrap();
        let st = structure(&s, 4, vec![arg(3, 3, "EXT")]);
        let tagged = render_arguments(&s, &st).unwrap();
        assert_eq!(tagged.text, "That 's the <EXT>biggest</EXT> @@risk## of all .");
    }

    #[test]
    fn render_rejects_invalid_structure() {
        let s = sugar_sentence();
        let st = structure(&s, 3, vec![arg(0, 2, "A0"), arg(2, 4, "A1")]);
        let err = render_arguments(&s, &st).unwrap_err();
        assert!(!err.violations.is_empty());
    }

    #[test]
    fn tag_conflict_detection() {
        assert_eq!(tag_conflict("a@@b"), Some("@@"));
        assert_eq!(tag_conflict("x##"), Some("##"));
        assert_eq!(tag_conflict("<A0>"), Some("<label>"));
        assert_eq!(tag_conflict("</TMP>"), Some("<label>"));
        assert_eq!(tag_conflict("a<b"), None);
        assert_eq!(tag_conflict("5<6>"), None);
        assert_eq!(tag_conflict("ordinary"), None);
    }
}
