//! Two-stage retrieval-augmented semantic role labeling through a pluggable
//! chat-completion backend.
//!
//! The pipeline identifies predicates with a rule-based retrieval agent over
//! a frame-lexicon knowledge database, labels arguments per predicate with
//! role sets and frame descriptions in the prompt, and iteratively
//! self-corrects by feeding the model its own output for review. Everything
//! the model returns travels through an inline-tag codec that reports typed
//! deviations instead of failing, so malformed output is repaired rather
//! than discarded.
//!
//! Companion pieces: an exact-match tuple scorer (span- and dependency-based),
//! corpus readers for the common column formats, and a supervised
//! fine-tuning-data exporter that synthesizes gold self-correction turns.

pub mod frame_db;
pub mod prompting;
pub mod retrieval;
pub mod scorer;
pub mod tagging;
pub mod types;

pub use frame_db::{lemmatize, FrameDb, FrameDbError, FrameEntry, Frameset, RoleSet};
pub use tagging::{
    parse_arguments, parse_predicates, render_arguments, render_predicates, AllowedRoles,
    Deviation, DeviationKind, TagStage, TaggedText,
};
pub use types::{
    triples_of, validate_structure, ArgumentAnnotation, Language, PredicateArgumentStructure,
    PredicateInstance, RoleLabel, RoleKind, RolePrefix, Sentence, Span, SrlTriple, Token,
    Violation,
};
