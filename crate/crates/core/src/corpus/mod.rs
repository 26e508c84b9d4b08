//! Gold corpus ingestion and the annotation-record file schema.
//!
//! Two column formats are supported: tab-separated CoNLL-2009 (dependency-
//! based, single-token arguments) and the star-notation props layout used by
//! the span-based sets. Loading rejects sentences whose tokens contain
//! literal tag sequences, since the tag grammar has no escaping.

mod conll09;
mod export;
mod props;

pub use export::{export_training, ExportConfig, RecordKind, TrainingRecord};

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{
    triples_of, validate_structure, Language, PredicateArgumentStructure, Sentence, SrlTriple,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed corpus ({path}:{line}): {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Template(#[from] crate::prompting::TemplateError),
}

impl CorpusError {
    fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> Self {
        CorpusError::Malformed {
            path: path.display().to_string(),
            line,
            reason: reason.into(),
        }
    }
}

/// One gold sentence with its predicate-argument structures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldSentence {
    pub sentence: Sentence,
    pub structures: Vec<PredicateArgumentStructure>,
}

impl GoldSentence {
    pub fn predicate_tokens(&self) -> BTreeSet<usize> {
        self.structures.iter().map(|s| s.predicate.token).collect()
    }

    pub fn triples(&self) -> BTreeSet<SrlTriple> {
        triples_of(&self.structures)
    }
}

/// Detects Chinese sentences by CJK content.
pub(crate) fn detect_language(tokens: &[String]) -> Language {
    let cjk = tokens.iter().any(|t| {
        t.chars().any(|c| {
            matches!(c,
                '\u{4E00}'..='\u{9FFF}'
                | '\u{3400}'..='\u{4DBF}'
                | '\u{F900}'..='\u{FAFF}'
                | '\u{3000}'..='\u{303F}'
                | '\u{FF00}'..='\u{FFEF}')
        })
    });
    if cjk {
        Language::Chinese
    } else {
        Language::English
    }
}

/// Rejects tokens the tag grammar cannot carry.
fn check_tag_conflicts(path: &Path, line: usize, tokens: &[String]) -> Result<(), CorpusError> {
    for token in tokens {
        if let Some(fragment) = crate::tagging::tag_conflict(token) {
            return Err(CorpusError::malformed(
                path,
                line,
                format!("token {token:?} contains the reserved tag sequence {fragment:?}"),
            ));
        }
    }
    Ok(())
}

fn check_structures(
    path: &Path,
    line: usize,
    gold: &GoldSentence,
) -> Result<(), CorpusError> {
    for structure in &gold.structures {
        let violations = validate_structure(structure, gold.sentence.len());
        if let Some(v) = violations.first() {
            return Err(CorpusError::malformed(
                path,
                line,
                format!(
                    "predicate {:?}: {v}",
                    gold.sentence.surface(structure.predicate.token.min(gold.sentence.len() - 1))
                ),
            ));
        }
    }
    Ok(())
}

/// Loads the tab-separated CoNLL-2009 format. Predicates come from the
/// FILLPRED/PRED columns with the sense suffix stripped, and each APRED
/// column yields single-token argument spans for its predicate.
pub fn load_conll09(path: &Path) -> Result<Vec<GoldSentence>, CorpusError> {
    conll09::load(path)
}

/// Loads the props star-notation column format: FORM, predicate lemma or
/// `-`, then one bracket column per predicate. The `(V*)` cell gives the
/// predicate token; bracketed segments become token spans.
pub fn load_props(path: &Path) -> Result<Vec<GoldSentence>, CorpusError> {
    props::load(path)
}

/// Which on-disk corpus format a file appears to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Conll09,
    Props,
    AnnotationJsonl,
}

/// Sniffs the format from the first non-blank line.
pub fn sniff_format(path: &Path) -> Result<CorpusFormat, CorpusError> {
    let reader = BufReader::new(fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?);
    for line in reader.lines() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('{') {
            return Ok(CorpusFormat::AnnotationJsonl);
        }
        if line.matches('\t').count() >= 13 {
            return Ok(CorpusFormat::Conll09);
        }
        return Ok(CorpusFormat::Props);
    }
    Err(CorpusError::malformed(path, 0, "empty file"))
}

/// Loads a token-level gold corpus, sniffing between the column formats.
pub fn load_auto(path: &Path) -> Result<Vec<GoldSentence>, CorpusError> {
    match sniff_format(path)? {
        CorpusFormat::Conll09 => load_conll09(path),
        CorpusFormat::Props => load_props(path),
        CorpusFormat::AnnotationJsonl => Err(CorpusError::malformed(
            path,
            0,
            "annotation JSONL carries no tokens; a column-format corpus is required here",
        )),
    }
}

/// One line of the annotation output file: the pipeline's predictions for a
/// sentence, also used as the gold JSONL mirror.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub id: String,
    pub predicates: Vec<usize>,
    pub structures: Vec<StructureRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureRecord {
    pub predicate: usize,
    pub arguments: Vec<ArgumentRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArgumentRecord {
    pub start: usize,
    pub end: usize,
    pub role: String,
}

impl AnnotationRecord {
    pub fn from_structures(
        id: impl Into<String>,
        structures: &[PredicateArgumentStructure],
    ) -> Self {
        AnnotationRecord {
            id: id.into(),
            predicates: structures.iter().map(|s| s.predicate.token).collect(),
            structures: structures
                .iter()
                .map(|s| StructureRecord {
                    predicate: s.predicate.token,
                    arguments: s
                        .arguments
                        .iter()
                        .map(|a| ArgumentRecord {
                            start: a.span.start,
                            end: a.span.end,
                            role: a.role.rendered(),
                        })
                        .collect(),
                })
                .collect(),
            trace: None,
        }
    }

    pub fn triples(&self) -> Result<BTreeSet<SrlTriple>, crate::types::RoleLabelError> {
        let mut out = BTreeSet::new();
        for s in &self.structures {
            for a in &s.arguments {
                out.insert(SrlTriple {
                    predicate_token: s.predicate,
                    argument: crate::types::Span::new(a.start, a.end),
                    role: crate::types::RoleLabel::parse(&a.role)?,
                });
            }
        }
        Ok(out)
    }
}

/// Reads an annotation JSONL file into per-sentence records.
pub fn load_annotation_jsonl(path: &Path) -> Result<Vec<AnnotationRecord>, CorpusError> {
    let reader = BufReader::new(fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?);
    let mut out = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AnnotationRecord = serde_json::from_str(&line)
            .map_err(|e| CorpusError::malformed(path, line_no + 1, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

/// Per-sentence triple sets from either a column-format gold corpus or an
/// annotation JSONL file.
pub fn load_triples_auto(path: &Path) -> Result<BTreeMap<String, BTreeSet<SrlTriple>>, CorpusError> {
    match sniff_format(path)? {
        CorpusFormat::AnnotationJsonl => {
            let mut out = BTreeMap::new();
            for record in load_annotation_jsonl(path)? {
                let triples = record
                    .triples()
                    .map_err(|e| CorpusError::malformed(path, 0, e.to_string()))?;
                out.insert(record.id, triples);
            }
            Ok(out)
        }
        _ => {
            let gold = load_auto(path)?;
            Ok(gold
                .into_iter()
                .map(|g| (g.sentence.id.clone(), g.triples()))
                .collect())
        }
    }
}

/// Splits a corpus file into per-sentence text blocks without reparsing:
/// lines for JSONL, blank-line-separated blocks for the column formats.
/// Used by subsampling so the output stays in the input format verbatim.
pub fn sentence_blocks(path: &Path) -> Result<Vec<String>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format = sniff_format(path)?;
    let mut blocks = Vec::new();
    match format {
        CorpusFormat::AnnotationJsonl => {
            for line in text.lines() {
                if !line.trim().is_empty() {
                    blocks.push(line.to_string());
                }
            }
        }
        _ => {
            let mut current = String::new();
            for line in text.lines() {
                if line.trim().is_empty() {
                    if !current.is_empty() {
                        blocks.push(std::mem::take(&mut current));
                    }
                } else {
                    current.push_str(line);
                    current.push('\n');
                }
            }
            if !current.is_empty() {
                blocks.push(current);
            }
        }
    }
    Ok(blocks)
}

/// Strips a trailing `.NN` sense suffix from a PRED value.
pub(crate) fn strip_sense(pred: &str) -> &str {
    match pred.rsplit_once('.') {
        Some((lemma, sense))
            if !lemma.is_empty() && !sense.is_empty() && sense.chars().all(|c| c.is_ascii_digit()) =>
        {
            lemma
        }
        _ => pred,
    }
}
