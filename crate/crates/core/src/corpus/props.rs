//! Props star-notation reader for the span-based corpora.
//!
//! Normalized column layout: FORM, predicate lemma or `-`, then one bracket
//! column per predicate. Cells are `(LABEL*`, `*`, `*)`, or `(LABEL*)`;
//! nesting is rejected. The `(V*)` cell marks the predicate token and is not
//! an argument.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::types::{
    ArgumentAnnotation, PredicateArgumentStructure, PredicateInstance, RoleLabel, Sentence, Span,
};

use super::{check_structures, check_tag_conflicts, detect_language, strip_sense, CorpusError, GoldSentence};

struct Row {
    line: usize,
    form: String,
    lemma: Option<String>,
    cells: Vec<String>,
}

pub(super) fn load(path: &Path) -> Result<Vec<GoldSentence>, CorpusError> {
    let reader = BufReader::new(fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?);
    let mut sentences = Vec::new();
    let mut rows: Vec<Row> = Vec::new();
    let mut block_start = 1usize;
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            if !rows.is_empty() {
                sentences.push(finish(path, block_start, std::mem::take(&mut rows), sentences.len())?);
            }
            block_start = line_no + 1;
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() < 2 {
            return Err(CorpusError::malformed(
                path,
                line_no,
                "expected at least FORM and predicate-lemma columns",
            ));
        }
        rows.push(Row {
            line: line_no,
            form: cols[0].to_string(),
            lemma: (cols[1] != "-").then(|| cols[1].to_string()),
            cells: cols[2..].iter().map(|s| s.to_string()).collect(),
        });
    }
    if !rows.is_empty() {
        sentences.push(finish(path, block_start, rows, sentences.len())?);
    }
    Ok(sentences)
}

/// A parsed bracket cell.
enum Cell {
    Open(String, bool), // label, also closes on the same token
    Close,
    Continue,
}

fn parse_cell(path: &Path, line: usize, cell: &str) -> Result<Cell, CorpusError> {
    let malformed =
        |reason: String| -> CorpusError { CorpusError::malformed(path, line, reason) };
    if cell == "*" {
        return Ok(Cell::Continue);
    }
    if cell == "*)" {
        return Ok(Cell::Close);
    }
    if let Some(rest) = cell.strip_prefix('(') {
        if rest.matches('(').count() > 0 {
            return Err(malformed(format!("nested brackets in cell {cell:?}")));
        }
        if let Some(label) = rest.strip_suffix("*)") {
            return Ok(Cell::Open(label.to_string(), true));
        }
        if let Some(label) = rest.strip_suffix('*') {
            return Ok(Cell::Open(label.to_string(), false));
        }
        return Err(malformed(format!("unterminated bracket cell {cell:?}")));
    }
    Err(malformed(format!("unrecognized cell {cell:?}")))
}

fn finish(
    path: &Path,
    block_line: usize,
    rows: Vec<Row>,
    index: usize,
) -> Result<GoldSentence, CorpusError> {
    let forms: Vec<String> = rows.iter().map(|r| r.form.clone()).collect();
    check_tag_conflicts(path, block_line, &forms)?;
    let language = detect_language(&forms);
    let id = format!("s{:05}", index + 1);
    let sentence = Sentence::new(&id, language, forms)
        .map_err(|e| CorpusError::malformed(path, block_line, e.to_string()))?;

    let predicate_rows: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.lemma.is_some())
        .map(|(i, _)| i)
        .collect();
    for r in &rows {
        if r.cells.len() != predicate_rows.len() {
            return Err(CorpusError::malformed(
                path,
                r.line,
                format!(
                    "row carries {} bracket columns but the sentence has {} predicates",
                    r.cells.len(),
                    predicate_rows.len()
                ),
            ));
        }
    }

    let mut structures = Vec::with_capacity(predicate_rows.len());
    for (j, &pred_hint) in predicate_rows.iter().enumerate() {
        let mut arguments = Vec::new();
        let mut predicate_token: Option<usize> = None;
        let mut open: Option<(String, usize, usize)> = None; // label, start, open line
        for (t, r) in rows.iter().enumerate() {
            match parse_cell(path, r.line, &r.cells[j])? {
               Cell::Continue => {}
                Cell::Close => match open.take() {
                    None => {
                        return Err(CorpusError::malformed(
                            path,
                            r.line,
                            "closing bracket without an open span",
                        ))
                    }
                    Some((label, start, _)) => {
                        close_span(path, r.line, &label, start, t, &mut predicate_token, &mut arguments)?;
                    }
                },
                Cell::Open(label, closes) => {
                    if open.is_some() {
                        return Err(CorpusError::malformed(
                            path,
                            r.line,
                            format!("span {label:?} opened inside another span"),
                        ));
                    }
                    if closes {
                        close_span(path, r.line, &label, t, t, &mut predicate_token, &mut arguments)?;
                    } else {
                        open = Some((label, t, r.line));
                    }
                }
            }
        }
        if let Some((label, _, line)) = open {
            return Err(CorpusError::malformed(
                path,
                line,
                format!("span ({label}* never closed"),
            ));
        }
        let Some(token) = predicate_token else {
            return Err(CorpusError::malformed(
                path,
                rows[pred_hint].line,
                "predicate column has no (V*) cell",
            ));
        };
        let lemma_src = rows[token]
            .lemma
            .as_deref()
            .unwrap_or_else(|| rows[pred_hint].lemma.as_deref().unwrap());
        structures.push(PredicateArgumentStructure {
            predicate: PredicateInstance {
                token,
                surface: sentence.surface(token).to_string(),
                lemma: strip_sense(lemma_src).to_string(),
            },
            arguments,
        });
    }
    let gold = GoldSentence {
        sentence,
        structures,
    };
    check_structures(path, block_line, &gold)?;
    Ok(gold)
}

fn close_span(
    path: &Path,
    line: usize,
    label: &str,
    start: usize,
    end: usize,
    predicate_token: &mut Option<usize>,
    arguments: &mut Vec<ArgumentAnnotation>,
) -> Result<(), CorpusError> {
    if label == "V" {
        if start != end {
            return Err(CorpusError::malformed(
                path,
                line,
                "multi-token (V* span; predicates are single tokens",
            ));
        }
        if predicate_token.replace(start).is_some() {
            return Err(CorpusError::malformed(path, line, "second (V*) cell in one column"));
        }
        return Ok(());
    }
    let role = RoleLabel::parse(label)
        .map_err(|e| CorpusError::malformed(path, line, e.to_string()))?;
    arguments.push(ArgumentAnnotation {
        span: Span::new(start, end),
        role,
    });
    Ok(())
}
