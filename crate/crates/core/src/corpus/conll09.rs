//! CoNLL-2009 reader: 14 fixed tab-separated columns plus one APRED column
//! per predicate. Dependency-based, so every argument is a single token.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::types::{
    ArgumentAnnotation, PredicateArgumentStructure, PredicateInstance, RoleLabel, Sentence, Span,
};

use super::{check_structures, check_tag_conflicts, detect_language, strip_sense, CorpusError, GoldSentence};

const FIXED_COLUMNS: usize = 14;
const COL_FORM: usize = 1;
const COL_LEMMA: usize = 2;
const COL_FILLPRED: usize = 12;
const COL_PRED: usize = 13;

struct Row {
    line: usize,
    form: String,
    lemma: String,
    pred: Option<String>,
    apreds: Vec<String>,
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
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < FIXED_COLUMNS {
            return Err(CorpusError::malformed(
                path,
                line_no,
                format!("expected at least {FIXED_COLUMNS} columns, got {}", cols.len()),
            ));
        }
        let id: usize = cols[0].parse().map_err(|_| {
            CorpusError::malformed(path, line_no, format!("bad token id {:?}", cols[0]))
        })?;
        if id != rows.len() + 1 {
            return Err(CorpusError::malformed(
                path,
                line_no,
                format!("token id {id} out of sequence (expected {})", rows.len() + 1),
            ));
        }
        let fillpred = cols[COL_FILLPRED];
        let pred_col = cols[COL_PRED];
        let pred = match (fillpred, pred_col) {
            ("Y", "_") | ("Y", "") => {
                return Err(CorpusError::malformed(
                    path,
                    line_no,
                    "FILLPRED is Y but PRED is empty",
                ))
            }
            ("Y", p) => Some(p.to_string()),
            (_, _) => None,
        };
        rows.push(Row {
            line: line_no,
            form: cols[COL_FORM].to_string(),
            lemma: cols[COL_LEMMA].to_string(),
            pred,
            apreds: cols[FIXED_COLUMNS..].iter().map(|s| s.to_string()).collect(),
        });
    }
    if !rows.is_empty() {
        sentences.push(finish(path, block_start, rows, sentences.len())?);
    }
    Ok(sentences)
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
    let mut sentence = Sentence::new(&id, language, forms)
        .map_err(|e| CorpusError::malformed(path, block_line, e.to_string()))?;
    for (i, row) in rows.iter().enumerate() {
        if row.lemma != "_" && !row.lemma.is_empty() {
            sentence.set_lemma(i, &row.lemma);
        }
    }

    let predicate_rows: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.pred.is_some())
        .map(|(i, _)| i)
        .collect();
    let mut structures = Vec::with_capacity(predicate_rows.len());
    for (j, &token) in predicate_rows.iter().enumerate() {
        let row = &rows[token];
        let pred_value = row.pred.as_deref().unwrap();
        let mut arguments = Vec::new();
        for (t, r) in rows.iter().enumerate() {
            if r.apreds.len() != predicate_rows.len() {
                return Err(CorpusError::malformed(
                    path,
                    r.line,
                    format!(
                        "row carries {} APRED columns but the sentence has {} predicates",
                        r.apreds.len(),
                        predicate_rows.len()
                    ),
                ));
            }
            let cell = &r.apreds[j];
            if cell == "_" || cell.is_empty() {
                continue;
            }
            let role = RoleLabel::parse(cell)
                .map_err(|e| CorpusError::malformed(path, r.line, e.to_string()))?;
            arguments.push(ArgumentAnnotation {
                span: Span::new(t, t),
                role,
            });
        }
        structures.push(PredicateArgumentStructure {
            predicate: PredicateInstance {
                token,
                surface: row.form.clone(),
                lemma: strip_sense(pred_value).to_string(),
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

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn row(id: usize, form: &str, fillpred: &str, pred: &str, apreds: &[&str]) -> String {
        let mut cols = vec![
            id.to_string(),
            form.to_string(),
            form.to_lowercase(),
            form.to_lowercase(),
            "NN".into(),
            "NN".into(),
            "_".into(),
            "_".into(),
            "0".into(),
            "0".into(),
            "ROOT".into(),
            "ROOT".into(),
            fillpred.to_string(),
            pred.to_string(),
        ];
        cols.extend(apreds.iter().map(|s| s.to_string()));
        cols.join("\t")
    }

    fn write_fixture(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    // 2-sentence fixture with 3 predicates total, counted by hand.
    fn fixture() -> String {
        let s1 = [
            row(1, "They", "_", "_", &["A0", "_"]),
            row(2, "bought", "Y", "buy.01", &["_", "_"]),
            row(3, "and", "_", "_", &["_", "_"]),
            row(4, "sold", "Y", "sell.01", &["_", "_"]),
            row(5, "sugar", "_", "_", &["A1", "A1"]),
        ]
        .join("\n");
        let s2 = [
            row(1, "Prices", "_", "_", &["A1"]),
            row(2, "fell", "Y", "fall.01", &["_"]),
        ]
        .join("\n");
        format!("{s1}\n\n{s2}\n")
    }

    #[test]
    fn loads_two_sentences_three_predicates() {
        let f = write_fixture(&fixture());
        let gold = load(f.path()).unwrap();
        assert_eq!(gold.len(), 2);
        let total: usize = gold.iter().map(|g| g.structures.len()).sum();
        assert_eq!(total, 3);
        assert_eq!(gold[0].sentence.id, "s00001");
        assert_eq!(gold[1].sentence.id, "s00002");
        let buy = &gold[0].structures[0];
        assert_eq!(buy.predicate.token, 1);
        assert_eq!(buy.predicate.lemma, "buy");
        assert_eq!(buy.arguments.len(), 2);
        assert_eq!(buy.arguments[0].span, Span::new(0, 0));
        assert_eq!(buy.arguments[1].span, Span::new(4, 4));
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let f = write_fixture("");
        assert!(load(f.path()).unwrap().is_empty());
    }

    #[test]
    fn sense_suffix_dropped() {
        let f = write_fixture(&format!("{}\n", row(1, "buys", "Y", "buy.01", &["_"])));
        let gold = load(f.path()).unwrap();
        assert_eq!(gold[0].structures[0].predicate.lemma, "buy");
    }

    #[test]
    fn bad_apred_count_is_malformed() {
        let content = [
            row(1, "They", "_", "_", &["A0"]),
            row(2, "bought", "Y", "buy.01", &["_", "_"]),
        ]
        .join("\n");
        let f = write_fixture(&content);
        let err = load(f.path()).unwrap_err();
        assert!(err.to_string().contains("APRED"));
    }

    #[test]
    fn fillpred_without_pred_is_malformed() {
        let f = write_fixture(&format!("{}\n", row(1, "x", "Y", "_", &["_"])));
        assert!(load(f.path()).is_err());
    }

    #[test]
    fn tag_sequences_in_tokens_are_rejected() {
        let f = write_fixture(&format!("{}\n", row(1, "x@@y", "_", "_", &[])));
        let err = load(f.path()).unwrap_err();
        assert!(err.to_string().contains("reserved tag sequence"));
    }

    #[test]
    fn short_rows_are_malformed() {
        let f = write_fixture("1\tonly\tthree\n");
        let err = load(f.path()).unwrap_err();
        assert!(err.to_string().contains("columns"));
    }
}
