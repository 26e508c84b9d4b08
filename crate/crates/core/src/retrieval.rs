//! Rule-based retrieval agent: proposes candidate predicates for a sentence
//! by lemmatizing each token and matching against the frame database, and
//! measures its hit rate against gold corpora.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::frame_db::{lemmatize, FrameDb};
use crate::tagging::{render_predicates, TaggedText};
use crate::types::{PredicateInstance, Sentence};

/// One candidate proposed by the agent: the token, the database lemma it
/// matched, and that lemma's explanation for the prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePredicate {
    pub token: usize,
    pub matched_lemma: String,
    pub explanation: String,
}

/// Candidate list plus the `@@`-tagged hint string for the prompt.
///
/// At most one candidate per token: the first lemmatizer candidate found in
/// the database wins, so ties break by lemmatizer candidate order. Zero
/// candidates is a valid outcome and leaves the hint untagged.
pub fn candidates(sentence: &Sentence, db: &FrameDb) -> (Vec<CandidatePredicate>, TaggedText) {
    let mut found = Vec::new();
    let mut positions = BTreeSet::new();
    for token in sentence.tokens() {
        for lemma in lemmatize(&token.surface, sentence.language) {
            if let Some(entry) = db.lookup(&lemma) {
                found.push(CandidatePredicate {
                    token: token.index,
                    matched_lemma: lemma,
                    explanation: entry.explanation.clone(),
                });
                positions.insert(token.index);
                break;
            }
        }
    }
    let hint = render_predicates(sentence, &positions);
    (found, hint)
}

/// The lemma the agent would retrieve for one token, if any. Used by the
/// argument stage to pick the frame entry for a predicate.
pub fn retrieve_lemma(surface: &str, language: crate::types::Language, db: &FrameDb) -> Option<String> {
    lemmatize(surface, language)
        .into_iter()
        .find(|l| db.lookup(l).is_some())
}

/// Agent coverage against a gold corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRateReport {
    pub total_predicates: u64,
    pub missed: u64,
    /// `100 * (total - missed) / total`, rounded to 2 decimals.
    pub hit_rate: f64,
    /// Up to [`MISSED_EXAMPLE_CAP`] `(sentence id, token index)` misses.
    pub missed_examples: Vec<(String, usize)>,
}

/// Bound on the examples kept in a report; the full list is available via
/// [`hit_rate_verbose`].
pub const MISSED_EXAMPLE_CAP: usize = 50;

impl HitRateReport {
    /// Fixed-width table with the `#Predicates / #Missed / Hit Rate (%)`
    /// columns.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:>12}  {:>8}  {:>12}", "#Predicates", "#Missed", "Hit Rate (%)").unwrap();
        writeln!(
            out,
            "{:>12}  {:>8}  {:>12.2}",
            self.total_predicates, self.missed, self.hit_rate
        )
        .unwrap();
        out
    }
}

/// Measures the agent against gold predicates: a gold predicate is a hit iff
/// [`candidates`] proposes a candidate at its token index.
pub fn hit_rate(corpus: &[(Sentence, Vec<PredicateInstance>)], db: &FrameDb) -> HitRateReport {
    let (report, _) = hit_rate_impl(corpus, db, false);
    report
}

/// Like [`hit_rate`] but also returns the full uncapped miss list.
pub fn hit_rate_verbose(
    corpus: &[(Sentence, Vec<PredicateInstance>)],
    db: &FrameDb,
) -> (HitRateReport, Vec<(String, usize)>) {
    hit_rate_impl(corpus, db, true)
}

fn hit_rate_impl(
    corpus: &[(Sentence, Vec<PredicateInstance>)],
    db: &FrameDb,
    verbose: bool,
) -> (HitRateReport, Vec<(String, usize)>) {
    let mut total = 0u64;
    let mut missed = 0u64;
    let mut capped = Vec::new();
    let mut full = Vec::new();
    for (sentence, gold) in corpus {
        if gold.is_empty() {
            continue;
        }
        let (cands, _) = candidates(sentence, db);
        let positions: BTreeSet<usize> = cands.iter().map(|c| c.token).collect();
        for pred in gold {
            total += 1;
            if !positions.contains(&pred.token) {
                missed += 1;
                if capped.len() < MISSED_EXAMPLE_CAP {
                    capped.push((sentence.id.clone(), pred.token));
                }
                if verbose {
                    full.push((sentence.id.clone(), pred.token));
                }
            }
        }
    }
    // An empty corpus has nothing missed.
    let rate = if total == 0 {
        100.0
    } else {
        100.0 * (total - missed) as f64 / total as f64
    };
    (
        HitRateReport {
            total_predicates: total,
            missed,
            hit_rate: crate::scorer::round2(rate),
            missed_examples: capped,
        },
        full,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame_db::{FrameEntry, Frameset};
    use crate::tagging::parse_predicates;
    use crate::types::{Language, RoleLabel};

    fn entry(lemma: &str, explanation: &str) -> FrameEntry {
        FrameEntry {
            lemma: lemma.to_string(),
            pos_hint: None,
            explanation: explanation.to_string(),
            framesets: vec![Frameset {
                id: format!("{lemma}.01"),
                core_roles: vec![(RoleLabel::parse("A0").unwrap(), "agent".to_string())],
            }],
        }
    }

    fn db() -> FrameDb {
        FrameDb::from_entries(
            Language::English,
            [
                entry("be", "copula"),
                entry("purpose", "purpose"),
                entry("campaign", "work towards a goal"),
            ],
            vec![(RoleLabel::parse("TMP").unwrap(), "temporal".to_string())],
        )
    }

    fn appendix_sentence() -> Sentence {
        Sentence::from_space_separated(
            "g1",
            "What was the , purpose and goal of this campaign ?",
        )
        .unwrap()
    }

    #[test]
    fn candidates_tag_matching_tokens() {
        let s = appendix_sentence();
        let (cands, hint) = candidates(&s, &db());
        let tokens: Vec<usize> = cands.iter().map(|c| c.token).collect();
        assert_eq!(tokens, [1, 4, 9]);
        assert_eq!(cands[0].matched_lemma, "be");
        assert_eq!(
            hint.text,
            "What @@was## the , @@purpose## and goal of this @@campaign## ?"
        );
    }

    #[test]
    fn punctuation_only_sentence_has_no_candidates() {
        let s = Sentence::from_space_separated("p", ", . ! ?").unwrap();
        let (cands, hint) = candidates(&s, &db());
        assert!(cands.is_empty());
        assert_eq!(hint.text, s.text());
    }

    #[test]
    fn closed_vocabulary_sentence_hits_every_token() {
        let s = Sentence::from_space_separated("c", "be purpose campaign").unwrap();
        let (cands, _) = candidates(&s, &db());
        assert_eq!(cands.len(), s.len());
    }

    #[test]
    fn hint_round_trips_to_candidate_set() {
        let s = appendix_sentence();
        let (cands, hint) = candidates(&s, &db());
        let (parsed, devs) = parse_predicates(&hint.text, &s);
        assert!(devs.is_empty());
        let expected: BTreeSet<usize> = cands.iter().map(|c| c.token).collect();
        assert_eq!(parsed, expected);
    }

    fn gold(s: &Sentence, tokens: &[usize]) -> (Sentence, Vec<PredicateInstance>) {
        let preds = tokens
            .iter()
            .map(|&t| PredicateInstance {
                token: t,
                surface: s.surface(t).to_string(),
                lemma: s.surface(t).to_lowercase(),
            })
            .collect();
        (s.clone(), preds)
    }

    #[test]
    fn hit_rate_counts_misses() {
        let s1 = appendix_sentence();
        let s2 = Sentence::from_space_separated("g2", "they zzcampaigned hard").unwrap();
        let corpus = vec![gold(&s1, &[1, 4, 9]), gold(&s2, &[1])];
        let report = hit_rate(&corpus, &db());
        assert_eq!(report.total_predicates, 4);
        assert_eq!(report.missed, 1);
        assert_eq!(report.hit_rate, 75.00);
        assert_eq!(report.missed_examples, vec![("g2".to_string(), 1)]);
    }

    #[test]
    fn removing_a_lemma_adds_its_occurrences_to_misses() {
        let s1 = Sentence::from_space_separated("a", "they campaign often").unwrap();
        let s2 = Sentence::from_space_separated("b", "we campaign and campaign").unwrap();
        let corpus = vec![gold(&s1, &[1]), gold(&s2, &[1, 3])];
        let with = hit_rate(&corpus, &db());
        let without = FrameDb::from_entries(
            Language::English,
            [entry("be", "copula")],
            vec![(RoleLabel::parse("TMP").unwrap(), "temporal".to_string())],
        );
        let report = hit_rate(&corpus, &without);
        assert_eq!(with.missed, 0);
        assert_eq!(report.missed, 3); // "campaign" occurs three times as gold
    }

    #[test]
    fn table_mirrors_columns() {
        let report = HitRateReport {
            total_predicates: 3513,
            missed: 0,
            hit_rate: 100.0,
            missed_examples: vec![],
        };
        let table = report.to_table();
        assert!(table.contains("#Predicates"));
        assert!(table.contains("Hit Rate (%)"));
        assert!(table.contains("3513"));
        assert!(table.contains("100.00"));
    }
}
