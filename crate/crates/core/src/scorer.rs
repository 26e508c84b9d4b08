//! Exact-match tuple evaluation: precision/recall/F1, overall and per-role,
//! in span-based and dependency-based modes.
//!
//! A predicted triple is correct only if predicate token, argument span
//! boundaries, and role all match a gold triple. Role matching is
//! case-insensitive on the rendered label including its R-/C- prefix, with
//! the `A0`/`ARG0` spellings normalized to one another. Duplicate predicted
//! triples collapse before counting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{RoleLabel, RolePrefix, Span, SrlTriple};

/// Span mode matches full span boundaries; Dependency mode requires
/// single-token spans and matches on the argument token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Span,
    Dependency,
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("dependency mode requires single-token argument spans; got {span} (role {role})")]
    DependencyModeSpanTooWide { span: Span, role: String },
}

/// Raw counts for one role.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleCounts {
    pub correct: u64,
    pub predicted: u64,
    pub gold: u64,
}

/// Aggregated counts with derived metrics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub correct: u64,
    pub predicted: u64,
    pub gold: u64,
    pub per_role: BTreeMap<String, RoleCounts>,
}

pub(crate) fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl ScoreReport {
    /// Precision in percent, 0 when nothing was predicted.
    pub fn precision(&self) -> f64 {
        round2(ratio(self.correct, self.predicted))
    }

    /// Recall in percent, 0 when there is no gold.
    pub fn recall(&self) -> f64 {
        round2(ratio(self.correct, self.gold))
    }

    /// Harmonic mean of the unrounded precision and recall.
    pub fn f1(&self) -> f64 {
        let p = ratio(self.correct, self.predicted);
        let r = ratio(self.correct, self.gold);
        if p + r == 0.0 {
            0.0
        } else {
            round2(2.0 * p * r / (p + r))
        }
    }

    /// Merges partial counts; per-sentence reports combine associatively.
    pub fn merge(&mut self, other: &ScoreReport) {
        self.correct += other.correct;
        self.predicted += other.predicted;
        self.gold += other.gold;
        for (role, counts) in &other.per_role {
            let slot = self.per_role.entry(role.clone()).or_default();
            slot.correct += counts.correct;
            slot.predicted += counts.predicted;
            slot.gold += counts.gold;
        }
    }

    /// Aligned text table with P/R/F1 to two decimals.
    pub fn to_table(&self, per_role: bool) -> String {
        let mut out = String::new();
        writeln!(out, "{:<12} {:>8} {:>8} {:>8}", "", "P", "R", "F1").unwrap();
        writeln!(
            out,
            "{:<12} {:>8.2} {:>8.2} {:>8.2}",
            "overall",
            self.precision(),
            self.recall(),
            self.f1()
        )
        .unwrap();
        if per_role {
            for (role, c) in &self.per_role {
                let p = round2(ratio(c.correct, c.predicted));
                let r = round2(ratio(c.correct, c.gold));
                let f = if p + r == 0.0 {
                    0.0
                } else {
                    round2(2.0 * ratio(c.correct, c.predicted) * ratio(c.correct, c.gold)
                        / (ratio(c.correct, c.predicted) + ratio(c.correct, c.gold)))
                };
                writeln!(out, "{role:<12} {p:>8.2} {r:>8.2} {f:>8.2}").unwrap();
            }
        }
        out
    }
}

/// Match key: role canonicalized, span reduced to its token in dependency
/// mode.
fn match_key(triple: &SrlTriple, mode: Mode) -> Result<(usize, usize, usize, String), ScoreError> {
    let span = triple.argument;
    if mode == Mode::Dependency && span.width() != 1 {
        return Err(ScoreError::DependencyModeSpanTooWide {
            span,
            role: triple.role.rendered(),
        });
    }
    Ok((
        triple.predicate_token,
        span.start,
        span.end,
        triple.role.canonical(),
    ))
}

/// Scores one sentence's predicted triples against gold.
pub fn score(
    gold: &BTreeSet<SrlTriple>,
    predicted: &BTreeSet<SrlTriple>,
    mode: Mode,
) -> Result<ScoreReport, ScoreError> {
    let gold_keys: BTreeSet<_> = gold
        .iter()
        .map(|t| match_key(t, mode))
        .collect::<Result<_, _>>()?;
    let pred_keys: BTreeSet<_> = predicted
        .iter()
        .map(|t| match_key(t, mode))
        .collect::<Result<_, _>>()?;
    let mut report = ScoreReport {
        correct: 0,
        predicted: pred_keys.len() as u64,
        gold: gold_keys.len() as u64,
        per_role: BTreeMap::new(),
    };
    for key in &gold_keys {
        report.per_role.entry(key.3.clone()).or_default().gold += 1;
    }
    for key in &pred_keys {
        let slot = report.per_role.entry(key.3.clone()).or_default();
        slot.predicted += 1;
        if gold_keys.contains(key) {
            slot.correct += 1;
            report.correct += 1;
        }
    }
    Ok(report)
}

/// Scores a corpus of per-sentence (gold, predicted) pairs.
pub fn score_corpus(
    pairs: &[(BTreeSet<SrlTriple>, BTreeSet<SrlTriple>)],
    mode: Mode,
) -> Result<ScoreReport, ScoreError> {
    let mut total = ScoreReport::default();
    for (gold, predicted) in pairs {
        total.merge(&score(gold, predicted, mode)?);
    }
    Ok(total)
}

/// Predicate identification scored as a degenerate triple stream: role fixed
/// to `V`, span equal to the predicate token.
pub fn predicate_triples(predicates: impl IntoIterator<Item = usize>) -> BTreeSet<SrlTriple> {
    let v = RoleLabel::new("V", RolePrefix::None).unwrap();
    predicates
        .into_iter()
        .map(|t| SrlTriple {
            predicate_token: t,
            argument: Span::new(t, t),
            role: v.clone(),
        })
        .collect()
}

/// Signed per-metric and per-role differences between two reports (`b - a`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaReport {
    pub d_precision: f64,
    pub d_recall: f64,
    pub d_f1: f64,
    pub d_correct: i64,
    pub d_predicted: i64,
    pub d_gold: i64,
    pub per_role: BTreeMap<String, (i64, i64, i64)>,
}

pub fn compare_reports(a: &ScoreReport, b: &ScoreReport) -> DeltaReport {
    let mut per_role = BTreeMap::new();
    let roles: BTreeSet<&String> = a.per_role.keys().chain(b.per_role.keys()).collect();
    for role in roles {
        let ca = a.per_role.get(role).copied().unwrap_or_default();
        let cb = b.per_role.get(role).copied().unwrap_or_default();
        per_role.insert(
            role.clone(),
            (
                cb.correct as i64 - ca.correct as i64,
                cb.predicted as i64 - ca.predicted as i64,
                cb.gold as i64 - ca.gold as i64,
            ),
        );
    }
    DeltaReport {
        d_precision: round2(b.precision() - a.precision()),
        d_recall: round2(b.recall() - a.recall()),
        d_f1: round2(b.f1() - a.f1()),
        d_correct: b.correct as i64 - a.correct as i64,
        d_predicted: b.predicted as i64 - a.predicted as i64,
        d_gold: b.gold as i64 - a.gold as i64,
        per_role,
    }
}
