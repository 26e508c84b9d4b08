//! Tag parsing: lexing raw model output, aligning its untagged content to the
//! source sentence by token-level LCS, and recovering spans with deviations.
//!
//! Alignment units are whitespace-separated chunks for English (case-
//! sensitive, whitespace-insensitive) and single characters for Chinese.
//! Tags are stripped before alignment, so a response that drops or rewrites
//! tokens still yields a usable partial parse.

use std::collections::BTreeSet;

use crate::types::{ArgumentAnnotation, Language, RoleLabel, Sentence, Span};

use super::{Deviation, DeviationKind};

const MAX_LABEL_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    PredOpen,
    PredClose,
    RoleOpen(String),
    RoleClose(String),
    Text(String),
}

/// Lexes the raw response into tags and text pieces. `role_tags` disables
/// `<label>` recognition for the predicate stage, where angle brackets are
/// plain text.
fn lex(raw: &str, role_tags: bool) -> Vec<(Piece, usize)> {
    let mut pieces: Vec<(Piece, usize)> = Vec::new();
    let mut text = String::new();
    let mut text_start = 0usize;
    let mut i = 0usize;

    let flush = |text: &mut String, start: usize, pieces: &mut Vec<(Piece, usize)>| {
        if !text.is_empty() {
            pieces.push((Piece::Text(std::mem::take(text)), start));
        }
    };

    while i < raw.len() {
        let rest = &raw[i..];
        if rest.starts_with("@@") {
            flush(&mut text, text_start, &mut pieces);
            pieces.push((Piece::PredOpen, i));
            i += 2;
            text_start = i;
            continue;
        }
        if rest.starts_with("##") {
            flush(&mut text, text_start, &mut pieces);
            pieces.push((Piece::PredClose, i));
            i += 2;
            text_start = i;
            continue;
        }
        if role_tags && rest.starts_with('<') {
            if let Some((closing, label, consumed)) = lex_role_tag(rest) {
                flush(&mut text, text_start, &mut pieces);
                let piece = if closing {
                    Piece::RoleClose(label)
                } else {
                    Piece::RoleOpen(label)
                };
                pieces.push((piece, i));
                i += consumed;
                text_start = i;
                continue;
            }
        }
        let ch = rest.chars().next().unwrap();
        if text.is_empty() {
            text_start = i;
        }
        text.push(ch);
        i += ch.len_utf8();
    }
    flush(&mut text, text_start, &mut pieces);
    pieces
}

/// Tries to read `<LABEL>` or `</LABEL>` at the start of `rest`.
/// Returns (is_closing, label, bytes consumed).
fn lex_role_tag(rest: &str) -> Option<(bool, String, usize)> {
    let bytes = rest.as_bytes();
    debug_assert_eq!(bytes[0], b'<');
    let mut pos = 1;
    let closing = bytes.get(pos) == Some(&b'/');
    if closing {
        pos += 1;
    }
    let label_start = pos;
    while pos < bytes.len() && pos - label_start <= MAX_LABEL_LEN {
        let b = bytes[pos];
        if b == b'>' {
            if pos == label_start {
                return None;
            }
            let label = &rest[label_start..pos];
            if !label.as_bytes()[0].is_ascii_alphabetic() {
                return None;
            }
            return Some((closing, label.to_string(), pos + 1));
        }
        if !(b.is_ascii_alphanumeric() || b == b'-') {
            return None;
        }
        pos += 1;
    }
    None
}

/// True when the text embeds something the tag lexer would consume as a role
/// tag. Used to reject corpus tokens the grammar cannot represent.
pub(super) fn contains_role_tag(text: &str) -> bool {
    text.char_indices()
        .any(|(i, c)| c == '<' && lex_role_tag(&text[i..]).is_some())
}

/// One alignment unit of the response content.
struct Unit {
    text: String,
    /// Byte offset into the raw response.
    offset: usize,
    /// Matched sentence unit indices (normally one; several after repair).
    matched: Vec<usize>,
}

/// Splits a text piece into alignment units with absolute byte offsets.
fn split_units(text: &str, base: usize, language: Language, out: &mut Vec<Unit>) {
    match language {
        Language::English => {
            let mut start = None;
            for (i, c) in text.char_indices() {
                if c.is_whitespace() {
                    if let Some(s) = start.take() {
                        out.push(Unit {
                            text: text[s..i].to_string(),
                            offset: base + s,
                            matched: Vec::new(),
                        });
                    }
                } else if start.is_none() {
                    start = Some(i);
                }
            }
            if let Some(s) = start {
                out.push(Unit {
                    text: text[s..].to_string(),
                    offset: base + s,
                    matched: Vec::new(),
                });
            }
        }
        Language::Chinese => {
            for (i, c) in text.char_indices() {
                if !c.is_whitespace() {
                    out.push(Unit {
                        text: c.to_string(),
                        offset: base + i,
                        matched: Vec::new(),
                    });
                }
            }
        }
    }
}

/// The sentence side of the alignment.
struct SentenceUnits {
    /// Unit strings (token surfaces for English, characters for Chinese).
    texts: Vec<String>,
    /// Sentence unit index -> token index.
    token_of: Vec<usize>,
    /// Token index -> range of sentence units.
    units_of_token: Vec<(usize, usize)>,
}

fn sentence_units(sentence: &Sentence) -> SentenceUnits {
    let mut texts = Vec::new();
    let mut token_of = Vec::new();
    let mut units_of_token = Vec::with_capacity(sentence.len());
    match sentence.language {
        Language::English => {
            for token in sentence.tokens() {
                units_of_token.push((texts.len(), texts.len() + 1));
                texts.push(token.surface.clone());
                token_of.push(token.index);
            }
        }
        Language::Chinese => {
            for token in sentence.tokens() {
                let start = texts.len();
                for c in token.surface.chars() {
                    texts.push(c.to_string());
                    token_of.push(token.index);
                }
                units_of_token.push((start, texts.len()));
            }
        }
    }
    SentenceUnits {
        texts,
        token_of,
        units_of_token,
    }
}

/// Longest-common-subsequence alignment. Fills `matched` on the content
/// units and returns the per-sentence-unit match flags.
fn align(content: &mut [Unit], sentence: &SentenceUnits, language: Language) -> Vec<bool> {
    let n = content.len();
    let m = sentence.texts.len();
    // dp[i][j] = LCS length of content[i..] vs sentence[j..]
    let mut dp = vec![0u32; (n + 1) * (m + 1)];
    let idx = |i: usize, j: usize| i * (m + 1) + j;
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            dp[idx(i, j)] = if content[i].text == sentence.texts[j] {
                dp[idx(i + 1, j + 1)] + 1
            } else {
                dp[idx(i + 1, j)].max(dp[idx(i, j + 1)])
            };
        }
    }
    let mut taken = vec![false; m];
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if content[i].text == sentence.texts[j] && dp[idx(i, j)] == dp[idx(i + 1, j + 1)] + 1 {
            content[i].matched.push(j);
            taken[j] = true;
            i += 1;
            j += 1;
        } else if dp[idx(i + 1, j)] >= dp[idx(i, j + 1)] {
            i += 1;
        } else {
            j += 1;
        }
    }
    if language == Language::English {
        repair_concatenations(content, sentence, &mut taken);
    }
    taken
}

/// Second pass for English: a single response chunk that equals the
/// concatenation of consecutive unmatched sentence tokens ("sugar." for
/// ["sugar", "."]) is matched to all of them instead of producing mismatch
/// deviations.
fn repair_concatenations(content: &mut [Unit], sentence: &SentenceUnits, taken: &mut [bool]) {
    let m = sentence.texts.len();
    let mut scan = 0usize;
    for unit in content.iter_mut() {
        if let Some(&last) = unit.matched.last() {
            scan = scan.max(last + 1);
            continue;
        }
        let mut j = scan;
        'search: while j < m {
            if taken[j] {
                j += 1;
                continue;
            }
            // Try to cover unit.text with sentence.texts[j..=k].
            let mut acc = String::new();
            let mut k = j;
            while k < m && !taken[k] && acc.len() < unit.text.len() {
                acc.push_str(&sentence.texts[k]);
                if acc == unit.text {
                    for t in j..=k {
                        unit.matched.push(t);
                        taken[t] = true;
                    }
                    scan = k + 1;
                    break 'search;
                }
                if !unit.text.starts_with(&acc) {
                    break;
                }
                k += 1;
            }
            j += 1;
        }
    }
}

/// Parsed tag segments plus content bookkeeping, shared by both stages.
struct Walk<'a> {
    sentence: &'a Sentence,
    su: SentenceUnits,
    units: Vec<Unit>,
    /// For each piece index, the number of content units before it.
    unit_pos: Vec<usize>,
    pieces: Vec<(Piece, usize)>,
    deviations: Vec<Deviation>,
}

impl<'a> Walk<'a> {
    fn new(raw: &str, sentence: &'a Sentence, role_tags: bool) -> Self {
        let pieces = lex(raw, role_tags);
        let mut units = Vec::new();
        let mut unit_pos = Vec::with_capacity(pieces.len());
        for (piece, offset) in &pieces {
            unit_pos.push(units.len());
            if let Piece::Text(t) = piece {
                split_units(t, *offset, sentence.language, &mut units);
            }
        }
        let su = sentence_units(sentence);
        let taken = align(&mut units, &su, sentence.language);
        let mut deviations = Vec::new();
        collect_alignment_deviations(sentence, &su, &units, &taken, &mut deviations);
        Walk {
            sentence,
            su,
            units,
            unit_pos,
            pieces,
            deviations,
        }
    }

    fn deviate(&mut self, kind: DeviationKind, message: String, location: Option<usize>) {
        self.deviations.push(Deviation::new(kind, message, location));
    }

    /// Token indices covered by content units in `[from..to)`.
    ///
    /// For Chinese, a token counts only when every one of its characters is
    /// matched inside the segment; partial coverage is a text mismatch.
    fn segment_tokens(&mut self, from: usize, to: usize, offset: usize) -> BTreeSet<usize> {
        let mut sentence_units: BTreeSet<usize> = BTreeSet::new();
        for unit in &self.units[from..to] {
            sentence_units.extend(unit.matched.iter().copied());
        }
        match self.sentence.language {
            Language::English => sentence_units
                .into_iter()
                .map(|u| self.su.token_of[u])
                .collect(),
            Language::Chinese => {
                let touched: BTreeSet<usize> = sentence_units
                    .iter()
                    .map(|&u| self.su.token_of[u])
                    .collect();
                let mut tokens = BTreeSet::new();
                for t in touched {
                    let (a, b) = self.su.units_of_token[t];
                    if (a..b).all(|u| sentence_units.contains(&u)) {
                        tokens.insert(t);
                    } else {
                        self.deviate(
                            DeviationKind::TextMismatch,
                            format!(
                                "tag boundary splits the word {:?}",
                                self.sentence.surface(t)
                            ),
                            Some(offset),
                        );
                    }
                }
                tokens
            }
        }
    }

    fn segment_text(&self, from: usize, to: usize) -> String {
        let sep = self.sentence.language.separator();
        self.units[from..to]
            .iter()
            .map(|u| u.text.as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }
}

fn collect_alignment_deviations(
    sentence: &Sentence,
    su: &SentenceUnits,
    units: &[Unit],
    taken: &[bool],
    out: &mut Vec<Deviation>,
) {
    for token in sentence.tokens() {
        let (a, b) = su.units_of_token[token.index];
        let matched = (a..b).filter(|&u| taken[u]).count();
        if matched == 0 {
            out.push(Deviation::new(
                DeviationKind::TextMismatch,
                format!("token {:?} from the sentence is missing in the response", token.surface),
                None,
            ));
        } else if matched < b - a {
            out.push(Deviation::new(
                DeviationKind::TextMismatch,
                format!("token {:?} is only partially present in the response", token.surface),
                None,
            ));
        }
    }
    // Coalesce runs of unmatched response units into one deviation each.
    let mut run: Vec<&Unit> = Vec::new();
    let flush = |run: &mut Vec<&Unit>, out: &mut Vec<Deviation>| {
        if run.is_empty() {
            return;
        }
        let sep = sentence.language.separator();
        let text = run.iter().map(|u| u.text.as_str()).collect::<Vec<_>>().join(sep);
        let offset = run[0].offset;
        out.push(Deviation::new(
            DeviationKind::TextMismatch,
            format!("response text {text:?} does not match the sentence"),
            Some(offset),
        ));
        run.clear();
    };
    for unit in units {
        if unit.matched.is_empty() {
            run.push(unit);
        } else {
            flush(&mut run, out);
        }
    }
    flush(&mut run, out);
}

/// Extracts predicate tag segments; shared by both stages.
fn walk_predicates(walk: &mut Walk<'_>) -> BTreeSet<usize> {
    let mut predicates = BTreeSet::new();
    let mut open: Option<(usize, usize)> = None; // (unit position, byte offset)
    for p in 0..walk.pieces.len() {
        let (piece, offset) = (walk.pieces[p].0.clone(), walk.pieces[p].1);
        match piece {
            Piece::PredOpen => {
                if let Some((_, prev)) = open.replace((walk.unit_pos[p], offset)) {
                    walk.deviate(
                        DeviationKind::MalformedTag,
                        "predicate tag @@ reopened before the previous one closed".to_string(),
                        Some(prev),
                    );
                }
            }
            Piece::PredClose => match open.take() {
                None => walk.deviate(
                    DeviationKind::MalformedTag,
                    "predicate close ## without a matching @@".to_string(),
                    Some(offset),
                ),
                Some((from, open_offset)) => {
                    let to = walk.unit_pos[p];
                    if from == to {
                        walk.deviate(
                            DeviationKind::MalformedTag,
                            "empty predicate tag (no word between @@ and ##)".to_string(),
                            Some(open_offset),
                        );
                        continue;
                    }
                    let tokens = walk.segment_tokens(from, to, open_offset);
                    match tokens.len() {
                        0 => {
                            let seg = walk.segment_text(from, to);
                            walk.deviate(
                                DeviationKind::TextMismatch,
                                format!("predicate tag around {seg:?} does not match any sentence token"),
                                Some(open_offset),
                            );
                        }
                        1 => {
                            predicates.insert(*tokens.iter().next().unwrap());
                        }
                        _ => {
                            let seg = walk.segment_text(from, to);
                            walk.deviate(
                                DeviationKind::MultiTokenPredicate,
                                format!("predicate tag wraps more than one token: {seg:?}"),
                                Some(open_offset),
                            );
                        }
                    }
                }
            },
            _ => {}
        }
    }
    if let Some((_, offset)) = open {
        walk.deviate(
            DeviationKind::MalformedTag,
            "predicate tag @@ never closed (empty segment)".to_string(),
            Some(offset),
        );
    }
    predicates
}

/// Parses a predicate-stage response. Total: all failure is deviation data.
pub fn parse_predicates(raw: &str, sentence: &Sentence) -> (BTreeSet<usize>, Vec<Deviation>) {
    let mut walk = Walk::new(raw, sentence, false);
    let predicates = walk_predicates(&mut walk);
    (predicates, walk.deviations)
}

/// The set of role labels a response may legally use, compared on the
/// canonical base (case-insensitive, `A0` == `ARG0`). R-/C- prefixed labels
/// are allowed whenever their base is.
#[derive(Debug, Clone, Default)]
pub struct AllowedRoles {
    bases: BTreeSet<String>,
}

impl AllowedRoles {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a RoleLabel>) -> Self {
        AllowedRoles {
            bases: labels
                .into_iter()
                .map(|l| crate::types::canonical_base(l.base()))
                .collect(),
        }
    }

    pub fn contains(&self, label: &RoleLabel) -> bool {
        self.bases.contains(&crate::types::canonical_base(label.base()))
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

/// Parses an argument-stage response for the given predicate.
///
/// Arguments with unknown-but-well-formed labels are kept (with an
/// [`DeviationKind::UnknownRole`] deviation) so the scorer can count them
/// wrong instead of silently dropping them. Overlapping spans keep the first
/// completed tag and drop the rest.
pub fn parse_arguments(
    raw: &str,
    sentence: &Sentence,
    predicate: usize,
    allowed: &AllowedRoles,
) -> (Vec<ArgumentAnnotation>, Vec<Deviation>) {
    assert!(predicate < sentence.len(), "predicate index out of bounds");
    let mut walk = Walk::new(raw, sentence, true);
    let tagged_predicates = walk_predicates(&mut walk);

    let mut open: Option<(String, usize, usize)> = None; // (label, unit position, byte offset)
    let mut parsed: Vec<(ArgumentAnnotation, usize)> = Vec::new();
    for p in 0..walk.pieces.len() {
        let (piece, offset) = (walk.pieces[p].0.clone(), walk.pieces[p].1);
        match piece {
            Piece::RoleOpen(label) => {
                if let Some((prev, _, prev_offset)) = open.replace((label, walk.unit_pos[p], offset)) {
                    walk.deviate(
                        DeviationKind::UnbalancedTag,
                        format!("argument tag <{prev}> opened but never closed"),
                        Some(prev_offset),
                    );
                }
            }
            Piece::RoleClose(label) => match open.take() {
                None => walk.deviate(
                    DeviationKind::MalformedTag,
                    format!("closing tag </{label}> without a matching open tag"),
                    Some(offset),
                ),
                Some((open_label, from, open_offset)) => {
                    if open_label != label {
                        walk.deviate(
                            DeviationKind::UnbalancedTag,
                            format!(
                                "open tag <{open_label}> never closed, close tag </{label}> unopened"
                            ),
                            Some(open_offset),
                        );
                        continue;
                    }
                    let to = walk.unit_pos[p];
                    if from == to {
                        walk.deviate(
                            DeviationKind::MalformedTag,
                            format!("empty argument tag <{label}></{label}>"),
                            Some(open_offset),
                        );
                        continue;
                    }
                    let role = match RoleLabel::parse(&label) {
                        Ok(role) => role,
                        Err(_) => {
                            walk.deviate(
                                DeviationKind::MalformedTag,
                                format!("invalid role label {label:?}"),
                                Some(open_offset),
                            );
                            continue;
                        }
                    };
                    let tokens = walk.segment_tokens(from, to, open_offset);
                    let (Some(&start), Some(&end)) = (tokens.first(), tokens.last()) else {
                        let seg = walk.segment_text(from, to);
                        walk.deviate(
                            DeviationKind::TextMismatch,
                            format!(
                                "argument tag <{label}> around {seg:?} does not match any sentence token"
                            ),
                            Some(open_offset),
                        );
                        continue;
                    };
                    if !allowed.is_empty() && !allowed.contains(&role) {
                        walk.deviate(
                            DeviationKind::UnknownRole,
                            format!("role label {role} is not in the allowed role set"),
                            Some(open_offset),
                        );
                    }
                    parsed.push((
                        ArgumentAnnotation {
                            span: Span::new(start, end),
                            role,
                        },
                        open_offset,
                    ));
                }
            },
            _ => {}
        }
    }
    if let Some((label, _, offset)) = open {
        walk.deviate(
            DeviationKind::UnbalancedTag,
            format!("argument tag <{label}> opened but never closed"),
            Some(offset),
        );
    }

    if !tagged_predicates.contains(&predicate) {
        walk.deviate(
            DeviationKind::MissingPredicate,
            format!(
                "predicate tag @@{}## is missing from the response",
                sentence.surface(predicate)
            ),
            None,
        );
    }
    for extra in tagged_predicates.iter().filter(|&&t| t != predicate) {
        walk.deviate(
            DeviationKind::MalformedTag,
            format!(
                "unexpected predicate tag on token {:?}",
                sentence.surface(*extra)
            ),
            None,
        );
    }

    let kept = drop_overlaps(parsed, &mut walk.deviations);
    (kept, walk.deviations)
}

/// First complete span wins; later overlapping spans are dropped with an
/// [`DeviationKind::OverlappingArguments`] deviation. Overlaps can arise from
/// hole-ridden spans combined with concatenation repair.
fn drop_overlaps(
    parsed: Vec<(ArgumentAnnotation, usize)>,
    deviations: &mut Vec<Deviation>,
) -> Vec<ArgumentAnnotation> {
    let mut kept: Vec<ArgumentAnnotation> = Vec::new();
    for (arg, offset) in parsed {
        if let Some(prev) = kept.iter().find(|k| k.span.overlaps(&arg.span)) {
            deviations.push(Deviation::new(
                DeviationKind::OverlappingArguments,
                format!(
                    "argument {} {} overlaps argument {} {}; later span dropped",
                    arg.role, arg.span, prev.role, prev.span
                ),
                Some(offset),
            ));
            continue;
        }
        kept.push(arg);
    }
    kept
}
