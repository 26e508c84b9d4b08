//! Deterministic rule lemmatizer.
//!
//! English candidates come from an irregular-verb table plus suffix rules
//! (-s/-es, -ed/-d, -ing) with consonant-doubling and silent-e restoration.
//! Chinese is identity. The candidate list always ends with the surface form
//! itself (lowercased for English), so database lookup can fall back to it.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::types::Language;

/// Irregular inflected form -> base form. Covers the frequent English verbs;
/// everything else goes through the suffix rules.
static IRREGULAR: &[(&str, &str)] = &[
    ("am", "be"),
    ("are", "be"),
    ("is", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("being", "be"),
    ("has", "have"),
    ("had", "have"),
    ("having", "have"),
    ("does", "do"),
    ("did", "do"),
    ("done", "do"),
    ("went", "go"),
    ("gone", "go"),
    ("said", "say"),
    ("made", "make"),
    ("got", "get"),
    ("gotten", "get"),
    ("took", "take"),
    ("taken", "take"),
    ("came", "come"),
    ("saw", "see"),
    ("seen", "see"),
    ("knew", "know"),
    ("known", "know"),
    ("gave", "give"),
    ("given", "give"),
    ("found", "find"),
    ("thought", "think"),
    ("told", "tell"),
    ("became", "become"),
    ("left", "leave"),
    ("felt", "feel"),
    ("brought", "bring"),
    ("began", "begin"),
    ("begun", "begin"),
    ("kept", "keep"),
    ("held", "hold"),
    ("wrote", "write"),
    ("written", "write"),
    ("stood", "stand"),
    ("heard", "hear"),
    ("meant", "mean"),
    ("met", "meet"),
    ("ran", "run"),
    ("paid", "pay"),
    ("sat", "sit"),
    ("spoke", "speak"),
    ("spoken", "speak"),
    ("led", "lead"),
    ("grew", "grow"),
    ("grown", "grow"),
    ("lost", "lose"),
    ("fell", "fall"),
    ("fallen", "fall"),
    ("sent", "send"),
    ("built", "build"),
    ("understood", "understand"),
    ("drew", "draw"),
    ("drawn", "draw"),
    ("broke", "break"),
    ("broken", "break"),
    ("spent", "spend"),
    ("cut", "cut"),
    ("rose", "rise"),
    ("risen", "rise"),
    ("drove", "drive"),
    ("driven", "drive"),
    ("bought", "buy"),
    ("wore", "wear"),
    ("worn", "wear"),
    ("chose", "choose"),
    ("chosen", "choose"),
    ("ate", "eat"),
    ("eaten", "eat"),
    ("fought", "fight"),
    ("threw", "throw"),
    ("thrown", "throw"),
    ("caught", "catch"),
    ("taught", "teach"),
    ("sold", "sell"),
    ("won", "win"),
    ("sought", "seek"),
    ("laid", "lay"),
    ("lay", "lie"),
    ("lain", "lie"),
    ("lying", "lie"),
    ("dying", "die"),
    ("tying", "tie"),
    ("says", "say"),
];

fn irregular_map() -> &'static HashMap<&'static str, &'static str> {
    static MAP: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    MAP.get_or_init(|| IRREGULAR.iter().copied().collect())
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn ends_in_double_consonant(stem: &str) -> bool {
    let mut chars = stem.chars().rev();
    match (chars.next(), chars.next()) {
        (Some(a), Some(b)) => a == b && a.is_ascii_alphabetic() && !is_vowel(a),
        _ => false,
    }
}

/// Stems eligible for bare `-es` stripping: watch/wash/pass/fix/buzz/go.
fn sibilant_stem(stem: &str) -> bool {
    stem.ends_with("ch")
        || stem.ends_with("sh")
        || stem.ends_with("ss")
        || stem.ends_with('x')
        || stem.ends_with('z')
        || stem.ends_with('o')
}

fn push_unique(out: &mut Vec<String>, candidate: String) {
    if !candidate.is_empty() && !out.contains(&candidate) {
        out.push(candidate);
    }
}

/// Candidates for stripping a past/progressive suffix: the bare stem, the
/// de-doubled stem (stopped -> stop), and the silent-e restoration
/// (liked -> like, making -> make).
fn strip_with_restorations(out: &mut Vec<String>, stem: &str) {
    push_unique(out, stem.to_string());
    if ends_in_double_consonant(stem) {
        push_unique(out, stem[..stem.len() - 1].to_string());
    }
    push_unique(out, format!("{stem}e"));
}

fn english_candidates(lower: &str) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(base) = irregular_map().get(lower) {
        push_unique(&mut out, base.to_string());
    } else if let Some(stem) = lower.strip_suffix("ies").filter(|s| s.len() >= 2) {
        push_unique(&mut out, format!("{stem}y"));
    } else if let Some(stem) = lower.strip_suffix("ied").filter(|s| s.len() >= 2) {
        push_unique(&mut out, format!("{stem}y"));
    } else if let Some(stem) = lower.strip_suffix("es").filter(|s| sibilant_stem(s)) {
        push_unique(&mut out, stem.to_string());
    } else if let Some(stem) = lower.strip_suffix('s').filter(|s| s.len() >= 2) {
        if !lower.ends_with("ss") {
            push_unique(&mut out, stem.to_string());
        }
    } else if let Some(stem) = lower.strip_suffix("ed").filter(|s| s.len() >= 2) {
        strip_with_restorations(&mut out, stem);
    } else if let Some(stem) = lower.strip_suffix("ing").filter(|s| s.len() >= 2) {
        strip_with_restorations(&mut out, stem);
    }
    out
}

/// Ordered base-form candidates for a surface token.
///
/// The list is never empty: the identity form (lowercased for English,
/// verbatim for Chinese) is always the last candidate.
pub fn lemmatize(surface: &str, language: Language) -> Vec<String> {
    assert!(!surface.is_empty(), "lemmatize: empty surface");
    match language {
        Language::Chinese => vec![surface.to_string()],
        Language::English => {
            let lower = surface.to_lowercase();
            let mut out = english_candidates(&lower);
            push_unique(&mut out, lower);
            out
        }
    }
}
