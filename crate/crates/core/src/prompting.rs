//! Conversation assembly for both pipeline stages and their correction turns.
//!
//! Templates live in external UTF-8 files with `{SLOT}` placeholders, one set
//! per language; the builtin sets are compiled in from `templates/`. Prompt
//! and instruction text is data, not code, so a Chinese variant (or a local
//! rewording) needs no rebuild.
//!
//! Correction rounds are realized as appended chat turns rather than string
//! concatenation: the transcript carries the model's own prior output as an
//! assistant turn and the correction instruction as a fresh user turn.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame_db::{FrameEntry, RoleSet};
use crate::retrieval::CandidatePredicate;
use crate::tagging::TaggedText;
use crate::types::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    System,
    User,
    Assistant,
}

/// One chat turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
}

/// An ordered transcript: one system turn, then alternating user/assistant.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Conversation {
    turns: Vec<Turn>,
}

impl Conversation {
    pub fn with_system(text: impl Into<String>) -> Self {
        Conversation {
            turns: vec![Turn {
                speaker: Speaker::System,
                text: text.into(),
            }],
        }
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn last(&self) -> Option<&Turn> {
        self.turns.last()
    }

    fn push(&mut self, speaker: Speaker, text: String) {
        assert!(!text.is_empty(), "conversation turn must be non-empty");
        let ok = match (self.turns.last().map(|t| t.speaker), speaker) {
            (None, Speaker::System) => true,
            (Some(Speaker::System), Speaker::User) => true,
            (Some(Speaker::User), Speaker::Assistant) => true,
            (Some(Speaker::Assistant), Speaker::User) => true,
            _ => false,
        };
        assert!(
            ok,
            "conversation alternation violated: {:?} after {:?}",
            speaker,
            self.turns.last().map(|t| t.speaker)
        );
        self.turns.push(Turn { speaker, text });
    }

    pub fn push_user(&mut self, text: impl Into<String>) {
        self.push(Speaker::User, text.into());
    }

    pub fn push_assistant(&mut self, text: impl Into<String>) {
        self.push(Speaker::Assistant, text.into());
    }

    /// Appends the model output as an assistant turn unless it is already the
    /// last turn of the transcript.
    pub fn ensure_assistant(&mut self, text: &str) {
        match self.turns.last() {
            Some(t) if t.speaker == Speaker::Assistant && t.text == text => {}
            _ => self.push_assistant(text),
        }
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }
}

impl fmt::Display for Conversation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for turn in &self.turns {
            let name = match turn.speaker {
                Speaker::System => "System",
                Speaker::User => "User",
                Speaker::Assistant => "Assistant",
            };
            writeln!(f, "{name}: {}", turn.text)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template {stage:?}: slot {{{slot}}} missing")]
    SlotMissing { stage: String, slot: String },
    #[error("template {stage:?}: slot {{{slot}}} appears more than once")]
    SlotDuplicated { stage: String, slot: String },
    #[error("template file {path} unreadable: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The per-language template set covering both stages and their corrections.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub language: Language,
    system: String,
    predicate_task: String,
    predicate_correction: String,
    argument_task: String,
    argument_correction: String,
    stop_phrase: String,
}

const PREDICATE_TASK_SLOTS: &[&str] = &["TEXT", "CANDIDATE_HINT", "EXPLANATIONS"];
const ARGUMENT_TASK_SLOTS: &[&str] = &["TEXT_TAGGED", "ADJUNCT_LIST", "FRAMES"];
const CORRECTION_SLOTS: &[&str] = &["LAST_OUTPUT"];

impl TemplateSet {
    /// The compiled-in template set for a language.
    pub fn builtin(language: Language) -> Self {
        macro_rules! load {
            ($lang:literal) => {
                TemplateSet::from_parts(
                    language,
                    include_str!(concat!("../templates/", $lang, "/system.txt")),
                    include_str!(concat!("../templates/", $lang, "/predicate_task.txt")),
                    include_str!(concat!("../templates/", $lang, "/predicate_correction.txt")),
                    include_str!(concat!("../templates/", $lang, "/argument_task.txt")),
                    include_str!(concat!("../templates/", $lang, "/argument_correction.txt")),
                    include_str!(concat!("../templates/", $lang, "/stop_phrase.txt")),
                )
                .expect("builtin templates are valid")
            };
        }
        match language {
            Language::English => load!("en"),
            Language::Chinese => load!("zh"),
        }
    }

    /// Loads a template set from `<dir>/<language code>/<stage>.txt`.
    pub fn load_dir(dir: &Path, language: Language) -> Result<Self, TemplateError> {
        let base = dir.join(language.code());
        let read = |name: &str| -> Result<String, TemplateError> {
            let path = base.join(name);
            std::fs::read_to_string(&path).map_err(|source| TemplateError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        TemplateSet::from_parts(
            language,
            &read("system.txt")?,
            &read("predicate_task.txt")?,
            &read("predicate_correction.txt")?,
            &read("argument_task.txt")?,
            &read("argument_correction.txt")?,
            &read("stop_phrase.txt")?,
        )
    }

    fn from_parts(
        language: Language,
        system: &str,
        predicate_task: &str,
        predicate_correction: &str,
        argument_task: &str,
        argument_correction: &str,
        stop_phrase: &str,
    ) -> Result<Self, TemplateError> {
        let tpl = TemplateSet {
            language,
            system: system.trim_end().to_string(),
            predicate_task: predicate_task.trim_end().to_string(),
            predicate_correction: predicate_correction.trim_end().to_string(),
            argument_task: argument_task.trim_end().to_string(),
            argument_correction: argument_correction.trim_end().to_string(),
            stop_phrase: stop_phrase.trim().to_string(),
        };
        check_slots("predicate_task", &tpl.predicate_task, PREDICATE_TASK_SLOTS)?;
        check_slots("argument_task", &tpl.argument_task, ARGUMENT_TASK_SLOTS)?;
        check_slots(
            "predicate_correction",
            &tpl.predicate_correction,
            CORRECTION_SLOTS,
        )?;
        check_slots(
            "argument_correction",
            &tpl.argument_correction,
            CORRECTION_SLOTS,
        )?;
        Ok(tpl)
    }

    pub fn stop_phrase(&self) -> &str {
        &self.stop_phrase
    }
}

fn check_slots(stage: &str, template: &str, slots: &[&str]) -> Result<(), TemplateError> {
    for slot in slots {
        let needle = format!("{{{slot}}}");
        match template.matches(needle.as_str()).count() {
            0 => {
                return Err(TemplateError::SlotMissing {
                    stage: stage.to_string(),
                    slot: slot.to_string(),
                })
            }
            1 => {}
            _ => {
                return Err(TemplateError::SlotDuplicated {
                    stage: stage.to_string(),
                    slot: slot.to_string(),
                })
            }
        }
    }
    Ok(())
}

fn fill(template: &str, slot: &str, value: &str) -> String {
    let needle = format!("{{{slot}}}");
    if value.is_empty() {
        // Omit the whole block: drop the slot line rather than leaving a
        // blank one behind.
        if let Some(pos) = template.find(&needle) {
            let line_start = template[..pos].rfind('\n').map_or(0, |i| i + 1);
            let line_end = template[pos..]
                .find('\n')
                .map_or(template.len(), |i| pos + i + 1);
            let line = &template[line_start..line_end];
            if line.trim() == needle {
                let mut out = String::with_capacity(template.len());
                out.push_str(&template[..line_start]);
                out.push_str(&template[line_end..]);
                return out;
            }
        }
    }
    template.replacen(&needle, value, 1)
}

/// Builds the predicate identification prompt: one system turn plus one user
/// turn containing the raw sentence, the tagged candidate hint, and one
/// interpretation line per candidate in token order.
pub fn build_predicate_prompt(
    sentence: &crate::types::Sentence,
    candidates: &[CandidatePredicate],
    hint: &TaggedText,
    tpl: &TemplateSet,
) -> Conversation {
    let explanations = candidates
        .iter()
        .map(|c| explanation_line(&c.matched_lemma, &c.explanation, tpl.language))
        .collect::<Vec<_>>()
        .join("\n");
    let mut user = tpl.predicate_task.clone();
    user = fill(&user, "TEXT", &sentence.text());
    user = fill(&user, "CANDIDATE_HINT", &hint.text);
    user = fill(&user, "EXPLANATIONS", &explanations);
    let mut conv = Conversation::with_system(&tpl.system);
    conv.push_user(user);
    conv
}

fn explanation_line(lemma: &str, explanation: &str, language: Language) -> String {
    match language {
        Language::English => format!(
            "When the verb \"{lemma}\" functions as a predicate, its interpretation is: {explanation}."
        ),
        Language::Chinese => format!("当“{lemma}”作为谓词时，其释义为：{explanation}。"),
    }
}

/// Appends a predicate self-correction round: the prior output as an
/// assistant turn (if not already last) plus the correction instruction.
/// `prev_issues` carries the issues text reported by the previous round, fed
/// back into the next instruction.
pub fn build_predicate_correction(
    prior: &Conversation,
    last_output: &str,
    prev_issues: Option<&str>,
    tpl: &TemplateSet,
) -> Conversation {
    correction(prior, last_output, prev_issues, &tpl.predicate_correction)
}

/// Argument-stage analogue of [`build_predicate_correction`].
pub fn build_argument_correction(
    prior: &Conversation,
    last_output: &str,
    prev_issues: Option<&str>,
    tpl: &TemplateSet,
) -> Conversation {
    correction(prior, last_output, prev_issues, &tpl.argument_correction)
}

fn correction(
    prior: &Conversation,
    last_output: &str,
    prev_issues: Option<&str>,
    template: &str,
) -> Conversation {
    let mut conv = prior.clone();
    conv.ensure_assistant(last_output);
    let mut user = fill(template, "LAST_OUTPUT", last_output);
    if let Some(issues) = prev_issues.filter(|s| !s.trim().is_empty()) {
        user.push('\n');
        user.push_str(issues);
    }
    conv.push_user(user);
    conv
}

/// Builds the argument labeling prompt for one predicate, appended to the
/// post-correction predicate-stage transcript. `entry` supplies the frame
/// descriptions; when the lemma is unknown the generic core roles from
/// `roles` stand in and no frame blocks are rendered.
pub fn build_argument_prompt(
    prior: &Conversation,
    pred_tagged: &TaggedText,
    roles: &RoleSet,
    entry: Option<&FrameEntry>,
    tpl: &TemplateSet,
) -> Conversation {
    let adjunct_list = roles
        .adjunct
        .iter()
        .map(|(label, desc)| format!("{}: {desc}", label.rendered()))
        .collect::<Vec<_>>()
        .join("\n");
    let frames = match entry {
        Some(entry) => frames_block(pred_tagged, entry, tpl.language),
        None => roles
            .core
            .iter()
            .map(|(label, desc)| format!("{}: {desc}", label.rendered()))
            .collect::<Vec<_>>()
            .join("\n"),
    };
    let mut user = tpl.argument_task.clone();
    user = fill(&user, "TEXT_TAGGED", &pred_tagged.text);
    user = fill(&user, "ADJUNCT_LIST", &adjunct_list);
    user = fill(&user, "FRAMES", &frames);
    let mut conv = prior.clone();
    conv.push_user(user);
    conv
}

fn frames_block(pred_tagged: &TaggedText, entry: &FrameEntry, language: Language) -> String {
    let surface = predicate_surface(&pred_tagged.text).unwrap_or(&entry.lemma);
    let pos = entry.pos_hint.as_deref().unwrap_or("verb");
    let mut out = String::new();
    match language {
        Language::English => {
            out.push_str(&format!(
                "For the predicate \"{surface}\" in this text, it has the following frames:\n"
            ));
            out.push_str(&format!("For {} as a {pos}:", entry.lemma));
            for (i, fs) in entry.framesets.iter().enumerate() {
                let roles = fs
                    .core_roles
                    .iter()
                    .map(|(label, desc)| format!("{}: {desc}", label.rendered()))
                    .collect::<Vec<_>>()
                    .join(", ");
                out.push_str(&format!(
                    "\nFrame {}: The core arguments it has are: {roles}.",
                    i + 1
                ));
            }
        }
        Language::Chinese => {
            out.push_str(&format!("对于文本中的谓词“{surface}”，它具有以下框架：\n"));
            out.push_str(&format!("“{}”：", entry.lemma));
            for (i, fs) in entry.framesets.iter().enumerate() {
                let roles = fs
                    .core_roles
                    .iter()
                    .map(|(label, desc)| format!("{}: {desc}", label.rendered()))
                    .collect::<Vec<_>>()
                    .join(", ");
                out.push_str(&format!("\n框架{}：其核心论元为：{roles}。", i + 1));
            }
        }
    }
    out
}

/// Extracts the single `@@`...`##` segment from a predicate-tagged text.
fn predicate_surface(text: &str) -> Option<&str> {
    let start = text.find("@@")? + 2;
    let end = start + text[start..].find("##")?;
    Some(&text[start..end])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame_db::Frameset;
    use crate::types::{RoleLabel, Sentence};

    fn cand(lemma: &str, explanation: &str) -> CandidatePredicate {
        CandidatePredicate {
            token: 0,
            matched_lemma: lemma.to_string(),
            explanation: explanation.to_string(),
        }
    }

    fn hint(text: &str) -> TaggedText {
        TaggedText {
            text: text.to_string(),
            stage: crate::tagging::TagStage::Predicate,
        }
    }

    fn tpl() -> TemplateSet {
        TemplateSet::builtin(Language::English)
    }

    fn appendix_sentence() -> Sentence {
        Sentence::from_space_separated(
            "g1",
            "What was the , purpose and goal of this campaign ?",
        )
        .unwrap()
    }

    #[test]
    fn predicate_prompt_contains_hint_and_lines() {
        let s = appendix_sentence();
        let cands = vec![
            cand("be", "copula, existential, auxiliary, be like: multiword expression akin to \"say\""),
            cand("purpose", "purpose"),
            cand("campaign", "work towards a goal"),
        ];
        let h = hint("What @@was## the , @@purpose## and goal of this @@campaign## ?");
        let conv = build_predicate_prompt(&s, &cands, &h, &tpl());
        assert_eq!(conv.len(), 2);
        let user = &conv.turns()[1].text;
        assert!(user.contains("Possible predicate results in the text are:"));
        assert!(user.contains("\"What @@was## the , @@purpose## and goal of this @@campaign## ?\""));
        let lines = user
            .lines()
            .filter(|l| l.starts_with("When the verb"))
            .count();
        assert_eq!(lines, 3);
        assert!(user.contains(
            "When the verb \"be\" functions as a predicate, its interpretation is: copula, existential, auxiliary, be like: multiword expression akin to \"say\"."
        ));
    }

    #[test]
    fn predicate_prompt_without_candidates_omits_block() {
        let s = appendix_sentence();
        let conv = build_predicate_prompt(&s, &[], &hint(&s.text()), &tpl());
        let user = &conv.turns()[1].text;
        assert!(!user.contains("When the verb"));
        assert!(!user.contains("{EXPLANATIONS}"));
        assert!(user.contains("Based on the given possible predicate results"));
        assert!(!user.contains("\n\nBased on"));
    }

    #[test]
    fn correction_grows_by_two_turns() {
        let s = appendix_sentence();
        let conv = build_predicate_prompt(&s, &[], &hint(&s.text()), &tpl());
        let out = "What @@was## the , purpose and goal of this campaign ?";
        let next = build_predicate_correction(&conv, out, None, &tpl());
        assert_eq!(next.len(), conv.len() + 2);
        let user = &next.turns()[next.len() - 1].text;
        assert!(user.contains("Issues detected:"));
        assert!(user.contains("Stop checking."));
        assert!(user.contains(out));
    }

    #[test]
    fn repeated_corrections_accumulate_instruction_turns() {
        let s = appendix_sentence();
        let mut conv = build_predicate_prompt(&s, &[], &hint(&s.text()), &tpl());
        let mut last = "output 0".to_string();
        for i in 0..3 {
            conv = build_predicate_correction(&conv, &last, None, &tpl());
            last = format!("revision {i}");
            conv.push_assistant(&last);
        }
        let count = conv
            .turns()
            .iter()
            .filter(|t| t.speaker == Speaker::User && t.text.contains("rethink the generated"))
            .count();
        assert_eq!(count, 3);
    }

    #[test]
    fn previous_issues_are_fed_back() {
        let s = appendix_sentence();
        let conv = build_predicate_prompt(&s, &[], &hint(&s.text()), &tpl());
        let next = build_predicate_correction(&conv, "out", Some("the predicate is missing."), &tpl());
        assert!(next.last().unwrap().text.ends_with("the predicate is missing."));
    }

    #[test]
    fn argument_prompt_lists_adjuncts_and_frames() {
        let s = appendix_sentence();
        let mut prior = build_predicate_prompt(&s, &[], &hint(&s.text()), &tpl());
        prior.push_assistant("What @@was## the , purpose and goal of this campaign ?");
        let entry = FrameEntry {
            lemma: "be".to_string(),
            pos_hint: Some("verb".to_string()),
            explanation: String::new(),
            framesets: vec![
                Frameset {
                    id: "be.01".to_string(),
                    core_roles: vec![
                        (RoleLabel::parse("A1").unwrap(), "topic".to_string()),
                        (RoleLabel::parse("A1").unwrap(), "comment".to_string()),
                    ],
                },
                Frameset {
                    id: "be.02".to_string(),
                    core_roles: vec![(RoleLabel::parse("A1").unwrap(), "thing that is".to_string())],
                },
            ],
        };
        let roles = RoleSet {
            core: entry
                .framesets
                .iter()
                .flat_map(|f| f.core_roles.iter().cloned())
                .collect(),
            adjunct: vec![
                (RoleLabel::parse("EXT").unwrap(), "extent".to_string()),
                (RoleLabel::parse("LOC").unwrap(), "location".to_string()),
            ],
        };
        let tagged = hint("What @@was## the , purpose and goal of this campaign ?");
        let conv = build_argument_prompt(&prior, &tagged, &roles, Some(&entry), &tpl());
        assert_eq!(conv.len(), prior.len() + 1);
        let user = &conv.last().unwrap().text;
        assert!(user.contains("EXT: extent\nLOC: location"));
        assert!(user.contains("For the predicate \"was\" in this text"));
        assert!(user.contains("Frame 1: The core arguments it has are: A1: topic, A1: comment."));
        assert!(user.contains("Frame 2: The core arguments it has are: A1: thing that is."));
    }

    #[test]
    fn argument_prompt_fallback_uses_generic_roles() {
        let s = appendix_sentence();
        let mut prior = build_predicate_prompt(&s, &[], &hint(&s.text()), &tpl());
        prior.push_assistant("ok");
        let roles = RoleSet {
            core: crate::frame_db::generic_core_roles(),
            adjunct: vec![(RoleLabel::parse("TMP").unwrap(), "temporal".to_string())],
        };
        let conv = build_argument_prompt(&prior, &hint("a @@b## c"), &roles, None, &tpl());
        let user = &conv.last().unwrap().text;
        assert!(user.contains("A0: agent"));
        assert!(user.contains("A5:"));
        assert!(!user.contains("Frame 1:"));
        assert!(user.contains("Rewrite the given text and enclose"));
    }

    #[test]
    fn adjunct_line_count_matches_inventory() {
        let s = appendix_sentence();
        let mut prior = build_predicate_prompt(&s, &[], &hint(&s.text()), &tpl());
        prior.push_assistant("ok");
        let adjunct: Vec<(RoleLabel, String)> = (0..20)
            .map(|i| {
                (
                    RoleLabel::parse(&format!("X{i}")).unwrap(),
                    format!("desc {i}"),
                )
            })
            .collect();
        let roles = RoleSet {
            core: crate::frame_db::generic_core_roles(),
            adjunct: adjunct.clone(),
        };
        let conv = build_argument_prompt(&prior, &hint("a @@b## c"), &roles, None, &tpl());
        let user = &conv.last().unwrap().text;
        for (i, (label, desc)) in adjunct.iter().enumerate() {
            assert!(user.contains(&format!("{}: {desc}", label.rendered())), "line {i}");
        }
    }

    #[test]
    fn determinism_byte_identical() {
        let s = appendix_sentence();
        let cands = vec![cand("be", "x")];
        let h = hint("What @@was## the , purpose and goal of this campaign ?");
        let a = build_predicate_prompt(&s, &cands, &h, &tpl());
        let b = build_predicate_prompt(&s, &cands, &h, &tpl());
        assert_eq!(a, b);
    }

    #[test]
    fn correction_builders_only_append() {
        let s = appendix_sentence();
        let conv = build_predicate_prompt(&s, &[], &hint(&s.text()), &tpl());
        let next = build_argument_correction(&conv, "out", None, &tpl());
        assert_eq!(&next.turns()[..conv.len()], conv.turns());
    }

    #[test]
    fn load_dir_round_trips_builtin() {
        let dir = tempfile::tempdir().unwrap();
        let en = dir.path().join("en");
        std::fs::create_dir(&en).unwrap();
        for name in [
            "system.txt",
            "predicate_task.txt",
            "predicate_correction.txt",
            "argument_task.txt",
            "argument_correction.txt",
            "stop_phrase.txt",
        ] {
            std::fs::copy(
                format!("{}/templates/en/{name}", env!("CARGO_MANIFEST_DIR")),
                en.join(name),
            )
            .unwrap();
        }
        let loaded = TemplateSet::load_dir(dir.path(), Language::English).unwrap();
        assert_eq!(loaded.stop_phrase(), "Stop checking.");
    }

    #[test]
    fn slot_validation_rejects_missing_and_duplicate() {
        let err = TemplateSet::from_parts(
            Language::English,
            "sys",
            "no slots here",
            "{LAST_OUTPUT}",
            "{TEXT_TAGGED} {ADJUNCT_LIST} {FRAMES}",
            "{LAST_OUTPUT}",
            "Stop checking.",
        )
        .unwrap_err();
        assert!(matches!(err, TemplateError::SlotMissing { .. }));
        let err = TemplateSet::from_parts(
            Language::English,
            "sys",
            "{TEXT} {TEXT} {CANDIDATE_HINT} {EXPLANATIONS}",
            "{LAST_OUTPUT}",
            "{TEXT_TAGGED} {ADJUNCT_LIST} {FRAMES}",
            "{LAST_OUTPUT}",
            "Stop checking.",
        )
        .unwrap_err();
        assert!(matches!(err, TemplateError::SlotDuplicated { .. }));
    }
}
