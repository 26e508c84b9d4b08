//! Searchable knowledge database of predicate explanations and frame
//! descriptions, built from frame lexicon files.
//!
//! The lexicon is consumed in a normalized JSON-Lines form (one entry per
//! line); converting corpus-specific frame files (PropBank XML etc.) into it
//! is a sidecar concern. The adjunct role inventory is a plain text file with
//! one `LABEL: description` line per role.

mod lemma;

pub use lemma::lemmatize;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Language, RoleKind, RoleLabel};

/// Schema tag written into (and required from) serialized databases.
pub const DB_SCHEMA: &str = "srl-forge-db/1";

#[derive(Debug, Error)]
pub enum FrameDbError {
    #[error("malformed lexicon ({file}:{line}): {reason}")]
    MalformedLexicon {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("duplicate frameset id {id:?} for lemma {lemma:?} with conflicting content")]
    DuplicateFramesetId { lemma: String, id: String },
    #[error("unsupported database schema {found:?} (expected {DB_SCHEMA:?})")]
    SchemaMismatch { found: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FrameDbError + '_ {
    move |source| FrameDbError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One sense of a lemma: its frameset id and the core roles it licenses.
///
/// The same label may carry several descriptions within one frameset
/// (`A1: topic, A1: comment`); only exact `(label, description)` duplicates
/// are rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frameset {
    pub id: String,
    /// `(label, description)` pairs; labels are core by construction.
    pub core_roles: Vec<(RoleLabel, String)>,
}

/// Everything the database knows about one lemma.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub lemma: String,
    pub pos_hint: Option<String>,
    /// The predicate explanation attached to candidate lists in prompts.
    pub explanation: String,
    pub framesets: Vec<Frameset>,
}

/// Immutable lemma-keyed index plus the adjunct role inventory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameDb {
    pub language: Language,
    entries: BTreeMap<String, FrameEntry>,
    adjunct_roles: Vec<(RoleLabel, String)>,
}

/// Output of [`FrameDb::role_set`]: the per-predicate label set
/// (core roles unioned over framesets, plus the full adjunct inventory).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleSet {
    pub core: Vec<(RoleLabel, String)>,
    pub adjunct: Vec<(RoleLabel, String)>,
}

impl RoleSet {
    /// Distinct rendered labels across core and adjunct lists.
    pub fn label_count(&self) -> usize {
        self.labels().len()
    }

    pub fn labels(&self) -> std::collections::BTreeSet<String> {
        self.core
            .iter()
            .chain(self.adjunct.iter())
            .map(|(l, _)| l.rendered())
            .collect()
    }
}

/// Generic numbered-role fallback used when a lemma is not in the database.
pub fn generic_core_roles() -> Vec<(RoleLabel, String)> {
    [
        ("A0", "agent"),
        ("A1", "patient"),
        ("A2", "instrument, benefactive, or attribute"),
        ("A3", "starting point or attribute"),
        ("A4", "ending point"),
        ("A5", "modifier"),
    ]
    .into_iter()
    .map(|(l, d)| (RoleLabel::core(l).unwrap(), d.to_string()))
    .collect()
}

// Raw JSONL record shapes for the lexicon file format.
#[derive(Debug, Deserialize)]
struct RawRole {
    label: String,
    desc: String,
}

#[derive(Debug, Deserialize)]
struct RawFrameset {
    id: String,
    roles: Vec<RawRole>,
}

#[derive(Debug, Deserialize)]
struct RawEntry {
    lemma: String,
    #[serde(default)]
    pos_hint: Option<String>,
    explanation: String,
    framesets: Vec<RawFrameset>,
}

impl FrameDb {
    /// Builds the database from a directory of JSON-Lines lexicon files and
    /// an adjunct inventory file.
    ///
    /// The build is deterministic and order-independent: files are read in
    /// sorted path order, duplicate lemmas merge their framesets (sorted by
    /// frameset id, identical duplicates collapsing), and merged explanations
    /// are deduplicated and sorted.
    pub fn build(
        frames_dir: &Path,
        adjunct_inventory: &Path,
        language: Language,
    ) -> Result<Self, FrameDbError> {
        let mut files: Vec<PathBuf> = fs::read_dir(frames_dir)
            .map_err(io_err(frames_dir))?
            .collect::<Result<Vec<_>, _>>()
            .map_err(io_err(frames_dir))?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        files.sort();

        let mut entries: BTreeMap<String, FrameEntry> = BTreeMap::new();
        let mut explanations: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut record_count = 0usize;
        for file in &files {
            let display = file.display().to_string();
            let reader = BufReader::new(fs::File::open(file).map_err(io_err(file))?);
            for (line_no, line) in reader.lines().enumerate() {
                let line_no = line_no + 1;
                let line = line.map_err(io_err(file))?;
                if line.trim().is_empty() {
                    continue;
                }
                let raw: RawEntry = serde_json::from_str(&line).map_err(|e| {
                    FrameDbError::MalformedLexicon {
                        file: display.clone(),
                        line: line_no,
                        reason: e.to_string(),
                    }
                })?;
                record_count += 1;
                let entry = convert_entry(raw, &display, line_no)?;
                merge_entry(&mut entries, &mut explanations, entry)?;
            }
        }
        if record_count == 0 {
            return Err(FrameDbError::MalformedLexicon {
                file: frames_dir.display().to_string(),
                line: 0,
                reason: "no records".to_string(),
            });
        }
        for (lemma, texts) in explanations {
            if texts.len() > 1 {
                let mut unique = texts.clone();
                unique.sort();
                unique.dedup();
                entries.get_mut(&lemma).unwrap().explanation = unique.join("; ");
            }
        }

        let adjunct_roles = load_adjunct_inventory(adjunct_inventory)?;
        Ok(FrameDb {
            language,
            entries,
            adjunct_roles,
        })
    }

    /// Constructs a database directly from entries; used by tests and tools
    /// that already hold structured data.
    pub fn from_entries(
        language: Language,
        entries: impl IntoIterator<Item = FrameEntry>,
        adjunct_roles: Vec<(RoleLabel, String)>,
    ) -> Self {
        let entries = entries
            .into_iter()
            .map(|e| (e.lemma.clone(), e))
            .collect();
        FrameDb {
            language,
            entries,
            adjunct_roles,
        }
    }

    /// Exact-match lookup by lemma. Absence is an empty result, not an error.
    pub fn lookup(&self, lemma: &str) -> Option<&FrameEntry> {
        self.entries.get(lemma)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn adjunct_roles(&self) -> &[(RoleLabel, String)] {
        &self.adjunct_roles
    }

    /// The per-predicate role set: core roles unioned over the lemma's
    /// framesets (or the generic A0-A5 fallback when the lemma is unknown)
    /// plus the full adjunct inventory.
    pub fn role_set(&self, lemma: &str) -> RoleSet {
        let core = match self.entries.get(lemma) {
            Some(entry) => {
                let mut seen = Vec::new();
                for fs in &entry.framesets {
                    for pair in &fs.core_roles {
                        if !seen.contains(pair) {
                            seen.push(pair.clone());
                        }
                    }
                }
                seen
            }
            None => generic_core_roles(),
        };
        RoleSet {
            core,
            adjunct: self.adjunct_roles.clone(),
        }
    }

    /// Serializes to the single-file JSON format with the schema header.
    pub fn save(&self, path: &Path) -> Result<(), FrameDbError> {
        let doc = SerializedDb {
            schema: DB_SCHEMA.to_string(),
            language: self.language,
            adjunct_roles: self.adjunct_roles.clone(),
            entries: self.entries.values().cloned().collect(),
        };
        let json = serde_json::to_string_pretty(&doc).expect("database serializes");
        fs::write(path, json).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self, FrameDbError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let doc: SerializedDb = serde_json::from_str(&text).map_err(|source| FrameDbError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if doc.schema != DB_SCHEMA {
            return Err(FrameDbError::SchemaMismatch { found: doc.schema });
        }
        Ok(FrameDb::from_entries(
            doc.language,
            doc.entries,
            doc.adjunct_roles,
        ))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SerializedDb {
    schema: String,
    language: Language,
    adjunct_roles: Vec<(RoleLabel, String)>,
    entries: Vec<FrameEntry>,
}

fn convert_entry(raw: RawEntry, file: &str, line: usize) -> Result<FrameEntry, FrameDbError> {
    let malformed = |reason: String| FrameDbError::MalformedLexicon {
        file: file.to_string(),
        line,
        reason,
    };
    if raw.lemma.is_empty() {
        return Err(malformed("empty lemma".to_string()));
    }
    if raw.framesets.is_empty() {
        return Err(malformed(format!("lemma {:?} has no framesets", raw.lemma)));
    }
    let mut framesets = Vec::with_capacity(raw.framesets.len());
    for fs in raw.framesets {
        if fs.roles.is_empty() {
            return Err(malformed(format!("frameset {:?} has no roles", fs.id)));
        }
        let mut core_roles = Vec::with_capacity(fs.roles.len());
        for role in fs.roles {
            let label = RoleLabel::parse(&role.label)
                .map_err(|e| malformed(format!("frameset {:?}: {e}", fs.id)))?;
            if label.kind() != RoleKind::Core {
                return Err(malformed(format!(
                    "frameset {:?}: role {:?} is not a core label",
                    fs.id, role.label
                )));
            }
            let pair = (label, role.desc);
            if core_roles.contains(&pair) {
                return Err(malformed(format!(
                    "frameset {:?}: duplicate role {:?}: {:?}",
                    fs.id, role.label, pair.1
                )));
            }
            core_roles.push(pair);
        }
        framesets.push(Frameset {
            id: fs.id,
            core_roles,
        });
    }
    Ok(FrameEntry {
        lemma: raw.lemma,
        pos_hint: raw.pos_hint,
        explanation: raw.explanation,
        framesets,
    })
}

fn merge_entry(
    entries: &mut BTreeMap<String, FrameEntry>,
    explanations: &mut BTreeMap<String, Vec<String>>,
    entry: FrameEntry,
) -> Result<(), FrameDbError> {
    explanations
        .entry(entry.lemma.clone())
        .or_default()
        .push(entry.explanation.clone());
    match entries.get_mut(&entry.lemma) {
        None => {
            entries.insert(entry.lemma.clone(), entry);
        }
        Some(existing) => {
            existing.framesets.extend(entry.framesets);
            existing.framesets.sort_by(|a, b| a.id.cmp(&b.id));
            // Identical duplicates collapse; same id with different roles is
            // a lexicon defect.
            let mut deduped: Vec<Frameset> = Vec::with_capacity(existing.framesets.len());
            for fs in existing.framesets.drain(..) {
                match deduped.last() {
                    Some(prev) if prev.id == fs.id => {
                        if *prev != fs {
                            return Err(FrameDbError::DuplicateFramesetId {
                                lemma: entry.lemma.clone(),
                                id: fs.id,
                            });
                        }
                    }
                    _ => deduped.push(fs),
                }
            }
            existing.framesets = deduped;
            if existing.pos_hint.is_none() {
                existing.pos_hint = entry.pos_hint;
            }
        }
    }
    Ok(())
}

/// Parses the adjunct inventory file: one `LABEL: description` per line,
/// blank lines ignored.
fn load_adjunct_inventory(path: &Path) -> Result<Vec<(RoleLabel, String)>, FrameDbError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut out: Vec<(RoleLabel, String)> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: String| FrameDbError::MalformedLexicon {
            file: path.display().to_string(),
            line: line_no,
            reason,
        };
        let (label, desc) = line
            .split_once(':')
            .ok_or_else(|| malformed("expected \"LABEL: description\"".to_string()))?;
        let label = RoleLabel::parse(label).map_err(|e| malformed(e.to_string()))?;
        if out.iter().any(|(l, _)| *l == label) {
            return Err(malformed(format!("duplicate adjunct label {label}")));
        }
        out.push((label, desc.trim().to_string()));
    }
    if out.is_empty() {
        return Err(FrameDbError::MalformedLexicon {
            file: path.display().to_string(),
            line: 0,
            reason: "no adjunct roles".to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const BE_EXPLANATION: &str =
        "copula, existential, auxiliary, be like: multiword expression akin to \"say\"";

    fn write_file(dir: &Path, name: &str, content: &str) {
        let mut f = fs::File::create(dir.join(name)).unwrap();
        f.write_all(content.as_bytes()).unwrap();
    }

    fn adjuncts_file(dir: &Path) -> PathBuf {
        let path = dir.join("adjuncts.txt");
        fs::write(&path, "EXT: extent\nLOC: location\nTMP: temporal marker\n").unwrap();
        path
    }

    fn be_record() -> String {
        serde_json::json!({
            "lemma": "be",
            "pos_hint": "verb",
            "explanation": BE_EXPLANATION,
            "framesets": [
                {"id": "be.01", "roles": [
                    {"label": "A1", "desc": "topic"},
                    {"label": "A1", "desc": "comment"}
                ]},
                {"id": "be.02", "roles": [{"label": "A1", "desc": "thing that is"}]}
            ]
        })
        .to_string()
    }

    fn basic_db(dir: &Path) -> FrameDb {
        let frames = dir.join("frames");
        fs::create_dir(&frames).unwrap();
        let purpose = serde_json::json!({
            "lemma": "purpose",
            "explanation": "purpose",
            "framesets": [{"id": "purpose.01", "roles": [{"label": "A1", "desc": "purpose"}]}]
        });
        let campaign = serde_json::json!({
            "lemma": "campaign",
            "explanation": "work towards a goal",
            "framesets": [{"id": "campaign.01", "roles": [
                {"label": "A0", "desc": "campaigner"},
                {"label": "A1", "desc": "goal"}
            ]}]
        });
        write_file(
            &frames,
            "a.jsonl",
            &format!("{}\n{purpose}\n{campaign}\n", be_record()),
        );
        FrameDb::build(&frames, &adjuncts_file(dir), Language::English).unwrap()
    }

    #[test]
    fn build_and_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let db = basic_db(dir.path());
        let be = db.lookup("be").unwrap();
        assert_eq!(be.explanation, BE_EXPLANATION);
        assert_eq!(be.framesets.len(), 2);
        assert_eq!(be.framesets[1].core_roles[0].1, "thing that is");
        assert!(db.lookup("zzz-nonword").is_none());
    }

    #[test]
    fn empty_directory_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let frames = dir.path().join("frames");
        fs::create_dir(&frames).unwrap();
        let adj = adjuncts_file(dir.path());
        let err = FrameDb::build(&frames, &adj, Language::English).unwrap_err();
        assert!(err.to_string().contains("no records"));
    }

    #[test]
    fn duplicate_lemmas_merge_framesets() {
        let dir = tempfile::tempdir().unwrap();
        let frames = dir.path().join("frames");
        fs::create_dir(&frames).unwrap();
        let act1 = serde_json::json!({
            "lemma": "act",
            "explanation": "play a role; behave",
            "framesets": [{"id": "act.01", "roles": [
                {"label": "A0", "desc": "agent"},
                {"label": "A1", "desc": "predicate"}
            ]}]
        });
        let act2 = serde_json::json!({
            "lemma": "act",
            "explanation": "do something",
            "framesets": [{"id": "act.02", "roles": [
                {"label": "A0", "desc": "actor"},
                {"label": "A1", "desc": "grounds for action"}
            ]}]
        });
        write_file(&frames, "one.jsonl", &format!("{act1}\n"));
        write_file(&frames, "two.jsonl", &format!("{act2}\n"));
        let db = FrameDb::build(&frames, &adjuncts_file(dir.path()), Language::English).unwrap();
        let act = db.lookup("act").unwrap();
        let ids: Vec<&str> = act.framesets.iter().map(|f| f.id.as_str()).collect();
        assert_eq!(ids, ["act.01", "act.02"]);
        assert!(act.explanation.contains("play a role; behave"));
        assert!(act.explanation.contains("do something"));
    }

    #[test]
    fn conflicting_frameset_ids_error() {
        let dir = tempfile::tempdir().unwrap();
        let frames = dir.path().join("frames");
        fs::create_dir(&frames).unwrap();
        let a = serde_json::json!({
            "lemma": "act", "explanation": "x",
            "framesets": [{"id": "act.01", "roles": [{"label": "A0", "desc": "agent"}]}]
        });
        let b = serde_json::json!({
            "lemma": "act", "explanation": "x",
            "framesets": [{"id": "act.01", "roles": [{"label": "A1", "desc": "other"}]}]
        });
        write_file(&frames, "one.jsonl", &format!("{a}\n{b}\n"));
        let err =
            FrameDb::build(&frames, &adjuncts_file(dir.path()), Language::English).unwrap_err();
        assert!(matches!(err, FrameDbError::DuplicateFramesetId { .. }));
    }

    #[test]
    fn build_is_order_independent() {
        let mk = |order: &[&str]| {
            let dir = tempfile::tempdir().unwrap();
            let frames = dir.path().join("frames");
            fs::create_dir(&frames).unwrap();
            let records = [
                (
                    "act-one",
                    serde_json::json!({
                        "lemma": "act", "explanation": "play a role; behave",
                        "framesets": [{"id": "act.01", "roles": [{"label": "A0", "desc": "agent"}]}]
                    }),
                ),
                (
                    "act-two",
                    serde_json::json!({
                        "lemma": "act", "explanation": "do something",
                        "framesets": [{"id": "act.02", "roles": [{"label": "A0", "desc": "actor"}]}]
                    }),
                ),
            ];
            for (i, name) in order.iter().enumerate() {
                let record = &records.iter().find(|(n, _)| n == name).unwrap().1;
                write_file(&frames, &format!("{i}.jsonl"), &format!("{record}\n"));
            }
            let db =
                FrameDb::build(&frames, &adjuncts_file(dir.path()), Language::English).unwrap();
            let out = dir.path().join("db.json");
            db.save(&out).unwrap();
            fs::read_to_string(out).unwrap()
        };
        assert_eq!(mk(&["act-one", "act-two"]), mk(&["act-two", "act-one"]));
    }

    #[test]
    fn save_load_round_trip_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let db = basic_db(dir.path());
        let p1 = dir.path().join("db1.json");
        let p2 = dir.path().join("db2.json");
        db.save(&p1).unwrap();
        let reloaded = FrameDb::load(&p1).unwrap();
        reloaded.save(&p2).unwrap();
        assert_eq!(
            fs::read_to_string(p1).unwrap(),
            fs::read_to_string(p2).unwrap()
        );
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.json");
        fs::write(
            &path,
            r#"{"schema":"other/9","language":"english","adjunct_roles":[],"entries":[]}"#,
        )
        .unwrap();
        assert!(matches!(
            FrameDb::load(&path),
            Err(FrameDbError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn role_set_unions_framesets() {
        let dir = tempfile::tempdir().unwrap();
        let db = basic_db(dir.path());
        let roles = db.role_set("be");
        let core: Vec<(String, String)> = roles
            .core
            .iter()
            .map(|(l, d)| (l.rendered(), d.clone()))
            .collect();
        assert!(core.contains(&("A1".to_string(), "topic".to_string())));
        assert!(core.contains(&("A1".to_string(), "comment".to_string())));
        assert!(core.contains(&("A1".to_string(), "thing that is".to_string())));
        let adjunct: Vec<String> = roles.adjunct.iter().map(|(l, _)| l.rendered()).collect();
        assert!(adjunct.contains(&"EXT".to_string()));
        assert!(adjunct.contains(&"LOC".to_string()));
    }

    #[test]
    fn role_set_falls_back_to_generic_inventory() {
        let dir = tempfile::tempdir().unwrap();
        let db = basic_db(dir.path());
        let roles = db.role_set("zzz-nonword");
        let core: Vec<String> = roles.core.iter().map(|(l, _)| l.rendered()).collect();
        assert_eq!(core, ["A0", "A1", "A2", "A3", "A4", "A5"]);
        assert_eq!(roles.adjunct.len(), db.adjunct_roles().len());
    }

    #[test]
    fn role_set_core_is_subset_of_frameset_labels() {
        let dir = tempfile::tempdir().unwrap();
        let db = basic_db(dir.path());
        for lemma in ["be", "purpose", "campaign"] {
            let entry = db.lookup(lemma).unwrap();
            let all: Vec<(RoleLabel, String)> = entry
                .framesets
                .iter()
                .flat_map(|f| f.core_roles.iter().cloned())
                .collect();
            for pair in &db.role_set(lemma).core {
                assert!(all.contains(pair), "{lemma}: {pair:?} not in framesets");
            }
        }
    }
}
