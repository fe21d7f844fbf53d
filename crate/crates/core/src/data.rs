//! Dataset loaders.
//!
//! Three input shapes are supported:
//!
//! * **generic**: UTF-8 JSON lines, one claim per line:
//!   `{"id": "...", "claim": "...", "label": true|false|null, "evidence": [{"title": "...", "text": "..."}]}`.
//!   This is the stable interchange format ([`write_generic`] emits it).
//! * **hover**: a JSON array (or JSON lines) of validation records with
//!   `uid`/`id`, `claim`, `label` (`SUPPORTED`/`NOT_SUPPORTED`), `num_hops` and
//!   `evidence`, where each evidence entry is `{"title", "text"}`,
//!   `[title, text]` or `[title, sentence_id, text]`.
//! * **feverous**: JSON lines with `id`, `claim`, `label`
//!   (`SUPPORTS`/`REFUTES`) and `evidence` entries `{"id": "<Page>_sentence_<n>", "text"}`
//!   or `{"title", "text"}`. Table cells, captions and list items are dropped;
//!   a record left with no sentence evidence is rejected and counted.
//!
//! Sentences cited from the same page are joined into one evidence piece
//! titled with the page name, in first-citation order.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::pipeline::{ClaimInstance, EvidencePiece, Verdict};

/// Claim counts of the HOVER validation subsets by hop count.
pub const HOVER_VALIDATION_SIZES: [(u32, usize); 3] = [(2, 1126), (3, 1835), (4, 1039)];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}{}: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    #[error("{path}: record {id}: unknown label `{label}`")]
    UnknownLabel {
        path: PathBuf,
        id: String,
        label: String,
    },
    #[error("{path}: record {id}: missing evidence field")]
    MissingEvidence { path: PathBuf, id: String },
    #[error("{path}: record {id}: {message}")]
    InvalidRecord {
        path: PathBuf,
        id: String,
        message: String,
    },
    #[error("{path}: duplicate id `{id}` on lines {first} and {second}")]
    DuplicateId {
        path: PathBuf,
        id: String,
        first: usize,
        second: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Hover,
    Feverous,
    Generic,
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hover" => Ok(DatasetKind::Hover),
            "feverous" | "feverous-s" => Ok(DatasetKind::Feverous),
            "generic" | "jsonl" => Ok(DatasetKind::Generic),
            other => Err(format!(
                "unknown dataset `{other}` (expected hover, feverous or generic)"
            )),
        }
    }
}

/// Source label text → verdict. Lookup is exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pairs: Vec<(String, Verdict)>,
}

impl LabelMap {
    pub fn new<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Verdict)>,
        S: Into<String>,
    {
        LabelMap {
            pairs: pairs.into_iter().map(|(s, v)| (s.into(), v)).collect(),
        }
    }

    pub fn hover() -> Self {
        Self::new([
            ("SUPPORTED", Verdict::True),
            ("NOT_SUPPORTED", Verdict::False),
        ])
    }

    pub fn feverous() -> Self {
        Self::new([("SUPPORTS", Verdict::True), ("REFUTES", Verdict::False)])
    }

    pub fn get(&self, label: &str) -> Option<Verdict> {
        self.pairs.iter().find(|(s, _)| s == label).map(|(_, v)| *v)
    }
}

/// A claim as it appears in a source file, before label mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRecord {
    pub id: String,
    pub claim: String,
    pub label: String,
    pub evidence: Vec<(Option<String>, String)>,
    pub hops: Option<u32>,
}

impl DatasetRecord {
    fn into_instance(self, labels: &LabelMap, path: &Path) -> Result<ClaimInstance, DataError> {
        let gold = labels
            .get(&self.label)
            .ok_or_else(|| DataError::UnknownLabel {
                path: path.to_owned(),
                id: self.id.clone(),
                label: self.label.clone(),
            })?;
        let instance = ClaimInstance {
            evidence: group_by_title(self.evidence),
            id: self.id,
            claim: self.claim,
            gold_label: Some(gold),
        };
        instance
            .validate()
            .map_err(|message| DataError::InvalidRecord {
                path: path.to_owned(),
                id: instance.id.clone(),
                message,
            })?;
        Ok(instance)
    }
}

/// Joins sentences of the same page into one piece; untitled sentences stay
/// separate.
fn group_by_title(entries: Vec<(Option<String>, String)>) -> Vec<EvidencePiece> {
    let mut pieces: Vec<EvidencePiece> = Vec::new();
    let mut by_title: HashMap<String, usize> = HashMap::new();
    for (title, text) in entries {
        let text = text.trim().to_owned();
        if text.is_empty() {
            continue;
        }
        match title {
            Some(t) => match by_title.get(&t) {
                Some(&i) => {
                    let piece = &mut pieces[i];
                    piece.text.push(' ');
                    piece.text.push_str(&text);
                }
                None => {
                    by_title.insert(t.clone(), pieces.len());
                    pieces.push(EvidencePiece::titled(t, text));
                }
            },
            None => pieces.push(EvidencePiece::new(text)),
        }
    }
    pieces
}

fn read(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Parses either a top-level JSON array or JSON lines, returning each value
/// with its 1-based line number (array elements get `None`).
fn json_records(text: &str, path: &Path) -> Result<Vec<(Option<usize>, Value)>, DataError> {
    let trimmed = text.trim_start();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    if trimmed.starts_with('[') {
        let values: Vec<Value> = serde_json::from_str(text).map_err(|e| DataError::Parse {
            path: path.to_owned(),
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        return Ok(values.into_iter().map(|v| (None, v)).collect());
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|v| (Some(i + 1), v))
                .map_err(|e| DataError::Parse {
                    path: path.to_owned(),
                    line: Some(i + 1),
                    message: e.to_string(),
                })
        })
        .collect()
}

fn id_of(v: &Value, keys: &[&str]) -> Option<String> {
    keys.iter().find_map(|k| match v.get(*k)? {
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    })
}

fn str_field(v: &Value, key: &str) -> Option<String> {
    v.get(key).and_then(Value::as_str).map(str::to_owned)
}

fn parse_error(path: &Path, line: Option<usize>, message: impl Into<String>) -> DataError {
    DataError::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn hover_evidence(entry: &Value) -> Option<(Option<String>, String)> {
    match entry {
        Value::Object(o) => {
            let text = o.get("text")?.as_str()?.to_owned();
            let title = o.get("title").and_then(Value::as_str).map(str::to_owned);
            Some((title, text))
        }
        Value::Array(a) => match a.as_slice() {
            [Value::String(title), Value::String(text)] => {
                Some((Some(title.clone()), text.clone()))
            }
            [Value::String(title), _, Value::String(text)] => {
                Some((Some(title.clone()), text.clone()))
            }
            _ => None,
        },
        Value::String(text) => Some((None, text.clone())),
        _ => None,
    }
}

/// Loads HOVER validation records, optionally keeping only one hop count.
pub fn load_hover(path: &Path, hops_filter: Option<u32>) -> Result<Vec<ClaimInstance>, DataError> {
    let labels = LabelMap::hover();
    let mut out = Vec::new();
    for (line, v) in json_records(&read(path)?, path)? {
        let id =
            id_of(&v, &["uid", "id"]).ok_or_else(|| parse_error(path, line, "record has no id"))?;
        let claim = str_field(&v, "claim")
            .ok_or_else(|| parse_error(path, line, format!("record {id} has no claim")))?;
        let label = str_field(&v, "label")
            .ok_or_else(|| parse_error(path, line, format!("record {id} has no label")))?;
        let hops = ["num_hops", "hops"]
            .iter()
            .find_map(|k| v.get(*k).and_then(Value::as_u64))
            .map(|h| h as u32);
        let raw = v.get("evidence").and_then(Value::as_array).ok_or_else(|| {
            DataError::MissingEvidence {
                path: path.to_owned(),
                id: id.clone(),
            }
        })?;
        let evidence = raw
            .iter()
            .map(|e| {
                hover_evidence(e).ok_or_else(|| {
                    parse_error(
                        path,
                        line,
                        format!("record {id}: unrecognized evidence entry {e}"),
                    )
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let (Some(want), Some(have)) = (hops_filter, hops) {
            if want != have {
                continue;
            }
        } else if hops_filter.is_some() && hops.is_none() {
            return Err(parse_error(
                path,
                line,
                format!("record {id} has no num_hops"),
            ));
        }
        let record = DatasetRecord {
            id,
            claim,
            label,
            evidence,
            hops,
        };
        out.push(record.into_instance(&labels, path)?);
    }
    Ok(out)
}

/// Counts from a FEVEROUS load.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FeverousDiagnostics {
    /// Records whose evidence was entirely structured (tables, lists).
    pub rejected_structured: usize,
    /// Structured elements dropped from otherwise usable records.
    pub dropped_elements: usize,
}

enum FeverousElement {
    Sentence(Option<String>, String),
    Structured,
}

fn feverous_element(entry: &Value) -> Option<FeverousElement> {
    let o = entry.as_object()?;
    let text = o.get("text").and_then(Value::as_str).map(str::to_owned);
    let element_id = ["id", "element_id"]
        .iter()
        .find_map(|k| o.get(*k).and_then(Value::as_str));
    if let Some(eid) = element_id {
        return match eid.split_once("_sentence_") {
            Some((page, _)) => Some(FeverousElement::Sentence(
                Some(page.replace('_', " ")),
                text?,
            )),
            None => Some(FeverousElement::Structured),
        };
    }
    match o.get("type").and_then(Value::as_str) {
        Some(t) if t != "sentence" => Some(FeverousElement::Structured),
        _ => Some(FeverousElement::Sentence(
            o.get("title").and_then(Value::as_str).map(str::to_owned),
            text?,
        )),
    }
}

pub fn load_feverous(path: &Path) -> Result<Vec<ClaimInstance>, DataError> {
    load_feverous_with_diagnostics(path).map(|(v, _)| v)
}

pub fn load_feverous_with_diagnostics(
    path: &Path,
) -> Result<(Vec<ClaimInstance>, FeverousDiagnostics), DataError> {
    let labels = LabelMap::feverous();
    let mut diag = FeverousDiagnostics::default();
    let mut out = Vec::new();
    for (line, v) in json_records(&read(path)?, path)? {
        let claim = str_field(&v, "claim").unwrap_or_default();
        let id = id_of(&v, &["id"]);
        // the upstream files open with an empty header record
        if claim.is_empty() && id.is_none() {
            continue;
        }
        let id = id.ok_or_else(|| parse_error(path, line, "record has no id"))?;
        let label = str_field(&v, "label")
            .ok_or_else(|| parse_error(path, line, format!("record {id} has no label")))?;
        let raw = v.get("evidence").and_then(Value::as_array).ok_or_else(|| {
            DataError::MissingEvidence {
                path: path.to_owned(),
                id: id.clone(),
            }
        })?;
        let mut sentences = Vec::new();
        let mut structured = 0;
        for e in raw {
            match feverous_element(e) {
                Some(FeverousElement::Sentence(title, text)) => sentences.push((title, text)),
                Some(FeverousElement::Structured) => structured += 1,
                None => {
                    return Err(parse_error(
                        path,
                        line,
                        format!("record {id}: unrecognized evidence entry {e}"),
                    ))
                }
            }
        }
        if sentences.is_empty() && structured > 0 {
            diag.rejected_structured += 1;
            log::warn!(
                "{}: record {id}: only structured evidence, skipped",
                path.display()
            );
            continue;
        }
        diag.dropped_elements += structured;
        let record = DatasetRecord {
            id,
            claim,
            label,
            evidence: sentences,
            hops: None,
        };
        out.push(record.into_instance(&labels, path)?);
    }
    if diag.rejected_structured > 0 {
        log::info!(
            "{}: rejected {} record(s) with structured-only evidence",
            path.display(),
            diag.rejected_structured
        );
    }
    Ok((out, diag))
}

#[derive(Debug, Serialize, Deserialize)]
struct GenericRecord {
    id: String,
    claim: String,
    #[serde(default)]
    label: Option<bool>,
    evidence: Vec<EvidencePiece>,
}

/// Loads the generic JSON-lines format in file order.
pub fn load_generic(path: &Path) -> Result<Vec<ClaimInstance>, DataError> {
    let text = read(path)?;
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GenericRecord = serde_json::from_str(line)
            .map_err(|e| parse_error(path, Some(line_no), e.to_string()))?;
        if let Some(&first) = seen.get(&rec.id) {
            return Err(DataError::DuplicateId {
                path: path.to_owned(),
                id: rec.id,
                first,
                second: line_no,
            });
        }
        seen.insert(rec.id.clone(), line_no);
        let instance = ClaimInstance {
            id: rec.id,
            claim: rec.claim,
            evidence: rec.evidence,
            gold_label: rec.label.map(Verdict::from_bool),
        };
        instance.validate().map_err(|m| {
            parse_error(path, Some(line_no), format!("record {}: {m}", instance.id))
        })?;
        out.push(instance);
    }
    Ok(out)
}

/// Writes instances in the generic JSON-lines format.
pub fn write_generic<W: Write>(instances: &[ClaimInstance], mut out: W) -> std::io::Result<()> {
    for inst in instances {
        let rec = GenericRecord {
            id: inst.id.clone(),
            claim: inst.claim.clone(),
            label: inst.gold_label.map(Verdict::as_bool),
            evidence: inst.evidence.clone(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load(
    kind: DatasetKind,
    path: &Path,
    hops: Option<u32>,
) -> Result<Vec<ClaimInstance>, DataError> {
    match kind {
        DatasetKind::Hover => load_hover(path, hops),
        DatasetKind::Feverous => load_feverous(path),
        DatasetKind::Generic => load_generic(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    const HOVER: &str = r#"[
      {"uid": "a1", "claim": "Claim one.", "label": "SUPPORTED", "num_hops": 2,
       "evidence": [["Page A", 0, "First sentence."], ["Page B", "Other page."], ["Page A", 3, "Second sentence."]]},
      {"uid": "a2", "claim": "Claim two.", "label": "NOT_SUPPORTED", "num_hops": 3,
       "evidence": [{"title": "Page C", "text": "C text."}]},
      {"uid": "a3", "claim": "Claim three.", "label": "SUPPORTED", "num_hops": 2,
       "evidence": [{"text": "Untitled."}]}
    ]"#;

    #[test]
    fn hover_groups_by_page_and_filters_hops() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "hover.json", HOVER);
        let all = load_hover(&p, None).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[0].evidence.len(), 2);
        assert_eq!(all[0].evidence[0].title.as_deref(), Some("Page A"));
        assert_eq!(all[0].evidence[0].text, "First sentence. Second sentence.");
        assert_eq!(all[1].gold_label, Some(Verdict::False));
        let two: Vec<_> = load_hover(&p, Some(2))
            .unwrap()
            .into_iter()
            .map(|c| c.id)
            .collect();
        assert_eq!(two, vec!["a1", "a3"]);
        assert!(load_hover(&p, Some(4)).unwrap().is_empty());
    }

    #[test]
    fn hover_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "bad.json",
            r#"[{"uid": "x", "claim": "c", "label": "MAYBE", "num_hops": 2, "evidence": ["t"]}]"#,
        );
        assert!(matches!(
            load_hover(&p, None),
            Err(DataError::UnknownLabel { .. })
        ));
        let p = write(
            &dir,
            "noev.json",
            r#"[{"uid": "x", "claim": "c", "label": "SUPPORTED"}]"#,
        );
        assert!(matches!(
            load_hover(&p, None),
            Err(DataError::MissingEvidence { .. })
        ));
        let p = write(&dir, "broken.json", "[{");
        assert!(matches!(load_hover(&p, None), Err(DataError::Parse { .. })));
        let p = write(&dir, "empty.json", "");
        assert!(load_hover(&p, Some(2)).unwrap().is_empty());
        assert!(matches!(
            load_hover(&dir.path().join("missing.json"), None),
            Err(DataError::Io { .. })
        ));
    }

    #[test]
    fn feverous_labels_and_structured_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let body = [
            r#"{"id": "", "claim": "", "label": "", "evidence": []}"#,
            r#"{"id": 1, "claim": "S.", "label": "SUPPORTS", "evidence": [{"id": "Big_Ben_sentence_0", "text": "Big Ben is a clock."}, {"id": "Big_Ben_cell_0_1_1", "text": "x"}]}"#,
            r#"{"id": 2, "claim": "R.", "label": "REFUTES", "evidence": [{"title": "P", "text": "p."}]}"#,
            r#"{"id": 3, "claim": "T.", "label": "SUPPORTS", "evidence": [{"id": "Tab_table_caption_0"}]}"#,
        ]
        .join("\n");
        let p = write(&dir, "fev.jsonl", &body);
        let (v, diag) = load_feverous_with_diagnostics(&p).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].gold_label, Some(Verdict::True));
        assert_eq!(
            v[0].evidence,
            vec![EvidencePiece::titled("Big Ben", "Big Ben is a clock.")]
        );
        assert_eq!(v[1].gold_label, Some(Verdict::False));
        assert_eq!(diag.rejected_structured, 1);
        assert_eq!(diag.dropped_elements, 1);

        let p = write(
            &dir,
            "nei.jsonl",
            r#"{"id": 9, "claim": "N.", "label": "NOT ENOUGH INFO", "evidence": [{"title": "P", "text": "p."}]}"#,
        );
        assert!(matches!(
            load_feverous(&p),
            Err(DataError::UnknownLabel { .. })
        ));
    }

    #[test]
    fn generic_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "g.jsonl",
            "{\"id\": \"a\", \"claim\": \"A.\", \"label\": true, \"evidence\": [{\"title\": \"T\", \"text\": \"t\"}]}\n\n{\"id\": \"b\", \"claim\": \"B.\", \"evidence\": [{\"text\": \"u\"}]}\n",
        );
        let loaded = load_generic(&p).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].gold_label, Some(Verdict::True));
        assert_eq!(loaded[1].gold_label, None);
        let mut buf = Vec::new();
        write_generic(&loaded, &mut buf).unwrap();
        let p2 = write(&dir, "g2.jsonl", std::str::from_utf8(&buf).unwrap());
        assert_eq!(load_generic(&p2).unwrap(), loaded);
    }

    #[test]
    fn feverous_round_trips_through_generic() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "f.jsonl",
            r#"{"id": 5, "claim": "S.", "label": "SUPPORTS", "evidence": [{"id": "A_sentence_1", "text": "a."}, {"id": "A_sentence_2", "text": "b."}]}"#,
        );
        let loaded = load_feverous(&p).unwrap();
        let mut buf = Vec::new();
        write_generic(&loaded, &mut buf).unwrap();
        let p2 = write(&dir, "f2.jsonl", std::str::from_utf8(&buf).unwrap());
        assert_eq!(load_generic(&p2).unwrap(), loaded);
        assert_eq!(loaded[0].evidence[0].text, "a. b.");
    }

    #[test]
    fn generic_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "e.jsonl",
            r#"{"id": "a", "claim": "A.", "label": false, "evidence": []}"#,
        );
        let err = load_generic(&p).unwrap_err();
        assert!(
            matches!(err, DataError::Parse { line: Some(1), .. }),
            "{err}"
        );
        let dup = "{\"id\": \"a\", \"claim\": \"A.\", \"evidence\": [{\"text\": \"t\"}]}\n{\"id\": \"b\", \"claim\": \"B.\", \"evidence\": [{\"text\": \"t\"}]}\n{\"id\": \"a\", \"claim\": \"C.\", \"evidence\": [{\"text\": \"t\"}]}";
        let p = write(&dir, "d.jsonl", dup);
        match load_generic(&p).unwrap_err() {
            DataError::DuplicateId { first, second, .. } => assert_eq!((first, second), (1, 3)),
            other => panic!("{other}"),
        }
        let p = write(&dir, "x.jsonl", "{\"id\": \"a\"}\nnot json");
        assert!(matches!(
            load_generic(&p),
            Err(DataError::Parse { line: Some(1), .. })
        ));
    }

    #[test]
    fn dataset_kind_parse() {
        assert_eq!("HOVER".parse::<DatasetKind>().unwrap(), DatasetKind::Hover);
        assert_eq!(
            "feverous".parse::<DatasetKind>().unwrap(),
            DatasetKind::Feverous
        );
        assert!("fever".parse::<DatasetKind>().is_err());
    }
}
