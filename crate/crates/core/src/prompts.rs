//! Prompt templates for the four LLM stages plus the claim-guided
//! summarization variant used by the no-keyword ablation.
//!
//! Templates are plain text with `{{slot}}` placeholders and optional
//! `{{#flag}}...{{/flag}}` sections. Each few-shot task also has an example
//! layout (`<task>.example.txt`) and an example set
//! (`<task>.examples.jsonl`, one `{"input": {...}, "output": "..."}` per line).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("{task}: slot `{slot}` must not be empty")]
    EmptyInput { task: Task, slot: &'static str },
    #[error("evidence summarization needs at least 2 keywords, got {0}")]
    TooFewKeywords(usize),
    #[error("{task}: slot `{slot}` has no value")]
    MissingSlot { task: Task, slot: String },
    #[error("{task}: malformed template: {reason}")]
    Malformed { task: Task, reason: String },
    #[error("{path}:{line}: bad few-shot example: {source}")]
    Example {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    KeywordExtraction,
    EvidenceSummarization,
    ClaimDeconstruction,
    SubclaimVerification,
    ClaimGuidedSummarization,
}

impl Task {
    pub const ALL: [Task; 5] = [
        Task::KeywordExtraction,
        Task::EvidenceSummarization,
        Task::ClaimDeconstruction,
        Task::SubclaimVerification,
        Task::ClaimGuidedSummarization,
    ];

    pub fn file_stem(self) -> &'static str {
        match self {
            Task::KeywordExtraction => "keyword_extraction",
            Task::EvidenceSummarization => "evidence_summarization",
            Task::ClaimDeconstruction => "claim_deconstruction",
            Task::SubclaimVerification => "subclaim_verification",
            Task::ClaimGuidedSummarization => "claim_guided_summarization",
        }
    }

    fn builtin(self) -> (&'static str, Option<&'static str>, Option<&'static str>) {
        macro_rules! files {
            ($stem:literal) => {
                (
                    include_str!(concat!("../prompts/", $stem, ".txt")),
                    Some(include_str!(concat!("../prompts/", $stem, ".example.txt"))),
                    Some(include_str!(concat!(
                        "../prompts/",
                        $stem,
                        ".examples.jsonl"
                    ))),
                )
            };
        }
        match self {
            Task::KeywordExtraction => files!("keyword_extraction"),
            Task::EvidenceSummarization => files!("evidence_summarization"),
            Task::ClaimDeconstruction => files!("claim_deconstruction"),
            Task::ClaimGuidedSummarization => files!("claim_guided_summarization"),
            Task::SubclaimVerification => (
                include_str!("../prompts/subclaim_verification.txt"),
                None,
                None,
            ),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_stem())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Slot(String),
    Section { flag: String, body: Vec<Segment> },
}

/// Parsed template text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    segments: Vec<Segment>,
}

impl Template {
    fn parse(task: Task, text: &str) -> Result<Self, PromptError> {
        let malformed = |reason: String| PromptError::Malformed { task, reason };
        let mut stack: Vec<(String, Vec<Segment>)> = vec![(String::new(), Vec::new())];
        let mut rest = text;
        while let Some(open) = rest.find("{{") {
            if open > 0 {
                stack
                    .last_mut()
                    .unwrap()
                    .1
                    .push(Segment::Text(rest[..open].to_owned()));
            }
            let after = &rest[open + 2..];
            let close = after
                .find("}}")
                .ok_or_else(|| malformed("unterminated `{{`".into()))?;
            let tag = after[..close].trim();
            if let Some(flag) = tag.strip_prefix('#') {
                stack.push((flag.trim().to_owned(), Vec::new()));
            } else if let Some(flag) = tag.strip_prefix('/') {
                let (open_flag, body) = stack.pop().unwrap();
                if stack.is_empty() || open_flag != flag.trim() {
                    return Err(malformed(format!("unbalanced section close `{flag}`")));
                }
                stack.last_mut().unwrap().1.push(Segment::Section {
                    flag: open_flag,
                    body,
                });
            } else if tag.is_empty() {
                return Err(malformed("empty slot name".into()));
            } else {
                stack
                    .last_mut()
                    .unwrap()
                    .1
                    .push(Segment::Slot(tag.to_owned()));
            }
            rest = &after[close + 2..];
        }
        if !rest.is_empty() {
            stack
                .last_mut()
                .unwrap()
                .1
                .push(Segment::Text(rest.to_owned()));
        }
        if stack.len() != 1 {
            return Err(malformed(format!(
                "unclosed section `{}`",
                stack.last().unwrap().0
            )));
        }
        Ok(Template {
            segments: stack.pop().unwrap().1,
        })
    }

    /// Names of every slot in the template, including inside sections.
    pub fn slots(&self) -> Vec<&str> {
        fn walk<'a>(segments: &'a [Segment], out: &mut Vec<&'a str>) {
            for s in segments {
                match s {
                    Segment::Slot(name) => out.push(name),
                    Segment::Section { body, .. } => walk(body, out),
                    Segment::Text(_) => {}
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.segments, &mut out);
        out
    }

    fn render(
        &self,
        task: Task,
        values: &BTreeMap<&str, &str>,
        flags: &[&str],
    ) -> Result<String, PromptError> {
        fn walk(
            segments: &[Segment],
            task: Task,
            values: &BTreeMap<&str, &str>,
            flags: &[&str],
            out: &mut String,
        ) -> Result<(), PromptError> {
            for s in segments {
                match s {
                    Segment::Text(t) => out.push_str(t),
                    Segment::Slot(name) => {
                        let v =
                            values
                                .get(name.as_str())
                                .ok_or_else(|| PromptError::MissingSlot {
                                    task,
                                    slot: name.clone(),
                                })?;
                        out.push_str(v);
                    }
                    Segment::Section { flag, body } => {
                        if flags.contains(&flag.as_str()) {
                            walk(body, task, values, flags, out)?;
                        }
                    }
                }
            }
            Ok(())
        }
        let mut out = String::new();
        walk(&self.segments, task, values, flags, &mut out)?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub input: BTreeMap<String, String>,
    pub output: String,
}

#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub task: Task,
    body: Template,
    example_layout: Option<Template>,
    pub examples: Vec<FewShotExample>,
}

impl PromptTemplate {
    fn from_parts(
        task: Task,
        body: &str,
        example_layout: Option<&str>,
        examples: Option<(&Path, &str)>,
    ) -> Result<Self, PromptError> {
        let examples = match examples {
            Some((path, text)) => parse_examples(path, text)?,
            None => Vec::new(),
        };
        Ok(PromptTemplate {
            task,
            body: Template::parse(task, strip_final_newline(body))?,
            example_layout: example_layout
                .map(|l| Template::parse(task, strip_final_newline(l)))
                .transpose()?,
            examples,
        })
    }

    pub fn body(&self) -> &Template {
        &self.body
    }

    fn examples_block(&self) -> Result<String, PromptError> {
        let Some(layout) = &self.example_layout else {
            return Ok(String::new());
        };
        let rendered = self
            .examples
            .iter()
            .map(|ex| {
                let mut values: BTreeMap<&str, &str> = ex
                    .input
                    .iter()
                    .map(|(k, v)| (k.as_str(), v.as_str()))
                    .collect();
                values.insert("output", &ex.output);
                layout.render(self.task, &values, &[])
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(rendered.join("\n\n"))
    }

    fn render(&self, slots: &[(&str, &str)], flags: &[&str]) -> Result<String, PromptError> {
        let examples = self.examples_block()?;
        let mut values: BTreeMap<&str, &str> = slots.iter().copied().collect();
        values.insert("examples", &examples);
        self.body.render(self.task, &values, flags)
    }
}

fn strip_final_newline(s: &str) -> &str {
    let s = s.strip_suffix('\n').unwrap_or(s);
    s.strip_suffix('\r').unwrap_or(s)
}

fn parse_examples(path: &Path, text: &str) -> Result<Vec<FewShotExample>, PromptError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| PromptError::Example {
                path: path.to_owned(),
                line: i + 1,
                source,
            })
        })
        .collect()
}

/// Formats the verification evidence block: abstracted lines first, then raw
/// lines, each as `- <text>` on its own line.
pub fn evidence_block<'a, A, R>(abstracted: A, raw: R) -> String
where
    A: IntoIterator<Item = &'a str>,
    R: IntoIterator<Item = &'a str>,
{
    abstracted
        .into_iter()
        .chain(raw)
        .map(|t| format!("- {}", single_line(t)))
        .collect::<Vec<_>>()
        .join("\n")
}

fn single_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn without_final_period(text: &str) -> &str {
    let t = text.trim();
    t.strip_suffix('.').unwrap_or(t).trim_end()
}

/// Keyword list as shown to the model: `a, b, c.`
pub fn keyword_list<S: AsRef<str>>(keywords: &[S]) -> String {
    let joined = keywords
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(", ");
    if joined.ends_with('.') {
        joined
    } else {
        joined + "."
    }
}

/// The full set of templates used by a pipeline run.
#[derive(Debug, Clone)]
pub struct PromptSet {
    templates: BTreeMap<Task, PromptTemplate>,
}

impl Default for PromptSet {
    fn default() -> Self {
        let templates = Task::ALL
            .into_iter()
            .map(|task| {
                let (body, layout, examples) = task.builtin();
                let path = PathBuf::from(format!("<builtin>/{}.examples.jsonl", task.file_stem()));
                let t = PromptTemplate::from_parts(
                    task,
                    body,
                    layout,
                    examples.map(|e| (path.as_path(), e)),
                )
                .expect("built-in prompts are well formed");
                (task, t)
            })
            .collect();
        PromptSet { templates }
    }
}

impl PromptSet {
    /// Loads templates from `dir`, falling back to the built-in file for any
    /// file that is absent.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let read = |name: String,
                    builtin: Option<&'static str>|
         -> Result<Option<(PathBuf, String)>, PromptError> {
            let path = dir.join(name);
            match std::fs::read_to_string(&path) {
                Ok(s) => Ok(Some((path, s))),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    Ok(builtin.map(|b| (path, b.to_owned())))
                }
                Err(source) => Err(PromptError::Io { path, source }),
            }
        };
        if !dir.is_dir() {
            return Err(PromptError::Io {
                path: dir.to_owned(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
            });
        }
        let mut templates = BTreeMap::new();
        for task in Task::ALL {
            let stem = task.file_stem();
            let (body, layout, examples) = task.builtin();
            let body = read(format!("{stem}.txt"), Some(body))?.expect("builtin body");
            let layout = read(format!("{stem}.example.txt"), layout)?;
            let examples = read(format!("{stem}.examples.jsonl"), examples)?;
            let t = PromptTemplate::from_parts(
                task,
                &body.1,
                layout.as_ref().map(|(_, s)| s.as_str()),
                examples.as_ref().map(|(p, s)| (p.as_path(), s.as_str())),
            )?;
            templates.insert(task, t);
        }
        Ok(PromptSet { templates })
    }

    pub fn template(&self, task: Task) -> &PromptTemplate {
        &self.templates[&task]
    }

    fn nonempty(task: Task, slot: &'static str, value: &str) -> Result<(), PromptError> {
        if value.trim().is_empty() {
            Err(PromptError::EmptyInput { task, slot })
        } else {
            Ok(())
        }
    }

    pub fn render_keyword_extraction(&self, claim: &str) -> Result<String, PromptError> {
        let task = Task::KeywordExtraction;
        Self::nonempty(task, "claim", claim)?;
        self.template(task).render(&[("claim", claim.trim())], &[])
    }

    pub fn render_evidence_summarization<S: AsRef<str>>(
        &self,
        evidence: &str,
        keywords: &[S],
    ) -> Result<String, PromptError> {
        let task = Task::EvidenceSummarization;
        if keywords.len() < 2 {
            return Err(PromptError::TooFewKeywords(keywords.len()));
        }
        Self::nonempty(task, "evidence", evidence)?;
        let keywords = keyword_list(keywords);
        self.template(task).render(
            &[
                ("evidence", &single_line(evidence)),
                ("keywords", &keywords),
            ],
            &[],
        )
    }

    /// Summarization guided by the whole claim instead of keywords.
    pub fn render_claim_guided_summarization(
        &self,
        evidence: &str,
        claim: &str,
    ) -> Result<String, PromptError> {
        let task = Task::ClaimGuidedSummarization;
        Self::nonempty(task, "evidence", evidence)?;
        Self::nonempty(task, "claim", claim)?;
        self.template(task).render(
            &[
                ("evidence", &single_line(evidence)),
                ("claim", claim.trim()),
            ],
            &[],
        )
    }

    pub fn render_claim_deconstruction(&self, claim: &str) -> Result<String, PromptError> {
        let task = Task::ClaimDeconstruction;
        Self::nonempty(task, "claim", claim)?;
        self.template(task).render(&[("claim", claim.trim())], &[])
    }

    pub fn render_subclaim_verification(
        &self,
        evidence_block: &str,
        subclaim: &str,
        claim: &str,
        with_context: bool,
    ) -> Result<String, PromptError> {
        let task = Task::SubclaimVerification;
        Self::nonempty(task, "evidence", evidence_block)?;
        Self::nonempty(task, "subclaim", subclaim)?;
        if with_context {
            Self::nonempty(task, "claim", claim)?;
        }
        let flags: &[&str] = if with_context {
            &["claim_context"]
        } else {
            &[]
        };
        self.template(task).render(
            &[
                ("evidence", evidence_block),
                ("subclaim", without_final_period(subclaim)),
                ("claim", without_final_period(claim)),
            ],
            flags,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPAM_CLAIM: &str = "Spam is canned cooked meat by Hormel Foods Corporation is never used to make a popular snack and lunch food in Hawaii.";

    #[test]
    fn keyword_extraction_ends_with_cue() {
        let p = PromptSet::default()
            .render_keyword_extraction("X.")
            .unwrap();
        let lines: Vec<&str> = p.lines().collect();
        assert_eq!(&lines[lines.len() - 2..], &["Input: X.", "Output:"]);
        assert!(p.contains("Extract key components such as important verbs"));
        assert!(p.contains(
            "Output: spam, canned cooked meat, Hormel Foods Corporation, used, popular snack, lunch food, Hawaii."
        ));
    }

    #[test]
    fn empty_claim_rejected() {
        let set = PromptSet::default();
        assert!(matches!(
            set.render_keyword_extraction("  "),
            Err(PromptError::EmptyInput { .. })
        ));
        assert!(set.render_claim_deconstruction("").is_err());
    }

    #[test]
    fn summarization_keyword_gate_and_order() {
        let set = PromptSet::default();
        assert!(matches!(
            set.render_evidence_summarization("text", &["only"]),
            Err(PromptError::TooFewKeywords(1))
        ));
        let ab = set
            .render_evidence_summarization("text", &["a", "b"])
            .unwrap();
        let ba = set
            .render_evidence_summarization("text", &["b", "a"])
            .unwrap();
        assert_ne!(ab, ba);
        assert!(ab.ends_with("Input: text\nKeywords: a, b.\nOutput:"));
    }

    #[test]
    fn deconstruction_example_format() {
        let p = PromptSet::default()
            .render_claim_deconstruction(SPAM_CLAIM)
            .unwrap();
        assert!(p.contains("#1 Spam is a canned cooked meat"));
        assert!(
            p.contains("\n#2 Spam is not used to make a popular snack and lunch food in Hawaii.")
        );
        assert!(p.ends_with("Output:"));
    }

    #[test]
    fn verification_context_segment() {
        let set = PromptSet::default();
        let block = evidence_block(["A one"], ["raw one"]);
        let without = set
            .render_subclaim_verification(&block, "Spam is meat.", "The whole claim.", false)
            .unwrap();
        assert!(!without.contains("The whole claim"));
        assert!(!without.contains("In the saying of"));
        assert!(without.ends_with("Is it true that Spam is meat? (Yes or No)"));
        let with = set
            .render_subclaim_verification(&block, "Spam is meat.", "The whole claim.", true)
            .unwrap();
        assert!(with.contains("In the saying of The whole claim. Based on the golden evidence."));
        assert!(with.ends_with("(Yes or No)"));
        assert!(with.starts_with("Given golden evidence:\n- A one\n- raw one\n"));
    }

    #[test]
    fn no_markers_survive() {
        let set = PromptSet::default();
        let rendered = [
            set.render_keyword_extraction(SPAM_CLAIM).unwrap(),
            set.render_evidence_summarization("ev", &["a", "b"])
                .unwrap(),
            set.render_claim_deconstruction(SPAM_CLAIM).unwrap(),
            set.render_claim_guided_summarization("ev", SPAM_CLAIM)
                .unwrap(),
            set.render_subclaim_verification("- e", "s", "c", true)
                .unwrap(),
        ];
        for r in rendered {
            assert!(!r.contains("{{") && !r.contains("}}"), "{r}");
        }
    }

    #[test]
    fn template_parse_errors() {
        assert!(Template::parse(Task::KeywordExtraction, "a {{b").is_err());
        assert!(Template::parse(Task::KeywordExtraction, "{{#x}}a").is_err());
        assert!(Template::parse(Task::KeywordExtraction, "{{#x}}a{{/y}}").is_err());
        assert!(Template::parse(Task::KeywordExtraction, "a{{/y}}").is_err());
        let t = Template::parse(Task::KeywordExtraction, "{{a}} {{#f}}{{b}}{{/f}}").unwrap();
        assert_eq!(t.slots(), vec!["a", "b"]);
        let values: BTreeMap<&str, &str> = [("a", "1")].into_iter().collect();
        assert_eq!(
            t.render(Task::KeywordExtraction, &values, &[]).unwrap(),
            "1 "
        );
        assert!(matches!(
            t.render(Task::KeywordExtraction, &values, &["f"]),
            Err(PromptError::MissingSlot { .. })
        ));
    }

    #[test]
    fn load_dir_overrides_single_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("keyword_extraction.txt"),
            "Keywords for: {{claim}}\nOutput:\n",
        )
        .unwrap();
        let set = PromptSet::load_dir(dir.path()).unwrap();
        assert_eq!(
            set.render_keyword_extraction("c").unwrap(),
            "Keywords for: c\nOutput:"
        );
        assert_eq!(
            set.render_claim_deconstruction("c").unwrap(),
            PromptSet::default()
                .render_claim_deconstruction("c")
                .unwrap()
        );
    }

    #[test]
    fn shipped_examples_are_pinned() {
        let set = PromptSet::default();
        for task in [
            Task::KeywordExtraction,
            Task::EvidenceSummarization,
            Task::ClaimDeconstruction,
            Task::ClaimGuidedSummarization,
        ] {
            assert_eq!(set.template(task).examples.len(), 3, "{task}");
        }
        assert!(set.template(Task::SubclaimVerification).examples.is_empty());
        let es = &set.template(Task::EvidenceSummarization).examples[0];
        assert_eq!(es.output, "Spam is popular snack and lunch food in Hawaii.");
        assert_eq!(
            es.input["keywords"],
            "spam, popular snack, lunch food, Hawaii."
        );
    }
}
