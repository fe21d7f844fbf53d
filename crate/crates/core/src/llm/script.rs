use std::collections::HashMap;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{prompt_hash, CompletionRequest, CompletionResponse, LlmError};

/// How a script entry selects prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptMatch {
    /// SHA-256 hex of the exact prompt text.
    Hash(String),
    /// Regular expression searched in the prompt.
    Regex(String),
}

/// One line of a script file:
/// `{"match": {"hash": "<sha256>"} | {"regex": "<pattern>"}, "response": "..."}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(rename = "match")]
    pub matcher: ScriptMatch,
    pub response: String,
}

impl ScriptEntry {
    pub fn hash(hash: impl Into<String>, response: impl Into<String>) -> Self {
        ScriptEntry {
            matcher: ScriptMatch::Hash(hash.into()),
            response: response.into(),
        }
    }

    /// Entry matching one exact prompt.
    pub fn prompt(prompt: &str, response: impl Into<String>) -> Self {
        Self::hash(prompt_hash(prompt), response)
    }

    pub fn regex(pattern: impl Into<String>, response: impl Into<String>) -> Self {
        ScriptEntry {
            matcher: ScriptMatch::Regex(pattern.into()),
            response: response.into(),
        }
    }
}

/// Deterministic prompt → response table. Exact-hash entries win; otherwise
/// the first regex entry (in file order) that matches.
#[derive(Debug, Clone)]
pub struct Script {
    exact: HashMap<String, String>,
    patterns: Vec<(Regex, String)>,
}

impl Script {
    pub fn from_entries(entries: Vec<ScriptEntry>) -> Result<Self, LlmError> {
        Self::build(
            entries.into_iter().enumerate().map(|(i, e)| (i + 1, e)),
            Path::new("<memory>"),
        )
    }

    fn build(
        entries: impl Iterator<Item = (usize, ScriptEntry)>,
        path: &Path,
    ) -> Result<Self, LlmError> {
        let mut exact = HashMap::new();
        let mut patterns = Vec::new();
        for (line, entry) in entries {
            match entry.matcher {
                ScriptMatch::Hash(h) => {
                    // first entry for a hash wins, like regexes
                    exact
                        .entry(h.to_ascii_lowercase())
                        .or_insert(entry.response);
                }
                ScriptMatch::Regex(p) => {
                    let re = Regex::new(&p).map_err(|e| LlmError::Script {
                        path: path.to_owned(),
                        line,
                        reason: e.to_string(),
                    })?;
                    patterns.push((re, entry.response));
                }
            }
        }
        Ok(Script { exact, patterns })
    }

    /// Loads a line-delimited JSON script; blank lines are skipped.
    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Script {
            path: path.to_owned(),
            line: 0,
            reason: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, LlmError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ScriptEntry = serde_json::from_str(line).map_err(|e| LlmError::Script {
                path: PathBuf::from(path),
                line: i + 1,
                reason: e.to_string(),
            })?;
            entries.push((i + 1, entry));
        }
        Self::build(entries.into_iter(), path)
    }

    pub fn lookup(&self, prompt: &str) -> Option<&str> {
        if let Some(r) = self.exact.get(&prompt_hash(prompt)) {
            return Some(r);
        }
        self.patterns
            .iter()
            .find(|(re, _)| re.is_match(prompt))
            .map(|(_, r)| r.as_str())
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        match self.lookup(&request.prompt) {
            Some(text) => Ok(CompletionResponse {
                text: text.to_owned(),
                prompt_tokens: 0,
                completion_tokens: 0,
                cached: false,
            }),
            None => Err(LlmError::ScriptMiss {
                prompt_hash: request.prompt_hash(),
            }),
        }
    }
}

impl super::Completer for Script {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        Script::complete(self, request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_beats_regex_and_first_regex_wins() {
        let script = Script::from_entries(vec![
            ScriptEntry::regex(r"\(Yes or No\)$", "Yes."),
            ScriptEntry::regex(r"Yes or No", "No."),
            ScriptEntry::prompt("Is it? (Yes or No)", "Exact."),
        ])
        .unwrap();
        assert_eq!(script.lookup("Is it? (Yes or No)"), Some("Exact."));
        assert_eq!(script.lookup("Other? (Yes or No)"), Some("Yes."));
        assert_eq!(script.lookup("Yes or No?"), Some("No."));
        assert_eq!(script.lookup("nothing"), None);
    }

    #[test]
    fn parse_file_format() {
        let text = format!(
            "{}\n\n{}\n",
            r#"{"match": {"hash": "ABC"}, "response": "upper"}"#,
            r#"{"match": {"regex": "^Given"}, "response": "No."}"#
        );
        let script = Script::parse(&text, Path::new("s.jsonl")).unwrap();
        assert_eq!(script.exact.get("abc").map(String::as_str), Some("upper"));
        assert_eq!(script.lookup("Given golden evidence"), Some("No."));
    }

    #[test]
    fn bad_lines_report_line_numbers() {
        let err = Script::parse("\n{\"match\": {}}\n", Path::new("s.jsonl")).unwrap_err();
        assert!(matches!(err, LlmError::Script { line: 2, .. }), "{err}");
        let err = Script::parse(
            r#"{"match": {"regex": "("}, "response": ""}"#,
            Path::new("s"),
        )
        .unwrap_err();
        assert!(matches!(err, LlmError::Script { line: 1, .. }));
    }
}
