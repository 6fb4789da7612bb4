//! Source-dataset loaders.
//!
//! Each loader is total over its file: rows that violate the record schema
//! are collected as [`RecordError`]s with their line number instead of
//! aborting the load; only unreadable or structurally unparseable files are
//! fatal.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use super::{Label, Source, TextSample};
use crate::error::{Error, Result};

/// A rejected record: which line and why. The remainder of the file still
/// loads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

/// Samples plus whatever was rejected or skipped along the way.
#[derive(Debug, Clone, Default)]
pub struct LoadOutcome {
    pub samples: Vec<TextSample>,
    pub errors: Vec<RecordError>,
    pub warnings: Vec<String>,
}

impl LoadOutcome {
    pub fn counts(&self) -> (usize, usize) {
        let abusive = self
            .samples
            .iter()
            .filter(|s| s.label == Label::Abusive)
            .count();
        (abusive, self.samples.len() - abusive)
    }
}

/// Load the dark-web CSV: UTF-8, header `id,text,label`, RFC-4180 quoting,
/// labels `csa` / `non_csa`.
pub fn load_darkweb(path: &Path) -> Result<LoadOutcome> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::malformed(path, e.to_string()))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::malformed(path, e.to_string()))?
        .clone();
    let expect = ["id", "text", "label"];
    if headers.iter().map(str::trim).ne(expect) {
        return Err(Error::malformed(
            path,
            format!("expected header id,text,label, got {headers:?}"),
        ));
    }

    let mut out = LoadOutcome::default();
    for (i, record) in reader.records().enumerate() {
        // Data starts on line 2, after the header.
        let line = i + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                out.errors.push(RecordError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if record.len() != 3 {
            out.errors.push(RecordError {
                line,
                message: format!("expected 3 fields, got {}", record.len()),
            });
            continue;
        }
        let (id, text, label) = (&record[0], &record[1], &record[2]);
        let label = match label.trim() {
            "csa" => Label::Abusive,
            "non_csa" => Label::NonAbusive,
            other => {
                out.errors.push(RecordError {
                    line,
                    message: format!("unknown label {other:?}"),
                });
                continue;
            }
        };
        match TextSample::new(id, text, label, Source::Darkweb) {
            Ok(sample) => out.samples.push(sample),
            Err(e) => out.errors.push(RecordError {
                line,
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Load the PAN12 conversation XML. A conversation becomes one sample whose
/// text is its messages concatenated in document order, newline-separated.
///
/// Ground truth is a predator-id list (one author id per line) shipped next
/// to the XML; this wrapper discovers it as `<stem>-predators.txt` or any
/// sibling `*predators*.txt`, and labels a conversation `Abusive` when any
/// of its messages was authored by a listed id.
pub fn load_pan12(path: &Path) -> Result<LoadOutcome> {
    let predators = discover_predator_file(path)?;
    load_pan12_with_predators(path, predators.as_deref())
}

fn discover_predator_file(xml_path: &Path) -> Result<Option<PathBuf>> {
    let dir = xml_path.parent().unwrap_or_else(|| Path::new("."));
    if let Some(stem) = xml_path.file_stem().and_then(|s| s.to_str()) {
        let named = dir.join(format!("{stem}-predators.txt"));
        if named.is_file() {
            return Ok(Some(named));
        }
    }
    let mut candidates: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.is_file()
                && p.extension().map_or(false, |e| e == "txt")
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .map_or(false, |n| n.contains("predators"))
        })
        .collect();
    candidates.sort();
    Ok(candidates.into_iter().next())
}

/// [`load_pan12`] with the predator-id file made explicit. With no predator
/// file every conversation is `NonAbusive` and a warning is recorded.
pub fn load_pan12_with_predators(
    path: &Path,
    predators_path: Option<&Path>,
) -> Result<LoadOutcome> {
    let mut out = LoadOutcome::default();

    let predators: HashSet<String> = match predators_path {
        Some(p) => {
            let file = std::fs::File::open(p).map_err(|e| Error::io(p, e))?;
            std::io::BufReader::new(file)
                .lines()
                .collect::<std::io::Result<Vec<_>>>()
                .map_err(|e| Error::io(p, e))?
                .into_iter()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect()
        }
        None => {
            out.warnings.push(
                "no predator-id file found next to the conversation XML; all conversations labeled non-abusive".into(),
            );
            HashSet::new()
        }
    };

    let mut reader = Reader::from_file(path).map_err(|e| Error::malformed(path, e.to_string()))?;
    reader.trim_text(true);

    let mut buf = Vec::new();
    let mut conversation_id: Option<String> = None;
    let mut messages: Vec<String> = Vec::new();
    let mut predatory = false;
    // Element context within a <message>.
    let mut in_author = false;
    let mut in_text = false;
    let mut message_count = 0usize;
    let mut current_text = String::new();

    loop {
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(e)) => match e.name().as_ref() {
                b"conversation" => {
                    conversation_id = e
                        .attributes()
                        .filter_map(|a| a.ok())
                        .find(|a| a.key.as_ref() == b"id")
                        .map(|a| String::from_utf8_lossy(&a.value).into_owned());
                    messages.clear();
                    predatory = false;
                    message_count = 0;
                }
                b"message" => {
                    message_count += 1;
                    current_text.clear();
                }
                b"author" => in_author = true,
                b"text" => in_text = true,
                _ => {}
            },
            Ok(Event::Text(t)) => {
                let content = t
                    .unescape()
                    .map_err(|e| Error::malformed(path, e.to_string()))?;
                if in_author {
                    if predators.contains(content.trim()) {
                        predatory = true;
                    }
                } else if in_text {
                    current_text.push_str(&content);
                }
            }
            Ok(Event::End(e)) => match e.name().as_ref() {
                b"author" => in_author = false,
                b"text" => in_text = false,
                b"message" => messages.push(std::mem::take(&mut current_text)),
                b"conversation" => {
                    let id = conversation_id
                        .take()
                        .unwrap_or_else(|| format!("conv{}", out.samples.len()));
                    if message_count == 0 {
                        out.warnings
                            .push(format!("conversation {id} has no messages; skipped"));
                        continue;
                    }
                    let text = messages.join("\n");
                    if text.trim().is_empty() {
                        out.warnings
                            .push(format!("conversation {id} has only empty messages; skipped"));
                        continue;
                    }
                    let label = if predatory {
                        Label::Abusive
                    } else {
                        Label::NonAbusive
                    };
                    out.samples
                        .push(TextSample::new(id, text, label, Source::Pan12)?);
                }
                _ => {}
            },
            Ok(Event::Empty(e)) if e.name().as_ref() == b"conversation" => {
                let id = e
                    .attributes()
                    .filter_map(|a| a.ok())
                    .find(|a| a.key.as_ref() == b"id")
                    .map(|a| String::from_utf8_lossy(&a.value).into_owned())
                    .unwrap_or_else(|| "<unnamed>".into());
                out.warnings
                    .push(format!("conversation {id} has no messages; skipped"));
            }
            Ok(Event::Eof) => break,
            Ok(_) => {}
            Err(e) => return Err(Error::malformed(path, e.to_string())),
        }
        buf.clear();
    }
    Ok(out)
}

/// Maps raw Roman-Urdu label tokens to the binary classes. The built-in
/// default covers the common spellings; a JSON file of the same shape can
/// replace it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelMapping {
    pub abusive: Vec<String>,
    pub non_abusive: Vec<String>,
}

impl Default for LabelMapping {
    fn default() -> Self {
        let strs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        Self {
            abusive: strs(&["abusive", "offensive", "toxic", "1", "yes", "a"]),
            non_abusive: strs(&["non-abusive", "non_abusive", "normal", "clean", "0", "no", "n"]),
        }
    }
}

impl LabelMapping {
    pub fn from_file(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&data).map_err(|e| Error::malformed(path, e.to_string()))
    }

    fn map(&self, token: &str) -> Option<Label> {
        let t = token.trim().to_lowercase();
        if self.abusive.iter().any(|a| a.to_lowercase() == t) {
            Some(Label::Abusive)
        } else if self.non_abusive.iter().any(|a| a.to_lowercase() == t) {
            Some(Label::NonAbusive)
        } else {
            None
        }
    }
}

/// Load the Roman Urdu comment CSV: UTF-8, header `text,label`, labels per
/// the default [`LabelMapping`]. Local ids are the data row numbers.
pub fn load_roman_urdu(path: &Path) -> Result<LoadOutcome> {
    load_roman_urdu_with_mapping(path, &LabelMapping::default())
}

pub fn load_roman_urdu_with_mapping(path: &Path, mapping: &LabelMapping) -> Result<LoadOutcome> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::malformed(path, e.to_string()))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::malformed(path, e.to_string()))?
        .clone();
    if headers.iter().map(str::trim).ne(["text", "label"]) {
        return Err(Error::malformed(
            path,
            format!("expected header text,label, got {headers:?}"),
        ));
    }

    let mut out = LoadOutcome::default();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                out.errors.push(RecordError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if record.len() != 2 {
            out.errors.push(RecordError {
                line,
                message: format!("expected 2 fields, got {}", record.len()),
            });
            continue;
        }
        let Some(label) = mapping.map(&record[1]) else {
            out.errors.push(RecordError {
                line,
                message: format!("unknown label {:?}", &record[1]),
            });
            continue;
        };
        match TextSample::new(format!("r{line}"), &record[0], label, Source::RomanUrdu) {
            Ok(sample) => out.samples.push(sample),
            Err(e) => out.errors.push(RecordError {
                line,
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}
