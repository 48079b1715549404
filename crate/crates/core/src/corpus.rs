//! Corpus ingestion (SWAG CSV or one-sentence-per-line text) and tokenization.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse CSV header of {path}: {source}")]
    Header {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path} has no `sent1` column")]
    MissingSent1 { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub text: String,
    pub source: String,
}

/// Result of reading a corpus: the records plus how many rows were dropped.
#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub records: Vec<SentenceRecord>,
    pub skipped: usize,
}

/// Reads the `sent1` column of a SWAG-layout CSV file.
///
/// Ids come from `fold-ind` when that column exists, otherwise the 1-based data
/// row number. Rows that fail to parse or have an empty `sent1` are skipped and
/// counted.
pub fn ingest_swag(path: impl AsRef<Path>) -> Result<Ingested, CorpusError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| CorpusError::Read {
        path: path.to_owned(),
        source,
    })?;
    let source_tag = source_tag(path);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice());
    let headers = reader
        .headers()
        .map_err(|source| CorpusError::Header {
            path: path.to_owned(),
            source,
        })?
        .clone();
    let sent1 = headers
        .iter()
        .position(|h| h.trim() == "sent1")
        .ok_or_else(|| CorpusError::MissingSent1 {
            path: path.to_owned(),
        })?;
    let fold = headers.iter().position(|h| h.trim() == "fold-ind");

    let mut out = Ingested::default();
    let mut seen = HashSet::new();
    for (row, result) in reader.records().enumerate() {
        let row_number = row + 1;
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{}: skipping malformed row {row_number}: {e}", path.display());
                out.skipped += 1;
                continue;
            }
        };
        let text = record.get(sent1).unwrap_or("").trim();
        if text.is_empty() {
            out.skipped += 1;
            continue;
        }
        let mut id = fold
            .and_then(|i| record.get(i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_owned)
            .unwrap_or_else(|| row_number.to_string());
        if !seen.insert(id.clone()) {
            id = format!("{id}@{row_number}");
            seen.insert(id.clone());
        }
        out.records.push(SentenceRecord {
            id,
            text: text.to_owned(),
            source: source_tag.clone(),
        });
    }
    Ok(out)
}

/// One record per non-blank line; ids are 1-based line numbers.
pub fn ingest_plain(path: impl AsRef<Path>) -> Result<Ingested, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Read {
        path: path.to_owned(),
        source,
    })?;
    let source_tag = source_tag(path);
    let records = text
        .lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| SentenceRecord {
            id: (i + 1).to_string(),
            text: line.trim().to_owned(),
            source: source_tag.clone(),
        })
        .collect();
    Ok(Ingested {
        records,
        skipped: 0,
    })
}

fn source_tag(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// A word in a sentence. `start..end` are byte offsets into the sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lower: String,
    pub start: usize,
    pub end: usize,
}

// Characters peeled off either end of a whitespace chunk.
fn is_edge_punct(c: char) -> bool {
    matches!(
        c,
        '.' | ',' | '!' | '?' | ';' | ':' | '"' | '\'' | '(' | ')' | '“' | '”' | '‘' | '’' | '…'
    )
}

// Dashes that separate words even without surrounding spaces. ASCII hyphen is
// not one of them so compounds like "well-known" stay whole.
fn is_break(c: char) -> bool {
    c.is_whitespace() || matches!(c, '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2015}')
}

/// Splits on whitespace and dashes, then strips edge punctuation from each
/// piece. Pieces that are pure punctuation produce no token.
pub fn tokenize(sentence: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chunk_start = None;
    for (i, c) in sentence.char_indices().chain(std::iter::once((sentence.len(), ' '))) {
        if is_break(c) {
            if let Some(s) = chunk_start.take() {
                push_chunk(sentence, s, i, &mut tokens);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    tokens
}

fn push_chunk(sentence: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let chunk = &sentence[start..end];
    let trimmed_front = chunk.trim_start_matches(is_edge_punct);
    let inner = trimmed_front.trim_end_matches(is_edge_punct);
    if inner.is_empty() {
        return;
    }
    let s = start + (chunk.len() - trimmed_front.len());
    let e = s + inner.len();
    out.push(Token {
        surface: inner.to_owned(),
        lower: inner.to_lowercase(),
        start: s,
        end: e,
    });
}
