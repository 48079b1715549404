//! Human review of filtered samples: a label store backed by an append-only
//! JSON-lines log, quorum consensus, and the resulting accuracy.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::MaskedSample;
use crate::jsonl::{read_jsonl, JsonlError};

/// Yes-votes needed for a sample to count as truly biased.
pub const DEFAULT_QUORUM: usize = 3;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("unknown sample id {0:?}")]
    UnknownSample(String),
    #[error("annotator id must not be empty")]
    EmptyAnnotator,
    #[error("duplicate sample id {0:?} in sample set")]
    DuplicateSample(String),
    #[error("accuracy of an empty sample set is undefined")]
    Empty,
    #[error("quorum must be at least 1")]
    InvalidQuorum,
    #[error("label log {path}: {source}")]
    Log {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationLabel {
    pub annotator_id: String,
    pub sample_id: String,
    pub biased: bool,
    pub submitted_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusResult {
    pub sample_id: String,
    pub yes_votes: usize,
    pub total_votes: usize,
    pub is_biased: bool,
}

/// Consensus over one sample's votes; quorum is an absolute yes count.
pub fn consensus(
    sample_id: &str,
    votes: impl IntoIterator<Item = bool>,
    quorum: usize,
) -> Result<ConsensusResult, AnnotationError> {
    if quorum == 0 {
        return Err(AnnotationError::InvalidQuorum);
    }
    let (mut yes, mut total) = (0, 0);
    for v in votes {
        total += 1;
        yes += usize::from(v);
    }
    Ok(ConsensusResult {
        sample_id: sample_id.to_owned(),
        yes_votes: yes,
        total_votes: total,
        is_biased: yes >= quorum,
    })
}

/// Share of samples whose consensus is "biased".
pub fn accuracy(results: &[ConsensusResult]) -> Result<f64, AnnotationError> {
    if results.is_empty() {
        return Err(AnnotationError::Empty);
    }
    let biased = results.iter().filter(|r| r.is_biased).count();
    Ok(biased as f64 / results.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationReport {
    pub quorum: usize,
    pub n_samples: usize,
    pub n_biased: usize,
    pub accuracy: Option<f64>,
    pub consensus: Vec<ConsensusResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub total_samples: usize,
    pub labeled: BTreeMap<String, usize>,
}

/// Samples under review plus every annotator's latest label per sample.
///
/// When opened with a log path, each accepted label is appended and synced
/// to the log before [`LabelStore::record_label`] returns.
#[derive(Debug)]
pub struct LabelStore {
    samples: Vec<MaskedSample>,
    index: HashMap<String, usize>,
    // sample index -> annotator -> label
    labels: Vec<BTreeMap<String, AnnotationLabel>>,
    log: Option<(PathBuf, File)>,
}

impl LabelStore {
    /// In-memory store with no log.
    pub fn new(samples: Vec<MaskedSample>) -> Result<Self, AnnotationError> {
        let mut index = HashMap::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            if index.insert(s.id.clone(), i).is_some() {
                return Err(AnnotationError::DuplicateSample(s.id.clone()));
            }
        }
        let labels = vec![BTreeMap::new(); samples.len()];
        Ok(LabelStore {
            samples,
            index,
            labels,
            log: None,
        })
    }

    /// Replays `log_path` if it exists (last write per key wins) and appends
    /// new labels to it. Logged labels for unknown samples are skipped.
    pub fn open(samples: Vec<MaskedSample>, log_path: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        let log_path = log_path.as_ref();
        let mut store = LabelStore::new(samples)?;
        if log_path.exists() {
            for label in read_jsonl::<AnnotationLabel>(log_path)? {
                if store.apply(label.clone()).is_err() {
                    log::warn!(
                        "{}: ignoring label for unknown sample {:?}",
                        log_path.display(),
                        label.sample_id
                    );
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(log_path)
            .map_err(|source| AnnotationError::Log {
                path: log_path.to_owned(),
                source,
            })?;
        store.log = Some((log_path.to_owned(), file));
        Ok(store)
    }

    fn apply(&mut self, label: AnnotationLabel) -> Result<usize, AnnotationError> {
        if label.annotator_id.trim().is_empty() {
            return Err(AnnotationError::EmptyAnnotator);
        }
        let &i = self
            .index
            .get(&label.sample_id)
            .ok_or_else(|| AnnotationError::UnknownSample(label.sample_id.clone()))?;
        let slot = &mut self.labels[i];
        slot.insert(label.annotator_id.clone(), label);
        Ok(slot.len())
    }

    /// Upserts a label keyed by (annotator, sample). Returns the number of
    /// annotators who have labeled that sample.
    pub fn record_label(&mut self, label: AnnotationLabel) -> Result<usize, AnnotationError> {
        if label.annotator_id.trim().is_empty() {
            return Err(AnnotationError::EmptyAnnotator);
        }
        if !self.index.contains_key(&label.sample_id) {
            return Err(AnnotationError::UnknownSample(label.sample_id));
        }
        if let Some((path, file)) = &mut self.log {
            let mut line = serde_json::to_vec(&label).map_err(io::Error::other).map_err(
                |source| AnnotationError::Log {
                    path: path.clone(),
                    source,
                },
            )?;
            line.push(b'\n');
            file.write_all(&line)
                .and_then(|()| file.sync_data())
                .map_err(|source| AnnotationError::Log {
                    path: path.clone(),
                    source,
                })?;
        }
        self.apply(label)
    }

    pub fn samples(&self) -> &[MaskedSample] {
        &self.samples
    }

    pub fn sample(&self, id: &str) -> Option<&MaskedSample> {
        self.index.get(id).map(|&i| &self.samples[i])
    }

    pub fn labels_for(&self, sample_id: &str) -> impl Iterator<Item = &AnnotationLabel> {
        self.index
            .get(sample_id)
            .into_iter()
            .flat_map(|&i| self.labels[i].values())
    }

    /// Lowest-index sample `annotator_id` has not labeled yet.
    pub fn next_unlabeled(&self, annotator_id: &str) -> Option<&MaskedSample> {
        self.labels
            .iter()
            .position(|by| !by.contains_key(annotator_id))
            .map(|i| &self.samples[i])
    }

    pub fn progress(&self) -> Progress {
        let mut labeled = BTreeMap::new();
        for by in &self.labels {
            for annotator in by.keys() {
                *labeled.entry(annotator.clone()).or_insert(0) += 1;
            }
        }
        Progress {
            total_samples: self.samples.len(),
            labeled,
        }
    }

    pub fn consensus_all(&self, quorum: usize) -> Result<Vec<ConsensusResult>, AnnotationError> {
        self.samples
            .iter()
            .zip(&self.labels)
            .map(|(s, by)| consensus(&s.id, by.values().map(|l| l.biased), quorum))
            .collect()
    }

    pub fn report(&self, quorum: usize) -> Result<AnnotationReport, AnnotationError> {
        let consensus = self.consensus_all(quorum)?;
        let n_biased = consensus.iter().filter(|c| c.is_biased).count();
        Ok(AnnotationReport {
            quorum,
            n_samples: consensus.len(),
            n_biased,
            accuracy: accuracy(&consensus).ok(),
            consensus,
        })
    }

    /// All current labels in sample order, then annotator order.
    pub fn export(&self) -> Vec<AnnotationLabel> {
        self.labels
            .iter()
            .flat_map(|by| by.values().cloned())
            .collect()
    }
}

/// Consensus computed straight from a label log, without a sample file.
/// Samples are the distinct ids in the log, in order of first appearance.
pub fn consensus_from_log(
    labels: &[AnnotationLabel],
    quorum: usize,
) -> Result<Vec<ConsensusResult>, AnnotationError> {
    let mut order: Vec<&str> = Vec::new();
    let mut seen = HashSet::new();
    let mut latest: HashMap<(&str, &str), bool> = HashMap::new();
    for l in labels {
        if seen.insert(l.sample_id.as_str()) {
            order.push(&l.sample_id);
        }
        latest.insert((&l.sample_id, &l.annotator_id), l.biased);
    }
    let mut votes: HashMap<&str, Vec<bool>> = HashMap::new();
    for ((sample, _), v) in latest {
        votes.entry(sample).or_default().push(v);
    }
    order
        .into_iter()
        .map(|id| consensus(id, votes.remove(id).unwrap_or_default(), quorum))
        .collect()
}
