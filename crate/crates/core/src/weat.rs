//! Word Embedding Association Test over pluggable word vectors.
//!
//! Target sets may contain multi-word phrases; a phrase is embedded as the
//! unweighted mean of its in-vocabulary word vectors.
//!
//! For a word `w` and attribute sets `A`, `B`:
//!
//! ```text
//! s(w, A, B)       = mean_{a in A} cos(w, a) - mean_{b in B} cos(w, b)
//! s(X, Y, A, B)    = sum_{x in X} s(x, A, B) - sum_{y in Y} s(y, A, B)
//! ```
//!
//! The one-sided permutation p-value is the fraction of equal-size
//! repartitions `(X', Y')` of `X ∪ Y` whose statistic exceeds the observed one.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Repartitions are enumerated exhaustively up to this many (C(16, 8)).
pub const EXHAUSTIVE_LIMIT: u64 = 12_870;

/// Partition statistics within this distance of the observed value count as
/// ties, not as exceedances.
pub const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum WeatError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected {expected} components, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("vector file contains no entries")]
    EmptyTable,
    #[error("no in-vocabulary word for {0:?}")]
    Oov(String),
    #[error("attribute set {0} has no in-vocabulary items")]
    AttributeSetUnresolvable(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Word vectors sharing one dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            entries: HashMap::new(),
        }
    }

    /// Adds or replaces `word`. Returns the previous vector if one existed.
    pub fn insert(
        &mut self,
        word: impl Into<String>,
        vector: Vec<f64>,
    ) -> Result<Option<Vec<f64>>, WeatError> {
        if vector.len() != self.dimension {
            return Err(WeatError::InvalidInput(format!(
                "vector has {} components, table dimension is {}",
                vector.len(),
                self.dimension
            )));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(WeatError::InvalidInput("non-finite vector component".into()));
        }
        Ok(self.entries.insert(word.into(), vector))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact lookup, falling back to the lowercased word.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.entries
            .get(word)
            .or_else(|| self.entries.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }
}

/// Reads a whitespace-separated text vector file (`word x1 x2 ...` per line).
///
/// A leading `count dimension` header line, as written by word2vec, is
/// skipped. Repeated words keep their last vector.
pub fn load_vectors(path: impl AsRef<Path>) -> Result<EmbeddingTable, WeatError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| WeatError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_vectors(&text)
}

pub fn parse_vectors(text: &str) -> Result<EmbeddingTable, WeatError> {
    let mut table: Option<EmbeddingTable> = None;
    let mut first_content = true;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else {
            continue;
        };
        let rest: Vec<&str> = fields.collect();
        if first_content {
            first_content = false;
            if rest.len() == 1 && word.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok()
            {
                continue;
            }
        }
        if rest.is_empty() {
            return Err(WeatError::Parse {
                line: line_no,
                message: format!("{word:?} has no vector components"),
            });
        }
        let vector = rest
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| WeatError::Parse {
                        line: line_no,
                        message: format!("bad component {f:?}"),
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let table = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
        if vector.len() != table.dimension {
            return Err(WeatError::Dimension {
                line: line_no,
                expected: table.dimension,
                found: vector.len(),
            });
        }
        if table.insert(word, vector)?.is_some() {
            log::warn!("line {line_no}: duplicate vector for {word:?}, keeping the later one");
        }
    }
    table.ok_or(WeatError::EmptyTable)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeatSpec {
    #[serde(rename = "X")]
    pub x: Vec<String>,
    #[serde(rename = "Y")]
    pub y: Vec<String>,
    #[serde(rename = "A")]
    pub a: Vec<String>,
    #[serde(rename = "B")]
    pub b: Vec<String>,
}

impl WeatSpec {
    pub fn validate(&self) -> Result<(), WeatError> {
        if self.x.len() != self.y.len() {
            return Err(WeatError::InvalidInput(format!(
                "target sets differ in size ({} vs {})",
                self.x.len(),
                self.y.len()
            )));
        }
        if self.a.is_empty() || self.b.is_empty() {
            return Err(WeatError::InvalidInput("attribute sets must be non-empty".into()));
        }
        Ok(())
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, WeatError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| WeatError::Io {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| WeatError::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// Vector for a word, or the mean vector of a phrase's known words.
pub fn embed_item(table: &EmbeddingTable, item: &str) -> Result<Vec<f64>, WeatError> {
    let mut sum = vec![0.0; table.dimension()];
    let mut found = 0usize;
    for word in item.split_whitespace() {
        if let Some(v) = table.get(word) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            found += 1;
        }
    }
    if found == 0 {
        return Err(WeatError::Oov(item.to_owned()));
    }
    if found > 1 {
        let n = found as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    Ok(sum)
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, WeatError> {
    if u.len() != v.len() {
        return Err(WeatError::InvalidInput(format!(
            "vector lengths differ ({} vs {})",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(WeatError::InvalidInput("cosine of a zero vector".into()));
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Attribute vectors with unknown items dropped.
struct Attributes {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

impl Attributes {
    fn resolve(table: &EmbeddingTable, a: &[String], b: &[String]) -> Result<Self, WeatError> {
        let one = |items: &[String], name: &'static str| -> Result<Vec<Vec<f64>>, WeatError> {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                match embed_item(table, item) {
                    Ok(v) => out.push(v),
                    Err(WeatError::Oov(_)) => {
                        log::warn!("attribute {item:?} in {name} is out of vocabulary; skipped")
                    }
                    Err(e) => return Err(e),
                }
            }
            if out.is_empty() {
                return Err(WeatError::AttributeSetUnresolvable(name));
            }
            Ok(out)
        };
        Ok(Attributes {
            a: one(a, "A")?,
            b: one(b, "B")?,
        })
    }

    fn assoc(&self, w: &[f64]) -> Result<f64, WeatError> {
        Ok(mean_cosine(w, &self.a)? - mean_cosine(w, &self.b)?)
    }
}

fn mean_cosine(w: &[f64], set: &[Vec<f64>]) -> Result<f64, WeatError> {
    let mut total = 0.0;
    for v in set {
        total += cosine(w, v)?;
    }
    Ok(total / set.len() as f64)
}

/// `s(w, A, B)`: mean cosine with `A` minus mean cosine with `B`.
pub fn assoc_diff(
    w: &str,
    a: &[String],
    b: &[String],
    table: &EmbeddingTable,
) -> Result<f64, WeatError> {
    let wv = embed_item(table, w)?;
    Attributes::resolve(table, a, b)?.assoc(&wv)
}

/// Per-target association values, `X` first then `Y`.
fn target_associations(spec: &WeatSpec, table: &EmbeddingTable) -> Result<Vec<f64>, WeatError> {
    spec.validate()?;
    let attrs = Attributes::resolve(table, &spec.a, &spec.b)?;
    spec.x
        .iter()
        .chain(&spec.y)
        .map(|item| attrs.assoc(&embed_item(table, item)?))
        .collect()
}

/// Statistic of the partition whose first set is `chosen` (ascending indices
/// into `assoc`).
fn partition_statistic(assoc: &[f64], chosen: &[usize]) -> f64 {
    let mut first = 0.0;
    let mut second = 0.0;
    let mut next = chosen.iter().peekable();
    for (i, s) in assoc.iter().enumerate() {
        if next.peek() == Some(&&i) {
            next.next();
            first += s;
        } else {
            second += s;
        }
    }
    first - second
}

/// `s(X, Y, A, B)`.
pub fn weat_statistic(spec: &WeatSpec, table: &EmbeddingTable) -> Result<f64, WeatError> {
    let assoc = target_associations(spec, table)?;
    let half: Vec<usize> = (0..spec.x.len()).collect();
    Ok(partition_statistic(&assoc, &half))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationTest {
    pub statistic: f64,
    pub p_value: f64,
    pub exhaustive: bool,
    /// Number of repartitions evaluated.
    pub partitions: u64,
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

// Advances `c` to the next k-combination of 0..n in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
        return false;
    };
    c[i] += 1;
    for j in i + 1..k {
        c[j] = c[j - 1] + 1;
    }
    true
}

/// One-sided permutation test for `s(X, Y, A, B)`.
///
/// Enumerates all equal-size repartitions when there are at most
/// [`EXHAUSTIVE_LIMIT`] of them; otherwise draws `num_draws` uniform
/// repartitions from a ChaCha8 stream seeded with `seed`, one stream per draw.
pub fn permutation_pvalue(
    spec: &WeatSpec,
    table: &EmbeddingTable,
    num_draws: u64,
    seed: u64,
) -> Result<PermutationTest, WeatError> {
    if num_draws == 0 {
        return Err(WeatError::InvalidInput("num_draws must be at least 1".into()));
    }
    spec.validate()?;
    let n = spec.x.len() + spec.y.len();
    if n < 2 {
        return Err(WeatError::InvalidInput(
            "need at least two target items to permute".into(),
        ));
    }
    let assoc = target_associations(spec, table)?;
    let half = spec.x.len();
    let observed_idx: Vec<usize> = (0..half).collect();
    let observed = partition_statistic(&assoc, &observed_idx);
    let exceeds = |stat: f64| stat > observed + TIE_TOLERANCE;

    let total = binomial(n as u64, half as u64);
    if total <= EXHAUSTIVE_LIMIT {
        let mut comb = observed_idx.clone();
        let mut greater = 0u64;
        loop {
            greater += u64::from(exceeds(partition_statistic(&assoc, &comb)));
            if !next_combination(&mut comb, n) {
                break;
            }
        }
        return Ok(PermutationTest {
            statistic: observed,
            p_value: greater as f64 / total as f64,
            exhaustive: true,
            partitions: total,
        });
    }

    Ok(sample_repartitions(&assoc, half, observed, num_draws, seed))
}

/// Like [`permutation_pvalue`] but always samples, regardless of pool size.
pub fn sampled_pvalue(
    spec: &WeatSpec,
    table: &EmbeddingTable,
    num_draws: u64,
    seed: u64,
) -> Result<PermutationTest, WeatError> {
    if num_draws == 0 {
        return Err(WeatError::InvalidInput("num_draws must be at least 1".into()));
    }
    let assoc = target_associations(spec, table)?;
    let half = spec.x.len();
    let observed = partition_statistic(&assoc, &(0..half).collect::<Vec<_>>());
    Ok(sample_repartitions(&assoc, half, observed, num_draws, seed))
}

fn sample_repartitions(
    assoc: &[f64],
    half: usize,
    observed: f64,
    num_draws: u64,
    seed: u64,
) -> PermutationTest {
    let n = assoc.len();
    let greater: u64 = (0..num_draws)
        .into_par_iter()
        .map(|draw| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(draw);
            let mut chosen = rand::seq::index::sample(&mut rng, n, half).into_vec();
            chosen.sort_unstable();
            u64::from(partition_statistic(assoc, &chosen) > observed + TIE_TOLERANCE)
        })
        .sum();
    PermutationTest {
        statistic: observed,
        p_value: greater as f64 / num_draws as f64,
        exhaustive: false,
        partitions: num_draws,
    }
}
