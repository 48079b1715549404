//! Coreference clusters for single sentences.
//!
//! Two providers sit behind [`CorefProvider`]:
//!
//! * [`HeuristicCoref`]: a deterministic nearest-antecedent rule that links the
//!   sentence's single gendered pronoun to one noun-phrase candidate.
//! * [`RemoteCoref`]: POSTs `{"text": ...}` to an external coreference service
//!   and reads back clusters of whitespace-token spans.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Token;
use crate::lexicon::Lexicon;

#[derive(Debug, Error)]
pub enum CorefError {
    #[error("coreference service request failed: {0}")]
    Transport(String),
    #[error("coreference service returned HTTP {0}")]
    Status(u16),
    #[error("malformed coreference response: {0}")]
    Malformed(String),
}

/// A span of tokens `[start, end)` plus its surface text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

impl Mention {
    fn from_tokens(sentence: &str, tokens: &[Token], start: usize, end: usize) -> Self {
        Mention {
            start,
            end,
            text: sentence[tokens[start].start..tokens[end - 1].end].to_owned(),
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    fn overlaps(&self, other: &Mention) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Mentions referring to the same entity, ordered by position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorefCluster {
    pub mentions: Vec<Mention>,
}

pub trait CorefProvider: Send + Sync {
    /// Short identifier recorded alongside filter results.
    fn name(&self) -> &str;

    fn resolve(&self, sentence: &str, tokens: &[Token]) -> Result<Vec<CorefCluster>, CorefError>;
}

// Tokens that can never head an antecedent noun phrase: function words,
// auxiliaries, non-gendered pronouns, and the common action verbs of
// scene-description corpora.
const NON_NOMINAL: &[&str] = &[
    // determiners and quantifiers
    "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every",
    "all", "both", "either", "neither", "no", "another", "other", "such", "much", "many",
    "more", "most", "few", "several",
    // pronouns
    "i", "me", "my", "mine", "myself", "you", "your", "yours", "yourself", "we", "us", "our",
    "ours", "ourselves", "they", "them", "their", "theirs", "themselves", "it", "its",
    "itself", "who", "whom", "whose", "which", "what", "whoever", "one", "ones",
    // prepositions and particles
    "about", "above", "across", "after", "against", "along", "amid", "among", "around", "as",
    "at", "before", "behind", "below", "beneath", "beside", "besides", "between", "beyond",
    "by", "despite", "down", "during", "for", "from", "in", "inside", "into", "like", "near",
    "of", "off", "on", "onto", "out", "outside", "over", "past", "since", "through",
    "throughout", "to", "toward", "towards", "under", "underneath", "until", "up", "upon",
    "with", "within", "without", "away", "back", "aside", "together", "apart",
    // conjunctions and adverbs
    "and", "or", "but", "nor", "so", "yet", "if", "then", "than", "because", "while", "when",
    "whenever", "where", "wherever", "whether", "though", "although", "once", "also", "just",
    "only", "still", "even", "again", "already", "always", "never", "ever", "often", "soon",
    "now", "here", "there", "very", "too", "quite", "rather", "almost", "finally", "slowly",
    "quickly", "suddenly", "gently", "really", "not", "how", "why", "instead", "ahead",
    "nearby", "everywhere", "somewhere", "anywhere", "further", "forward", "forth",
    // auxiliaries and modals
    "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "having",
    "do", "does", "did", "doing", "done", "will", "would", "shall", "should", "can", "could",
    "may", "might", "must", "ought", "gets", "get", "got", "getting", "goes", "go", "going",
    "went", "gone",
    // frequent action verbs
    "walks", "walk", "walked", "walking", "runs", "run", "ran", "running", "stands", "stand",
    "stood", "standing", "sits", "sit", "sat", "sitting", "looks", "look", "looked",
    "looking", "turns", "turn", "turned", "turning", "takes", "take", "took", "taking",
    "makes", "make", "made", "making", "puts", "put", "putting", "holds", "hold", "held",
    "holding", "pulls", "pull", "pulled", "pulling", "pushes", "push", "pushed", "pushing",
    "lifts", "lift", "lifted", "lifting", "raises", "raise", "raised", "raising", "throws",
    "throw", "threw", "throwing", "grabs", "grab", "grabbed", "grabbing", "picks", "pick",
    "picked", "picking", "opens", "open", "opened", "opening", "closes", "close", "closed",
    "closing", "wipes", "wipe", "wiped", "wiping", "winds", "wound", "winding", "knocks",
    "knock", "knocked", "knocking", "dances", "dance", "danced", "dancing", "shakes", "shake",
    "shook", "shaking", "watches", "watch", "watched", "watching", "checks", "check",
    "checked", "checking", "smiles", "smile", "smiled", "smiling", "nods", "nod", "nodded",
    "nodding", "stares", "stare", "stared", "staring", "glances", "glance", "glanced",
    "glancing", "gazes", "gaze", "gazed", "gazing", "leans", "lean", "leaned", "leaning",
    "steps", "stepped", "stepping", "moves", "move", "moved", "moving", "comes", "come",
    "came", "coming", "leaves", "leave", "left", "leaving", "enters", "enter", "entered",
    "entering", "exits", "exit", "exited", "exiting", "rides", "ride", "rode", "riding",
    "drives", "drive", "drove", "driving", "plays", "play", "played", "playing", "uses",
    "use", "used", "using", "wears", "wear", "wore", "wearing", "gives", "give", "gave",
    "giving", "shows", "show", "showed", "showing", "says", "say", "said", "saying", "tells",
    "tell", "told", "telling", "speaks", "speak", "spoke", "speaking", "talks", "talk",
    "talked", "talking", "sees", "see", "saw", "seeing", "handed", "handing",
    "begins", "begin", "began", "beginning", "starts", "start", "started", "starting",
    "continues", "continue", "continued", "continuing", "tries", "try", "tried", "trying",
    "wants", "want", "wanted", "wanting", "needs", "need", "needed", "lets", "let",
    "keeps", "keep", "kept", "keeping", "sets", "set", "setting", "lays", "lay", "laid",
    "lies", "lying", "falls", "fall", "fell", "falling", "jumps", "jump", "jumped",
    "jumping", "climbs", "climb", "climbed", "climbing", "swims", "swim", "swam", "swimming",
    "brushes", "brush", "brushed", "brushing", "cuts", "cut", "cutting", "adds", "add",
    "added", "adding", "places", "placed", "placing", "reaches", "reach", "reached",
    "reaching", "rubs", "rub", "rubbed", "rubbing", "touches", "touch", "touched",
    "touching", "waves", "waved", "waving", "points", "pointed", "pointing", "hits", "hit",
    "hitting", "kicks", "kick", "kicked", "kicking", "catches", "catch", "caught",
    "catching", "drops", "drop", "dropped", "dropping", "carries", "carry", "carried",
    "carrying", "follows", "follow", "followed", "following", "kisses", "kiss", "kissed",
    "kissing", "hugs", "hug", "hugged", "hugging", "shrugs", "shrug", "shrugged", "sighs",
    "sigh", "sighed", "laughs", "laugh", "laughed", "laughing", "cries", "cry", "cried",
    "crying", "eats", "eat", "ate", "eating", "drinks", "drank", "drinking", "finds", "find",
    "found", "finding", "pours", "pour", "poured", "pouring", "washes", "wash", "washed",
    "washing", "tosses", "toss", "tossed", "tossing", "slides", "slide", "slid", "sliding",
    "spins", "spin", "spun", "spinning", "swings", "swing", "swung", "swinging", "bends",
    "bend", "bent", "bending", "kneels", "kneel", "knelt", "kneeling", "tremble",
    "trembles", "trembled", "trembling", "pauses", "pause", "paused", "pausing", "waits",
    "wait", "waited", "waiting", "hurries", "hurry", "hurried", "rushes", "rush", "rushed",
    "lowers", "lower", "lowered", "lowering", "hangs", "hang", "hung", "hanging", "rolls",
    "roll", "rolled", "rolling", "ties", "tie", "tied", "tying", "fixes", "fix", "fixed",
    "fixing", "reads", "read", "reading", "writes", "write", "wrote", "writing", "sings",
    "sing", "sang", "singing", "performs", "perform", "performed", "performing", "demonstrates",
    "demonstrated", "demonstrating", "explains", "explained", "explaining",
];

const DETERMINERS: &[&str] = &["a", "an", "the"];

/// Deterministic stand-in for a statistical coreference model.
#[derive(Debug, Clone)]
pub struct HeuristicCoref {
    lexicon: Arc<Lexicon>,
}

impl HeuristicCoref {
    pub fn new(lexicon: Arc<Lexicon>) -> Self {
        HeuristicCoref { lexicon }
    }
}

impl CorefProvider for HeuristicCoref {
    fn name(&self) -> &str {
        "heuristic"
    }

    fn resolve(&self, sentence: &str, tokens: &[Token]) -> Result<Vec<CorefCluster>, CorefError> {
        Ok(heuristic_resolve(sentence, tokens, &self.lexicon))
    }
}

fn is_wordlike(lower: &str) -> bool {
    lower.chars().any(char::is_alphabetic)
        && lower
            .chars()
            .all(|c| c.is_alphabetic() || c == '\'' || c == '’' || c == '-')
}

/// Links a sentence's only gendered pronoun to the nearest noun-phrase
/// candidate, searching backward first and then forward.
///
/// A candidate head is a word-like token that is neither a closed-class
/// non-nominal word nor a gendered pronoun. The mention grows leftward over
/// modifier tokens and stops after absorbing a determiner.
pub fn heuristic_resolve(sentence: &str, tokens: &[Token], lex: &Lexicon) -> Vec<CorefCluster> {
    let pronouns: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| lex.classify(&t.lower).is_pronoun())
        .map(|(i, _)| i)
        .collect();
    let [pronoun] = pronouns[..] else {
        return Vec::new();
    };

    let is_head = |i: usize| {
        let lower = tokens[i].lower.as_str();
        is_wordlike(lower) && !NON_NOMINAL.contains(&lower) && !lex.classify(lower).is_pronoun()
    };
    let head = (0..pronoun)
        .rev()
        .find(|&i| is_head(i))
        .or_else(|| (pronoun + 1..tokens.len()).find(|&i| is_head(i)));
    let Some(head) = head else {
        return Vec::new();
    };

    let mut start = head;
    while start > 0 && start - 1 != pronoun {
        let prev = tokens[start - 1].lower.as_str();
        if DETERMINERS.contains(&prev) {
            start -= 1;
            break;
        }
        if !is_head(start - 1) {
            break;
        }
        start -= 1;
    }

    let antecedent = Mention::from_tokens(sentence, tokens, start, head + 1);
    let pronoun_mention = Mention::from_tokens(sentence, tokens, pronoun, pronoun + 1);
    let mut mentions = vec![antecedent, pronoun_mention];
    mentions.sort_by_key(|m| m.start);
    vec![CorefCluster { mentions }]
}

#[derive(Debug, Serialize)]
struct RemoteRequest<'a> {
    text: &'a str,
}

#[derive(Debug, Deserialize)]
struct RemoteResponse {
    clusters: Vec<Vec<[usize; 2]>>,
}

/// Client for an external coreference service.
///
/// Span indices in the response count whitespace-separated tokens of the raw
/// sentence; they are re-aligned onto [`crate::corpus::tokenize`] tokens.
#[derive(Debug, Clone)]
pub struct RemoteCoref {
    url: String,
    client: reqwest::blocking::Client,
}

impl RemoteCoref {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, CorefError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| CorefError::Transport(e.to_string()))?;
        Ok(RemoteCoref {
            url: url.into(),
            client,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl CorefProvider for RemoteCoref {
    fn name(&self) -> &str {
        "remote"
    }

    fn resolve(&self, sentence: &str, tokens: &[Token]) -> Result<Vec<CorefCluster>, CorefError> {
        let resp = self
            .client
            .post(&self.url)
            .json(&RemoteRequest { text: sentence })
            .send()
            .map_err(|e| CorefError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(CorefError::Status(resp.status().as_u16()));
        }
        let body = resp
            .text()
            .map_err(|e| CorefError::Transport(e.to_string()))?;
        parse_remote_clusters(sentence, tokens, &body)
    }
}

/// Decodes a remote response body and aligns its spans onto `tokens`.
///
/// Mentions that cover no token are dropped, as are clusters left with fewer
/// than two non-overlapping mentions.
pub fn parse_remote_clusters(
    sentence: &str,
    tokens: &[Token],
    body: &str,
) -> Result<Vec<CorefCluster>, CorefError> {
    let parsed: RemoteResponse =
        serde_json::from_str(body).map_err(|e| CorefError::Malformed(e.to_string()))?;

    let ws_spans: Vec<(usize, usize)> = whitespace_spans(sentence);
    let mut clusters = Vec::new();
    for raw in parsed.clusters {
        let mut mentions: Vec<Mention> = Vec::new();
        for [s, e] in raw {
            if s >= e || e > ws_spans.len() {
                return Err(CorefError::Malformed(format!(
                    "span [{s}, {e}) outside {} whitespace tokens",
                    ws_spans.len()
                )));
            }
            let (lo, hi) = (ws_spans[s].0, ws_spans[e - 1].1);
            let covered: Vec<usize> = tokens
                .iter()
                .enumerate()
                .filter(|(_, t)| t.start >= lo && t.end <= hi)
                .map(|(i, _)| i)
                .collect();
            let (Some(&first), Some(&last)) = (covered.first(), covered.last()) else {
                continue;
            };
            let m = Mention::from_tokens(sentence, tokens, first, last + 1);
            if mentions.iter().any(|o| o.overlaps(&m)) {
                continue;
            }
            mentions.push(m);
        }
        if mentions.len() >= 2 {
            mentions.sort_by_key(|m| m.start);
            clusters.push(CorefCluster { mentions });
        }
    }
    Ok(clusters)
}

fn whitespace_spans(s: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices().chain(std::iter::once((s.len(), ' '))) {
        if c.is_whitespace() {
            if let Some(st) = start.take() {
                spans.push((st, i));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    spans
}
