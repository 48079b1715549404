//! Structural gender-bias probing for masked language models.
//!
//! The pipeline has two stages. The filter stage keeps corpus sentences that
//! contain exactly one gendered pronoun, no other sex indicator, and a
//! coreference link from that pronoun to a gender-neutral mention, then masks
//! the pronoun. The audit stage asks a fill-mask model for the masked word and
//! scores how strongly it prefers male over female completions.
//!
//! Alongside the pipeline: WEAT association statistics over word vectors, an
//! annotation store implementing quorum consensus, and report aggregation.

pub mod annotation;
pub mod bias;
pub mod corpus;
pub mod coref;
pub mod filter;
pub mod jsonl;
pub mod lexicon;
pub mod mlm;
pub mod report;
pub mod weat;

pub use bias::{BiasConfig, BiasResult, Verdict};
pub use corpus::{SentenceRecord, Token};
pub use coref::{CorefCluster, CorefProvider, HeuristicCoref, Mention, RemoteCoref};
pub use filter::{FilterConfig, FilterOutcome, MaskedSample, RejectionReason};
pub use lexicon::{Gender, GenderClass, Lexicon};
pub use mlm::{FillMaskProvider, HttpFillMask, MaskPrediction, MlmConfig, StubProvider};
