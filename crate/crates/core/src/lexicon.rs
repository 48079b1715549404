//! Gendered word lists ("sex indicators") and token classification.
//!
//! A [`Lexicon`] holds four disjoint sets: male and female pronouns, and male
//! and female identity words ("boy", "actress", "sister", ...). Pronoun and
//! identity words together are the sex indicators used by the filter stage.
//!
//! The bundled lists live in `data/lexicon/` and can be replaced wholesale by
//! pointing [`Lexicon::load`] at another directory with the same four files.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MALE_PRONOUNS_FILE: &str = "male_pronouns.txt";
pub const FEMALE_PRONOUNS_FILE: &str = "female_pronouns.txt";
pub const MALE_IDENTITIES_FILE: &str = "male_identities.txt";
pub const FEMALE_IDENTITIES_FILE: &str = "female_identities.txt";

const BUNDLED_MALE_PRONOUNS: &str = include_str!("../data/lexicon/male_pronouns.txt");
const BUNDLED_FEMALE_PRONOUNS: &str = include_str!("../data/lexicon/female_pronouns.txt");
const BUNDLED_MALE_IDENTITIES: &str = include_str!("../data/lexicon/male_identities.txt");
const BUNDLED_FEMALE_IDENTITIES: &str = include_str!("../data/lexicon/female_identities.txt");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read word list {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("word list `{0}` is empty")]
    EmptySet(WordSet),
    #[error("token {token:?} appears in both `{first}` and `{second}`")]
    Duplicate {
        token: String,
        first: WordSet,
        second: WordSet,
    },
    #[error("entry {token:?} in `{set}` contains whitespace")]
    Whitespace { token: String, set: WordSet },
}

/// Which of the four lists a word belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordSet {
    MalePronouns,
    FemalePronouns,
    MaleIdentities,
    FemaleIdentities,
}

impl WordSet {
    pub const ALL: [WordSet; 4] = [
        WordSet::MalePronouns,
        WordSet::FemalePronouns,
        WordSet::MaleIdentities,
        WordSet::FemaleIdentities,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            WordSet::MalePronouns => MALE_PRONOUNS_FILE,
            WordSet::FemalePronouns => FEMALE_PRONOUNS_FILE,
            WordSet::MaleIdentities => MALE_IDENTITIES_FILE,
            WordSet::FemaleIdentities => FEMALE_IDENTITIES_FILE,
        }
    }
}

impl fmt::Display for WordSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_name().trim_end_matches(".txt"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gender::Male => f.write_str("male"),
            Gender::Female => f.write_str("female"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GenderClass {
    MalePronoun,
    FemalePronoun,
    MaleIdentity,
    FemaleIdentity,
    Neutral,
}

impl GenderClass {
    pub fn gender(self) -> Option<Gender> {
        match self {
            GenderClass::MalePronoun | GenderClass::MaleIdentity => Some(Gender::Male),
            GenderClass::FemalePronoun | GenderClass::FemaleIdentity => Some(Gender::Female),
            GenderClass::Neutral => None,
        }
    }

    pub fn is_pronoun(self) -> bool {
        matches!(self, GenderClass::MalePronoun | GenderClass::FemalePronoun)
    }

    /// Any gendered pronoun or identity word.
    pub fn is_sex_indicator(self) -> bool {
        self != GenderClass::Neutral
    }
}

/// Four pairwise-disjoint, non-empty sets of lowercase tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    male_pronouns: BTreeSet<String>,
    female_pronouns: BTreeSet<String>,
    male_identities: BTreeSet<String>,
    female_identities: BTreeSet<String>,
}

impl Lexicon {
    /// Builds a lexicon from raw entries, lowercasing and validating them.
    pub fn from_lists<S: AsRef<str>>(
        male_pronouns: &[S],
        female_pronouns: &[S],
        male_identities: &[S],
        female_identities: &[S],
    ) -> Result<Self, LexiconError> {
        let sets = [
            (WordSet::MalePronouns, normalize(WordSet::MalePronouns, male_pronouns)?),
            (WordSet::FemalePronouns, normalize(WordSet::FemalePronouns, female_pronouns)?),
            (WordSet::MaleIdentities, normalize(WordSet::MaleIdentities, male_identities)?),
            (WordSet::FemaleIdentities, normalize(WordSet::FemaleIdentities, female_identities)?),
        ];
        for (i, (name, set)) in sets.iter().enumerate() {
            if set.is_empty() {
                return Err(LexiconError::EmptySet(*name));
            }
            for (other_name, other) in &sets[i + 1..] {
                if let Some(token) = set.intersection(other).next() {
                    return Err(LexiconError::Duplicate {
                        token: token.clone(),
                        first: *name,
                        second: *other_name,
                    });
                }
            }
        }
        let [(_, male_pronouns), (_, female_pronouns), (_, male_identities), (_, female_identities)] =
            sets;
        Ok(Lexicon {
            male_pronouns,
            female_pronouns,
            male_identities,
            female_identities,
        })
    }

    /// Reads the four list files from `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let dir = dir.as_ref();
        let read = |set: WordSet| -> Result<Vec<String>, LexiconError> {
            let path = dir.join(set.file_name());
            let text = fs::read_to_string(&path).map_err(|source| LexiconError::Read {
                path: path.clone(),
                source,
            })?;
            Ok(parse_list(&text))
        };
        Lexicon::from_lists(
            &read(WordSet::MalePronouns)?,
            &read(WordSet::FemalePronouns)?,
            &read(WordSet::MaleIdentities)?,
            &read(WordSet::FemaleIdentities)?,
        )
    }

    /// The lists shipped with the crate.
    pub fn bundled() -> Self {
        Lexicon::from_lists(
            &parse_list(BUNDLED_MALE_PRONOUNS),
            &parse_list(BUNDLED_FEMALE_PRONOUNS),
            &parse_list(BUNDLED_MALE_IDENTITIES),
            &parse_list(BUNDLED_FEMALE_IDENTITIES),
        )
        .expect("bundled lexicon is valid")
    }

    /// Case-insensitive exact-token lookup.
    pub fn classify(&self, token: &str) -> GenderClass {
        let lower = token.to_lowercase();
        let t = lower.as_str();
        if self.male_pronouns.contains(t) {
            GenderClass::MalePronoun
        } else if self.female_pronouns.contains(t) {
            GenderClass::FemalePronoun
        } else if self.male_identities.contains(t) {
            GenderClass::MaleIdentity
        } else if self.female_identities.contains(t) {
            GenderClass::FemaleIdentity
        } else {
            GenderClass::Neutral
        }
    }

    pub fn male_pronouns(&self) -> &BTreeSet<String> {
        &self.male_pronouns
    }

    pub fn female_pronouns(&self) -> &BTreeSet<String> {
        &self.female_pronouns
    }

    pub fn male_identities(&self) -> &BTreeSet<String> {
        &self.male_identities
    }

    pub fn female_identities(&self) -> &BTreeSet<String> {
        &self.female_identities
    }

    pub fn set(&self, which: WordSet) -> &BTreeSet<String> {
        match which {
            WordSet::MalePronouns => &self.male_pronouns,
            WordSet::FemalePronouns => &self.female_pronouns,
            WordSet::MaleIdentities => &self.male_identities,
            WordSet::FemaleIdentities => &self.female_identities,
        }
    }

    /// Writes the four list files into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> std::io::Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for which in WordSet::ALL {
            let mut body = String::new();
            for word in self.set(which) {
                body.push_str(word);
                body.push('\n');
            }
            fs::write(dir.join(which.file_name()), body)?;
        }
        Ok(())
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::bundled()
    }
}

/// One token per line; blank lines and `#` comments are skipped.
fn parse_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

fn normalize<S: AsRef<str>>(set: WordSet, entries: &[S]) -> Result<BTreeSet<String>, LexiconError> {
    let mut out = BTreeSet::new();
    for entry in entries {
        let token = entry.as_ref().trim();
        if token.is_empty() {
            continue;
        }
        if token.chars().any(char::is_whitespace) {
            return Err(LexiconError::Whitespace {
                token: token.to_owned(),
                set,
            });
        }
        out.insert(token.to_lowercase());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_pronoun_sets_are_exactly_the_eight_pronouns() {
        let lex = Lexicon::bundled();
        let male: Vec<_> = lex.male_pronouns().iter().map(String::as_str).collect();
        let female: Vec<_> = lex.female_pronouns().iter().map(String::as_str).collect();
        assert_eq!(male, ["he", "him", "himself", "his"]);
        assert_eq!(female, ["her", "hers", "herself", "she"]);
    }

    #[test]
    fn bundled_identity_lists_are_sizeable() {
        let lex = Lexicon::bundled();
        assert!(lex.male_identities().len() >= 60);
        assert!(lex.female_identities().len() >= 60);
        for set in WordSet::ALL {
            for w in lex.set(set) {
                assert_eq!(w, &w.to_lowercase());
                assert!(!w.chars().any(char::is_whitespace));
            }
        }
    }

    #[test]
    fn classify_examples() {
        let lex = Lexicon::bundled();
        assert_eq!(lex.classify("his"), GenderClass::MalePronoun);
        assert_eq!(lex.classify("radio"), GenderClass::Neutral);
        assert_eq!(lex.classify("GIRL"), GenderClass::FemaleIdentity);
        assert_eq!(lex.classify("Herself"), GenderClass::FemalePronoun);
        assert_eq!(lex.classify("someone"), GenderClass::Neutral);
        assert_eq!(lex.classify("actor"), GenderClass::MaleIdentity);
    }

    #[test]
    fn load_lowercases_entries() {
        let dir = tempfile::tempdir().unwrap();
        Lexicon::bundled().write_to(dir.path()).unwrap();
        fs::write(
            dir.path().join(MALE_IDENTITIES_FILE),
            "# comment\nBoy\n\n  Uncle \n",
        )
        .unwrap();
        let lex = Lexicon::load(dir.path()).unwrap();
        assert!(lex.male_identities().contains("boy"));
        assert!(lex.male_identities().contains("uncle"));
        assert_eq!(lex.male_identities().len(), 2);
        assert_eq!(lex.male_pronouns().len(), 4);
        assert_eq!(lex.female_pronouns().len(), 4);
    }

    #[test]
    fn load_rejects_token_in_two_sets() {
        let dir = tempfile::tempdir().unwrap();
        Lexicon::bundled().write_to(dir.path()).unwrap();
        fs::write(dir.path().join(FEMALE_IDENTITIES_FILE), "girl\nher\n").unwrap();
        let err = Lexicon::load(dir.path()).unwrap_err();
        match &err {
            LexiconError::Duplicate { token, .. } => assert_eq!(token, "her"),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(err.to_string().contains("\"her\""));
    }

    #[test]
    fn load_reports_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        Lexicon::bundled().write_to(dir.path()).unwrap();
        fs::remove_file(dir.path().join(FEMALE_PRONOUNS_FILE)).unwrap();
        assert!(matches!(
            Lexicon::load(dir.path()),
            Err(LexiconError::Read { .. })
        ));
    }

    #[test]
    fn load_rejects_empty_set() {
        let dir = tempfile::tempdir().unwrap();
        Lexicon::bundled().write_to(dir.path()).unwrap();
        fs::write(dir.path().join(MALE_IDENTITIES_FILE), "# nothing here\n\n").unwrap();
        assert!(matches!(
            Lexicon::load(dir.path()),
            Err(LexiconError::EmptySet(WordSet::MaleIdentities))
        ));
    }

    #[test]
    fn whitespace_inside_entry_is_rejected() {
        let err = Lexicon::from_lists(&["he"], &["she"], &["best man"], &["bride"]).unwrap_err();
        assert!(matches!(err, LexiconError::Whitespace { .. }));
    }
}
