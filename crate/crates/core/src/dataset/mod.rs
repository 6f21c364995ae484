//! Candidate-paper datasets with author demographics.
//!
//! A [`Dataset`] is an immutable, validated collection of [`PaperRecord`]s.
//! Papers carry a derived quality signal (`paper_h_index`, the mean of
//! career-stage-weighted author h-indices) and expose paper-level protected
//! flags: a paper belongs to the race-protected group if any author is
//! Hispanic or Black, and to the country-protected group if any author is
//! from an underdeveloped country.

mod csv_io;
mod features;
mod split;
mod synthetic;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, write_csv};
pub use features::{preprocess, preprocess_with, ColumnRange, FeatureMatrix, NormalizationParams};
pub use split::stratified_split;
pub use synthetic::{generate_synthetic, SyntheticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    Male,
    Female,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Race {
    White,
    Asian,
    Hispanic,
    Black,
}

impl Race {
    /// Hispanic and Black are the protected race groups.
    pub fn is_protected(self) -> bool {
        matches!(self, Race::Hispanic | Race::Black)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CountryClass {
    Developed,
    Underdeveloped,
}

impl CountryClass {
    pub fn is_protected(self) -> bool {
        matches!(self, CountryClass::Underdeveloped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CareerStage {
    Professor,
    AssociateProfessor,
    Lecturer,
    PostDoc,
    GradStudent,
}

impl CareerStage {
    pub const ALL: [CareerStage; 5] = [
        CareerStage::Professor,
        CareerStage::AssociateProfessor,
        CareerStage::Lecturer,
        CareerStage::PostDoc,
        CareerStage::GradStudent,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Conference {
    Iui,
    Dis,
    Sigchi,
}

impl Conference {
    pub const ALL: [Conference; 3] = [Conference::Iui, Conference::Dis, Conference::Sigchi];
}

/// A demographic dimension under fairness protection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProtectedAttr {
    Race,
    Country,
}

impl fmt::Display for ProtectedAttr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtectedAttr::Race => write!(f, "race"),
            ProtectedAttr::Country => write!(f, "country"),
        }
    }
}

macro_rules! enum_codes {
    ($ty:ty { $($variant:path => $code:literal),+ $(,)? }) => {
        impl $ty {
            /// Canonical code emitted in CSV files.
            pub fn code(self) -> &'static str {
                match self {
                    $($variant => $code,)+
                }
            }

            /// Parse a code, case-insensitively.
            pub fn parse_code(s: &str) -> Option<Self> {
                $(if s.eq_ignore_ascii_case($code) { return Some($variant); })+
                None
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.code())
            }
        }
    };
}

enum_codes!(Gender {
    Gender::Male => "male",
    Gender::Female => "female",
});

enum_codes!(Race {
    Race::White => "White",
    Race::Asian => "Asian",
    Race::Hispanic => "Hispanic",
    Race::Black => "Black",
});

enum_codes!(CountryClass {
    CountryClass::Developed => "developed",
    CountryClass::Underdeveloped => "underdeveloped",
});

enum_codes!(CareerStage {
    CareerStage::Professor => "Professor",
    CareerStage::AssociateProfessor => "AssociateProfessor",
    CareerStage::Lecturer => "Lecturer",
    CareerStage::PostDoc => "PostDoc",
    CareerStage::GradStudent => "GradStudent",
});

enum_codes!(Conference {
    Conference::Iui => "IUI",
    Conference::Dis => "DIS",
    Conference::Sigchi => "SIGCHI",
});

/// Opaque paper identifier. Ordering is lexicographic and is the documented
/// tie-break order for selection.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PaperId(pub String);

impl PaperId {
    pub fn new(s: impl Into<String>) -> Self {
        PaperId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PaperId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorRecord {
    pub author_id: String,
    pub gender: Gender,
    pub race: Race,
    pub country_class: CountryClass,
    pub career_stage: CareerStage,
    pub h_index: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: PaperId,
    pub title: String,
    pub conference: Conference,
    /// Binary acceptance label: true = accepted.
    pub label: bool,
    pub authors: Vec<AuthorRecord>,
    /// Mean of career-stage-weighted author h-indices. Derived during
    /// dataset construction; recomputable from `authors` and the dataset's
    /// career-stage shares.
    pub paper_h_index: f64,
}

impl PaperRecord {
    /// Paper-level protected membership: any author in the protected group.
    pub fn in_protected_group(&self, attr: ProtectedAttr) -> bool {
        match attr {
            ProtectedAttr::Race => self.authors.iter().any(|a| a.race.is_protected()),
            ProtectedAttr::Country => self.authors.iter().any(|a| a.country_class.is_protected()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Csv,
    Synthetic,
}

/// A validated, immutable collection of papers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub papers: Vec<PaperRecord>,
    pub provenance: Provenance,
    /// Generator seed; present only for synthetic datasets.
    pub seed: Option<u64>,
}

impl Dataset {
    /// Validate papers, derive `paper_h_index` for each, and assemble a
    /// dataset. Rejects duplicate paper ids and papers without authors.
    pub fn new(
        mut papers: Vec<PaperRecord>,
        provenance: Provenance,
        seed: Option<u64>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for paper in &papers {
            if !seen.insert(paper.paper_id.clone()) {
                return Err(Error::DuplicatePaperId(paper.paper_id.to_string()));
            }
            if paper.authors.is_empty() {
                return Err(Error::PaperWithoutAuthors(paper.paper_id.to_string()));
            }
        }
        let shares = career_stage_shares(&papers);
        for paper in &mut papers {
            paper.paper_h_index = weighted_paper_h_index(paper, &shares);
        }
        Ok(Dataset {
            papers,
            provenance,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn paper(&self, id: &PaperId) -> Option<&PaperRecord> {
        self.papers.iter().find(|p| &p.paper_id == id)
    }

    /// Share of authors per career stage over the whole dataset.
    pub fn career_stage_shares(&self) -> BTreeMap<CareerStage, f64> {
        career_stage_shares(&self.papers)
    }
}

/// Fraction of authors (counted with multiplicity) in each career stage.
/// All five stages are present in the map; absent stages have share 0.
pub fn career_stage_shares(papers: &[PaperRecord]) -> BTreeMap<CareerStage, f64> {
    let mut counts: BTreeMap<CareerStage, usize> =
        CareerStage::ALL.iter().map(|&s| (s, 0)).collect();
    let mut total = 0usize;
    for paper in papers {
        for author in &paper.authors {
            *counts
                .get_mut(&author.career_stage)
                .expect("all stages present") += 1;
            total += 1;
        }
    }
    counts
        .into_iter()
        .map(|(stage, c)| {
            let share = if total == 0 {
                0.0
            } else {
                c as f64 / total as f64
            };
            (stage, share)
        })
        .collect()
}

/// Mean over a paper's authors of `stage_share(author) * h_index(author)`.
pub fn weighted_paper_h_index(
    paper: &PaperRecord,
    stage_shares: &BTreeMap<CareerStage, f64>,
) -> f64 {
    let sum: f64 = paper
        .authors
        .iter()
        .map(|a| stage_shares.get(&a.career_stage).copied().unwrap_or(0.0) * f64::from(a.h_index))
        .sum();
    sum / paper.authors.len() as f64
}
