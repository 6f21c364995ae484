//! Synthetic candidate-paper generator with controllable label bias.
//!
//! Demographics are assigned by per-conference quotas (exact counts matching
//! the target marginals, shuffled over authors), so realized shares track
//! the targets to within rounding. Labels come from a latent quality model:
//! each paper gets a logit `quality_strength * h_norm - bias_strength *
//! (race_protected + country_protected)` plus Gumbel noise, and the top
//! `n_accepted` keys are labeled accepted. Positive bias therefore depresses
//! protected-group acceptance while the accepted count stays exact.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{
    career_stage_shares, weighted_paper_h_index, AuthorRecord, CareerStage, Conference,
    CountryClass, Dataset, Gender, PaperId, PaperRecord, Provenance, Race,
};

/// Parameters of the synthetic dataset generator.
///
/// Defaults mirror the desk-scale corpus: 530 papers across the three
/// conferences with 351 accepted, and per-conference demographic targets
/// (percent of authors who are female / race-protected / country-protected).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_papers: usize,
    /// Number of papers labeled accepted.
    pub n_accepted: usize,
    pub conference_counts: BTreeMap<Conference, usize>,
    /// Percent of authors who are female, per conference.
    pub gender_marginals: BTreeMap<Conference, f64>,
    /// Percent of authors in the protected race group, per conference.
    pub race_marginals: BTreeMap<Conference, f64>,
    /// Percent of authors from underdeveloped countries, per conference.
    pub country_marginals: BTreeMap<Conference, f64>,
    /// Logit penalty applied per protected attribute when labeling.
    pub bias_strength: f64,
    /// Inclusive range of authors per paper.
    pub authors_per_paper: (usize, usize),
    /// Relative frequency of each career stage among authors.
    pub career_distribution: BTreeMap<CareerStage, f64>,
    /// Per-stage (mean, sd) of the author h-index draw.
    pub h_index_params: BTreeMap<CareerStage, (f64, f64)>,
    /// Logit weight on the normalized paper h-index when labeling.
    pub quality_strength: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        let conf = |iui, dis, sigchi| {
            BTreeMap::from([
                (Conference::Iui, iui),
                (Conference::Dis, dis),
                (Conference::Sigchi, sigchi),
            ])
        };
        SyntheticSpec {
            n_papers: 530,
            n_accepted: 351,
            conference_counts: BTreeMap::from([
                (Conference::Iui, 43),
                (Conference::Dis, 77),
                (Conference::Sigchi, 410),
            ]),
            gender_marginals: conf(43.75, 65.79, 41.88),
            race_marginals: conf(51.56, 35.09, 6.84),
            country_marginals: conf(39.06, 24.56, 21.94),
            bias_strength: 2.0,
            authors_per_paper: (1, 5),
            career_distribution: BTreeMap::from([
                (CareerStage::Professor, 0.15),
                (CareerStage::AssociateProfessor, 0.15),
                (CareerStage::Lecturer, 0.10),
                (CareerStage::PostDoc, 0.20),
                (CareerStage::GradStudent, 0.40),
            ]),
            h_index_params: BTreeMap::from([
                (CareerStage::Professor, (25.0, 8.0)),
                (CareerStage::AssociateProfessor, (15.0, 5.0)),
                (CareerStage::Lecturer, (8.0, 3.0)),
                (CareerStage::PostDoc, (5.0, 2.0)),
                (CareerStage::GradStudent, (2.0, 1.5)),
            ]),
            quality_strength: 4.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_papers == 0 {
            return Err(Error::Invalid("n_papers must be positive".into()));
        }
        let count_sum: usize = self.conference_counts.values().sum();
        if count_sum != self.n_papers {
            return Err(Error::Invalid(format!(
                "conference counts sum to {count_sum}, expected n_papers = {}",
                self.n_papers
            )));
        }
        if self.n_accepted > self.n_papers {
            return Err(Error::Invalid(format!(
                "n_accepted {} exceeds n_papers {}",
                self.n_accepted, self.n_papers
            )));
        }
        for (name, marginals) in [
            ("gender", &self.gender_marginals),
            ("race", &self.race_marginals),
            ("country", &self.country_marginals),
        ] {
            for conference in Conference::ALL {
                let value = marginals.get(&conference).copied().ok_or_else(|| {
                    Error::Invalid(format!("missing {name} marginal for {conference}"))
                })?;
                if !(0.0..=100.0).contains(&value) {
                    return Err(Error::Invalid(format!(
                        "{name} marginal for {conference} must be in [0, 100], got {value}"
                    )));
                }
            }
        }
        if self.bias_strength < 0.0 {
            return Err(Error::Invalid("bias_strength must be >= 0".into()));
        }
        let (lo, hi) = self.authors_per_paper;
        if lo == 0 || lo > hi {
            return Err(Error::Invalid(format!(
                "authors_per_paper range ({lo}, {hi}) is invalid"
            )));
        }
        let weight_sum: f64 = self.career_distribution.values().sum();
        if self.career_distribution.values().any(|&w| w < 0.0) || weight_sum <= 0.0 {
            return Err(Error::Invalid(
                "career_distribution weights must be non-negative with a positive sum".into(),
            ));
        }
        for stage in CareerStage::ALL {
            let (mean, sd) = self
                .h_index_params
                .get(&stage)
                .copied()
                .ok_or_else(|| Error::Invalid(format!("missing h_index_params for {stage}")))?;
            if mean < 0.0 || sd < 0.0 {
                return Err(Error::Invalid(format!(
                    "h_index_params for {stage} must be non-negative, got ({mean}, {sd})"
                )));
            }
        }
        Ok(())
    }
}

/// Build a boolean quota vector: exactly `round(pct/100 * n)` true entries,
/// shuffled.
fn quota_flags(n: usize, pct: f64, rng: &mut StdRng) -> Vec<bool> {
    let k = ((pct / 100.0) * n as f64).round() as usize;
    let k = k.min(n);
    let mut flags = vec![false; n];
    for flag in flags.iter_mut().take(k) {
        *flag = true;
    }
    flags.shuffle(rng);
    flags
}

/// Apportion `n` slots over the career stages by largest remainder, then
/// shuffle into an assignment vector.
fn quota_stages(n: usize, dist: &BTreeMap<CareerStage, f64>, rng: &mut StdRng) -> Vec<CareerStage> {
    let total: f64 = dist.values().sum();
    let mut counts: Vec<(CareerStage, usize, f64)> = CareerStage::ALL
        .iter()
        .map(|&stage| {
            let exact = dist.get(&stage).copied().unwrap_or(0.0) / total * n as f64;
            (stage, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = counts.iter().map(|c| c.1).sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        counts[b]
            .2
            .partial_cmp(&counts[a].2)
            .expect("finite remainders")
            .then(counts[a].0.cmp(&counts[b].0))
    });
    for idx in order.into_iter().cycle().take(n - assigned) {
        counts[idx].1 += 1;
    }
    let mut stages = Vec::with_capacity(n);
    for (stage, count, _) in counts {
        stages.extend(std::iter::repeat_n(stage, count));
    }
    stages.shuffle(rng);
    stages
}

fn standard_gumbel(rng: &mut StdRng) -> f64 {
    // Inverse CDF on u in (0, 1).
    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    -(-u.ln()).ln()
}

/// Generate a dataset from the spec. Byte-identical for a given
/// `(spec, seed)` pair.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = StdRng::seed_from_u64(seed);

    let mut papers: Vec<PaperRecord> = Vec::with_capacity(spec.n_papers);
    let mut author_seq = 0usize;

    for conference in Conference::ALL {
        let n_conf = spec.conference_counts[&conference];
        let author_counts: Vec<usize> = (0..n_conf)
            .map(|_| rng.random_range(spec.authors_per_paper.0..=spec.authors_per_paper.1))
            .collect();
        let n_authors: usize = author_counts.iter().sum();

        let female = quota_flags(n_authors, spec.gender_marginals[&conference], &mut rng);
        let race_protected = quota_flags(n_authors, spec.race_marginals[&conference], &mut rng);
        let country_protected =
            quota_flags(n_authors, spec.country_marginals[&conference], &mut rng);
        let stages = quota_stages(n_authors, &spec.career_distribution, &mut rng);

        let mut cursor = 0usize;
        for &count in &author_counts {
            let paper_idx = papers.len();
            let mut authors = Vec::with_capacity(count);
            for _ in 0..count {
                let stage = stages[cursor];
                let (mean, sd) = spec.h_index_params[&stage];
                // Clamped-normal h-index draw via Box-Muller.
                let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.random();
                let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                let h_index = (mean + sd * z).round().max(0.0) as u32;
                let race = if race_protected[cursor] {
                    if rng.random_bool(0.5) {
                        Race::Hispanic
                    } else {
                        Race::Black
                    }
                } else if rng.random_bool(0.5) {
                    Race::White
                } else {
                    Race::Asian
                };
                authors.push(AuthorRecord {
                    author_id: format!("a{author_seq:05}"),
                    gender: if female[cursor] {
                        Gender::Female
                    } else {
                        Gender::Male
                    },
                    race,
                    country_class: if country_protected[cursor] {
                        CountryClass::Underdeveloped
                    } else {
                        CountryClass::Developed
                    },
                    career_stage: stage,
                    h_index,
                });
                author_seq += 1;
                cursor += 1;
            }
            papers.push(PaperRecord {
                paper_id: PaperId::new(format!("{}-{paper_idx:04}", conference.code())),
                title: format!("{} study {paper_idx:04}", conference.code()),
                conference,
                label: false,
                authors,
                paper_h_index: 0.0,
            });
        }
    }

    // Latent quality: career-stage-weighted paper h-index, min-max normalized.
    let shares = career_stage_shares(&papers);
    let quality: Vec<f64> = papers
        .iter()
        .map(|p| weighted_paper_h_index(p, &shares))
        .collect();
    let q_min = quality.iter().copied().fold(f64::INFINITY, f64::min);
    let q_max = quality.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let denom = if q_max > q_min { q_max - q_min } else { 1.0 };

    let mut keys: Vec<(f64, usize)> = papers
        .iter()
        .enumerate()
        .map(|(i, paper)| {
            let h_norm = (quality[i] - q_min) / denom;
            let mut logit = spec.quality_strength * h_norm;
            if paper.in_protected_group(super::ProtectedAttr::Race) {
                logit -= spec.bias_strength;
            }
            if paper.in_protected_group(super::ProtectedAttr::Country) {
                logit -= spec.bias_strength;
            }
            (logit + standard_gumbel(&mut rng), i)
        })
        .collect();
    keys.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("finite keys")
            .then(a.1.cmp(&b.1))
    });
    for &(_, idx) in keys.iter().take(spec.n_accepted) {
        papers[idx].label = true;
    }

    Dataset::new(papers, Provenance::Synthetic, Some(seed))
}
