//! Flat `key = value` configuration files.
//!
//! One key per line, `#` comments, blank lines ignored. Unknown and
//! duplicate keys are errors, as are missing required keys, so a config
//! typo never silently falls back to a default.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fairsel_core::dataset::{CareerStage, Conference, SyntheticSpec};
use fairsel_core::losses::{FairnessConfig, FairnessMode};
use fairsel_core::trainer::{DegeneratePolicy, TrainConfig};
use fairsel_core::{Error, Result};

/// Parsed key/value document with duplicate detection.
#[derive(Debug, Clone, Default)]
pub struct KvDoc {
    entries: BTreeMap<String, String>,
}

impl KvDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Invalid(format!(
                    "config line {}: expected `key = value`, got {raw:?}",
                    idx + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if entries.insert(key.clone(), value).is_some() {
                return Err(Error::Invalid(format!(
                    "config line {}: duplicate key {key}",
                    idx + 1
                )));
            }
        }
        Ok(KvDoc { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                Error::Invalid(format!("config file not found: {}", path.display()))
            } else {
                Error::Io {
                    path: path.to_path_buf(),
                    source,
                }
            }
        })?;
        Self::parse(&text)
    }

    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        let known: BTreeSet<&str> = known.iter().copied().collect();
        for key in self.entries.keys() {
            if !known.contains(key.as_str()) {
                return Err(Error::Invalid(format!("unknown config key: {key}")));
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn required(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Invalid(format!("missing config key: {key}")))
    }

    fn parse_value<T: FromStr>(&self, key: &str, raw: &str) -> Result<T> {
        raw.parse()
            .map_err(|_| Error::Invalid(format!("config key {key}: cannot parse value {raw:?}")))
    }

    pub fn typed<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            Some(raw) => self.parse_value(key, raw),
            None => Ok(default),
        }
    }

    /// Canonical `key = value` lines, sorted; hashed into the manifest.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.entries {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(value);
            out.push('\n');
        }
        out
    }
}

/// The data a command operates on.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv { papers: PathBuf, authors: PathBuf },
    Synthetic(Box<SyntheticSpec>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub seed: u64,
    pub n_runs: usize,
    pub n_select: usize,
    pub split_ratio: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub mode: FairnessMode,
    pub lambda: f64,
    pub w_race: f64,
    pub w_country: f64,
    pub lambda_grid: Vec<f64>,
    pub weight_grid: Vec<(f64, f64)>,
    pub out_dir: PathBuf,
    /// Canonical config text, hashed into manifests.
    pub canonical: String,
}

const EXPERIMENT_KEYS: &[&str] = &[
    "data",
    "papers_csv",
    "authors_csv",
    "synth_spec",
    "seed",
    "n_runs",
    "n_select",
    "split_ratio",
    "epochs",
    "batch_size",
    "learning_rate",
    "patience",
    "hidden1",
    "hidden2",
    "mode",
    "lambda",
    "w_race",
    "w_country",
    "lambda_grid",
    "weight_grid",
    "out",
];

fn parse_mode(raw: &str) -> Result<FairnessMode> {
    match raw {
        "race_only" => Ok(FairnessMode::RaceOnly),
        "country_only" => Ok(FairnessMode::CountryOnly),
        "combined" => Ok(FairnessMode::Combined),
        other => Err(Error::Invalid(format!(
            "config key mode: expected race_only, country_only or combined, got {other:?}"
        ))),
    }
}

fn parse_f64_list(key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|item| {
            item.trim()
                .parse::<f64>()
                .map_err(|_| Error::Invalid(format!("config key {key}: bad number {item:?}")))
        })
        .collect()
}

fn parse_weight_grid(raw: &str) -> Result<Vec<(f64, f64)>> {
    raw.split(',')
        .map(|pair| {
            let mut it = pair.trim().split(':');
            let parse = |s: Option<&str>| {
                s.and_then(|v| v.trim().parse::<f64>().ok()).ok_or_else(|| {
                    Error::Invalid(format!(
                        "config key weight_grid: expected w_race:w_country pairs, got {pair:?}"
                    ))
                })
            };
            let w_r = parse(it.next())?;
            let w_c = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::Invalid(format!(
                    "config key weight_grid: expected w_race:w_country pairs, got {pair:?}"
                )));
            }
            Ok((w_r, w_c))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_doc(doc: &KvDoc, base_dir: &Path) -> Result<Self> {
        doc.reject_unknown(EXPERIMENT_KEYS)?;

        let resolve = |raw: &str| -> PathBuf {
            let path = PathBuf::from(raw);
            if path.is_absolute() {
                path
            } else {
                base_dir.join(path)
            }
        };

        let source = match doc.typed::<String>("data", "synthetic".into())?.as_str() {
            "synthetic" => {
                let spec = match doc.get("synth_spec") {
                    Some(raw) => parse_synth_spec(&KvDoc::load(&resolve(raw))?)?,
                    None => SyntheticSpec::default(),
                };
                DataSource::Synthetic(Box::new(spec))
            }
            "csv" => DataSource::Csv {
                papers: resolve(doc.required("papers_csv")?),
                authors: resolve(doc.required("authors_csv")?),
            },
            other => {
                return Err(Error::Invalid(format!(
                    "config key data: expected synthetic or csv, got {other:?}"
                )))
            }
        };

        let lambda_grid = match doc.get("lambda_grid") {
            Some(raw) => parse_f64_list("lambda_grid", raw)?,
            None => vec![1.0, 2.0, 2.5, 3.0, 5.0, 10.0],
        };
        let weight_grid = match doc.get("weight_grid") {
            Some(raw) => parse_weight_grid(raw)?,
            // Base weights plus the two scaled variants.
            None => vec![(0.32, 0.68), (0.32, 1.36), (0.64, 0.68)],
        };
        if lambda_grid.is_empty() || weight_grid.is_empty() {
            return Err(Error::Invalid("grids must be non-empty".into()));
        }

        let config = ExperimentConfig {
            source,
            seed: doc.typed("seed", 42u64)?,
            n_runs: doc.typed("n_runs", 5usize)?,
            n_select: doc.typed("n_select", 351usize)?,
            split_ratio: doc.typed("split_ratio", 0.8f64)?,
            epochs: doc.typed("epochs", 50usize)?,
            batch_size: doc.typed("batch_size", 32usize)?,
            learning_rate: doc.typed("learning_rate", 0.001f64)?,
            patience: doc.typed("patience", 10usize)?,
            hidden1: doc.typed("hidden1", 64usize)?,
            hidden2: doc.typed("hidden2", 32usize)?,
            mode: parse_mode(&doc.typed::<String>("mode", "combined".into())?)?,
            lambda: doc.typed("lambda", 3.0f64)?,
            w_race: doc.typed("w_race", 0.32f64)?,
            w_country: doc.typed("w_country", 0.68f64)?,
            lambda_grid,
            weight_grid,
            out_dir: resolve(&doc.typed::<String>("out", "runs".into())?),
            canonical: doc.canonical_text(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::Invalid("n_runs must be positive".into()));
        }
        if self.n_select == 0 {
            return Err(Error::Invalid("n_select must be positive".into()));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Invalid(format!(
                "split_ratio must be in (0, 1), got {}",
                self.split_ratio
            )));
        }
        self.fairness(self.mode, self.lambda, self.w_race, self.w_country)
            .validate()?;
        Ok(())
    }

    pub fn fairness(
        &self,
        mode: FairnessMode,
        lambda: f64,
        w_race: f64,
        w_country: f64,
    ) -> FairnessConfig {
        FairnessConfig {
            lambda,
            w_race,
            w_country,
            mode,
        }
    }

    pub fn train_config(&self, fairness: FairnessConfig) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            patience: self.patience,
            fairness,
            seed: self.seed,
            degenerate_batch_policy: DegeneratePolicy::SkipFairnessTerm,
            hidden1: self.hidden1,
            hidden2: self.hidden2,
        }
    }
}

const SYNTH_KEYS: &[&str] = &[
    "n_papers",
    "n_accepted",
    "conference_counts",
    "gender_marginals",
    "race_marginals",
    "country_marginals",
    "bias_strength",
    "authors_per_paper",
    "career_distribution",
    "h_index_params",
    "quality_strength",
];

fn parse_conference_map(key: &str, raw: &str) -> Result<BTreeMap<Conference, f64>> {
    let mut map = BTreeMap::new();
    for item in raw.split(',') {
        let Some((name, value)) = item.trim().split_once(':') else {
            return Err(Error::Invalid(format!(
                "config key {key}: expected CONF:value entries, got {item:?}"
            )));
        };
        let conference = Conference::parse_code(name.trim()).ok_or_else(|| {
            Error::Invalid(format!("config key {key}: unknown conference {name:?}"))
        })?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("config key {key}: bad number {value:?}")))?;
        map.insert(conference, value);
    }
    Ok(map)
}

/// Parse a synthetic-spec document; omitted keys keep their defaults.
pub fn parse_synth_spec(doc: &KvDoc) -> Result<SyntheticSpec> {
    doc.reject_unknown(SYNTH_KEYS)?;
    let mut spec = SyntheticSpec::default();
    spec.n_papers = doc.typed("n_papers", spec.n_papers)?;
    spec.n_accepted = doc.typed("n_accepted", spec.n_accepted)?;
    if let Some(raw) = doc.get("conference_counts") {
        spec.conference_counts = parse_conference_map("conference_counts", raw)?
            .into_iter()
            .map(|(c, v)| (c, v as usize))
            .collect();
    }
    for (key, field) in [
        ("gender_marginals", &mut spec.gender_marginals),
        ("race_marginals", &mut spec.race_marginals),
        ("country_marginals", &mut spec.country_marginals),
    ] {
        if let Some(raw) = doc.get(key) {
            *field = parse_conference_map(key, raw)?;
        }
    }
    spec.bias_strength = doc.typed("bias_strength", spec.bias_strength)?;
    if let Some(raw) = doc.get("authors_per_paper") {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 2 {
            return Err(Error::Invalid(format!(
                "config key authors_per_paper: expected min:max, got {raw:?}"
            )));
        }
        let lo = parts[0].trim().parse().map_err(|_| {
            Error::Invalid(format!("config key authors_per_paper: bad number {raw:?}"))
        })?;
        let hi = parts[1].trim().parse().map_err(|_| {
            Error::Invalid(format!("config key authors_per_paper: bad number {raw:?}"))
        })?;
        spec.authors_per_paper = (lo, hi);
    }
    if let Some(raw) = doc.get("career_distribution") {
        spec.career_distribution = parse_stage_map("career_distribution", raw)?;
    }
    if let Some(raw) = doc.get("h_index_params") {
        let mut map = BTreeMap::new();
        for item in raw.split(',') {
            let parts: Vec<&str> = item.trim().split(':').collect();
            if parts.len() != 3 {
                return Err(Error::Invalid(format!(
                    "config key h_index_params: expected STAGE:mean:sd entries, got {item:?}"
                )));
            }
            let stage = CareerStage::parse_code(parts[0].trim()).ok_or_else(|| {
                Error::Invalid(format!(
                    "config key h_index_params: unknown career stage {:?}",
                    parts[0]
                ))
            })?;
            let mean: f64 = parts[1].trim().parse().map_err(|_| {
                Error::Invalid(format!("config key h_index_params: bad number {item:?}"))
            })?;
            let sd: f64 = parts[2].trim().parse().map_err(|_| {
                Error::Invalid(format!("config key h_index_params: bad number {item:?}"))
            })?;
            map.insert(stage, (mean, sd));
        }
        spec.h_index_params = map;
    }
    spec.quality_strength = doc.typed("quality_strength", spec.quality_strength)?;
    spec.validate()?;
    Ok(spec)
}

fn parse_stage_map(key: &str, raw: &str) -> Result<BTreeMap<CareerStage, f64>> {
    let mut map = BTreeMap::new();
    for item in raw.split(',') {
        let Some((name, value)) = item.trim().split_once(':') else {
            return Err(Error::Invalid(format!(
                "config key {key}: expected STAGE:value entries, got {item:?}"
            )));
        };
        let stage = CareerStage::parse_code(name.trim()).ok_or_else(|| {
            Error::Invalid(format!("config key {key}: unknown career stage {name:?}"))
        })?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("config key {key}: bad number {value:?}")))?;
        map.insert(stage, value);
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_defaults_from_empty_doc() {
        let doc = KvDoc::parse("").unwrap();
        let config = ExperimentConfig::from_doc(&doc, Path::new(".")).unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.n_runs, 5);
        assert_eq!(config.n_select, 351);
        assert_eq!(config.lambda_grid, vec![1.0, 2.0, 2.5, 3.0, 5.0, 10.0]);
        assert_eq!(
            config.weight_grid,
            vec![(0.32, 0.68), (0.32, 1.36), (0.64, 0.68)]
        );
        assert!(matches!(config.source, DataSource::Synthetic(_)));
    }

    #[test]
    fn unknown_key_is_an_error_naming_the_key() {
        let doc = KvDoc::parse("epohcs = 50\n").unwrap();
        let err = ExperimentConfig::from_doc(&doc, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("epohcs"), "{err}");
    }

    #[test]
    fn missing_required_key_is_an_error_naming_the_key() {
        let doc = KvDoc::parse("data = csv\npapers_csv = p.csv\n").unwrap();
        let err = ExperimentConfig::from_doc(&doc, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("authors_csv"), "{err}");
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = KvDoc::parse("seed = 1\nseed = 2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn parses_grids_and_mode() {
        let doc = KvDoc::parse(
            "mode = race_only\nlambda_grid = 1, 3\nweight_grid = 0.5:0.5, 1:2\nseed = 7\n",
        )
        .unwrap();
        let config = ExperimentConfig::from_doc(&doc, Path::new(".")).unwrap();
        assert_eq!(config.mode, FairnessMode::RaceOnly);
        assert_eq!(config.lambda_grid, vec![1.0, 3.0]);
        assert_eq!(config.weight_grid, vec![(0.5, 0.5), (1.0, 2.0)]);
    }

    #[test]
    fn synth_spec_overrides_and_validation() {
        let doc = KvDoc::parse(
            "n_papers = 100\nn_accepted = 60\nconference_counts = IUI:20,DIS:30,SIGCHI:50\nbias_strength = 1.5\n",
        )
        .unwrap();
        let spec = parse_synth_spec(&doc).unwrap();
        assert_eq!(spec.n_papers, 100);
        assert_eq!(spec.bias_strength, 1.5);

        let bad = KvDoc::parse("race_marginals = IUI:150,DIS:35,SIGCHI:7\n").unwrap();
        assert!(parse_synth_spec(&bad).is_err());
    }

    #[test]
    fn canonical_text_is_sorted_and_stable() {
        let doc = KvDoc::parse("seed = 1\nepochs = 9\n").unwrap();
        assert_eq!(doc.canonical_text(), "epochs = 9\nseed = 1\n");
    }
}
