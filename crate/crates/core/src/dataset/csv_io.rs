//! CSV interchange for datasets.
//!
//! Two files describe one dataset:
//! - `papers.csv`: header `paper_id,title,conference,label`
//! - `authors.csv`: header `paper_id,author_id,gender,race,country_class,career_stage,h_index`
//!
//! Enum codes are accepted case-insensitively and emitted in canonical case.
//! Files are UTF-8, comma-separated, RFC-4180 quoted.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

use super::{
    AuthorRecord, CareerStage, Conference, CountryClass, Dataset, Gender, PaperId, PaperRecord,
    Provenance, Race,
};

const PAPERS_HEADER: [&str; 4] = ["paper_id", "title", "conference", "label"];
const AUTHORS_HEADER: [&str; 7] = [
    "paper_id",
    "author_id",
    "gender",
    "race",
    "country_class",
    "career_stage",
    "h_index",
];

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            // A missing input path is bad user input, not a runtime failure.
            csv::ErrorKind::Io(source) if source.kind() == std::io::ErrorKind::NotFound => {
                Error::Invalid(format!("input file not found: {}", path.display()))
            }
            csv::ErrorKind::Io(source) => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            other => Error::Malformed {
                path: path.to_path_buf(),
                line: 0,
                message: format!("{other:?}"),
            },
        })
}

fn check_header(path: &Path, reader: &mut csv::Reader<std::fs::File>, want: &[&str]) -> Result<()> {
    let headers = reader.headers().map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        line: 1,
        message: e.to_string(),
    })?;
    let got: Vec<&str> = headers.iter().collect();
    if got != want {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {}, got {}", want.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn field<'r>(
    path: &Path,
    line: u64,
    record: &'r csv::StringRecord,
    idx: usize,
    name: &str,
) -> Result<&'r str> {
    record.get(idx).ok_or_else(|| Error::Malformed {
        path: path.to_path_buf(),
        line,
        message: format!("missing column {name}"),
    })
}

fn parse_enum<T>(
    path: &Path,
    line: u64,
    column: &str,
    value: &str,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<T> {
    parse(value).ok_or_else(|| Error::UnknownCode {
        path: path.to_path_buf(),
        line,
        column: column.to_string(),
        value: value.to_string(),
    })
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Load and validate a dataset from a papers file and an authors file.
/// Every paper must have at least one author row; unknown enum codes and
/// malformed rows are reported with file and line.
pub fn load_csv(papers_path: &Path, authors_path: &Path) -> Result<Dataset> {
    // Authors first, grouped by paper id in file order.
    let mut authors_by_paper: BTreeMap<String, Vec<AuthorRecord>> = BTreeMap::new();
    let mut reader = open_reader(authors_path)?;
    check_header(authors_path, &mut reader, &AUTHORS_HEADER)?;
    for row in reader.records() {
        let record = row.map_err(|e| Error::Malformed {
            path: authors_path.to_path_buf(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record_line(&record);
        let paper_id = field(authors_path, line, &record, 0, "paper_id")?.to_string();
        let author_id = field(authors_path, line, &record, 1, "author_id")?.to_string();
        let gender = parse_enum(
            authors_path,
            line,
            "gender",
            field(authors_path, line, &record, 2, "gender")?,
            Gender::parse_code,
        )?;
        let race = parse_enum(
            authors_path,
            line,
            "race",
            field(authors_path, line, &record, 3, "race")?,
            Race::parse_code,
        )?;
        let country_class = parse_enum(
            authors_path,
            line,
            "country_class",
            field(authors_path, line, &record, 4, "country_class")?,
            CountryClass::parse_code,
        )?;
        let career_stage = parse_enum(
            authors_path,
            line,
            "career_stage",
            field(authors_path, line, &record, 5, "career_stage")?,
            CareerStage::parse_code,
        )?;
        let h_raw = field(authors_path, line, &record, 6, "h_index")?;
        let h_index: u32 = h_raw.trim().parse().map_err(|_| Error::Malformed {
            path: authors_path.to_path_buf(),
            line,
            message: format!("h_index must be a non-negative integer, got {h_raw:?}"),
        })?;
        authors_by_paper
            .entry(paper_id)
            .or_default()
            .push(AuthorRecord {
                author_id,
                gender,
                race,
                country_class,
                career_stage,
                h_index,
            });
    }

    let mut papers = Vec::new();
    let mut reader = open_reader(papers_path)?;
    check_header(papers_path, &mut reader, &PAPERS_HEADER)?;
    for row in reader.records() {
        let record = row.map_err(|e| Error::Malformed {
            path: papers_path.to_path_buf(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record_line(&record);
        let paper_id = field(papers_path, line, &record, 0, "paper_id")?.to_string();
        let title = field(papers_path, line, &record, 1, "title")?.to_string();
        let conference = parse_enum(
            papers_path,
            line,
            "conference",
            field(papers_path, line, &record, 2, "conference")?,
            Conference::parse_code,
        )?;
        let label = match field(papers_path, line, &record, 3, "label")?.trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Malformed {
                    path: papers_path.to_path_buf(),
                    line,
                    message: format!("label must be 0 or 1, got {other:?}"),
                })
            }
        };
        let authors = authors_by_paper
            .remove(&paper_id)
            .ok_or_else(|| Error::PaperWithoutAuthors(paper_id.clone()))?;
        papers.push(PaperRecord {
            paper_id: PaperId::new(paper_id),
            title,
            conference,
            label,
            authors,
            paper_h_index: 0.0,
        });
    }

    if let Some(orphan) = authors_by_paper.keys().next() {
        return Err(Error::Invalid(format!(
            "authors.csv references unknown paper id: {orphan}"
        )));
    }

    Dataset::new(papers, Provenance::Csv, None)
}

/// Write a dataset to `papers.csv` / `authors.csv` in canonical form.
/// `load_csv(write_csv(d))` reproduces the papers of `d` exactly.
pub fn write_csv(dataset: &Dataset, papers_path: &Path, authors_path: &Path) -> Result<()> {
    let io_err = |path: &Path, e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Invalid(format!("csv write: {other:?}")),
    };

    let mut writer = csv::Writer::from_path(papers_path).map_err(|e| io_err(papers_path, e))?;
    writer
        .write_record(PAPERS_HEADER)
        .map_err(|e| io_err(papers_path, e))?;
    for paper in &dataset.papers {
        writer
            .write_record([
                paper.paper_id.as_str(),
                &paper.title,
                paper.conference.code(),
                if paper.label { "1" } else { "0" },
            ])
            .map_err(|e| io_err(papers_path, e))?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: papers_path.to_path_buf(),
        source,
    })?;

    let mut writer = csv::Writer::from_path(authors_path).map_err(|e| io_err(authors_path, e))?;
    writer
        .write_record(AUTHORS_HEADER)
        .map_err(|e| io_err(authors_path, e))?;
    for paper in &dataset.papers {
        for author in &paper.authors {
            writer
                .write_record([
                    paper.paper_id.as_str(),
                    &author.author_id,
                    author.gender.code(),
                    author.race.code(),
                    author.country_class.code(),
                    author.career_stage.code(),
                    &author.h_index.to_string(),
                ])
                .map_err(|e| io_err(authors_path, e))?;
        }
    }
    writer.flush().map_err(|source| Error::Io {
        path: authors_path.to_path_buf(),
        source,
    })?;
    Ok(())
}
