//! CSV schemas for the four entity files and the samples file.
//!
//! Expected headers:
//!   companies.csv: id,name,founded_on,region,description,tags,status,status_date
//!   rounds.csv:    id,company_id,announced_on,round_type,amount_usd,investor_ids
//!   people.csv:    id,founded_company_ids
//!   news.csv:      company_id,published_on
//!
//! List fields (tags, investor_ids, founded_company_ids) are pipe-separated.
//! Dates are ISO-8601. An empty amount_usd means "undisclosed".

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use csv::StringRecord;

use crate::error::{Error, Result};

use super::{
    Company, CompanyId, EntityStore, FundingRound, InvestorId, LoadReport, NewsMention, Person,
    PersonId, RoundId, RoundType, Sample, Status,
};

/// Locations of the four entity files.
#[derive(Debug, Clone)]
pub struct EntityPaths {
    pub companies: PathBuf,
    pub rounds: PathBuf,
    pub people: PathBuf,
    pub news: PathBuf,
}

impl EntityPaths {
    /// The conventional layout: `<dir>/{companies,rounds,people,news}.csv`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        EntityPaths {
            companies: dir.join("companies.csv"),
            rounds: dir.join("rounds.csv"),
            people: dir.join("people.csv"),
            news: dir.join("news.csv"),
        }
    }
}

/// Header-resolved column accessor that reports file/line/column on failure.
struct Columns<'a> {
    file: &'a str,
    indices: Vec<usize>,
    names: &'static [&'static str],
}

impl<'a> Columns<'a> {
    fn resolve(file: &'a str, headers: &StringRecord, names: &'static [&'static str]) -> Result<Self> {
        let mut indices = Vec::with_capacity(names.len());
        for &name in names {
            match headers.iter().position(|h| h == name) {
                Some(i) => indices.push(i),
                None => {
                    return Err(Error::MissingColumn {
                        file: file.to_string(),
                        column: name.to_string(),
                    })
                }
            }
        }
        Ok(Columns {
            file,
            indices,
            names,
        })
    }

    fn line(record: &StringRecord) -> u64 {
        record.position().map(|p| p.line()).unwrap_or(0)
    }

    fn get<'r>(&self, record: &'r StringRecord, col: usize) -> Result<&'r str> {
        record.get(self.indices[col]).ok_or_else(|| Error::MalformedRow {
            file: self.file.to_string(),
            line: Self::line(record),
            column: self.names[col].to_string(),
            message: "missing field".to_string(),
        })
    }

    fn err(&self, record: &StringRecord, col: usize, message: impl Into<String>) -> Error {
        Error::MalformedRow {
            file: self.file.to_string(),
            line: Self::line(record),
            column: self.names[col].to_string(),
            message: message.into(),
        }
    }

    fn date(&self, record: &StringRecord, col: usize) -> Result<NaiveDate> {
        let raw = self.get(record, col)?;
        raw.parse::<NaiveDate>()
            .map_err(|e| self.err(record, col, format!("invalid date '{raw}': {e}")))
    }

    fn opt_date(&self, record: &StringRecord, col: usize) -> Result<Option<NaiveDate>> {
        let raw = self.get(record, col)?;
        if raw.is_empty() {
            return Ok(None);
        }
        raw.parse::<NaiveDate>()
            .map(Some)
            .map_err(|e| self.err(record, col, format!("invalid date '{raw}': {e}")))
    }

    fn list(&self, record: &StringRecord, col: usize) -> Result<Vec<String>> {
        let raw = self.get(record, col)?;
        Ok(raw
            .split('|')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect())
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path.display().to_string(), std::io::Error::other(e)),
            _ => Error::Csv(e),
        })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

const COMPANY_COLS: &[&str] = &[
    "id",
    "name",
    "founded_on",
    "region",
    "description",
    "tags",
    "status",
    "status_date",
];

fn load_companies(path: &Path) -> Result<Vec<Company>> {
    let file = file_name(path);
    let mut reader = open_reader(path)?;
    let cols = Columns::resolve(&file, reader.headers()?, COMPANY_COLS)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record?;
        let id = cols.get(&record, 0)?.to_string();
        if id.is_empty() {
            return Err(cols.err(&record, 0, "empty id"));
        }
        if !seen.insert(id.clone()) {
            return Err(cols.err(&record, 0, format!("duplicate company id '{id}'")));
        }
        let status_raw = cols.get(&record, 6)?;
        let status = Status::parse(status_raw)
            .ok_or_else(|| cols.err(&record, 6, format!("unknown status '{status_raw}'")))?;
        let status_date = cols.opt_date(&record, 7)?;
        match (status, status_date) {
            (Status::Operating, Some(_)) => {
                return Err(cols.err(&record, 7, "status_date set for an operating company"))
            }
            (s, None) if s != Status::Operating => {
                return Err(cols.err(&record, 7, "status_date required when status is not operating"))
            }
            _ => {}
        }
        out.push(Company {
            id: CompanyId::new(id),
            name: cols.get(&record, 1)?.to_string(),
            founded_on: cols.date(&record, 2)?,
            region: cols.get(&record, 3)?.to_string(),
            description: cols.get(&record, 4)?.to_string(),
            tags: cols.list(&record, 5)?,
            status,
            status_date,
        });
    }
    Ok(out)
}

const ROUND_COLS: &[&str] = &[
    "id",
    "company_id",
    "announced_on",
    "round_type",
    "amount_usd",
    "investor_ids",
];

fn load_rounds(path: &Path) -> Result<Vec<FundingRound>> {
    let file = file_name(path);
    let mut reader = open_reader(path)?;
    let cols = Columns::resolve(&file, reader.headers()?, ROUND_COLS)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record?;
        let id = cols.get(&record, 0)?.to_string();
        if !seen.insert(id.clone()) {
            return Err(cols.err(&record, 0, format!("duplicate round id '{id}'")));
        }
        let type_raw = cols.get(&record, 3)?;
        let round_type = RoundType::parse(type_raw)
            .ok_or_else(|| cols.err(&record, 3, format!("unknown round_type '{type_raw}'")))?;
        let amount_raw = cols.get(&record, 4)?;
        let amount_usd = if amount_raw.is_empty() {
            None
        } else {
            let value: f64 = amount_raw
                .parse()
                .map_err(|e| cols.err(&record, 4, format!("invalid amount '{amount_raw}': {e}")))?;
            if !value.is_finite() || value < 0.0 {
                return Err(cols.err(&record, 4, format!("amount must be non-negative, got {value}")));
            }
            Some(value)
        };
        out.push(FundingRound {
            id: RoundId::new(id),
            company_id: CompanyId::new(cols.get(&record, 1)?),
            announced_on: cols.date(&record, 2)?,
            round_type,
            amount_usd,
            investor_ids: cols
                .list(&record, 5)?
                .into_iter()
                .map(InvestorId::new)
                .collect(),
        });
    }
    Ok(out)
}

const PEOPLE_COLS: &[&str] = &["id", "founded_company_ids"];

fn load_people(path: &Path) -> Result<Vec<Person>> {
    let file = file_name(path);
    let mut reader = open_reader(path)?;
    let cols = Columns::resolve(&file, reader.headers()?, PEOPLE_COLS)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        out.push(Person {
            id: PersonId::new(cols.get(&record, 0)?),
            founded_company_ids: cols
                .list(&record, 1)?
                .into_iter()
                .map(CompanyId::new)
                .collect(),
        });
    }
    Ok(out)
}

const NEWS_COLS: &[&str] = &["company_id", "published_on"];

fn load_news(path: &Path) -> Result<Vec<NewsMention>> {
    let file = file_name(path);
    let mut reader = open_reader(path)?;
    let cols = Columns::resolve(&file, reader.headers()?, NEWS_COLS)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        out.push(NewsMention {
            company_id: CompanyId::new(cols.get(&record, 0)?),
            published_on: cols.date(&record, 1)?,
        });
    }
    Ok(out)
}

/// Parse the four entity files and build the store.
///
/// Malformed rows abort with file/line/column; dangling foreign keys drop
/// the row with a warning counted in the [`LoadReport`].
pub fn load_entities(paths: &EntityPaths) -> Result<(EntityStore, LoadReport)> {
    let companies = load_companies(&paths.companies)?;
    let rounds = load_rounds(&paths.rounds)?;
    let people = load_people(&paths.people)?;
    let news = load_news(&paths.news)?;
    Ok(EntityStore::from_parts(companies, rounds, people, news))
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))
}

fn join_list<T: AsRef<str>>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|s| s.as_ref().to_string())
        .collect::<Vec<_>>()
        .join("|")
}

fn fmt_amount(value: f64) -> String {
    if value.fract() == 0.0 && value.abs() < 9.0e15 {
        format!("{}", value as i64)
    } else {
        format!("{value}")
    }
}

pub fn write_companies_csv(path: &Path, companies: &[Company]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(COMPANY_COLS)?;
    for c in companies {
        w.write_record([
            c.id.as_str(),
            &c.name,
            &c.founded_on.to_string(),
            &c.region,
            &c.description,
            &join_list(&c.tags),
            c.status.as_str(),
            &c.status_date.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn write_rounds_csv(path: &Path, rounds: &[FundingRound]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(ROUND_COLS)?;
    for r in rounds {
        w.write_record([
            r.id.as_str(),
            r.company_id.as_str(),
            &r.announced_on.to_string(),
            r.round_type.as_str(),
            &r.amount_usd.map(fmt_amount).unwrap_or_default(),
            &join_list(r.investor_ids.iter().map(|i| i.as_str())),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn write_people_csv(path: &Path, people: &[Person]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(PEOPLE_COLS)?;
    for p in people {
        w.write_record([
            p.id.as_str(),
            &join_list(p.founded_company_ids.iter().map(|c| c.as_str())),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn write_news_csv(path: &Path, news: &[NewsMention]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(NEWS_COLS)?;
    for n in news {
        w.write_record([n.company_id.as_str(), &n.published_on.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

const SAMPLE_COLS: &[&str] = &["company_id", "as_of", "cohort", "label", "horizon_years"];

pub fn write_samples(path: &Path, samples: &[Sample]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SAMPLE_COLS)?;
    for s in samples {
        w.write_record([
            s.company_id.as_str(),
            &s.as_of.to_string(),
            s.cohort.as_str(),
            if s.label { "true" } else { "false" },
            &s.horizon_years.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn read_samples(path: &Path) -> Result<Vec<Sample>> {
    let file = file_name(path);
    let mut reader = open_reader(path)?;
    let cols = Columns::resolve(&file, reader.headers()?, SAMPLE_COLS)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let cohort_raw = cols.get(&record, 2)?;
        let cohort = super::Cohort::parse(cohort_raw)
            .ok_or_else(|| cols.err(&record, 2, format!("unknown cohort '{cohort_raw}'")))?;
        let label_raw = cols.get(&record, 3)?;
        let label = match label_raw {
            "true" => true,
            "false" => false,
            _ => return Err(cols.err(&record, 3, format!("invalid label '{label_raw}'"))),
        };
        let horizon_raw = cols.get(&record, 4)?;
        let horizon_years: u32 = horizon_raw
            .parse()
            .map_err(|e| cols.err(&record, 4, format!("invalid horizon '{horizon_raw}': {e}")))?;
        out.push(Sample {
            company_id: CompanyId::new(cols.get(&record, 0)?),
            as_of: cols.date(&record, 1)?,
            cohort,
            label,
            horizon_years,
        });
    }
    Ok(out)
}
