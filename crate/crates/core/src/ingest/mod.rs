//! Entity model, time-indexed store, and sample construction.
//!
//! Entities follow a Crunchbase-like schema: companies, funding rounds,
//! people (founders), and news mentions. The [`EntityStore`] is immutable
//! after construction and safe for concurrent readers; all downstream
//! feature computations are pure functions of it.

mod csv_io;

pub use csv_io::{
    load_entities, read_samples, write_companies_csv, write_news_csv, write_people_csv,
    write_rounds_csv, write_samples, EntityPaths,
};

use std::collections::HashMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dates::{prev_semester_end, semester_ends, shift_years};

macro_rules! id_type {
    ($name:ident) => {
        #[derive(
            Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
    };
}

id_type!(CompanyId);
id_type!(RoundId);
id_type!(InvestorId);
id_type!(PersonId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Operating,
    Acquired,
    Ipo,
    Closed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Operating => "operating",
            Status::Acquired => "acquired",
            Status::Ipo => "ipo",
            Status::Closed => "closed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "operating" => Some(Status::Operating),
            "acquired" => Some(Status::Acquired),
            "ipo" => Some(Status::Ipo),
            "closed" => Some(Status::Closed),
            _ => None,
        }
    }

    /// Acquired or public: the company has exited.
    pub fn is_exit(self) -> bool {
        matches!(self, Status::Acquired | Status::Ipo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundType {
    Seed,
    SeriesA,
    SeriesB,
    SeriesC,
    SeriesD,
    Other,
}

impl RoundType {
    pub fn as_str(self) -> &'static str {
        match self {
            RoundType::Seed => "seed",
            RoundType::SeriesA => "series_a",
            RoundType::SeriesB => "series_b",
            RoundType::SeriesC => "series_c",
            RoundType::SeriesD => "series_d",
            RoundType::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "seed" => Some(RoundType::Seed),
            "series_a" => Some(RoundType::SeriesA),
            "series_b" => Some(RoundType::SeriesB),
            "series_c" => Some(RoundType::SeriesC),
            "series_d" => Some(RoundType::SeriesD),
            "other" => Some(RoundType::Other),
            _ => None,
        }
    }

    pub const ALL: [RoundType; 6] = [
        RoundType::Seed,
        RoundType::SeriesA,
        RoundType::SeriesB,
        RoundType::SeriesC,
        RoundType::SeriesD,
        RoundType::Other,
    ];
}

/// Which snapshot round qualifies a company for a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cohort {
    /// Any venture or seed round raised in the semester.
    All,
    Seed,
    SeriesA,
    SeriesB,
}

impl Cohort {
    pub fn as_str(self) -> &'static str {
        match self {
            Cohort::All => "all",
            Cohort::Seed => "seed",
            Cohort::SeriesA => "series_a",
            Cohort::SeriesB => "series_b",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all" => Some(Cohort::All),
            "seed" => Some(Cohort::Seed),
            "series_a" => Some(Cohort::SeriesA),
            "series_b" => Some(Cohort::SeriesB),
            _ => None,
        }
    }

    fn qualifies(self, round_type: RoundType) -> bool {
        match self {
            Cohort::All => true,
            Cohort::Seed => round_type == RoundType::Seed,
            Cohort::SeriesA => round_type == RoundType::SeriesA,
            Cohort::SeriesB => round_type == RoundType::SeriesB,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Company {
    pub id: CompanyId,
    pub name: String,
    pub founded_on: NaiveDate,
    pub region: String,
    pub description: String,
    pub tags: Vec<String>,
    pub status: Status,
    /// Present iff status != operating.
    pub status_date: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundingRound {
    pub id: RoundId,
    pub company_id: CompanyId,
    pub announced_on: NaiveDate,
    pub round_type: RoundType,
    /// `None` encodes "undisclosed".
    pub amount_usd: Option<f64>,
    pub investor_ids: Vec<InvestorId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Person {
    pub id: PersonId,
    /// Ordered by founding date of the referenced companies.
    pub founded_company_ids: Vec<CompanyId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewsMention {
    pub company_id: CompanyId,
    pub published_on: NaiveDate,
}

/// One (company, semester) unit of the prediction task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub company_id: CompanyId,
    /// Semester end.
    pub as_of: NaiveDate,
    pub cohort: Cohort,
    /// True iff a round, acquisition, or IPO occurs in `(as_of, as_of + horizon]`.
    pub label: bool,
    pub horizon_years: u32,
}

/// Counts reported by [`load_entities`] / [`EntityStore::from_parts`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub companies: usize,
    pub rounds: usize,
    pub people: usize,
    pub news: usize,
    pub dropped_rounds: usize,
    pub dropped_people: usize,
    pub dropped_news: usize,
}

impl LoadReport {
    pub fn warnings(&self) -> usize {
        self.dropped_rounds + self.dropped_people + self.dropped_news
    }
}

/// Per-round-type prefix medians of disclosed amounts, keyed by date.
///
/// `prefix_median[i]` is the median of the first `i + 1` disclosed amounts in
/// announcement-date order, so imputation at date `d` never sees amounts
/// disclosed after `d`.
#[derive(Debug, Clone, Default)]
struct MedianTrack {
    dates: Vec<NaiveDate>,
    prefix_median: Vec<f64>,
}

impl MedianTrack {
    fn build(mut pairs: Vec<(NaiveDate, f64)>) -> Self {
        pairs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut sorted: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut dates = Vec::with_capacity(pairs.len());
        let mut prefix_median = Vec::with_capacity(pairs.len());
        for (date, amount) in pairs {
            let pos = sorted.partition_point(|&x| x < amount);
            sorted.insert(pos, amount);
            let n = sorted.len();
            let median = if n % 2 == 1 {
                sorted[n / 2]
            } else {
                0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
            };
            dates.push(date);
            prefix_median.push(median);
        }
        MedianTrack {
            dates,
            prefix_median,
        }
    }

    /// Median of amounts disclosed on or before `date`, if any.
    fn median_at(&self, date: NaiveDate) -> Option<f64> {
        let len = self.dates.partition_point(|&d| d <= date);
        if len == 0 {
            None
        } else {
            Some(self.prefix_median[len - 1])
        }
    }
}

/// Immutable, fully indexed view of the four entity collections.
#[derive(Debug)]
pub struct EntityStore {
    companies: Vec<Company>,
    rounds: Vec<FundingRound>,
    people: Vec<Person>,
    news: Vec<NewsMention>,

    company_index: HashMap<CompanyId, usize>,
    /// Per company: round indices sorted by (announced_on, round id).
    rounds_by_company: HashMap<CompanyId, Vec<usize>>,
    /// Per company: sorted publication dates.
    news_by_company: HashMap<CompanyId, Vec<NaiveDate>>,
    /// Per company: person indices of its founders.
    founders_by_company: HashMap<CompanyId, Vec<usize>>,
    /// Per region: sorted founding dates.
    region_founded: HashMap<String, Vec<NaiveDate>>,
    medians_by_type: HashMap<RoundType, MedianTrack>,
    median_global: MedianTrack,
}

impl EntityStore {
    /// Validate cross-references, drop inconsistent rows, and build indexes.
    ///
    /// Rows with dangling foreign keys are dropped with a warning, as are
    /// rounds announced before their company's founding date. People's
    /// `founded_company_ids` are normalized to founding-date order.
    pub fn from_parts(
        companies: Vec<Company>,
        rounds: Vec<FundingRound>,
        people: Vec<Person>,
        news: Vec<NewsMention>,
    ) -> (EntityStore, LoadReport) {
        let company_index: HashMap<CompanyId, usize> = companies
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), i))
            .collect();

        let mut report = LoadReport::default();

        let mut kept_rounds = Vec::with_capacity(rounds.len());
        for round in rounds {
            match company_index.get(&round.company_id) {
                None => {
                    log::warn!(
                        "round {} references unknown company {}; dropped",
                        round.id,
                        round.company_id
                    );
                    report.dropped_rounds += 1;
                }
                Some(&ci) if round.announced_on < companies[ci].founded_on => {
                    log::warn!(
                        "round {} announced before company {} was founded; dropped",
                        round.id,
                        round.company_id
                    );
                    report.dropped_rounds += 1;
                }
                Some(_) => kept_rounds.push(round),
            }
        }

        let mut kept_people = Vec::with_capacity(people.len());
        for mut person in people {
            if person
                .founded_company_ids
                .iter()
                .all(|c| company_index.contains_key(c))
            {
                person.founded_company_ids.sort_by(|a, b| {
                    let fa = companies[company_index[a]].founded_on;
                    let fb = companies[company_index[b]].founded_on;
                    fa.cmp(&fb).then_with(|| a.cmp(b))
                });
                kept_people.push(person);
            } else {
                log::warn!("person {} references an unknown company; dropped", person.id);
                report.dropped_people += 1;
            }
        }

        let mut kept_news = Vec::with_capacity(news.len());
        for mention in news {
            if company_index.contains_key(&mention.company_id) {
                kept_news.push(mention);
            } else {
                log::warn!(
                    "news mention references unknown company {}; dropped",
                    mention.company_id
                );
                report.dropped_news += 1;
            }
        }

        let mut rounds_by_company: HashMap<CompanyId, Vec<usize>> = HashMap::new();
        for (i, r) in kept_rounds.iter().enumerate() {
            rounds_by_company
                .entry(r.company_id.clone())
                .or_default()
                .push(i);
        }
        for indices in rounds_by_company.values_mut() {
            indices.sort_by(|&a, &b| {
                let ra = &kept_rounds[a];
                let rb = &kept_rounds[b];
                ra.announced_on
                    .cmp(&rb.announced_on)
                    .then_with(|| ra.id.cmp(&rb.id))
            });
        }

        let mut news_by_company: HashMap<CompanyId, Vec<NaiveDate>> = HashMap::new();
        for mention in &kept_news {
            news_by_company
                .entry(mention.company_id.clone())
                .or_default()
                .push(mention.published_on);
        }
        for dates in news_by_company.values_mut() {
            dates.sort();
        }

        let mut founders_by_company: HashMap<CompanyId, Vec<usize>> = HashMap::new();
        for (i, person) in kept_people.iter().enumerate() {
            for company in &person.founded_company_ids {
                founders_by_company
                    .entry(company.clone())
                    .or_default()
                    .push(i);
            }
        }

        let mut region_founded: HashMap<String, Vec<NaiveDate>> = HashMap::new();
        for company in &companies {
            region_founded
                .entry(company.region.clone())
                .or_default()
                .push(company.founded_on);
        }
        for dates in region_founded.values_mut() {
            dates.sort();
        }

        let mut medians_by_type: HashMap<RoundType, MedianTrack> = HashMap::new();
        for round_type in RoundType::ALL {
            let pairs: Vec<(NaiveDate, f64)> = kept_rounds
                .iter()
                .filter(|r| r.round_type == round_type)
                .filter_map(|r| r.amount_usd.map(|a| (r.announced_on, a)))
                .collect();
            medians_by_type.insert(round_type, MedianTrack::build(pairs));
        }
        let median_global = MedianTrack::build(
            kept_rounds
                .iter()
                .filter_map(|r| r.amount_usd.map(|a| (r.announced_on, a)))
                .collect(),
        );

        report.companies = companies.len();
        report.rounds = kept_rounds.len();
        report.people = kept_people.len();
        report.news = kept_news.len();

        let store = EntityStore {
            companies,
            rounds: kept_rounds,
            people: kept_people,
            news: kept_news,
            company_index,
            rounds_by_company,
            news_by_company,
            founders_by_company,
            region_founded,
            medians_by_type,
            median_global,
        };
        (store, report)
    }

    pub fn companies(&self) -> &[Company] {
        &self.companies
    }

    pub fn rounds(&self) -> &[FundingRound] {
        &self.rounds
    }

    pub fn people(&self) -> &[Person] {
        &self.people
    }

    pub fn news(&self) -> &[NewsMention] {
        &self.news
    }

    pub fn company(&self, id: &CompanyId) -> Option<&Company> {
        self.company_index.get(id).map(|&i| &self.companies[i])
    }

    pub fn round(&self, index: usize) -> &FundingRound {
        &self.rounds[index]
    }

    /// Round indices of `company`, sorted by (announced_on, round id).
    pub fn rounds_of(&self, company: &CompanyId) -> &[usize] {
        self.rounds_by_company
            .get(company)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Rounds of `company` announced on or before `as_of`.
    pub fn rounds_of_until(&self, company: &CompanyId, as_of: NaiveDate) -> &[usize] {
        let indices = self.rounds_of(company);
        let len = indices.partition_point(|&i| self.rounds[i].announced_on <= as_of);
        &indices[..len]
    }

    /// News mentions of `company` in `(from, to]` (exclusive, inclusive).
    pub fn news_count_between(&self, company: &CompanyId, from: NaiveDate, to: NaiveDate) -> usize {
        let dates = match self.news_by_company.get(company) {
            Some(d) => d,
            None => return 0,
        };
        let hi = dates.partition_point(|&d| d <= to);
        let lo = dates.partition_point(|&d| d <= from);
        hi.saturating_sub(lo)
    }

    /// News mentions of `company` on or before `as_of`.
    pub fn news_count_until(&self, company: &CompanyId, as_of: NaiveDate) -> usize {
        self.news_by_company
            .get(company)
            .map(|dates| dates.partition_point(|&d| d <= as_of))
            .unwrap_or(0)
    }

    /// Person indices of the founders of `company`.
    pub fn founders_of(&self, company: &CompanyId) -> &[usize] {
        self.founders_by_company
            .get(company)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn person(&self, index: usize) -> &Person {
        &self.people[index]
    }

    /// Companies in `region` founded on or before `as_of`.
    pub fn companies_in_region_until(&self, region: &str, as_of: NaiveDate) -> usize {
        self.region_founded
            .get(region)
            .map(|dates| dates.partition_point(|&d| d <= as_of))
            .unwrap_or(0)
    }

    /// Distinct investors across the company's rounds announced on or before
    /// `as_of`, in first-seen order.
    pub fn investors_of_until(&self, company: &CompanyId, as_of: NaiveDate) -> Vec<InvestorId> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for &ri in self.rounds_of_until(company, as_of) {
            for inv in &self.rounds[ri].investor_ids {
                if seen.insert(inv.clone(), ()).is_none() {
                    out.push(inv.clone());
                }
            }
        }
        out
    }
}

/// Disclosed amount, or the median of disclosed same-type amounts announced
/// on or before the round's date; falls back to the global median, then 0.
pub fn impute_amount(round: &FundingRound, store: &EntityStore) -> f64 {
    if let Some(amount) = round.amount_usd {
        return amount;
    }
    if let Some(median) = store
        .medians_by_type
        .get(&round.round_type)
        .and_then(|t| t.median_at(round.announced_on))
    {
        return median;
    }
    if let Some(median) = store.median_global.median_at(round.announced_on) {
        return median;
    }
    log::warn!(
        "no disclosed amounts anywhere at {}; imputing 0 for round {}",
        round.announced_on,
        round.id
    );
    0.0
}

/// One sample per (company, semester) where the company closed a qualifying
/// round during that semester. Output sorted by (company_id, as_of).
pub fn build_samples(
    store: &EntityStore,
    start: NaiveDate,
    end: NaiveDate,
    horizon_years: u32,
    cohort: Cohort,
) -> Vec<Sample> {
    assert!(start < end, "start must precede end");
    assert!(horizon_years >= 1, "horizon must be at least one year");

    let boundaries = semester_ends(start, end);
    let mut samples = Vec::new();

    for company in &store.companies {
        let round_indices = store.rounds_of(&company.id);
        if round_indices.is_empty() {
            continue;
        }
        for &as_of in &boundaries {
            // Exited strictly before the semester end: out of the study.
            if company.status.is_exit() {
                if let Some(exit_date) = company.status_date {
                    if exit_date < as_of {
                        continue;
                    }
                }
            }
            let window_start = prev_semester_end(as_of);
            let qualifying = round_indices.iter().any(|&i| {
                let r = &store.rounds[i];
                r.announced_on > window_start
                    && r.announced_on <= as_of
                    && cohort.qualifies(r.round_type)
            });
            if !qualifying {
                continue;
            }
            let horizon_end = shift_years(as_of, horizon_years as i32);
            let future_round = round_indices.iter().any(|&i| {
                let d = store.rounds[i].announced_on;
                d > as_of && d <= horizon_end
            });
            let future_exit = company.status.is_exit()
                && company
                    .status_date
                    .map(|d| d > as_of && d <= horizon_end)
                    .unwrap_or(false);
            samples.push(Sample {
                company_id: company.id.clone(),
                as_of,
                cohort,
                label: future_round || future_exit,
                horizon_years,
            });
        }
    }

    samples.sort_by(|a, b| {
        a.company_id
            .cmp(&b.company_id)
            .then_with(|| a.as_of.cmp(&b.as_of))
    });
    samples
}
