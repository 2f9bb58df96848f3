//! Feature assembly: one fixed-order vector per sample, snapshot caches for
//! per-semester context, and the feature-table CSV format.

pub mod scaler;

pub use scaler::{
    fit_yeo_johnson, yeo_johnson, yeo_johnson_inverse, yeo_johnson_log_likelihood, ColumnScaler,
    ScalerModel,
};

use std::collections::{BTreeSet, HashMap};
use std::ops::RangeInclusive;
use std::path::Path;

use chrono::NaiveDate;

use crate::dates::{days_between, shift_years};
use crate::error::{Error, Result};
use crate::ingest::{impute_amount, Cohort, CompanyId, EntityStore, RoundType, Sample};
use crate::network::{betweenness, build_coinvestment_graph, investor_features, CentralityTable};
use crate::text::{
    competition_features, competitor_edges, competitor_sets_at, CompetitionConfig, CompetitorSet,
    DocVectors,
};

pub const FEATURE_COUNT: usize = 24;

/// Column order of every feature row, model matrix, and CSV file.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "n_startups_region",
    "founded_age_days",
    "total_funding_usd",
    "n_rounds",
    "days_since_last_round",
    "last_round_usd",
    "days_since_first_round",
    "has_seed",
    "has_a",
    "has_b",
    "has_c",
    "has_d",
    "n_investors",
    "max_inv_centrality",
    "mean_inv_centrality",
    "sum_inv_centrality",
    "max_portfolio",
    "n_articles",
    "news_increase",
    "n_founders",
    "n_previous_startups",
    "comp_count",
    "comp_funding_usd",
    "comp_funding_1y_usd",
];

/// Binary has_seed..has_d flags: excluded from power scaling.
pub const FLAG_RANGE: RangeInclusive<usize> = 7..=11;

/// The three competition features, for ablations.
pub const COMPETITION_RANGE: RangeInclusive<usize> = 21..=23;

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|&n| n == name)
}

/// One row in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
}

impl Default for FeatureVector {
    fn default() -> Self {
        FeatureVector {
            values: [0.0; FEATURE_COUNT],
        }
    }
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> f64 {
        self.values[feature_index(name).expect("known feature name")]
    }
}

/// Per-snapshot context: centrality table and competitor sets at one as-of
/// date, reusable across every sample of that semester.
pub struct SnapshotContext {
    pub as_of: NaiveDate,
    pub centrality: CentralityTable,
    pub competitor_sets: HashMap<CompanyId, CompetitorSet>,
}

impl SnapshotContext {
    pub fn build(
        store: &EntityStore,
        universe: &DocVectors,
        similarity_edges: &[(u32, u32, f64)],
        as_of: NaiveDate,
    ) -> Self {
        let graph = build_coinvestment_graph(store, as_of);
        let centrality = betweenness(&graph);
        let competitor_sets = competitor_sets_at(universe, similarity_edges, as_of);
        SnapshotContext {
            as_of,
            centrality,
            competitor_sets,
        }
    }

    pub fn competitors_of(&self, company: &CompanyId) -> Option<&CompetitorSet> {
        self.competitor_sets.get(company)
    }
}

/// Assemble the full feature vector for one company at one snapshot date.
pub fn assemble_for_company(
    company_id: &CompanyId,
    as_of: NaiveDate,
    store: &EntityStore,
    competitors: Option<&CompetitorSet>,
    centrality: &CentralityTable,
) -> FeatureVector {
    let company = store
        .company(company_id)
        .unwrap_or_else(|| panic!("unknown company {company_id}"));
    let mut v = FeatureVector::default();

    v.values[0] = store.companies_in_region_until(&company.region, as_of) as f64;
    v.values[1] = days_between(company.founded_on, as_of).max(0) as f64;

    let round_indices = store.rounds_of_until(company_id, as_of);
    v.values[3] = round_indices.len() as f64;
    for &ri in round_indices {
        let round = store.round(ri);
        v.values[2] += impute_amount(round, store);
        let flag = match round.round_type {
            RoundType::Seed => Some(7),
            RoundType::SeriesA => Some(8),
            RoundType::SeriesB => Some(9),
            RoundType::SeriesC => Some(10),
            RoundType::SeriesD => Some(11),
            RoundType::Other => None,
        };
        if let Some(f) = flag {
            v.values[f] = 1.0;
        }
    }
    if let (Some(&first), Some(&last)) = (round_indices.first(), round_indices.last()) {
        v.values[4] = days_between(store.round(last).announced_on, as_of) as f64;
        v.values[5] = impute_amount(store.round(last), store);
        v.values[6] = days_between(store.round(first).announced_on, as_of) as f64;
    }

    let inv = investor_features(company_id, as_of, centrality, store);
    v.values[12] = inv.n_investors as f64;
    v.values[13] = inv.max_centrality;
    v.values[14] = inv.mean_centrality;
    v.values[15] = inv.sum_centrality;
    v.values[16] = inv.max_portfolio as f64;

    v.values[17] = store.news_count_until(company_id, as_of) as f64;
    let one_year_ago = shift_years(as_of, -1);
    let two_years_ago = shift_years(as_of, -2);
    let recent = store.news_count_between(company_id, one_year_ago, as_of);
    let previous = store.news_count_between(company_id, two_years_ago, one_year_ago);
    v.values[18] = (recent + 1) as f64 / (previous + 1) as f64;

    let founders = store.founders_of(company_id);
    v.values[19] = founders.len() as f64;
    let mut previous_startups = 0usize;
    for &pi in founders {
        for prior in &store.person(pi).founded_company_ids {
            if let Some(c) = store.company(prior) {
                if c.founded_on < company.founded_on {
                    previous_startups += 1;
                }
            }
        }
    }
    v.values[20] = previous_startups as f64;

    if let Some(set) = competitors {
        let comp = competition_features(as_of, set, store);
        v.values[21] = comp.count as f64;
        v.values[22] = comp.total_funding_usd;
        v.values[23] = comp.funding_last_year_usd;
    }

    v
}

/// Assemble a sample's features; the centrality table must match the
/// sample's as-of date.
pub fn assemble(
    sample: &Sample,
    store: &EntityStore,
    competitors: Option<&CompetitorSet>,
    centrality: &CentralityTable,
) -> FeatureVector {
    assert_eq!(
        centrality.as_of(),
        sample.as_of,
        "centrality table computed at a different snapshot"
    );
    assemble_for_company(&sample.company_id, sample.as_of, store, competitors, centrality)
}

/// Sample identity attached to each feature row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMeta {
    pub company_id: CompanyId,
    pub as_of: NaiveDate,
    pub cohort: Cohort,
    pub label: bool,
}

/// Feature rows plus their sample identities, in input-sample order.
#[derive(Debug, Clone, Default)]
pub struct FeatureTable {
    pub meta: Vec<SampleMeta>,
    pub rows: Vec<FeatureVector>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.meta.iter().map(|m| m.label).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))?;
        let mut header = vec!["company_id", "as_of", "cohort", "label"];
        header.extend(FEATURE_NAMES);
        w.write_record(&header)?;
        for (meta, row) in self.meta.iter().zip(&self.rows) {
            let mut record = vec![
                meta.company_id.to_string(),
                meta.as_of.to_string(),
                meta.cohort.as_str().to_string(),
                if meta.label { "true" } else { "false" }.to_string(),
            ];
            record.extend(row.values.iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush()
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<FeatureTable> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))?;
        let file = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let headers = reader.headers()?.clone();
        let mut positions = Vec::new();
        let mut names = vec!["company_id", "as_of", "cohort", "label"];
        names.extend(FEATURE_NAMES);
        for name in &names {
            match headers.iter().position(|h| h == *name) {
                Some(p) => positions.push(p),
                None => {
                    return Err(Error::MissingColumn {
                        file,
                        column: name.to_string(),
                    })
                }
            }
        }
        let mut table = FeatureTable::default();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let field = |i: usize| record.get(positions[i]).unwrap_or("");
            let malformed = |column: &str, message: String| Error::MalformedRow {
                file: file.clone(),
                line,
                column: column.to_string(),
                message,
            };
            let as_of: NaiveDate = field(1)
                .parse()
                .map_err(|e| malformed("as_of", format!("{e}")))?;
            let cohort = Cohort::parse(field(2))
                .ok_or_else(|| malformed("cohort", format!("unknown cohort '{}'", field(2))))?;
            let label = match field(3) {
                "true" => true,
                "false" => false,
                other => return Err(malformed("label", format!("invalid label '{other}'"))),
            };
            let mut row = FeatureVector::default();
            for (k, value) in row.values.iter_mut().enumerate() {
                *value = field(4 + k)
                    .parse()
                    .map_err(|e| malformed(FEATURE_NAMES[k], format!("{e}")))?;
            }
            table.meta.push(SampleMeta {
                company_id: CompanyId::new(field(0)),
                as_of,
                cohort,
                label,
            });
            table.rows.push(row);
        }
        Ok(table)
    }
}

/// Assemble the feature table for a sample list, caching per-semester
/// centrality tables and competitor sets.
pub fn build_feature_table(
    store: &EntityStore,
    samples: &[Sample],
    universe: &DocVectors,
    config: &CompetitionConfig,
) -> FeatureTable {
    let edges = competitor_edges(universe, config.min_sim);
    build_feature_table_with_edges(store, samples, universe, &edges)
}

/// Same as [`build_feature_table`] with precomputed similarity edges.
pub fn build_feature_table_with_edges(
    store: &EntityStore,
    samples: &[Sample],
    universe: &DocVectors,
    similarity_edges: &[(u32, u32, f64)],
) -> FeatureTable {
    let snapshots: BTreeSet<NaiveDate> = samples.iter().map(|s| s.as_of).collect();
    let contexts: HashMap<NaiveDate, SnapshotContext> = snapshots
        .into_iter()
        .map(|as_of| {
            (
                as_of,
                SnapshotContext::build(store, universe, similarity_edges, as_of),
            )
        })
        .collect();

    let mut table = FeatureTable::default();
    for sample in samples {
        let ctx = &contexts[&sample.as_of];
        let row = assemble(
            sample,
            store,
            ctx.competitors_of(&sample.company_id),
            &ctx.centrality,
        );
        table.meta.push(SampleMeta {
            company_id: sample.company_id.clone(),
            as_of: sample.as_of,
            cohort: sample.cohort,
            label: sample.label,
        });
        table.rows.push(row);
    }
    table
}
