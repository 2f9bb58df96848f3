//! Description similarity and competition features: preprocessing, word
//! vectors, SIF document embeddings, and competitor identification.

pub mod preprocess;
pub mod sif;
pub mod similarity;
pub mod stopwords;
pub mod word2vec;

pub use preprocess::{
    apply_bigrams, base_tokens, learn_bigrams, preprocess, BigramConfig, BigramTable,
    MIN_DOC_TOKENS,
};
pub use sif::{first_principal_component, sif_embed, sif_weighted_average, DocVector, SifResult};
pub use similarity::{
    competition_features, competitor_edges, competitor_sets_at, cosine_similarity,
    find_competitors, CompetitionConfig, CompetitionFeatures, CompetitorSet, DocVectors,
};
pub use word2vec::{
    read_embedding_vectors, train_word2vec, write_embeddings, EmbeddingSpace, Word2VecConfig,
};

use std::collections::HashMap;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::ingest::{CompanyId, EntityStore};

/// Everything the text stage needs to run end to end.
#[derive(Debug, Clone, Default)]
pub struct TextConfig {
    pub word2vec: Word2VecConfig,
    pub bigrams: BigramConfig,
    pub competition: CompetitionConfig,
}

/// Preprocessed descriptions: surviving documents and the learned bigrams.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub docs: Vec<(CompanyId, Vec<String>)>,
    pub bigrams: BigramTable,
}

/// Tokenize every company description, learn bigrams over the base corpus,
/// merge, and drop documents shorter than [`MIN_DOC_TOKENS`].
pub fn prepare_corpus(store: &EntityStore, config: &BigramConfig) -> PreparedCorpus {
    let base: Vec<(CompanyId, Vec<String>)> = store
        .companies()
        .iter()
        .map(|c| (c.id.clone(), base_tokens(&c.description)))
        .collect();
    let learning: Vec<Vec<String>> = base
        .iter()
        .filter(|(_, tokens)| !tokens.is_empty())
        .map(|(_, tokens)| tokens.clone())
        .collect();
    let bigrams = if learning.is_empty() {
        BigramTable::default()
    } else {
        learn_bigrams(&learning, config)
    };
    let docs = base
        .into_iter()
        .filter_map(|(id, tokens)| {
            let merged = apply_bigrams(&tokens, &bigrams);
            if merged.len() < MIN_DOC_TOKENS {
                None
            } else {
                Some((id, merged))
            }
        })
        .collect();
    PreparedCorpus { docs, bigrams }
}

/// Trained space plus the embedded universe.
#[derive(Debug)]
pub struct TextArtifacts {
    pub space: EmbeddingSpace,
    pub universe: DocVectors,
    pub zero_vector_docs: usize,
}

/// Run the full text pipeline over a store: preprocess, train word vectors,
/// embed documents, and index the universe.
pub fn embed_store(store: &EntityStore, config: &TextConfig) -> Result<TextArtifacts> {
    let prepared = prepare_corpus(store, &config.bigrams);
    if prepared.docs.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let corpus: Vec<Vec<String>> = prepared.docs.iter().map(|(_, t)| t.clone()).collect();
    let space = train_word2vec(&corpus, &config.word2vec)?;
    build_universe(store, space, prepared, config.competition.sif_a)
}

/// Rebuild the universe from word vectors loaded off disk; token
/// probabilities are recounted from the corpus.
pub fn embed_store_with_vectors(
    store: &EntityStore,
    tokens: Vec<String>,
    vectors: Array2<f32>,
    config: &TextConfig,
) -> Result<TextArtifacts> {
    let prepared = prepare_corpus(store, &config.bigrams);
    if prepared.docs.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for (_, doc) in &prepared.docs {
        for token in doc {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let aligned: Vec<u64> = tokens
        .iter()
        .map(|t| counts.get(t.as_str()).copied().unwrap_or(0))
        .collect();
    let space = EmbeddingSpace::from_parts(tokens, vectors, &aligned);
    build_universe(store, space, prepared, config.competition.sif_a)
}

fn build_universe(
    store: &EntityStore,
    space: EmbeddingSpace,
    prepared: PreparedCorpus,
    sif_a: f64,
) -> Result<TextArtifacts> {
    let result = sif_embed(&space, &prepared.docs, sif_a);
    let universe = DocVectors::build(result.docs, store);
    Ok(TextArtifacts {
        space,
        universe,
        zero_vector_docs: result.zero_vector_docs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use ndarray::{Array1, ArrayView1};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    use crate::ingest::{Company, FundingRound, RoundId, RoundType, Status};

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn company(id: &str, founded: &str) -> Company {
        Company {
            id: CompanyId::from(id),
            name: id.to_string(),
            founded_on: d(founded),
            region: "metro".to_string(),
            description: String::new(),
            tags: vec![],
            status: Status::Operating,
            status_date: None,
        }
    }

    fn universe_of(vectors: Vec<(&str, &str, Vec<f64>)>) -> (EntityStore, DocVectors) {
        let companies: Vec<Company> = vectors
            .iter()
            .map(|(id, founded, _)| company(id, founded))
            .collect();
        let (store, _) = EntityStore::from_parts(companies, vec![], vec![], vec![]);
        let docs: Vec<DocVector> = vectors
            .into_iter()
            .map(|(id, _, v)| DocVector {
                company_id: CompanyId::from(id),
                vector: Array1::from_vec(v),
                token_count: 10,
            })
            .collect();
        let universe = DocVectors::build(docs, &store);
        (store, universe)
    }

    #[test]
    fn cosine_identity_orthogonality_and_hand_value() {
        let a = Array1::from_vec(vec![0.3, -1.2, 2.5]);
        let sim = cosine_similarity(a.view(), a.view()).unwrap();
        assert!((sim - 1.0).abs() < 1e-12);

        let x = Array1::from_vec(vec![1.0, 0.0]);
        let y = Array1::from_vec(vec![0.0, 1.0]);
        assert_eq!(cosine_similarity(x.view(), y.view()).unwrap(), 0.0);

        let z = Array1::from_vec(vec![1.0, 1.0]);
        let sim = cosine_similarity(x.view(), z.view()).unwrap();
        assert!((sim - 0.70710678).abs() < 1e-8);
    }

    #[test]
    fn cosine_dimension_mismatch_is_an_error() {
        let a = Array1::from_vec(vec![1.0, 2.0]);
        let b = Array1::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            cosine_similarity(a.view(), b.view()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cosine_zero_norm_is_zero() {
        let a = Array1::from_vec(vec![0.0, 0.0]);
        let b = Array1::from_vec(vec![1.0, 2.0]);
        assert_eq!(cosine_similarity(a.view(), b.view()).unwrap(), 0.0);
    }

    #[test]
    fn identical_description_is_a_competitor_at_similarity_one() {
        let (_, universe) = universe_of(vec![
            ("a", "2010-01-01", vec![1.0, 2.0, 3.0]),
            ("b", "2010-01-01", vec![1.0, 2.0, 3.0]),
            ("c", "2010-01-01", vec![-3.0, 1.0, 0.0]),
        ]);
        let set = find_competitors(
            &CompanyId::from("a"),
            &universe,
            &CompetitionConfig::default(),
            d("2012-06-30"),
        )
        .unwrap();
        assert_eq!(set.competitors.len(), 1);
        assert_eq!(set.competitors[0].0, CompanyId::from("b"));
        assert!((set.competitors[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_universe_gives_empty_set() {
        let (_, universe) = universe_of(vec![("a", "2010-01-01", vec![1.0, 0.0])]);
        let set = find_competitors(
            &CompanyId::from("a"),
            &universe,
            &CompetitionConfig::default(),
            d("2012-06-30"),
        )
        .unwrap();
        assert!(set.competitors.is_empty());
    }

    #[test]
    fn unembedded_target_is_an_error() {
        let (_, universe) = universe_of(vec![("a", "2010-01-01", vec![1.0, 0.0])]);
        assert!(matches!(
            find_competitors(
                &CompanyId::from("ghost"),
                &universe,
                &CompetitionConfig::default(),
                d("2012-06-30"),
            ),
            Err(Error::NotEmbedded(_))
        ));
    }

    #[test]
    fn companies_founded_later_are_filtered() {
        let (_, universe) = universe_of(vec![
            ("a", "2010-01-01", vec![1.0, 2.0]),
            ("late", "2013-01-01", vec![1.0, 2.0]),
        ]);
        let set = find_competitors(
            &CompanyId::from("a"),
            &universe,
            &CompetitionConfig::default(),
            d("2012-06-30"),
        )
        .unwrap();
        assert!(set.competitors.is_empty());
    }

    fn random_universe(seed: u64, n: usize, dim: usize) -> (EntityStore, DocVectors) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries: Vec<(String, String, Vec<f64>)> = (0..n)
            .map(|i| {
                let founded = d("2008-01-01") + chrono::Days::new(rng.random_range(0..1500));
                let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.3).collect();
                (format!("c{i:02}"), founded.to_string(), v)
            })
            .collect();
        universe_of(
            entries
                .iter()
                .map(|(id, f, v)| (id.as_str(), f.as_str(), v.clone()))
                .collect(),
        )
    }

    #[test]
    fn matches_exhaustive_all_pairs_oracle() {
        let (_, universe) = random_universe(5, 50, 6);
        let config = CompetitionConfig::default();
        let as_of = d("2012-06-30");
        for target in universe.ids().to_vec() {
            let got = find_competitors(&target, &universe, &config, as_of).unwrap();
            // Brute force: cosine against every other embedded company.
            let tp = universe.position(&target).unwrap();
            let mut expected = Vec::new();
            for other in 0..universe.len() {
                if other == tp || universe.founded_on(other) > as_of {
                    continue;
                }
                let sim =
                    cosine_similarity(universe.vector(tp), universe.vector(other)).unwrap();
                if sim >= config.min_sim {
                    expected.push((universe.ids()[other].clone(), sim));
                }
            }
            expected.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            assert_eq!(got.competitors, expected);
        }
    }

    #[test]
    fn competitor_relation_is_symmetric() {
        let (_, universe) = random_universe(23, 40, 5);
        let config = CompetitionConfig::default();
        let as_of = d("2013-12-31");
        for a in universe.ids().to_vec() {
            let set_a = find_competitors(&a, &universe, &config, as_of).unwrap();
            for (b, _) in &set_a.competitors {
                let set_b = find_competitors(b, &universe, &config, as_of).unwrap();
                assert!(
                    set_b.competitors.iter().any(|(id, _)| id == &a),
                    "{a} in competitors({b}) missing"
                );
            }
        }
    }

    #[test]
    fn blocked_edges_agree_with_per_target_scan() {
        let (_, universe) = random_universe(7, 90, 8);
        let config = CompetitionConfig {
            min_sim: 0.4,
            ..CompetitionConfig::default()
        };
        let as_of = d("2013-12-31");
        let edges = competitor_edges(&universe, config.min_sim);
        let sets = competitor_sets_at(&universe, &edges, as_of);
        for target in universe.ids().to_vec() {
            let direct = find_competitors(&target, &universe, &config, as_of).unwrap();
            let via_edges: Vec<&CompanyId> = sets
                .get(&target)
                .map(|s| s.competitors.iter().map(|(id, _)| id).collect())
                .unwrap_or_default();
            let direct_ids: Vec<&CompanyId> =
                direct.competitors.iter().map(|(id, _)| id).collect();
            assert_eq!(direct_ids, via_edges, "target {target}");
            if let Some(set) = sets.get(&target) {
                for ((_, a), (_, b)) in direct.competitors.iter().zip(&set.competitors) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    fn funding_fixture(round_date: &str) -> (EntityStore, CompetitorSet) {
        let companies = vec![company("target", "2010-01-01"), company("rival", "2010-01-01")];
        let rounds = vec![FundingRound {
            id: RoundId::from("r1"),
            company_id: CompanyId::from("rival"),
            announced_on: d(round_date),
            round_type: RoundType::Seed,
            amount_usd: Some(2e6),
            investor_ids: vec![],
        }];
        let (store, _) = EntityStore::from_parts(companies, rounds, vec![], vec![]);
        let set = CompetitorSet {
            company_id: CompanyId::from("target"),
            competitors: vec![(CompanyId::from("rival"), 0.8)],
        };
        (store, set)
    }

    #[test]
    fn no_competitors_means_zero_features() {
        let (store, _) = funding_fixture("2012-01-01");
        let set = CompetitorSet {
            company_id: CompanyId::from("target"),
            competitors: vec![],
        };
        let f = competition_features(d("2012-06-30"), &set, &store);
        assert_eq!(f, CompetitionFeatures::default());
    }

    #[test]
    fn recent_round_counts_in_both_windows() {
        let (store, set) = funding_fixture("2012-01-01");
        let f = competition_features(d("2012-06-30"), &set, &store);
        assert_eq!(f.count, 1);
        assert_eq!(f.total_funding_usd, 2e6);
        assert_eq!(f.funding_last_year_usd, 2e6);
    }

    #[test]
    fn old_round_counts_only_in_total() {
        let (store, set) = funding_fixture("2011-01-01");
        let f = competition_features(d("2012-06-30"), &set, &store);
        assert_eq!(f.count, 1);
        assert_eq!(f.total_funding_usd, 2e6);
        assert_eq!(f.funding_last_year_usd, 0.0);
    }

    #[test]
    fn trailing_year_never_exceeds_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let companies: Vec<Company> = (0..10)
            .map(|i| company(&format!("c{i}"), "2009-01-01"))
            .collect();
        let mut rounds = Vec::new();
        for i in 0..10 {
            for j in 0..rng.random_range(0..4) {
                rounds.push(FundingRound {
                    id: RoundId::from(format!("r{i}_{j}").as_str()),
                    company_id: CompanyId::from(format!("c{i}").as_str()),
                    announced_on: d("2009-06-01") + chrono::Days::new(rng.random_range(0..1400)),
                    round_type: RoundType::Seed,
                    amount_usd: rng.random_bool(0.6).then(|| rng.random_range(1..9) as f64 * 1e6),
                    investor_ids: vec![],
                });
            }
        }
        let (store, _) = EntityStore::from_parts(companies, rounds, vec![], vec![]);
        let set = CompetitorSet {
            company_id: CompanyId::from("c0"),
            competitors: (1..10)
                .map(|i| (CompanyId::from(format!("c{i}").as_str()), 0.7))
                .collect(),
        };
        for as_of in ["2010-06-30", "2011-12-31", "2013-06-30"] {
            let f = competition_features(d(as_of), &set, &store);
            assert!(f.funding_last_year_usd <= f.total_funding_usd + 1e-9);
        }
    }

    #[test]
    fn cosine_scale_invariance_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let dim = rng.random_range(2..20);
            let a: Array1<f64> = Array1::from_shape_fn(dim, |_| rng.random::<f64>() * 2.0 - 1.0);
            let b: Array1<f64> = Array1::from_shape_fn(dim, |_| rng.random::<f64>() * 2.0 - 1.0);
            let c: f64 = rng.random_range(0.01..100.0);
            let scaled = a.mapv(|x| c * x);
            let s1 = cosine_similarity(a.view(), b.view()).unwrap();
            let s2 = cosine_similarity(scaled.view(), b.view()).unwrap();
            assert!((s1 - s2).abs() < 1e-12);
            let sym = cosine_similarity(b.view(), a.view()).unwrap();
            assert_eq!(s1, sym);
            assert!((-1.0..=1.0).contains(&s1));
        }
    }

    fn view_of(v: &Array1<f64>) -> ArrayView1<'_, f64> {
        v.view()
    }

    #[test]
    fn end_to_end_embedding_over_a_store() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sectors = [
            ["ledger", "payments", "banking", "credit", "treasury", "settlement"],
            ["genome", "protein", "clinical", "assay", "therapeutic", "biomarker"],
        ];
        let companies: Vec<Company> = (0..40)
            .map(|i| {
                let pool = &sectors[i % 2];
                let description: String = (0..18)
                    .map(|_| pool[rng.random_range(0..pool.len())])
                    .collect::<Vec<_>>()
                    .join(" ");
                Company {
                    description,
                    ..company(&format!("c{i:02}"), "2010-01-01")
                }
            })
            .collect();
        let (store, _) = EntityStore::from_parts(companies, vec![], vec![], vec![]);
        let config = TextConfig {
            word2vec: Word2VecConfig {
                dim: 16,
                epochs: 6,
                min_count: 2,
                seed: 11,
                ..Word2VecConfig::default()
            },
            ..TextConfig::default()
        };
        let artifacts = embed_store(&store, &config).unwrap();
        assert_eq!(artifacts.universe.len(), 40);

        // Same-sector pairs should look more alike than cross-sector pairs.
        let u = &artifacts.universe;
        let mut intra = Vec::new();
        let mut cross = Vec::new();
        for i in 0..u.len() {
            for j in (i + 1)..u.len() {
                let sim = cosine_similarity(view_of(&u.vector(i).to_owned()), u.vector(j)).unwrap();
                if i % 2 == j % 2 {
                    intra.push(sim);
                } else {
                    cross.push(sim);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&intra) > mean(&cross) + 0.2);
    }
}
