//! Description preprocessing: letters-only lowercase tokens, stopword
//! removal, bigram merging, and the minimum-length exclusion rule.

use std::collections::HashMap;

use super::stopwords::is_stopword;

/// Documents with fewer tokens than this (after stopword removal and bigram
/// merging) are excluded from embedding.
pub const MIN_DOC_TOKENS: usize = 10;

/// Lowercase letter-run tokens with stopwords removed.
pub fn base_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphabetic() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            if !is_stopword(&current) {
                tokens.push(std::mem::take(&mut current));
            } else {
                current.clear();
            }
        }
    }
    if !current.is_empty() && !is_stopword(&current) {
        tokens.push(current);
    }
    tokens
}

/// Phrase-scoring parameters: merge (a, b) into "a_b" when
/// `(count(a,b) - delta) * N / (count(a) * count(b)) >= threshold`.
#[derive(Debug, Clone)]
pub struct BigramConfig {
    pub delta: f64,
    pub threshold: f64,
}

impl Default for BigramConfig {
    fn default() -> Self {
        BigramConfig {
            delta: 5.0,
            threshold: 10.0,
        }
    }
}

/// Adjacent pairs that scored above the merge threshold.
#[derive(Debug, Clone, Default)]
pub struct BigramTable {
    merges: HashMap<(String, String), f64>,
}

impl BigramTable {
    pub fn is_merge(&self, a: &str, b: &str) -> bool {
        self.merges.contains_key(&(a.to_string(), b.to_string()))
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }
}

/// Score adjacent pairs over the tokenized corpus.
pub fn learn_bigrams(corpus: &[Vec<String>], config: &BigramConfig) -> BigramTable {
    assert!(!corpus.is_empty(), "corpus must be non-empty");
    let mut unigram: HashMap<&str, u64> = HashMap::new();
    let mut pair: HashMap<(&str, &str), u64> = HashMap::new();
    let mut total: u64 = 0;
    for doc in corpus {
        for token in doc {
            *unigram.entry(token).or_insert(0) += 1;
            total += 1;
        }
        for window in doc.windows(2) {
            *pair.entry((&window[0], &window[1])).or_insert(0) += 1;
        }
    }
    let mut merges = HashMap::new();
    for (&(a, b), &count) in &pair {
        let score = (count as f64 - config.delta) * total as f64
            / (unigram[a] as f64 * unigram[b] as f64);
        if score >= config.threshold {
            merges.insert((a.to_string(), b.to_string()), score);
        }
    }
    BigramTable { merges }
}

/// Merge learned pairs left to right, non-overlapping.
pub fn apply_bigrams(tokens: &[String], table: &BigramTable) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        if i + 1 < tokens.len() && table.is_merge(&tokens[i], &tokens[i + 1]) {
            out.push(format!("{}_{}", tokens[i], tokens[i + 1]));
            i += 2;
        } else {
            out.push(tokens[i].clone());
            i += 1;
        }
    }
    out
}

/// Full preprocessing; `None` means the description is excluded (fewer than
/// [`MIN_DOC_TOKENS`] tokens remain).
pub fn preprocess(text: &str, bigrams: Option<&BigramTable>) -> Option<Vec<String>> {
    let tokens = base_tokens(text);
    let tokens = match bigrams {
        Some(table) => apply_bigrams(&tokens, table),
        None => tokens,
    };
    if tokens.len() < MIN_DOC_TOKENS {
        None
    } else {
        Some(tokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_strips_digits_punctuation_and_case() {
        assert_eq!(
            base_tokens("New York's 12 AI Labs!"),
            vec!["new", "york", "ai", "labs"]
        );
    }

    #[test]
    fn stopwords_removed() {
        assert_eq!(base_tokens("the quick and the dead"), vec!["quick", "dead"]);
    }

    #[test]
    fn short_description_excluded() {
        let nine = "alpha beta gamma delta epsilon zeta eta theta iota";
        assert_eq!(base_tokens(nine).len(), 9);
        assert!(preprocess(nine, None).is_none());
        let ten = format!("{nine} kappa");
        assert_eq!(preprocess(&ten, None).unwrap().len(), 10);
    }

    #[test]
    fn empty_text_excluded() {
        assert!(preprocess("", None).is_none());
    }

    fn corpus_with_phrase(n_phrase: usize, n_filler: usize) -> Vec<Vec<String>> {
        let mut corpus = Vec::new();
        for i in 0..n_phrase {
            corpus.push(vec![
                "new".to_string(),
                "york".to_string(),
                format!("filler{}", i % 7),
            ]);
        }
        for i in 0..n_filler {
            corpus.push(vec![format!("pad{}", i % 50), format!("pad{}", (i + 1) % 50)]);
        }
        corpus
    }

    #[test]
    fn frequent_pair_merges() {
        // count(new,york) = 20, count(new) = count(york) = 20, N = 260:
        // score = (20 - 5) * 260 / 400 = 9.75 < 10 -> no merge;
        // N = 300: score = 11.25 >= 10 -> merge.
        let table = learn_bigrams(&corpus_with_phrase(20, 100), &BigramConfig::default());
        assert!(!table.is_merge("new", "york"));
        let table = learn_bigrams(&corpus_with_phrase(20, 120), &BigramConfig::default());
        assert!(table.is_merge("new", "york"));
        let merged = apply_bigrams(
            &["new".to_string(), "york".to_string(), "labs".to_string()],
            &table,
        );
        assert_eq!(merged, vec!["new_york", "labs"]);
    }

    #[test]
    fn rare_pair_never_merges() {
        // A single co-occurrence is wiped out by the delta discount.
        let mut corpus = corpus_with_phrase(1, 500);
        corpus.push(vec!["solo".to_string()]);
        let table = learn_bigrams(&corpus, &BigramConfig::default());
        assert!(!table.is_merge("new", "york"));
    }

    #[test]
    fn non_adjacent_words_never_merge() {
        let corpus = vec![
            vec!["apple".to_string(), "pad".to_string(), "banana".to_string()];
            100
        ];
        let table = learn_bigrams(&corpus, &BigramConfig::default());
        assert!(!table.is_merge("apple", "banana"));
    }

    #[test]
    fn preprocessing_is_idempotent() {
        let table = learn_bigrams(&corpus_with_phrase(20, 120), &BigramConfig::default());
        let texts = [
            "New York startups build new york analytics platforms for logistics teams everywhere daily",
            "quantum sensing hardware new york for york new precision navigation and imaging markets",
        ];
        for text in texts {
            let once = preprocess(text, Some(&table)).unwrap();
            let rejoined = once.join(" ");
            let twice = preprocess(&rejoined, Some(&table)).unwrap();
            assert_eq!(once, twice);
        }
    }
}
