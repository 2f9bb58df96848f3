//! Smooth-inverse-frequency document vectors: a frequency-weighted average
//! of word vectors with the first principal component removed.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::ingest::CompanyId;

use super::word2vec::EmbeddingSpace;

/// Default SIF weighting parameter.
pub const DEFAULT_SIF_A: f64 = 1e-3;

/// Per-company document vector.
#[derive(Debug, Clone)]
pub struct DocVector {
    pub company_id: CompanyId,
    pub vector: Array1<f64>,
    /// Preprocessed token count (>= the embedding minimum by construction).
    pub token_count: usize,
}

/// Output of [`sif_embed`]: the vectors, the removed principal direction
/// (when one exists), and how many documents had no in-vocabulary token.
#[derive(Debug, Clone)]
pub struct SifResult {
    pub docs: Vec<DocVector>,
    pub component: Option<Array1<f64>>,
    pub zero_vector_docs: usize,
}

/// Weighted average with weight `a / (a + p(w))` per in-vocabulary token,
/// normalized by the total weight. Out-of-vocabulary tokens are skipped; a
/// document with none in vocabulary yields the zero vector.
pub fn sif_weighted_average(space: &EmbeddingSpace, tokens: &[String], a: f64) -> Array1<f64> {
    assert!(a > 0.0, "SIF parameter a must be positive");
    let mut sum = Array1::<f64>::zeros(space.dim());
    let mut total_weight = 0.0;
    for token in tokens {
        if let Some(idx) = space.lookup(token) {
            let weight = a / (a + space.frequency(idx));
            let row = space.vector(idx);
            for (s, &v) in sum.iter_mut().zip(row.iter()) {
                *s += weight * v as f64;
            }
            total_weight += weight;
        }
    }
    if total_weight > 0.0 {
        sum.mapv_inplace(|x| x / total_weight);
    }
    sum
}

/// First right-singular direction of `matrix` by power iteration on XᵀX.
/// Returns `None` for an all-zero matrix.
pub fn first_principal_component(matrix: &Array2<f64>) -> Option<Array1<f64>> {
    let dim = matrix.ncols();
    if matrix.nrows() == 0 || dim == 0 {
        return None;
    }
    if matrix.iter().all(|&x| x == 0.0) {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x51f);
    let mut v = Array1::from_shape_fn(dim, |_| rng.random::<f64>() - 0.5);
    let norm = v.dot(&v).sqrt();
    v.mapv_inplace(|x| x / norm);
    for _ in 0..500 {
        let projected = matrix.dot(&v);
        let mut next = matrix.t().dot(&projected);
        let norm = next.dot(&next).sqrt();
        if norm == 0.0 {
            // Start vector landed in the null space; reseed and keep going.
            v = Array1::from_shape_fn(dim, |_| rng.random::<f64>() - 0.5);
            let n = v.dot(&v).sqrt();
            v.mapv_inplace(|x| x / n);
            continue;
        }
        next.mapv_inplace(|x| x / norm);
        let agreement = next.dot(&v).abs();
        v = next;
        if agreement >= 1.0 - 1e-14 {
            break;
        }
    }
    Some(v)
}

/// Embed documents: SIF-weighted averages, then removal of each vector's
/// projection onto the first principal component of the stacked matrix.
pub fn sif_embed(
    space: &EmbeddingSpace,
    docs: &[(CompanyId, Vec<String>)],
    a: f64,
) -> SifResult {
    let dim = space.dim();
    let mut matrix = Array2::<f64>::zeros((docs.len(), dim));
    let mut zero_vector_docs = 0;
    for (i, (company_id, tokens)) in docs.iter().enumerate() {
        let v = sif_weighted_average(space, tokens, a);
        if v.iter().all(|&x| x == 0.0) {
            zero_vector_docs += 1;
            log::warn!("description of {company_id} has no in-vocabulary token; zero vector");
        }
        matrix.row_mut(i).assign(&v);
    }

    let component = first_principal_component(&matrix);
    if let Some(u) = &component {
        for mut row in matrix.rows_mut() {
            let proj = row.dot(u);
            for (r, &c) in row.iter_mut().zip(u.iter()) {
                *r -= proj * c;
            }
        }
    }

    let vectors = docs
        .iter()
        .enumerate()
        .map(|(i, (company_id, tokens))| DocVector {
            company_id: company_id.clone(),
            vector: matrix.row(i).to_owned(),
            token_count: tokens.len(),
        })
        .collect();

    SifResult {
        docs: vectors,
        component,
        zero_vector_docs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn space_with(tokens: &[&str], vectors: Array2<f32>, counts: &[u64]) -> EmbeddingSpace {
        EmbeddingSpace::from_parts(
            tokens.iter().map(|t| t.to_string()).collect(),
            vectors,
            counts,
        )
    }

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn equal_frequencies_reduce_to_plain_average() {
        let space = space_with(
            &["a", "b", "c"],
            array![[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]],
            &[4, 4, 4],
        );
        let avg = sif_weighted_average(&space, &toks(&["a", "b", "c"]), 1e-3);
        let plain = array![1.0, 1.0];
        for (got, want) in avg.iter().zip(plain.iter()) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn rare_words_weigh_more() {
        let space = space_with(
            &["rare", "common"],
            array![[1.0, 0.0], [0.0, 1.0]],
            &[1, 99],
        );
        let v = sif_weighted_average(&space, &toks(&["rare", "common"]), 1e-3);
        assert!(v[0] > v[1]);
    }

    #[test]
    fn identical_documents_collapse_to_zero() {
        let space = space_with(&["x", "y"], array![[1.0, 2.0], [1.0, 2.0]], &[5, 5]);
        let docs = vec![
            (CompanyId::from("c1"), toks(&["x", "y"])),
            (CompanyId::from("c2"), toks(&["x", "y"])),
            (CompanyId::from("c3"), toks(&["x"])),
        ];
        let result = sif_embed(&space, &docs, 1e-3);
        for doc in &result.docs {
            for &v in doc.vector.iter() {
                assert!(v.abs() < 1e-10, "expected zero, got {v}");
            }
        }
    }

    #[test]
    fn out_of_vocabulary_document_warns_with_zero_vector() {
        let space = space_with(&["x"], array![[1.0, 0.0]], &[5]);
        let docs = vec![
            (CompanyId::from("c1"), toks(&["x", "x"])),
            (CompanyId::from("c2"), toks(&["unknown", "words"])),
        ];
        let result = sif_embed(&space, &docs, 1e-3);
        assert_eq!(result.zero_vector_docs, 1);
    }

    #[test]
    fn post_projection_orthogonal_to_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let dim = 12;
        let space = space_with(
            &["w0", "w1", "w2", "w3", "w4"],
            Array2::from_shape_fn((5, dim), |_| rng.random::<f32>() - 0.5),
            &[3, 7, 2, 11, 5],
        );
        let words = ["w0", "w1", "w2", "w3", "w4"];
        let docs: Vec<(CompanyId, Vec<String>)> = (0..8)
            .map(|i| {
                let tokens: Vec<String> = (0..6)
                    .map(|_| words[rng.random_range(0..words.len())].to_string())
                    .collect();
                (CompanyId::from(format!("c{i}").as_str()), tokens)
            })
            .collect();
        let result = sif_embed(&space, &docs, 1e-3);
        let u = result.component.expect("component exists");
        for doc in &result.docs {
            assert!(doc.vector.dot(&u).abs() < 1e-8);
        }
    }

    // Independent route: eigendecomposition of the 3x3 Gram matrix by cyclic
    // Jacobi rotations, mapped back to a right-singular vector.
    fn jacobi_top_eigenvector(mut m: [[f64; 3]; 3]) -> [f64; 3] {
        let mut v = [[0.0f64; 3]; 3];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for _ in 0..64 {
            let mut p = 0;
            let mut q = 1;
            let mut biggest = 0.0f64;
            for i in 0..3 {
                for j in (i + 1)..3 {
                    if m[i][j].abs() > biggest {
                        biggest = m[i][j].abs();
                        p = i;
                        q = j;
                    }
                }
            }
            if biggest < 1e-15 {
                break;
            }
            let theta = 0.5 * (m[q][q] - m[p][p]) / m[p][q];
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut next = m;
            for i in 0..3 {
                next[i][p] = c * m[i][p] - s * m[i][q];
                next[i][q] = s * m[i][p] + c * m[i][q];
            }
            let row_p: [f64; 3] = [next[p][0], next[p][1], next[p][2]];
            let row_q: [f64; 3] = [next[q][0], next[q][1], next[q][2]];
            for j in 0..3 {
                next[p][j] = c * row_p[j] - s * row_q[j];
                next[q][j] = s * row_p[j] + c * row_q[j];
            }
            m = next;
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
        let mut best = 0;
        for i in 1..3 {
            if m[i][i] > m[best][best] {
                best = i;
            }
        }
        [v[0][best], v[1][best], v[2][best]]
    }

    #[test]
    fn matches_dense_eigendecomposition_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let dim = 7;
        let space = space_with(
            &["w0", "w1", "w2", "w3"],
            Array2::from_shape_fn((4, dim), |_| rng.random::<f32>() * 2.0 - 1.0),
            &[2, 5, 9, 4],
        );
        let docs = vec![
            (CompanyId::from("c1"), toks(&["w0", "w1", "w1"])),
            (CompanyId::from("c2"), toks(&["w2", "w3"])),
            (CompanyId::from("c3"), toks(&["w0", "w3", "w2", "w2"])),
        ];
        let a = 1e-3;

        // Pre-projection matrix, independently assembled.
        let rows: Vec<Array1<f64>> = docs
            .iter()
            .map(|(_, tokens)| sif_weighted_average(&space, tokens, a))
            .collect();
        let mut gram = [[0.0f64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                gram[i][j] = rows[i].dot(&rows[j]);
            }
        }
        let e = jacobi_top_eigenvector(gram);
        let mut u = Array1::<f64>::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            for (uk, &rk) in u.iter_mut().zip(row.iter()) {
                *uk += e[i] * rk;
            }
        }
        let norm = u.dot(&u).sqrt();
        u.mapv_inplace(|x| x / norm);

        let result = sif_embed(&space, &docs, a);
        for (doc, row) in result.docs.iter().zip(rows.iter()) {
            let proj = row.dot(&u);
            for ((got, &pre), &uk) in doc.vector.iter().zip(row.iter()).zip(u.iter()) {
                let want = pre - proj * uk;
                assert!((got - want).abs() < 1e-8, "{got} vs {want}");
            }
        }
    }
}
