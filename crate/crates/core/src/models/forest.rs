//! Random forest classifier: CART trees on bootstrap resamples with
//! Gini-impurity splits over sampled candidate features.
//!
//! Split thresholds sit on observed values (`x <= v` goes left), so any
//! strictly increasing per-feature transform applied to both train and test
//! data leaves predictions unchanged.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::ArrayView2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const FOREST_MAGIC: &[u8; 5] = b"VSRF1";

#[derive(Debug, Clone)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Candidate features per node; `None` means ceil(sqrt(D)).
    pub max_features: Option<usize>,
    /// Draw bootstrap samples with equalized class probability.
    pub balanced_bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 500,
            max_depth: 12,
            max_features: None,
            balanced_bootstrap: true,
            seed: 0,
        }
    }
}

/// Flat tree node; `feature < 0` marks a leaf carrying class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub feature: i32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub prob: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let mut node = &self.nodes[0];
        while node.feature >= 0 {
            node = if row[node.feature as usize] <= node.threshold {
                &self.nodes[node.left as usize]
            } else {
                &self.nodes[node.right as usize]
            };
        }
        node.prob[1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_features: usize,
}

struct TreeBuilder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [bool],
    max_depth: usize,
    max_features: usize,
    nodes: Vec<TreeNode>,
}

impl<'a> TreeBuilder<'a> {
    fn leaf(&mut self, indices: &[usize]) -> u32 {
        let positives = indices.iter().filter(|&&i| self.y[i]).count();
        let n = indices.len().max(1);
        let p1 = positives as f64 / n as f64;
        self.nodes.push(TreeNode {
            feature: -1,
            threshold: 0.0,
            left: 0,
            right: 0,
            prob: [1.0 - p1, p1],
        });
        (self.nodes.len() - 1) as u32
    }

    /// Best (feature, threshold) by weighted Gini over `candidates`;
    /// thresholds are the left value of each adjacent distinct pair.
    fn best_split(&self, indices: &[usize], candidates: &[usize]) -> Option<(usize, f64)> {
        let n = indices.len();
        let total_pos = indices.iter().filter(|&&i| self.y[i]).count();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted: Vec<usize> = Vec::with_capacity(n);
        for &feature in candidates {
            sorted.clear();
            sorted.extend_from_slice(indices);
            sorted.sort_by(|&a, &b| self.x[[a, feature]].total_cmp(&self.x[[b, feature]]));

            let mut left_n = 0usize;
            let mut left_pos = 0usize;
            for w in 0..n - 1 {
                let i = sorted[w];
                left_n += 1;
                if self.y[i] {
                    left_pos += 1;
                }
                let here = self.x[[i, feature]];
                let next = self.x[[sorted[w + 1], feature]];
                if here == next {
                    continue;
                }
                let right_n = n - left_n;
                let right_pos = total_pos - left_pos;
                let gini = |pos: usize, count: usize| {
                    let p = pos as f64 / count as f64;
                    1.0 - p * p - (1.0 - p) * (1.0 - p)
                };
                let impurity = (left_n as f64 * gini(left_pos, left_n)
                    + right_n as f64 * gini(right_pos, right_n))
                    / n as f64;
                let better = match best {
                    None => true,
                    Some((b, _, _)) => impurity < b,
                };
                if better {
                    best = Some((impurity, feature, here));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }

    fn grow(&mut self, indices: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> u32 {
        let n_pos = indices.iter().filter(|&&i| self.y[i]).count();
        let pure = n_pos == 0 || n_pos == indices.len();
        if depth >= self.max_depth || pure || indices.len() < 2 {
            return self.leaf(&indices);
        }

        let d = self.x.ncols();
        let mut candidates: Vec<usize> = (0..d).collect();
        // Partial Fisher-Yates: the first max_features entries are the draw.
        for k in 0..self.max_features.min(d) {
            let j = rng.random_range(k..d);
            candidates.swap(k, j);
        }
        candidates.truncate(self.max_features.min(d));
        candidates.sort_unstable();

        let Some((feature, threshold)) = self.best_split(&indices, &candidates) else {
            return self.leaf(&indices);
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| self.x[[i, feature]] <= threshold);

        let slot = self.nodes.len();
        self.nodes.push(TreeNode {
            feature: feature as i32,
            threshold,
            left: 0,
            right: 0,
            prob: [0.0, 0.0],
        });
        let left = self.grow(left_idx, depth + 1, rng);
        let right = self.grow(right_idx, depth + 1, rng);
        self.nodes[slot].left = left;
        self.nodes[slot].right = right;
        slot as u32
    }
}

fn bootstrap_indices(
    y: &[bool],
    balanced: bool,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let n = y.len();
    if !balanced {
        return (0..n).map(|_| rng.random_range(0..n)).collect();
    }
    let positives: Vec<usize> = (0..n).filter(|&i| y[i]).collect();
    let negatives: Vec<usize> = (0..n).filter(|&i| !y[i]).collect();
    (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                positives[rng.random_range(0..positives.len())]
            } else {
                negatives[rng.random_range(0..negatives.len())]
            }
        })
        .collect()
}

/// Train a forest; deterministic given the seed (each tree derives its own
/// stream, so parallel growth cannot reorder randomness).
pub fn rf_train(x: ArrayView2<'_, f64>, y: &[bool], config: &ForestConfig) -> Result<ForestModel> {
    assert_eq!(x.nrows(), y.len(), "feature rows and labels must align");
    assert!(y.len() >= 2, "need at least two samples");
    let n_pos = y.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(Error::SingleClass);
    }

    let d = x.ncols();
    let max_features = config
        .max_features
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .clamp(1, d);

    let mut seeder = ChaCha8Rng::seed_from_u64(config.seed);
    let tree_seeds: Vec<u64> = (0..config.n_trees).map(|_| seeder.random()).collect();

    let trees: Vec<Tree> = tree_seeds
        .par_iter()
        .map(|&tree_seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
            let indices = bootstrap_indices(y, config.balanced_bootstrap, &mut rng);
            let mut builder = TreeBuilder {
                x,
                y,
                max_depth: config.max_depth,
                max_features,
                nodes: Vec::new(),
            };
            let root = builder.grow(indices, 0, &mut rng);
            debug_assert_eq!(root, 0);
            Tree {
                nodes: builder.nodes,
            }
        })
        .collect();

    Ok(ForestModel {
        trees,
        n_features: d,
    })
}

/// Mean of per-tree leaf probabilities for the positive class.
pub fn rf_predict_proba(model: &ForestModel, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if x.ncols() != model.n_features {
        return Err(Error::FeatureCountMismatch {
            expected: model.n_features,
            got: x.ncols(),
        });
    }
    let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
    Ok(rows
        .par_iter()
        .map(|row| {
            let sum: f64 = model.trees.iter().map(|t| t.predict_proba(row)).sum();
            sum / model.trees.len() as f64
        })
        .collect())
}

pub fn save_forest(path: &Path, model: &ForestModel) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);
    w.write_all(FOREST_MAGIC).map_err(io_err)?;
    w.write_u32::<LittleEndian>(model.trees.len() as u32).map_err(io_err)?;
    w.write_u32::<LittleEndian>(model.n_features as u32).map_err(io_err)?;
    for tree in &model.trees {
        w.write_u32::<LittleEndian>(tree.nodes.len() as u32).map_err(io_err)?;
        for node in &tree.nodes {
            w.write_i32::<LittleEndian>(node.feature).map_err(io_err)?;
            w.write_f64::<LittleEndian>(node.threshold).map_err(io_err)?;
            w.write_u32::<LittleEndian>(node.left).map_err(io_err)?;
            w.write_u32::<LittleEndian>(node.right).map_err(io_err)?;
            w.write_f64::<LittleEndian>(node.prob[0]).map_err(io_err)?;
            w.write_f64::<LittleEndian>(node.prob[1]).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

pub fn load_forest(path: &Path) -> Result<ForestModel> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = BufReader::new(file);
    let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != FOREST_MAGIC {
        return Err(Error::BadMagic {
            file: path.display().to_string(),
            expected: "VSRF1",
        });
    }
    let n_trees = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
    let n_features = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let n_nodes = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            nodes.push(TreeNode {
                feature: r.read_i32::<LittleEndian>().map_err(io_err)?,
                threshold: r.read_f64::<LittleEndian>().map_err(io_err)?,
                left: r.read_u32::<LittleEndian>().map_err(io_err)?,
                right: r.read_u32::<LittleEndian>().map_err(io_err)?,
                prob: [
                    r.read_f64::<LittleEndian>().map_err(io_err)?,
                    r.read_f64::<LittleEndian>().map_err(io_err)?,
                ],
            });
        }
        trees.push(Tree { nodes });
    }
    Ok(ForestModel { trees, n_features })
}
