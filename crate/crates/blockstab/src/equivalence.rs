//! Indirect blockmodeling support: structural-equivalence dissimilarity,
//! agglomerative hierarchical clustering and dendrogram cutting.

use crate::network::Network;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EquivalenceError {
    #[error("dissimilarity matrix must be symmetric with non-negative entries and zero diagonal")]
    InvalidDissimilarity,
    #[error("need at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("cluster count {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("merge heights decreased under {linkage:?} linkage ({prev} -> {next})")]
    HeightInversion {
        linkage: Linkage,
        prev: f64,
        next: f64,
    },
}

/// Symmetric non-negative dissimilarities with zero diagonal.
#[derive(Debug, Clone)]
pub struct DissimilarityMatrix {
    pub labels: Vec<String>,
    values: Vec<f64>, // row-major n*n
}

impl DissimilarityMatrix {
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Result<Self, EquivalenceError> {
        let n = labels.len();
        if values.len() != n * n {
            return Err(EquivalenceError::InvalidDissimilarity);
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(EquivalenceError::InvalidDissimilarity);
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 || (v - values[j * n + i]).abs() > 1e-12 {
                    return Err(EquivalenceError::InvalidDissimilarity);
                }
            }
        }
        Ok(DissimilarityMatrix { labels, values })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }
}

/// Corrected Euclidean distance consistent with structural equivalence:
/// `d(i,j) = sqrt(sum over s != i,j of (a_is - a_js)^2)`. Mutual ties between
/// i and j never contribute, so d(i,j) = 0 exactly when i and j have
/// identical ties to all third parties.
pub fn corrected_euclidean(net: &Network) -> Result<DissimilarityMatrix, EquivalenceError> {
    let n = net.n();
    if n < 2 {
        return Err(EquivalenceError::TooFewItems(n));
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut sum = 0.0;
            for s in 0..n {
                if s == i || s == j {
                    continue;
                }
                let ai = net.has_tie(i, s) as i32;
                let aj = net.has_tie(j, s) as i32;
                let diff = (ai - aj) as f64;
                sum += diff * diff;
            }
            let d = sum.sqrt();
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    DissimilarityMatrix::new(net.vertices().to_vec(), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Linkage {
    /// Lance–Williams on squared dissimilarities with Ward coefficients.
    Ward,
    /// Maximum dissimilarity between members.
    Complete,
}

/// One agglomeration step. `left`/`right` are node ids: 0..n-1 are leaves,
/// n..2n-2 the internal nodes in merge order; `new_id` is the created node.
#[derive(Debug, Clone, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub new_id: usize,
}

/// Stepwise dendrogram with exactly n-1 merges.
#[derive(Debug, Clone)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
    pub linkage: Linkage,
}

/// Agglomerative clustering with deterministic tie-breaking: among pairs at
/// minimal distance the one with the lexicographically smallest
/// (min member label, max member label) representative pair merges first.
pub fn cluster(
    d: &DissimilarityMatrix,
    linkage: Linkage,
) -> Result<Dendrogram, EquivalenceError> {
    let n = d.n();
    if n < 2 {
        return Err(EquivalenceError::TooFewItems(n));
    }
    // Working distances: Ward operates on squared input dissimilarities.
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let v = d.get(i, j);
            dist[i * n + j] = match linkage {
                Linkage::Ward => v * v,
                Linkage::Complete => v,
            };
        }
    }

    // Tie-break on label order via ranks: rank_of[i] is the position of
    // label i in the sorted label list, so comparing ranks is comparing
    // labels.
    let rank_of: Vec<usize> = {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d.labels[a].cmp(&d.labels[b]));
        let mut rank = vec![0; n];
        for (r, &leaf) in order.iter().enumerate() {
            rank[leaf] = r;
        }
        rank
    };

    #[derive(Clone, Copy)]
    struct Active {
        node_id: usize,
        size: usize,
        min_rank: usize,
    }
    let mut active: Vec<Option<Active>> = (0..n)
        .map(|i| {
            Some(Active {
                node_id: i,
                size: 1,
                min_rank: rank_of[i],
            })
        })
        .collect();

    let mut merges = Vec::with_capacity(n - 1);
    let mut next_id = n;
    let mut prev_height = f64::NEG_INFINITY;

    for _ in 0..(n - 1) {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for i in 0..n {
            let Some(ai) = active[i] else { continue };
            for j in (i + 1)..n {
                let Some(aj) = active[j] else { continue };
                let dij = dist[i * n + j];
                let key = (
                    ai.min_rank.min(aj.min_rank),
                    ai.min_rank.max(aj.min_rank),
                );
                let better = match &best {
                    None => true,
                    Some((bd, bkey, _, _)) => dij < *bd || (dij == *bd && key < *bkey),
                };
                if better {
                    best = Some((dij, key, i, j));
                }
            }
        }
        let (height, _, i, j) = best.expect("at least one active pair");
        if height < prev_height - 1e-9 * prev_height.abs().max(1.0) {
            if linkage == Linkage::Ward {
                return Err(EquivalenceError::HeightInversion {
                    linkage,
                    prev: prev_height,
                    next: height,
                });
            }
        } else {
            prev_height = height;
        }

        let (ai, aj) = (active[i].unwrap(), active[j].unwrap());
        merges.push(Merge {
            left: ai.node_id,
            right: aj.node_id,
            height,
            new_id: next_id,
        });

        // Update distances from the merged cluster (stored at slot i) to all
        // other active clusters.
        for m in 0..n {
            if m == i || m == j {
                continue;
            }
            let Some(am) = active[m] else { continue };
            let dim = dist[i * n + m];
            let djm = dist[j * n + m];
            let new = match linkage {
                Linkage::Ward => {
                    let (ni, nj, nm) = (ai.size as f64, aj.size as f64, am.size as f64);
                    let tot = ni + nj + nm;
                    ((ni + nm) / tot) * dim + ((nj + nm) / tot) * djm
                        - (nm / tot) * dist[i * n + j]
                }
                Linkage::Complete => dim.max(djm),
            };
            dist[i * n + m] = new;
            dist[m * n + i] = new;
        }

        active[i] = Some(Active {
            node_id: next_id,
            size: ai.size + aj.size,
            min_rank: ai.min_rank.min(aj.min_rank),
        });
        active[j] = None;
        next_id += 1;
    }

    Ok(Dendrogram {
        n_leaves: n,
        merges,
        linkage,
    })
}

/// Ward clustering of a dissimilarity matrix.
pub fn ward_cluster(d: &DissimilarityMatrix) -> Result<Dendrogram, EquivalenceError> {
    cluster(d, Linkage::Ward)
}

/// Cuts the dendrogram into k flat clusters by removing the k-1 highest
/// merges. Clusters are returned in order of their smallest member label and
/// implicitly numbered 1..k; members are sorted.
pub fn cut_dendrogram(
    dend: &Dendrogram,
    labels: &[String],
    k: usize,
) -> Result<Vec<Vec<String>>, EquivalenceError> {
    let n = dend.n_leaves;
    assert_eq!(labels.len(), n, "label count must match leaf count");
    if k < 1 || k > n {
        return Err(EquivalenceError::KOutOfRange { k, n });
    }
    // Apply all but the last k-1 merges.
    let mut parent: Vec<usize> = (0..(2 * n - 1)).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for merge in &dend.merges[..(n - k)] {
        let a = find(&mut parent, merge.left);
        let b = find(&mut parent, merge.right);
        parent[a] = merge.new_id;
        parent[b] = merge.new_id;
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<String>> = Default::default();
    for (leaf, label) in labels.iter().enumerate() {
        let root = find(&mut parent, leaf);
        groups.entry(root).or_default().push(label.clone());
    }
    let mut clusters: Vec<Vec<String>> = groups
        .into_values()
        .map(|mut members| {
            members.sort();
            members
        })
        .collect();
    clusters.sort_by(|a, b| a[0].cmp(&b[0]));
    assert_eq!(clusters.len(), k);
    Ok(clusters)
}

/// Serialized dendrogram: `{merges: [[left, right, height], ...]}`.
pub fn dendrogram_json(dend: &Dendrogram) -> serde_json::Value {
    serde_json::json!({
        "merges": dend
            .merges
            .iter()
            .map(|m| serde_json::json!([m.left, m.right, m.height]))
            .collect::<Vec<_>>(),
    })
}

/// Plain-text indented rendering for terminal inspection.
pub fn render_dendrogram(dend: &Dendrogram, labels: &[String]) -> String {
    fn walk(
        node: usize,
        n: usize,
        merges: &[Merge],
        labels: &[String],
        depth: usize,
        out: &mut String,
    ) {
        let indent = "  ".repeat(depth);
        if node < n {
            out.push_str(&format!("{indent}{}\n", labels[node]));
        } else {
            let m = &merges[node - n];
            out.push_str(&format!("{indent}+ h={:.4}\n", m.height));
            walk(m.left, n, merges, labels, depth + 1, out);
            walk(m.right, n, merges, labels, depth + 1, out);
        }
    }
    let mut out = String::new();
    if let Some(root) = dend.merges.last() {
        walk(root.new_id, dend.n_leaves, &dend.merges, labels, 0, &mut out);
    }
    out
}
