//! Discipline-level statistics: feature assembly, standardization, Ward
//! clustering of disciplines with gap-statistic model selection, cluster
//! summaries and OLS regression with diagnostics.

pub mod gap;
pub mod regression;

use crate::blockmodel::BlockmodelSummary;
use crate::equivalence::{self, DissimilarityMatrix};
use crate::stability::StabilityReport;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("rows have inconsistent dimensions")]
    DimensionMismatch,
    #[error("design matrix is singular; dependent columns: {0:?}")]
    SingularDesign(Vec<String>),
    #[error("need more observations ({n}) than parameters ({p})")]
    TooFewObservations { n: usize, p: usize },
    #[error("VIF needs at least 2 predictors, got {0}")]
    TooFewPredictors(usize),
    #[error("k_max = {k_max} must be below the number of rows {n}")]
    KMaxTooLarge { k_max: usize, n: usize },
    #[error("gap statistic needs at least one reference set")]
    NoReferenceSets,
    #[error("no discipline has a complete index vector")]
    NoCompleteRows,
    #[error(transparent)]
    Equivalence(#[from] equivalence::EquivalenceError),
}

/// Per-discipline feature row feeding the clustering and the regressions.
#[derive(Debug, Clone, Serialize)]
pub struct DisciplineFeatures {
    pub discipline: String,
    pub field: Option<String>,
    pub n1: usize,
    pub n2: usize,
    /// 100 * (n2 - n1) / n1.
    pub growth_n: f64,
    pub density1: f64,
    pub density2: f64,
    /// 100 * (density2 - density1) / density1.
    pub growth_density: f64,
    pub n_cores1: usize,
    pub n_cores2: usize,
    pub avg_core_size1: f64,
    pub avg_core_size2: f64,
    pub pct_semi1: f64,
    pub pct_semi2: f64,
    pub pct_per1: f64,
    pub pct_per2: f64,
    /// Percentage of researchers in cores, averaged over the two periods.
    pub pct_cores: f64,
    pub bridge_present1: bool,
    /// Fractions in [0, 1].
    pub pct_into: Option<f64>,
    pub pct_out: Option<f64>,
    /// The nine adjusted stability indices in report column order.
    pub indices: [Option<f64>; 9],
}

/// Everything the feature assembly needs about one discipline.
#[derive(Debug, Clone)]
pub struct DisciplineInput {
    pub discipline: String,
    pub field: Option<String>,
    pub n1: usize,
    pub n2: usize,
    pub density1: f64,
    pub density2: f64,
    pub summary1: BlockmodelSummary,
    pub summary2: BlockmodelSummary,
    pub bridge_present1: bool,
    pub pct_into: Option<f64>,
    pub pct_out: Option<f64>,
    pub report: StabilityReport,
}

fn growth_pct(before: f64, after: f64) -> f64 {
    if before == 0.0 {
        0.0
    } else {
        100.0 * (after - before) / before
    }
}

pub fn assemble_features(inputs: &[DisciplineInput]) -> Vec<DisciplineFeatures> {
    inputs
        .iter()
        .map(|d| {
            let pct_cores1 = 100.0 - d.summary1.pct_semi_periphery - d.summary1.pct_periphery;
            let pct_cores2 = 100.0 - d.summary2.pct_semi_periphery - d.summary2.pct_periphery;
            DisciplineFeatures {
                discipline: d.discipline.clone(),
                field: d.field.clone(),
                n1: d.n1,
                n2: d.n2,
                growth_n: growth_pct(d.n1 as f64, d.n2 as f64),
                density1: d.density1,
                density2: d.density2,
                growth_density: growth_pct(d.density1, d.density2),
                n_cores1: d.summary1.n_cores,
                n_cores2: d.summary2.n_cores,
                avg_core_size1: d.summary1.avg_core_size,
                avg_core_size2: d.summary2.avg_core_size,
                pct_semi1: d.summary1.pct_semi_periphery,
                pct_semi2: d.summary2.pct_semi_periphery,
                pct_per1: d.summary1.pct_periphery,
                pct_per2: d.summary2.pct_periphery,
                pct_cores: 0.5 * (pct_cores1 + pct_cores2),
                bridge_present1: d.bridge_present1,
                pct_into: d.pct_into,
                pct_out: d.pct_out,
                indices: d.report.adjusted_values(),
            }
        })
        .collect()
}

/// Column-standardized matrix (sample standard deviation, n-1 denominator).
#[derive(Debug, Clone)]
pub struct Standardized {
    pub data: Vec<Vec<f64>>,
    /// Columns whose variance was zero; their entries are set to 0.
    pub zero_variance_cols: Vec<usize>,
}

pub fn standardize(matrix: &[Vec<f64>]) -> Result<Standardized, AnalysisError> {
    let n = matrix.len();
    if n < 2 {
        return Err(AnalysisError::TooFewRows { needed: 2, got: n });
    }
    let p = matrix[0].len();
    if matrix.iter().any(|row| row.len() != p) {
        return Err(AnalysisError::DimensionMismatch);
    }
    let mut data = matrix.to_vec();
    let mut zero_variance_cols = Vec::new();
    for j in 0..p {
        let mean = matrix.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var = matrix
            .iter()
            .map(|r| (r[j] - mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64;
        if var <= 0.0 {
            zero_variance_cols.push(j);
            for row in &mut data {
                row[j] = 0.0;
            }
        } else {
            let sd = var.sqrt();
            for row in &mut data {
                row[j] = (row[j] - mean) / sd;
            }
        }
    }
    Ok(Standardized {
        data,
        zero_variance_cols,
    })
}

pub(crate) fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean dissimilarities between feature rows; Ward clustering of this
/// matrix operates on the squared distances.
pub(crate) fn euclidean_matrix(rows: &[Vec<f64>]) -> DissimilarityMatrix {
    let n = rows.len();
    let labels: Vec<String> = (0..n).map(|i| format!("{i:06}")).collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sq_euclidean(&rows[i], &rows[j]).sqrt();
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    DissimilarityMatrix::new(labels, values).expect("constructed symmetric matrix")
}

/// Ward assignment of rows into k clusters; cluster ids are 0-based and
/// arbitrary at this stage.
pub(crate) fn ward_assignments(
    rows: &[Vec<f64>],
    k: usize,
) -> Result<Vec<usize>, AnalysisError> {
    let d = euclidean_matrix(rows);
    let dend = equivalence::ward_cluster(&d)?;
    let clusters = equivalence::cut_dendrogram(&dend, &d.labels, k)?;
    let mut assignment = vec![0usize; rows.len()];
    for (c, members) in clusters.iter().enumerate() {
        for label in members {
            let idx: usize = label.parse().expect("labels are row indices");
            assignment[idx] = c;
        }
    }
    Ok(assignment)
}

#[derive(Debug, Clone)]
pub struct GapConfig {
    pub k_max: usize,
    pub reference_sets: usize,
    pub seed: u64,
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig {
            k_max: 6,
            reference_sets: 100,
            seed: 20100101,
        }
    }
}

/// Discipline clustering result: 1-based cluster ids ordered from least to
/// most stable.
#[derive(Debug, Clone)]
pub struct DisciplineClustering {
    pub assignments: Vec<u32>,
    pub k: usize,
    /// Gap values per k when the gap statistic chose k.
    pub gap_values: Option<Vec<f64>>,
}

/// Clusters standardized index vectors with Ward + squared Euclidean.
/// `order_key` (the unstandardized ARI per row) orders the clusters so that
/// cluster 1 has the lowest mean, i.e. is the least stable.
pub fn cluster_disciplines(
    standardized: &[Vec<f64>],
    order_key: &[f64],
    k: Option<usize>,
    gap_config: &GapConfig,
) -> Result<DisciplineClustering, AnalysisError> {
    let n = standardized.len();
    if n < 2 {
        return Err(AnalysisError::TooFewRows { needed: 2, got: n });
    }
    assert_eq!(order_key.len(), n, "order key must cover every row");
    let (k, gap_values) = match k {
        Some(k) => (k, None),
        None => {
            let gap = gap::gap_statistic(
                standardized,
                gap_config.k_max.min(n - 1),
                gap_config.reference_sets,
                gap_config.seed,
            )?;
            (gap.chosen_k, Some(gap.gap_values))
        }
    };
    let raw = ward_assignments(standardized, k)?;

    // Order clusters by mean of the order key, ascending.
    let mut stats: Vec<(usize, f64)> = (0..k)
        .map(|c| {
            let members: Vec<usize> = (0..n).filter(|&i| raw[i] == c).collect();
            let mean = members.iter().map(|&i| order_key[i]).sum::<f64>()
                / members.len().max(1) as f64;
            (c, mean)
        })
        .collect();
    stats.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let mut rank_of = vec![0u32; k];
    for (rank, &(c, _)) in stats.iter().enumerate() {
        rank_of[c] = rank as u32 + 1;
    }
    Ok(DisciplineClustering {
        assignments: raw.iter().map(|&c| rank_of[c]).collect(),
        k,
        gap_values,
    })
}

/// Per-cluster means reported in the summary table. Percentages are on the
/// 0..100 scale; missing values are skipped in the averages.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterSummary {
    pub cluster: u32,
    pub n_members: usize,
    pub mean_pct_into: Option<f64>,
    pub mean_pct_out: Option<f64>,
    pub mean_core_size: f64,
    pub mean_researchers: f64,
}

pub fn cluster_summary(
    assignments: &[u32],
    features: &[DisciplineFeatures],
) -> Vec<ClusterSummary> {
    assert_eq!(assignments.len(), features.len());
    let max_cluster = assignments.iter().copied().max().unwrap_or(0);
    (1..=max_cluster)
        .map(|cluster| {
            let members: Vec<&DisciplineFeatures> = assignments
                .iter()
                .zip(features)
                .filter(|(&a, _)| a == cluster)
                .map(|(_, f)| f)
                .collect();
            let mean_opt = |extract: &dyn Fn(&DisciplineFeatures) -> Option<f64>| {
                let values: Vec<f64> = members.iter().filter_map(|f| extract(f)).collect();
                if values.is_empty() {
                    None
                } else {
                    Some(values.iter().sum::<f64>() / values.len() as f64)
                }
            };
            let mean = |extract: &dyn Fn(&DisciplineFeatures) -> f64| {
                members.iter().map(|f| extract(f)).sum::<f64>() / members.len().max(1) as f64
            };
            ClusterSummary {
                cluster,
                n_members: members.len(),
                mean_pct_into: mean_opt(&|f| f.pct_into.map(|v| 100.0 * v)),
                mean_pct_out: mean_opt(&|f| f.pct_out.map(|v| 100.0 * v)),
                mean_core_size: mean(&|f| 0.5 * (f.avg_core_size1 + f.avg_core_size2)),
                mean_researchers: mean(&|f| 0.5 * (f.n1 + f.n2) as f64),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::{IndexValue, Scoping};

    fn dummy_report(values: [f64; 9]) -> StabilityReport {
        let iv = |v: f64| IndexValue {
            raw: Some(v),
            adjusted: Some(v),
            skipped_replicates: 0,
        };
        StabilityReport {
            ari: iv(values[0]),
            awi_split: iv(values[1]),
            awi_merge: iv(values[2]),
            mari1: iv(values[3]),
            mawis1: iv(values[4]),
            mawim1: iv(values[5]),
            mari2: iv(values[6]),
            mawis2: iv(values[7]),
            mawim2: iv(values[8]),
            persistent_counts: None,
            mode1_counts: None,
            mode2_counts: None,
            scoping: Scoping::Cores,
            replicates: 0,
            seed: 0,
        }
    }

    fn summary(
        n: usize,
        n_cores: usize,
        pct_semi: f64,
        pct_per: f64,
        avg: f64,
    ) -> BlockmodelSummary {
        BlockmodelSummary {
            n,
            n_cores,
            pct_semi_periphery: pct_semi,
            pct_periphery: pct_per,
            avg_core_size: avg,
            no_cores: n_cores == 0,
        }
    }

    #[test]
    fn growth_formulas() {
        let input = DisciplineInput {
            discipline: "toy".into(),
            field: None,
            n1: 100,
            n2: 134,
            density1: 0.05,
            density2: 0.04,
            summary1: summary(100, 10, 40.0, 20.0, 4.0),
            summary2: summary(134, 12, 50.0, 10.0, 4.5),
            bridge_present1: true,
            pct_into: Some(0.5),
            pct_out: Some(0.25),
            report: dummy_report([0.5; 9]),
        };
        let f = &assemble_features(&[input])[0];
        assert!((f.growth_n - 34.0).abs() < 1e-12);
        assert!((f.growth_density - (-20.0)).abs() < 1e-9);
        // pct_cores: period 1 has 40% in cores, period 2 has 40%.
        assert!((f.pct_cores - 40.0).abs() < 1e-12);
        assert_eq!(f.indices[0], Some(0.5));

        let equal = DisciplineInput {
            n1: 50,
            n2: 50,
            ..base_input()
        };
        let f = &assemble_features(&[equal])[0];
        assert_eq!(f.growth_n, 0.0);
    }

    fn base_input() -> DisciplineInput {
        DisciplineInput {
            discipline: "x".into(),
            field: None,
            n1: 50,
            n2: 50,
            density1: 0.1,
            density2: 0.1,
            summary1: summary(50, 5, 30.0, 30.0, 4.0),
            summary2: summary(50, 5, 30.0, 30.0, 4.0),
            bridge_present1: false,
            pct_into: None,
            pct_out: None,
            report: dummy_report([0.0; 9]),
        }
    }

    #[test]
    fn standardize_hand_example() {
        let s = standardize(&[vec![1.0], vec![3.0]]).unwrap();
        assert!((s.data[0][0] + 0.7071067811865475).abs() < 1e-12);
        assert!((s.data[1][0] - 0.7071067811865475).abs() < 1e-12);
        assert!(s.zero_variance_cols.is_empty());
    }

    #[test]
    fn standardize_flags_constant_columns() {
        let s = standardize(&[vec![2.0, 1.0], vec![2.0, 3.0], vec![2.0, 5.0]]).unwrap();
        assert_eq!(s.zero_variance_cols, vec![0]);
        assert!(s.data.iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn standardize_zero_mean_unit_sd() {
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|i| vec![i as f64 * 2.5 - 3.0, (i as f64).powi(2)])
            .collect();
        let s = standardize(&rows).unwrap();
        for j in 0..2 {
            let mean: f64 = s.data.iter().map(|r| r[j]).sum::<f64>() / 7.0;
            assert!(mean.abs() < 1e-12);
            let var: f64 = s.data.iter().map(|r| r[j] * r[j]).sum::<f64>() / 6.0;
            assert!((var - 1.0).abs() < 1e-12);
        }
        assert!(standardize(&[vec![1.0]]).is_err());
    }

    #[test]
    fn planted_profiles_are_recovered() {
        // Three index profiles duplicated 5x each.
        let profiles = [vec![0.1, 0.1, 0.1], vec![0.5, 0.5, 0.5], vec![0.9, 0.9, 0.9]];
        let mut rows = Vec::new();
        let mut tiers = Vec::new();
        for (t, p) in profiles.iter().enumerate() {
            for i in 0..5 {
                let mut row = p.clone();
                // tiny deterministic jitter keeps the rows distinct
                row[0] += i as f64 * 1e-4;
                rows.push(row);
                tiers.push(t);
            }
        }
        let std = standardize(&rows).unwrap();
        let order_key: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let clustering =
            cluster_disciplines(&std.data, &order_key, Some(3), &GapConfig::default()).unwrap();
        // Same tier -> same cluster, and cluster 1 is the low tier.
        for (i, &t) in tiers.iter().enumerate() {
            assert_eq!(clustering.assignments[i], t as u32 + 1);
        }

        let single =
            cluster_disciplines(&std.data, &order_key, Some(1), &GapConfig::default()).unwrap();
        assert!(single.assignments.iter().all(|&a| a == 1));
    }

    #[test]
    fn cluster_ordering_follows_order_key() {
        // Two blobs; the one with higher key must become cluster 2.
        let rows = vec![
            vec![10.0, 10.0],
            vec![10.1, 10.0],
            vec![0.0, 0.0],
            vec![0.1, 0.0],
        ];
        let std = standardize(&rows).unwrap();
        let order_key = vec![0.9, 0.8, 0.1, 0.2];
        let clustering =
            cluster_disciplines(&std.data, &order_key, Some(2), &GapConfig::default()).unwrap();
        assert_eq!(clustering.assignments, vec![2, 2, 1, 1]);
    }

    #[test]
    fn summary_means() {
        let mk = |n1: usize, avg1: f64, into: Option<f64>| DisciplineInput {
            n1,
            n2: n1 + 10,
            summary1: summary(n1, 3, 30.0, 30.0, avg1),
            summary2: summary(n1 + 10, 3, 30.0, 30.0, avg1 + 1.0),
            pct_into: into,
            pct_out: into.map(|v| v / 2.0),
            ..base_input()
        };
        let features = assemble_features(&[
            mk(100, 4.0, Some(0.5)),
            mk(200, 6.0, Some(0.3)),
            mk(50, 2.0, None),
        ]);
        let summaries = cluster_summary(&[1, 1, 2], &features);
        assert_eq!(summaries.len(), 2);
        let c1 = &summaries[0];
        assert_eq!(c1.n_members, 2);
        // mean of (4.0+5.0)/2 and (6.0+7.0)/2
        assert!((c1.mean_core_size - 5.5).abs() < 1e-12);
        // mean of (100+110)/2 and (200+210)/2
        assert!((c1.mean_researchers - 155.0).abs() < 1e-12);
        assert!((c1.mean_pct_into.unwrap() - 40.0).abs() < 1e-12);
        let c2 = &summaries[1];
        assert_eq!(c2.n_members, 1);
        assert_eq!(c2.mean_pct_into, None);
    }
}
