//! Gap statistic for choosing the number of clusters.
//!
//! `W_k` is the pooled within-cluster dispersion `sum_r D_r / (2 n_r)` where
//! `D_r` sums the squared Euclidean distances over all ordered pairs of a
//! cluster. Reference data sets are drawn uniformly from the per-column
//! bounding box of the observed features and clustered with the same Ward
//! procedure; the chosen k is the smallest one satisfying the one-standard-
//! error rule `Gap(k) >= Gap(k+1) - s_{k+1}`.

use super::{sq_euclidean, ward_assignments, AnalysisError};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct GapResult {
    pub chosen_k: usize,
    /// Gap(k) for k = 1..=k_max (index 0 is k = 1).
    pub gap_values: Vec<f64>,
    /// s_k values matching `gap_values`.
    pub s_values: Vec<f64>,
}

/// Pooled within-cluster dispersion for one assignment.
fn w_k(rows: &[Vec<f64>], assignment: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..rows.len()).filter(|&i| assignment[i] == c).collect();
        if members.len() < 2 {
            continue;
        }
        let mut d_r = 0.0;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                d_r += 2.0 * sq_euclidean(&rows[i], &rows[j]);
            }
        }
        total += d_r / (2.0 * members.len() as f64);
    }
    total
}

fn log_w_profile(rows: &[Vec<f64>], k_max: usize) -> Result<Vec<f64>, AnalysisError> {
    (1..=k_max)
        .map(|k| {
            let assignment = ward_assignments(rows, k)?;
            Ok(w_k(rows, &assignment, k).ln())
        })
        .collect()
}

pub fn gap_statistic(
    rows: &[Vec<f64>],
    k_max: usize,
    reference_sets: usize,
    seed: u64,
) -> Result<GapResult, AnalysisError> {
    let n = rows.len();
    if k_max >= n {
        return Err(AnalysisError::KMaxTooLarge { k_max, n });
    }
    if reference_sets == 0 {
        return Err(AnalysisError::NoReferenceSets);
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(AnalysisError::DimensionMismatch);
    }

    let observed = log_w_profile(rows, k_max)?;

    // Bounding box of the observed features.
    let mut lo = vec![f64::INFINITY; p];
    let mut hi = vec![f64::NEG_INFINITY; p];
    for row in rows {
        for j in 0..p {
            lo[j] = lo[j].min(row[j]);
            hi[j] = hi[j].max(row[j]);
        }
    }

    let reference_profiles: Vec<Vec<f64>> = (0..reference_sets)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(b as u64));
            let sample: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..p)
                        .map(|j| {
                            if hi[j] > lo[j] {
                                rng.gen_range(lo[j]..=hi[j])
                            } else {
                                lo[j]
                            }
                        })
                        .collect()
                })
                .collect();
            log_w_profile(&sample, k_max)
        })
        .collect::<Result<_, _>>()?;

    let b = reference_sets as f64;
    let mut gap_values = Vec::with_capacity(k_max);
    let mut s_values = Vec::with_capacity(k_max);
    for ki in 0..k_max {
        let ref_logs: Vec<f64> = reference_profiles.iter().map(|prof| prof[ki]).collect();
        let mean = ref_logs.iter().sum::<f64>() / b;
        let sd = (ref_logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / b).sqrt();
        gap_values.push(mean - observed[ki]);
        s_values.push(sd * (1.0 + 1.0 / b).sqrt());
    }

    let mut chosen_k = k_max;
    for k in 1..k_max {
        if gap_values[k - 1] >= gap_values[k] - s_values[k] {
            chosen_k = k;
            break;
        }
    }
    Ok(GapResult {
        chosen_k,
        gap_values,
        s_values,
    })
}
