//! Ordinary least squares with the diagnostics used in the discipline
//! analysis: coefficient standard errors, two-sided t p-values, adjusted R²,
//! the overall F test and variance inflation factors.

use super::{AnalysisError, DisciplineFeatures};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

#[derive(Debug, Clone, Serialize)]
pub struct RegressionResult {
    pub column_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: f64,
    /// (model df, residual df).
    pub f_df: (usize, usize),
    pub f_p_value: f64,
    pub n_obs: usize,
}

const RANK_EPS: f64 = 1e-10;

/// Columns that are linear combinations of the preceding ones, found by
/// modified Gram-Schmidt.
fn dependent_columns(x: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let n = x.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut offending = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let mut v = DVector::from_iterator(n, x.column(j).iter().copied());
        let scale = v.norm().max(1.0);
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        if v.norm() <= RANK_EPS * scale {
            offending.push(name.clone());
        } else {
            let norm = v.norm();
            basis.push(v / norm);
        }
    }
    offending
}

/// Least-squares fit of `y` on the design matrix `x` (the caller includes
/// the intercept column). Coefficient covariance comes from
/// `sigma^2 (X'X)^-1`; the F statistic tests against the intercept-only
/// model.
pub fn ols_fit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
) -> Result<RegressionResult, AnalysisError> {
    let n = x.nrows();
    let p = x.ncols();
    assert_eq!(names.len(), p, "one name per design column");
    assert_eq!(y.len(), n, "response length must match rows");
    if n <= p {
        return Err(AnalysisError::TooFewObservations { n, p });
    }
    let offending = dependent_columns(x, names);
    if !offending.is_empty() {
        return Err(AnalysisError::SingularDesign(offending));
    }

    let svd = x.clone().svd(true, true);
    let beta = svd
        .solve(y, RANK_EPS)
        .map_err(|_| AnalysisError::SingularDesign(vec!["<svd failed>".into()]))?;
    let residuals = y - x * &beta;
    let rss: f64 = residuals.norm_squared();
    let df_resid = n - p;
    let sigma2 = rss / df_resid as f64;

    let xtx = x.transpose() * x;
    let xtx_inv = xtx
        .try_inverse()
        .ok_or_else(|| AnalysisError::SingularDesign(vec!["<X'X not invertible>".into()]))?;
    let std_errors: Vec<f64> = (0..p).map(|j| (sigma2 * xtx_inv[(j, j)]).sqrt()).collect();

    let t_dist = StudentsT::new(0.0, 1.0, df_resid as f64).expect("positive df");
    let p_values: Vec<f64> = beta
        .iter()
        .zip(&std_errors)
        .map(|(&b, &se)| {
            if se > 0.0 {
                2.0 * (1.0 - t_dist.cdf((b / se).abs()))
            } else if b.abs() > 0.0 {
                0.0
            } else {
                1.0
            }
        })
        .collect();

    let y_mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    let r_squared = if tss > 0.0 {
        1.0 - rss / tss
    } else if rss <= RANK_EPS {
        1.0
    } else {
        0.0
    };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df_resid as f64;
    let df_model = p - 1;
    let (f_statistic, f_p_value) = if df_model == 0 {
        (f64::NAN, f64::NAN)
    } else if (1.0 - r_squared).abs() < 1e-15 {
        (f64::INFINITY, 0.0)
    } else {
        let f = (r_squared / df_model as f64) / ((1.0 - r_squared) / df_resid as f64);
        let f_dist = FisherSnedecor::new(df_model as f64, df_resid as f64).expect("positive df");
        (f, 1.0 - f_dist.cdf(f))
    };

    Ok(RegressionResult {
        column_names: names.to_vec(),
        coefficients: beta.iter().copied().collect(),
        std_errors,
        p_values,
        r_squared,
        adj_r_squared,
        f_statistic,
        f_df: (df_model, df_resid),
        f_p_value,
        n_obs: n,
    })
}

/// Variance inflation factor per predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Vif {
    Finite(f64),
    /// Perfect collinearity with the other predictors.
    Infinite,
}

/// `VIF_j = 1 / (1 - R²_j)` from regressing predictor j on the remaining
/// predictors plus an intercept. `x` holds the predictors without the
/// intercept column.
pub fn vif(x: &DMatrix<f64>) -> Result<Vec<Vif>, AnalysisError> {
    let n = x.nrows();
    let p = x.ncols();
    if p < 2 {
        return Err(AnalysisError::TooFewPredictors(p));
    }
    if n <= p {
        return Err(AnalysisError::TooFewObservations { n, p });
    }
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        let mut design = DMatrix::zeros(n, p); // intercept + others
        for i in 0..n {
            design[(i, 0)] = 1.0;
        }
        let mut col = 1;
        for k in 0..p {
            if k == j {
                continue;
            }
            for i in 0..n {
                design[(i, col)] = x[(i, k)];
            }
            col += 1;
        }
        let target = DVector::from_iterator(n, x.column(j).iter().copied());
        let names: Vec<String> = (0..p).map(|c| format!("c{c}")).collect();
        match ols_fit(&design, &target, &names) {
            Ok(fit) => {
                if 1.0 - fit.r_squared < 1e-12 {
                    out.push(Vif::Infinite);
                } else {
                    out.push(Vif::Finite(1.0 / (1.0 - fit.r_squared)));
                }
            }
            // The other predictors are themselves collinear; predictor j is
            // perfectly explained iff it lies in their span, which the
            // singular fit cannot tell us, so fall back to a rank check.
            Err(AnalysisError::SingularDesign(_)) => {
                let with = {
                    let mut m = design.clone();
                    m = m.insert_column(p, 0.0);
                    for i in 0..n {
                        m[(i, p)] = target[i];
                    }
                    m
                };
                let rank_without = design.clone().svd(false, false).rank(RANK_EPS);
                let rank_with = with.svd(false, false).rank(RANK_EPS);
                if rank_with == rank_without {
                    out.push(Vif::Infinite);
                } else {
                    out.push(Vif::Finite(1.0));
                }
            }
            Err(other) => return Err(other),
        }
    }
    Ok(out)
}

/// The regression model of the discipline analysis: response MAWIS2,
/// network and blockmodel controls, optionally the out-of-cores share
/// (model 2), and field dummies against a reference field when every row
/// carries a field.
pub struct ModelDesign {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub names: Vec<String>,
    pub disciplines: Vec<String>,
    pub skipped: Vec<String>,
}

pub fn model_design(
    features: &[DisciplineFeatures],
    include_pct_out: bool,
    reference_field: &str,
) -> Result<ModelDesign, AnalysisError> {
    let mut usable = Vec::new();
    let mut skipped = Vec::new();
    for f in features {
        let response = f.indices[7]; // MAWIS2
        let complete =
            response.is_some() && (!include_pct_out || f.pct_out.is_some());
        if complete {
            usable.push(f);
        } else {
            skipped.push(f.discipline.clone());
        }
    }
    let all_have_fields = !usable.is_empty() && usable.iter().all(|f| f.field.is_some());
    let field_levels: Vec<String> = if all_have_fields {
        let mut levels: Vec<String> = usable
            .iter()
            .filter_map(|f| f.field.clone())
            .filter(|f| f != reference_field)
            .collect();
        levels.sort();
        levels.dedup();
        levels
    } else {
        Vec::new()
    };

    let mut names = vec![
        "intercept".to_string(),
        "n_researchers_p1".to_string(),
        "growth_n".to_string(),
        "growth_density".to_string(),
        "avg_core_size_p1".to_string(),
        "pct_cores".to_string(),
        "bridge_p1".to_string(),
    ];
    if include_pct_out {
        names.push("pct_out_of_cores".to_string());
    }
    names.extend(field_levels.iter().map(|f| format!("field_{f}")));

    let p = names.len();
    let n = usable.len();
    if n <= p {
        return Err(AnalysisError::TooFewObservations { n, p });
    }
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    for (i, f) in usable.iter().enumerate() {
        let mut col = 0;
        let mut push = |x: &mut DMatrix<f64>, v: f64| {
            x[(i, col)] = v;
            col += 1;
        };
        push(&mut x, 1.0);
        push(&mut x, f.n1 as f64);
        push(&mut x, f.growth_n);
        push(&mut x, f.growth_density);
        push(&mut x, f.avg_core_size1);
        push(&mut x, f.pct_cores);
        push(&mut x, f.bridge_present1 as u8 as f64);
        if include_pct_out {
            push(&mut x, f.pct_out.unwrap());
        }
        for level in &field_levels {
            push(
                &mut x,
                (f.field.as_deref() == Some(level.as_str())) as u8 as f64,
            );
        }
        y[i] = usable[i].indices[7].unwrap();
    }
    Ok(ModelDesign {
        x,
        y,
        names,
        disciplines: usable.iter().map(|f| f.discipline.clone()).collect(),
        skipped,
    })
}
