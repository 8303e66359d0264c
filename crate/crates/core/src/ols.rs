//! Ordinary least squares with an intercept, classical standard errors and
//! Student-t 95% confidence intervals.
//!
//! The design is factored with a Householder QR; `(X'X)^-1` comes from the
//! triangular factor, never from inverting the normal equations.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dgp::PairSample;
use crate::error::{Error, Result};

/// Relative pivot size below which a column counts as linearly dependent.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub coefficient: f64,
    pub standard_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    fn new(coefficient: f64, standard_error: f64, t_crit: f64) -> Self {
        let half = t_crit * standard_error;
        Self { coefficient, standard_error, ci_low: coefficient - half, ci_high: coefficient + half }
    }

    /// Whether the confidence interval contains zero.
    pub fn ci_covers_zero(&self) -> bool {
        self.ci_low <= 0.0 && 0.0 <= self.ci_high
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub labels: Vec<String>,
    pub intercept: Estimate,
    /// One per regressor, in `labels` order.
    pub estimates: Vec<Estimate>,
    /// `n - p - 1`.
    pub dof: usize,
    pub sigma2_resid: f64,
}

impl FitResult {
    pub fn get(&self, label: &str) -> Option<&Estimate> {
        self.labels.iter().position(|l| l == label).map(|i| &self.estimates[i])
    }
}

/// Two-sided 95% critical value of Student's t with `dof` degrees of freedom.
pub fn t_critical_95(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64).expect("dof is positive").inverse_cdf(0.975)
}

/// Regresses `y` on an intercept plus `columns`.
pub fn fit(columns: &[&[f64]], y: &[f64]) -> Result<FitResult> {
    let labels = (1..=columns.len()).map(|i| format!("x{i}")).collect();
    fit_labeled(labels, columns, y)
}

pub fn fit_labeled(labels: Vec<String>, columns: &[&[f64]], y: &[f64]) -> Result<FitResult> {
    let n = y.len();
    let p = columns.len();
    if n <= p + 1 {
        return Err(Error::TooFewObservations { needed: p + 1, got: n });
    }
    for col in columns {
        if col.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: col.len() });
        }
    }
    let k = p + 1;

    let design = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
    let column_norms: Vec<f64> = (0..k).map(|j| design.column(j).norm()).collect();
    let qr = design.clone().qr();
    let r = qr.r();
    for j in 0..k {
        let pivot = r[(j, j)].abs();
        if pivot.is_nan() || pivot <= RANK_TOLERANCE * column_norms[j] {
            let column = if j == 0 { "intercept".to_string() } else { labels[j - 1].clone() };
            return Err(Error::CollinearDesign { column });
        }
    }

    let response = DVector::from_column_slice(y);
    let mut qty = response.clone();
    qr.q_tr_mul(&mut qty);
    let beta = r.solve_upper_triangular(&qty.rows(0, k).into_owned()).ok_or(Error::Singular("R"))?;

    let residuals = &response - &design * &beta;
    let dof = n - k;
    let sigma2_resid = residuals.norm_squared() / dof as f64;

    let r_inv = r.solve_upper_triangular(&DMatrix::identity(k, k)).ok_or(Error::Singular("R"))?;
    // diag((X'X)^-1) = squared row norms of R^-1.
    let t_crit = t_critical_95(dof);
    let estimate = |j: usize| {
        let var = r_inv.row(j).norm_squared() * sigma2_resid;
        Estimate::new(beta[j], var.sqrt(), t_crit)
    };

    Ok(FitResult { intercept: estimate(0), estimates: (1..k).map(estimate).collect(), labels, dof, sigma2_resid })
}

fn as_f64(column: &[u8]) -> Vec<f64> {
    column.iter().map(|&x| x as f64).collect()
}

/// Gain-score regression of `d` on `t1`, `t2` and optionally `c` and `u_prime`.
///
/// Neither flag gives the plain treatment model, `include_c` the robustness
/// test, `include_u` the infeasible oracle adjusting for the confounder.
pub fn gain_score_regression(sample: &PairSample, include_c: bool, include_u: bool) -> Result<FitResult> {
    let t1 = as_f64(&sample.t1);
    let t2 = as_f64(&sample.t2);
    let c = if include_c { as_f64(&sample.c) } else { Vec::new() };

    let mut labels = vec!["t1".to_string(), "t2".to_string()];
    let mut columns: Vec<&[f64]> = vec![&t1, &t2];
    if include_c {
        labels.push("c".into());
        columns.push(&c);
    }
    if include_u {
        labels.push("u_prime".into());
        columns.push(&sample.u_prime);
    }
    fit_labeled(labels, &columns, &sample.d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 3.0 * v).collect();
        let f = fit(&[&x], &y).unwrap();
        assert!((f.intercept.coefficient - 2.0).abs() < 1e-12);
        assert!((f.estimates[0].coefficient - 3.0).abs() < 1e-12);
        assert!(f.sigma2_resid < 1e-24);
        assert_eq!(f.dof, 18);
    }

    #[test]
    fn zero_response() {
        let x1: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let x2: Vec<f64> = (0..10).map(|i| (i % 3) as f64).collect();
        let y: Vec<f64> = x1.iter().map(|v| v - v).collect();
        let f = fit(&[&x1, &x2], &y).unwrap();
        assert!(f.estimates.iter().all(|e| e.coefficient.abs() < 1e-12));
        assert!(f.intercept.coefficient.abs() < 1e-12);
    }

    #[test]
    fn ci_uses_t_quantile() {
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v + if i % 2 == 0 { 0.3 } else { -0.3 }).collect();
        let f = fit(&[&x], &y).unwrap();
        let e = f.estimates[0];
        let t = t_critical_95(f.dof);
        assert!((e.ci_high - e.coefficient - t * e.standard_error).abs() < 1e-12);
        assert!(e.ci_low < e.ci_high);
    }

    #[test]
    fn t_critical_values() {
        // Reference quantiles of Student's t, 0.975.
        assert!((t_critical_95(10) - 2.228_138_851_964_938).abs() < 1e-9);
        assert!((t_critical_95(1) - 12.706_204_736_432_095).abs() < 1e-7);
        assert!((t_critical_95(4996) - 1.960_438_931_754_704).abs() < 1e-9);
    }

    #[test]
    fn collinear_with_intercept() {
        let x = vec![1.0; 10];
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(fit(&[&x], &y), Err(Error::CollinearDesign { .. })));
        let z = vec![0.0; 10];
        assert!(matches!(fit(&[&y, &z], &y), Err(Error::CollinearDesign { .. })));
        let double: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        assert!(matches!(fit(&[&y, &double], &y), Err(Error::CollinearDesign { .. })));
    }

    #[test]
    fn too_few_rows() {
        let x = vec![1.0, 2.0];
        assert!(matches!(fit(&[&x], &[1.0, 2.0]), Err(Error::TooFewObservations { .. })));
    }
}
