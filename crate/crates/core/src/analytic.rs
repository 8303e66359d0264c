//! Exact identification results for the linear (non-thresholded) models.
//!
//! Two independent routes compute implied covariances:
//!
//! * [`trek_covariance`] sums, over every trek between two variables, the
//!   product of the edge coefficients times the variance of the apex (or the
//!   association coefficient when the apex is a bidirected edge). Legs of a
//!   trek share no variable other than the apex.
//! * [`implied_covariance_matrix`] evaluates `(I - B)^-1 Ω (I - B)^-T`, with the
//!   residual variances in `Ω` solved so every variable has the total variance
//!   recorded in the model.
//!
//! Population partial regression coefficients follow as `Σ_XX^-1 σ_XY`.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sem_graph::{topological_order, BidirectedEdge, DirectedEdge, ScenarioConfig, StructuralModel, Var};

/// Condition number above which a regressor set is flagged as near-collinear.
pub const NEAR_COLLINEAR_CONDITION: f64 = 1e8;

/// Condition number treated as exact collinearity.
pub const SINGULAR_CONDITION: f64 = 1e14;

/// A collider-free path between two variables: up the left leg, optionally
/// across one association, then down the right leg.
#[derive(Debug, Clone, PartialEq)]
pub struct Trek {
    pub from: Var,
    pub to: Var,
    /// Edges walked against their direction, starting at `from`.
    pub left_leg: Vec<DirectedEdge>,
    pub bridge: Option<BidirectedEdge>,
    /// Edges walked along their direction, ending at `to`.
    pub right_leg: Vec<DirectedEdge>,
    pub product: f64,
}

impl Trek {
    /// Top of the left leg.
    pub fn left_apex(&self) -> Var {
        self.left_leg.last().map_or(self.from, |e| e.source)
    }

    /// Top of the right leg.
    pub fn right_apex(&self) -> Var {
        self.right_leg.first().map_or(self.to, |e| e.source)
    }

    /// Variables visited from `from` to `to`.
    pub fn nodes(&self) -> Vec<Var> {
        let mut nodes = vec![self.from];
        nodes.extend(self.left_leg.iter().map(|e| e.source));
        if self.bridge.is_some() {
            nodes.push(self.right_apex());
        }
        nodes.extend(self.right_leg.iter().map(|e| e.target));
        nodes
    }

    fn sort_key(&self) -> Vec<(Var, Var, u8)> {
        let mut key: Vec<(Var, Var, u8)> = self.left_leg.iter().map(|e| (e.target, e.source, 0)).collect();
        if self.bridge.is_some() {
            key.push((self.left_apex(), self.right_apex(), 1));
        }
        key.extend(self.right_leg.iter().map(|e| (e.source, e.target, 2)));
        key
    }
}

impl fmt::Display for Trek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.from)?;
        for e in &self.left_leg {
            write!(f, " <- {}", e.source)?;
        }
        if self.bridge.is_some() {
            write!(f, " <-> {}", self.right_apex())?;
        }
        for e in &self.right_leg {
            write!(f, " -> {}", e.target)?;
        }
        Ok(())
    }
}

/// All directed paths `from -> ... -> to`; the empty path when they coincide.
fn directed_paths(model: &StructuralModel, from: Var, to: Var) -> Vec<Vec<DirectedEdge>> {
    fn walk(
        model: &StructuralModel,
        at: Var,
        to: Var,
        stack: &mut Vec<DirectedEdge>,
        out: &mut Vec<Vec<DirectedEdge>>,
    ) {
        if at == to {
            out.push(stack.clone());
            return;
        }
        for e in model.children(at) {
            if e.target == e.source || stack.iter().any(|s| s.source == e.target) {
                continue;
            }
            stack.push(*e);
            walk(model, e.target, to, stack, out);
            stack.pop();
        }
    }
    let mut out = Vec::new();
    walk(model, from, to, &mut Vec::new(), &mut out);
    out
}

fn path_nodes(top: Var, path: &[DirectedEdge]) -> BTreeSet<Var> {
    std::iter::once(top).chain(path.iter().map(|e| e.target)).collect()
}

fn leg_product(path: &[DirectedEdge]) -> f64 {
    path.iter().map(|e| e.coefficient).product()
}

/// Every trek between `x` and `y`, sorted by edge sequence.
pub fn enumerate_treks(model: &StructuralModel, x: Var, y: Var) -> Result<Vec<Trek>> {
    for v in [x, y] {
        if !model.contains(v) {
            return Err(Error::MissingVariable(v));
        }
    }

    let mut treks = Vec::new();
    for &top in model.variables() {
        let lefts = directed_paths(model, top, x);
        if lefts.is_empty() {
            continue;
        }
        let rights = directed_paths(model, top, y);
        if rights.is_empty() {
            continue;
        }
        let apex_variance = variance_of(model, top)?;
        for left in &lefts {
            let left_nodes = path_nodes(top, left);
            for right in &rights {
                let right_nodes = path_nodes(top, right);
                if left_nodes.intersection(&right_nodes).count() != 1 {
                    continue;
                }
                treks.push(Trek {
                    from: x,
                    to: y,
                    left_leg: left.iter().rev().copied().collect(),
                    bridge: None,
                    right_leg: right.clone(),
                    product: leg_product(left) * leg_product(right) * apex_variance,
                });
            }
        }
    }

    for edge in model.bidirected_edges() {
        for (left_top, right_top) in [(edge.a, edge.b), (edge.b, edge.a)] {
            for left in directed_paths(model, left_top, x) {
                let left_nodes = path_nodes(left_top, &left);
                for right in directed_paths(model, right_top, y) {
                    let right_nodes = path_nodes(right_top, &right);
                    if !left_nodes.is_disjoint(&right_nodes) {
                        continue;
                    }
                    treks.push(Trek {
                        from: x,
                        to: y,
                        left_leg: left.iter().rev().copied().collect(),
                        bridge: Some(*edge),
                        product: leg_product(&left) * leg_product(&right) * edge.coefficient,
                        right_leg: right,
                    });
                }
            }
        }
    }

    treks.sort_by_cached_key(Trek::sort_key);
    Ok(treks)
}

/// Total variance of `v`; derived variables get it from their parents.
fn variance_of(model: &StructuralModel, v: Var) -> Result<f64> {
    if let Some(s) = model.variance(v) {
        return Ok(s);
    }
    let parents: Vec<DirectedEdge> = model.parents(v).copied().collect();
    if parents.is_empty() {
        return Err(Error::InvalidModel(format!("exogenous {v} has no variance")));
    }
    let mut total = 0.0;
    for p in &parents {
        for q in &parents {
            total += p.coefficient * q.coefficient * trek_covariance(model, p.source, q.source)?;
        }
    }
    Ok(total)
}

/// Implied covariance of `x` and `y` as the sum of trek products.
pub fn trek_covariance(model: &StructuralModel, x: Var, y: Var) -> Result<f64> {
    Ok(enumerate_treks(model, x, y)?.iter().map(|t| t.product).sum())
}

/// Symmetric covariance matrix indexed by variable.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    variables: Vec<Var>,
    matrix: DMatrix<f64>,
}

impl CovMatrix {
    pub fn variables(&self) -> &[Var] {
        &self.variables
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn index(&self, v: Var) -> Result<usize> {
        self.variables.iter().position(|&x| x == v).ok_or(Error::MissingVariable(v))
    }

    pub fn get(&self, x: Var, y: Var) -> Result<f64> {
        Ok(self.matrix[(self.index(x)?, self.index(y)?)])
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (&self.matrix - self.matrix.transpose()).amax() <= tol
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix.clone().symmetric_eigen().eigenvalues.min()
    }

    /// Holds for admissible coefficients; a standardized model whose implied
    /// correlations leave [-1, 1] (such as the simulation baseline, where
    /// `chi * gamma = 2`) still satisfies the path algebra but is not PSD.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }
}

/// `(I - B)^-1 Ω (I - B)^-T` for an acyclic model.
pub fn implied_covariance_matrix(model: &StructuralModel) -> Result<CovMatrix> {
    let order = topological_order(model)?;
    let vars = model.variables().to_vec();
    let n = vars.len();
    let idx = |v: Var| vars.iter().position(|&x| x == v).ok_or(Error::MissingVariable(v));

    let mut b = DMatrix::<f64>::zeros(n, n);
    for e in model.directed_edges() {
        b[(idx(e.target)?, idx(e.source)?)] += e.coefficient;
    }
    let a = (DMatrix::<f64>::identity(n, n) - b).try_inverse().ok_or(Error::Singular("I - B"))?;

    let mut omega = DMatrix::<f64>::zeros(n, n);
    for e in model.bidirected_edges() {
        let (i, j) = (idx(e.a)?, idx(e.b)?);
        omega[(i, j)] = e.coefficient;
        omega[(j, i)] = e.coefficient;
    }

    // A residual only reaches its own variable and descendants, so walking in
    // topological order each residual variance is fixed by the earlier ones.
    for v in order {
        let i = idx(v)?;
        let Some(target) = model.variance(v) else {
            if model.is_exogenous(v) {
                return Err(Error::InvalidModel(format!("exogenous {v} has no variance")));
            }
            continue;
        };
        let row = a.row(i);
        let explained = (row * &omega * row.transpose())[(0, 0)];
        omega[(i, i)] = target - explained;
    }

    let sigma = &a * &omega * a.transpose();
    Ok(CovMatrix { variables: vars, matrix: sigma })
}

/// Population coefficients of a linear projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialRegression {
    pub regressors: Vec<Var>,
    pub outcome: Var,
    pub coefficients: Vec<f64>,
    /// 2-norm condition number of `Σ_XX`.
    pub condition_number: f64,
    pub near_collinear: bool,
}

impl PartialRegression {
    pub fn coefficient(&self, v: Var) -> Option<f64> {
        self.regressors.iter().position(|&r| r == v).map(|i| self.coefficients[i])
    }
}

fn project(regressors: &[Var], outcome: Var, cov: impl Fn(Var, Var) -> Result<f64>) -> Result<PartialRegression> {
    if regressors.is_empty() {
        return Err(Error::InvalidModel("no regressors".into()));
    }
    let k = regressors.len();
    let mut sxx = DMatrix::<f64>::zeros(k, k);
    let mut sxy = DVector::<f64>::zeros(k);
    for (i, &xi) in regressors.iter().enumerate() {
        for (j, &xj) in regressors.iter().enumerate() {
            sxx[(i, j)] = cov(xi, xj)?;
        }
        sxy[i] = cov(xi, outcome)?;
    }

    let singular = sxx.singular_values();
    let (max, min) = (singular.max(), singular.min());
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if condition.is_nan() || condition >= SINGULAR_CONDITION {
        return Err(Error::CollinearRegressors { condition });
    }
    let solution = sxx.lu().solve(&sxy).ok_or(Error::CollinearRegressors { condition })?;

    Ok(PartialRegression {
        regressors: regressors.to_vec(),
        outcome,
        coefficients: solution.iter().copied().collect(),
        condition_number: condition,
        near_collinear: condition > NEAR_COLLINEAR_CONDITION,
    })
}

/// `Σ_XX^-1 σ_XY` with covariances from trek sums.
pub fn partial_coefficients(model: &StructuralModel, regressors: &[Var], outcome: Var) -> Result<PartialRegression> {
    project(regressors, outcome, |a, b| trek_covariance(model, a, b))
}

/// `Σ_XX^-1 σ_XY` with covariances read from a precomputed matrix.
pub fn partial_coefficients_from_matrix(
    cov: &CovMatrix,
    regressors: &[Var],
    outcome: Var,
) -> Result<PartialRegression> {
    project(regressors, outcome, |a, b| cov.get(a, b))
}

/// Closed-form `(b1, b2)` for the gain-score regression on both treatments in
/// the standardized baseline model, without (`interference = false`) or with
/// the `Y1 -> Y2` edge.
pub fn closed_form_b1_b2(params: &ScenarioConfig, interference: bool) -> Result<(f64, f64)> {
    let ScenarioConfig { delta, chi, gamma, psi, eta, .. } = *params;
    let denom = 1.0 - (chi * gamma).powi(2);
    if denom.abs() <= 1e-12 {
        return Err(Error::DegenerateDenominator);
    }
    if !interference {
        return Ok((-delta, delta));
    }
    let b1 = -delta + delta * eta + psi * chi * eta * (1.0 - gamma * gamma) / denom;
    let b2 = delta + psi * gamma * eta * (1.0 - chi * chi) / denom;
    Ok((b1, b2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sem_graph::{build_scenario, ScenarioId};

    fn products(treks: &[Trek]) -> Vec<f64> {
        let mut p: Vec<f64> = treks.iter().map(|t| t.product).collect();
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        p
    }

    #[test]
    fn fig1a_u_to_d_has_four_treks() {
        let m = build_scenario(ScenarioId::Fig1A, &ScenarioConfig::baseline()).unwrap();
        let treks = enumerate_treks(&m, Var::UPrime, Var::D).unwrap();
        assert_eq!(products(&treks), vec![-5.0, -3.0, 5.0, 6.0]);
        let rendered: Vec<String> = treks.iter().map(|t| t.to_string()).collect();
        assert!(rendered.contains(&"U' -> T1 -> Y1 -> D".to_string()));
        assert!(rendered.contains(&"U' -> Y2 -> D".to_string()));
    }

    #[test]
    fn self_trek_is_variance() {
        let m = build_scenario(ScenarioId::Fig1D, &ScenarioConfig::baseline()).unwrap();
        let treks = enumerate_treks(&m, Var::T1, Var::T1).unwrap();
        assert_eq!(treks.len(), 1);
        assert!(treks[0].left_leg.is_empty() && treks[0].right_leg.is_empty());
        assert_eq!(treks[0].product, 1.0);
    }

    #[test]
    fn baseline_covariances() {
        let m = build_scenario(ScenarioId::Fig1A, &ScenarioConfig::baseline()).unwrap();
        assert_eq!(trek_covariance(&m, Var::T1, Var::T2).unwrap(), 2.0);
        assert_eq!(trek_covariance(&m, Var::D, Var::T1).unwrap(), 3.0);
        let sigma = implied_covariance_matrix(&m).unwrap();
        assert!((sigma.get(Var::T1, Var::T2).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_coefficients_give_zero_covariance() {
        let m = build_scenario(ScenarioId::Fig1B, &ScenarioConfig::default()).unwrap();
        for &x in m.variables() {
            for &y in m.variables() {
                // D keeps its fixed +-1 wiring to the outcomes.
                let expected = match (x, y) {
                    (Var::Y1, Var::D) | (Var::D, Var::Y1) => -1.0,
                    (Var::Y2, Var::D) | (Var::D, Var::Y2) => 1.0,
                    _ if x == y => continue,
                    _ => 0.0,
                };
                assert_eq!(trek_covariance(&m, x, y).unwrap(), expected, "{x} {y}");
            }
        }
    }

    #[test]
    fn zero_coefficients_identity_matrix_on_standardized_block() {
        let m = build_scenario(ScenarioId::Fig1D, &ScenarioConfig::default()).unwrap();
        let sigma = implied_covariance_matrix(&m).unwrap();
        for &x in &Var::ALL[..6] {
            for &y in &Var::ALL[..6] {
                let expected = if x == y { 1.0 } else { 0.0 };
                assert_eq!(sigma.get(x, y).unwrap(), expected);
            }
        }
        assert!(sigma.is_positive_semidefinite(1e-9));
    }

    #[test]
    fn baseline_b1_b2_identify_delta() {
        let m = build_scenario(ScenarioId::Fig1A, &ScenarioConfig::baseline()).unwrap();
        let fit = partial_coefficients(&m, &[Var::T1, Var::T2], Var::D).unwrap();
        assert!((fit.coefficients[0] + 3.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-12);
        assert!(!fit.near_collinear);
    }

    #[test]
    fn fig1b_b2_small_coefficients() {
        let cfg = ScenarioConfig { delta: 2.0, psi: 1.0, gamma: 0.4, chi: 0.5, eta: 0.3, ..Default::default() };
        let m = build_scenario(ScenarioId::Fig1B, &cfg).unwrap();
        let fit = partial_coefficients(&m, &[Var::T1, Var::T2], Var::D).unwrap();
        assert!((fit.coefficients[1] - 2.09375).abs() < 1e-12);
        let sigma = implied_covariance_matrix(&m).unwrap();
        let via_matrix = partial_coefficients_from_matrix(&sigma, &[Var::T1, Var::T2], Var::D).unwrap();
        assert!((via_matrix.coefficients[1] - 2.09375).abs() < 1e-12);
    }

    #[test]
    fn fig1c_b_c_is_zero() {
        let cfg = ScenarioConfig { pi: 0.5, ..ScenarioConfig::baseline() };
        let m = build_scenario(ScenarioId::Fig1C, &cfg).unwrap();
        let fit = partial_coefficients(&m, &[Var::T1, Var::T2, Var::C], Var::D).unwrap();
        assert!(fit.coefficient(Var::C).unwrap().abs() < 1e-12);
    }

    #[test]
    fn closed_forms() {
        let base = ScenarioConfig::baseline();
        assert_eq!(closed_form_b1_b2(&base, false).unwrap(), (-3.0, 3.0));
        let with_eta = ScenarioConfig { eta: 0.3, ..base.clone() };
        let (_, b2) = closed_form_b1_b2(&with_eta, true).unwrap();
        assert!((b2 - 3.0).abs() < 1e-12);
        assert_eq!(closed_form_b1_b2(&base, true).unwrap(), (-3.0, 3.0));
        let degenerate = ScenarioConfig { chi: 0.5, gamma: 2.0, ..base };
        assert!(matches!(closed_form_b1_b2(&degenerate, true), Err(Error::DegenerateDenominator)));
    }

    #[test]
    fn collinear_regressors_rejected() {
        let m = build_scenario(ScenarioId::Fig1A, &ScenarioConfig::baseline()).unwrap();
        let err = partial_coefficients(&m, &[Var::T1, Var::T1], Var::D).unwrap_err();
        assert!(matches!(err, Error::CollinearRegressors { .. }));
    }

    #[test]
    fn missing_variable_is_error() {
        let m = build_scenario(ScenarioId::Fig1A, &ScenarioConfig::baseline()).unwrap();
        assert!(matches!(enumerate_treks(&m, Var::C, Var::D), Err(Error::MissingVariable(Var::C))));
    }
}
