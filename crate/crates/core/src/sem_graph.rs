//! Weighted causal diagrams for the two-sibling fixed-effects models.
//!
//! A [`StructuralModel`] holds the variables of one diagram together with its
//! directed (causal) edges, bidirected (association) edges and the variance of
//! every non-derived variable. The same representation feeds both the path
//! tracing engine in [`crate::analytic`] and the data generator in
//! [`crate::dgp`], so the analytic and generative models cannot drift apart.
//!
//! The gain-score `D` is an ordinary node with the fixed incoming edges
//! `Y1 -> D (-1)` and `Y2 -> D (+1)` and no residual variance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Variables of the sibling model, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Var {
    /// Unobserved sibling-invariant confounder (`U` in the models without `C`).
    UPrime,
    /// Observed pre-treatment fixed effect.
    C,
    T1,
    T2,
    Y1,
    Y2,
    /// Gain-score `Y2 - Y1`.
    D,
}

impl Var {
    pub const ALL: [Var; 7] = [Var::UPrime, Var::C, Var::T1, Var::T2, Var::Y1, Var::Y2, Var::D];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Lower-case column name used in data files.
    pub fn column_name(self) -> &'static str {
        match self {
            Var::UPrime => "u_prime",
            Var::C => "c",
            Var::T1 => "t1",
            Var::T2 => "t2",
            Var::Y1 => "y1",
            Var::Y2 => "y2",
            Var::D => "d",
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Var::UPrime => "U'",
            Var::C => "C",
            Var::T1 => "T1",
            Var::T2 => "T2",
            Var::Y1 => "Y1",
            Var::Y2 => "Y2",
            Var::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for Var {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v = match s.trim().to_ascii_lowercase().as_str() {
            "u" | "u'" | "u_prime" | "uprime" => Var::UPrime,
            "c" => Var::C,
            "t1" => Var::T1,
            "t2" => Var::T2,
            "y1" => Var::Y1,
            "y2" => Var::Y2,
            "d" => Var::D,
            _ => return Err(Error::InvalidModel(format!("unknown variable `{s}`"))),
        };
        Ok(v)
    }
}

/// Path coefficients, simulation sizes, thresholds and seed for one scenario.
///
/// Coefficients a diagram does not contain are ignored by [`build_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    /// Treatment effect `T_j -> Y_j`.
    pub delta: f64,
    /// `U' -> T1`.
    pub chi: f64,
    /// `U' -> T2`.
    pub gamma: f64,
    /// `U' -> Y_j`.
    pub psi: f64,
    /// Outcome-to-outcome interference `Y1 -> Y2`.
    pub eta: f64,
    /// Association `U' <-> C`.
    pub pi: f64,
    /// Treatment-to-treatment interference `T1 -> T2`.
    pub phi: f64,
    /// Association `C - T1`.
    pub tau: f64,
    /// Association `C - T2`.
    pub nu: f64,
    /// Association `C - Y1` (and `C - Y2` in the equal-association model).
    pub lambda: f64,
    /// Association `C - Y2` in the differential-association model.
    pub omega: f64,
    /// Treatment-to-outcome interference `T1 -> Y2`.
    pub theta: f64,
    /// Treatment-to-outcome interference `T2 -> Y1`.
    pub kappa: f64,
    /// Outcome-to-treatment interference `Y1 -> T2`.
    pub mu: f64,
    pub n_obs: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub threshold_c: f64,
    pub threshold_t1: f64,
    pub threshold_t2: f64,
}

pub const DEFAULT_N_OBS: usize = 5000;
pub const DEFAULT_N_RUNS: usize = 1000;
pub const DEFAULT_SEED: u64 = 20160301;

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            delta: 0.0,
            chi: 0.0,
            gamma: 0.0,
            psi: 0.0,
            eta: 0.0,
            pi: 0.0,
            phi: 0.0,
            tau: 0.0,
            nu: 0.0,
            lambda: 0.0,
            omega: 0.0,
            theta: 0.0,
            kappa: 0.0,
            mu: 0.0,
            n_obs: DEFAULT_N_OBS,
            n_runs: DEFAULT_N_RUNS,
            seed: DEFAULT_SEED,
            threshold_c: 1.0,
            threshold_t1: -0.2,
            threshold_t2: 1.0,
        }
    }
}

impl ScenarioConfig {
    /// The fixed baseline effects used across every simulation:
    /// `delta = 3`, `chi = 1`, `gamma = 2`, `psi = 5`.
    pub fn baseline() -> Self {
        Self { delta: 3.0, chi: 1.0, gamma: 2.0, psi: 5.0, ..Self::default() }
    }

    /// Coefficient fields by name, in config-file order.
    pub fn coefficients(&self) -> [(&'static str, f64); 14] {
        [
            ("delta", self.delta),
            ("chi", self.chi),
            ("gamma", self.gamma),
            ("psi", self.psi),
            ("eta", self.eta),
            ("pi", self.pi),
            ("phi", self.phi),
            ("tau", self.tau),
            ("nu", self.nu),
            ("lambda", self.lambda),
            ("omega", self.omega),
            ("theta", self.theta),
            ("kappa", self.kappa),
            ("mu", self.mu),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (key, value) in self.coefficients() {
            if !value.is_finite() {
                return Err(Error::InvalidConfig { key, message: format!("{value} is not finite") });
            }
        }
        for (key, value) in [
            ("threshold_c", self.threshold_c),
            ("threshold_t1", self.threshold_t1),
            ("threshold_t2", self.threshold_t2),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidConfig { key, message: format!("{value} is not finite") });
            }
        }
        if self.n_obs < 2 {
            return Err(Error::InvalidConfig { key: "n_obs", message: "must be at least 2".into() });
        }
        if self.n_runs < 1 {
            return Err(Error::InvalidConfig { key: "n_runs", message: "must be at least 1".into() });
        }
        // Y1 -> T2 together with T2 -> Y1 has no recursive ordering.
        if self.mu != 0.0 && self.kappa != 0.0 {
            return Err(Error::InvalidConfig {
                key: "mu",
                message: "mu and kappa cannot both be nonzero (Y1 -> T2 -> Y1 is a cycle)".into(),
            });
        }
        Ok(())
    }
}

/// The named causal diagrams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScenarioId {
    Fig1A,
    Fig1B,
    Fig1C,
    Fig1D,
    Fig2A,
    Fig2B,
    Fig2C,
    Fig2D,
    Fig2E,
    Fig2F,
    /// `C` associated with the second sibling's treatment only.
    PostHocNuOnly,
    /// `C` associated with the first sibling's treatment only.
    PostHocTauOnly,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 12] = [
        ScenarioId::Fig1A,
        ScenarioId::Fig1B,
        ScenarioId::Fig1C,
        ScenarioId::Fig1D,
        ScenarioId::Fig2A,
        ScenarioId::Fig2B,
        ScenarioId::Fig2C,
        ScenarioId::Fig2D,
        ScenarioId::Fig2E,
        ScenarioId::Fig2F,
        ScenarioId::PostHocNuOnly,
        ScenarioId::PostHocTauOnly,
    ];

    /// Short label as printed in result tables.
    pub fn label(self) -> &'static str {
        match self {
            ScenarioId::Fig1A => "1A",
            ScenarioId::Fig1B => "1B",
            ScenarioId::Fig1C => "1C",
            ScenarioId::Fig1D => "1D",
            ScenarioId::Fig2A => "2A",
            ScenarioId::Fig2B => "2B",
            ScenarioId::Fig2C => "2C",
            ScenarioId::Fig2D => "2D",
            ScenarioId::Fig2E => "2E",
            ScenarioId::Fig2F => "2F",
            ScenarioId::PostHocNuOnly => "PH-nu",
            ScenarioId::PostHocTauOnly => "PH-tau",
        }
    }

    /// Whether the diagram contains the observed fixed effect `C`.
    pub fn has_c(self) -> bool {
        !matches!(self, ScenarioId::Fig1A | ScenarioId::Fig1B)
    }

    /// Whether the diagram contains the `Y1 -> Y2` edge.
    pub fn has_interference_edge(self) -> bool {
        !matches!(self, ScenarioId::Fig1A | ScenarioId::Fig1C)
    }

    /// Names of the coefficients this diagram adds on top of Fig. 1D.
    pub fn extra_parameters(self) -> &'static [&'static str] {
        match self {
            ScenarioId::Fig2A => &["phi"],
            ScenarioId::Fig2B => &["tau", "nu"],
            ScenarioId::Fig2C => &["lambda"],
            ScenarioId::Fig2D => &["theta", "kappa"],
            ScenarioId::Fig2E => &["lambda", "omega"],
            ScenarioId::Fig2F => &["mu"],
            ScenarioId::PostHocNuOnly => &["nu"],
            ScenarioId::PostHocTauOnly => &["tau"],
            _ => &[],
        }
    }
}

impl Serialize for ScenarioId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.trim().to_ascii_lowercase().chars().filter(|c| !matches!(c, '-' | '_' | ' ')).collect();
        let norm = norm.strip_prefix("fig").unwrap_or(&norm);
        let id = match norm {
            "1a" => ScenarioId::Fig1A,
            "1b" => ScenarioId::Fig1B,
            "1c" => ScenarioId::Fig1C,
            "1d" => ScenarioId::Fig1D,
            "2a" => ScenarioId::Fig2A,
            "2b" => ScenarioId::Fig2B,
            "2c" => ScenarioId::Fig2C,
            "2d" => ScenarioId::Fig2D,
            "2e" => ScenarioId::Fig2E,
            "2f" => ScenarioId::Fig2F,
            "phnu" | "posthocnu" | "posthocnuonly" => ScenarioId::PostHocNuOnly,
            "phtau" | "posthoctau" | "posthoctauonly" => ScenarioId::PostHocTauOnly,
            _ => return Err(Error::UnknownScenario(s.to_string())),
        };
        Ok(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectedEdge {
    pub source: Var,
    pub target: Var,
    pub coefficient: f64,
}

impl DirectedEdge {
    pub fn new(source: Var, target: Var, coefficient: f64) -> Self {
        Self { source, target, coefficient }
    }
}

/// Undirected association between two exogenous variables; its coefficient
/// is their covariance (a correlation when both have unit variance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BidirectedEdge {
    pub a: Var,
    pub b: Var,
    pub coefficient: f64,
}

impl BidirectedEdge {
    pub fn new(a: Var, b: Var, coefficient: f64) -> Self {
        Self { a, b, coefficient }
    }

    /// The far end of the edge seen from `v`, if `v` is an endpoint.
    pub fn other(&self, v: Var) -> Option<Var> {
        if self.a == v {
            Some(self.b)
        } else if self.b == v {
            Some(self.a)
        } else {
            None
        }
    }
}

/// A linear structural equation model over the sibling variables.
///
/// `variances` holds the total variance of each variable. Variables without
/// an entry (only `D` in the built scenarios) have no residual term and are
/// exact linear functions of their parents.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralModel {
    variables: Vec<Var>,
    directed: Vec<DirectedEdge>,
    bidirected: Vec<BidirectedEdge>,
    variances: BTreeMap<Var, f64>,
}

impl StructuralModel {
    /// Assembles a model without checking it; see [`validate`].
    pub fn from_parts(
        variables: Vec<Var>,
        directed: Vec<DirectedEdge>,
        bidirected: Vec<BidirectedEdge>,
        variances: BTreeMap<Var, f64>,
    ) -> Self {
        Self { variables, directed, bidirected, variances }
    }

    pub fn variables(&self) -> &[Var] {
        &self.variables
    }

    pub fn directed_edges(&self) -> &[DirectedEdge] {
        &self.directed
    }

    pub fn bidirected_edges(&self) -> &[BidirectedEdge] {
        &self.bidirected
    }

    pub fn variances(&self) -> &BTreeMap<Var, f64> {
        &self.variances
    }

    pub fn contains(&self, v: Var) -> bool {
        self.variables.contains(&v)
    }

    /// Total variance of `v`, or `None` when `v` is derived from its parents.
    pub fn variance(&self, v: Var) -> Option<f64> {
        self.variances.get(&v).copied()
    }

    pub fn parents(&self, v: Var) -> impl Iterator<Item = &DirectedEdge> + '_ {
        self.directed.iter().filter(move |e| e.target == v)
    }

    pub fn children(&self, v: Var) -> impl Iterator<Item = &DirectedEdge> + '_ {
        self.directed.iter().filter(move |e| e.source == v)
    }

    pub fn coefficient(&self, source: Var, target: Var) -> Option<f64> {
        self.directed.iter().find(|e| e.source == source && e.target == target).map(|e| e.coefficient)
    }

    pub fn is_exogenous(&self, v: Var) -> bool {
        self.parents(v).next().is_none()
    }

    /// Returns a copy with `v`'s total variance replaced.
    pub fn with_variance(mut self, v: Var, variance: f64) -> Self {
        self.variances.insert(v, variance);
        self
    }

    /// Returns a copy with an extra directed edge; the result may be invalid.
    pub fn with_directed(mut self, edge: DirectedEdge) -> Self {
        self.directed.push(edge);
        self
    }

    /// Returns a copy with every edge into `target` from `source` removed.
    pub fn without_directed(mut self, source: Var, target: Var) -> Self {
        self.directed.retain(|e| !(e.source == source && e.target == target));
        self
    }
}

/// Builds the edge set of diagram `id` with coefficients from `config`.
///
/// Every variable except `D` gets unit variance (standardized path model).
/// The dashed `C` associations with treatments and outcomes become directed
/// `C -> target` edges; the `U' - C` association stays bidirected.
pub fn build_scenario(id: ScenarioId, config: &ScenarioConfig) -> Result<StructuralModel> {
    config.validate()?;
    use Var::*;

    let mut directed = vec![
        DirectedEdge::new(UPrime, T1, config.chi),
        DirectedEdge::new(UPrime, T2, config.gamma),
        DirectedEdge::new(UPrime, Y1, config.psi),
        DirectedEdge::new(UPrime, Y2, config.psi),
        DirectedEdge::new(T1, Y1, config.delta),
        DirectedEdge::new(T2, Y2, config.delta),
    ];
    if id.has_interference_edge() {
        directed.push(DirectedEdge::new(Y1, Y2, config.eta));
    }
    match id {
        ScenarioId::Fig2A => directed.push(DirectedEdge::new(T1, T2, config.phi)),
        ScenarioId::Fig2B => {
            directed.push(DirectedEdge::new(C, T1, config.tau));
            directed.push(DirectedEdge::new(C, T2, config.nu));
        }
        ScenarioId::Fig2C => {
            directed.push(DirectedEdge::new(C, Y1, config.lambda));
            directed.push(DirectedEdge::new(C, Y2, config.lambda));
        }
        ScenarioId::Fig2D => {
            directed.push(DirectedEdge::new(T1, Y2, config.theta));
            directed.push(DirectedEdge::new(T2, Y1, config.kappa));
        }
        ScenarioId::Fig2E => {
            directed.push(DirectedEdge::new(C, Y1, config.lambda));
            directed.push(DirectedEdge::new(C, Y2, config.omega));
        }
        ScenarioId::Fig2F => directed.push(DirectedEdge::new(Y1, T2, config.mu)),
        ScenarioId::PostHocNuOnly => directed.push(DirectedEdge::new(C, T2, config.nu)),
        ScenarioId::PostHocTauOnly => directed.push(DirectedEdge::new(C, T1, config.tau)),
        _ => {}
    }
    directed.push(DirectedEdge::new(Y1, D, -1.0));
    directed.push(DirectedEdge::new(Y2, D, 1.0));

    let (variables, bidirected) = if id.has_c() {
        (Var::ALL.to_vec(), vec![BidirectedEdge::new(UPrime, C, config.pi)])
    } else {
        (vec![UPrime, T1, T2, Y1, Y2, D], Vec::new())
    };
    let variances = variables.iter().filter(|&&v| v != D).map(|&v| (v, 1.0)).collect();

    Ok(StructuralModel::from_parts(variables, directed, bidirected, variances))
}

/// One broken [`StructuralModel`] invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Cycle(Vec<Var>),
    DWiring(String),
    DanglingEdge { source: Var, target: Var },
    NonFinite(String),
    DuplicateEdge(String),
    Variance(String),
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::Cycle(_) => "cycle",
            Violation::DWiring(_) => "D wiring",
            Violation::DanglingEdge { .. } => "dangling edge",
            Violation::NonFinite(_) => "non-finite coefficient",
            Violation::DuplicateEdge(_) => "duplicate edge",
            Violation::Variance(_) => "variance",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle(vars) => {
                let names: Vec<String> = vars.iter().map(Var::to_string).collect();
                write!(f, "cycle: {}", names.join(" -> "))
            }
            Violation::DanglingEdge { source, target } => {
                write!(f, "dangling edge: {source} -> {target} references a missing variable")
            }
            Violation::DWiring(m) | Violation::NonFinite(m) | Violation::DuplicateEdge(m) | Violation::Variance(m) => {
                write!(f, "{}: {m}", self.kind())
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: &str) -> bool {
        self.violations.iter().any(|v| v.kind() == kind)
    }
}

/// Checks every [`StructuralModel`] invariant and reports all violations.
pub fn validate(model: &StructuralModel) -> ValidationReport {
    let mut violations = Vec::new();
    let present: BTreeSet<Var> = model.variables.iter().copied().collect();

    if present.len() != model.variables.len() {
        violations.push(Violation::DuplicateEdge("variable listed twice".into()));
    }

    for e in &model.directed {
        if !present.contains(&e.source) || !present.contains(&e.target) {
            violations.push(Violation::DanglingEdge { source: e.source, target: e.target });
        }
        if !e.coefficient.is_finite() {
            violations.push(Violation::NonFinite(format!("{} -> {}", e.source, e.target)));
        }
        if e.source == e.target {
            violations.push(Violation::Cycle(vec![e.source]));
        }
    }
    let mut seen_directed = BTreeSet::new();
    for e in &model.directed {
        if !seen_directed.insert((e.source, e.target)) {
            violations.push(Violation::DuplicateEdge(format!("{} -> {}", e.source, e.target)));
        }
    }

    let mut seen_pairs = BTreeSet::new();
    for e in &model.bidirected {
        if !present.contains(&e.a) || !present.contains(&e.b) {
            violations.push(Violation::DanglingEdge { source: e.a, target: e.b });
        }
        if !e.coefficient.is_finite() {
            violations.push(Violation::NonFinite(format!("{} <-> {}", e.a, e.b)));
        }
        let pair = (e.a.min(e.b), e.a.max(e.b));
        if e.a == e.b || !seen_pairs.insert(pair) {
            violations.push(Violation::DuplicateEdge(format!("{} <-> {}", e.a, e.b)));
        }
        // Associations are covariances between exogenous variables only.
        if !model.is_exogenous(e.a) || !model.is_exogenous(e.b) {
            violations.push(Violation::Variance(format!(
                "bidirected edge {} <-> {} must join exogenous variables",
                e.a, e.b
            )));
        }
    }

    check_d_wiring(model, &present, &mut violations);

    for &v in &model.variables {
        match model.variances.get(&v) {
            Some(&s) if !(s.is_finite() && s >= 0.0) => {
                violations.push(Violation::Variance(format!("{v} has variance {s}")));
            }
            None if v != Var::D && model.is_exogenous(v) => {
                violations.push(Violation::Variance(format!("exogenous {v} has no variance")));
            }
            _ => {}
        }
    }

    if let Err(Error::Cycle(cycle)) = topological_order(model) {
        violations.push(Violation::Cycle(cycle));
    }

    ValidationReport { violations }
}

fn check_d_wiring(model: &StructuralModel, present: &BTreeSet<Var>, out: &mut Vec<Violation>) {
    if !present.contains(&Var::D) {
        out.push(Violation::DWiring("D is missing".into()));
        return;
    }
    let incoming: Vec<&DirectedEdge> = model.parents(Var::D).collect();
    let has = |src: Var, coef: f64| incoming.iter().any(|e| e.source == src && e.coefficient == coef);
    if incoming.len() != 2 || !has(Var::Y1, -1.0) || !has(Var::Y2, 1.0) {
        out.push(Violation::DWiring("D needs exactly the incoming edges Y1 -> D (-1) and Y2 -> D (+1)".into()));
    }
    if model.children(Var::D).next().is_some() {
        out.push(Violation::DWiring("D must not have outgoing edges".into()));
    }
    if model.bidirected.iter().any(|e| e.a == Var::D || e.b == Var::D) {
        out.push(Violation::DWiring("D must not have associations".into()));
    }
    if model.variances.contains_key(&Var::D) {
        out.push(Violation::DWiring("D is derived and must not carry a variance".into()));
    }
}

/// Orders the variables so every directed edge points forward.
///
/// Ties are broken by canonical variable order, so `D` always comes last.
pub fn topological_order(model: &StructuralModel) -> Result<Vec<Var>> {
    let vars = &model.variables;
    let mut indegree: BTreeMap<Var, usize> = vars.iter().map(|&v| (v, 0)).collect();
    for e in &model.directed {
        if let Some(d) = indegree.get_mut(&e.target) {
            if vars.contains(&e.source) {
                *d += 1;
            }
        }
    }

    let mut ready: BTreeSet<Var> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&v, _)| v).collect();
    let mut order = Vec::with_capacity(vars.len());
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for e in model.children(v) {
            if let Some(d) = indegree.get_mut(&e.target) {
                *d -= 1;
                if *d == 0 {
                    ready.insert(e.target);
                }
            }
        }
    }

    if order.len() < indegree.len() {
        let remaining: BTreeSet<Var> = indegree.keys().copied().filter(|v| !order.contains(v)).collect();
        return Err(Error::Cycle(find_cycle(model, &remaining)));
    }
    Ok(order)
}

/// Walks forward inside `remaining` (every node of which lies on or leads
/// into a cycle) until a node repeats.
fn find_cycle(model: &StructuralModel, remaining: &BTreeSet<Var>) -> Vec<Var> {
    let Some(&start) = remaining.iter().next() else {
        return Vec::new();
    };
    let mut path = vec![start];
    let mut current = start;
    loop {
        // Nodes left over by Kahn's algorithm all have an unprocessed parent,
        // so walking backwards always stays inside `remaining`.
        let Some(prev) = model.parents(current).map(|e| e.source).find(|s| remaining.contains(s)) else {
            return path;
        };
        if let Some(pos) = path.iter().position(|&v| v == prev) {
            let mut cycle: Vec<Var> = path[pos..].to_vec();
            cycle.reverse();
            return cycle;
        }
        path.push(prev);
        current = prev;
    }
}
