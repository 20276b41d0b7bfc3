use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{score_evidence, transform_score, EvidenceFactor, GraphicalError, ObservationKind, ObservationParams, ParamSet, SIGMA_FLOOR};
use crate::sheet::ScoreSheet;
use crate::taxonomy::{ClassId, NodeIx, Taxonomy};

/// Nodes with more BN parents than this are not given dense tables.
pub const DEFAULT_MAX_DENSE_PARENTS: usize = 20;

const PROB_CLAMP: f64 = 1e-6;

/// How the CPD entries left open by the OR constraint are filled in.
#[derive(Debug, Clone, PartialEq)]
pub enum LeakRule {
    /// `leak(c) = 1 / (u + 2)`, where `u` counts leaves of the full taxonomy
    /// below `c` that no modeled child covers. Parentless nodes get priors
    /// proportional to `weights` (default weight 1).
    Structural { weights: BTreeMap<ClassId, f64> },
    /// The same leak and prior everywhere.
    Fixed { leak: f64, prior: f64 },
}

impl Default for LeakRule {
    fn default() -> Self {
        LeakRule::Structural { weights: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub leak_rule: LeakRule,
    pub sigma_floor: f64,
    pub max_dense_parents: usize,
    /// Above `max_dense_parents`, keep the CPD as an implicit leaky OR
    /// instead of failing.
    pub lazy_or_fallback: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            leak_rule: LeakRule::default(),
            sigma_floor: SIGMA_FLOOR,
            max_dense_parents: DEFAULT_MAX_DENSE_PARENTS,
            lazy_or_fallback: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CpdKind {
    /// No BN parents: `Pr[z = 1]`.
    Prior(f64),
    /// `Pr[z = 1 | some parent on] = 1`, `Pr[z = 1 | all off] = leak`.
    LeakyOr { leak: f64 },
}

/// The conditional distribution of one class node given its taxonomy
/// children (its parents in the network).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassNodeCpd {
    pub node: ClassId,
    pub bn_parents: Vec<ClassId>,
    pub kind: CpdKind,
    /// Stored as a dense table, as opposed to an implicit OR.
    pub dense: bool,
}

impl ClassNodeCpd {
    /// `Pr[z = 1]` given whether any BN parent is on.
    pub fn prob_on(&self, any_parent_on: bool) -> f64 {
        match self.kind {
            CpdKind::Prior(p) => p,
            CpdKind::LeakyOr { .. } if any_parent_on => 1.0,
            CpdKind::LeakyOr { leak } => leak,
        }
    }

    pub fn prob(&self, z: bool, any_parent_on: bool) -> f64 {
        let p = self.prob_on(any_parent_on);
        if z {
            p
        } else {
            1.0 - p
        }
    }

    /// `Pr[z = 1 | configuration]` for every configuration of the BN
    /// parents; bit `i` of the row index is parent `i`. `None` for implicit
    /// tables.
    pub fn table(&self) -> Option<Vec<f64>> {
        if !self.dense {
            return None;
        }
        Some(
            (0..1usize << self.bn_parents.len())
                .map(|row| self.prob_on(row != 0))
                .collect(),
        )
    }
}

/// One observation hook: a classifier's score for a class.
#[derive(Debug, Clone, PartialEq)]
pub struct Hook {
    pub classifier: String,
    pub node: NodeIx,
    pub kind: ObservationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    graph: Taxonomy,
    cpds: Vec<ClassNodeCpd>,
    hooks: Vec<Hook>,
}

fn check_prob(what: &str, node: &ClassId, p: f64) -> Result<(), GraphicalError> {
    if p.is_finite() && p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(GraphicalError::InvalidParameter(format!(
            "{what} of `{node}` must lie in (0, 1), got {p}"
        )))
    }
}

impl Network {
    /// Builds a network over `graph` with explicit CPD parameters, aligned
    /// with the graph's node indices, and no hooks.
    pub fn with_cpds(graph: Taxonomy, kinds: Vec<CpdKind>) -> Result<Self, GraphicalError> {
        assert_eq!(graph.len(), kinds.len(), "one CPD per class");
        let mut cpds = Vec::with_capacity(kinds.len());
        for (i, kind) in kinds.into_iter().enumerate() {
            let node = graph.name(i).clone();
            let has_parents = !graph.children_of(i).is_empty();
            match kind {
                CpdKind::Prior(p) if !has_parents => check_prob("prior", &node, p)?,
                CpdKind::LeakyOr { leak } if has_parents => check_prob("leak", &node, leak)?,
                _ => {
                    return Err(GraphicalError::InvalidParameter(format!(
                        "`{node}` needs a {} CPD",
                        if has_parents { "leaky-OR" } else { "prior" }
                    )))
                }
            }
            cpds.push(ClassNodeCpd {
                bn_parents: graph.children_of(i).iter().map(|&c| graph.name(c).clone()).collect(),
                node,
                kind,
                dense: graph.children_of(i).len() <= DEFAULT_MAX_DENSE_PARENTS,
            });
        }
        Ok(Network { graph, cpds, hooks: Vec::new() })
    }

    pub fn graph(&self) -> &Taxonomy {
        &self.graph
    }

    pub fn cpds(&self) -> &[ClassNodeCpd] {
        &self.cpds
    }

    pub fn cpd(&self, i: NodeIx) -> &ClassNodeCpd {
        &self.cpds[i]
    }

    pub fn hooks(&self) -> &[Hook] {
        &self.hooks
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    /// Evidence from every hook the sheet scores. Hooks the sheet does not
    /// mention contribute nothing.
    pub fn evidence_for(&self, sheet: &ScoreSheet) -> Result<Vec<EvidenceFactor>, GraphicalError> {
        let mut out = Vec::new();
        for hook in &self.hooks {
            let node = self.graph.name(hook.node);
            if let Some(y) = sheet.score(&hook.classifier, node.as_str()) {
                let obs = ObservationParams {
                    classifier: hook.classifier.clone(),
                    node: node.clone(),
                    kind: hook.kind,
                };
                let y = match hook.kind {
                    ObservationKind::Binormal { .. } => transform_score(y),
                    ObservationKind::Discrete { .. } => y,
                };
                out.push(score_evidence(&obs, y)?);
            }
        }
        Ok(out)
    }

    /// Same structure, new observation parameters.
    pub fn with_params(&self, params: &ParamSet, sigma_floor: f64) -> Result<Network, GraphicalError> {
        let mut net = self.clone();
        net.hooks = hooks_from(&self.graph, params, sigma_floor)?;
        Ok(net)
    }

    /// Deterministic text listing of nodes, CPDs and hooks.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "network nodes={} hooks={}", self.len(), self.hooks.len()).unwrap();
        for cpd in &self.cpds {
            let parents: Vec<&str> = cpd.bn_parents.iter().map(ClassId::as_str).collect();
            write!(out, "node {} parents=[{}]", cpd.node, parents.join(",")).unwrap();
            match cpd.kind {
                CpdKind::Prior(p) => write!(out, " prior={}", fmt_prob(p)).unwrap(),
                CpdKind::LeakyOr { leak } => write!(out, " leak={}", fmt_prob(leak)).unwrap(),
            }
            match cpd.table() {
                Some(t) if cpd.bn_parents.len() <= 3 => {
                    let rows: Vec<String> = t.iter().map(|&p| fmt_prob(p)).collect();
                    writeln!(out, " table=[{}]", rows.join(",")).unwrap();
                }
                Some(_) => writeln!(out, " table=dense").unwrap(),
                None => writeln!(out, " table=lazy_or").unwrap(),
            }
        }
        for h in &self.hooks {
            write!(out, "hook {} {}", h.classifier, self.graph.name(h.node)).unwrap();
            match h.kind {
                ObservationKind::Binormal { mu0, sigma0, mu1, sigma1 } => writeln!(
                    out,
                    " binormal mu0={} sigma0={} mu1={} sigma1={}",
                    fmt_prob(mu0),
                    fmt_prob(sigma0),
                    fmt_prob(mu1),
                    fmt_prob(sigma1)
                ),
                ObservationKind::Discrete { alpha, beta } => writeln!(
                    out,
                    " discrete alpha={} beta={}",
                    fmt_prob(alpha),
                    fmt_prob(beta)
                ),
            }
            .unwrap();
        }
        out
    }
}

fn fmt_prob(x: f64) -> String {
    crate::io::fmt_num(x)
}

fn hooks_from(graph: &Taxonomy, params: &ParamSet, sigma_floor: f64) -> Result<Vec<Hook>, GraphicalError> {
    params
        .iter()
        .map(|p| {
            let kind = p.kind.floored(sigma_floor);
            kind.validate()?;
            Ok(Hook {
                classifier: p.classifier,
                node: graph.require(p.node.as_str())?,
                kind,
            })
        })
        .collect()
}

/// Builds the network over the subgraph induced by the modeled classes.
/// With no parameters the whole taxonomy is used.
pub fn build_network(
    taxonomy: &Taxonomy,
    params: &ParamSet,
    config: &NetworkConfig,
) -> Result<Network, GraphicalError> {
    for c in params.classes() {
        taxonomy.require(c.as_str())?;
    }
    let graph = if params.is_empty() {
        taxonomy.clone()
    } else {
        taxonomy.induced_subgraph(params.classes().map(ClassId::as_str))?
    };

    for i in 0..graph.len() {
        let fanout = graph.children_of(i).len();
        if fanout > config.max_dense_parents && !config.lazy_or_fallback {
            return Err(GraphicalError::ChildFanoutExceeded {
                node: graph.name(i).clone(),
                fanout,
                cap: config.max_dense_parents,
            });
        }
    }

    let kinds = match &config.leak_rule {
        LeakRule::Fixed { leak, prior } => (0..graph.len())
            .map(|i| {
                if graph.children_of(i).is_empty() {
                    CpdKind::Prior(*prior)
                } else {
                    CpdKind::LeakyOr { leak: *leak }
                }
            })
            .collect(),
        LeakRule::Structural { weights } => structural_cpds(taxonomy, &graph, weights)?,
    };
    let mut net = Network::with_cpds(graph, kinds)?;
    for (i, cpd) in net.cpds.iter_mut().enumerate() {
        cpd.dense = net.graph.children_of(i).len() <= config.max_dense_parents;
    }
    net.hooks = hooks_from(&net.graph, params, config.sigma_floor)?;
    Ok(net)
}

fn structural_cpds(
    full: &Taxonomy,
    graph: &Taxonomy,
    weights: &BTreeMap<ClassId, f64>,
) -> Result<Vec<CpdKind>, GraphicalError> {
    for (c, &w) in weights {
        if !(w.is_finite() && w > 0.0) {
            return Err(GraphicalError::InvalidParameter(format!("weight of `{c}` must be positive, got {w}")));
        }
    }
    let weight = |i: NodeIx| weights.get(graph.name(i)).copied().unwrap_or(1.0);
    let parentless: Vec<NodeIx> = (0..graph.len())
        .filter(|&i| graph.children_of(i).is_empty())
        .collect();
    let total: f64 = parentless.iter().map(|&i| weight(i)).sum();

    let mut kinds = Vec::with_capacity(graph.len());
    for i in 0..graph.len() {
        if graph.children_of(i).is_empty() {
            let p = (weight(i) / total).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            kinds.push(CpdKind::Prior(p));
            continue;
        }
        let fi = full.require(graph.name(i).as_str())?;
        let mut covered = BTreeSet::new();
        for &c in graph.children_of(i) {
            let fc = full.require(graph.name(c).as_str())?;
            covered.insert(fc);
            covered.extend(full.descendants_of(fc).iter().copied());
        }
        let uncovered = full
            .descendants_of(fi)
            .iter()
            .filter(|&&d| full.children_of(d).is_empty() && !covered.contains(&d))
            .count();
        kinds.push(CpdKind::LeakyOr { leak: 1.0 / (uncovered as f64 + 2.0) });
    }
    Ok(kinds)
}
