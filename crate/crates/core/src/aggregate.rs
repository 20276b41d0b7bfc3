//! Per-instance aggregation: score the taxonomy with either method, then
//! terminate a path with a [`TerminationPolicy`].

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::decision::{DecisionError, TerminationPolicy};
use crate::graphical::{
    build_network, GraphicalError, JunctionTree, JunctionTreeConfig, Network, NetworkConfig,
    ParamSet, PosteriorReport,
};
use crate::heuristic::{propagate, HeuristicError};
use crate::sheet::ScoreSheet;
use crate::taxonomy::{ClassId, LabelPath, Taxonomy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregateError {
    #[error(transparent)]
    Heuristic(#[from] HeuristicError),
    #[error(transparent)]
    Graphical(#[from] GraphicalError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error("instance `{0}`: {1}")]
    Instance(String, Box<AggregateError>),
}

/// A network compiled once and shared across instances.
#[derive(Debug, Clone)]
pub struct GraphicalModel {
    network: Network,
    jt: JunctionTree,
}

impl GraphicalModel {
    pub fn new(
        taxonomy: &Taxonomy,
        params: &ParamSet,
        network: &NetworkConfig,
        jt: &JunctionTreeConfig,
    ) -> Result<Self, GraphicalError> {
        let network = build_network(taxonomy, params, network)?;
        let jt = JunctionTree::compile(&network, jt)?;
        Ok(GraphicalModel { network, jt })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Scores of classifier/class pairs without parameters are ignored.
    pub fn posterior(&self, sheet: &ScoreSheet) -> Result<PosteriorReport, GraphicalError> {
        let ev = self.network.evidence_for(sheet)?;
        self.jt.posterior(&ev, &sheet.instance_id)
    }
}

#[derive(Debug, Clone)]
pub enum Method {
    Heuristic,
    Graphical(Box<GraphicalModel>),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Heuristic => "heuristic",
            Method::Graphical(_) => "graphical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub instance_id: String,
    pub method: &'static str,
    pub path: LabelPath,
    /// Entry-level backoff found no entry-level class on the path.
    pub flagged: bool,
    /// Propagated score or posterior marginal of every scored node.
    pub node_values: BTreeMap<ClassId, f64>,
    pub log_evidence: Option<f64>,
}

pub fn aggregate_one(
    taxonomy: &Taxonomy,
    method: &Method,
    policy: &TerminationPolicy,
    sheet: &ScoreSheet,
) -> Result<PathRecord, AggregateError> {
    sheet.validate(taxonomy).map_err(HeuristicError::from)?;
    let (decision, node_values, log_evidence) = match method {
        Method::Heuristic => {
            let p = propagate(taxonomy, sheet)?;
            let values: Vec<Option<f64>> = p.values().iter().copied().map(Some).collect();
            (policy.decide(p.graph(), &values)?, p.to_map(), None)
        }
        Method::Graphical(model) => {
            let r = model.posterior(sheet)?;
            let g = model.network().graph();
            (policy.decide(g, &r.aligned(g))?, r.marginal, Some(r.log_evidence))
        }
    };
    Ok(PathRecord {
        instance_id: sheet.instance_id.clone(),
        method: method.name(),
        path: decision.path,
        flagged: decision.flagged,
        node_values,
        log_evidence,
    })
}

/// Aggregates in parallel; records come back sorted by instance id.
pub fn aggregate_many(
    taxonomy: &Taxonomy,
    method: &Method,
    policy: &TerminationPolicy,
    sheets: &[ScoreSheet],
) -> Result<Vec<PathRecord>, AggregateError> {
    policy.validate(taxonomy)?;
    let mut out: Vec<PathRecord> = sheets
        .par_iter()
        .map(|s| {
            aggregate_one(taxonomy, method, policy, s)
                .map_err(|e| AggregateError::Instance(s.instance_id.clone(), Box::new(e)))
        })
        .collect::<Result<_, _>>()?;
    out.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    Ok(out)
}

/// The class a single classifier scores highest; ties go to the first class
/// in name order.
pub fn classifier_argmax(sheet: &ScoreSheet, classifier: &str) -> Option<ClassId> {
    let (_, scores) = sheet.classifiers().find(|(j, _)| *j == classifier)?;
    let mut best: Option<(&ClassId, f64)> = None;
    for (c, &y) in scores {
        if best.is_none_or(|(_, b)| y > b) {
            best = Some((c, y));
        }
    }
    best.map(|(c, _)| c.clone())
}
