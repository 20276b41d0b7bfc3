//! Bayesian network over taxonomy classes with classifier-score evidence.
//!
//! Each class is a binary node `z(c)`. Arrows run from a class's taxonomy
//! children to the class, and a class is on with certainty whenever one of
//! its children is on; otherwise it switches on with a leak probability.
//! Observed classifier scores hang off their class node. Because they are
//! always observed, each reduces to a two-valued likelihood factor, so exact
//! inference only ever touches binary variables.

mod brute;
mod junction;
mod network;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use thiserror::Error;

use crate::taxonomy::{ClassId, Taxonomy, TaxonomyError};

pub use brute::{brute_force_marginals, BRUTE_FORCE_MAX_NODES};
pub use junction::{JunctionTree, JunctionTreeConfig, DEFAULT_MAX_WIDTH};
pub use network::{
    build_network, ClassNodeCpd, CpdKind, Hook, LeakRule, Network, NetworkConfig,
    DEFAULT_MAX_DENSE_PARENTS,
};

/// Lower bound applied to every standard deviation.
pub const SIGMA_FLOOR: f64 = 1e-3;

/// Probabilities are clamped to `[SCORE_CLAMP, 1 - SCORE_CLAMP]` before the logit.
pub const SCORE_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphicalError {
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("class `{node}` has {fanout} children, above the dense-table cap of {cap}")]
    ChildFanoutExceeded { node: ClassId, fanout: usize, cap: usize },
    #[error("junction tree induced width {width} exceeds the cap of {cap}")]
    TreewidthExceeded { width: usize, cap: usize },
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("invalid evidence on `{0}`: likelihoods must be non-negative and not both zero")]
    InvalidEvidence(ClassId),
    #[error("evidence has zero probability under the model")]
    ImpossibleEvidence,
    #[error("{nodes} class nodes exceed the enumeration cap of {cap}")]
    TooLarge { nodes: usize, cap: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Logit of a probability after clamping it away from 0 and 1.
pub fn transform_score(y: f64) -> f64 {
    let y = y.clamp(SCORE_CLAMP, 1.0 - SCORE_CLAMP);
    (y / (1.0 - y)).ln()
}

/// Inverse of [`transform_score`] on the unclamped range.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// How a classifier's output for one class depends on the true label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservationKind {
    /// Logit score ~ N(mu1, sigma1²) when the class holds, N(mu0, sigma0²) otherwise.
    Binormal {
        mu0: f64,
        sigma0: f64,
        mu1: f64,
        sigma1: f64,
    },
    /// `alpha = Pr[y=1 | z=1]`, `beta = Pr[y=0 | z=0]`.
    Discrete { alpha: f64, beta: f64 },
}

impl ObservationKind {
    pub fn validate(&self) -> Result<(), GraphicalError> {
        match *self {
            ObservationKind::Binormal { mu0, sigma0, mu1, sigma1 } => {
                if ![mu0, sigma0, mu1, sigma1].iter().all(|v| v.is_finite()) {
                    return Err(GraphicalError::NonFiniteInput("binormal parameter".into()));
                }
                if sigma0 <= 0.0 || sigma1 <= 0.0 {
                    return Err(GraphicalError::InvalidParameter(format!(
                        "standard deviations must be positive, got {sigma0} and {sigma1}"
                    )));
                }
            }
            ObservationKind::Discrete { alpha, beta } => {
                if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0) {
                    return Err(GraphicalError::InvalidParameter(format!(
                        "alpha and beta must lie in (0, 1), got {alpha} and {beta}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Raises both standard deviations to at least `floor`.
    pub fn floored(self, floor: f64) -> Self {
        match self {
            ObservationKind::Binormal { mu0, sigma0, mu1, sigma1 } => ObservationKind::Binormal {
                mu0,
                sigma0: sigma0.max(floor),
                mu1,
                sigma1: sigma1.max(floor),
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationParams {
    pub classifier: String,
    pub node: ClassId,
    pub kind: ObservationKind,
}

/// Observation parameters keyed by `(classifier, class)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    entries: BTreeMap<(String, ClassId), ObservationKind>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        classifier: impl Into<String>,
        node: ClassId,
        kind: ObservationKind,
    ) -> Result<(), GraphicalError> {
        kind.validate()?;
        self.entries.insert((classifier.into(), node), kind);
        Ok(())
    }

    pub fn get(&self, classifier: &str, node: &str) -> Option<&ObservationKind> {
        // BTreeMap lookups need an owned key for tuple keys.
        let key = (classifier.to_string(), ClassId::new(node).ok()?);
        self.entries.get(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = ObservationParams> + '_ {
        self.entries.iter().map(|((j, c), k)| ObservationParams {
            classifier: j.clone(),
            node: c.clone(),
            kind: *k,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassId> {
        self.entries.keys().map(|(_, c)| c)
    }
}

impl FromIterator<ObservationParams> for ParamSet {
    fn from_iter<T: IntoIterator<Item = ObservationParams>>(iter: T) -> Self {
        ParamSet {
            entries: iter
                .into_iter()
                .map(|p| ((p.classifier, p.node), p.kind))
                .collect(),
        }
    }
}

/// Soft evidence on one class node. The likelihoods of the observation under
/// `z = 0` and `z = 1` are `l0 · e^log_scale` and `l1 · e^log_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceFactor {
    pub node: ClassId,
    pub l0: f64,
    pub l1: f64,
    pub log_scale: f64,
}

impl EvidenceFactor {
    pub fn new(node: ClassId, l0: f64, l1: f64) -> Self {
        EvidenceFactor { node, l0, l1, log_scale: 0.0 }
    }

    pub fn likelihoods(&self) -> (f64, f64) {
        let s = self.log_scale.exp();
        (self.l0 * s, self.l1 * s)
    }

    /// Rescales so that the larger likelihood is 1, folding the factor into
    /// `log_scale`.
    pub(crate) fn normalized(&self) -> Result<(f64, f64, f64), GraphicalError> {
        let (l0, l1) = (self.l0, self.l1);
        if !(l0.is_finite() && l1.is_finite() && self.log_scale.is_finite()) {
            return Err(GraphicalError::NonFiniteInput(format!("evidence on `{}`", self.node)));
        }
        let m = l0.max(l1);
        if l0 < 0.0 || l1 < 0.0 || m <= 0.0 {
            return Err(GraphicalError::InvalidEvidence(self.node.clone()));
        }
        Ok((l0 / m, l1 / m, self.log_scale + m.ln()))
    }
}

fn normal_log_density(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
}

/// Likelihood pair for one observed score. Binormal kinds expect the
/// logit-transformed score; discrete kinds expect 0 or 1.
pub fn score_evidence(obs: &ObservationParams, y: f64) -> Result<EvidenceFactor, GraphicalError> {
    if !y.is_finite() {
        return Err(GraphicalError::NonFiniteInput(format!(
            "score for {}/{}",
            obs.classifier, obs.node
        )));
    }
    match obs.kind {
        ObservationKind::Binormal { mu0, sigma0, mu1, sigma1 } => {
            let a = normal_log_density(y, mu0, sigma0);
            let b = normal_log_density(y, mu1, sigma1);
            let m = a.max(b);
            Ok(EvidenceFactor {
                node: obs.node.clone(),
                l0: (a - m).exp(),
                l1: (b - m).exp(),
                log_scale: m,
            })
        }
        ObservationKind::Discrete { alpha, beta } => {
            let (l0, l1) = if y >= 0.5 { (1.0 - beta, alpha) } else { (beta, 1.0 - alpha) };
            Ok(EvidenceFactor::new(obs.node.clone(), l0, l1))
        }
    }
}

/// Posterior marginals `Pr[z(c) = 1 | evidence]` for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorReport {
    pub instance_id: String,
    pub marginal: BTreeMap<ClassId, f64>,
    /// Natural log of the probability (density) of all observed evidence.
    pub log_evidence: f64,
}

impl PosteriorReport {
    /// Marginals aligned with `taxonomy`'s node indices.
    pub fn aligned(&self, taxonomy: &Taxonomy) -> Vec<Option<f64>> {
        taxonomy
            .classes()
            .iter()
            .map(|c| self.marginal.get(c).copied())
            .collect()
    }
}

/// Exact marginals by junction-tree message passing.
pub fn infer_marginals(
    network: &Network,
    evidence: &[EvidenceFactor],
    instance_id: &str,
) -> Result<PosteriorReport, GraphicalError> {
    let jt = JunctionTree::compile(network, &JunctionTreeConfig::default())?;
    jt.posterior(evidence, instance_id)
}
