//! Turning per-class scores into a terminated label path.
//!
//! Two greedy walks start at a root and descend one child at a time:
//! the entropy walk stops when the children's scores are too evenly spread,
//! the marginal walk stops when no child is probable enough. Either can be
//! followed by an entry-level backoff that truncates the path.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graphical::PosteriorReport;
use crate::heuristic::PropagatedScores;
use crate::taxonomy::{ClassId, LabelPath, NodeIx, Taxonomy, TaxonomyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecisionError {
    #[error("threshold {0} is outside [0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("no scored root to start from")]
    NoRoot,
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}

/// How the spread of a node's child scores is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntropyForm {
    /// `-Σ p ln p / ln n` over the raw child scores.
    #[default]
    RawScores,
    /// Shannon entropy of the scores rescaled to sum to one, over `ln n`.
    Distribution,
}

impl EntropyForm {
    pub fn measure(self, values: &[f64]) -> f64 {
        match self {
            EntropyForm::RawScores => raw_score_entropy(values),
            EntropyForm::Distribution => normalized_entropy(values),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EntropyForm::RawScores => "raw",
            EntropyForm::Distribution => "distribution",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "raw" => Some(EntropyForm::RawScores),
            "distribution" => Some(EntropyForm::Distribution),
            _ => None,
        }
    }
}

/// Entropy of `values` normalized to a distribution, divided by `ln n`.
/// A single value has entropy 0; an all-zero list is maximally uncertain.
pub fn normalized_entropy(values: &[f64]) -> f64 {
    let n = values.len();
    if n <= 1 {
        return 0.0;
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return 1.0;
    }
    let h: f64 = values
        .iter()
        .map(|&v| v / total)
        .filter(|&q| q > 0.0)
        .map(|q| -q * q.ln())
        .sum();
    (h / (n as f64).ln()).clamp(0.0, 1.0)
}

/// `-Σ v ln v / ln n` with the scores taken as they are. Mass above 1
/// contributes negatively, so concentrated aggregate mass reads as certain.
pub fn raw_score_entropy(values: &[f64]) -> f64 {
    let n = values.len();
    if n <= 1 {
        return 0.0;
    }
    let h: f64 = values
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.ln())
        .sum();
    h / (n as f64).ln()
}

fn check_threshold(x: f64) -> Result<(), DecisionError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(DecisionError::ThresholdOutOfRange(x))
    }
}

// Lexicographically first index wins ties because indices follow name order.
fn argmax<I: Iterator<Item = (NodeIx, f64)>>(it: I) -> Option<NodeIx> {
    let mut best: Option<(NodeIx, f64)> = None;
    for (i, v) in it {
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// The root with the largest score.
pub fn best_root(graph: &Taxonomy, values: &[Option<f64>]) -> Option<NodeIx> {
    argmax(
        graph
            .root_ixs()
            .iter()
            .filter_map(|&r| values[r].map(|v| (r, v))),
    )
}

/// Index-level entropy walk. `values[i]` is the score of node `i`; absent
/// children count as 0.
pub fn walk_entropy_ix(
    graph: &Taxonomy,
    values: &[Option<f64>],
    theta: f64,
    form: EntropyForm,
    start: NodeIx,
) -> Vec<NodeIx> {
    let mut path = vec![start];
    let mut at = start;
    loop {
        let children = graph.children_of(at);
        if children.is_empty() {
            break;
        }
        let ys: Vec<f64> = children.iter().map(|&c| values[c].unwrap_or(0.0)).collect();
        if form.measure(&ys) > theta {
            break;
        }
        at = argmax(children.iter().copied().zip(ys)).expect("non-empty");
        path.push(at);
    }
    path
}

/// Index-level marginal walk: descend into the most probable child whose
/// score is at least `tau`.
pub fn walk_marginal_ix(
    graph: &Taxonomy,
    values: &[Option<f64>],
    tau: f64,
    start: NodeIx,
) -> Vec<NodeIx> {
    let mut path = vec![start];
    let mut at = start;
    while let Some(next) = argmax(
        graph
            .children_of(at)
            .iter()
            .filter_map(|&c| values[c].map(|v| (c, v)))
            .filter(|&(_, v)| v >= tau),
    ) {
        path.push(next);
        at = next;
    }
    path
}

/// Entropy walk over heuristic scores from `start`.
pub fn walk_entropy(
    scores: &PropagatedScores,
    theta: f64,
    form: EntropyForm,
    start: &str,
) -> Result<LabelPath, DecisionError> {
    check_threshold(theta)?;
    let g = scores.graph();
    let start = g.require(start)?;
    let values: Vec<Option<f64>> = scores.values().iter().copied().map(Some).collect();
    Ok(LabelPath::from_ixs(
        g,
        &walk_entropy_ix(g, &values, theta, form, start),
    ))
}

/// Marginal-threshold walk over a posterior report, starting at the most
/// probable root of `taxonomy`.
pub fn walk_marginal(
    report: &PosteriorReport,
    taxonomy: &Taxonomy,
    tau: f64,
) -> Result<LabelPath, DecisionError> {
    let values = report.aligned(taxonomy);
    let start = best_root(taxonomy, &values).ok_or(DecisionError::NoRoot)?;
    Ok(LabelPath::from_ixs(
        taxonomy,
        &walk_marginal_ix(taxonomy, &values, tau, start),
    ))
}

/// Truncates `path` at its deepest member of `entry_set`. The flag is set
/// when no member is on the path and the path comes back unchanged.
pub fn entry_level_backoff(path: &LabelPath, entry_set: &BTreeSet<ClassId>) -> (LabelPath, bool) {
    match path.nodes().iter().rposition(|c| entry_set.contains(c)) {
        Some(k) => (path.truncated(k + 1), false),
        None => (path.clone(), true),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TerminationPolicy {
    Entropy { theta: f64, form: EntropyForm },
    Marginal { tau: f64 },
    EntryLevel {
        base: Box<TerminationPolicy>,
        entry_set: BTreeSet<ClassId>,
    },
}

/// A terminated path. `flagged` marks an entry-level backoff that found no
/// entry-level class on the path.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub path: LabelPath,
    pub flagged: bool,
}

impl TerminationPolicy {
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), DecisionError> {
        match self {
            TerminationPolicy::Entropy { theta, .. } => check_threshold(*theta),
            // A threshold above 1 is allowed here: it pins every path to the root.
            TerminationPolicy::Marginal { tau } if tau.is_nan() || *tau < 0.0 => {
                Err(DecisionError::ThresholdOutOfRange(*tau))
            }
            TerminationPolicy::Marginal { .. } => Ok(()),
            TerminationPolicy::EntryLevel { base, entry_set } => {
                for c in entry_set {
                    taxonomy.require(c.as_str())?;
                }
                base.validate(taxonomy)
            }
        }
    }

    /// Runs the policy over node scores aligned with `graph`.
    pub fn decide(&self, graph: &Taxonomy, values: &[Option<f64>]) -> Result<Decision, DecisionError> {
        let start = best_root(graph, values).ok_or(DecisionError::NoRoot)?;
        let ixs = match self {
            TerminationPolicy::Entropy { theta, form } => {
                check_threshold(*theta)?;
                walk_entropy_ix(graph, values, *theta, *form, start)
            }
            TerminationPolicy::Marginal { tau } => walk_marginal_ix(graph, values, *tau, start),
            TerminationPolicy::EntryLevel { base, entry_set } => {
                let inner = base.decide(graph, values)?;
                let (path, flagged) = entry_level_backoff(&inner.path, entry_set);
                return Ok(Decision { path, flagged });
            }
        };
        Ok(Decision {
            path: LabelPath::from_ixs(graph, &ixs),
            flagged: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::heuristic::propagate;
    use std::collections::BTreeMap;

    fn id(s: &str) -> ClassId {
        ClassId::new(s).unwrap()
    }

    #[test]
    fn normalized_entropy_examples() {
        assert!((normalized_entropy(&[1.0, 1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(normalized_entropy(&[1.0, 0.0]), 0.0);
        // Independent evaluation of the two-term formula.
        let (a, b) = (1.7f64 / 3.7, 2.0f64 / 3.7);
        let expected = -(a * a.ln() + b * b.ln()) / 2f64.ln();
        assert!((normalized_entropy(&[1.7, 2.0]) - expected).abs() < 1e-15);
        assert!((normalized_entropy(&[1.7, 2.0]) - 0.995_252_549_439_679_1).abs() < 1e-12);
        assert_eq!(normalized_entropy(&[0.4]), 0.0);
        assert_eq!(normalized_entropy(&[0.0, 0.0, 0.0]), 1.0);
    }

    #[test]
    fn raw_entropy_examples() {
        assert!((raw_score_entropy(&[0.4, 0.3]) - 1.049_860_916_204_807).abs() < 1e-12);
        assert!((raw_score_entropy(&[1.7, 2.0]) + 3.301_409_068_817_061).abs() < 1e-12);
        assert_eq!(raw_score_entropy(&[1.0, 0.0]), 0.0);
        assert_eq!(raw_score_entropy(&[0.7]), 0.0);
    }

    fn animal_walk(theta: f64, form: EntropyForm) -> String {
        let t = fixtures::wordnet_animals();
        let p = propagate(&t, &fixtures::two_classifier_sheet()).unwrap();
        walk_entropy(&p, theta, form, "animal").unwrap().to_string()
    }

    #[test]
    fn animal_path_for_every_threshold_with_raw_scores() {
        for k in 0..=100 {
            let theta = k as f64 / 100.0;
            assert_eq!(
                animal_walk(theta, EntropyForm::RawScores),
                "animal>carnivore>canine>dog>working_dog",
                "theta = {theta}"
            );
        }
    }

    #[test]
    fn distribution_form_stops_early_or_overshoots() {
        assert_eq!(animal_walk(0.99, EntropyForm::Distribution), "animal");
        assert_eq!(
            animal_walk(0.996, EntropyForm::Distribution),
            "animal>carnivore>canine>dog>working_dog>watch_dog>pinscher>doberman"
        );
    }

    #[test]
    fn zero_threshold() {
        let t = fixtures::wordnet_animals();
        let p = propagate(&t, &fixtures::two_classifier_sheet()).unwrap();
        // Two nonzero children: any non-degenerate entropy exceeds 0.
        assert_eq!(
            walk_entropy(&p, 0.0, EntropyForm::Distribution, "animal")
                .unwrap()
                .to_string(),
            "animal"
        );
        // Point mass: entropy 0 is not > 0, so the walk descends.
        let g = Taxonomy::from_edges([(id("a"), id("r")), (id("b"), id("r"))]).unwrap();
        let values = vec![Some(1.0), Some(0.0), Some(1.0)];
        let path = walk_entropy_ix(&g, &values, 0.0, EntropyForm::Distribution, 2);
        assert_eq!(path, vec![2, 0]);
    }

    #[test]
    fn theta_one_reaches_leaf() {
        let t = fixtures::wordnet_animals();
        let p = propagate(&t, &fixtures::two_classifier_sheet()).unwrap();
        let path = walk_entropy(&p, 1.0, EntropyForm::Distribution, "animal").unwrap();
        assert!(p.graph().children(path.terminal().as_str()).unwrap().is_empty());
    }

    fn report(pairs: &[(&str, f64)]) -> PosteriorReport {
        PosteriorReport {
            instance_id: "i".into(),
            marginal: pairs.iter().map(|&(c, v)| (id(c), v)).collect::<BTreeMap<_, _>>(),
            log_evidence: 0.0,
        }
    }

    #[test]
    fn marginal_walk() {
        let t = fixtures::wordnet_animals();
        let chain = [
            "animal", "carnivore", "feline", "cat", "wild_cat",
        ];
        let marg: Vec<(&str, f64)> = t
            .classes()
            .iter()
            .map(|c| (c.as_str(), if chain.contains(&c.as_str()) { 1.0 } else { 0.0 }))
            .collect();
        let r = report(&marg);
        assert_eq!(
            walk_marginal(&r, &t, 0.5).unwrap().to_string(),
            "animal>carnivore>feline>cat>wild_cat"
        );
        assert_eq!(walk_marginal(&r, &t, 1.01).unwrap().to_string(), "animal");
    }

    #[test]
    fn backoff() {
        let t = fixtures::wordnet_animals();
        let path = LabelPath::new(
            &t,
            ["animal", "carnivore", "canine", "dog", "working_dog"]
                .iter()
                .map(|s| id(s))
                .collect(),
        )
        .unwrap();
        let entry: BTreeSet<ClassId> = [id("dog")].into();
        let (p, flag) = entry_level_backoff(&path, &entry);
        assert_eq!(p.to_string(), "animal>carnivore>canine>dog");
        assert!(!flag);
        let entry: BTreeSet<ClassId> = [id("working_dog"), id("dog")].into();
        assert_eq!(entry_level_backoff(&path, &entry).0, path);
        let entry: BTreeSet<ClassId> = [id("cat")].into();
        let (p, flag) = entry_level_backoff(&path, &entry);
        assert_eq!(p, path);
        assert!(flag);
    }

    #[test]
    fn policy_validation() {
        let t = fixtures::wordnet_animals();
        assert!(TerminationPolicy::Entropy { theta: 1.5, form: EntropyForm::RawScores }
            .validate(&t)
            .is_err());
        assert!(TerminationPolicy::Marginal { tau: 1.01 }.validate(&t).is_ok());
        let bad = TerminationPolicy::EntryLevel {
            base: Box::new(TerminationPolicy::Marginal { tau: 0.5 }),
            entry_set: [id("unicorn")].into(),
        };
        assert!(bad.validate(&t).is_err());
    }
}
