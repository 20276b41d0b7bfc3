//! Score propagation: every classifier score is pushed up to the class and
//! each of its ancestors, then summed across classifiers.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::decision::{best_root, walk_entropy_ix, EntropyForm};
use crate::sheet::{ScoreSheet, SheetError};
use crate::taxonomy::{ClassId, LabelPath, Taxonomy, TaxonomyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeuristicError {
    #[error(transparent)]
    Sheet(#[from] SheetError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("instance `{0}` has no scores")]
    EmptySheet(String),
    #[error(transparent)]
    Decision(#[from] crate::decision::DecisionError),
}

/// Aggregate scores `p(c)` over the subgraph induced by the scored classes.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedScores {
    graph: Taxonomy,
    p: Vec<f64>,
}

impl PropagatedScores {
    pub fn graph(&self) -> &Taxonomy {
        &self.graph
    }

    /// Scores aligned with the graph's node indices.
    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn score(&self, c: &str) -> Option<f64> {
        self.graph.ix(c).map(|i| self.p[i])
    }

    pub fn to_map(&self) -> BTreeMap<ClassId, f64> {
        self.graph
            .classes()
            .iter()
            .cloned()
            .zip(self.p.iter().copied())
            .collect()
    }
}

pub fn propagate(taxonomy: &Taxonomy, sheet: &ScoreSheet) -> Result<PropagatedScores, HeuristicError> {
    sheet.validate(taxonomy)?;
    if sheet.is_empty() {
        return Err(HeuristicError::EmptySheet(sheet.instance_id.clone()));
    }
    let graph = taxonomy.induced_subgraph(sheet.classes().into_iter().map(ClassId::as_str))?;
    let mut p = vec![0.0; graph.len()];
    for (_, class, y) in sheet.iter() {
        let c = graph.require(class.as_str())?;
        // Ancestor set, not paths: a DAG class reaches each ancestor once.
        p[c] += y;
        for &a in graph.ancestors_of(c) {
            p[a] += y;
        }
    }
    Ok(PropagatedScores { graph, p })
}

/// Propagates `sheet` and runs the entropy walk from the best-scoring root.
pub fn aggregate_heuristic(
    taxonomy: &Taxonomy,
    sheet: &ScoreSheet,
    theta: f64,
    form: EntropyForm,
) -> Result<LabelPath, HeuristicError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(crate::decision::DecisionError::ThresholdOutOfRange(theta).into());
    }
    let scores = propagate(taxonomy, sheet)?;
    let g = scores.graph();
    let values: Vec<Option<f64>> = scores.values().iter().copied().map(Some).collect();
    let start = best_root(g, &values).ok_or(crate::decision::DecisionError::NoRoot)?;
    Ok(LabelPath::from_ixs(
        g,
        &walk_entropy_ix(g, &values, theta, form, start),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn id(s: &str) -> ClassId {
        ClassId::new(s).unwrap()
    }

    #[test]
    fn animal_fragment_scores() {
        let t = fixtures::wordnet_animals();
        let p = propagate(&t, &fixtures::two_classifier_sheet()).unwrap();
        let expected = [
            ("dog", 1.7),
            ("domestic_animal", 1.7),
            ("canine", 1.9),
            ("carnivore", 2.0),
            ("animal", 2.0),
            ("working_dog", 0.7),
            ("watch_dog", 0.4),
            ("pinscher", 0.4),
            ("doberman", 0.4),
            ("shepherd_dog", 0.3),
            ("rottweiler", 0.3),
            ("fox", 0.2),
            ("feline", 0.1),
            ("cat", 0.1),
        ];
        assert_eq!(p.graph().len(), expected.len());
        for (c, v) in expected {
            assert!((p.score(c).unwrap() - v).abs() < 1e-9, "{c}");
        }
    }

    #[test]
    fn single_score_reaches_ancestors_once() {
        let t = fixtures::wordnet_animals();
        let mut s = ScoreSheet::new("i");
        s.insert("f", id("doberman"), 1.0).unwrap();
        let p = propagate(&t, &s).unwrap();
        for c in t.ancestors("doberman").unwrap() {
            assert_eq!(p.score(c.as_str()), Some(1.0));
        }
        assert_eq!(p.score("doberman"), Some(1.0));
        assert_eq!(p.score("cat"), None);
    }

    #[test]
    fn unknown_class_is_an_error() {
        let t = fixtures::wordnet_animals();
        let mut s = ScoreSheet::new("i");
        s.insert("f", id("unicorn"), 0.3).unwrap();
        assert!(matches!(propagate(&t, &s), Err(HeuristicError::Sheet(_))));
        assert!(matches!(
            propagate(&t, &ScoreSheet::new("e")),
            Err(HeuristicError::EmptySheet(_))
        ));
    }

    #[test]
    fn tree_single_class_path() {
        let t = Taxonomy::from_edges([
            (id("a"), id("r")),
            (id("b"), id("r")),
            (id("a1"), id("a")),
        ])
        .unwrap();
        let mut s = ScoreSheet::new("i");
        s.insert("f", id("a1"), 0.9).unwrap();
        let path = aggregate_heuristic(&t, &s, 0.5, EntropyForm::RawScores).unwrap();
        assert_eq!(path.to_string(), "r>a>a1");
    }

    #[test]
    fn multi_root_starts_at_heaviest_root() {
        let t = Taxonomy::from_edges([(id("a"), id("r1")), (id("b"), id("r2"))]).unwrap();
        let mut s = ScoreSheet::new("i");
        s.insert("f", id("a"), 0.2).unwrap();
        s.insert("f", id("b"), 0.6).unwrap();
        let path = aggregate_heuristic(&t, &s, 0.5, EntropyForm::RawScores).unwrap();
        assert_eq!(path.to_string(), "r2>b");
    }
}
