//! Hierarchical precision/recall/F1 over upward paths to the lowest common
//! ancestor of the predicted and gold classes.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::taxonomy::{ClassId, Taxonomy, TaxonomyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error("instance `{0}` has a prediction but no gold label")]
    MissingGold(String),
    #[error("instance `{0}` has a gold label but no prediction")]
    MissingPrediction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcaScore {
    pub prf: Prf,
    /// The classes share no ancestor; all metrics are zero.
    pub disjoint: bool,
}

/// Precision and recall of the predicted path against the gold path, both
/// cut at their lowest common ancestor.
pub fn lca_prf(taxonomy: &Taxonomy, predicted: &str, gold: &str) -> Result<LcaScore, TaxonomyError> {
    let p = taxonomy.require(predicted)?;
    let g = taxonomy.require(gold)?;
    let Some(l) = taxonomy.lca_ix(p, g) else {
        return Ok(LcaScore { prf: Prf::default(), disjoint: true });
    };
    let up = |from| -> BTreeSet<usize> {
        taxonomy
            .shortest_upward_path(from, l)
            .expect("lca is an inclusive ancestor")
            .into_iter()
            .collect()
    };
    let (yhat, y) = (up(p), up(g));
    let common = yhat.intersection(&y).count() as f64;
    Ok(LcaScore {
        prf: Prf::new(common / yhat.len() as f64, common / y.len() as f64),
        disjoint: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceScore {
    pub instance_id: String,
    pub prf: Prf,
    /// Gold had several labels; the best-scoring one was used.
    pub multi_gold: bool,
    pub disjoint: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_instance: Vec<InstanceScore>,
    pub mean: Prf,
    /// Population standard deviation of each metric.
    pub stddev: Prf,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Scores every instance; `golds` may carry several labels per instance.
pub fn evaluate(
    taxonomy: &Taxonomy,
    predictions: &BTreeMap<String, ClassId>,
    golds: &BTreeMap<String, Vec<ClassId>>,
) -> Result<EvalReport, EvalError> {
    if predictions.is_empty() && golds.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if let Some(k) = predictions.keys().find(|k| !golds.contains_key(*k)) {
        return Err(EvalError::MissingGold(k.clone()));
    }
    if let Some(k) = golds.keys().find(|k| !predictions.contains_key(*k)) {
        return Err(EvalError::MissingPrediction(k.clone()));
    }

    let per_instance: Vec<InstanceScore> = predictions
        .par_iter()
        .map(|(id, pred)| {
            let gold = &golds[id];
            let mut best: Option<LcaScore> = None;
            for g in gold {
                let s = lca_prf(taxonomy, pred.as_str(), g.as_str())?;
                if best.is_none_or(|b| s.prf.f1 > b.prf.f1) {
                    best = Some(s);
                }
            }
            let best = best.ok_or(EvalError::MissingGold(id.clone()))?;
            Ok(InstanceScore {
                instance_id: id.clone(),
                prf: best.prf,
                multi_gold: gold.len() > 1,
                disjoint: best.disjoint,
            })
        })
        .collect::<Result<_, EvalError>>()?;

    let (mp, sp) = mean_std(per_instance.iter().map(|s| s.prf.precision));
    let (mr, sr) = mean_std(per_instance.iter().map(|s| s.prf.recall));
    let (mf, sf) = mean_std(per_instance.iter().map(|s| s.prf.f1));
    Ok(EvalReport {
        per_instance,
        mean: Prf { precision: mp, recall: mr, f1: mf },
        stddev: Prf { precision: sp, recall: sr, f1: sf },
    })
}
