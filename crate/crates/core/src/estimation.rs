//! Observation-parameter estimation, supervised from labeled instances or
//! unsupervised by EM over the network's class marginals.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::graphical::{
    build_network, transform_score, GraphicalError, JunctionTree, JunctionTreeConfig, Network,
    NetworkConfig, ObservationKind, ParamSet, SIGMA_FLOOR,
};
use crate::sheet::{ScoreSheet, SheetError};
use crate::taxonomy::{ClassId, Taxonomy, TaxonomyError};

/// Discrete parameters are kept inside `[DISCRETE_CLAMP, 1 - DISCRETE_CLAMP]`.
pub const DISCRETE_CLAMP: f64 = 1e-6;

/// Log-likelihood decreases larger than this abort EM.
pub const EM_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Graphical(#[from] GraphicalError),
    #[error(transparent)]
    Sheet(#[from] SheetError),
    #[error("no instances to fit")]
    NoInstances,
    #[error("log-likelihood fell from {previous} to {current} at iteration {iteration}")]
    NonImprovingLikelihood {
        iteration: usize,
        previous: f64,
        current: f64,
    },
}

/// `z = 1` on `gold` and its ancestors, `0` on every other class.
pub fn gold_to_binary(taxonomy: &Taxonomy, gold: &str) -> Result<BTreeMap<ClassId, bool>, TaxonomyError> {
    let g = taxonomy.require(gold)?;
    Ok((0..taxonomy.len())
        .map(|i| (taxonomy.name(i).clone(), i == g || taxonomy.is_ancestor(i, g)))
        .collect())
}

/// Indices of classes that hold for any of the gold labels.
fn positive_set(taxonomy: &Taxonomy, golds: &[ClassId]) -> Result<BTreeSet<usize>, TaxonomyError> {
    let mut on = BTreeSet::new();
    for g in golds {
        let i = taxonomy.require(g.as_str())?;
        on.insert(i);
        on.extend(taxonomy.ancestors_of(i).iter().copied());
    }
    Ok(on)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinormalFit {
    pub kind: ObservationKind,
    /// One side had fewer than two observations and fell back to pooled
    /// statistics.
    pub fallback: bool,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Class-conditional means and population standard deviations of
/// transformed scores, with the standard deviations floored at `floor`.
///
/// A side with fewer than two observations gets the pooled standard
/// deviation and the pooled mean shifted by one (down for `z = 0`, up for
/// `z = 1`). With no data at all the result is `N(-1, 1)` / `N(1, 1)`.
pub fn fit_binormal(scores: &[(f64, bool)], floor: f64) -> BinormalFit {
    let neg: Vec<f64> = scores.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let pos: Vec<f64> = scores.iter().filter(|s| s.1).map(|s| s.0).collect();
    let pooled = if scores.is_empty() {
        (0.0, 1.0)
    } else {
        mean_std(&scores.iter().map(|s| s.0).collect::<Vec<_>>())
    };
    let side = |xs: &[f64], shift: f64| {
        if xs.len() >= 2 {
            let (m, s) = mean_std(xs);
            (m, s.max(floor), false)
        } else {
            (pooled.0 + shift, pooled.1.max(floor), true)
        }
    };
    let (mu0, sigma0, f0) = side(&neg, -1.0);
    let (mu1, sigma1, f1) = side(&pos, 1.0);
    BinormalFit {
        kind: ObservationKind::Binormal { mu0, sigma0, mu1, sigma1 },
        fallback: f0 || f1,
    }
}

/// `alpha = Pr[y=1 | z=1]` and `beta = Pr[y=0 | z=0]` by counting with
/// `smoothing` pseudo-counts per cell. Empty rows without smoothing give 0.5.
pub fn fit_discrete(labels: &[(bool, bool)], smoothing: f64) -> (f64, f64) {
    let count = |f: &dyn Fn(&(bool, bool)) -> bool| labels.iter().filter(|l| f(l)).count() as f64;
    let (tp, pos) = (count(&|l| l.0 && l.1), count(&|l| l.1));
    let (tn, neg) = (count(&|l| !l.0 && !l.1), count(&|l| !l.1));
    let ratio = |num: f64, den: f64| {
        if den + 2.0 * smoothing > 0.0 {
            (num + smoothing) / (den + 2.0 * smoothing)
        } else {
            0.5
        }
    };
    (ratio(tp, pos), ratio(tn, neg))
}

/// Weighted mean and standard deviation with weights `w`. `None` when the
/// total weight vanishes.
pub fn weighted_moments(obs: &[(f64, f64)]) -> Option<(f64, f64)> {
    let total: f64 = obs.iter().map(|o| o.1).sum();
    if total <= f64::MIN_POSITIVE {
        return None;
    }
    let mean = obs.iter().map(|&(y, w)| w * y).sum::<f64>() / total;
    let var = obs.iter().map(|&(y, w)| w * ((y - mean) * (y - mean))).sum::<f64>() / total;
    Some((mean, var.sqrt()))
}

/// M-step for one hook: observations are `(score, q)` with `q` the posterior
/// probability that the class holds. Sides without weight keep `prev`.
pub fn m_step(prev: ObservationKind, obs: &[(f64, f64)], floor: f64) -> ObservationKind {
    match prev {
        ObservationKind::Binormal { mu0, sigma0, mu1, sigma1 } => {
            let pos: Vec<(f64, f64)> = obs.iter().map(|&(y, q)| (y, q)).collect();
            let neg: Vec<(f64, f64)> = obs.iter().map(|&(y, q)| (y, 1.0 - q)).collect();
            let (mu0, sigma0) = weighted_moments(&neg).map_or((mu0, sigma0), |(m, s)| (m, s.max(floor)));
            let (mu1, sigma1) = weighted_moments(&pos).map_or((mu1, sigma1), |(m, s)| (m, s.max(floor)));
            ObservationKind::Binormal { mu0, sigma0, mu1, sigma1 }
        }
        ObservationKind::Discrete { alpha, beta } => {
            let clamp = |p: f64| p.clamp(DISCRETE_CLAMP, 1.0 - DISCRETE_CLAMP);
            let pos: f64 = obs.iter().map(|o| o.1).sum();
            let neg: f64 = obs.iter().map(|o| 1.0 - o.1).sum();
            let hit: f64 = obs.iter().filter(|o| o.0 >= 0.5).map(|o| o.1).sum();
            let rej: f64 = obs.iter().filter(|o| o.0 < 0.5).map(|o| 1.0 - o.1).sum();
            ObservationKind::Discrete {
                alpha: if pos > 0.0 { clamp(hit / pos) } else { alpha },
                beta: if neg > 0.0 { clamp(rej / neg) } else { beta },
            }
        }
    }
}

/// What kind of observation model to fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitKind {
    Binormal,
    /// Pseudo-count per cell; 1 is the usual choice.
    Discrete { smoothing: f64 },
}

/// An instance with known gold class(es).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSheet {
    pub sheet: ScoreSheet,
    pub gold: Vec<ClassId>,
}

/// Supervised fit of every `(classifier, class)` hook seen in `records`.
/// Returns the parameters and the hooks that hit the binormal fallback.
pub fn fit_supervised(
    taxonomy: &Taxonomy,
    records: &[LabeledSheet],
    kind: FitKind,
    floor: f64,
) -> Result<(ParamSet, Vec<(String, ClassId)>), EstimationError> {
    if records.is_empty() {
        return Err(EstimationError::NoInstances);
    }
    let mut per_hook: BTreeMap<(String, ClassId), Vec<(f64, bool)>> = BTreeMap::new();
    for r in records {
        r.sheet.validate(taxonomy)?;
        let on = positive_set(taxonomy, &r.gold)?;
        for (j, c, y) in r.sheet.iter() {
            let z = on.contains(&taxonomy.require(c.as_str())?);
            per_hook.entry((j.to_string(), c.clone())).or_default().push((y, z));
        }
    }
    let mut params = ParamSet::new();
    let mut flagged = Vec::new();
    for ((j, c), obs) in per_hook {
        let fitted = match kind {
            FitKind::Binormal => {
                let t: Vec<(f64, bool)> = obs.iter().map(|&(y, z)| (transform_score(y), z)).collect();
                let fit = fit_binormal(&t, floor);
                if fit.fallback {
                    flagged.push((j.clone(), c.clone()));
                }
                fit.kind
            }
            FitKind::Discrete { smoothing } => {
                let labels: Vec<(bool, bool)> = obs.iter().map(|&(y, z)| (y >= 0.5, z)).collect();
                let (a, b) = fit_discrete(&labels, smoothing);
                let clamp = |p: f64| p.clamp(DISCRETE_CLAMP, 1.0 - DISCRETE_CLAMP);
                ObservationKind::Discrete { alpha: clamp(a), beta: clamp(b) }
            }
        };
        params.insert(j, c, fitted)?;
    }
    Ok((params, flagged))
}

/// `N(-1, 1)` / `N(1, 1)` on every hook the sheets mention.
pub fn default_init(sheets: &[ScoreSheet]) -> ParamSet {
    let mut params = ParamSet::new();
    for s in sheets {
        for (j, c, _) in s.iter() {
            params
                .insert(
                    j,
                    c.clone(),
                    ObservationKind::Binormal { mu0: -1.0, sigma0: 1.0, mu1: 1.0, sigma1: 1.0 },
                )
                .expect("valid default");
        }
    }
    params
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Stop once an iteration improves the log-likelihood by less than this.
    pub tol: f64,
    pub sigma_floor: f64,
    pub network: NetworkConfig,
    pub junction_tree: JunctionTreeConfig,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iters: 100,
            tol: 1e-6,
            sigma_floor: SIGMA_FLOOR,
            network: NetworkConfig::default(),
            junction_tree: JunctionTreeConfig::default(),
        }
    }
}

/// Posterior class probabilities per instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabels {
    pub classes: Vec<ClassId>,
    pub instances: Vec<String>,
    /// `q[i][c]`, aligned with `instances` and `classes`.
    pub q: Vec<Vec<f64>>,
}

impl SoftLabels {
    pub fn get(&self, instance: &str, class: &str) -> Option<f64> {
        let i = self.instances.iter().position(|x| x == instance)?;
        let c = self.classes.binary_search_by(|x| x.as_str().cmp(class)).ok()?;
        Some(self.q[i][c])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmOutcome {
    pub params: ParamSet,
    pub soft_labels: SoftLabels,
    /// Total log-evidence after each E-step; entry 0 is under the initial
    /// parameters.
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Effective `(z = 0, z = 1)` observation counts per hook under the
    /// final soft labels.
    pub effective: BTreeMap<(String, ClassId), (f64, f64)>,
}

struct EStep {
    q: Vec<Vec<f64>>,
    ll: f64,
}

fn e_step(network: &Network, jt: &JunctionTree, sheets: &[ScoreSheet]) -> Result<EStep, GraphicalError> {
    let results: Vec<(Vec<f64>, f64)> = sheets
        .par_iter()
        .map(|s| {
            let ev = network.evidence_for(s)?;
            jt.infer(&ev)
        })
        .collect::<Result<_, _>>()?;
    let mut ll = 0.0;
    let mut q = Vec::with_capacity(results.len());
    for (m, l) in results {
        ll += l;
        q.push(m);
    }
    Ok(EStep { q, ll })
}

/// Observations `(transformed score, q)` per hook, in instance order.
fn hook_observations(network: &Network, sheets: &[ScoreSheet], q: &[Vec<f64>]) -> Vec<Vec<(f64, f64)>> {
    let g = network.graph();
    network
        .hooks()
        .iter()
        .map(|h| {
            let class = g.name(h.node).as_str();
            sheets
                .iter()
                .zip(q)
                .filter_map(|(s, qi)| {
                    s.score(&h.classifier, class).map(|y| {
                        let y = match h.kind {
                            ObservationKind::Binormal { .. } => transform_score(y),
                            ObservationKind::Discrete { .. } => y,
                        };
                        (y, qi[h.node])
                    })
                })
                .collect()
        })
        .collect()
}

/// One M-step over every hook of `network`, given per-instance marginals
/// aligned with the network's nodes.
pub fn m_step_all(
    network: &Network,
    sheets: &[ScoreSheet],
    q: &[Vec<f64>],
    floor: f64,
) -> Result<ParamSet, GraphicalError> {
    let g = network.graph();
    let obs = hook_observations(network, sheets, q);
    let mut params = ParamSet::new();
    for (h, o) in network.hooks().iter().zip(obs) {
        params.insert(h.classifier.clone(), g.name(h.node).clone(), m_step(h.kind, &o, floor))?;
    }
    Ok(params)
}

/// EM over observation parameters. CPD leaks stay fixed.
pub fn em_fit(
    taxonomy: &Taxonomy,
    sheets: &[ScoreSheet],
    init: &ParamSet,
    config: &EmConfig,
) -> Result<EmOutcome, EstimationError> {
    if sheets.is_empty() {
        return Err(EstimationError::NoInstances);
    }
    for s in sheets {
        s.validate(taxonomy)?;
    }
    let mut network = build_network(taxonomy, init, &config.network)?;
    let jt = JunctionTree::compile(&network, &config.junction_tree)?;

    let mut state = e_step(&network, &jt, sheets)?;
    let mut trace = vec![state.ll];
    let mut converged = false;
    for iteration in 1..=config.max_iters {
        let params = m_step_all(&network, sheets, &state.q, config.sigma_floor)?;
        let next_net = network.with_params(&params, config.sigma_floor)?;
        let next = e_step(&next_net, &jt, sheets)?;
        let (prev, cur) = (state.ll, next.ll);
        if cur < prev - EM_SLACK {
            return Err(EstimationError::NonImprovingLikelihood { iteration, previous: prev, current: cur });
        }
        trace.push(cur);
        network = next_net;
        state = next;
        log::debug!("em iteration {iteration}: log-likelihood {cur}");
        if cur - prev < config.tol {
            converged = true;
            break;
        }
    }

    let g = network.graph();
    let obs = hook_observations(&network, sheets, &state.q);
    let mut params = ParamSet::new();
    let mut effective = BTreeMap::new();
    for (h, o) in network.hooks().iter().zip(&obs) {
        let key = (h.classifier.clone(), g.name(h.node).clone());
        let n1: f64 = o.iter().map(|x| x.1).sum();
        let n0: f64 = o.iter().map(|x| 1.0 - x.1).sum();
        effective.insert(key.clone(), (n0, n1));
        params.insert(key.0, key.1, h.kind)?;
    }
    Ok(EmOutcome {
        params,
        soft_labels: SoftLabels {
            classes: g.classes().to_vec(),
            instances: sheets.iter().map(|s| s.instance_id.clone()).collect(),
            q: state.q,
        },
        trace,
        converged,
        effective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn gold_binary_doberman() {
        let t = fixtures::wordnet_animals();
        let z = gold_to_binary(&t, "doberman").unwrap();
        let on: Vec<&str> = z.iter().filter(|(_, &v)| v).map(|(c, _)| c.as_str()).collect();
        assert_eq!(on.len(), 9);
        for c in ["rottweiler", "cat", "fox", "hound"] {
            assert!(!z[c]);
        }
        let z = gold_to_binary(&t, "animal").unwrap();
        assert_eq!(z.values().filter(|&&v| v).count(), 1);
        let z = gold_to_binary(&t, "dog").unwrap();
        assert!(z["domestic_animal"] && z["canine"]);
        assert!(gold_to_binary(&t, "unicorn").is_err());
    }

    #[test]
    fn binormal_examples() {
        let f = fit_binormal(&[(0.0, false), (0.0, false), (2.0, true), (2.0, true)], SIGMA_FLOOR);
        assert_eq!(
            f.kind,
            ObservationKind::Binormal { mu0: 0.0, sigma0: SIGMA_FLOOR, mu1: 2.0, sigma1: SIGMA_FLOOR }
        );
        assert!(!f.fallback);

        let f = fit_binormal(&[(-1.0, false), (1.0, false)], SIGMA_FLOOR);
        match f.kind {
            ObservationKind::Binormal { mu0, sigma0, mu1, sigma1 } => {
                assert_eq!((mu0, sigma0), (0.0, 1.0));
                // No positives: pooled mean + 1, pooled spread.
                assert_eq!((mu1, sigma1), (1.0, 1.0));
            }
            _ => unreachable!(),
        }
        assert!(f.fallback);

        let same = [(-1.0, false), (1.0, false), (-1.0, true), (1.0, true)];
        match fit_binormal(&same, SIGMA_FLOOR).kind {
            ObservationKind::Binormal { mu0, mu1, sigma0, sigma1 } => {
                assert_eq!(mu0, mu1);
                assert_eq!(sigma0, sigma1);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn discrete_examples() {
        let perfect: Vec<(bool, bool)> = (0..10).map(|i| (i % 2 == 0, i % 2 == 0)).collect();
        assert_eq!(fit_discrete(&perfect, 0.0), (1.0, 1.0));
        let negatives = [(false, false), (true, false)];
        assert_eq!(fit_discrete(&negatives, 1.0).0, 0.5);
        let mut mixed = Vec::new();
        mixed.extend(std::iter::repeat_n((true, true), 8));
        mixed.extend(std::iter::repeat_n((false, true), 2));
        mixed.extend(std::iter::repeat_n((false, false), 9));
        mixed.push((true, false));
        let (a, b) = fit_discrete(&mixed, 0.0);
        assert!((a - 0.8).abs() < 1e-15 && (b - 0.9).abs() < 1e-15);
    }

    #[test]
    fn clamped_m_step_matches_supervised_fit() {
        let data = [(0.3, true), (1.2, true), (-0.4, false), (-2.0, false), (0.9, true), (0.1, false)];
        let supervised = fit_binormal(&data, SIGMA_FLOOR).kind;
        let weighted: Vec<(f64, f64)> = data.iter().map(|&(y, z)| (y, f64::from(u8::from(z)))).collect();
        let prev = ObservationKind::Binormal { mu0: 5.0, sigma0: 5.0, mu1: 5.0, sigma1: 5.0 };
        assert_eq!(m_step(prev, &weighted, SIGMA_FLOOR), supervised);
    }

    #[test]
    fn m_step_keeps_weightless_side() {
        let prev = ObservationKind::Binormal { mu0: -3.0, sigma0: 0.5, mu1: 3.0, sigma1: 0.5 };
        let all_pos = [(1.0, 1.0), (2.0, 1.0)];
        match m_step(prev, &all_pos, SIGMA_FLOOR) {
            ObservationKind::Binormal { mu0, sigma0, mu1, .. } => {
                assert_eq!((mu0, sigma0), (-3.0, 0.5));
                assert_eq!(mu1, 1.5);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn discrete_m_step() {
        let prev = ObservationKind::Discrete { alpha: 0.5, beta: 0.5 };
        let obs = [(1.0, 1.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0), (1.0, 0.0)];
        match m_step(prev, &obs, SIGMA_FLOOR) {
            ObservationKind::Discrete { alpha, beta } => {
                assert!((alpha - 2.0 / 3.0).abs() < 1e-15);
                assert!((beta - 0.5).abs() < 1e-15);
            }
            _ => unreachable!(),
        }
    }
}
