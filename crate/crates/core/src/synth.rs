//! Synthetic taxonomies, gold labels and score sheets drawn from the
//! bi-normal observation model, plus random networks for oracle testing.
//!
//! Every draw comes from ChaCha8 seeded with `GenConfig::seed`. Taxonomy,
//! classifier setup and instances use separate streams of that generator,
//! so changing the instance count leaves the taxonomy untouched.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::graphical::{sigmoid, CpdKind, EvidenceFactor, Network, ObservationKind, ParamSet};
use crate::sheet::ScoreSheet;
use crate::taxonomy::{ClassId, Taxonomy};

/// Recorded in output metadata so runs can be compared.
pub const RNG_NAME: &str = "ChaCha8";

const TAXONOMY_STREAM: u64 = 0;
const CLASSIFIER_STREAM: u64 = 1;
const INSTANCE_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    /// Levels below the root.
    pub depth: usize,
    /// Inclusive range of children per internal node.
    pub branching: (usize, usize),
    /// Chance that a non-first child also hangs under a second node of the
    /// previous level.
    pub dag_prob: f64,
    pub classifiers: usize,
    /// Inclusive range of classes each classifier scores.
    pub classes_per_classifier: (usize, usize),
    /// Generating parameters shared by every hook before jitter.
    pub params: ObservationKind,
    /// Per-hook means are shifted by independent `U(-jitter, jitter)` draws.
    pub jitter: f64,
    pub instances: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            depth: 3,
            branching: (2, 4),
            dag_prob: 0.1,
            classifiers: 10,
            classes_per_classifier: (8, 16),
            params: ObservationKind::Binormal { mu0: -0.5, sigma0: 1.0, mu1: 0.5, sigma1: 1.0 },
            jitter: 0.0,
            instances: 500,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), String> {
        let (b0, b1) = self.branching;
        let (k0, k1) = self.classes_per_classifier;
        if self.depth == 0 || b0 == 0 || b0 > b1 {
            return Err(format!("bad taxonomy shape: depth {} branching {b0}..={b1}", self.depth));
        }
        if !(0.0..=1.0).contains(&self.dag_prob) {
            return Err(format!("dag_prob {} outside [0, 1]", self.dag_prob));
        }
        if self.classifiers == 0 || self.instances == 0 || k0 == 0 || k0 > k1 {
            return Err("classifier, instance and class-subset counts must be positive".into());
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(format!("jitter {} must be finite and non-negative", self.jitter));
        }
        self.params.validate().map_err(|e| e.to_string())
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn class_name(i: usize) -> ClassId {
    ClassId::new(format!("c{i:04}")).expect("no whitespace")
}

/// Level-by-level random DAG rooted at `c0000`.
pub fn gen_taxonomy(cfg: &GenConfig) -> Taxonomy {
    let mut r = rng(cfg.seed, TAXONOMY_STREAM);
    let mut next = 1;
    let mut level = vec![0usize];
    let mut edges = Vec::new();
    for _ in 0..cfg.depth {
        let mut below = Vec::new();
        for (pos, &parent) in level.iter().enumerate() {
            let n = r.random_range(cfg.branching.0..=cfg.branching.1);
            for k in 0..n {
                let child = next;
                next += 1;
                edges.push((class_name(child), class_name(parent)));
                if k > 0 && level.len() >= 2 && r.random_bool(cfg.dag_prob) {
                    let mut other = r.random_range(0..level.len() - 1);
                    if other >= pos {
                        other += 1;
                    }
                    edges.push((class_name(child), class_name(level[other])));
                }
                below.push(child);
            }
        }
        level = below;
    }
    Taxonomy::from_edges(edges).expect("level construction is acyclic")
}

/// The classifiers' class subsets and per-hook generating parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub subsets: BTreeMap<String, Vec<ClassId>>,
    pub truth: ParamSet,
}

pub fn classifier_name(j: usize) -> String {
    format!("f{j:02}")
}

/// Each classifier scores a random subset of the non-root classes.
pub fn gen_ensemble(cfg: &GenConfig, taxonomy: &Taxonomy) -> Ensemble {
    let mut r = rng(cfg.seed, CLASSIFIER_STREAM);
    let pool: Vec<usize> = (0..taxonomy.len())
        .filter(|&i| !taxonomy.parents_of(i).is_empty())
        .collect();
    let mut subsets = BTreeMap::new();
    let mut truth = ParamSet::new();
    for j in 0..cfg.classifiers {
        let (lo, hi) = cfg.classes_per_classifier;
        let k = r.random_range(lo..=hi).min(pool.len());
        let mut picked: Vec<ClassId> = sample(&mut r, pool.len(), k)
            .into_iter()
            .map(|p| taxonomy.name(pool[p]).clone())
            .collect();
        picked.sort();
        for c in &picked {
            let mut shift = || {
                if cfg.jitter > 0.0 {
                    r.random_range(-cfg.jitter..=cfg.jitter)
                } else {
                    0.0
                }
            };
            let kind = match cfg.params {
                ObservationKind::Binormal { mu0, sigma0, mu1, sigma1 } => {
                    ObservationKind::Binormal { mu0: mu0 + shift(), sigma0, mu1: mu1 + shift(), sigma1 }
                }
                d @ ObservationKind::Discrete { .. } => d,
            };
            truth.insert(classifier_name(j), c.clone(), kind).expect("validated generating params");
        }
        subsets.insert(classifier_name(j), picked);
    }
    Ensemble { subsets, truth }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instances {
    /// `(instance_id, gold leaf)` in id order.
    pub golds: Vec<(String, ClassId)>,
    pub sheets: Vec<ScoreSheet>,
}

/// Gold leaves uniformly at random; each hook's score is drawn from the
/// gold-conditioned distribution of its generating parameters.
pub fn gen_instances(cfg: &GenConfig, taxonomy: &Taxonomy, ensemble: &Ensemble) -> Instances {
    let mut r = rng(cfg.seed, INSTANCE_STREAM);
    let leaves = taxonomy.leaf_ixs();
    let width = cfg.instances.to_string().len().max(4);
    let hooks: Vec<_> = ensemble
        .truth
        .iter()
        .map(|h| (h.classifier, taxonomy.require(h.node.as_str()).expect("hook on taxonomy"), h.node, h.kind))
        .collect();
    let mut golds = Vec::with_capacity(cfg.instances);
    let mut sheets = Vec::with_capacity(cfg.instances);
    for n in 0..cfg.instances {
        let id = format!("i{n:0width$}");
        let gold = leaves[r.random_range(0..leaves.len())];
        let mut sheet = ScoreSheet::new(id.clone());
        for (j, c, name, kind) in &hooks {
            let on = *c == gold || taxonomy.is_ancestor(*c, gold);
            let y = match *kind {
                ObservationKind::Binormal { mu0, sigma0, mu1, sigma1 } => {
                    let (mu, sigma) = if on { (mu1, sigma1) } else { (mu0, sigma0) };
                    sigmoid(Normal::new(mu, sigma).expect("positive sigma").sample(&mut r))
                }
                ObservationKind::Discrete { alpha, beta } => {
                    let fire = if on { alpha } else { 1.0 - beta };
                    f64::from(u8::from(r.random_bool(fire)))
                }
            };
            sheet.insert(j.clone(), name.clone(), y).expect("generated score in range");
        }
        golds.push((id, taxonomy.name(gold).clone()));
        sheets.push(sheet);
    }
    Instances { golds, sheets }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub taxonomy: Taxonomy,
    pub ensemble: Ensemble,
    pub instances: Instances,
}

pub fn generate(cfg: &GenConfig) -> SyntheticData {
    let taxonomy = gen_taxonomy(cfg);
    let ensemble = gen_ensemble(cfg, &taxonomy);
    let instances = gen_instances(cfg, &taxonomy, &ensemble);
    SyntheticData { taxonomy, ensemble, instances }
}

/// A random DAG on `nodes` classes `v00, v01, …`. Each non-first node gets
/// parents among earlier nodes, or none with probability `root_prob`.
pub fn random_dag<R: Rng>(r: &mut R, nodes: usize, root_prob: f64, extra_parent_prob: f64) -> Taxonomy {
    let names: Vec<ClassId> = (0..nodes)
        .map(|i| ClassId::new(format!("v{i:02}")).expect("no whitespace"))
        .collect();
    let mut edges = Vec::new();
    for i in 1..nodes {
        if r.random_bool(root_prob) {
            continue;
        }
        let first = r.random_range(0..i);
        edges.push((names[i].clone(), names[first].clone()));
        for p in 0..i {
            if p != first && r.random_bool(extra_parent_prob) {
                edges.push((names[i].clone(), names[p].clone()));
            }
        }
    }
    Taxonomy::from_parts(names, edges).expect("edges point to earlier nodes")
}

/// Random priors on roots and random leaks elsewhere.
pub fn random_network<R: Rng>(r: &mut R, nodes: usize) -> Network {
    let graph = random_dag(r, nodes, 0.15, 0.2);
    let kinds = (0..graph.len())
        .map(|i| {
            if graph.children_of(i).is_empty() {
                CpdKind::Prior(r.random_range(0.02..0.98))
            } else {
                CpdKind::LeakyOr { leak: r.random_range(0.0..0.6) }
            }
        })
        .collect();
    Network::with_cpds(graph, kinds).expect("probabilities in range")
}

/// Soft evidence on a random subset of nodes, sometimes two factors on one
/// node, with arbitrary scales.
pub fn random_evidence<R: Rng>(r: &mut R, network: &Network) -> Vec<EvidenceFactor> {
    let g = network.graph();
    let mut out = Vec::new();
    for i in 0..g.len() {
        let factors = match r.random_range(0..10) {
            0..=4 => 0,
            5..=8 => 1,
            _ => 2,
        };
        for _ in 0..factors {
            let mut f = EvidenceFactor::new(g.name(i).clone(), r.random_range(0.01..1.0), r.random_range(0.01..1.0));
            f.log_scale = r.random_range(-50.0..50.0);
            out.push(f);
        }
    }
    out
}
