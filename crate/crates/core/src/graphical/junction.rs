//! Exact inference by junction-tree message passing.
//!
//! Compilation: one factor per class CPD, moralize (connect each factor's
//! scope), eliminate greedily by minimum fill-in to triangulate, keep the
//! maximal elimination cliques and join them with a maximum-weight spanning
//! tree over separator sizes. Inference: multiply in the evidence, collect
//! towards clique 0, distribute back out. Messages are rescaled to sum to
//! one and the scales are accumulated in log space, which yields the log
//! evidence.
//!
//! Nodes whose fanout exceeds the dense-table cap are compiled through a
//! chain of auxiliary OR variables (`o_1 = c_1 | c_2`, `o_k = o_{k-1} | c_{k+1}`)
//! so that no factor grows beyond three variables.

use std::collections::{BTreeSet, VecDeque};

use super::network::Network;
use super::{EvidenceFactor, GraphicalError, PosteriorReport, DEFAULT_MAX_DENSE_PARENTS};
use crate::taxonomy::ClassId;

/// Default cap on the induced width (largest clique size minus one).
pub const DEFAULT_MAX_WIDTH: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct JunctionTreeConfig {
    pub max_width: usize,
    pub max_dense_parents: usize,
}

impl Default for JunctionTreeConfig {
    fn default() -> Self {
        JunctionTreeConfig {
            max_width: DEFAULT_MAX_WIDTH,
            max_dense_parents: DEFAULT_MAX_DENSE_PARENTS,
        }
    }
}

/// Table over binary variables; bit `j` of an index is `vars[j]`.
#[derive(Debug, Clone)]
struct Factor {
    vars: Vec<usize>,
    table: Vec<f64>,
}

impl Factor {
    fn from_fn(mut vars: Vec<usize>, f: impl Fn(&dyn Fn(usize) -> bool) -> f64) -> Factor {
        vars.sort_unstable();
        let table = (0..1usize << vars.len())
            .map(|idx| {
                let value = |v: usize| {
                    let j = vars.iter().position(|&x| x == v).expect("variable in scope");
                    (idx >> j) & 1 == 1
                };
                f(&value)
            })
            .collect();
        Factor { vars, table }
    }
}

fn project(idx: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &p)| acc | (((idx >> p) & 1) << j))
}

fn marginalize(table: &[f64], positions: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << positions.len()];
    for (idx, &v) in table.iter().enumerate() {
        out[project(idx, positions)] += v;
    }
    out
}

fn multiply_into(table: &mut [f64], msg: &[f64], positions: &[usize]) {
    for (idx, v) in table.iter_mut().enumerate() {
        *v *= msg[project(idx, positions)];
    }
}

fn positions_in(vars: &[usize], subset: &[usize]) -> Vec<usize> {
    subset
        .iter()
        .map(|v| vars.binary_search(v).expect("subset of clique"))
        .collect()
}

#[derive(Debug, Clone)]
struct Clique {
    vars: Vec<usize>,
    base: Vec<f64>,
    parent: Option<usize>,
    /// Positions of the separator variables in this clique and in the parent.
    sep_here: Vec<usize>,
    sep_parent: Vec<usize>,
}

/// A compiled junction tree for one network structure and parameter set.
/// Immutable; inference calls may run concurrently.
#[derive(Debug, Clone)]
pub struct JunctionTree {
    names: Vec<ClassId>,
    cliques: Vec<Clique>,
    /// Breadth-first from clique 0.
    order: Vec<usize>,
    /// Smallest clique holding each class variable, and its bit position.
    home: Vec<(usize, usize)>,
}

impl JunctionTree {
    pub fn compile(network: &Network, config: &JunctionTreeConfig) -> Result<Self, GraphicalError> {
        let graph = network.graph();
        let n_class = graph.len();
        let mut n_vars = n_class;
        let mut factors = Vec::new();

        for i in 0..n_class {
            let cpd = network.cpd(i).clone();
            let kids = graph.children_of(i).to_vec();
            if kids.len() <= config.max_dense_parents {
                // The scope becomes a clique, so check before allocating its table.
                if kids.len() > config.max_width {
                    return Err(GraphicalError::TreewidthExceeded { width: kids.len(), cap: config.max_width });
                }
                let mut scope = kids.clone();
                scope.push(i);
                factors.push(Factor::from_fn(scope, |val| {
                    cpd.prob(val(i), kids.iter().any(|&k| val(k)))
                }));
                continue;
            }
            let mut acc = kids[0];
            for &k in &kids[1..] {
                let o = n_vars;
                n_vars += 1;
                factors.push(Factor::from_fn(vec![acc, k, o], |val| {
                    f64::from(u8::from(val(o) == (val(acc) || val(k))))
                }));
                acc = o;
            }
            factors.push(Factor::from_fn(vec![acc, i], |val| cpd.prob(val(i), val(acc))));
        }

        let clique_sets = triangulate(n_vars, &factors, config.max_width)?;
        let mut cliques: Vec<Clique> = clique_sets
            .into_iter()
            .map(|vars| {
                let size = 1usize << vars.len();
                Clique {
                    vars,
                    base: vec![1.0; size],
                    parent: None,
                    sep_here: Vec::new(),
                    sep_parent: Vec::new(),
                }
            })
            .collect();

        for f in &factors {
            let host = cliques
                .iter()
                .position(|c| f.vars.iter().all(|v| c.vars.binary_search(v).is_ok()))
                .expect("every factor scope lies in some clique");
            let pos = positions_in(&cliques[host].vars, &f.vars);
            multiply_into(&mut cliques[host].base, &f.table, &pos);
        }

        let order = link_cliques(&mut cliques);

        let home = (0..n_class)
            .map(|v| {
                let (k, c) = cliques
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.vars.binary_search(&v).is_ok())
                    .min_by_key(|(k, c)| (c.vars.len(), *k))
                    .expect("every variable lies in some clique");
                (k, c.vars.binary_search(&v).unwrap())
            })
            .collect();

        Ok(JunctionTree {
            names: graph.classes().to_vec(),
            cliques,
            order,
            home,
        })
    }

    /// Induced width of the compiled tree.
    pub fn width(&self) -> usize {
        self.cliques.iter().map(|c| c.vars.len()).max().unwrap_or(1) - 1
    }

    pub fn clique_count(&self) -> usize {
        self.cliques.len()
    }

    /// Marginals aligned with the network's node indices, plus the log
    /// evidence.
    pub fn infer(&self, evidence: &[EvidenceFactor]) -> Result<(Vec<f64>, f64), GraphicalError> {
        let mut pot: Vec<Vec<f64>> = self.cliques.iter().map(|c| c.base.clone()).collect();
        let mut log_z = 0.0;

        for e in evidence {
            let v = self
                .names
                .binary_search(&e.node)
                .map_err(|_| GraphicalError::InvalidEvidence(e.node.clone()))?;
            let (l0, l1, ls) = e.normalized()?;
            log_z += ls;
            let (k, pos) = self.home[v];
            multiply_into(&mut pot[k], &[l0, l1], &[pos]);
        }

        let mut messages: Vec<Vec<f64>> = vec![Vec::new(); self.cliques.len()];
        for &k in self.order.iter().rev() {
            let clique = &self.cliques[k];
            let Some(parent) = clique.parent else { continue };
            let mut msg = marginalize(&pot[k], &clique.sep_here);
            let s: f64 = msg.iter().sum();
            if s <= 0.0 || !s.is_finite() {
                return Err(GraphicalError::ImpossibleEvidence);
            }
            msg.iter_mut().for_each(|m| *m /= s);
            log_z += s.ln();
            multiply_into(&mut pot[parent], &msg, &clique.sep_parent);
            messages[k] = msg;
        }

        let root = self.order[0];
        let z: f64 = pot[root].iter().sum();
        if z <= 0.0 || !z.is_finite() {
            return Err(GraphicalError::ImpossibleEvidence);
        }
        log_z += z.ln();
        pot[root].iter_mut().for_each(|p| *p /= z);

        for &k in &self.order[1..] {
            let clique = &self.cliques[k];
            let parent = clique.parent.expect("non-root clique");
            let fresh = marginalize(&pot[parent], &clique.sep_parent);
            let ratio: Vec<f64> = fresh
                .iter()
                .zip(&messages[k])
                .map(|(&a, &b)| if b == 0.0 { 0.0 } else { a / b })
                .collect();
            multiply_into(&mut pot[k], &ratio, &clique.sep_here);
            let s: f64 = pot[k].iter().sum();
            if s > 0.0 {
                pot[k].iter_mut().for_each(|p| *p /= s);
            }
        }

        let marginals = self
            .home
            .iter()
            .map(|&(k, pos)| {
                let m = marginalize(&pot[k], &[pos]);
                (m[1] / (m[0] + m[1])).clamp(0.0, 1.0)
            })
            .collect();
        Ok((marginals, log_z))
    }

    pub fn posterior(
        &self,
        evidence: &[EvidenceFactor],
        instance_id: &str,
    ) -> Result<PosteriorReport, GraphicalError> {
        let (marginals, log_evidence) = self.infer(evidence)?;
        Ok(PosteriorReport {
            instance_id: instance_id.to_string(),
            marginal: self.names.iter().cloned().zip(marginals).collect(),
            log_evidence,
        })
    }
}

/// Min-fill elimination over the moral graph; returns the maximal cliques,
/// each sorted.
fn triangulate(
    n_vars: usize,
    factors: &[Factor],
    max_width: usize,
) -> Result<Vec<Vec<usize>>, GraphicalError> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_vars];
    for f in factors {
        for &a in &f.vars {
            for &b in &f.vars {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }

    let mut alive: BTreeSet<usize> = (0..n_vars).collect();
    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(n_vars);
    while !alive.is_empty() {
        let v = *alive
            .iter()
            .min_by_key(|&&v| (fill_in(&adj, v), v))
            .expect("non-empty");
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        if nbrs.len() > max_width {
            return Err(GraphicalError::TreewidthExceeded { width: nbrs.len(), cap: max_width });
        }
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &nbrs {
            adj[a].remove(&v);
        }
        let mut clique = nbrs;
        clique.push(v);
        clique.sort_unstable();
        candidates.push(clique);
        alive.remove(&v);
    }

    let is_subset = |a: &[usize], b: &[usize]| a.iter().all(|x| b.binary_search(x).is_ok());
    let mut maximal: Vec<Vec<usize>> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let dominated = candidates.iter().enumerate().any(|(j, d)| {
            j != i && is_subset(c, d) && (c.len() < d.len() || j < i)
        });
        if !dominated {
            maximal.push(c.clone());
        }
    }
    Ok(maximal)
}

fn fill_in(adj: &[BTreeSet<usize>], v: usize) -> usize {
    let nbrs: Vec<usize> = adj[v].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[i + 1..] {
            if !adj[a].contains(&b) {
                missing += 1;
            }
        }
    }
    missing
}

/// Maximum spanning tree over separator sizes (Kruskal, ties by index),
/// rooted at clique 0. Empty separators join otherwise separate components.
/// Returns the breadth-first order.
fn link_cliques(cliques: &mut [Clique]) -> Vec<usize> {
    let n = cliques.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let w = cliques[i]
                .vars
                .iter()
                .filter(|v| cliques[j].vars.binary_search(v).is_ok())
                .count();
            edges.push((w, i, j));
        }
    }
    edges.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut uf: Vec<usize> = (0..n).collect();
    fn find(uf: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while uf[r] != r {
            r = uf[r];
        }
        let mut x = x;
        while uf[x] != r {
            let next = uf[x];
            uf[x] = r;
            x = next;
        }
        r
    }
    let mut tree: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (_, i, j) in edges {
        let (ri, rj) = (find(&mut uf, i), find(&mut uf, j));
        if ri != rj {
            uf[ri] = rj;
            tree[i].push(j);
            tree[j].push(i);
        }
    }

    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(k) = queue.pop_front() {
        order.push(k);
        let mut next = tree[k].clone();
        next.sort_unstable();
        for c in next {
            if !seen[c] {
                seen[c] = true;
                let sep: Vec<usize> = cliques[c]
                    .vars
                    .iter()
                    .copied()
                    .filter(|v| cliques[k].vars.binary_search(v).is_ok())
                    .collect();
                cliques[c].sep_here = positions_in(&cliques[c].vars, &sep);
                cliques[c].sep_parent = positions_in(&cliques[k].vars, &sep);
                cliques[c].parent = Some(k);
                queue.push_back(c);
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphical::network::CpdKind;
    use crate::taxonomy::Taxonomy;

    fn id(s: &str) -> ClassId {
        ClassId::new(s).unwrap()
    }

    #[test]
    fn projection_helpers() {
        // idx 0b101 over vars at positions [0, 2] -> 0b11.
        assert_eq!(project(0b101, &[0, 2]), 0b11);
        assert_eq!(project(0b101, &[1]), 0);
        let m = marginalize(&[1.0, 2.0, 3.0, 4.0], &[1]);
        assert_eq!(m, vec![3.0, 7.0]);
    }

    #[test]
    fn star_with_divorced_parents_has_small_cliques() {
        let edges: Vec<_> = (0..30).map(|k| (id(&format!("c{k:02}")), id("r"))).collect();
        let g = Taxonomy::from_edges(edges).unwrap();
        let kinds = (0..g.len())
            .map(|i| {
                if g.children_of(i).is_empty() {
                    CpdKind::Prior(0.1)
                } else {
                    CpdKind::LeakyOr { leak: 0.3 }
                }
            })
            .collect();
        let net = Network::with_cpds(g, kinds).unwrap();
        let dense = JunctionTree::compile(
            &net,
            &JunctionTreeConfig { max_dense_parents: 40, ..Default::default() },
        );
        assert!(matches!(dense, Err(GraphicalError::TreewidthExceeded { .. })));
        let jt = JunctionTree::compile(
            &net,
            &JunctionTreeConfig { max_dense_parents: 4, ..Default::default() },
        )
        .unwrap();
        assert!(jt.width() <= 2);
        let (m, _) = jt.infer(&[]).unwrap();
        // Pr[r = 0] = 0.9^30 · 0.7
        let r = net.graph().require("r").unwrap();
        assert!((1.0 - m[r] - 0.9f64.powi(30) * 0.7).abs() < 1e-12);
    }
}
