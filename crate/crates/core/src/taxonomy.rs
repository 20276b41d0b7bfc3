//! Class taxonomies: immutable IS-A DAGs with precomputed closures.
//!
//! Classes are stored densely and indexed in lexicographic order of their
//! identifiers, so "smallest index" and "lexicographically first" coincide.
//! Every tie-break in the crate relies on that.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Default cap on the number of root paths enumerated for one class.
pub const DEFAULT_PATH_CAP: usize = 64;

/// Dense node index into a [`Taxonomy`].
pub type NodeIx = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("taxonomy input is empty")]
    EmptyInput,
    #[error("cycle detected: {}", display_cycle(.0))]
    CycleDetected(Vec<ClassId>),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("invalid class identifier {0:?}: must be non-empty and contain no whitespace")]
    InvalidClassId(String),
    #[error("more than {cap} root paths lead to `{class}`")]
    PathExplosion { class: ClassId, cap: usize },
    #[error("`{0}` and `{1}` have no common ancestor")]
    NoCommonAncestor(ClassId, ClassId),
    #[error("label path is not connected root-to-terminal: {0}")]
    InvalidPath(String),
}

fn display_cycle(cycle: &[ClassId]) -> String {
    let mut parts: Vec<&str> = cycle.iter().map(ClassId::as_str).collect();
    if let Some(first) = cycle.first() {
        parts.push(first.as_str());
    }
    parts.join(" -> ")
}

/// Stable, case-sensitive class identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(String);

impl ClassId {
    pub fn new(id: impl Into<String>) -> Result<Self, TaxonomyError> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(TaxonomyError::InvalidClassId(id));
        }
        Ok(ClassId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for ClassId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl FromStr for ClassId {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassId::new(s)
    }
}

/// A root-to-terminal sequence of classes. The terminal need not be a leaf.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelPath(Vec<ClassId>);

impl LabelPath {
    /// Checks that `nodes` starts at a root and follows parent-to-child edges.
    pub fn new(taxonomy: &Taxonomy, nodes: Vec<ClassId>) -> Result<Self, TaxonomyError> {
        let ixs = nodes
            .iter()
            .map(|c| taxonomy.require(c.as_str()))
            .collect::<Result<Vec<_>, _>>()?;
        let path = LabelPath(nodes);
        match ixs.first() {
            None => return Err(TaxonomyError::InvalidPath("empty".into())),
            Some(&first) if !taxonomy.parents_of(first).is_empty() => {
                return Err(TaxonomyError::InvalidPath(path.to_string()))
            }
            _ => {}
        }
        if ixs
            .windows(2)
            .any(|w| taxonomy.parents_of(w[1]).binary_search(&w[0]).is_err())
        {
            return Err(TaxonomyError::InvalidPath(path.to_string()));
        }
        Ok(path)
    }

    pub(crate) fn from_ixs(taxonomy: &Taxonomy, ixs: &[NodeIx]) -> Self {
        LabelPath(ixs.iter().map(|&i| taxonomy.name(i).clone()).collect())
    }

    pub fn nodes(&self) -> &[ClassId] {
        &self.0
    }

    pub fn terminal(&self) -> &ClassId {
        self.0.last().expect("label paths are never empty")
    }

    pub fn root(&self) -> &ClassId {
        &self.0[0]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_prefix_of(&self, other: &LabelPath) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Keeps the first `len` nodes.
    pub fn truncated(&self, len: usize) -> LabelPath {
        LabelPath(self.0[..len.clamp(1, self.0.len())].to_vec())
    }
}

impl fmt::Display for LabelPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(">")?;
            }
            f.write_str(c.as_str())?;
        }
        Ok(())
    }
}

/// An acyclic IS-A hierarchy. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    names: Vec<ClassId>,
    index: HashMap<ClassId, NodeIx>,
    parents: Vec<Vec<NodeIx>>,
    children: Vec<Vec<NodeIx>>,
    ancestors: Vec<Vec<NodeIx>>,
    descendants: Vec<Vec<NodeIx>>,
    depth: Vec<usize>,
    roots: Vec<NodeIx>,
    leaves: Vec<NodeIx>,
    topo: Vec<NodeIx>,
}

impl Taxonomy {
    /// Builds a taxonomy from `(child, parent)` edges. Duplicate edges are
    /// dropped with a warning.
    pub fn from_edges<I>(edges: I) -> Result<Self, TaxonomyError>
    where
        I: IntoIterator<Item = (ClassId, ClassId)>,
    {
        let (taxonomy, duplicates) = Self::from_edges_reporting(edges)?;
        for (child, parent) in &duplicates {
            log::warn!("duplicate edge {child} -> {parent} ignored");
        }
        Ok(taxonomy)
    }

    /// Like [`Taxonomy::from_edges`] but hands back the deduplicated edges.
    pub fn from_edges_reporting<I>(
        edges: I,
    ) -> Result<(Self, Vec<(ClassId, ClassId)>), TaxonomyError>
    where
        I: IntoIterator<Item = (ClassId, ClassId)>,
    {
        let edges: Vec<_> = edges.into_iter().collect();
        if edges.is_empty() {
            return Err(TaxonomyError::EmptyInput);
        }
        let mut seen = BTreeSet::new();
        let mut duplicates = Vec::new();
        for e in &edges {
            if !seen.insert(e.clone()) {
                duplicates.push(e.clone());
            }
        }
        let taxonomy = Self::from_parts(std::iter::empty(), seen)?;
        Ok((taxonomy, duplicates))
    }

    /// Builds from explicit nodes (possibly isolated) plus edges.
    pub fn from_parts<N, E>(nodes: N, edges: E) -> Result<Self, TaxonomyError>
    where
        N: IntoIterator<Item = ClassId>,
        E: IntoIterator<Item = (ClassId, ClassId)>,
    {
        let mut names: BTreeSet<ClassId> = nodes.into_iter().collect();
        let mut edge_set = BTreeSet::new();
        for (child, parent) in edges {
            if child == parent {
                return Err(TaxonomyError::CycleDetected(vec![child]));
            }
            names.insert(child.clone());
            names.insert(parent.clone());
            edge_set.insert((child, parent));
        }
        if names.is_empty() {
            return Err(TaxonomyError::EmptyInput);
        }
        let names: Vec<ClassId> = names.into_iter().collect();
        let index: HashMap<ClassId, NodeIx> =
            names.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (child, parent) in &edge_set {
            let (c, p) = (index[child], index[parent]);
            parents[c].push(p);
            children[p].push(c);
        }
        for v in parents.iter_mut().chain(children.iter_mut()) {
            v.sort_unstable();
        }

        let topo = topological_order(&parents, &children)
            .map_err(|cycle| TaxonomyError::CycleDetected(cycle.into_iter().map(|i| names[i].clone()).collect()))?;

        let mut depth = vec![0usize; n];
        let mut ancestors: Vec<Vec<NodeIx>> = vec![Vec::new(); n];
        for &c in &topo {
            let mut acc = BTreeSet::new();
            for &p in &parents[c] {
                depth[c] = depth[c].max(depth[p] + 1);
                acc.insert(p);
                acc.extend(ancestors[p].iter().copied());
            }
            ancestors[c] = acc.into_iter().collect();
        }
        let mut descendants: Vec<Vec<NodeIx>> = vec![Vec::new(); n];
        for &c in topo.iter().rev() {
            let mut acc = BTreeSet::new();
            for &d in &children[c] {
                acc.insert(d);
                acc.extend(descendants[d].iter().copied());
            }
            descendants[c] = acc.into_iter().collect();
        }
        let roots = (0..n).filter(|&i| parents[i].is_empty()).collect();
        let leaves = (0..n).filter(|&i| children[i].is_empty()).collect();

        Ok(Taxonomy {
            names,
            index,
            parents,
            children,
            ancestors,
            descendants,
            depth,
            roots,
            leaves,
            topo,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, c: &str) -> bool {
        self.index.contains_key(c)
    }

    pub fn ix(&self, c: &str) -> Option<NodeIx> {
        self.index.get(c).copied()
    }

    pub fn require(&self, c: &str) -> Result<NodeIx, TaxonomyError> {
        self.ix(c)
            .ok_or_else(|| TaxonomyError::UnknownClass(c.to_string()))
    }

    pub fn name(&self, i: NodeIx) -> &ClassId {
        &self.names[i]
    }

    /// All classes in lexicographic order.
    pub fn classes(&self) -> &[ClassId] {
        &self.names
    }

    pub fn parents_of(&self, i: NodeIx) -> &[NodeIx] {
        &self.parents[i]
    }

    pub fn children_of(&self, i: NodeIx) -> &[NodeIx] {
        &self.children[i]
    }

    /// Strict ancestors, sorted.
    pub fn ancestors_of(&self, i: NodeIx) -> &[NodeIx] {
        &self.ancestors[i]
    }

    /// Strict descendants, sorted.
    pub fn descendants_of(&self, i: NodeIx) -> &[NodeIx] {
        &self.descendants[i]
    }

    /// Length of the longest root-to-node path.
    pub fn depth_of(&self, i: NodeIx) -> usize {
        self.depth[i]
    }

    pub fn root_ixs(&self) -> &[NodeIx] {
        &self.roots
    }

    pub fn leaf_ixs(&self) -> &[NodeIx] {
        &self.leaves
    }

    /// Parents come before children.
    pub fn topological_order(&self) -> &[NodeIx] {
        &self.topo
    }

    pub fn is_ancestor(&self, ancestor: NodeIx, of: NodeIx) -> bool {
        self.ancestors[of].binary_search(&ancestor).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// `(child, parent)` edges in lexicographic order.
    pub fn edges(&self) -> Vec<(ClassId, ClassId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.push((self.names[c].clone(), self.names[p].clone()));
            }
        }
        out
    }

    /// Classes with neither parents nor children.
    pub fn isolated(&self) -> Vec<&ClassId> {
        (0..self.len())
            .filter(|&i| self.parents[i].is_empty() && self.children[i].is_empty())
            .map(|i| &self.names[i])
            .collect()
    }

    pub fn roots(&self) -> BTreeSet<ClassId> {
        self.roots.iter().map(|&i| self.names[i].clone()).collect()
    }

    pub fn leaves(&self) -> BTreeSet<ClassId> {
        self.leaves.iter().map(|&i| self.names[i].clone()).collect()
    }

    pub fn parents(&self, c: &str) -> Result<BTreeSet<ClassId>, TaxonomyError> {
        let i = self.require(c)?;
        Ok(self.to_names(&self.parents[i]))
    }

    pub fn children(&self, c: &str) -> Result<BTreeSet<ClassId>, TaxonomyError> {
        let i = self.require(c)?;
        Ok(self.to_names(&self.children[i]))
    }

    pub fn ancestors(&self, c: &str) -> Result<BTreeSet<ClassId>, TaxonomyError> {
        let i = self.require(c)?;
        Ok(self.to_names(&self.ancestors[i]))
    }

    pub fn descendants(&self, c: &str) -> Result<BTreeSet<ClassId>, TaxonomyError> {
        let i = self.require(c)?;
        Ok(self.to_names(&self.descendants[i]))
    }

    pub fn depth(&self, c: &str) -> Result<usize, TaxonomyError> {
        Ok(self.depth[self.require(c)?])
    }

    fn to_names(&self, ixs: &[NodeIx]) -> BTreeSet<ClassId> {
        ixs.iter().map(|&i| self.names[i].clone()).collect()
    }

    /// Every simple root-to-`c` path, ordered lexicographically by node sequence.
    pub fn root_paths(&self, c: &str, cap: usize) -> Result<Vec<LabelPath>, TaxonomyError> {
        let i = self.require(c)?;
        let mut found: Vec<Vec<NodeIx>> = Vec::new();
        let mut stack = vec![i];
        if !self.collect_up(i, &mut stack, &mut found, cap) {
            return Err(TaxonomyError::PathExplosion {
                class: self.names[i].clone(),
                cap,
            });
        }
        let mut paths: Vec<LabelPath> = found
            .into_iter()
            .map(|mut rev| {
                rev.reverse();
                LabelPath::from_ixs(self, &rev)
            })
            .collect();
        paths.sort();
        Ok(paths)
    }

    // Returns false once more than `cap` paths have been found.
    fn collect_up(
        &self,
        at: NodeIx,
        stack: &mut Vec<NodeIx>,
        found: &mut Vec<Vec<NodeIx>>,
        cap: usize,
    ) -> bool {
        if self.parents[at].is_empty() {
            found.push(stack.clone());
            return found.len() <= cap;
        }
        for &p in &self.parents[at] {
            stack.push(p);
            let ok = self.collect_up(p, stack, found, cap);
            stack.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    /// Deepest common element of the inclusive ancestor sets of `a` and `b`,
    /// lexicographically first among equals.
    pub fn lca(&self, a: &str, b: &str) -> Result<ClassId, TaxonomyError> {
        let (ia, ib) = (self.require(a)?, self.require(b)?);
        self.lca_ix(ia, ib)
            .map(|i| self.names[i].clone())
            .ok_or_else(|| TaxonomyError::NoCommonAncestor(self.names[ia].clone(), self.names[ib].clone()))
    }

    pub fn lca_ix(&self, a: NodeIx, b: NodeIx) -> Option<NodeIx> {
        let in_b = |x: NodeIx| x == b || self.is_ancestor(x, b);
        std::iter::once(a)
            .chain(self.ancestors[a].iter().copied())
            .filter(|&x| in_b(x))
            .max_by(|&x, &y| self.depth[x].cmp(&self.depth[y]).then(y.cmp(&x)))
    }

    /// Shortest upward path `from -> ... -> to` (inclusive), lexicographically
    /// first among shortest ones. `None` unless `to` is `from` or an ancestor.
    pub fn shortest_upward_path(&self, from: NodeIx, to: NodeIx) -> Option<Vec<NodeIx>> {
        if from != to && !self.is_ancestor(to, from) {
            return None;
        }
        // Distance to `to`, computed over nodes that can still reach it.
        let mut dist: BTreeMap<NodeIx, usize> = BTreeMap::new();
        dist.insert(to, 0);
        let mut queue = VecDeque::from([to]);
        while let Some(x) = queue.pop_front() {
            for &c in &self.children[x] {
                if (c == from || self.is_ancestor(c, from)) && !dist.contains_key(&c) {
                    dist.insert(c, dist[&x] + 1);
                    queue.push_back(c);
                }
            }
        }
        let mut path = vec![from];
        let mut at = from;
        while at != to {
            let d = dist[&at];
            at = *self.parents[at]
                .iter()
                .find(|p| dist.get(p) == Some(&(d - 1)))
                .expect("a parent one step closer exists");
            path.push(at);
        }
        Some(path)
    }

    /// Subgraph over `seed` and all its ancestors, keeping every edge among
    /// retained nodes.
    pub fn induced_subgraph<'a, I>(&self, seed: I) -> Result<Taxonomy, TaxonomyError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut keep = BTreeSet::new();
        for c in seed {
            let i = self.require(c)?;
            keep.insert(i);
            keep.extend(self.ancestors[i].iter().copied());
        }
        if keep.is_empty() {
            return Err(TaxonomyError::EmptyInput);
        }
        let nodes: Vec<ClassId> = keep.iter().map(|&i| self.names[i].clone()).collect();
        let edges: Vec<(ClassId, ClassId)> = keep
            .iter()
            .flat_map(|&c| {
                self.parents[c]
                    .iter()
                    .map(move |&p| (self.names[c].clone(), self.names[p].clone()))
            })
            .collect();
        Taxonomy::from_parts(nodes, edges)
    }

    /// Compares two classes by depth, deepest first, then by name.
    pub fn deeper_first(&self, a: NodeIx, b: NodeIx) -> Ordering {
        self.depth[b].cmp(&self.depth[a]).then(a.cmp(&b))
    }
}

/// Kahn's algorithm; on failure returns one cycle, listed child -> parent.
fn topological_order(
    parents: &[Vec<NodeIx>],
    children: &[Vec<NodeIx>],
) -> Result<Vec<NodeIx>, Vec<NodeIx>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut queue: VecDeque<NodeIx> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(x) = queue.pop_front() {
        order.push(x);
        for &c in &children[x] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Every unplaced node keeps an unplaced parent, so walking parents must
    // eventually revisit a node.
    let start = (0..n).find(|&i| indegree[i] > 0).expect("unplaced node");
    let mut pos: HashMap<NodeIx, usize> = HashMap::new();
    let mut walk = Vec::new();
    let mut at = start;
    loop {
        if let Some(&k) = pos.get(&at) {
            return Err(walk[k..].to_vec());
        }
        pos.insert(at, walk.len());
        walk.push(at);
        at = *parents[at]
            .iter()
            .find(|&&p| indegree[p] > 0)
            .expect("unplaced parent");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn id(s: &str) -> ClassId {
        ClassId::new(s).unwrap()
    }

    fn names(v: &[&str]) -> BTreeSet<ClassId> {
        v.iter().map(|s| id(s)).collect()
    }

    #[test]
    fn class_id_rejects_whitespace() {
        assert!(ClassId::new("working dog").is_err());
        assert!(ClassId::new("").is_err());
        assert_eq!(ClassId::new("dog").unwrap().as_str(), "dog");
    }

    #[test]
    fn dog_has_two_parents() {
        let t = fixtures::wordnet_animals();
        assert_eq!(t.parents("dog").unwrap(), names(&["canine", "domestic_animal"]));
        assert_eq!(t.roots(), names(&["animal"]));
        assert_eq!(t.edge_count(), 19);
    }

    #[test]
    fn single_edge() {
        let t = Taxonomy::from_edges([(id("a"), id("b"))]).unwrap();
        assert_eq!(t.roots(), names(&["b"]));
        assert_eq!(t.leaves(), names(&["a"]));
        assert_eq!(t.ancestors("a").unwrap(), names(&["b"]));
    }

    #[test]
    fn cycles_rejected() {
        let err = Taxonomy::from_edges([(id("a"), id("b")), (id("b"), id("a"))]).unwrap_err();
        match err {
            TaxonomyError::CycleDetected(c) => assert_eq!(c.len(), 2),
            other => panic!("{other:?}"),
        }
        let err = Taxonomy::from_edges([
            (id("x"), id("r")),
            (id("a"), id("x")),
            (id("b"), id("a")),
            (id("c"), id("b")),
            (id("a"), id("c")),
        ])
        .unwrap_err();
        match err {
            TaxonomyError::CycleDetected(c) => assert_eq!(c.len(), 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Taxonomy::from_edges([(id("a"), id("a"))]),
            Err(TaxonomyError::CycleDetected(_))
        ));
    }

    #[test]
    fn empty_and_duplicates() {
        assert_eq!(
            Taxonomy::from_edges(Vec::new()).unwrap_err(),
            TaxonomyError::EmptyInput
        );
        let (t, dups) =
            Taxonomy::from_edges_reporting([(id("a"), id("b")), (id("a"), id("b"))]).unwrap();
        assert_eq!(t.edge_count(), 1);
        assert_eq!(dups, vec![(id("a"), id("b"))]);
    }

    #[test]
    fn ancestor_queries() {
        let t = fixtures::wordnet_animals();
        let anc = t.ancestors("doberman").unwrap();
        assert!(anc.is_superset(&names(&[
            "pinscher",
            "watch_dog",
            "working_dog",
            "dog",
            "domestic_animal",
            "canine",
            "carnivore",
            "animal"
        ])));
        assert!(t.ancestors("animal").unwrap().is_empty());
        assert_eq!(
            t.ancestors("dog").unwrap(),
            names(&["domestic_animal", "canine", "carnivore", "animal"])
        );
        assert!(matches!(t.ancestors("unicorn"), Err(TaxonomyError::UnknownClass(_))));
    }

    #[test]
    fn depth_is_longest_root_path() {
        let t = fixtures::wordnet_animals();
        assert_eq!(t.depth("animal").unwrap(), 0);
        assert_eq!(t.depth("canine").unwrap(), 2);
        assert_eq!(t.depth("dog").unwrap(), 3);
        assert_eq!(t.depth("doberman").unwrap(), 7);
    }

    #[test]
    fn doberman_has_two_root_paths() {
        let t = fixtures::wordnet_animals();
        let paths = t.root_paths("doberman", DEFAULT_PATH_CAP).unwrap();
        let shown: Vec<String> = paths.iter().map(|p| p.to_string()).collect();
        assert_eq!(
            shown,
            vec![
                "animal>carnivore>canine>dog>working_dog>watch_dog>pinscher>doberman",
                "animal>domestic_animal>dog>working_dog>watch_dog>pinscher>doberman",
            ]
        );
        assert_eq!(t.root_paths("animal", 64).unwrap().len(), 1);
        assert!(matches!(
            t.root_paths("doberman", 1),
            Err(TaxonomyError::PathExplosion { .. })
        ));
    }

    #[test]
    fn lca_fixtures() {
        let t = fixtures::wordnet_animals();
        assert_eq!(t.lca("doberman", "rottweiler").unwrap().as_str(), "working_dog");
        assert_eq!(t.lca("fox", "cat").unwrap().as_str(), "carnivore");
        assert_eq!(t.lca("cat", "cat").unwrap().as_str(), "cat");
        assert_eq!(t.lca("dog", "doberman").unwrap().as_str(), "dog");
        let two = Taxonomy::from_edges([(id("a"), id("r1")), (id("b"), id("r2"))]).unwrap();
        assert!(matches!(two.lca("a", "b"), Err(TaxonomyError::NoCommonAncestor(..))));
    }

    #[test]
    fn animal_fragment_subgraph() {
        let t = fixtures::wordnet_animals();
        let sub = t
            .induced_subgraph(["dog", "fox", "cat", "doberman", "rottweiler"])
            .unwrap();
        assert_eq!(sub.len(), 14);
        for gone in ["hunting_dog", "hound", "bluetick", "domestic_cat", "wild_cat"] {
            assert!(!sub.contains(gone));
        }
        assert_eq!(sub.parents("dog").unwrap().len(), 2);

        let root_only = t.induced_subgraph(["animal"]).unwrap();
        assert_eq!(root_only.len(), 1);
        assert_eq!(root_only.edge_count(), 0);

        let leaves: Vec<String> = t.leaves().iter().map(|c| c.to_string()).collect();
        let full = t.induced_subgraph(leaves.iter().map(String::as_str)).unwrap();
        assert_eq!(full, t);
    }

    #[test]
    fn shortest_upward_paths() {
        let t = fixtures::wordnet_animals();
        let (d, a) = (t.ix("doberman").unwrap(), t.ix("animal").unwrap());
        let p: Vec<&str> = t
            .shortest_upward_path(d, a)
            .unwrap()
            .iter()
            .map(|&i| t.name(i).as_str())
            .collect();
        // dog -> domestic_animal -> animal beats dog -> canine -> carnivore -> animal.
        assert_eq!(p.len(), 7);
        assert_eq!(&p[..5], &["doberman", "pinscher", "watch_dog", "working_dog", "dog"]);
        assert_eq!(p[5], "domestic_animal");
        // Tie between equally short routes resolves to the smaller class id.
        let diamond = Taxonomy::from_edges([
            (id("x"), id("b")),
            (id("x"), id("a")),
            (id("a"), id("r")),
            (id("b"), id("r")),
        ])
        .unwrap();
        let route = diamond
            .shortest_upward_path(diamond.ix("x").unwrap(), diamond.ix("r").unwrap())
            .unwrap();
        assert_eq!(diamond.name(route[1]).as_str(), "a");
        assert!(t.shortest_upward_path(a, d).is_none());
        assert_eq!(t.shortest_upward_path(d, d).unwrap(), vec![d]);
    }

    #[test]
    fn label_path_validation() {
        let t = fixtures::wordnet_animals();
        let ok = LabelPath::new(&t, vec![id("animal"), id("carnivore"), id("feline")]);
        assert!(ok.is_ok());
        assert!(LabelPath::new(&t, vec![id("carnivore"), id("feline")]).is_err());
        assert!(LabelPath::new(&t, vec![id("animal"), id("feline")]).is_err());
    }
}
