use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use taxagg::decision::{walk_entropy_ix, walk_marginal_ix};
use taxagg::eval::lca_prf;
use taxagg::graphical::{ObservationKind, ObservationParams, ParamSet};
use taxagg::io;
use taxagg::synth::random_dag;
use taxagg::{propagate, ClassId, EntropyForm, ScoreSheet, Taxonomy};

fn dag(seed: u64) -> Taxonomy {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let n = r.random_range(1..16);
    random_dag(&mut r, n, 0.2, 0.3)
}

/// A sheet with up to three classifiers scoring random classes of `t`.
fn sheet(t: &Taxonomy, seed: u64) -> ScoreSheet {
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut s = ScoreSheet::new("x");
    for j in ["f1", "f2", "f3"] {
        for c in t.classes() {
            if r.random_bool(0.4) {
                s.insert(j, c.clone(), (r.random_range(0..=1000) as f64) / 1000.0).unwrap();
            }
        }
    }
    if s.is_empty() {
        s.insert("f1", t.name(0).clone(), 0.5).unwrap();
    }
    s
}

proptest! {
    #[test]
    fn ancestor_descendant_duality(seed in any::<u64>()) {
        let t = dag(seed);
        for a in 0..t.len() {
            for d in 0..t.len() {
                prop_assert_eq!(t.ancestors_of(d).contains(&a), t.descendants_of(a).contains(&d));
            }
            prop_assert!(!t.ancestors_of(a).contains(&a));
        }
    }

    #[test]
    fn depth_exceeds_every_parent(seed in any::<u64>()) {
        let t = dag(seed);
        for c in 0..t.len() {
            for &p in t.parents_of(c) {
                prop_assert!(t.depth_of(c) > t.depth_of(p));
            }
        }
    }

    #[test]
    fn lca_is_symmetric_common_ancestor(seed in any::<u64>()) {
        let t = dag(seed);
        for a in 0..t.len() {
            for b in 0..t.len() {
                let l = t.lca_ix(a, b);
                prop_assert_eq!(l, t.lca_ix(b, a));
                if let Some(l) = l {
                    prop_assert!(l == a || t.is_ancestor(l, a));
                    prop_assert!(l == b || t.is_ancestor(l, b));
                }
            }
        }
    }

    #[test]
    fn induced_subgraph_is_idempotent(seed in any::<u64>(), picks in proptest::collection::vec(any::<prop::sample::Index>(), 1..4)) {
        let t = dag(seed);
        let seeds: Vec<&str> = picks.iter().map(|p| t.name(p.index(t.len())).as_str()).collect();
        let once = t.induced_subgraph(seeds.iter().copied()).unwrap();
        let twice = once.induced_subgraph(seeds.iter().copied()).unwrap();
        prop_assert_eq!(&once, &twice);
        for c in once.classes() {
            prop_assert_eq!(once.ancestors(c.as_str()).unwrap(), t.ancestors(c.as_str()).unwrap());
        }
    }

    #[test]
    fn root_paths_are_valid(seed in any::<u64>()) {
        let t = dag(seed);
        for c in t.classes() {
            let paths = t.root_paths(c.as_str(), 1 << 20).unwrap();
            prop_assert!(!paths.is_empty());
            for p in paths {
                prop_assert_eq!(p.terminal(), c);
                prop_assert!(t.roots().contains(p.root()));
            }
        }
    }

    #[test]
    fn propagated_scores_dominate_descendants(seed in any::<u64>()) {
        let t = dag(seed);
        let s = sheet(&t, seed);
        let p = propagate(&t, &s).unwrap();
        let g = p.graph();
        for c in 0..g.len() {
            for &a in g.ancestors_of(c) {
                prop_assert!(p.values()[a] >= p.values()[c] - 1e-12);
            }
        }
    }

    #[test]
    fn propagation_is_linear(seed in any::<u64>()) {
        let t = dag(seed);
        let s = sheet(&t, seed);
        let mut halves = ScoreSheet::new("x");
        for (j, c, y) in s.iter() {
            halves.insert(j, c.clone(), y / 2.0).unwrap();
        }
        let full = propagate(&t, &s).unwrap();
        let half = propagate(&t, &halves).unwrap();
        for (a, b) in full.values().iter().zip(half.values()) {
            prop_assert!((a - 2.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn propagation_ignores_classifier_names(seed in any::<u64>()) {
        let t = dag(seed);
        let s = sheet(&t, seed);
        let mut renamed = ScoreSheet::new("x");
        for (j, c, y) in s.iter() {
            renamed.insert(format!("z{j}"), c.clone(), y).unwrap();
        }
        let a = propagate(&t, &s).unwrap();
        let b = propagate(&t, &renamed).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_walk_grows_with_theta(seed in any::<u64>(), lo in 0.0f64..1.0, hi in 0.0f64..1.0) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let t = dag(seed);
        let s = sheet(&t, seed);
        let p = propagate(&t, &s).unwrap();
        let g = p.graph();
        let v: Vec<Option<f64>> = p.values().iter().copied().map(Some).collect();
        for form in [EntropyForm::RawScores, EntropyForm::Distribution] {
            let short = walk_entropy_ix(g, &v, lo, form, g.root_ixs()[0]);
            let long = walk_entropy_ix(g, &v, hi, form, g.root_ixs()[0]);
            prop_assert!(long.starts_with(&short));
        }
    }

    #[test]
    fn marginal_walk_shrinks_with_tau(seed in any::<u64>(), lo in 0.0f64..1.01, hi in 0.0f64..1.01) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let t = dag(seed);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<Option<f64>> = (0..t.len()).map(|_| Some(r.random_range(0.0..1.0))).collect();
        let start = t.root_ixs()[0];
        let long = walk_marginal_ix(&t, &v, lo, start);
        let short = walk_marginal_ix(&t, &v, hi, start);
        prop_assert!(long.starts_with(&short));
    }

    #[test]
    fn lca_metrics_are_symmetric_and_bounded(seed in any::<u64>()) {
        let t = dag(seed);
        for a in t.classes() {
            for b in t.classes() {
                let x = lca_prf(&t, a.as_str(), b.as_str()).unwrap().prf;
                let y = lca_prf(&t, b.as_str(), a.as_str()).unwrap().prf;
                prop_assert_eq!((x.precision, x.recall, x.f1), (y.recall, y.precision, y.f1));
                // A harmonic mean lies between its arguments.
                let (lo, hi) = (x.precision.min(x.recall), x.precision.max(x.recall));
                prop_assert!(x.f1 >= lo - 1e-12 && x.f1 <= hi + 1e-12);
                let ai = t.require(a.as_str()).unwrap();
                let bi = t.require(b.as_str()).unwrap();
                if ai == bi || t.is_ancestor(ai, bi) {
                    prop_assert_eq!(x.precision, 1.0);
                }
                if ai == bi || t.is_ancestor(bi, ai) {
                    prop_assert_eq!(x.recall, 1.0);
                }
            }
        }
    }

    #[test]
    fn taxonomy_format_round_trips(seed in any::<u64>()) {
        let t = dag(seed);
        let text = io::write_taxonomy(&t);
        prop_assert_eq!(io::parse_taxonomy(&text).unwrap(), t);
    }

    #[test]
    fn sheet_format_round_trips(seeds in proptest::collection::vec(any::<u64>(), 1..5)) {
        let t = dag(seeds[0]);
        let sheets: Vec<ScoreSheet> = seeds
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let mut sh = sheet(&t, s);
                sh.instance_id = format!("i{i}");
                sh
            })
            .collect();
        let text = io::write_sheets(&sheets);
        prop_assert_eq!(io::parse_sheets(&text, Some(&t)).unwrap(), sheets.clone());
        prop_assert_eq!(io::write_sheets(&io::parse_sheets(&text, None).unwrap()), text);
    }

    #[test]
    fn params_format_round_trips(raw in proptest::collection::vec((0u8..4, -5000i32..5000, 1u32..5000, any::<bool>()), 1..20)) {
        let mut p = ParamSet::new();
        for (k, (j, m, s, discrete)) in raw.iter().enumerate() {
            let kind = if *discrete {
                ObservationKind::Discrete { alpha: f64::from(*s) / 5001.0, beta: 0.5 }
            } else {
                ObservationKind::Binormal { mu0: f64::from(*m) / 1000.0, sigma0: f64::from(*s) / 1000.0, mu1: 1.0, sigma1: 2.5 }
            };
            p.insert(format!("f{j}"), ClassId::new(format!("c{k}")).unwrap(), kind).unwrap();
        }
        let text = io::write_params(&p);
        let back = io::parse_params(&text).unwrap();
        prop_assert_eq!(io::write_params(&back), text);
        for (a, b) in p.iter().zip(back.iter()) {
            prop_assert_eq!(&a.classifier, &b.classifier);
            prop_assert_eq!(&a.node, &b.node);
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(1.0);
            match (a.kind, b.kind) {
                (ObservationKind::Binormal { mu0, sigma0, .. }, ObservationKind::Binormal { mu0: m, sigma0: s, .. }) => {
                    prop_assert!(close(mu0, m) && close(sigma0, s));
                }
                (ObservationKind::Discrete { alpha, .. }, ObservationKind::Discrete { alpha: a2, .. }) => {
                    prop_assert!(close(alpha, a2));
                }
                _ => prop_assert!(false, "kind changed"),
            }
        }
    }

    #[test]
    fn gold_format_round_trips(labels in proptest::collection::btree_map("[a-z]{1,6}", proptest::collection::btree_set("[a-z]{1,4}", 1..3), 1..10)) {
        let gold: BTreeMap<String, Vec<ClassId>> = labels
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().map(|c| ClassId::new(c).unwrap()).collect()))
            .collect();
        prop_assert_eq!(io::parse_gold(&io::write_gold(&gold), None).unwrap(), gold);
    }
}

#[test]
fn params_iterate_in_key_order() {
    let p: ParamSet = [("g", "b"), ("f", "z"), ("f", "a")]
        .into_iter()
        .map(|(j, c)| ObservationParams {
            classifier: j.into(),
            node: ClassId::new(c).unwrap(),
            kind: ObservationKind::Discrete { alpha: 0.6, beta: 0.7 },
        })
        .collect();
    let keys: Vec<(String, String)> = p.iter().map(|o| (o.classifier, o.node.to_string())).collect();
    assert_eq!(keys, [("f", "a"), ("f", "z"), ("g", "b")].map(|(a, b)| (a.to_string(), b.to_string())));
}
