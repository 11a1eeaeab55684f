use std::collections::{BTreeMap, BTreeSet};

use polyalign::ontology::{parse_ontology_str, Iri, Ontology, RdfFormat};
use polyalign::reasoner::compute_closure;
use proptest::prelude::*;

const SUBCLASS: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
const EQUIVALENT: &str = "http://www.w3.org/2002/07/owl#equivalentClass";

fn name(i: usize) -> String {
    format!("http://e/c{i:02}")
}

fn build(n: usize, edges: &[(usize, usize)], equivalences: &[(usize, usize)]) -> Ontology {
    let mut doc = String::new();
    for i in 0..n {
        doc.push_str(&format!(
            "<{}> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .\n",
            name(i)
        ));
    }
    for (a, b) in edges {
        doc.push_str(&format!("<{}> <{SUBCLASS}> <{}> .\n", name(*a), name(*b)));
    }
    for (a, b) in equivalences {
        doc.push_str(&format!("<{}> <{EQUIVALENT}> <{}> .\n", name(*a), name(*b)));
    }
    parse_ontology_str(&doc, RdfFormat::NTriples).unwrap().ontology
}

/// All-pairs shortest path lengths by Floyd–Warshall; `None` means unreachable.
fn distances(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<Option<usize>>> {
    let mut d = vec![vec![None; n]; n];
    for &(a, b) in edges {
        if a != b {
            d[a][b] = Some(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(x), Some(y)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|cur| x + y < cur) {
                        d[i][j] = Some(x + y);
                    }
                }
            }
        }
    }
    d
}

fn graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1usize..=50).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..(2 * n))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ancestors_match_brute_force_reachability((n, edges) in graph()) {
        let inferred = compute_closure(&build(n, &edges, &[]));
        let d = distances(n, &edges);
        let same_scc = |a: usize, b: usize| a == b || (d[a][b].is_some() && d[b][a].is_some());
        let rep = |a: usize| (0..n).find(|&b| same_scc(a, b)).unwrap();

        for x in 0..n {
            let expected: BTreeSet<usize> = (0..n)
                .filter(|&y| d[x][y].is_some() && !same_scc(x, y))
                .map(rep)
                .collect();
            let got: Vec<usize> = inferred
                .ancestors(&Iri::new(name(x)).unwrap())
                .iter()
                .map(|iri| iri.as_str()[10..].parse().unwrap())
                .collect();
            let got_set: BTreeSet<usize> = got.iter().copied().collect();
            prop_assert_eq!(got_set.len(), got.len(), "duplicates for {}", x);
            prop_assert_eq!(&got_set, &expected, "ancestors of {}", x);

            // Nearest first by hops in the collapsed graph, where edges inside a component are free.
            let collapsed: Vec<(usize, usize)> = edges
                .iter()
                .filter(|&&(a, b)| !same_scc(a, b))
                .map(|&(a, b)| (rep(a), rep(b)))
                .collect();
            let cd = distances(n, &collapsed);
            let component_distance = |y: usize| cd[rep(x)][y].unwrap();
            let keys: Vec<(usize, usize)> = got.iter().map(|&y| (component_distance(y), y)).collect();
            let mut sorted = keys.clone();
            sorted.sort();
            prop_assert_eq!(keys, sorted, "ordering for {}", x);
        }
    }

    #[test]
    fn equivalence_is_an_idempotent_partition(
        n in 1usize..30,
        pairs in prop::collection::vec((0usize..30, 0usize..30), 0..40),
    ) {
        let pairs: Vec<(usize, usize)> = pairs.into_iter().filter(|&(a, b)| a < n && b < n).collect();
        let inferred = compute_closure(&build(n, &[], &pairs));
        // Brute-force connected components.
        let mut label: Vec<usize> = (0..n).collect();
        loop {
            let mut changed = false;
            for &(a, b) in &pairs {
                let m = label[a].min(label[b]);
                if label[a] != m || label[b] != m {
                    label[a] = m;
                    label[b] = m;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for x in 0..n {
            let iri = Iri::new(name(x)).unwrap();
            let canonical = inferred.canonical(&iri);
            prop_assert_eq!(canonical.as_str(), name(label[x]));
            prop_assert_eq!(inferred.canonical(canonical), canonical);
        }
    }

    #[test]
    fn siblings_exclude_self_and_share_a_parent((n, edges) in graph()) {
        let inferred = compute_closure(&build(n, &edges, &[]));
        let parents: BTreeMap<usize, BTreeSet<usize>> = edges.iter().filter(|(a, b)| a != b).fold(
            BTreeMap::new(),
            |mut m, &(a, b)| {
                m.entry(a).or_insert_with(BTreeSet::new).insert(b);
                m
            },
        );
        for x in 0..n {
            let iri = Iri::new(name(x)).unwrap();
            let expected: BTreeSet<String> = (0..n)
                .filter(|&y| y != x)
                .filter(|y| match (parents.get(&x), parents.get(y)) {
                    (Some(px), Some(py)) => !px.is_disjoint(py),
                    _ => false,
                })
                .map(name)
                .collect();
            let got: BTreeSet<String> = inferred
                .siblings(&iri)
                .map(|s| s.iter().map(|i| i.as_str().to_string()).collect())
                .unwrap_or_default();
            prop_assert_eq!(got, expected);
        }
    }
}

#[test]
fn cycle_with_exit_collapses() {
    // A ⊑ B, B ⊑ A, A ⊑ C
    let inferred = compute_closure(&build(3, &[(0, 1), (1, 0), (0, 2)], &[]));
    let c = |i| Iri::new(name(i)).unwrap();
    assert_eq!(inferred.ancestors(&c(0)), [c(2)]);
    assert_eq!(inferred.ancestors(&c(1)), [c(2)]);
    assert!(inferred.ancestors(&c(2)).is_empty());
    assert_eq!(inferred.collapsed_cycles(), 1);
}
