//! Structural closure over a parsed ontology.
//!
//! Stands in for a description-logic reasoner: subclass transitivity with
//! cycles collapsed, `owl:equivalentClass` partitions, sibling sets and
//! properties inherited through `rdfs:domain`. Everything is deterministic.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use log::warn;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::unionfind::UnionFind;

use crate::ontology::{Iri, Ontology};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferredOntology {
    base: Ontology,
    ancestors: BTreeMap<Iri, Vec<Iri>>,
    equivalence_class: BTreeMap<Iri, Iri>,
    siblings: BTreeMap<Iri, BTreeSet<Iri>>,
    attached_properties: BTreeMap<Iri, BTreeSet<Iri>>,
    collapsed_cycles: usize,
}

impl InferredOntology {
    pub fn base(&self) -> &Ontology {
        &self.base
    }

    /// Strict ancestors, nearest first (ties by IRI). Members of a collapsed
    /// subclass cycle are represented by the cycle's smallest IRI.
    pub fn ancestors(&self, iri: &Iri) -> &[Iri] {
        self.ancestors.get(iri).map_or(&[], Vec::as_slice)
    }

    /// Canonical (lexicographically smallest) member of the equivalence class.
    pub fn canonical<'a>(&'a self, iri: &'a Iri) -> &'a Iri {
        self.equivalence_class.get(iri).unwrap_or(iri)
    }

    pub fn equivalence_class(&self) -> &BTreeMap<Iri, Iri> {
        &self.equivalence_class
    }

    /// Entities sharing at least one direct parent, excluding `iri` itself.
    pub fn siblings(&self, iri: &Iri) -> Option<&BTreeSet<Iri>> {
        self.siblings.get(iri)
    }

    /// Properties whose domain is the class or one of its ancestors.
    pub fn attached_properties(&self, iri: &Iri) -> Option<&BTreeSet<Iri>> {
        self.attached_properties.get(iri)
    }

    /// Number of subclass cycles that were collapsed.
    pub fn collapsed_cycles(&self) -> usize {
        self.collapsed_cycles
    }
}

pub fn compute_closure(onto: &Ontology) -> InferredOntology {
    let entities: Vec<&Iri> = onto.entities().keys().collect();
    let index: BTreeMap<&Iri, usize> = entities.iter().enumerate().map(|(i, iri)| (*iri, i)).collect();

    let mut graph = DiGraph::<usize, ()>::with_capacity(entities.len(), onto.subclass_edges().len());
    let nodes: Vec<NodeIndex> = (0..entities.len()).map(|i| graph.add_node(i)).collect();
    for (child, parent) in onto.subclass_edges() {
        graph.add_edge(nodes[index[child]], nodes[index[parent]], ());
    }

    // Strongly connected components, each represented by its smallest IRI.
    let mut component = vec![0usize; entities.len()];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut collapsed_cycles = 0;
    for scc in tarjan_scc(&graph) {
        let mut scc: Vec<usize> = scc.into_iter().map(|n| graph[n]).collect();
        scc.sort_unstable();
        if scc.len() > 1 {
            collapsed_cycles += 1;
            warn!(
                "collapsing subclass cycle of {} classes onto {}",
                scc.len(),
                entities[scc[0]]
            );
        }
        for &m in &scc {
            component[m] = members.len();
        }
        members.push(scc);
    }
    let representative = |c: usize| members[c][0];

    let mut condensed: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); members.len()];
    for (child, parent) in onto.subclass_edges() {
        let (a, b) = (component[index[child]], component[index[parent]]);
        if a != b {
            condensed[a].insert(b);
        }
    }

    // Breadth-first per component gives minimum edge distance; sort by (distance, IRI).
    let mut component_ancestors: Vec<Vec<usize>> = Vec::with_capacity(members.len());
    for start in 0..members.len() {
        let mut dist: BTreeMap<usize, usize> = BTreeMap::new();
        let mut queue = VecDeque::from([(start, 0usize)]);
        while let Some((c, d)) = queue.pop_front() {
            for &next in &condensed[c] {
                if next != start && !dist.contains_key(&next) {
                    dist.insert(next, d + 1);
                    queue.push_back((next, d + 1));
                }
            }
        }
        let mut found: Vec<(usize, usize)> = dist.into_iter().map(|(c, d)| (d, representative(c))).collect();
        found.sort_unstable();
        component_ancestors.push(found.into_iter().map(|(_, rep)| rep).collect());
    }
    let ancestors: BTreeMap<Iri, Vec<Iri>> = entities
        .iter()
        .enumerate()
        .map(|(i, iri)| {
            let list = component_ancestors[component[i]]
                .iter()
                .map(|&a| entities[a].clone())
                .collect();
            ((*iri).clone(), list)
        })
        .collect();

    let mut uf = UnionFind::<usize>::new(entities.len());
    for (a, b) in onto.equivalence_edges() {
        uf.union(index[a], index[b]);
    }
    let mut smallest: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..entities.len() {
        // Indices follow IRI order, so the first member seen is the smallest.
        smallest.entry(uf.find(i)).or_insert(i);
    }
    let equivalence_class = entities
        .iter()
        .enumerate()
        .map(|(i, iri)| ((*iri).clone(), entities[smallest[&uf.find(i)]].clone()))
        .collect();

    let mut children: BTreeMap<&Iri, BTreeSet<&Iri>> = BTreeMap::new();
    for (child, parent) in onto.subclass_edges() {
        children.entry(parent).or_default().insert(child);
    }
    let mut siblings: BTreeMap<Iri, BTreeSet<Iri>> = BTreeMap::new();
    for kids in children.values() {
        for &k in kids {
            let entry = siblings.entry(k.clone()).or_default();
            entry.extend(kids.iter().filter(|&&o| o != k).map(|&o| o.clone()));
        }
    }

    let mut domain_users: BTreeMap<&Iri, BTreeSet<&Iri>> = BTreeMap::new();
    for (prop, domains) in onto.property_domains() {
        for d in domains {
            domain_users.entry(d).or_default().insert(prop);
        }
    }
    let mut attached_properties: BTreeMap<Iri, BTreeSet<Iri>> = BTreeMap::new();
    for (i, iri) in entities.iter().enumerate() {
        let mut related: Vec<usize> = members[component[i]].clone();
        for &rep in &component_ancestors[component[i]] {
            related.extend(&members[component[rep]]);
        }
        let props: BTreeSet<Iri> = related
            .iter()
            .filter_map(|&r| domain_users.get(entities[r]))
            .flatten()
            .map(|&p| p.clone())
            .collect();
        if !props.is_empty() {
            attached_properties.insert((*iri).clone(), props);
        }
    }

    InferredOntology {
        base: onto.clone(),
        ancestors,
        equivalence_class,
        siblings,
        attached_properties,
        collapsed_cycles,
    }
}
