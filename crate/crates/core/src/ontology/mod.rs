//! In-memory ontology model built from N-Triples or Turtle input.
//!
//! An [`Ontology`] is immutable once built. Entities are keyed by [`Iri`];
//! labels and comments are grouped by lowercase primary language subtag, with
//! `"und"` for untagged literals. Blank nodes are skolemized into
//! [`vocab::SKOLEM_NS`], so every node in the model is an IRI.

mod syntax;
pub mod vocab;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use syntax::{Dialect, Parser};

pub use syntax::{Term, Triple};

/// Language tag used for literals without one.
pub const UNDETERMINED: &str = "und";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("malformed syntax at {line}:{column}: {detail}")]
    MalformedSyntax {
        line: usize,
        column: usize,
        detail: String,
    },
    #[error("unsupported feature at {line}:{column}: {detail}")]
    UnsupportedFeature {
        line: usize,
        column: usize,
        detail: String,
    },
    #[error("I/O error: {0}")]
    Io(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid IRI {0:?}: expected an absolute IRI with a scheme")]
pub struct InvalidIri(pub String);

/// Absolute IRI. Comparison is exact string equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, InvalidIri> {
        let value = value.into();
        if value.is_empty() || !syntax::has_scheme(&value) {
            return Err(InvalidIri(value));
        }
        Ok(Self(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True for IRIs minted for blank nodes.
    pub fn is_skolem(&self) -> bool {
        self.0.starts_with(vocab::SKOLEM_NS)
    }

    /// The fragment after `#`, or else the last path segment.
    pub fn local_name(&self) -> &str {
        let s = self.0.trim_end_matches(['/', '#']);
        if let Some((_, frag)) = s.rsplit_once('#') {
            return frag;
        }
        if let Some((_, seg)) = s.rsplit_once('/') {
            return seg;
        }
        s.rsplit_once(':').map_or(s, |(_, rest)| rest)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Iri {
    type Error = InvalidIri;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Iri::new(value)
    }
}

impl TryFrom<&str> for Iri {
    type Error = InvalidIri;
    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Iri::new(value)
    }
}

impl From<Iri> for String {
    fn from(iri: Iri) -> Self {
        iri.0
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Class,
    ObjectProperty,
    DataProperty,
    Individual,
    Unknown,
}

impl EntityKind {
    /// Kinds align only with themselves; `Unknown` aligns with anything.
    pub fn compatible_with(self, other: EntityKind) -> bool {
        self == EntityKind::Unknown || other == EntityKind::Unknown || self == other
    }

    pub fn is_property(self) -> bool {
        matches!(self, EntityKind::ObjectProperty | EntityKind::DataProperty)
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EntityKind::Class => "class",
            EntityKind::ObjectProperty => "object_property",
            EntityKind::DataProperty => "data_property",
            EntityKind::Individual => "individual",
            EntityKind::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

/// Label lookup outcome: which language the labels came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelChoice {
    pub language: String,
    pub labels: Vec<String>,
    /// True when no literal label existed and the IRI local name was used.
    pub from_iri: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub iri: Iri,
    pub kind: EntityKind,
    /// Language tag to labels, each list sorted and free of duplicates.
    pub labels: BTreeMap<String, Vec<String>>,
    pub comments: BTreeMap<String, Vec<String>>,
}

impl Entity {
    pub fn new(iri: Iri, kind: EntityKind) -> Self {
        Self {
            iri,
            kind,
            labels: BTreeMap::new(),
            comments: BTreeMap::new(),
        }
    }

    /// Labels of the first preferred language present, then `"und"`, then the
    /// first language in tag order, then the split IRI local name.
    pub fn get_labels(&self, preference: &[String]) -> Vec<String> {
        self.choose_labels(preference).labels
    }

    pub fn choose_labels(&self, preference: &[String]) -> LabelChoice {
        if let Some((lang, labels)) = pick_language(&self.labels, preference) {
            return LabelChoice {
                language: lang.to_string(),
                labels: labels.to_vec(),
                from_iri: false,
            };
        }
        LabelChoice {
            language: UNDETERMINED.to_string(),
            labels: vec![split_local_name(self.iri.local_name())],
            from_iri: true,
        }
    }

    /// Comments in the first preferred language present, falling back to `"und"` only.
    pub fn preferred_comment(&self, preference: &[String]) -> Option<&str> {
        preference
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(UNDETERMINED))
            .find_map(|lang| self.comments.get(lang).and_then(|c| c.first()))
            .map(String::as_str)
    }
}

fn pick_language<'a>(
    map: &'a BTreeMap<String, Vec<String>>,
    preference: &[String],
) -> Option<(&'a str, &'a [String])> {
    let nonempty = |lang: &str| {
        map.get_key_value(lang)
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    };
    preference
        .iter()
        .find_map(|lang| nonempty(&normalize_language(lang)))
        .or_else(|| nonempty(UNDETERMINED))
        .or_else(|| {
            map.iter()
                .find(|(_, v)| !v.is_empty())
                .map(|(k, v)| (k.as_str(), v.as_slice()))
        })
}

/// Splits a local name such as `EducationalInstitution` or `has_part` into words.
pub fn split_local_name(local: &str) -> String {
    let chars: Vec<char> = local.chars().collect();
    let mut out = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if matches!(c, '_' | '-' | ' ') {
            if !out.is_empty() && !out.ends_with(' ') {
                out.push(' ');
            }
            continue;
        }
        if i > 0 && c.is_uppercase() && !out.is_empty() && !out.ends_with(' ') {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower) {
                out.push(' ');
            }
        }
        out.push(c);
    }
    let out = out.trim().to_string();
    if out.is_empty() {
        local.to_string()
    } else {
        out
    }
}

/// Lowercase primary subtag: `en-US` becomes `en`; empty becomes `und`.
pub fn normalize_language(tag: &str) -> String {
    let primary = tag.split(['-', '_']).next().unwrap_or("").to_ascii_lowercase();
    if primary.is_empty() {
        UNDETERMINED.to_string()
    } else {
        primary
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RdfFormat {
    NTriples,
    Turtle,
}

impl RdfFormat {
    /// Guesses the format from a file extension: `.nt` is N-Triples, all else Turtle.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("nt") => RdfFormat::NTriples,
            _ => RdfFormat::Turtle,
        }
    }
}

impl std::str::FromStr for RdfFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ntriples" | "n-triples" | "nt" => Ok(RdfFormat::NTriples),
            "turtle" | "ttl" => Ok(RdfFormat::Turtle),
            other => Err(format!("unknown RDF format '{other}' (expected ntriples or turtle)")),
        }
    }
}

/// What the parser saw but did not use.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub triples: usize,
    /// Ignored triples by predicate (or `rdf:type <object>` for unused type assertions).
    pub ignored: BTreeMap<String, usize>,
    pub dropped_self_loops: usize,
}

impl ParseReport {
    pub fn ignored_total(&self) -> usize {
        self.ignored.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedOntology {
    pub ontology: Ontology,
    pub report: ParseReport,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ontology {
    entities: BTreeMap<Iri, Entity>,
    subclass_edges: BTreeSet<(Iri, Iri)>,
    equivalence_edges: BTreeSet<(Iri, Iri)>,
    property_domains: BTreeMap<Iri, BTreeSet<Iri>>,
    property_ranges: BTreeMap<Iri, BTreeSet<Iri>>,
    instance_of: BTreeSet<(Iri, Iri)>,
}

impl Ontology {
    pub fn entities(&self) -> &BTreeMap<Iri, Entity> {
        &self.entities
    }

    pub fn entity(&self, iri: &Iri) -> Option<&Entity> {
        self.entities.get(iri)
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// `(child, parent)` pairs from `rdfs:subClassOf`; never self-loops.
    pub fn subclass_edges(&self) -> &BTreeSet<(Iri, Iri)> {
        &self.subclass_edges
    }

    /// Unordered `owl:equivalentClass` pairs, stored with the smaller IRI first.
    pub fn equivalence_edges(&self) -> &BTreeSet<(Iri, Iri)> {
        &self.equivalence_edges
    }

    pub fn property_domains(&self) -> &BTreeMap<Iri, BTreeSet<Iri>> {
        &self.property_domains
    }

    pub fn property_ranges(&self) -> &BTreeMap<Iri, BTreeSet<Iri>> {
        &self.property_ranges
    }

    /// `(individual, class)` pairs from `rdf:type` assertions on non-vocabulary classes.
    pub fn instance_of(&self) -> &BTreeSet<(Iri, Iri)> {
        &self.instance_of
    }

    /// Every IRI referenced by an edge that is missing from the entity map.
    pub fn dangling_references(&self) -> Vec<&Iri> {
        let edge_iris = self
            .subclass_edges
            .iter()
            .chain(&self.equivalence_edges)
            .chain(&self.instance_of)
            .flat_map(|(a, b)| [a, b])
            .chain(self.property_domains.iter().flat_map(|(p, c)| std::iter::once(p).chain(c)))
            .chain(self.property_ranges.iter().flat_map(|(p, c)| std::iter::once(p).chain(c)));
        edge_iris.filter(|iri| !self.entities.contains_key(*iri)).collect()
    }

    /// Returns a copy with every IRI rewritten by `f`. Used to build relabeled copies.
    pub fn map_iris(&self, mut f: impl FnMut(&Iri) -> Iri) -> Ontology {
        let mut pair = |(a, b): &(Iri, Iri)| (f(a), f(b));
        let subclass_edges = self.subclass_edges.iter().map(&mut pair).collect();
        let equivalence_edges = self
            .equivalence_edges
            .iter()
            .map(&mut pair)
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        let instance_of = self.instance_of.iter().map(&mut pair).collect();
        let mut map_sets = |m: &BTreeMap<Iri, BTreeSet<Iri>>| {
            m.iter()
                .map(|(k, v)| (f(k), v.iter().map(&mut f).collect()))
                .collect::<BTreeMap<_, _>>()
        };
        let property_domains = map_sets(&self.property_domains);
        let property_ranges = map_sets(&self.property_ranges);
        let entities = self
            .entities
            .values()
            .map(|e| {
                let mut e = e.clone();
                e.iri = f(&e.iri);
                (e.iri.clone(), e)
            })
            .collect();
        Ontology {
            entities,
            subclass_edges,
            equivalence_edges,
            property_domains,
            property_ranges,
            instance_of,
        }
    }

    /// Serializes to canonical N-Triples: sorted, one triple per line.
    pub fn to_ntriples(&self) -> String {
        let mut lines = Vec::new();
        for entity in self.entities.values() {
            let s = format!("<{}>", entity.iri);
            let ty = match entity.kind {
                EntityKind::Class => Some(vocab::OWL_CLASS),
                EntityKind::ObjectProperty => Some(vocab::OWL_OBJECT_PROPERTY),
                EntityKind::DataProperty => Some(vocab::OWL_DATATYPE_PROPERTY),
                EntityKind::Individual => Some(vocab::OWL_NAMED_INDIVIDUAL),
                EntityKind::Unknown => None,
            };
            if let Some(ty) = ty {
                lines.push(format!("{s} <{}> <{ty}> .", vocab::RDF_TYPE));
            }
            for (pred, map) in [(vocab::RDFS_LABEL, &entity.labels), (vocab::RDFS_COMMENT, &entity.comments)] {
                for (lang, values) in map {
                    for v in values {
                        let lit = escape_literal(v);
                        if lang == UNDETERMINED {
                            lines.push(format!("{s} <{pred}> \"{lit}\" ."));
                        } else {
                            lines.push(format!("{s} <{pred}> \"{lit}\"@{lang} ."));
                        }
                    }
                }
            }
        }
        let mut edge = |a: &Iri, pred: &str, b: &Iri| lines.push(format!("<{a}> <{pred}> <{b}> ."));
        for (c, p) in &self.subclass_edges {
            edge(c, vocab::RDFS_SUBCLASS_OF, p);
        }
        for (a, b) in &self.equivalence_edges {
            edge(a, vocab::OWL_EQUIVALENT_CLASS, b);
        }
        for (i, c) in &self.instance_of {
            edge(i, vocab::RDF_TYPE, c);
        }
        for (p, ds) in &self.property_domains {
            for d in ds {
                edge(p, vocab::RDFS_DOMAIN, d);
            }
        }
        for (p, rs) in &self.property_ranges {
            for r in rs {
                edge(p, vocab::RDFS_RANGE, r);
            }
        }
        lines.sort();
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }
}

fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

/// Parses an ontology from a UTF-8 stream.
pub fn parse_ontology(mut source: impl Read, format: RdfFormat) -> Result<ParsedOntology, ParseError> {
    let mut bytes = Vec::new();
    source
        .read_to_end(&mut bytes)
        .map_err(|e| ParseError::Io(e.to_string()))?;
    let text = String::from_utf8(bytes).map_err(|e| {
        let valid = &e.as_bytes()[..e.utf8_error().valid_up_to()];
        let prefix = String::from_utf8_lossy(valid);
        let line = prefix.matches('\n').count() + 1;
        let column = prefix.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ParseError::MalformedSyntax {
            line,
            column,
            detail: "invalid UTF-8".to_string(),
        }
    })?;
    parse_ontology_str(&text, format)
}

fn dialect(format: RdfFormat) -> Dialect {
    match format {
        RdfFormat::NTriples => Dialect::NTriples,
        RdfFormat::Turtle => Dialect::Turtle,
    }
}

pub fn parse_ontology_str(text: &str, format: RdfFormat) -> Result<ParsedOntology, ParseError> {
    let mut builder = OntologyBuilder::default();
    Parser::new(text, dialect(format)).parse_all(|t| builder.add_triple(t))?;
    Ok(builder.finish())
}

/// Raw triples in document order, blank nodes skolemized.
pub fn parse_triples(text: &str, format: RdfFormat) -> Result<Vec<Triple>, ParseError> {
    let mut out = Vec::new();
    Parser::new(text, dialect(format)).parse_all(|t| out.push(t))?;
    Ok(out)
}

#[derive(Default)]
struct OntologyBuilder {
    evidence: BTreeMap<Iri, BTreeSet<EntityKind>>,
    labels: BTreeMap<Iri, BTreeMap<String, BTreeSet<String>>>,
    comments: BTreeMap<Iri, BTreeMap<String, BTreeSet<String>>>,
    mentioned: BTreeSet<Iri>,
    subclass_edges: BTreeSet<(Iri, Iri)>,
    equivalence_edges: BTreeSet<(Iri, Iri)>,
    property_domains: BTreeMap<Iri, BTreeSet<Iri>>,
    property_ranges: BTreeMap<Iri, BTreeSet<Iri>>,
    instance_of: BTreeSet<(Iri, Iri)>,
    report: ParseReport,
}

impl OntologyBuilder {
    fn ignore(&mut self, key: String) {
        *self.report.ignored.entry(key).or_default() += 1;
    }

    fn add_triple(&mut self, triple: Triple) {
        self.report.triples += 1;
        // The parser only emits absolute IRIs.
        let subject = Iri(triple.subject);
        let predicate = triple.predicate;
        match (predicate.as_str(), triple.object) {
            (vocab::RDF_TYPE, Term::Iri(object)) => self.add_type(subject, object),
            (vocab::RDFS_LABEL | vocab::RDFS_COMMENT, Term::Literal { lexical, language, .. }) => {
                let text = lexical.trim();
                if text.is_empty() {
                    self.ignore(format!("{} (empty literal)", vocab::compact(&predicate)));
                    return;
                }
                let lang = language.as_deref().map_or_else(|| UNDETERMINED.to_string(), normalize_language);
                let target = if predicate == vocab::RDFS_LABEL {
                    &mut self.labels
                } else {
                    &mut self.comments
                };
                target
                    .entry(subject.clone())
                    .or_default()
                    .entry(lang)
                    .or_default()
                    .insert(text.to_string());
                self.mentioned.insert(subject);
            }
            (vocab::RDFS_SUBCLASS_OF, Term::Iri(object)) => {
                let object = Iri(object);
                if subject == object {
                    self.report.dropped_self_loops += 1;
                } else {
                    self.mentioned.insert(subject.clone());
                    self.mentioned.insert(object.clone());
                    self.subclass_edges.insert((subject, object));
                }
            }
            (vocab::OWL_EQUIVALENT_CLASS, Term::Iri(object)) => {
                let object = Iri(object);
                if subject != object {
                    self.mentioned.insert(subject.clone());
                    self.mentioned.insert(object.clone());
                    let pair = if subject < object { (subject, object) } else { (object, subject) };
                    self.equivalence_edges.insert(pair);
                }
            }
            (vocab::RDFS_DOMAIN | vocab::RDFS_RANGE, Term::Iri(object)) => {
                let object = Iri(object);
                self.mentioned.insert(subject.clone());
                self.mentioned.insert(object.clone());
                let target = if predicate == vocab::RDFS_DOMAIN {
                    &mut self.property_domains
                } else {
                    &mut self.property_ranges
                };
                target.entry(subject).or_default().insert(object);
            }
            _ => self.ignore(vocab::compact(&predicate)),
        }
    }

    fn add_type(&mut self, subject: Iri, object: String) {
        let kind = match object.as_str() {
            vocab::OWL_CLASS | vocab::RDFS_CLASS => Some(EntityKind::Class),
            o if vocab::OBJECT_PROPERTY_TYPES.contains(&o) => Some(EntityKind::ObjectProperty),
            vocab::OWL_DATATYPE_PROPERTY | vocab::OWL_ANNOTATION_PROPERTY => Some(EntityKind::DataProperty),
            vocab::OWL_NAMED_INDIVIDUAL | vocab::OWL_THING => Some(EntityKind::Individual),
            o if vocab::is_builtin_vocabulary(o) => None,
            _ => {
                let class = Iri(object.clone());
                self.mentioned.insert(class.clone());
                self.instance_of.insert((subject.clone(), class));
                Some(EntityKind::Individual)
            }
        };
        match kind {
            Some(kind) => {
                self.evidence.entry(subject.clone()).or_default().insert(kind);
                self.mentioned.insert(subject);
            }
            None => self.ignore(format!("rdf:type {}", vocab::compact(&object))),
        }
    }

    fn finish(self) -> ParsedOntology {
        let mut entities = BTreeMap::new();
        let sorted = |m: BTreeMap<String, BTreeSet<String>>| -> BTreeMap<String, Vec<String>> {
            m.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect()
        };
        let mut labels = self.labels;
        let mut comments = self.comments;
        for iri in self.mentioned {
            // Evidence precedence follows enum order: Class beats properties beats Individual.
            let kind = self
                .evidence
                .get(&iri)
                .and_then(|kinds| kinds.iter().next().copied())
                .unwrap_or(EntityKind::Unknown);
            let mut entity = Entity::new(iri.clone(), kind);
            entity.labels = labels.remove(&iri).map(sorted).unwrap_or_default();
            entity.comments = comments.remove(&iri).map(sorted).unwrap_or_default();
            entities.insert(iri, entity);
        }
        let ontology = Ontology {
            entities,
            subclass_edges: self.subclass_edges,
            equivalence_edges: self.equivalence_edges,
            property_domains: self.property_domains,
            property_ranges: self.property_ranges,
            instance_of: self.instance_of,
        };
        debug_assert!(ontology.dangling_references().is_empty());
        ParsedOntology {
            ontology,
            report: self.report,
        }
    }
}
