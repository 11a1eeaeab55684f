//! Template-based verbalization of ontology entities.
//!
//! Classes render as `A <label> is a <parent> which has <properties>.`,
//! properties as `<label> is a relation from <domain> to <range>.` and
//! individuals as `<label> is an instance of <class>.` Clauses whose slot is
//! empty are dropped. Comments and optional external descriptions trail the
//! sentence. Slot text is taken from the entity's labels in the caller's
//! language preference; the scaffolding is always English.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{normalize_language, EntityKind, Iri, UNDETERMINED};
use crate::reasoner::InferredOntology;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerbalizeError {
    #[error("unknown entity {0}")]
    UnknownEntity(Iri),
    #[error("external descriptions line {line}: {detail}")]
    MalformedDescriptions { line: usize, detail: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    #[default]
    Contextual,
    /// Text is the bare label.
    LabelOnly,
}

/// Per-entity descriptions supplied from a file, keyed by IRI then language.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExternalDescriptions {
    entries: BTreeMap<Iri, BTreeMap<String, String>>,
}

impl ExternalDescriptions {
    /// Reads tab-separated `IRI<TAB>language<TAB>text` lines. Blank lines and
    /// lines starting with `#` are skipped; a repeated (IRI, language) keeps the last text.
    pub fn load(reader: impl BufRead) -> Result<Self, VerbalizeError> {
        let mut entries: BTreeMap<Iri, BTreeMap<String, String>> = BTreeMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line_no = n + 1;
            let line = line.map_err(|e| VerbalizeError::MalformedDescriptions {
                line: line_no,
                detail: e.to_string(),
            })?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.splitn(3, '\t');
            let (Some(iri), Some(lang), Some(text)) = (fields.next(), fields.next(), fields.next()) else {
                return Err(VerbalizeError::MalformedDescriptions {
                    line: line_no,
                    detail: "expected IRI, language and text separated by tabs".into(),
                });
            };
            let iri = Iri::new(iri.trim()).map_err(|e| VerbalizeError::MalformedDescriptions {
                line: line_no,
                detail: e.to_string(),
            })?;
            let text = text.trim();
            if text.is_empty() {
                continue;
            }
            entries
                .entry(iri)
                .or_default()
                .insert(normalize_language(lang.trim()), text.to_string());
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn lookup(&self, iri: &Iri, preference: &[String]) -> Option<&str> {
        let by_lang = self.entries.get(iri)?;
        preference
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(UNDETERMINED))
            .find_map(|l| by_lang.get(l))
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerbalizerConfig {
    pub template: Template,
    /// Add sibling labels for short labels.
    pub disambiguate: bool,
    /// Labels with fewer characters than this get sibling context.
    pub short_label_threshold: usize,
    pub max_siblings: usize,
    /// Use inherited properties and siblings from the closure; when off only
    /// asserted domains are used and siblings are never added.
    pub use_inferred_context: bool,
    pub kinds: BTreeSet<EntityKind>,
    pub external: Option<Arc<ExternalDescriptions>>,
}

impl Default for VerbalizerConfig {
    fn default() -> Self {
        Self {
            template: Template::Contextual,
            disambiguate: true,
            short_label_threshold: 8,
            max_siblings: 5,
            use_inferred_context: true,
            kinds: BTreeSet::from([EntityKind::Class, EntityKind::ObjectProperty, EntityKind::DataProperty]),
            external: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Slots {
    pub label: String,
    pub parent_label: Option<String>,
    pub property_labels: Vec<String>,
    pub domain_labels: Vec<String>,
    pub range_labels: Vec<String>,
    pub class_labels: Vec<String>,
    pub comment: Option<String>,
    pub sibling_labels: Vec<String>,
    pub external: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verbalization {
    pub entity: Iri,
    /// Language of the chosen label.
    pub language: String,
    pub text: String,
    pub slots_used: Slots,
}

struct Context<'a> {
    inferred: &'a InferredOntology,
    preference: &'a [String],
}

impl Context<'_> {
    fn label(&self, iri: &Iri) -> String {
        match self.inferred.base().entity(iri) {
            Some(e) => first_label(e.get_labels(self.preference), iri),
            None => crate::ontology::split_local_name(iri.local_name()),
        }
    }

    fn labels<'b>(&self, iris: impl IntoIterator<Item = &'b Iri>) -> Vec<String> {
        iris.into_iter().filter(|i| !i.is_skolem()).map(|i| self.label(i)).collect()
    }
}

fn first_label(labels: Vec<String>, iri: &Iri) -> String {
    labels
        .into_iter()
        .next()
        .unwrap_or_else(|| crate::ontology::split_local_name(iri.local_name()))
}

pub fn verbalize(
    entity: &Iri,
    inferred: &InferredOntology,
    preference: &[String],
    config: &VerbalizerConfig,
) -> Result<Verbalization, VerbalizeError> {
    let base = inferred.base();
    let e = base
        .entity(entity)
        .ok_or_else(|| VerbalizeError::UnknownEntity(entity.clone()))?;
    let choice = e.choose_labels(preference);
    let label = first_label(choice.labels, entity);
    let mut slots = Slots {
        label: label.clone(),
        ..Slots::default()
    };
    if config.template == Template::LabelOnly {
        return Ok(Verbalization {
            entity: entity.clone(),
            language: choice.language,
            text: label,
            slots_used: slots,
        });
    }

    let ctx = Context { inferred, preference };
    let mut text = match e.kind {
        EntityKind::ObjectProperty | EntityKind::DataProperty => {
            slots.domain_labels = base
                .property_domains()
                .get(entity)
                .map(|d| ctx.labels(d))
                .unwrap_or_default();
            slots.range_labels = base
                .property_ranges()
                .get(entity)
                .map(|r| ctx.labels(r))
                .unwrap_or_default();
            let mut s = format!("{label} is a relation");
            if !slots.domain_labels.is_empty() {
                s.push_str(&format!(" from {}", slots.domain_labels.join(" and ")));
            }
            if !slots.range_labels.is_empty() {
                s.push_str(&format!(" to {}", slots.range_labels.join(" and ")));
            }
            s.push('.');
            s
        }
        EntityKind::Individual => {
            let classes = base
                .instance_of()
                .iter()
                .filter(|(i, _)| i == entity)
                .map(|(_, c)| c);
            slots.class_labels = ctx.labels(classes);
            if slots.class_labels.is_empty() {
                format!("{label}.")
            } else {
                format!("{label} is an instance of {}.", slots.class_labels.join(" and "))
            }
        }
        EntityKind::Class | EntityKind::Unknown => {
            let parent = if config.use_inferred_context {
                inferred.ancestors(entity).iter().find(|a| !a.is_skolem()).cloned()
            } else {
                base.subclass_edges()
                    .iter()
                    .filter(|(c, p)| c == entity && !p.is_skolem())
                    .map(|(_, p)| p.clone())
                    .next()
            };
            slots.parent_label = parent.as_ref().map(|p| ctx.label(p));
            let props: Vec<&Iri> = if config.use_inferred_context {
                inferred.attached_properties(entity).into_iter().flatten().collect()
            } else {
                base.property_domains()
                    .iter()
                    .filter(|(_, d)| d.contains(entity))
                    .map(|(p, _)| p)
                    .collect()
            };
            slots.property_labels = ctx.labels(props);

            let mut s = format!("A {label}");
            if let Some(parent) = &slots.parent_label {
                s.push_str(&format!(" is a {parent}"));
            }
            if !slots.property_labels.is_empty() {
                s.push_str(&format!(" which has {}", slots.property_labels.join(" and ")));
            }
            s.push('.');

            let short = label.chars().count() < config.short_label_threshold;
            if config.disambiguate && config.use_inferred_context && short {
                if let (Some(parent), Some(sibs)) = (&slots.parent_label, inferred.siblings(entity)) {
                    slots.sibling_labels = ctx.labels(sibs.iter().take(config.max_siblings));
                    if !slots.sibling_labels.is_empty() {
                        s.push_str(&format!(" Other kinds of {parent}: {}.", slots.sibling_labels.join(", ")));
                    }
                }
            }
            s
        }
    };

    if let Some(comment) = e.preferred_comment(preference) {
        slots.comment = Some(comment.to_string());
        text.push(' ');
        text.push_str(comment);
    }
    if let Some(ext) = config.external.as_ref().and_then(|x| x.lookup(entity, preference)) {
        slots.external = Some(ext.to_string());
        text.push(' ');
        text.push_str(ext);
    }

    Ok(Verbalization {
        entity: entity.clone(),
        language: choice.language,
        text,
        slots_used: slots,
    })
}

/// One verbalization per entity whose kind is in `config.kinds`, in IRI order.
pub fn verbalize_all(
    inferred: &InferredOntology,
    preference: &[String],
    config: &VerbalizerConfig,
) -> Vec<Verbalization> {
    let selected: Vec<&Iri> = inferred
        .base()
        .entities()
        .values()
        .filter(|e| config.kinds.contains(&e.kind))
        .map(|e| &e.iri)
        .collect();
    selected
        .par_iter()
        .map(|iri| verbalize(iri, inferred, preference, config).expect("entity taken from the ontology"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{parse_ontology_str, RdfFormat};
    use crate::reasoner::compute_closure;

    const PREFIXES: &str = "@prefix : <http://e/> .\n\
        @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n\
        @prefix owl: <http://www.w3.org/2002/07/owl#> .\n";

    fn inferred(body: &str) -> InferredOntology {
        let o = parse_ontology_str(&format!("{PREFIXES}{body}"), RdfFormat::Turtle)
            .unwrap()
            .ontology;
        compute_closure(&o)
    }

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://e/{s}")).unwrap()
    }

    fn en() -> Vec<String> {
        vec!["en".to_string()]
    }

    #[test]
    fn class_template() {
        let inf = inferred(
            r#":University a owl:Class ; rdfs:label "University"@en ; rdfs:subClassOf :EducationalInstitution .
            :EducationalInstitution a owl:Class ; rdfs:label "Educational Institution"@en .
            :awardsDegree a owl:ObjectProperty ; rdfs:label "awards degree"@en ; rdfs:domain :University ."#,
        );
        let v = verbalize(&iri("University"), &inf, &en(), &VerbalizerConfig::default()).unwrap();
        assert_eq!(v.text, "A University is a Educational Institution which has awards degree.");
        assert_eq!(v.slots_used.parent_label.as_deref(), Some("Educational Institution"));
        assert_eq!(v.language, "en");
    }

    #[test]
    fn all_optional_clauses_dropped() {
        let inf = inferred(r#":Product a owl:Class ; rdfs:label "Product"@en ."#);
        let v = verbalize(&iri("Product"), &inf, &en(), &VerbalizerConfig::default()).unwrap();
        assert_eq!(v.text, "A Product.");
    }

    #[test]
    fn property_template() {
        let inf = inferred(
            r#":teaches a owl:ObjectProperty ; rdfs:label "teaches"@en ; rdfs:domain :Professor ; rdfs:range :Course .
            :Professor rdfs:label "Professor"@en . :Course rdfs:label "Course"@en ."#,
        );
        let v = verbalize(&iri("teaches"), &inf, &en(), &VerbalizerConfig::default()).unwrap();
        assert_eq!(v.text, "teaches is a relation from Professor to Course.");
        assert_eq!(v.slots_used.domain_labels, ["Professor"]);
        assert_eq!(v.slots_used.range_labels, ["Course"]);
    }

    #[test]
    fn individual_template() {
        let inf = inferred(r#":alice a :Professor ; rdfs:label "Alice" . :Professor rdfs:label "Professor"@en ."#);
        let v = verbalize(&iri("alice"), &inf, &en(), &VerbalizerConfig::default()).unwrap();
        assert_eq!(v.text, "Alice is an instance of Professor.");
    }

    #[test]
    fn comment_trails_and_label_only_is_bare() {
        let inf = inferred(
            r#":Museum a owl:Class ; rdfs:label "Museum"@en, "Museum"@de ;
               rdfs:comment "A place that exhibits art."@en, "Ein Ort."@de ."#,
        );
        let v = verbalize(&iri("Museum"), &inf, &en(), &VerbalizerConfig::default()).unwrap();
        assert_eq!(v.text, "A Museum. A place that exhibits art.");
        let cfg = VerbalizerConfig {
            template: Template::LabelOnly,
            ..Default::default()
        };
        let v = verbalize(&iri("Museum"), &inf, &en(), &cfg).unwrap();
        assert_eq!(v.text, "Museum");
        // French is not preferred and has no comment; the "und" fallback has none either.
        let v = verbalize(&iri("Museum"), &inf, &["fr".into()], &VerbalizerConfig::default()).unwrap();
        assert!(v.slots_used.comment.is_none());
    }

    #[test]
    fn short_labels_get_sibling_context() {
        let body = r#":Produkt a owl:Class ; rdfs:label "Produkt"@de ; rdfs:subClassOf :Ware .
            :Ware rdfs:label "Ware"@de .
            :Dienstleistung rdfs:label "Dienstleistung"@de ; rdfs:subClassOf :Ware .
            :Rohstoff rdfs:label "Rohstoff"@de ; rdfs:subClassOf :Ware ."#;
        let inf = inferred(body);
        let de = vec!["de".to_string()];
        let v = verbalize(&iri("Produkt"), &inf, &de, &VerbalizerConfig::default()).unwrap();
        assert_eq!(v.text, "A Produkt is a Ware. Other kinds of Ware: Dienstleistung, Rohstoff.");
        let long = verbalize(&iri("Dienstleistung"), &inf, &de, &VerbalizerConfig::default()).unwrap();
        assert!(long.slots_used.sibling_labels.is_empty());
        let off = VerbalizerConfig {
            disambiguate: false,
            ..Default::default()
        };
        let v = verbalize(&iri("Produkt"), &inf, &de, &off).unwrap();
        assert_eq!(v.text, "A Produkt is a Ware.");
    }

    #[test]
    fn reasoner_context_toggle() {
        let inf = inferred(
            r#":Uni rdfs:label "Uni"@en ; rdfs:subClassOf :Inst . :Inst rdfs:label "Institution"@en .
            :awards rdfs:label "awards"@en ; rdfs:domain :Inst ."#,
        );
        let full = verbalize(&iri("Uni"), &inf, &en(), &VerbalizerConfig::default()).unwrap();
        assert_eq!(full.text, "A Uni is a Institution which has awards.");
        let cfg = VerbalizerConfig {
            use_inferred_context: false,
            ..Default::default()
        };
        let plain = verbalize(&iri("Uni"), &inf, &en(), &cfg).unwrap();
        assert_eq!(plain.text, "A Uni is a Institution.");
    }

    #[test]
    fn unknown_entity() {
        let inf = inferred("");
        assert_eq!(
            verbalize(&iri("Nope"), &inf, &en(), &VerbalizerConfig::default()),
            Err(VerbalizeError::UnknownEntity(iri("Nope")))
        );
    }

    #[test]
    fn verbalize_all_filters_kinds() {
        assert!(verbalize_all(&inferred(""), &en(), &VerbalizerConfig::default()).is_empty());
        let inf = inferred(":C a owl:Class . :B a owl:Class . :A a owl:Class . :i a owl:NamedIndividual .");
        let all = verbalize_all(&inf, &en(), &VerbalizerConfig::default());
        let keys: Vec<_> = all.iter().map(|v| v.entity.local_name().to_string()).collect();
        assert_eq!(keys, ["A", "B", "C"]);
    }

    #[test]
    fn external_descriptions() {
        let file = "# comment\nhttp://e/A\ten\tAn external abstract.\n\nhttp://e/A\tde\tEin Abstract.\n";
        let ext = ExternalDescriptions::load(file.as_bytes()).unwrap();
        assert_eq!(ext.len(), 2);
        let inf = inferred(r#":A a owl:Class ; rdfs:label "Alpha"@en ."#);
        let cfg = VerbalizerConfig {
            external: Some(Arc::new(ext)),
            ..Default::default()
        };
        let v = verbalize(&iri("A"), &inf, &en(), &cfg).unwrap();
        assert_eq!(v.text, "A Alpha. An external abstract.");
        assert!(matches!(
            ExternalDescriptions::load("http://e/A only-two".as_bytes()),
            Err(VerbalizeError::MalformedDescriptions { line: 1, .. })
        ));
    }
}
