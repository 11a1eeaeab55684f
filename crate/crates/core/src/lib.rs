pub mod alignment;
pub mod ann;
pub mod embedding;
pub mod evaluation;
pub mod matcher;
pub mod ontology;
pub mod pipeline;
pub mod reasoner;
pub mod verbalizer;
