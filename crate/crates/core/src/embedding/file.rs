//! Precomputed vectors read from a text file.
//!
//! Format: a header line `dim=<d>`, then one record per line: the IRI, a
//! space, and `d` space-separated decimal floats. Blank lines are skipped.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::Array2;

use super::{EmbeddingError, EmbeddingProvider};
use crate::ontology::Iri;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorTable {
    dim: usize,
    vectors: HashMap<Iri, Vec<f64>>,
}

impl VectorTable {
    pub fn parse(reader: impl BufRead) -> Result<Self, EmbeddingError> {
        let malformed = |line: usize, detail: String| EmbeddingError::MalformedVectorFile { line, detail };
        let mut lines = reader.lines().enumerate();
        let dim = loop {
            let Some((n, line)) = lines.next() else {
                return Err(malformed(1, "missing 'dim=<d>' header".into()));
            };
            let line = line.map_err(|e| EmbeddingError::Io(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let dim = line
                .strip_prefix("dim=")
                .and_then(|d| d.trim().parse::<usize>().ok())
                .filter(|d| *d > 0)
                .ok_or_else(|| malformed(n + 1, format!("expected 'dim=<d>' header, found {line:?}")))?;
            break dim;
        };
        let mut vectors = HashMap::new();
        for (n, line) in lines {
            let line = line.map_err(|e| EmbeddingError::Io(e.to_string()))?;
            let mut fields = line.split_whitespace();
            let Some(key) = fields.next() else {
                continue;
            };
            let iri = Iri::new(key).map_err(|e| malformed(n + 1, e.to_string()))?;
            let values = fields
                .map(|f| f.parse::<f64>().map_err(|e| malformed(n + 1, format!("{f:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: dim,
                    found: values.len(),
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(malformed(n + 1, "non-finite component".into()));
            }
            vectors.insert(iri, values);
        }
        Ok(Self { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, iri: &Iri) -> Option<&[f64]> {
        self.vectors.get(iri).map(Vec::as_slice)
    }
}

/// Looks rows up by IRI; the text itself is ignored.
#[derive(Debug, Clone)]
pub struct FileVectors {
    source: String,
    table: VectorTable,
}

impl FileVectors {
    pub fn open(path: &Path) -> Result<Self, EmbeddingError> {
        let file = File::open(path).map_err(|e| EmbeddingError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self {
            source: path.display().to_string(),
            table: VectorTable::parse(BufReader::new(file))?,
        })
    }

    pub fn from_table(table: VectorTable, source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            table,
        }
    }

    pub fn table(&self) -> &VectorTable {
        &self.table
    }
}

impl EmbeddingProvider for FileVectors {
    fn id(&self) -> String {
        format!("file:{}", self.source)
    }

    fn embed_raw(&self, texts: &[(Iri, String)]) -> Result<Array2<f64>, EmbeddingError> {
        let mut out = Array2::zeros((texts.len(), self.table.dim));
        for (i, (iri, _)) in texts.iter().enumerate() {
            let v = self
                .table
                .get(iri)
                .ok_or_else(|| EmbeddingError::MissingVector(iri.clone()))?;
            out.row_mut(i).iter_mut().zip(v).for_each(|(o, x)| *o = *x);
        }
        Ok(out)
    }
}
