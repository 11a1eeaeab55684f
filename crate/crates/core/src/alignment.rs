//! Alignment Format XML: the cell-list exchange format used by OAEI tools.

use std::io::{BufRead, Write};

use quick_xml::escape::{escape, resolve_predefined_entity};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use crate::matcher::AlignmentSet;

const ALIGN_NS: &str = "http://knowledgeweb.semanticweb.org/heterogeneity/alignment";
const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
const XSD_FLOAT: &str = "http://www.w3.org/2001/XMLSchema#float";

#[derive(Debug, Error, PartialEq)]
pub enum AlignmentFormatError {
    #[error("malformed alignment: {0}")]
    Malformed(String),
    #[error("I/O error: {0}")]
    Io(String),
}

/// One `<Cell>` as written in the document, before any relation filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCell {
    pub entity1: String,
    pub entity2: String,
    /// `"="` when the cell has no `<relation>` element.
    pub relation: String,
    pub measure: Option<f64>,
}

/// Writes cells sorted by (source, target) with 4-decimal measures.
pub fn write_alignment(alignment: &AlignmentSet, mut w: impl Write) -> std::io::Result<()> {
    let mut cells: Vec<_> = alignment.cells.iter().collect();
    cells.sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
    writeln!(w, "<?xml version=\"1.0\" encoding=\"utf-8\"?>")?;
    writeln!(w, "<rdf:RDF xmlns=\"{ALIGN_NS}\"")?;
    writeln!(w, "         xmlns:rdf=\"{RDF_NS}\">")?;
    writeln!(w, "<Alignment>")?;
    writeln!(w, "  <xml>yes</xml>")?;
    writeln!(w, "  <level>0</level>")?;
    writeln!(w, "  <type>11</type>")?;
    for cell in cells {
        writeln!(w, "  <map>")?;
        writeln!(w, "    <Cell>")?;
        writeln!(w, "      <entity1 rdf:resource=\"{}\"/>", escape(cell.source.as_str()))?;
        writeln!(w, "      <entity2 rdf:resource=\"{}\"/>", escape(cell.target.as_str()))?;
        writeln!(w, "      <relation>{}</relation>", escape(cell.relation.as_str()))?;
        writeln!(w, "      <measure rdf:datatype=\"{XSD_FLOAT}\">{:.4}</measure>", cell.confidence)?;
        writeln!(w, "    </Cell>")?;
        writeln!(w, "  </map>")?;
    }
    writeln!(w, "</Alignment>")?;
    writeln!(w, "</rdf:RDF>")?;
    w.flush()
}

pub fn alignment_to_string(alignment: &AlignmentSet) -> String {
    let mut buf = Vec::new();
    write_alignment(alignment, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("writer emits UTF-8")
}

fn resource(e: &BytesStart<'_>) -> Result<Option<String>, AlignmentFormatError> {
    for attr in e.attributes() {
        let attr = attr.map_err(|err| AlignmentFormatError::Malformed(err.to_string()))?;
        if attr.key.local_name().as_ref() == b"resource" {
            let value = attr
                .unescape_value()
                .map_err(|err| AlignmentFormatError::Malformed(err.to_string()))?;
            return Ok(Some(value.into_owned()));
        }
    }
    Ok(None)
}

#[derive(Default)]
struct CellBuilder {
    entity1: Option<String>,
    entity2: Option<String>,
    relation: Option<String>,
    measure: Option<String>,
}

impl CellBuilder {
    fn finish(self, position: u64) -> Result<RawCell, AlignmentFormatError> {
        let missing = |what| AlignmentFormatError::Malformed(format!("Cell ending at byte {position} has no {what}"));
        let measure = match self.measure {
            Some(m) => {
                let v: f64 = m
                    .trim()
                    .parse()
                    .map_err(|_| AlignmentFormatError::Malformed(format!("measure {:?} is not a number", m.trim())))?;
                Some(v)
            }
            None => None,
        };
        Ok(RawCell {
            entity1: self.entity1.ok_or_else(|| missing("entity1"))?,
            entity2: self.entity2.ok_or_else(|| missing("entity2"))?,
            relation: self.relation.map(|r| r.trim().to_string()).unwrap_or_else(|| "=".into()),
            measure,
        })
    }
}

#[derive(Clone, Copy, PartialEq)]
enum TextField {
    Relation,
    Measure,
}

/// Reads every `<Cell>` in document order. Element names match by local name,
/// so prefixed and default-namespace documents both work.
pub fn read_cells(source: impl BufRead) -> Result<Vec<RawCell>, AlignmentFormatError> {
    let mut reader = Reader::from_reader(source);
    let mut buf = Vec::new();
    let mut cells = Vec::new();
    let mut current: Option<CellBuilder> = None;
    let mut field: Option<TextField> = None;
    let malformed = |reader: &Reader<_>, err: &dyn std::fmt::Display| {
        AlignmentFormatError::Malformed(format!("at byte {}: {err}", reader.buffer_position()))
    };
    let mut saw_root = false;
    loop {
        let event = reader.read_event_into(&mut buf).map_err(|e| match e {
            quick_xml::Error::Io(io) => AlignmentFormatError::Io(io.to_string()),
            other => AlignmentFormatError::Malformed(other.to_string()),
        })?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                saw_root = true;
                let is_empty = matches!(event, Event::Empty(_));
                match e.local_name().as_ref() {
                    b"Cell" if !is_empty => {
                        if current.is_some() {
                            return Err(malformed(&reader, &"nested Cell"));
                        }
                        current = Some(CellBuilder::default());
                    }
                    b"entity1" | b"entity2" => {
                        if let Some(cell) = current.as_mut() {
                            let iri = resource(e)?.ok_or_else(|| malformed(&reader, &"entity without rdf:resource"))?;
                            if e.local_name().as_ref() == b"entity1" {
                                cell.entity1 = Some(iri);
                            } else {
                                cell.entity2 = Some(iri);
                            }
                        }
                    }
                    b"relation" if current.is_some() && !is_empty => {
                        field = Some(TextField::Relation);
                    }
                    b"measure" if current.is_some() && !is_empty => {
                        field = Some(TextField::Measure);
                    }
                    _ => {}
                }
            }
            Event::Text(ref t) => {
                if let (Some(f), Some(cell)) = (field, current.as_mut()) {
                    let text = t.decode().map_err(|err| malformed(&reader, &err))?;
                    push_text(cell, f, &text);
                }
            }
            Event::GeneralRef(ref r) => {
                if let (Some(f), Some(cell)) = (field, current.as_mut()) {
                    let resolved = match r.resolve_char_ref().map_err(|err| malformed(&reader, &err))? {
                        Some(ch) => ch.to_string(),
                        None => {
                            let name = r.decode().map_err(|err| malformed(&reader, &err))?;
                            resolve_predefined_entity(&name)
                                .ok_or_else(|| malformed(&reader, &format!("unknown entity &{name};")))?
                                .to_string()
                        }
                    };
                    push_text(cell, f, &resolved);
                }
            }
            Event::CData(ref c) => {
                if let (Some(f), Some(cell)) = (field, current.as_mut()) {
                    let text = c.decode().map_err(|err| malformed(&reader, &err))?;
                    push_text(cell, f, &text);
                }
            }
            Event::End(ref e) => match e.local_name().as_ref() {
                b"Cell" => {
                    let cell = current.take().ok_or_else(|| malformed(&reader, &"unbalanced </Cell>"))?;
                    cells.push(cell.finish(reader.buffer_position())?);
                }
                b"relation" | b"measure" => field = None,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if current.is_some() {
        return Err(AlignmentFormatError::Malformed("document ends inside a Cell".into()));
    }
    if !saw_root {
        return Err(AlignmentFormatError::Malformed("no XML elements found".into()));
    }
    Ok(cells)
}

fn push_text(cell: &mut CellBuilder, field: TextField, text: &str) {
    let slot = match field {
        TextField::Relation => &mut cell.relation,
        TextField::Measure => &mut cell.measure,
    };
    slot.get_or_insert_with(String::new).push_str(text);
}
