//! Tokenizer and statement parser for N-Triples and the supported Turtle subset.
//!
//! Turtle support covers `@prefix`/`PREFIX`, `@base`/`BASE`, prefixed names,
//! the `a` keyword, predicate-object lists (`;`), object lists (`,`), labeled
//! blank nodes, the empty anonymous node `[]`, and literals with language tags,
//! datatypes, numeric and boolean shorthands. Collections, blank-node property
//! lists and quoted triples are rejected with [`ParseError::UnsupportedFeature`].

use std::collections::HashMap;

use url::Url;

use super::vocab;
use super::ParseError;

/// An RDF term as produced by the parser. Blank nodes are already skolemized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Iri(String),
    Literal {
        lexical: String,
        language: Option<String>,
        datatype: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Dialect {
    NTriples,
    Turtle,
}

pub(crate) fn skolem_label(label: &str) -> String {
    format!("{}label/{}", vocab::SKOLEM_NS, label)
}

fn skolem_anon(n: usize) -> String {
    format!("{}anon/{}", vocab::SKOLEM_NS, n)
}

/// True when `s` starts with an IRI scheme followed by `:`.
pub(crate) fn has_scheme(s: &str) -> bool {
    let Some((scheme, _)) = s.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

pub(crate) struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    dialect: Dialect,
    prefixes: HashMap<String, String>,
    base: Option<Url>,
    anon_counter: usize,
}

impl Parser {
    pub(crate) fn new(input: &str, dialect: Dialect) -> Self {
        Self {
            chars: input.chars().collect(),
            pos: 0,
            line: 1,
            column: 1,
            dialect,
            prefixes: HashMap::new(),
            base: None,
            anon_counter: 0,
        }
    }

    /// Parses the whole document, calling `sink` for every triple in document order.
    pub(crate) fn parse_all(mut self, mut sink: impl FnMut(Triple)) -> Result<(), ParseError> {
        loop {
            self.skip_ws();
            if self.at_end() {
                return Ok(());
            }
            self.statement(&mut sink)?;
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn malformed(&self, detail: impl Into<String>) -> ParseError {
        ParseError::MalformedSyntax {
            line: self.line,
            column: self.column,
            detail: detail.into(),
        }
    }

    fn unsupported(&self, what: &str) -> ParseError {
        ParseError::UnsupportedFeature {
            line: self.line,
            column: self.column,
            detail: what.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, want: char) -> Result<(), ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.malformed(format!("expected '{want}', found '{c}'"))),
            None => Err(self.malformed(format!("expected '{want}', found end of input"))),
        }
    }

    fn starts_with_keyword(&self, kw: &str, case_insensitive: bool) -> bool {
        let n = kw.chars().count();
        if self.pos + n > self.chars.len() {
            return false;
        }
        let matches = self.chars[self.pos..self.pos + n]
            .iter()
            .zip(kw.chars())
            .all(|(a, b)| {
                if case_insensitive {
                    a.eq_ignore_ascii_case(&b)
                } else {
                    *a == b
                }
            });
        let boundary = self
            .chars
            .get(self.pos + n)
            .is_none_or(|c| c.is_whitespace() || *c == '<' || *c == '#');
        matches && boundary
    }

    fn advance_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn statement(&mut self, sink: &mut impl FnMut(Triple)) -> Result<(), ParseError> {
        if self.dialect == Dialect::Turtle {
            if self.starts_with_keyword("@prefix", false) {
                self.advance_n(7);
                self.prefix_decl()?;
                return self.expect('.');
            }
            if self.starts_with_keyword("@base", false) {
                self.advance_n(5);
                self.base_decl()?;
                return self.expect('.');
            }
            if self.starts_with_keyword("PREFIX", true) {
                self.advance_n(6);
                return self.prefix_decl();
            }
            if self.starts_with_keyword("BASE", true) {
                self.advance_n(4);
                return self.base_decl();
            }
        }
        let subject = self.subject()?;
        self.predicate_object_list(&subject, sink)?;
        self.expect('.')
    }

    fn prefix_decl(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        let mut prefix = String::new();
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if !is_pn_char(c) && c != '.' {
                return Err(self.malformed(format!("invalid character '{c}' in prefix name")));
            }
            prefix.push(c);
            self.bump();
        }
        if self.peek() != Some(':') {
            return Err(self.malformed("expected ':' after prefix name"));
        }
        self.bump();
        self.skip_ws();
        let iri = self.iriref()?;
        self.prefixes.insert(prefix, iri);
        Ok(())
    }

    fn base_decl(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        let iri = self.iriref()?;
        let url = Url::parse(&iri).map_err(|e| self.malformed(format!("invalid base IRI: {e}")))?;
        self.base = Some(url);
        Ok(())
    }

    fn subject(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('<') if self.peek_at(1) == Some('<') => Err(self.unsupported("quoted triple")),
            Some('<') => self.iriref(),
            Some('_') if self.peek_at(1) == Some(':') => self.blank_label(),
            Some('[') => self.anon(),
            Some('(') => Err(self.unsupported("collection")),
            Some(_) if self.dialect == Dialect::Turtle => self.prefixed_name(),
            Some(c) => Err(self.malformed(format!("unexpected '{c}' at start of subject"))),
            None => Err(self.malformed("unexpected end of input")),
        }
    }

    fn predicate(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('<') => self.iriref(),
            Some('a') if self.dialect == Dialect::Turtle => {
                let next = self.peek_at(1);
                if next.is_none_or(|c| c.is_whitespace() || matches!(c, '<' | '[' | '"' | '_')) {
                    self.bump();
                    Ok(vocab::RDF_TYPE.to_string())
                } else {
                    self.prefixed_name()
                }
            }
            Some(_) if self.dialect == Dialect::Turtle => self.prefixed_name(),
            Some(c) => Err(self.malformed(format!("unexpected '{c}' at start of predicate"))),
            None => Err(self.malformed("unexpected end of input")),
        }
    }

    fn predicate_object_list(
        &mut self,
        subject: &str,
        sink: &mut impl FnMut(Triple),
    ) -> Result<(), ParseError> {
        loop {
            let predicate = self.predicate()?;
            loop {
                let object = self.object()?;
                sink(Triple {
                    subject: subject.to_string(),
                    predicate: predicate.clone(),
                    object,
                });
                self.skip_ws();
                if self.dialect == Dialect::Turtle && self.peek() == Some(',') {
                    self.bump();
                    continue;
                }
                break;
            }
            self.skip_ws();
            if self.dialect == Dialect::Turtle && self.peek() == Some(';') {
                while self.peek() == Some(';') {
                    self.bump();
                    self.skip_ws();
                }
                if matches!(self.peek(), Some('.') | Some(']') | None) {
                    return Ok(());
                }
                continue;
            }
            return Ok(());
        }
    }

    fn object(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('<') if self.peek_at(1) == Some('<') => Err(self.unsupported("quoted triple")),
            Some('<') => Ok(Term::Iri(self.iriref()?)),
            Some('_') if self.peek_at(1) == Some(':') => Ok(Term::Iri(self.blank_label()?)),
            Some('[') => Ok(Term::Iri(self.anon()?)),
            Some('(') => Err(self.unsupported("collection")),
            Some('"') => self.literal('"'),
            Some('\'') if self.dialect == Dialect::Turtle => self.literal('\''),
            Some(c) if self.dialect == Dialect::Turtle && (c.is_ascii_digit() || matches!(c, '+' | '-' | '.')) => {
                self.numeric()
            }
            Some(_) if self.dialect == Dialect::Turtle => {
                if self.starts_with_bool("true") || self.starts_with_bool("false") {
                    let word = if self.peek() == Some('t') { "true" } else { "false" };
                    self.advance_n(word.len());
                    return Ok(Term::Literal {
                        lexical: word.to_string(),
                        language: None,
                        datatype: Some(vocab::XSD_BOOLEAN.to_string()),
                    });
                }
                Ok(Term::Iri(self.prefixed_name()?))
            }
            Some(c) => Err(self.malformed(format!("unexpected '{c}' at start of object"))),
            None => Err(self.malformed("unexpected end of input")),
        }
    }

    fn starts_with_bool(&self, word: &str) -> bool {
        let n = word.len();
        self.chars.len() >= self.pos + n
            && self.chars[self.pos..self.pos + n].iter().copied().eq(word.chars())
            && self
                .chars
                .get(self.pos + n)
                .is_none_or(|c| !is_pn_char(*c) && *c != ':')
    }

    fn anon(&mut self) -> Result<String, ParseError> {
        if self.dialect == Dialect::NTriples {
            return Err(self.malformed("anonymous blank nodes are not allowed in N-Triples"));
        }
        self.bump();
        self.skip_ws();
        if self.peek() == Some(']') {
            self.bump();
            self.anon_counter += 1;
            Ok(skolem_anon(self.anon_counter))
        } else {
            Err(self.unsupported("blank node property list"))
        }
    }

    fn blank_label(&mut self) -> Result<String, ParseError> {
        self.bump();
        self.bump();
        let mut label = String::new();
        while let Some(c) = self.peek() {
            if is_pn_char(c) || (c == '.' && self.peek_at(1).is_some_and(is_pn_char)) {
                label.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if label.is_empty() {
            return Err(self.malformed("empty blank node label"));
        }
        Ok(skolem_label(&label))
    }

    fn iriref(&mut self) -> Result<String, ParseError> {
        if self.peek() != Some('<') {
            return Err(self.malformed("expected '<'"));
        }
        self.bump();
        let mut iri = String::new();
        loop {
            match self.bump() {
                None => return Err(self.malformed("unterminated IRI")),
                Some('>') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('u') => self.hex_escape(4)?,
                        Some('U') => self.hex_escape(8)?,
                        _ => return Err(self.malformed("invalid escape in IRI")),
                    };
                    iri.push(c);
                }
                Some(c) if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') => {
                    return Err(self.malformed(format!("invalid character {c:?} in IRI")));
                }
                Some(c) => iri.push(c),
            }
        }
        self.resolve(iri)
    }

    fn resolve(&self, iri: String) -> Result<String, ParseError> {
        if has_scheme(&iri) {
            return Ok(iri);
        }
        match (&self.base, self.dialect) {
            (Some(base), Dialect::Turtle) => base
                .join(&iri)
                .map(|u| u.to_string())
                .map_err(|e| self.malformed(format!("cannot resolve IRI <{iri}>: {e}"))),
            _ => Err(self.malformed(format!("relative IRI <{iri}> without a base"))),
        }
    }

    fn hex_escape(&mut self, digits: usize) -> Result<char, ParseError> {
        let mut value = 0u32;
        for _ in 0..digits {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| self.malformed("invalid hex digit in escape"))?;
            value = value * 16 + d;
        }
        char::from_u32(value).ok_or_else(|| self.malformed("escape is not a valid code point"))
    }

    fn prefixed_name(&mut self) -> Result<String, ParseError> {
        let mut prefix = String::new();
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if is_pn_char(c) || c == '.' {
                prefix.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if self.peek() != Some(':') {
            return match self.peek() {
                Some(c) if prefix.is_empty() => Err(self.malformed(format!("unexpected '{c}'"))),
                _ => Err(self.malformed(format!("expected ':' in prefixed name '{prefix}'"))),
            };
        }
        self.bump();
        let mut local = String::new();
        while let Some(c) = self.peek() {
            if c == '\\' {
                self.bump();
                match self.bump() {
                    Some(e) if "_~.-!$&'()*+,;=/?#@%".contains(e) => local.push(e),
                    _ => return Err(self.malformed("invalid escape in local name")),
                }
            } else if is_pn_char(c)
                || c == ':'
                || c == '%'
                // A dot continues the name only when more name follows.
                || (c == '.' && self.peek_at(1).is_some_and(|n| is_pn_char(n) || n == ':' || n == '%'))
            {
                local.push(c);
                self.bump();
            } else {
                break;
            }
        }
        let ns = self
            .prefixes
            .get(&prefix)
            .ok_or_else(|| self.malformed(format!("undeclared prefix '{prefix}:'")))?;
        self.resolve(format!("{ns}{local}"))
    }

    fn literal(&mut self, quote: char) -> Result<Term, ParseError> {
        let long = self.dialect == Dialect::Turtle
            && self.peek_at(1) == Some(quote)
            && self.peek_at(2) == Some(quote);
        let lexical = if long {
            self.advance_n(3);
            self.long_string_body(quote)?
        } else {
            self.bump();
            self.short_string_body(quote)?
        };
        match self.peek() {
            Some('@') => {
                self.bump();
                let mut tag = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || (c == '-' && !tag.is_empty()) {
                        tag.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if tag.is_empty() {
                    return Err(self.malformed("empty language tag"));
                }
                Ok(Term::Literal {
                    lexical,
                    language: Some(tag),
                    datatype: None,
                })
            }
            Some('^') if self.peek_at(1) == Some('^') => {
                self.advance_n(2);
                let datatype = match self.peek() {
                    Some('<') => self.iriref()?,
                    Some(_) if self.dialect == Dialect::Turtle => self.prefixed_name()?,
                    _ => return Err(self.malformed("expected datatype IRI after '^^'")),
                };
                Ok(Term::Literal {
                    lexical,
                    language: None,
                    datatype: Some(datatype),
                })
            }
            _ => Ok(Term::Literal {
                lexical,
                language: None,
                datatype: None,
            }),
        }
    }

    fn string_escape(&mut self) -> Result<char, ParseError> {
        match self.bump() {
            Some('t') => Ok('\t'),
            Some('b') => Ok('\u{8}'),
            Some('n') => Ok('\n'),
            Some('r') => Ok('\r'),
            Some('f') => Ok('\u{c}'),
            Some('"') => Ok('"'),
            Some('\'') => Ok('\''),
            Some('\\') => Ok('\\'),
            Some('u') => self.hex_escape(4),
            Some('U') => self.hex_escape(8),
            _ => Err(self.malformed("invalid escape sequence in string")),
        }
    }

    fn short_string_body(&mut self, quote: char) -> Result<String, ParseError> {
        let mut out = String::new();
        loop {
            if matches!(self.peek(), None | Some('\n') | Some('\r')) {
                return Err(self.malformed("unterminated string literal"));
            }
            match self.bump() {
                Some('\\') => out.push(self.string_escape()?),
                Some(c) if c == quote => return Ok(out),
                Some(c) => out.push(c),
                None => unreachable!("checked above"),
            }
        }
    }

    fn long_string_body(&mut self, quote: char) -> Result<String, ParseError> {
        let mut out = String::new();
        loop {
            if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote) {
                self.advance_n(3);
                return Ok(out);
            }
            match self.bump() {
                None => return Err(self.malformed("unterminated long string literal")),
                Some('\\') => out.push(self.string_escape()?),
                Some(c) => out.push(c),
            }
        }
    }

    fn numeric(&mut self) -> Result<Term, ParseError> {
        let mut text = String::new();
        if let Some(c @ ('+' | '-')) = self.peek() {
            text.push(c);
            self.bump();
        }
        let mut saw_digit = false;
        let mut saw_dot = false;
        let mut saw_exp = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                saw_digit = true;
                text.push(c);
                self.bump();
            } else if c == '.' && !saw_dot && !saw_exp && self.peek_at(1).is_some_and(|n| n.is_ascii_digit()) {
                saw_dot = true;
                text.push(c);
                self.bump();
            } else if matches!(c, 'e' | 'E') && !saw_exp && saw_digit {
                saw_exp = true;
                text.push(c);
                self.bump();
                if let Some(s @ ('+' | '-')) = self.peek() {
                    text.push(s);
                    self.bump();
                }
            } else {
                break;
            }
        }
        if !saw_digit {
            return Err(self.malformed(format!("invalid numeric literal '{text}'")));
        }
        let datatype = if saw_exp {
            vocab::XSD_DOUBLE
        } else if saw_dot {
            vocab::XSD_DECIMAL
        } else {
            vocab::XSD_INTEGER
        };
        Ok(Term::Literal {
            lexical: text,
            language: None,
            datatype: Some(datatype.to_string()),
        })
    }
}

fn is_pn_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-' || c == '\u{b7}'
}
