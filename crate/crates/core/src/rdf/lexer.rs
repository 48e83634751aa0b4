//! Token-level reader shared by the N-Triples, query and summary parsers.

use std::fmt;

use super::dictionary::{Node, RDF_LANG_STRING, XSD_STRING};

/// A syntax error, located by 1-based line and column (in characters).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for SyntaxError {}

pub(crate) struct Lexer<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(text: &'a str, line: usize) -> Self {
        Self { text, pos: 0, line }
    }

    pub fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line,
            column: self.text[..self.pos].chars().count() + 1,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    pub fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    pub fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r')) {
            self.bump();
        }
    }

    /// True when only whitespace or a `#` comment remains.
    pub fn at_end(&mut self) -> bool {
        self.skip_ws();
        matches!(self.peek(), None | Some('#'))
    }

    pub fn expect_end(&mut self) -> Result<(), SyntaxError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing content"))
        }
    }

    pub fn expect_dot(&mut self) -> Result<(), SyntaxError> {
        self.skip_ws();
        match self.peek() {
            Some('.') => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error("expected '.'")),
        }
    }

    /// Reads a whitespace-delimited bare word (numbers, keywords).
    pub fn word(&mut self) -> Result<&'a str, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if !c.is_whitespace()) {
            self.bump();
        }
        if start == self.pos {
            return Err(self.error("expected a token"));
        }
        Ok(&self.text[start..self.pos])
    }

    /// `?name` or `$name`; `None` if the next token is not a variable.
    pub fn variable(&mut self) -> Result<Option<String>, SyntaxError> {
        self.skip_ws();
        if !matches!(self.peek(), Some('?' | '$')) {
            return Ok(None);
        }
        self.bump();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_') {
            self.bump();
        }
        if start == self.pos {
            return Err(self.error("empty variable name"));
        }
        Ok(Some(self.text[start..self.pos].to_string()))
    }

    pub fn node(&mut self) -> Result<Node, SyntaxError> {
        self.skip_ws();
        match self.peek() {
            Some('<') => Ok(Node::Iri(self.iri()?)),
            Some('_') => self.blank(),
            Some('"') => self.literal(),
            Some(c) => Err(self.error(format!("unexpected character '{c}'"))),
            None => Err(self.error("unexpected end of line")),
        }
    }

    fn iri(&mut self) -> Result<String, SyntaxError> {
        self.bump(); // '<'
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('>') => return Ok(out),
                Some('\\') => out.push(self.unicode_escape()?),
                Some(c) if c == '<' || c == '"' || c.is_whitespace() => {
                    return Err(self.error(format!("invalid character {c:?} in IRI")))
                }
                Some(c) => out.push(c),
                None => return Err(self.error("unterminated IRI")),
            }
        }
    }

    fn unicode_escape(&mut self) -> Result<char, SyntaxError> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.error("invalid escape")),
        };
        let start = self.pos;
        for _ in 0..width {
            match self.bump() {
                Some(c) if c.is_ascii_hexdigit() => {}
                _ => return Err(self.error("invalid unicode escape")),
            }
        }
        u32::from_str_radix(&self.text[start..self.pos], 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.error("escape is not a valid code point"))
    }

    fn blank(&mut self) -> Result<Node, SyntaxError> {
        if !self.rest().starts_with("_:") {
            return Err(self.error("expected blank node label"));
        }
        self.pos += 2;
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
        {
            self.bump();
        }
        // a trailing '.' terminates the statement, not the label
        while self.text[start..self.pos].ends_with('.') {
            self.pos -= 1;
        }
        if start == self.pos {
            return Err(self.error("empty blank node label"));
        }
        Ok(Node::Blank(self.text[start..self.pos].to_string()))
    }

    fn literal(&mut self) -> Result<Node, SyntaxError> {
        self.bump(); // '"'
        let mut lexical = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => {
                    let c = match self.peek() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u' | 'U') => {
                            lexical.push(self.unicode_escape()?);
                            continue;
                        }
                        _ => return Err(self.error("invalid escape in literal")),
                    };
                    self.bump();
                    lexical.push(c);
                }
                Some(c) => lexical.push(c),
                None => return Err(self.error("unterminated literal")),
            }
        }
        match self.peek() {
            Some('@') => {
                self.bump();
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                    self.bump();
                }
                let tag = &self.text[start..self.pos];
                if tag.is_empty() || !tag.starts_with(|c: char| c.is_ascii_alphabetic()) {
                    return Err(self.error("invalid language tag"));
                }
                Ok(Node::Literal {
                    lexical,
                    datatype: RDF_LANG_STRING.to_string(),
                    language: Some(tag.to_string()),
                })
            }
            Some('^') => {
                if !self.rest().starts_with("^^<") {
                    return Err(self.error("expected ^^<datatype>"));
                }
                self.pos += 2;
                let datatype = self.iri()?;
                Ok(Node::Literal {
                    lexical,
                    datatype,
                    language: None,
                })
            }
            _ => Ok(Node::Literal {
                lexical,
                datatype: XSD_STRING.to_string(),
                language: None,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_each_node_form() {
        let mut lx = Lexer::new(r#"<http://a> _:b1. "x\ty"@en-GB "5"^^<xsd:integer> "é""#, 1);
        assert_eq!(lx.node().unwrap(), Node::iri("http://a"));
        assert_eq!(lx.node().unwrap(), Node::blank("b1"));
        lx.expect_dot().unwrap();
        assert_eq!(lx.node().unwrap(), Node::lang_literal("x\ty", "en-GB"));
        assert_eq!(lx.node().unwrap(), Node::typed_literal("5", "xsd:integer"));
        assert_eq!(lx.node().unwrap(), Node::string_literal("é"));
        assert!(lx.at_end());
    }

    #[test]
    fn errors_carry_columns() {
        let mut lx = Lexer::new("<a> <b", 7);
        lx.node().unwrap();
        let err = lx.node().unwrap_err();
        assert_eq!(err.line, 7);
        assert_eq!(err.column, 7);
    }
}
