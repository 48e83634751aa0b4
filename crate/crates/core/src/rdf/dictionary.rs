use std::fmt;

use indexmap::IndexSet;

pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

/// Dense identifier of an interned resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResourceId(pub u32);

impl ResourceId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Lexical form of a resource.
///
/// Blank nodes are kept as their own variant so they serialise back as `_:label`,
/// but every other part of the crate treats them exactly like IRIs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Iri(String),
    Blank(String),
    Literal {
        lexical: String,
        datatype: String,
        language: Option<String>,
    },
}

/// Coarse kind of a resource: URIs (including blank nodes) or literals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResourceKind {
    Uri,
    Literal,
}

impl Node {
    pub fn iri(iri: impl Into<String>) -> Self {
        Node::Iri(iri.into())
    }

    pub fn blank(label: impl Into<String>) -> Self {
        Node::Blank(label.into())
    }

    /// A plain literal, typed `xsd:string`.
    pub fn string_literal(lexical: impl Into<String>) -> Self {
        Node::Literal {
            lexical: lexical.into(),
            datatype: XSD_STRING.to_string(),
            language: None,
        }
    }

    pub fn typed_literal(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Node::Literal {
            lexical: lexical.into(),
            datatype: datatype.into(),
            language: None,
        }
    }

    pub fn lang_literal(lexical: impl Into<String>, language: impl Into<String>) -> Self {
        Node::Literal {
            lexical: lexical.into(),
            datatype: RDF_LANG_STRING.to_string(),
            language: Some(language.into()),
        }
    }

    pub fn kind(&self) -> ResourceKind {
        match self {
            Node::Iri(_) | Node::Blank(_) => ResourceKind::Uri,
            Node::Literal { .. } => ResourceKind::Literal,
        }
    }

    pub fn datatype(&self) -> Option<&str> {
        match self {
            Node::Literal { datatype, .. } => Some(datatype),
            _ => None,
        }
    }
}

/// Writes the canonical N-Triples form of the node.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Iri(iri) => {
                f.write_str("<")?;
                for c in iri.chars() {
                    match c {
                        '>' => f.write_str("\\u003E")?,
                        '\\' => f.write_str("\\u005C")?,
                        c if (c as u32) <= 0x20 => write!(f, "\\u{:04X}", c as u32)?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str(">")
            }
            Node::Blank(label) => write!(f, "_:{label}"),
            Node::Literal {
                lexical,
                datatype,
                language,
            } => {
                f.write_str("\"")?;
                for c in lexical.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")?;
                if let Some(lang) = language {
                    write!(f, "@{lang}")
                } else if datatype != XSD_STRING {
                    write!(f, "^^{}", Node::Iri(datatype.clone()))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Bidirectional map between lexical forms and dense ids.
///
/// Ids are assigned in insertion order and never change, so a clone that is
/// later extended keeps every existing id valid.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    nodes: IndexSet<Node>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Interns `node`. Literal datatypes are interned as IRIs as well, so
    /// [`Dictionary::datatype_of`] can resolve them.
    pub fn intern(&mut self, node: Node) -> ResourceId {
        if let Some(idx) = self.nodes.get_index_of(&node) {
            return ResourceId(idx as u32);
        }
        if let Node::Literal { datatype, .. } = &node {
            let dt = Node::Iri(datatype.clone());
            if !self.nodes.contains(&dt) {
                self.nodes.insert(dt);
            }
        }
        let (idx, _) = self.nodes.insert_full(node);
        ResourceId(u32::try_from(idx).expect("dictionary exceeds u32 id space"))
    }

    pub fn lookup(&self, node: &Node) -> Option<ResourceId> {
        self.nodes.get_index_of(node).map(|i| ResourceId(i as u32))
    }

    pub fn node(&self, id: ResourceId) -> Option<&Node> {
        self.nodes.get_index(id.index())
    }

    /// Lexical (N-Triples) rendering of `id`; unknown ids render as `#n`.
    pub fn render(&self, id: ResourceId) -> String {
        match self.node(id) {
            Some(n) => n.to_string(),
            None => id.to_string(),
        }
    }

    pub fn kind(&self, id: ResourceId) -> Option<ResourceKind> {
        self.node(id).map(Node::kind)
    }

    /// Id of the datatype IRI of a literal resource.
    pub fn datatype_of(&self, id: ResourceId) -> Option<ResourceId> {
        let dt = self.node(id)?.datatype()?;
        self.lookup(&Node::Iri(dt.to_string()))
    }

    pub fn rdf_type(&self) -> Option<ResourceId> {
        self.lookup(&Node::Iri(RDF_TYPE.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ResourceId, &Node)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (ResourceId(i as u32), n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_injective() {
        let mut d = Dictionary::new();
        let a = d.intern(Node::iri("http://x/a"));
        let b = d.intern(Node::iri("http://x/b"));
        assert_ne!(a, b);
        assert_eq!(d.intern(Node::iri("http://x/a")), a);
        assert_eq!(d.node(a), Some(&Node::iri("http://x/a")));
    }

    #[test]
    fn literal_datatypes_are_resolvable() {
        let mut d = Dictionary::new();
        let five = d.intern(Node::typed_literal("5", "xsd:integer"));
        let dt = d.datatype_of(five).unwrap();
        assert_eq!(d.node(dt), Some(&Node::iri("xsd:integer")));
        assert_eq!(d.kind(five), Some(ResourceKind::Literal));
    }

    #[test]
    fn plain_and_string_typed_literals_coincide() {
        let mut d = Dictionary::new();
        let a = d.intern(Node::string_literal("x"));
        let b = d.intern(Node::typed_literal("x", XSD_STRING));
        assert_eq!(a, b);
        assert_eq!(Node::string_literal("x").to_string(), "\"x\"");
    }

    #[test]
    fn display_escapes() {
        let n = Node::lang_literal("a\"b\nc", "en");
        assert_eq!(n.to_string(), "\"a\\\"b\\nc\"@en");
        assert_eq!(Node::blank("b0").to_string(), "_:b0");
    }
}
