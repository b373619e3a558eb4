//! Class hierarchy with synonyms, answering `isa` queries.
//!
//! Two input formats are understood: a subset of RDF/XML (`owl:Class`,
//! `rdfs:Class` or `rdf:Description` nodes with `rdfs:subClassOf` and
//! `rdfs:label`), and a plain line format:
//!
//! ```text
//! # comment
//! Furniture
//! Bed subClassOf Furniture / cot / bunk bed
//! Bed label sleeper
//! ```

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, ParseError, Result};

const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
const RDFS_NS: &str = "http://www.w3.org/2000/01/rdf-schema#";
const OWL_NS: &str = "http://www.w3.org/2002/07/owl#";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaxonomyFormat {
    RdfXml,
    Lines,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct ClassEntry {
    name: String,
    parent: Option<String>,
    synonyms: BTreeSet<String>,
}

/// Forest of classes keyed case-insensitively.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Taxonomy {
    classes: BTreeMap<String, ClassEntry>,
}

fn key(name: &str) -> String {
    name.trim().to_lowercase()
}

impl Taxonomy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses either format, choosing RDF/XML when the text starts with `<`.
    pub fn load(text: &str) -> Result<Self> {
        let format = if text.trim_start().starts_with('<') { TaxonomyFormat::RdfXml } else { TaxonomyFormat::Lines };
        Self::parse(text, format)
    }

    pub fn parse(text: &str, format: TaxonomyFormat) -> Result<Self> {
        let mut t = Self::new();
        match format {
            TaxonomyFormat::RdfXml => t.read_rdf_xml(text)?,
            TaxonomyFormat::Lines => t.read_lines(text)?,
        }
        t.check_acyclic()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Class names in their original spelling, sorted case-insensitively.
    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.classes.values().map(|c| c.name.as_str())
    }

    pub fn parent(&self, class: &str) -> Option<&str> {
        let parent = self.classes.get(&key(class))?.parent.as_ref()?;
        self.classes.get(parent).map(|c| c.name.as_str())
    }

    pub fn synonyms(&self, class: &str) -> Vec<&str> {
        self.classes.get(&key(class)).map(|c| c.synonyms.iter().map(String::as_str).collect()).unwrap_or_default()
    }

    pub fn add_class(&mut self, name: &str) {
        let k = key(name);
        self.classes.entry(k).or_insert_with(|| ClassEntry { name: name.trim().to_string(), ..Default::default() });
    }

    /// Adds a subclass edge; each class has at most one parent.
    pub fn add_subclass(&mut self, child: &str, parent: &str) -> Result<()> {
        self.add_class(child);
        self.add_class(parent);
        let entry = self.classes.get_mut(&key(child)).expect("class just added");
        match &entry.parent {
            Some(p) if *p != key(parent) => Err(Error::Taxonomy(format!(
                "class `{}` already has parent `{p}`, cannot add `{parent}`",
                entry.name
            ))),
            _ => {
                entry.parent = Some(key(parent));
                Ok(())
            }
        }
    }

    pub fn add_synonym(&mut self, class: &str, synonym: &str) {
        self.add_class(class);
        let s = key(synonym);
        if !s.is_empty() {
            self.classes.get_mut(&key(class)).expect("class just added").synonyms.insert(s);
        }
    }

    /// Rejects cycles in the parent graph, naming the classes involved.
    pub fn check_acyclic(&self) -> Result<()> {
        for start in self.classes.keys() {
            let mut path = vec![start.as_str()];
            let mut cur = start.as_str();
            while let Some(p) = self.classes.get(cur).and_then(|c| c.parent.as_deref()) {
                if let Some(pos) = path.iter().position(|x| *x == p) {
                    let mut names: Vec<&str> = path[pos..].iter().map(|k| self.classes[*k].name.as_str()).collect();
                    names.push(&self.classes[p].name);
                    return Err(Error::TaxonomyCycle(names.join(" -> ")));
                }
                path.push(p);
                cur = p;
            }
        }
        Ok(())
    }

    /// The class itself followed by its ancestors.
    fn lineage<'a>(&'a self, class_key: &'a str) -> Vec<&'a str> {
        let mut out = Vec::new();
        let mut cur = Some(class_key);
        while let Some(k) = cur {
            if out.contains(&k) || !self.classes.contains_key(k) {
                break;
            }
            out.push(k);
            cur = self.classes[k].parent.as_deref();
        }
        out
    }

    /// Whether `value` names `class` or one of its descendants, by class name or synonym.
    pub fn matches_class(&self, value: &str, class: &str) -> bool {
        let (v, c) = (key(value), key(class));
        if v.is_empty() || !self.classes.contains_key(&c) {
            return false;
        }
        self.classes
            .iter()
            .filter(|(k, e)| **k == v || e.synonyms.contains(&v))
            .any(|(k, _)| self.lineage(k).contains(&c.as_str()))
    }

    /// Evaluates a class expression of the form `A OR B OR ...` (class
    /// names may be single-quoted).
    pub fn isa(&self, value: &str, class_expr: &str) -> bool {
        split_or(class_expr).iter().any(|class| self.matches_class(value, class))
    }

    fn read_lines(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let content = raw.split('#').next().unwrap_or("");
            let indent = content.len() - content.trim_start().len();
            let content = content.trim();
            if content.is_empty() {
                continue;
            }
            let err = |col: usize, msg: &str| Error::Parse(ParseError::new(line_no, col + 1, msg));
            let (head, synonyms) = match content.split_once('/') {
                Some((h, rest)) => (h.trim(), rest.split('/').map(str::trim).collect::<Vec<_>>()),
                None => (content, Vec::new()),
            };
            let words: Vec<&str> = head.split_whitespace().collect();
            let class = match words.as_slice() {
                [class] => {
                    self.add_class(class);
                    *class
                }
                [child, kw, parent] if kw.eq_ignore_ascii_case("subclassof") => {
                    self.add_subclass(child, parent).map_err(|e| match e {
                        Error::Taxonomy(m) => err(indent, &m),
                        other => other,
                    })?;
                    *child
                }
                [class, kw, rest @ ..] if kw.eq_ignore_ascii_case("label") && !rest.is_empty() => {
                    self.add_synonym(class, &rest.join(" "));
                    *class
                }
                [_, kw, ..] if kw.eq_ignore_ascii_case("subclassof") => {
                    return Err(err(indent, "expected `Child subClassOf Parent`"));
                }
                _ => return Err(err(indent, "expected `Class`, `Child subClassOf Parent` or `Class label text`")),
            };
            for s in synonyms {
                if s.is_empty() {
                    return Err(err(indent, "empty synonym"));
                }
                self.add_synonym(class, s);
            }
        }
        Ok(())
    }

    fn read_rdf_xml(&mut self, text: &str) -> Result<()> {
        let doc = roxmltree::Document::parse(text).map_err(|e| {
            let pos = e.pos();
            Error::Parse(ParseError::new(pos.row as usize, pos.col as usize, e.to_string()))
        })?;
        for node in doc.descendants().filter(|n| is_class_node(n)) {
            let Some(name) = node_name(&node) else { continue };
            self.add_class(&name);
            for child in node.children().filter(|c| c.is_element()) {
                let tag = child.tag_name();
                if tag.namespace() != Some(RDFS_NS) {
                    continue;
                }
                match tag.name() {
                    "subClassOf" => {
                        let parent = child
                            .attribute((RDF_NS, "resource"))
                            .map(fragment)
                            .or_else(|| child.children().find(is_class_node).and_then(|n| node_name(&n)));
                        if let Some(parent) = parent {
                            self.add_subclass(&name, &parent).map_err(|e| {
                                let pos = doc.text_pos_at(child.range().start);
                                match e {
                                    Error::Taxonomy(m) => {
                                        Error::Parse(ParseError::new(pos.row as usize, pos.col as usize, m))
                                    }
                                    other => other,
                                }
                            })?;
                        }
                    }
                    "label" => {
                        if let Some(t) = child.text() {
                            self.add_synonym(&name, t);
                        }
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

fn is_class_node(n: &roxmltree::Node<'_, '_>) -> bool {
    let tag = n.tag_name();
    matches!(
        (tag.namespace(), tag.name()),
        (Some(OWL_NS), "Class") | (Some(RDFS_NS), "Class") | (Some(RDF_NS), "Description")
    )
}

fn node_name(n: &roxmltree::Node<'_, '_>) -> Option<String> {
    n.attribute((RDF_NS, "about")).or_else(|| n.attribute((RDF_NS, "ID"))).map(fragment).filter(|s| !s.is_empty())
}

/// Local name of an IRI: text after the last `#` or `/`.
fn fragment(iri: &str) -> String {
    iri.rsplit(['#', '/']).next().unwrap_or(iri).to_string()
}

/// Splits `A OR B` into class names, stripping quotes.
pub fn split_or(expr: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for word in expr.split_whitespace() {
        if word == "OR" || word == "||" {
            out.push(cur.join(" "));
            cur.clear();
        } else {
            cur.push(word);
        }
    }
    out.push(cur.join(" "));
    out.into_iter().map(|s| s.trim_matches('\'').to_string()).filter(|s| !s.is_empty()).collect()
}
