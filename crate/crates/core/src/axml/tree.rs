use std::collections::BTreeSet;
use std::fmt;

pub const ANDROID_NS: &str = "http://schemas.android.com/apk/res/android";

/// A namespace-qualified name. `namespace` holds the resolved URI, never the prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QName {
    pub namespace: Option<String>,
    pub local: String,
}

impl QName {
    pub fn local(local: impl Into<String>) -> Self {
        QName {
            namespace: None,
            local: local.into(),
        }
    }

    pub fn android(local: impl Into<String>) -> Self {
        QName {
            namespace: Some(ANDROID_NS.to_string()),
            local: local.into(),
        }
    }

    pub fn is(&self, namespace: Option<&str>, local: &str) -> bool {
        self.namespace.as_deref() == namespace && self.local == local
    }
}

/// Typed attribute value. Binary manifests carry types; plain-text manifests
/// only ever produce `String`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttrValue {
    String(String),
    Bool(bool),
    Int(i64),
    Reference(u32),
}

impl AttrValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttrValue::String(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::String(s) => f.write_str(s),
            AttrValue::Bool(b) => write!(f, "{b}"),
            AttrValue::Int(i) => write!(f, "{i}"),
            AttrValue::Reference(r) => write!(f, "@0x{r:08x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: QName,
    pub value: AttrValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub name: QName,
    pub attributes: Vec<Attribute>,
    pub children: Vec<Element>,
}

impl Element {
    pub fn new(name: QName) -> Self {
        Element {
            name,
            attributes: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn attr(&self, namespace: Option<&str>, local: &str) -> Option<&AttrValue> {
        self.attributes
            .iter()
            .find(|a| a.name.is(namespace, local))
            .map(|a| &a.value)
    }

    /// Depth-first, document-order walk yielding each element with its parent.
    pub fn walk(&self) -> Walk<'_> {
        Walk {
            stack: vec![(None, self)],
        }
    }
}

pub struct Walk<'a> {
    stack: Vec<(Option<&'a Element>, &'a Element)>,
}

impl<'a> Iterator for Walk<'a> {
    type Item = (Option<&'a Element>, &'a Element);

    fn next(&mut self) -> Option<Self::Item> {
        let (parent, el) = self.stack.pop()?;
        for child in el.children.iter().rev() {
            self.stack.push((Some(el), child));
        }
        Some((parent, el))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Namespace {
    pub prefix: String,
    pub uri: String,
}

/// A decoded manifest document with exactly one root element.
///
/// `namespaces` lists the prefix bindings seen while decoding, first binding
/// per URI wins. It only steers prefix choice when the tree is written back
/// out as text, so equality compares the element tree alone.
#[derive(Debug, Clone)]
pub struct XmlTree {
    pub root: Element,
    pub namespaces: Vec<Namespace>,
}

impl PartialEq for XmlTree {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl Eq for XmlTree {}

impl XmlTree {
    pub fn new(root: Element) -> Self {
        XmlTree {
            root,
            namespaces: Vec::new(),
        }
    }

    pub(crate) fn bind(&mut self, prefix: &str, uri: &str) {
        if !self.namespaces.iter().any(|ns| ns.uri == uri) {
            self.namespaces.push(Namespace {
                prefix: prefix.to_string(),
                uri: uri.to_string(),
            });
        }
    }

    /// Canonical text form: XML declaration, every namespace declared on the
    /// root, two-space indentation, one element per line, LF line endings.
    /// Typed values use their `Display` form.
    pub fn to_canonical_text(&self) -> String {
        let prefixes = self.prefix_table();
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n");
        write_element(&mut out, &self.root, &prefixes, 0, true);
        out
    }

    fn prefix_table(&self) -> Vec<Namespace> {
        let mut table = Vec::new();
        let mut taken = BTreeSet::new();
        for ns in &self.namespaces {
            if !ns.prefix.is_empty() && taken.insert(ns.prefix.clone()) {
                table.push(ns.clone());
            }
        }
        let mut used = Vec::new();
        for (_, el) in self.root.walk() {
            let names = std::iter::once(&el.name).chain(el.attributes.iter().map(|a| &a.name));
            for uri in names.filter_map(|n| n.namespace.as_ref()) {
                if !used.contains(uri) {
                    used.push(uri.clone());
                }
            }
        }
        let mut next = 0;
        for uri in used {
            if table.iter().any(|ns| ns.uri == uri) {
                continue;
            }
            let prefix = if uri == ANDROID_NS && !taken.contains("android") {
                "android".to_string()
            } else {
                loop {
                    let candidate = format!("ns{next}");
                    next += 1;
                    if !taken.contains(&candidate) {
                        break candidate;
                    }
                }
            };
            taken.insert(prefix.clone());
            table.push(Namespace { prefix, uri });
        }
        table
    }
}

fn qualified(name: &QName, prefixes: &[Namespace]) -> String {
    match &name.namespace {
        None => name.local.clone(),
        Some(uri) => {
            let prefix = prefixes
                .iter()
                .find(|ns| &ns.uri == uri)
                .map(|ns| ns.prefix.as_str())
                .expect("prefix table covers every namespace in the tree");
            format!("{prefix}:{}", name.local)
        }
    }
}

fn write_element(out: &mut String, el: &Element, prefixes: &[Namespace], depth: usize, root: bool) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push('<');
    out.push_str(&qualified(&el.name, prefixes));
    if root {
        for ns in prefixes {
            out.push_str(&format!(" xmlns:{}=\"{}\"", ns.prefix, escape(&ns.uri)));
        }
    }
    for attr in &el.attributes {
        out.push(' ');
        out.push_str(&qualified(&attr.name, prefixes));
        out.push_str("=\"");
        out.push_str(&escape(&attr.value.to_string()));
        out.push('"');
    }
    if el.children.is_empty() {
        out.push_str("/>\n");
        return;
    }
    out.push_str(">\n");
    for child in &el.children {
        write_element(out, child, prefixes, depth + 1, false);
    }
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str("</");
    out.push_str(&qualified(&el.name, prefixes));
    out.push_str(">\n");
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}
