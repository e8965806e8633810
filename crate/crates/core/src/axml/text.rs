use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::tree::{AttrValue, Attribute, Element, QName, XmlTree, ANDROID_NS};
use super::{DecodeError, Decoded};

const XML_NS: &str = "http://www.w3.org/XML/1998/namespace";

/// Prefix bindings introduced by one element, innermost scope last.
type Scope = Vec<(String, String)>;

struct Resolver {
    scopes: Vec<Scope>,
}

impl Resolver {
    fn lookup(&self, prefix: &str) -> Option<&str> {
        self.scopes
            .iter()
            .rev()
            .flat_map(|scope| scope.iter().rev())
            .find(|(p, _)| p == prefix)
            .map(|(_, uri)| uri.as_str())
    }

    /// Hand-written manifests often drop `xmlns:android`; that one prefix
    /// falls back to the platform URI, any other unbound prefix is an error.
    fn resolve(
        &self,
        tree_ns: &mut Vec<(String, String)>,
        qname: &str,
        is_element: bool,
    ) -> Result<QName, DecodeError> {
        let (prefix, local) = match qname.split_once(':') {
            Some((p, l)) => (Some(p), l),
            None => (None, qname),
        };
        let namespace = match prefix {
            None if is_element => self
                .lookup("")
                .filter(|u| !u.is_empty())
                .map(str::to_string),
            None => None,
            Some("xml") => Some(XML_NS.to_string()),
            Some(p) => match self.lookup(p) {
                Some(uri) => Some(uri.to_string()),
                None if p == "android" => {
                    if !tree_ns.iter().any(|(_, u)| u == ANDROID_NS) {
                        tree_ns.push(("android".into(), ANDROID_NS.into()));
                    }
                    Some(ANDROID_NS.to_string())
                }
                None => {
                    return Err(DecodeError::NotXml(format!(
                        "unbound namespace prefix `{p}`"
                    )))
                }
            },
        };
        Ok(QName {
            namespace,
            local: local.to_string(),
        })
    }
}

fn not_xml(e: impl std::fmt::Display) -> DecodeError {
    DecodeError::NotXml(e.to_string())
}

fn open_element(
    start: &BytesStart<'_>,
    resolver: &mut Resolver,
    tree_ns: &mut Vec<(String, String)>,
) -> Result<Element, DecodeError> {
    let mut scope = Scope::new();
    let mut raw_attrs = Vec::new();
    for attr in start.attributes() {
        let attr = attr.map_err(not_xml)?;
        let key = std::str::from_utf8(attr.key.as_ref())
            .map_err(not_xml)?
            .to_string();
        let value = attr.unescape_value().map_err(not_xml)?.into_owned();
        if key == "xmlns" {
            scope.push((String::new(), value));
        } else if let Some(prefix) = key.strip_prefix("xmlns:") {
            if !tree_ns.iter().any(|(_, u)| *u == value) {
                tree_ns.push((prefix.to_string(), value.clone()));
            }
            scope.push((prefix.to_string(), value));
        } else {
            raw_attrs.push((key, value));
        }
    }
    resolver.scopes.push(scope);

    let name = std::str::from_utf8(start.name().as_ref())
        .map_err(not_xml)?
        .to_string();
    let mut element = Element::new(resolver.resolve(tree_ns, &name, true)?);
    for (key, value) in raw_attrs {
        element.attributes.push(Attribute {
            name: resolver.resolve(tree_ns, &key, false)?,
            value: AttrValue::String(value),
        });
    }
    Ok(element)
}

pub fn parse(bytes: &[u8]) -> Result<Decoded, DecodeError> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let text = std::str::from_utf8(bytes).map_err(|e| not_xml(format!("not UTF-8: {e}")))?;
    let mut reader = Reader::from_str(text);
    reader.config_mut().check_end_names = true;

    let mut resolver = Resolver { scopes: Vec::new() };
    let mut tree_ns = Vec::new();
    let mut open: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;

    let mut close = |element: Element, open: &mut Vec<Element>| -> Result<(), DecodeError> {
        match open.last_mut() {
            Some(parent) => parent.children.push(element),
            None if root.is_none() => root = Some(element),
            None => return Err(not_xml("more than one root element")),
        }
        Ok(())
    };

    loop {
        match reader.read_event().map_err(not_xml)? {
            Event::Start(start) => {
                let element = open_element(&start, &mut resolver, &mut tree_ns)?;
                open.push(element);
            }
            Event::Empty(start) => {
                let element = open_element(&start, &mut resolver, &mut tree_ns)?;
                resolver.scopes.pop();
                close(element, &mut open)?;
            }
            Event::End(_) => {
                resolver.scopes.pop();
                let element = open.pop().ok_or_else(|| not_xml("unexpected end tag"))?;
                close(element, &mut open)?;
            }
            Event::Text(t) if open.is_empty() => {
                let raw = t.unescape().map_err(not_xml)?;
                if !raw.trim().is_empty() {
                    return Err(not_xml("text outside the root element"));
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !open.is_empty() {
        return Err(not_xml("unclosed element at end of input"));
    }
    let root = root.ok_or_else(|| not_xml("no root element"))?;
    let mut tree = XmlTree::new(root);
    for (prefix, uri) in &tree_ns {
        tree.bind(prefix, uri);
    }
    Ok(Decoded {
        tree,
        warnings: Vec::new(),
    })
}
