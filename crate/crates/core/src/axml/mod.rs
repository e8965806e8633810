//! Manifest decoding: chunked binary XML and plain-text XML both land in the
//! same [`XmlTree`].

mod binary;
mod text;
mod tree;

use thiserror::Error;

pub use tree::{AttrValue, Attribute, Element, Namespace, QName, Walk, XmlTree, ANDROID_NS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("empty manifest")]
    Empty,
    #[error("truncated chunk at offset {offset}: needs {needed} bytes, {available} available")]
    TruncatedChunk {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("string index {index} out of range (pool holds {len})")]
    StringIndexOutOfRange { index: u32, len: usize },
    #[error("malformed chunk at offset {offset}: {reason}")]
    MalformedChunk { offset: usize, reason: String },
    #[error("not XML: {0}")]
    NotXml(String),
}

impl DecodeError {
    pub fn kind(&self) -> &'static str {
        match self {
            DecodeError::Empty => "Empty",
            DecodeError::TruncatedChunk { .. } => "TruncatedChunk",
            DecodeError::StringIndexOutOfRange { .. } => "StringIndexOutOfRange",
            DecodeError::MalformedChunk { .. } => "MalformedChunk",
            DecodeError::NotXml(_) => "NotXml",
        }
    }
}

/// Recoverable oddities met while decoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeWarning {
    /// Chunk of an unrecognised type; it was skipped whole.
    UnknownChunkType { offset: usize, chunk_type: u16 },
}

impl std::fmt::Display for DecodeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecodeWarning::UnknownChunkType { offset, chunk_type } => {
                write!(
                    f,
                    "skipped unknown chunk type 0x{chunk_type:04x} at offset {offset}"
                )
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub tree: XmlTree,
    pub warnings: Vec<DecodeWarning>,
}

/// Decodes a manifest. Input opening with the binary XML file header takes
/// the chunked path; anything else is parsed as text.
pub fn decode_manifest(bytes: &[u8]) -> Result<Decoded, DecodeError> {
    if bytes.is_empty() {
        return Err(DecodeError::Empty);
    }
    if binary::has_signature(bytes) {
        binary::decode(bytes)
    } else {
        text::parse(bytes)
    }
}

pub fn is_binary_xml(bytes: &[u8]) -> bool {
    binary::has_signature(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_text_manifest_without_xmlns() {
        let src = br#"<manifest package="a.b"><uses-permission android:name="android.permission.INTERNET"/></manifest>"#;
        let tree = decode_manifest(src).unwrap().tree;
        assert_eq!(tree.root.name, QName::local("manifest"));
        assert_eq!(tree.root.children.len(), 1);
        let perm = &tree.root.children[0];
        assert_eq!(perm.name.local, "uses-permission");
        assert_eq!(
            perm.attr(Some(ANDROID_NS), "name"),
            Some(&AttrValue::String("android.permission.INTERNET".into()))
        );
    }

    #[test]
    fn text_errors() {
        assert_eq!(decode_manifest(b"").unwrap_err(), DecodeError::Empty);
        assert!(matches!(
            decode_manifest(b"garbage"),
            Err(DecodeError::NotXml(_))
        ));
        assert!(matches!(
            decode_manifest(b"<a><b></a>"),
            Err(DecodeError::NotXml(_))
        ));
        assert!(matches!(
            decode_manifest(b"<a/><b/>"),
            Err(DecodeError::NotXml(_))
        ));
        assert!(matches!(
            decode_manifest(b"<a x:y='1'/>"),
            Err(DecodeError::NotXml(_))
        ));
        assert!(matches!(
            decode_manifest(b"<a>"),
            Err(DecodeError::NotXml(_))
        ));
    }

    #[test]
    fn default_namespace_applies_to_elements_only() {
        let tree = decode_manifest(br#"<a xmlns="urn:d" k="v"><b/></a>"#)
            .unwrap()
            .tree;
        assert_eq!(tree.root.name.namespace.as_deref(), Some("urn:d"));
        assert_eq!(
            tree.root.children[0].name.namespace.as_deref(),
            Some("urn:d")
        );
        assert_eq!(tree.root.attributes[0].name, QName::local("k"));
    }

    #[test]
    fn entities_are_unescaped() {
        let tree = decode_manifest(br#"<a k="x&amp;y&quot;"/>"#).unwrap().tree;
        assert_eq!(
            tree.root.attributes[0].value,
            AttrValue::String("x&y\"".into())
        );
    }

    #[test]
    fn truncated_file_header() {
        let err = decode_manifest(&[0x03, 0x00, 0x08, 0x00, 0xff, 0x00]).unwrap_err();
        assert!(matches!(err, DecodeError::TruncatedChunk { .. }), "{err:?}");
        let err = decode_manifest(&[0x03, 0x00, 0x08, 0x00, 0x00, 0x01, 0x00, 0x00]).unwrap_err();
        assert!(matches!(err, DecodeError::TruncatedChunk { .. }), "{err:?}");
    }
}
