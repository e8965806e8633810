//! Chunked binary XML as emitted by aapt/aapt2 into `AndroidManifest.xml`.
//!
//! Layout: a file header chunk (type 0x0003) wrapping a string pool, an
//! optional resource map, then a flat stream of namespace/element chunks.
//! Everything is little-endian.

use super::tree::{AttrValue, Attribute, Element, QName, XmlTree};
use super::{DecodeError, DecodeWarning, Decoded};

const RES_STRING_POOL_TYPE: u16 = 0x0001;
const RES_XML_TYPE: u16 = 0x0003;
const RES_XML_START_NAMESPACE_TYPE: u16 = 0x0100;
const RES_XML_END_NAMESPACE_TYPE: u16 = 0x0101;
const RES_XML_START_ELEMENT_TYPE: u16 = 0x0102;
const RES_XML_END_ELEMENT_TYPE: u16 = 0x0103;
const RES_XML_CDATA_TYPE: u16 = 0x0104;
const RES_XML_RESOURCE_MAP_TYPE: u16 = 0x0180;

const NO_INDEX: u32 = 0xFFFF_FFFF;
const UTF8_FLAG: u32 = 1 << 8;

const TYPE_NULL: u8 = 0x00;
const TYPE_REFERENCE: u8 = 0x01;
const TYPE_ATTRIBUTE: u8 = 0x02;
const TYPE_STRING: u8 = 0x03;
const TYPE_FLOAT: u8 = 0x04;
const TYPE_DYNAMIC_REFERENCE: u8 = 0x07;
const TYPE_DYNAMIC_ATTRIBUTE: u8 = 0x08;
const TYPE_INT_BOOLEAN: u8 = 0x12;

const CHUNK_HEADER_LEN: usize = 8;
const ATTRIBUTE_LEN: usize = 20;

/// Framework attribute ids for names that obfuscators commonly blank out of
/// the string pool. Lookup only happens when the pooled name is empty.
const KNOWN_ATTRIBUTE_IDS: &[(u32, &str)] = &[
    (0x0101_0000, "theme"),
    (0x0101_0001, "label"),
    (0x0101_0002, "icon"),
    (0x0101_0003, "name"),
    (0x0101_0006, "permission"),
    (0x0101_0010, "exported"),
    (0x0101_001f, "targetPackage"),
    (0x0101_020c, "minSdkVersion"),
    (0x0101_021b, "versionCode"),
    (0x0101_021c, "versionName"),
    (0x0101_0270, "targetSdkVersion"),
    (0x0101_0271, "maxSdkVersion"),
];

/// True when `bytes` open with the binary XML file header.
pub fn has_signature(bytes: &[u8]) -> bool {
    bytes.len() >= 4 && bytes[..4] == [0x03, 0x00, 0x08, 0x00]
}

fn u16_at(data: &[u8], offset: usize) -> Result<u16, DecodeError> {
    data.get(offset..offset + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or(DecodeError::TruncatedChunk {
            offset,
            needed: 2,
            available: data.len().saturating_sub(offset),
        })
}

fn u32_at(data: &[u8], offset: usize) -> Result<u32, DecodeError> {
    data.get(offset..offset + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(DecodeError::TruncatedChunk {
            offset,
            needed: 4,
            available: data.len().saturating_sub(offset),
        })
}

#[derive(Debug, Clone, Copy)]
struct ChunkHeader {
    chunk_type: u16,
    header_size: usize,
    size: usize,
    start: usize,
}

impl ChunkHeader {
    /// Reads and bounds-checks a chunk header at `start`; the chunk must fit
    /// inside `data[..limit]`.
    fn read(data: &[u8], start: usize, limit: usize) -> Result<Self, DecodeError> {
        if limit < start + CHUNK_HEADER_LEN {
            return Err(DecodeError::TruncatedChunk {
                offset: start,
                needed: CHUNK_HEADER_LEN,
                available: limit.saturating_sub(start),
            });
        }
        let header = ChunkHeader {
            chunk_type: u16_at(data, start)?,
            header_size: u16_at(data, start + 2)? as usize,
            size: u32_at(data, start + 4)? as usize,
            start,
        };
        if header.header_size < CHUNK_HEADER_LEN || header.size < header.header_size {
            return Err(DecodeError::MalformedChunk {
                offset: start,
                reason: format!(
                    "header size {} / chunk size {} inconsistent",
                    header.header_size, header.size
                ),
            });
        }
        if header.size > limit - start {
            return Err(DecodeError::TruncatedChunk {
                offset: start,
                needed: header.size,
                available: limit - start,
            });
        }
        Ok(header)
    }

    fn end(&self) -> usize {
        self.start + self.size
    }

    fn body(&self) -> usize {
        self.start + self.header_size
    }
}

/// String pool chunk. Strings are decoded on access so a malformed entry
/// nobody references does not sink the whole document.
struct StringPool<'a> {
    data: &'a [u8],
    offsets: Vec<u32>,
    strings_base: usize,
    end: usize,
    utf8: bool,
}

impl<'a> StringPool<'a> {
    fn parse(data: &'a [u8], header: &ChunkHeader) -> Result<Self, DecodeError> {
        let h = header.start;
        if header.header_size < 28 {
            return Err(DecodeError::MalformedChunk {
                offset: h,
                reason: "string pool header shorter than 28 bytes".into(),
            });
        }
        let count = u32_at(data, h + 8)? as usize;
        let flags = u32_at(data, h + 16)?;
        let strings_start = u32_at(data, h + 20)? as usize;
        let offsets_at = header.body();
        if count > (header.end() - offsets_at) / 4 {
            return Err(DecodeError::TruncatedChunk {
                offset: offsets_at,
                needed: count * 4,
                available: header.end() - offsets_at,
            });
        }
        let offsets = (0..count)
            .map(|i| u32_at(data, offsets_at + 4 * i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(StringPool {
            data,
            offsets,
            strings_base: h + strings_start,
            end: header.end(),
            utf8: flags & UTF8_FLAG != 0,
        })
    }

    fn get(&self, index: u32) -> Result<String, DecodeError> {
        let offset =
            *self
                .offsets
                .get(index as usize)
                .ok_or(DecodeError::StringIndexOutOfRange {
                    index,
                    len: self.offsets.len(),
                })?;
        let at = self.strings_base.saturating_add(offset as usize);
        let region = self.data.get(..self.end).unwrap_or(self.data);
        if self.utf8 {
            read_utf8(region, at)
        } else {
            read_utf16(region, at)
        }
    }

    fn get_opt(&self, index: u32) -> Result<Option<String>, DecodeError> {
        if index == NO_INDEX {
            Ok(None)
        } else {
            self.get(index).map(Some)
        }
    }
}

fn truncated(offset: usize, needed: usize, data: &[u8]) -> DecodeError {
    DecodeError::TruncatedChunk {
        offset,
        needed,
        available: data.len().saturating_sub(offset),
    }
}

/// 8-bit entry: UTF-16 length, UTF-8 byte length (each 1 or 2 bytes, high
/// bit of the first byte marks the 2-byte form), then the bytes.
fn read_utf8(data: &[u8], at: usize) -> Result<String, DecodeError> {
    let (_, at) = utf8_len(data, at)?;
    let (byte_len, at) = utf8_len(data, at)?;
    let bytes = data
        .get(at..at + byte_len)
        .ok_or_else(|| truncated(at, byte_len, data))?;
    Ok(String::from_utf8_lossy(bytes).into_owned())
}

fn utf8_len(data: &[u8], at: usize) -> Result<(usize, usize), DecodeError> {
    let first = *data.get(at).ok_or_else(|| truncated(at, 1, data))? as usize;
    if first & 0x80 == 0 {
        return Ok((first, at + 1));
    }
    let second = *data.get(at + 1).ok_or_else(|| truncated(at + 1, 1, data))? as usize;
    Ok((((first & 0x7f) << 8) | second, at + 2))
}

/// 16-bit entry: unit count (1 or 2 u16s, high bit marks the long form),
/// then UTF-16LE units.
fn read_utf16(data: &[u8], at: usize) -> Result<String, DecodeError> {
    let first = u16_at(data, at)? as usize;
    let (len, at) = if first & 0x8000 == 0 {
        (first, at + 2)
    } else {
        let second = u16_at(data, at + 2)? as usize;
        (((first & 0x7fff) << 16) | second, at + 4)
    };
    let bytes = data
        .get(at..at + 2 * len)
        .ok_or_else(|| truncated(at, 2 * len, data))?;
    let units: Vec<u16> = bytes
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    Ok(String::from_utf16_lossy(&units))
}

struct Decoder<'a> {
    data: &'a [u8],
    pool: Option<StringPool<'a>>,
    resource_ids: Vec<u32>,
    open: Vec<Element>,
    root: Option<Element>,
    tree_namespaces: Vec<(String, String)>,
    warnings: Vec<DecodeWarning>,
}

impl<'a> Decoder<'a> {
    fn pool(&self, offset: usize) -> Result<&StringPool<'a>, DecodeError> {
        self.pool
            .as_ref()
            .ok_or_else(|| DecodeError::MalformedChunk {
                offset,
                reason: "node chunk before string pool".into(),
            })
    }

    fn chunk(&mut self, header: ChunkHeader) -> Result<(), DecodeError> {
        match header.chunk_type {
            RES_STRING_POOL_TYPE => {
                if self.pool.is_none() {
                    self.pool = Some(StringPool::parse(self.data, &header)?);
                }
            }
            RES_XML_RESOURCE_MAP_TYPE => {
                self.resource_ids = (header.body()..header.end())
                    .step_by(4)
                    .take_while(|at| at + 4 <= header.end())
                    .map(|at| u32_at(self.data, at))
                    .collect::<Result<_, _>>()?;
            }
            RES_XML_START_NAMESPACE_TYPE => {
                let body = self.node_body(&header, 8)?;
                let pool = self.pool(header.start)?;
                let prefix = pool.get_opt(u32_at(self.data, body)?)?.unwrap_or_default();
                let uri = pool
                    .get_opt(u32_at(self.data, body + 4)?)?
                    .unwrap_or_default();
                if !prefix.is_empty() && !self.tree_namespaces.iter().any(|(_, u)| *u == uri) {
                    self.tree_namespaces.push((prefix, uri));
                }
            }
            // element chunks carry resolved URIs, so scope ends need no bookkeeping
            RES_XML_END_NAMESPACE_TYPE => {}
            RES_XML_START_ELEMENT_TYPE => {
                let element = self.start_element(&header)?;
                self.open.push(element);
            }
            RES_XML_END_ELEMENT_TYPE => {
                let element = self.open.pop().ok_or_else(|| DecodeError::MalformedChunk {
                    offset: header.start,
                    reason: "end element without matching start".into(),
                })?;
                match self.open.last_mut() {
                    Some(parent) => parent.children.push(element),
                    None if self.root.is_none() => self.root = Some(element),
                    None => return Err(DecodeError::NotXml("more than one root element".into())),
                }
            }
            RES_XML_CDATA_TYPE => {}
            other => self.warnings.push(DecodeWarning::UnknownChunkType {
                offset: header.start,
                chunk_type: other,
            }),
        }
        Ok(())
    }

    /// Start of a node chunk's extension, checking `ext_len` bytes fit.
    fn node_body(&self, header: &ChunkHeader, ext_len: usize) -> Result<usize, DecodeError> {
        let body = header.body();
        if body + ext_len > header.end() {
            return Err(DecodeError::TruncatedChunk {
                offset: body,
                needed: ext_len,
                available: header.end() - body,
            });
        }
        Ok(body)
    }

    fn start_element(&self, header: &ChunkHeader) -> Result<Element, DecodeError> {
        let data = self.data;
        let body = self.node_body(header, 20)?;
        let pool = self.pool(header.start)?;
        let namespace = pool.get_opt(u32_at(data, body)?)?;
        let local = pool.get(u32_at(data, body + 4)?)?;
        let attr_start = u16_at(data, body + 8)? as usize;
        let attr_size = u16_at(data, body + 10)? as usize;
        let attr_count = u16_at(data, body + 12)? as usize;
        if attr_count > 0 && attr_size < ATTRIBUTE_LEN {
            return Err(DecodeError::MalformedChunk {
                offset: header.start,
                reason: format!("attribute size {attr_size} below {ATTRIBUTE_LEN}"),
            });
        }
        let first = body + attr_start;
        if first + attr_count * attr_size > header.end() {
            return Err(DecodeError::TruncatedChunk {
                offset: first,
                needed: attr_count * attr_size,
                available: header.end().saturating_sub(first),
            });
        }

        let mut element = Element::new(QName { namespace, local });
        for i in 0..attr_count {
            let at = first + i * attr_size;
            let namespace = pool.get_opt(u32_at(data, at)?)?;
            let name_index = u32_at(data, at + 4)?;
            let mut local = pool.get(name_index)?;
            if local.is_empty() {
                if let Some(known) = self.known_attribute(name_index) {
                    local = known.to_string();
                }
            }
            let raw = u32_at(data, at + 8)?;
            let data_type = data[at + 15];
            let value = u32_at(data, at + 16)?;
            let value = self.typed_value(pool, raw, data_type, value)?;
            element.attributes.push(Attribute {
                name: QName { namespace, local },
                value,
            });
        }
        Ok(element)
    }

    fn known_attribute(&self, name_index: u32) -> Option<&'static str> {
        let id = *self.resource_ids.get(name_index as usize)?;
        KNOWN_ATTRIBUTE_IDS
            .iter()
            .find(|(known, _)| *known == id)
            .map(|(_, name)| *name)
    }

    fn typed_value(
        &self,
        pool: &StringPool<'_>,
        raw: u32,
        data_type: u8,
        data: u32,
    ) -> Result<AttrValue, DecodeError> {
        Ok(match data_type {
            TYPE_STRING => AttrValue::String(pool.get(data)?),
            TYPE_NULL => AttrValue::String(pool.get_opt(raw)?.unwrap_or_default()),
            TYPE_REFERENCE | TYPE_ATTRIBUTE | TYPE_DYNAMIC_REFERENCE | TYPE_DYNAMIC_ATTRIBUTE => {
                AttrValue::Reference(data)
            }
            TYPE_INT_BOOLEAN => AttrValue::Bool(data != 0),
            TYPE_FLOAT => AttrValue::String(f32::from_bits(data).to_string()),
            // decimal, hex, colors, dimensions and fractions keep their raw word
            _ => AttrValue::Int(data as i32 as i64),
        })
    }
}

pub fn decode(data: &[u8]) -> Result<Decoded, DecodeError> {
    let file = ChunkHeader::read(data, 0, data.len())?;
    if file.chunk_type != RES_XML_TYPE {
        return Err(DecodeError::NotXml(format!(
            "file chunk type 0x{:04x}",
            file.chunk_type
        )));
    }
    let mut decoder = Decoder {
        data,
        pool: None,
        resource_ids: Vec::new(),
        open: Vec::new(),
        root: None,
        tree_namespaces: Vec::new(),
        warnings: Vec::new(),
    };
    let mut pos = file.body();
    while pos < file.end() {
        let header = ChunkHeader::read(data, pos, file.end())?;
        decoder.chunk(header)?;
        pos = header.end();
    }
    if !decoder.open.is_empty() {
        return Err(DecodeError::MalformedChunk {
            offset: file.end(),
            reason: format!("{} element(s) never closed", decoder.open.len()),
        });
    }
    let root = decoder
        .root
        .ok_or_else(|| DecodeError::NotXml("no root element".into()))?;
    let mut tree = XmlTree::new(root);
    for (prefix, uri) in &decoder.tree_namespaces {
        tree.bind(prefix, uri);
    }
    Ok(Decoded {
        tree,
        warnings: decoder.warnings,
    })
}
