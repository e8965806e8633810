use std::path::{Path, PathBuf};

use manifest_ig::apk::{open_apk, ApkError};
use manifest_ig::axml::{decode_manifest, AttrValue, DecodeError, DecodeWarning, XmlTree};
use manifest_ig::extract_features;
use proptest::prelude::*;

const BINARY_FIXTURES: &[&str] = &[
    "utf8_basic",
    "utf16_basic",
    "nested_filters",
    "multi_namespace",
    "obfuscated_names",
];

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn read(name: &str) -> Vec<u8> {
    std::fs::read(fixture(name)).unwrap()
}

#[test]
fn binary_fixtures_match_golden_text() {
    for name in BINARY_FIXTURES {
        let bytes = read(&format!("{name}.axml"));
        assert!(manifest_ig::axml::is_binary_xml(&bytes));
        let decoded = decode_manifest(&bytes).unwrap();
        let golden = std::fs::read_to_string(fixture(&format!("{name}.golden.xml"))).unwrap();
        assert_eq!(decoded.tree.to_canonical_text(), golden, "{name}");
    }
}

#[test]
fn golden_text_reparses_to_the_binary_tree_modulo_types() {
    // Text carries no types, so compare after rendering both sides.
    for name in BINARY_FIXTURES {
        let binary = decode_manifest(&read(&format!("{name}.axml")))
            .unwrap()
            .tree;
        let text = decode_manifest(&read(&format!("{name}.golden.xml")))
            .unwrap()
            .tree;
        assert_eq!(
            binary.to_canonical_text(),
            text.to_canonical_text(),
            "{name}"
        );
        assert_eq!(extract_features(&binary), extract_features(&text), "{name}");
    }
}

#[test]
fn typed_values_decode() {
    let tree = decode_manifest(&read("utf8_basic.axml")).unwrap().tree;
    let android = Some(manifest_ig::axml::ANDROID_NS);
    assert_eq!(
        tree.root.attr(android, "versionCode"),
        Some(&AttrValue::Int(42))
    );
    let app = tree
        .root
        .children
        .iter()
        .find(|e| e.name.local == "application")
        .unwrap();
    assert_eq!(
        app.attr(android, "label"),
        Some(&AttrValue::Reference(0x7f0b0001))
    );
    let activity = &app.children[0];
    assert_eq!(
        activity.attr(android, "exported"),
        Some(&AttrValue::Bool(true))
    );

    let tree = decode_manifest(&read("utf16_basic.axml")).unwrap().tree;
    assert_eq!(
        tree.root.attr(android, "versionCode"),
        Some(&AttrValue::Int(-2))
    );
    let app = &tree.root.children[2];
    assert_eq!(
        app.attr(android, "label"),
        Some(&AttrValue::String("Café ☕ \u{1F600}".into()))
    );
}

#[test]
fn unknown_chunk_is_skipped_with_warning() {
    let decoded = decode_manifest(&read("obfuscated_names.axml")).unwrap();
    assert_eq!(decoded.warnings.len(), 1);
    assert!(matches!(
        decoded.warnings[0],
        DecodeWarning::UnknownChunkType {
            chunk_type: 0x0777,
            ..
        }
    ));
}

#[test]
fn truncated_fixture() {
    let err = decode_manifest(&read("truncated.axml")).unwrap_err();
    assert!(matches!(err, DecodeError::TruncatedChunk { .. }), "{err:?}");
}

#[test]
fn string_index_out_of_range() {
    let mut bytes = read("utf8_basic.axml");
    // first start-element chunk: its name index lives 20 bytes past the chunk start
    let at = bytes
        .windows(4)
        .position(|w| w == [0x02, 0x01, 0x10, 0x00])
        .unwrap();
    bytes[at + 20..at + 24].copy_from_slice(&0x7fff_0000u32.to_le_bytes());
    let err = decode_manifest(&bytes).unwrap_err();
    assert!(
        matches!(
            err,
            DecodeError::StringIndexOutOfRange {
                index: 0x7fff_0000,
                ..
            }
        ),
        "{err:?}"
    );
}

#[test]
fn plain_fixture_round_trips() {
    let tree = decode_manifest(&read("plain_manifest.xml")).unwrap().tree;
    let again = decode_manifest(tree.to_canonical_text().as_bytes())
        .unwrap()
        .tree;
    assert_eq!(tree, again);
    assert_eq!(tree.to_canonical_text(), again.to_canonical_text());
}

#[test]
fn stored_apk_returns_exact_entry() {
    let (bytes, source) = open_apk(fixture("stored.apk")).unwrap();
    assert_eq!(bytes, read("utf8_basic.axml"));
    let raw = read("stored.apk");
    assert_eq!(source.size_bytes, raw.len() as u64);
    assert_eq!(source.sha256, manifest_ig::apk::sha256_hex(&raw));
    assert_eq!(source.path, fixture("stored.apk"));
}

#[test]
fn deflated_apk_matches_golden() {
    let (bytes, _) = open_apk(fixture("deflated.apk")).unwrap();
    assert_eq!(bytes, read("deflated.manifest.golden"));
}

#[test]
fn apk_errors_name_the_file() {
    let err = open_apk(fixture("no_manifest.apk")).unwrap_err();
    assert!(matches!(err, ApkError::NoManifestEntry { .. }));
    assert_eq!(err.path(), fixture("no_manifest.apk"));
    assert!(err.to_string().contains("no_manifest.apk"));

    let err = open_apk(fixture("corrupt.apk")).unwrap_err();
    assert_eq!(err.kind(), "NotAZip");
    assert!(err.to_string().contains("corrupt.apk"));

    let err = open_apk(fixture("missing.apk")).unwrap_err();
    assert_eq!(err.kind(), "Io");
}

#[test]
fn damaged_deflate_stream() {
    let mut bytes = read("deflated.apk");
    // scribble over the compressed manifest payload, which follows its local header
    let name = b"AndroidManifest.xml";
    let at = bytes.windows(name.len()).position(|w| w == name).unwrap() + name.len();
    for b in &mut bytes[at..at + 40] {
        *b = 0xff;
    }
    let err = manifest_ig::apk::manifest_from_zip(Path::new("d.apk"), &bytes).unwrap_err();
    assert_eq!(err.kind(), "DecompressionFailure", "{err}");
}

fn check_tree(tree: &XmlTree) {
    let features = extract_features(tree);
    assert!(features.permissions.iter().all(|p| !p.is_empty()));
    assert!(features.intents.iter().all(|i| !i.is_empty()));
    // rendering resolves every name and value without panicking
    let _ = tree.to_canonical_text();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn random_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
        if let Ok(decoded) = decode_manifest(&bytes) {
            check_tree(&decoded.tree);
        }
    }

    #[test]
    fn mutated_fixtures_never_panic(
        which in 0..BINARY_FIXTURES.len(),
        edits in proptest::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..8),
        cut in any::<prop::sample::Index>(),
        truncate in any::<bool>(),
    ) {
        let mut bytes = read(&format!("{}.axml", BINARY_FIXTURES[which]));
        for (idx, value) in edits {
            let i = idx.index(bytes.len());
            bytes[i] = value;
        }
        if truncate {
            bytes.truncate(cut.index(bytes.len()));
        }
        if let Ok(decoded) = decode_manifest(&bytes) {
            check_tree(&decoded.tree);
        }
    }

    #[test]
    fn mutated_archives_never_panic(
        which in 0..2usize,
        edits in proptest::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..8),
        cut in any::<prop::sample::Index>(),
        truncate in any::<bool>(),
    ) {
        let mut bytes = read(["stored.apk", "deflated.apk"][which]);
        for (idx, value) in edits {
            let i = idx.index(bytes.len());
            bytes[i] = value;
        }
        if truncate {
            bytes.truncate(cut.index(bytes.len()));
        }
        if let Ok(manifest) = manifest_ig::apk::manifest_from_zip(Path::new("m.apk"), &bytes) {
            if let Ok(decoded) = decode_manifest(&manifest) {
                check_tree(&decoded.tree);
            }
        }
    }
}
