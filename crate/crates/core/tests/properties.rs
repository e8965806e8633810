use std::collections::BTreeMap;

use manifest_ig::features::VocabEntry;
use manifest_ig::{
    assemble_dataset, decode_manifest, extract_features, information_gain, rank_features, Category,
    ClassLabel, Dataset, LabeledRecord, ManifestFeatures,
};
use proptest::prelude::*;

/// Direct evaluation of the definitions: split by each feature value, count
/// classes in each subset, weight subset entropies by subset size.
fn oracle_ig(labels: &[bool], column: &[bool]) -> f64 {
    fn h(counts: &[usize]) -> f64 {
        let total: usize = counts.iter().sum();
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / total as f64;
                -p * p.ln() / std::f64::consts::LN_2
            })
            .sum()
    }
    let n = labels.len();
    let all = [
        labels.iter().filter(|&&m| m).count(),
        labels.iter().filter(|&&m| !m).count(),
    ];
    let mut conditional = 0.0;
    for x in [false, true] {
        let subset: Vec<bool> = labels
            .iter()
            .zip(column)
            .filter(|(_, &v)| v == x)
            .map(|(&l, _)| l)
            .collect();
        if subset.is_empty() {
            continue;
        }
        let counts = [
            subset.iter().filter(|&&m| m).count(),
            subset.iter().filter(|&&m| !m).count(),
        ];
        conditional += subset.len() as f64 / n as f64 * h(&counts);
    }
    h(&all) - conditional
}

fn label(malware: bool) -> ClassLabel {
    if malware {
        ClassLabel::Malware
    } else {
        ClassLabel::Benign
    }
}

fn dataset(labels: &[bool], columns: &[Vec<bool>]) -> Dataset {
    let labels: Vec<_> = labels.iter().map(|&m| label(m)).collect();
    let features: Vec<_> = (0..columns.len())
        .map(|j| {
            (
                format!("f{j:02}"),
                if j % 2 == 0 {
                    Category::Permission
                } else {
                    Category::Intent
                },
            )
        })
        .collect();
    Dataset::from_columns(&labels, &features, columns).unwrap()
}

fn small_dataset() -> impl Strategy<Value = (Vec<bool>, Vec<Vec<bool>>)> {
    (1usize..=12, 1usize..=8).prop_flat_map(|(n, f)| {
        (
            proptest::collection::vec(any::<bool>(), n),
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), n), f),
        )
    })
}

proptest! {
    #[test]
    fn ig_matches_oracle_and_bounds((labels, columns) in small_dataset()) {
        let ds = dataset(&labels, &columns);
        for (j, column) in columns.iter().enumerate() {
            let score = information_gain(&ds, &ds.column(j)).unwrap();
            prop_assert!((score.ig - oracle_ig(&labels, column)).abs() < 1e-12);
            prop_assert!(score.ig >= -1e-12);
            prop_assert!(score.ig <= score.h_dataset + 1e-12);
            prop_assert!(score.h_dataset <= 1.0 + 1e-12);
            prop_assert!((score.ig - (score.h_dataset - score.h_conditional)).abs() < 1e-12);
        }
    }

    #[test]
    fn ig_symmetries((labels, columns) in small_dataset()) {
        let ds = dataset(&labels, &columns);
        let swapped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let flipped: Vec<Vec<bool>> = columns.iter().map(|c| c.iter().map(|b| !b).collect()).collect();
        let ds_swapped = dataset(&swapped, &columns);
        let ds_flipped = dataset(&labels, &flipped);
        for j in 0..columns.len() {
            let base = information_gain(&ds, &ds.column(j)).unwrap().ig;
            let s = information_gain(&ds_swapped, &ds_swapped.column(j)).unwrap().ig;
            let f = information_gain(&ds_flipped, &ds_flipped.column(j)).unwrap().ig;
            prop_assert!((base - s).abs() < 1e-12);
            prop_assert!((base - f).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_and_indicator_columns(labels in proptest::collection::vec(any::<bool>(), 1..=12), value in any::<bool>()) {
        let constant = vec![value; labels.len()];
        let ds = dataset(&labels, &[constant, labels.clone()]);
        let c = information_gain(&ds, &ds.column(0)).unwrap();
        prop_assert_eq!(c.ig, 0.0);
        let i = information_gain(&ds, &ds.column(1)).unwrap();
        prop_assert_eq!(i.ig, i.h_dataset);
    }

    #[test]
    fn ranking_ignores_instance_order((labels, columns) in small_dataset(), rot in 0usize..12) {
        let n = labels.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let labels2: Vec<bool> = perm.iter().map(|&i| labels[i]).collect();
        let columns2: Vec<Vec<bool>> = columns.iter().map(|c| perm.iter().map(|&i| c[i]).collect()).collect();
        let a = rank_features(&dataset(&labels, &columns)).unwrap();
        let b = rank_features(&dataset(&labels2, &columns2)).unwrap();
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}

// ---------------------------------------------------------------- extraction

#[derive(Debug, Clone)]
enum Node {
    Permission(String),
    Filter(Vec<(bool, String)>),
}

fn render(nodes: &[Node]) -> String {
    let mut s = String::from(
        r#"<manifest xmlns:android="http://schemas.android.com/apk/res/android" package="p"><application>"#,
    );
    let mut perms = String::new();
    for node in nodes {
        match node {
            Node::Permission(p) => {
                perms.push_str(&format!(r#"<uses-permission android:name="{p}"/>"#))
            }
            Node::Filter(items) => {
                s.push_str("<receiver><intent-filter>");
                for (is_action, name) in items {
                    let tag = if *is_action { "action" } else { "category" };
                    s.push_str(&format!(r#"<{tag} android:name="{name}"/>"#));
                }
                s.push_str("</intent-filter></receiver>");
            }
        }
    }
    s.push_str("</application>");
    s.push_str(&perms);
    s.push_str("</manifest>");
    s
}

fn name() -> impl Strategy<Value = String> {
    "[a-z]{1,3}\\.[A-Z_]{1,4}"
}

fn node() -> impl Strategy<Value = Node> {
    prop_oneof![
        name().prop_map(Node::Permission),
        proptest::collection::vec((any::<bool>(), name()), 0..4).prop_map(Node::Filter),
    ]
}

proptest! {
    #[test]
    fn extraction_ignores_sibling_order(nodes in proptest::collection::vec(node(), 0..10), rot in 0usize..10) {
        let mut permuted = nodes.clone();
        if !permuted.is_empty() {
            let k = rot % permuted.len();
            permuted.rotate_left(k);
        }
        permuted.reverse();
        for n in permuted.iter_mut() {
            if let Node::Filter(items) = n {
                items.reverse();
            }
        }
        let a = extract_features(&decode_manifest(render(&nodes).as_bytes()).unwrap().tree);
        let b = extract_features(&decode_manifest(render(&permuted).as_bytes()).unwrap().tree);
        prop_assert_eq!(&a, &b);
        prop_assert!(a.permissions.iter().chain(&a.intents).all(|s| !s.is_empty()));
    }

    #[test]
    fn canonical_text_round_trips(nodes in proptest::collection::vec(node(), 0..10)) {
        let tree = decode_manifest(render(&nodes).as_bytes()).unwrap().tree;
        let text = tree.to_canonical_text();
        let again = decode_manifest(text.as_bytes()).unwrap().tree;
        prop_assert_eq!(&tree, &again);
        prop_assert_eq!(text, again.to_canonical_text());
    }
}

// ---------------------------------------------------------------- feature model

fn record() -> impl Strategy<Value = (bool, ManifestFeatures)> {
    (
        any::<bool>(),
        proptest::collection::btree_set("perm\\.[A-D]", 0..4),
        proptest::collection::btree_set("intent\\.[A-D]", 0..4),
    )
        .prop_map(|(m, permissions, intents)| {
            (
                m,
                ManifestFeatures {
                    app_id: String::new(),
                    permissions,
                    intents,
                },
            )
        })
}

proptest! {
    #[test]
    fn assembly_ignores_record_order(records in proptest::collection::vec(record(), 1..12), rot in 0usize..12) {
        let labeled: Vec<LabeledRecord> = records
            .iter()
            .enumerate()
            .map(|(i, (m, f))| LabeledRecord { sha256: format!("{i:04}"), label: label(*m), features: f.clone() })
            .collect();
        let mut shuffled = labeled.clone();
        let k = rot % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();

        let a = assemble_dataset(&labeled).unwrap();
        let b = assemble_dataset(&shuffled).unwrap();
        let entries = |d: &Dataset| d.vocabulary().entries().to_vec();
        prop_assert_eq!(entries(&a), entries(&b));
        let names: Vec<&VocabEntry> = a.vocabulary().entries().iter().collect();
        prop_assert!(names.windows(2).all(|w| w[0].name < w[1].name));

        let by_sha = |d: &Dataset| -> BTreeMap<String, Vec<bool>> {
            d.instances().iter().map(|i| (i.sha256.clone(), i.vector.iter().by_vals().collect())).collect()
        };
        prop_assert_eq!(by_sha(&a), by_sha(&b));

        // row and column views agree
        let rows: usize = a.instances().iter().map(|i| i.vector.count_ones()).sum();
        let cols: usize = (0..a.vocabulary().len()).map(|j| a.column(j).support()).sum();
        prop_assert_eq!(rows, cols);

        let counts = a.class_counts();
        prop_assert_eq!(counts.total() as usize, a.len());
        prop_assert_eq!(counts.malware as usize, records.iter().filter(|(m, _)| *m).count());
    }
}
