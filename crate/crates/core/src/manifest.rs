use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::axml::{Element, XmlTree, ANDROID_NS};

const PERMISSION_ELEMENTS: &[&str] = &["uses-permission", "uses-permission-sdk-23"];
const INTENT_ELEMENTS: &[&str] = &["action", "category"];

/// Permission and intent names declared by one app.
///
/// `intents` is the union of intent-filter action and category names. Names
/// are kept verbatim, vendor-specific ones included.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFeatures {
    pub app_id: String,
    pub permissions: BTreeSet<String>,
    pub intents: BTreeSet<String>,
}

impl ManifestFeatures {
    pub fn is_empty(&self) -> bool {
        self.permissions.is_empty() && self.intents.is_empty()
    }
}

pub fn is_manifest(tree: &XmlTree) -> bool {
    tree.root.name.is(None, "manifest")
}

fn android_name(el: &Element) -> Option<&str> {
    el.attr(Some(ANDROID_NS), "name")
        .and_then(|v| v.as_str())
        .filter(|s| !s.is_empty())
}

pub fn extract_features(tree: &XmlTree) -> ManifestFeatures {
    let mut features = ManifestFeatures {
        app_id: tree
            .root
            .attr(None, "package")
            .map(|v| v.to_string())
            .unwrap_or_default(),
        ..Default::default()
    };
    for (parent, el) in tree.root.walk() {
        if el.name.namespace.is_some() {
            continue;
        }
        let local = el.name.local.as_str();
        if PERMISSION_ELEMENTS.contains(&local) {
            if let Some(name) = android_name(el) {
                features.permissions.insert(name.to_string());
            }
        } else if INTENT_ELEMENTS.contains(&local)
            && parent.is_some_and(|p| p.name.is(None, "intent-filter"))
        {
            if let Some(name) = android_name(el) {
                features.intents.insert(name.to_string());
            }
        }
    }
    features
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axml::decode_manifest;

    fn features(src: &str) -> ManifestFeatures {
        extract_features(&decode_manifest(src.as_bytes()).unwrap().tree)
    }

    #[test]
    fn single_permission() {
        let f = features(
            r#"<manifest package="a.b"><uses-permission android:name="android.permission.INTERNET"/></manifest>"#,
        );
        assert_eq!(f.app_id, "a.b");
        assert_eq!(
            f.permissions.iter().collect::<Vec<_>>(),
            ["android.permission.INTERNET"]
        );
        assert!(f.intents.is_empty());
    }

    #[test]
    fn intent_filter_actions_and_categories() {
        let f = features(
            r#"<manifest xmlns:android="http://schemas.android.com/apk/res/android" package="p">
                 <application>
                   <receiver android:name=".Boot">
                     <intent-filter>
                       <action android:name="android.intent.action.BOOT_COMPLETED"/>
                       <category android:name="android.intent.category.HOME"/>
                     </intent-filter>
                   </receiver>
                 </application>
               </manifest>"#,
        );
        assert_eq!(
            f.intents.iter().collect::<Vec<_>>(),
            [
                "android.intent.action.BOOT_COMPLETED",
                "android.intent.category.HOME"
            ]
        );
        assert!(f.permissions.is_empty());
    }

    #[test]
    fn duplicate_permission_counted_once() {
        let f = features(
            r#"<manifest><uses-permission android:name="android.permission.SEND_SMS"/>
               <uses-permission-sdk-23 android:name="android.permission.SEND_SMS"/></manifest>"#,
        );
        assert_eq!(f.permissions.len(), 1);
        assert_eq!(f.app_id, "");
    }

    #[test]
    fn actions_outside_intent_filters_are_ignored() {
        let f = features(
            r#"<manifest><action android:name="x.A"/><intent-filter><action android:name="x.B"/>
               <category name="no.namespace"/><data android:name="x.C"/></intent-filter></manifest>"#,
        );
        assert_eq!(f.intents.iter().collect::<Vec<_>>(), ["x.B"]);
    }

    #[test]
    fn vendor_names_kept_verbatim() {
        let f = features(
            r#"<manifest><service><intent-filter>
               <action android:name="cn.jpush.android.intent.NOTIFICATION_RECEIVED_PROXY"/>
               <action android:name="com.google.android.c1dm.intent.RECEIVE"/>
               </intent-filter></service><uses-permission android:name="com.Vendor.PERM"/></manifest>"#,
        );
        assert!(f
            .intents
            .contains("cn.jpush.android.intent.NOTIFICATION_RECEIVED_PROXY"));
        assert!(f.intents.contains("com.google.android.c1dm.intent.RECEIVE"));
        assert!(f.permissions.contains("com.Vendor.PERM"));
    }

    #[test]
    fn empty_manifest() {
        let f = features("<manifest/>");
        assert!(f.is_empty());
        assert!(is_manifest(&decode_manifest(b"<manifest/>").unwrap().tree));
        assert!(!is_manifest(
            &decode_manifest(b"<resources/>").unwrap().tree
        ));
    }
}
