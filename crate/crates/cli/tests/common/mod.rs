#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_manifest-ig"));
    cmd.env_remove("MANIFEST_IG_CACHE")
        .env_remove("SOURCE_DATE_EPOCH");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

pub fn manifest(package: &str, permissions: &[&str], intents: &[&str]) -> String {
    let mut s = format!(
        "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n\
         <manifest xmlns:android=\"http://schemas.android.com/apk/res/android\" package=\"{package}\">\n"
    );
    for p in permissions {
        s.push_str(&format!("  <uses-permission android:name=\"{p}\"/>\n"));
    }
    s.push_str("  <application>\n    <activity android:name=\".Main\">\n      <intent-filter>\n");
    for i in intents {
        let tag = if i.contains(".category.") {
            "category"
        } else {
            "action"
        };
        s.push_str(&format!("        <{tag} android:name=\"{i}\"/>\n"));
    }
    s.push_str("      </intent-filter>\n    </activity>\n  </application>\n</manifest>\n");
    s
}

/// Writes one manifest file per app under `dir`, named by index.
pub fn write_corpus(dir: &Path, apps: &[(Vec<String>, Vec<String>)]) {
    std::fs::create_dir_all(dir).unwrap();
    for (i, (perms, intents)) in apps.iter().enumerate() {
        let perms: Vec<&str> = perms.iter().map(String::as_str).collect();
        let intents: Vec<&str> = intents.iter().map(String::as_str).collect();
        let package = format!("app.{}.n{i}", dir.file_name().unwrap().to_string_lossy());
        std::fs::write(
            dir.join(format!("{i:04}.xml")),
            manifest(&package, &perms, &intents),
        )
        .unwrap();
    }
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

pub fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}
