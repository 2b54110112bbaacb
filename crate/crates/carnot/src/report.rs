//! Run reports: input digests, structured verdicts, wall time and version,
//! with deterministic JSON and a plain-text table rendering.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One CLI invocation's outcome. Identical inputs, seed and version yield
/// byte-identical reports except for `wall_time_ms`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    /// input path → sha256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub verdicts: serde_json::Value,
    pub wall_time_ms: f64,
    pub tool_version: String,
}

impl RunReport {
    pub fn new(
        command: String,
        inputs: BTreeMap<String, String>,
        verdicts: serde_json::Value,
        wall_time_ms: f64,
    ) -> RunReport {
        RunReport {
            command,
            inputs,
            verdicts,
            wall_time_ms,
            tool_version: TOOL_VERSION.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Flat `key: value` rendering for `--format table`.
    pub fn render_table(&self) -> String {
        let mut lines = vec![format!("command: {}", self.command)];
        for (path, digest) in &self.inputs {
            lines.push(format!("input {path}: sha256 {digest}"));
        }
        flatten_value("verdict", &self.verdicts, &mut lines);
        lines.push(format!("wall_time_ms: {}", self.wall_time_ms));
        lines.push(format!("tool_version: {}", self.tool_version));
        lines.join("\n") + "\n"
    }
}

fn flatten_value(prefix: &str, v: &serde_json::Value, out: &mut Vec<String>) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, val) in map {
                flatten_value(&format!("{prefix} {k}"), val, out);
            }
        }
        serde_json::Value::Array(items) => {
            // Scalar rows print inline; nested structures recurse.
            if items.iter().all(|i| !i.is_object() && !i.is_array()) {
                let row: Vec<String> = items.iter().map(render_scalar).collect();
                out.push(format!("{prefix}: [{}]", row.join(", ")));
            } else {
                for (n, item) in items.iter().enumerate() {
                    flatten_value(&format!("{prefix}[{n}]"), item, out);
                }
            }
        }
        other => out.push(format!("{prefix}: {}", render_scalar(other))),
    }
}

fn render_scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn digest_file(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        RunReport::new(
            "algebra check a.json".into(),
            BTreeMap::from([("a.json".into(), "abc123".into())]),
            serde_json::json!({"jacobi": "ok", "dims": [3, 1, 0], "nested": {"x": 1}}),
            2.5,
        )
    }

    #[test]
    fn json_is_deterministic() {
        assert_eq!(sample().to_json(), sample().to_json());
        let parsed: RunReport = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(parsed.command, "algebra check a.json");
        assert_eq!(parsed.tool_version, TOOL_VERSION);
    }

    #[test]
    fn table_flattens_verdicts() {
        let table = sample().render_table();
        assert!(table.contains("verdict jacobi: ok"));
        assert!(table.contains("verdict dims: [3, 1, 0]"));
        assert!(table.contains("verdict nested x: 1"));
        assert!(table.contains("input a.json: sha256 abc123"));
    }

    #[test]
    fn digest_matches_sha256() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.txt");
        std::fs::write(&path, b"carnot").unwrap();
        // sha256("carnot")
        assert_eq!(
            digest_file(&path).unwrap(),
            "9c2b977bf0a4ebcfc75c19e9f996a739af114684cb2c965216f4c1994a109803"
        );
    }
}
