use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use dmmd::pipeline::{AdaptConfig, Preset};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tasks: Vec<Task>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub name: String,
    pub source: PathBuf,
    pub target: PathBuf,
    #[serde(default)]
    pub truth: Option<PathBuf>,
    /// Config fields by their JSON name, plus `"preset": "small" | "large"`.
    #[serde(default)]
    pub overrides: Map<String, Value>,
}

impl RunManifest {
    /// Reads the manifest and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let mut m: RunManifest = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        if m.tasks.is_empty() {
            return Err(Failure::Usage(format!("{}: no tasks", path.display())));
        }
        let mut seen = HashSet::new();
        for t in &m.tasks {
            if t.name.is_empty() || t.name.contains(['/', '\\']) {
                return Err(Failure::Usage(format!("invalid task name {:?}", t.name)));
            }
            if !seen.insert(t.name.clone()) {
                return Err(Failure::Usage(format!("duplicate task name {:?}", t.name)));
            }
        }
        let base = path.parent().unwrap_or(Path::new("."));
        for t in &mut m.tasks {
            for p in [Some(&mut t.source), Some(&mut t.target), t.truth.as_mut()].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(m)
    }
}

impl Task {
    pub fn config(&self, base: &AdaptConfig) -> Result<AdaptConfig, Failure> {
        let bad = |msg: String| Failure::Usage(format!("task {:?}: {msg}", self.name));
        let mut cfg = base.clone();
        if let Some(p) = self.overrides.get("preset") {
            let preset: Preset = serde_json::from_value(p.clone()).map_err(|e| bad(e.to_string()))?;
            cfg = cfg.with_preset(preset);
        }
        let mut value = serde_json::to_value(&cfg).expect("config serializes");
        let fields = value.as_object_mut().expect("config is an object");
        for (key, v) in &self.overrides {
            if key == "preset" {
                continue;
            }
            if !fields.contains_key(key) {
                return Err(bad(format!("unknown config field {key:?}")));
            }
            fields.insert(key.clone(), v.clone());
        }
        serde_json::from_value(value).map_err(|e| bad(e.to_string()))
    }
}
