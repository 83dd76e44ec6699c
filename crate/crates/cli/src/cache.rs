use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::job::JobSpec;

static WRITES: AtomicU64 = AtomicU64::new(0);

/// Content-addressed store of report documents keyed by job and code version.
pub struct Cache {
    dir: PathBuf,
    version: String,
}

impl Cache {
    pub fn new(dir: PathBuf, version: &str) -> Self {
        Self { dir, version: version.to_string() }
    }

    pub fn key(&self, spec: &JobSpec) -> String {
        let payload = json!({ "version": self.version, "job": spec });
        hex::encode(Sha256::digest(payload.to_string().as_bytes()))
    }

    fn path(&self, spec: &JobSpec) -> PathBuf {
        self.dir.join(format!("{}.json", self.key(spec)))
    }

    pub fn load(&self, spec: &JobSpec) -> Option<Value> {
        let path = self.path(spec);
        let text = std::fs::read_to_string(&path).ok()?;
        match serde_json::from_str::<Value>(&text) {
            Ok(entry) if entry["version"] == self.version.as_str() && entry["job"] == json!(spec) => {
                Some(entry["document"].clone())
            }
            Ok(_) => None,
            Err(e) => {
                eprintln!("warning: ignoring corrupt cache entry {}: {e}", path.display());
                None
            }
        }
    }

    pub fn store(&self, spec: &JobSpec, doc: &Value) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let entry = json!({ "version": self.version, "job": spec, "document": doc });
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
        let seq = WRITES.fetch_add(1, Ordering::Relaxed);
        let tmp = self.dir.join(format!(".{}.{}.{seq}.{nanos}.tmp", self.key(spec), std::process::id()));
        std::fs::write(&tmp, serde_json::to_string(&entry)?)?;
        std::fs::rename(&tmp, self.path(spec))
    }
}
