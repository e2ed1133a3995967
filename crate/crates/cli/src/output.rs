//! Atomic artifact writes: content goes to a temporary file in the target
//! directory and is renamed into place only once complete.

use std::io::{self, Write};
use std::path::Path;
use std::time::Duration;

/// Test hook: pause between writing the temporary file and renaming it.
const DELAY_ENV: &str = "CMA_PERSIST_DELAY_MS";

pub fn write_atomic(dir: &Path, name: &str, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
    let mut tmp = tempfile::Builder::new().prefix(".partial-").tempfile_in(dir)?;
    {
        let mut w = io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    if let Some(ms) = std::env::var(DELAY_ENV).ok().and_then(|v| v.parse::<u64>().ok()) {
        std::thread::sleep(Duration::from_millis(ms));
    }
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

/// `key=value` lines in insertion order.
#[derive(Debug, Clone, Default)]
pub struct Record {
    entries: Vec<(String, serde_json::Value)>,
}

impl Record {
    pub fn push(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.entries.push((key.to_string(), value.into()));
    }

    pub fn get(&self, key: &str) -> Option<&serde_json::Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let v = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(x) => match x.as_f64() {
                    Some(f) if !x.is_i64() && !x.is_u64() => cma::io::fmt_f64(f),
                    _ => x.to_string(),
                },
                other => other.to_string(),
            };
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(self.entries.iter().cloned().collect())
    }
}
