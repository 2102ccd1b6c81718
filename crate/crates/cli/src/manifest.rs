//! Run manifest: config echo, code version and per-command results. The
//! manifest file itself contains only deterministic fields, so re-running
//! with the same config and seed yields byte-identical manifests regardless
//! of worker count; wall-clock timings go to a sidecar file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use skewsim_core::RawConfig;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: RawConfig,
    pub results: serde_json::Value,
    pub pass: bool,
    pub outputs: Vec<String>,
    /// Wall-clock timings in milliseconds; serialized to `timings.json`,
    /// never into the manifest itself.
    #[serde(skip)]
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, config: RawConfig, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            results: serde_json::Value::Null,
            pass: true,
            outputs: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn time<T>(&mut self, label: &str, body: impl FnOnce() -> T) -> T {
        let t0 = std::time::Instant::now();
        let out = body();
        self.timings_ms.insert(label.to_string(), t0.elapsed().as_secs_f64() * 1e3);
        out
    }

    /// Writes `manifest.json` (deterministic) and `timings.json` (sidecar).
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut manifest = serde_json::to_string_pretty(self)?;
        manifest.push('\n');
        std::fs::write(dir.join("manifest.json"), manifest)?;
        let mut timings = serde_json::to_string_pretty(&self.timings_ms)?;
        timings.push('\n');
        std::fs::write(dir.join("timings.json"), timings)?;
        Ok(())
    }
}
