//! Run manifests and the files written next to them.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
/// Wall-clock timings. Not part of the manifest, so reruns stay byte-identical.
pub const TIMING_FILE: &str = "timing.json";

/// How per-trial generators derive from the master seed.
#[derive(Clone, Debug, Serialize)]
pub struct TrialStreams {
    pub generator: &'static str,
    pub master_seed: u64,
    /// Trial `t` uses stream id `t`.
    pub construction: &'static str,
    pub first_trial: u64,
    pub count: u64,
}

impl TrialStreams {
    pub fn new(master_seed: u64, count: usize) -> Self {
        TrialStreams {
            generator: "ChaCha8Rng",
            master_seed,
            construction: "seed_from_u64(master_seed) then set_stream(trial)",
            first_trial: 0,
            count: count as u64,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AbortCounts {
    pub trials: usize,
    pub truncated: usize,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub streams: Option<TrialStreams>,
    pub aborts: Option<AbortCounts>,
    pub outputs: Vec<String>,
}

pub enum Content {
    /// Gets a top-level `manifest_hash` key.
    Json(Value),
    /// Gets a leading `# manifest_hash=...` line.
    Text(String),
}

/// Outputs of one command, written only once all of them exist.
pub struct Bundle {
    pub command: &'static str,
    pub streams: Option<TrialStreams>,
    pub aborts: Option<AbortCounts>,
    pub files: Vec<(String, Content)>,
    pub timing: BTreeMap<String, f64>,
}

impl Bundle {
    pub fn new(command: &'static str) -> Self {
        Bundle { command, streams: None, aborts: None, files: Vec::new(), timing: BTreeMap::new() }
    }

    pub fn json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) -> Result<(), CliError> {
        let v = serde_json::to_value(value).map_err(|e| CliError::Output(e.to_string()))?;
        self.files.push((name.into(), Content::Json(v)));
        Ok(())
    }

    pub fn text(&mut self, name: impl Into<String>, text: String) {
        self.files.push((name.into(), Content::Text(text)));
    }
}

/// Config echo without the output directory, which does not affect results.
fn config_echo(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let mut v = serde_json::to_value(cfg).map_err(|e| CliError::Output(e.to_string()))?;
    if let Some(out) = v.get_mut("output").and_then(Value::as_object_mut) {
        out.remove("path");
    }
    Ok(v)
}

pub fn manifest_hash(manifest: &Manifest) -> Result<String, CliError> {
    let bytes = serde_json::to_vec(manifest).map_err(|e| CliError::Output(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn pretty(v: &Value) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| CliError::Output(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

/// Writes every file of `bundle` plus the manifest and timing sidecar into
/// `dir`. Returns the manifest hash.
pub fn write_bundle(dir: &Path, cfg: &ExperimentConfig, bundle: Bundle) -> Result<String, CliError> {
    let manifest = Manifest {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: bundle.command.to_string(),
        config: config_echo(cfg)?,
        streams: bundle.streams,
        aborts: bundle.aborts,
        outputs: bundle.files.iter().map(|(n, _)| n.clone()).collect(),
    };
    let hash = manifest_hash(&manifest)?;
    fs::create_dir_all(dir)?;
    for (name, content) in bundle.files {
        let path = dir.join(&name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let bytes = match content {
            Content::Json(Value::Object(mut map)) => {
                map.insert("manifest_hash".into(), Value::String(hash.clone()));
                pretty(&Value::Object(map))?
            }
            Content::Json(other) => pretty(&serde_json::json!({ "manifest_hash": hash, "data": other }))?,
            Content::Text(t) => format!("# manifest_hash={hash}\n{t}").into_bytes(),
        };
        fs::write(path, bytes)?;
    }
    let m = serde_json::json!({ "manifest_hash": hash, "manifest": manifest });
    fs::write(dir.join(MANIFEST_FILE), pretty(&m)?)?;
    let t = serde_json::json!({ "manifest_hash": hash, "seconds": bundle.timing });
    fs::write(dir.join(TIMING_FILE), pretty(&t)?)?;
    Ok(hash)
}

/// Flattens a JSON report into `key,value` rows with dotted keys.
pub fn flatten_csv(v: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut String) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    walk(&join(prefix, k), x, out);
                }
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&join(prefix, &i.to_string()), x, out);
                }
            }
            Value::String(s) => out.push_str(&format!("{prefix},{s}\n")),
            other => out.push_str(&format!("{prefix},{other}\n")),
        }
    }
    fn join(a: &str, b: &str) -> String {
        if a.is_empty() {
            b.to_string()
        } else {
            format!("{a}.{b}")
        }
    }
    let mut out = String::from("key,value\n");
    walk("", v, &mut out);
    out
}
