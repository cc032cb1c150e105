use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hragent_core::engine::EngineConfig;
use hragent_core::schema::{parse_schema, TaskSchema};
use serde::{Deserialize, Serialize};

pub const CONFIG_ENV: &str = "HRAGENT_CONFIG";
pub const BACKEND_URL_ENV: &str = "HRAGENT_BACKEND_URL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub schema_dir: PathBuf,
    pub engine: EngineConfig,
    /// Remote model host. Unset keeps every call local.
    pub backend_url: Option<String>,
    pub backend_timeout_ms: u64,
    /// Per-session event logs. Unset keeps sessions in memory only.
    pub persistence_dir: Option<PathBuf>,
    /// Where stub task handlers write their audit records.
    pub audit_dir: Option<PathBuf>,
    pub idle_timeout_secs: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".parse().expect("valid address"),
            schema_dir: PathBuf::from("schemas"),
            engine: EngineConfig::default(),
            backend_url: None,
            backend_timeout_ms: hragent_core::backends::remote::DEFAULT_TIMEOUT_MS,
            persistence_dir: None,
            audit_dir: None,
            idle_timeout_secs: 30 * 60,
        }
    }
}

impl ServiceConfig {
    /// Reads `path` (or `$HRAGENT_CONFIG`), then applies `$HRAGENT_BACKEND_URL`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let path = path.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => Self::default(),
        };
        if let Ok(url) = std::env::var(BACKEND_URL_ENV) {
            if !url.trim().is_empty() {
                cfg.backend_url = Some(url);
            }
        }
        cfg.engine.validate().map_err(|e| anyhow::anyhow!(e))?;
        Ok(cfg)
    }
}

/// Every `*.json` schema in `dir`, keyed by schema id.
pub fn load_schemas(dir: &Path) -> Result<BTreeMap<String, TaskSchema>> {
    let mut out = BTreeMap::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading schema directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    for p in paths {
        let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        let schema = parse_schema(&text).with_context(|| format!("schema {}", p.display()))?;
        if out.contains_key(&schema.id) {
            anyhow::bail!("duplicate schema id `{}` in {}", schema.id, p.display());
        }
        out.insert(schema.id.clone(), schema);
    }
    Ok(out)
}
