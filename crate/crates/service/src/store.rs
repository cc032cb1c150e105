//! Append-only JSON-lines event log, one file per session. Every event
//! carries the full session snapshot, so replay only needs the last line.

use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use hragent_core::engine::SessionSnapshot;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Created,
    Message,
    Confirm,
    Expired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub kind: EventKind,
    pub at: DateTime<Utc>,
    pub snapshot: SessionSnapshot,
}

#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

impl SessionStore {
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn path(&self, session_id: &str) -> PathBuf {
        let safe: String = session_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect();
        self.dir.join(format!("{safe}.jsonl"))
    }

    pub fn append(&self, event: &SessionEvent) -> Result<()> {
        let path = self.path(&event.snapshot.session_id);
        let line = serde_json::to_string(event)?;
        let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
        writeln!(f, "{line}")?;
        f.sync_data()?;
        Ok(())
    }

    /// Last event of every session that has not expired. Unreadable trailing
    /// lines (a torn write) are skipped.
    pub fn load_live(&self) -> Result<Vec<SessionEvent>> {
        let mut out = Vec::new();
        let mut paths: Vec<PathBuf> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        paths.sort();
        for p in paths {
            let file = fs::File::open(&p)?;
            let mut last: Option<SessionEvent> = None;
            for line in BufReader::new(file).lines() {
                let line = line?;
                if let Ok(ev) = serde_json::from_str::<SessionEvent>(&line) {
                    last = Some(ev);
                }
            }
            if let Some(ev) = last.filter(|e| e.kind != EventKind::Expired) {
                out.push(ev);
            }
        }
        Ok(out)
    }
}
