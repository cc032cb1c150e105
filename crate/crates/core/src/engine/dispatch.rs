//! Task handler registry. Handlers are stubs that record what they were asked
//! to do; real HR systems are outside this crate.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::schema::{DialogueState, Phase, TaskSchema};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchRequest {
    pub dispatch_target: String,
    /// Slot name -> normalized value (raw span when normalization was not possible).
    pub values: BTreeMap<String, String>,
    pub transcript_ref: String,
    #[serde(skip)]
    confirmed: bool,
}

impl DispatchRequest {
    /// An unconfirmed request. The registry refuses to dispatch it.
    pub fn new(dispatch_target: impl Into<String>, values: BTreeMap<String, String>, transcript_ref: impl Into<String>) -> Self {
        Self {
            dispatch_target: dispatch_target.into(),
            values,
            transcript_ref: transcript_ref.into(),
            confirmed: false,
        }
    }

    /// Builds the request from a state in which the user has confirmed every value.
    pub fn from_confirmed(schema: &TaskSchema, state: &DialogueState, transcript_ref: impl Into<String>) -> Result<Self, DispatchError> {
        if state.phase != Phase::Confirming {
            return Err(DispatchError::Precondition(format!("phase is {:?}, not confirming", state.phase)));
        }
        if !state.required_complete(schema) {
            return Err(DispatchError::Precondition("required slots are still pending".into()));
        }
        if let Some(v) = state.filled.values().find(|v| !v.confirmed) {
            return Err(DispatchError::Precondition(format!("slot `{}` is not confirmed", v.slot_id)));
        }
        let values = state
            .filled
            .values()
            .map(|v| {
                let name = schema.slot(&v.slot_id).map_or(v.slot_id.clone(), |s| s.name.clone());
                (name, v.effective().to_string())
            })
            .collect();
        let mut req = Self::new(schema.dispatch_target.clone(), values, transcript_ref);
        req.confirmed = true;
        Ok(req)
    }

    pub fn is_confirmed(&self) -> bool {
        self.confirmed
    }

    /// SHA-256 over the canonical JSON of target, values and transcript reference.
    pub fn payload_hash(&self) -> String {
        let body = serde_json::to_vec(self).expect("payload serializes");
        hex::encode(Sha256::digest(&body))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchReceipt {
    pub handler_id: String,
    pub payload_hash: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DispatchError {
    #[error("no handler registered for `{0}`")]
    UnknownTarget(String),
    #[error("dispatch precondition failed: {0}")]
    Precondition(String),
    #[error("fact check failed for `{slot_name}`: {message}")]
    FactCheck { slot_name: String, message: String },
    #[error("handler failed: {0}")]
    Handler(String),
}

/// A lookup run before the handler, e.g. "does this provider exist".
pub trait FactCheck: Send + Sync {
    fn check(&self, req: &DispatchRequest) -> Result<(), DispatchError>;
}

/// Checks one slot's value against a closed table (case-insensitive).
#[derive(Debug, Clone)]
pub struct TableCheck {
    pub slot_name: String,
    pub known: BTreeSet<String>,
    pub what: String,
}

impl TableCheck {
    pub fn new<I, S>(slot_name: &str, what: &str, known: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            slot_name: slot_name.into(),
            what: what.into(),
            known: known.into_iter().map(|k| k.as_ref().trim().to_lowercase()).collect(),
        }
    }
}

impl FactCheck for TableCheck {
    fn check(&self, req: &DispatchRequest) -> Result<(), DispatchError> {
        let Some(value) = req.values.get(&self.slot_name) else {
            return Ok(());
        };
        if self.known.contains(&value.trim().to_lowercase()) {
            Ok(())
        } else {
            Err(DispatchError::FactCheck {
                slot_name: self.slot_name.clone(),
                message: format!("I couldn't find {} \"{}\" in our records.", self.what, value.trim()),
            })
        }
    }
}

pub trait TaskHandler: Send + Sync {
    fn id(&self) -> &str;
    fn handle(&self, req: &DispatchRequest) -> Result<DispatchReceipt, DispatchError>;
}

/// Records requests in memory and, if configured, as JSON lines on disk.
pub struct StubHandler {
    id: String,
    audit_path: Option<PathBuf>,
    log: Mutex<Vec<DispatchRequest>>,
}

#[derive(Serialize)]
struct AuditRecord<'a> {
    handler_id: &'a str,
    payload_hash: &'a str,
    timestamp: &'a str,
    request: &'a DispatchRequest,
}

impl StubHandler {
    pub fn new(id: impl Into<String>, audit_path: Option<PathBuf>) -> Self {
        Self {
            id: id.into(),
            audit_path,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn handled(&self) -> Vec<DispatchRequest> {
        self.log.lock().expect("stub log").clone()
    }
}

impl TaskHandler for StubHandler {
    fn id(&self) -> &str {
        &self.id
    }

    fn handle(&self, req: &DispatchRequest) -> Result<DispatchReceipt, DispatchError> {
        let receipt = DispatchReceipt {
            handler_id: self.id.clone(),
            payload_hash: req.payload_hash(),
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        };
        if let Some(path) = &self.audit_path {
            let record = AuditRecord {
                handler_id: &receipt.handler_id,
                payload_hash: &receipt.payload_hash,
                timestamp: &receipt.timestamp,
                request: req,
            };
            let line = serde_json::to_string(&record).map_err(|e| DispatchError::Handler(e.to_string()))?;
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)
                    .map_err(|e| DispatchError::Handler(format!("audit log {}: {e}", path.display())))?;
            }
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| DispatchError::Handler(format!("audit log {}: {e}", path.display())))?;
            writeln!(file, "{line}").map_err(|e| DispatchError::Handler(e.to_string()))?;
        }
        self.log.lock().expect("stub log").push(req.clone());
        Ok(receipt)
    }
}

/// Providers known to the bundled medical-claim fact check.
pub const DEFAULT_PROVIDERS: &[&str] = &[
    "Northside Clinic",
    "Harbor Medical Center",
    "Evergreen Health",
    "Lakeview Hospital",
    "Summit Urgent Care",
];

pub const STUB_TARGETS: &[&str] = &[
    "draft_email",
    "request_time_off",
    "set_status",
    "create_ticket",
    "file_medical_claim",
    "access_policies",
];

#[derive(Default, Clone)]
pub struct HandlerRegistry {
    handlers: HashMap<String, Arc<dyn TaskHandler>>,
    checks: HashMap<String, Vec<Arc<dyn FactCheck>>>,
}

impl HandlerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stub handlers for every bundled target; audit files go to `audit_dir/<target>.jsonl`.
    pub fn with_stubs(audit_dir: Option<PathBuf>) -> Self {
        let mut reg = Self::new();
        for target in STUB_TARGETS {
            let path = audit_dir.as_ref().map(|d| d.join(format!("{target}.jsonl")));
            reg.register(target, Arc::new(StubHandler::new(*target, path)));
        }
        reg.add_check(
            "file_medical_claim",
            Arc::new(TableCheck::new("provider", "the provider", DEFAULT_PROVIDERS)),
        );
        reg
    }

    pub fn register(&mut self, target: &str, handler: Arc<dyn TaskHandler>) {
        self.handlers.insert(target.to_string(), handler);
    }

    pub fn add_check(&mut self, target: &str, check: Arc<dyn FactCheck>) {
        self.checks.entry(target.to_string()).or_default().push(check);
    }

    pub fn contains(&self, target: &str) -> bool {
        self.handlers.contains_key(target)
    }

    /// Fact checks first, then the handler.
    pub fn dispatch(&self, req: &DispatchRequest) -> Result<DispatchReceipt, DispatchError> {
        if !req.is_confirmed() {
            return Err(DispatchError::Precondition("request was not confirmed by the user".into()));
        }
        let handler = self
            .handlers
            .get(&req.dispatch_target)
            .ok_or_else(|| DispatchError::UnknownTarget(req.dispatch_target.clone()))?;
        for check in self.checks.get(&req.dispatch_target).into_iter().flatten() {
            check.check(req)?;
        }
        handler.handle(req)
    }
}
