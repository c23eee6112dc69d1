//! Temporary access tokens.
//!
//! A token is 32 random bytes, hex-encoded, handed out once. Only its
//! SHA-256 digest is kept, in memory and optionally in a JSON file shared
//! with the operator CLI. The server re-reads that file when it meets an
//! unknown token, so tokens issued from the CLI work without a restart.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Duration, Utc};
use lifelens_core::model::PersonId;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Source of "now", injectable so expiry can be tested.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when told to.
#[derive(Debug, Clone)]
pub struct ManualClock(Arc<Mutex<DateTime<Utc>>>);

impl ManualClock {
    pub fn new(at: DateTime<Utc>) -> Self {
        Self(Arc::new(Mutex::new(at)))
    }

    pub fn advance(&self, by: Duration) {
        *self.0.lock().expect("clock lock") += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().expect("clock lock")
    }
}

/// What the caller gets back from issuance. The token text is not
/// recoverable afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessToken {
    pub token: String,
    pub scope: BTreeSet<PersonId>,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, thiserror::Error)]
pub enum TokenError {
    #[error("token scope must name at least one person")]
    InvalidScope,
    #[error("token lifetime must be positive")]
    InvalidTtl,
    #[error("token file {path}: {message}")]
    Storage { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthError {
    /// Missing, unknown or expired token.
    Unauthorized,
    /// Valid token that does not cover the person.
    Forbidden,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Grant {
    digest: String,
    scope: BTreeSet<PersonId>,
    expires_at: DateTime<Utc>,
}

pub struct TokenStore {
    grants: RwLock<HashMap<String, Grant>>,
    // Serializes issuance and file writes.
    issue_lock: Mutex<()>,
    path: Option<PathBuf>,
    clock: Arc<dyn Clock>,
}

fn digest(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

fn read_grants(path: &Path) -> Result<HashMap<String, Grant>, TokenError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(HashMap::new()),
        Err(e) => {
            return Err(TokenError::Storage {
                path: path.into(),
                message: e.to_string(),
            })
        }
    };
    let list: Vec<Grant> = serde_json::from_str(&text).map_err(|e| TokenError::Storage {
        path: path.into(),
        message: e.to_string(),
    })?;
    Ok(list.into_iter().map(|g| (g.digest.clone(), g)).collect())
}

impl TokenStore {
    pub fn in_memory(clock: Arc<dyn Clock>) -> Self {
        Self {
            grants: RwLock::new(HashMap::new()),
            issue_lock: Mutex::new(()),
            path: None,
            clock,
        }
    }

    /// Backed by `path`; existing grants are loaded.
    pub fn open(path: impl Into<PathBuf>, clock: Arc<dyn Clock>) -> Result<Self, TokenError> {
        let path = path.into();
        let grants = read_grants(&path)?;
        Ok(Self {
            grants: RwLock::new(grants),
            issue_lock: Mutex::new(()),
            path: Some(path),
            clock,
        })
    }

    pub fn issue(&self, scope: BTreeSet<PersonId>, ttl: Duration) -> Result<AccessToken, TokenError> {
        if scope.is_empty() {
            return Err(TokenError::InvalidScope);
        }
        if ttl <= Duration::zero() {
            return Err(TokenError::InvalidTtl);
        }
        let mut bytes = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut bytes);
        let token = hex::encode(bytes);
        let expires_at = self.clock.now() + ttl;
        let grant = Grant {
            digest: digest(&token),
            scope: scope.clone(),
            expires_at,
        };

        let _guard = self.issue_lock.lock().expect("issue lock");
        if let Some(path) = &self.path {
            // Merge with grants written by other processes, dropping expired ones.
            let mut all = read_grants(path)?;
            let now = self.clock.now();
            all.retain(|_, g| g.expires_at > now);
            all.insert(grant.digest.clone(), grant.clone());
            let mut list: Vec<&Grant> = all.values().collect();
            list.sort_by(|a, b| a.digest.cmp(&b.digest));
            let text = serde_json::to_string_pretty(&list).expect("grants serialize");
            let tmp = path.with_extension("tmp");
            std::fs::write(&tmp, text)
                .and_then(|_| std::fs::rename(&tmp, path))
                .map_err(|e| TokenError::Storage {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
            *self.grants.write().expect("grant lock") = all;
        } else {
            self.grants.write().expect("grant lock").insert(grant.digest.clone(), grant);
        }
        Ok(AccessToken { token, scope, expires_at })
    }

    fn lookup(&self, d: &str) -> Option<Grant> {
        if let Some(g) = self.grants.read().expect("grant lock").get(d) {
            return Some(g.clone());
        }
        let path = self.path.as_ref()?;
        let fresh = read_grants(path).ok()?;
        let found = fresh.get(d).cloned();
        *self.grants.write().expect("grant lock") = fresh;
        found
    }

    /// Check a presented token against a person. Unknown and expired tokens
    /// are indistinguishable to the caller.
    pub fn authorize(&self, token: &str, person: Option<&PersonId>) -> Result<(), AuthError> {
        let grant = self.lookup(&digest(token)).ok_or(AuthError::Unauthorized)?;
        if grant.expires_at <= self.clock.now() {
            return Err(AuthError::Unauthorized);
        }
        match person {
            Some(p) if grant.scope.contains(p) => Ok(()),
            _ => Err(AuthError::Forbidden),
        }
    }
}
