//! Append-only session log. Each upload gets a line when it arrives and
//! another when its result is known; uploaded images are kept beside the
//! log under their SHA-256.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use lpr_core::RecognitionResult;
use lpr_datastore::LookupOutcome;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::{ApiResponse, Error, Result};

pub const LOG_FILE: &str = "sessions.jsonl";
pub const IMAGE_DIR: &str = "images";

/// One line of the log. `result`, `vehicle` and `response` are absent on the
/// line written when the upload arrives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub device_id: Option<String>,
    pub received_at: String,
    /// Relative to the session directory.
    pub image_ref: String,
    pub result: Option<RecognitionResult>,
    pub vehicle: Option<LookupOutcome>,
    pub response: Option<ApiResponse>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SessionState {
    Pending,
    /// The serialized response exactly as first returned.
    Done(String),
}

type IdSource = Box<dyn Fn() -> u128 + Send + Sync>;

pub struct SessionLog {
    dir: PathBuf,
    log: Mutex<File>,
    sessions: RwLock<HashMap<String, SessionState>>,
    ids: IdSource,
}

impl std::fmt::Debug for SessionLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionLog").field("dir", &self.dir).finish_non_exhaustive()
    }
}

pub fn format_session_id(raw: u128) -> String {
    format!("{raw:032x}")
}

impl SessionLog {
    /// Opens or creates the log in `dir` and replays it.
    pub fn open(dir: &Path) -> Result<SessionLog> {
        SessionLog::with_id_source(dir, Box::new(rand::random::<u128>))
    }

    pub fn with_id_source(dir: &Path, ids: IdSource) -> Result<SessionLog> {
        let io = |source| Error::Sessions { path: dir.to_path_buf(), source };
        fs::create_dir_all(dir.join(IMAGE_DIR)).map_err(io)?;
        let path = dir.join(LOG_FILE);
        let (sessions, intact) = if path.exists() { replay(&path)? } else { (HashMap::new(), 0) };
        let log = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        if path.metadata().map_err(io)?.len() > intact {
            log.set_len(intact).map_err(io)?;
        }
        Ok(SessionLog { dir: dir.to_path_buf(), log: Mutex::new(log), sessions: RwLock::new(sessions), ids })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &str) -> Option<SessionState> {
        self.sessions.read().expect("session lock").get(id).cloned()
    }

    /// Stores the image, reserves a fresh id and logs the pending session.
    pub fn begin(&self, device_id: Option<String>, image: &[u8], extension: &str) -> Result<SessionRecord> {
        let image_ref = self.store_image(image, extension)?;
        let session_id = {
            let mut sessions = self.sessions.write().expect("session lock");
            loop {
                let id = format_session_id((self.ids)());
                if !sessions.contains_key(&id) {
                    sessions.insert(id.clone(), SessionState::Pending);
                    break id;
                }
            }
        };
        let received_at = OffsetDateTime::now_utc().format(&Rfc3339).expect("UTC timestamps format");
        let record = SessionRecord {
            session_id,
            device_id,
            received_at,
            image_ref,
            result: None,
            vehicle: None,
            response: None,
        };
        self.append(&record)?;
        Ok(record)
    }

    /// Logs the final state and returns the response body.
    pub fn complete(
        &self,
        mut record: SessionRecord,
        result: RecognitionResult,
        vehicle: Option<LookupOutcome>,
        response: ApiResponse,
    ) -> Result<String> {
        let body = serde_json::to_string(&response).expect("responses serialize");
        record.result = Some(result);
        record.vehicle = vehicle;
        record.response = Some(response);
        self.append(&record)?;
        let mut sessions = self.sessions.write().expect("session lock");
        let state = sessions.get_mut(&record.session_id).expect("session was begun");
        assert_eq!(*state, SessionState::Pending, "session {} completed twice", record.session_id);
        *state = SessionState::Done(body.clone());
        Ok(body)
    }

    fn store_image(&self, bytes: &[u8], extension: &str) -> Result<String> {
        let name = format!("{}.{extension}", hex::encode(Sha256::digest(bytes)));
        let rel = format!("{IMAGE_DIR}/{name}");
        let path = self.dir.join(&rel);
        if !path.exists() {
            let io = |source| Error::Sessions { path: path.clone(), source };
            // unique temp name: two requests may upload the same bytes at once
            let tmp = self.dir.join(IMAGE_DIR).join(format!(".{name}.{:x}", rand::random::<u64>()));
            fs::write(&tmp, bytes).map_err(io)?;
            fs::rename(&tmp, &path).map_err(io)?;
        }
        Ok(rel)
    }

    fn append(&self, record: &SessionRecord) -> Result<()> {
        let mut line = serde_json::to_string(record).expect("session records serialize");
        line.push('\n');
        let mut log = self.log.lock().expect("log lock");
        log.write_all(line.as_bytes())
            .and_then(|_| log.flush())
            .map_err(|source| Error::Sessions { path: self.dir.join(LOG_FILE), source })
    }
}

/// Later lines override earlier ones. A torn final line (crash mid-write) is
/// dropped, and the returned length excludes it; damage anywhere else is an
/// error.
fn replay(path: &Path) -> Result<(HashMap<String, SessionState>, u64)> {
    let text = fs::read_to_string(path).map_err(|source| Error::Sessions { path: path.to_path_buf(), source })?;
    let mut out = HashMap::new();
    let mut intact = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let complete = line.ends_with('\n');
        if !line.trim().is_empty() {
            let record: SessionRecord = match serde_json::from_str(line) {
                Ok(r) => r,
                Err(_) if !complete => break,
                Err(e) => {
                    return Err(Error::SessionLog { path: path.to_path_buf(), line: i + 1, message: e.to_string() });
                }
            };
            if !complete {
                break;
            }
            let state = match &record.response {
                Some(r) => SessionState::Done(serde_json::to_string(r).expect("responses serialize")),
                None => SessionState::Pending,
            };
            out.insert(record.session_id, state);
        }
        intact += line.len() as u64;
    }
    Ok((out, intact))
}
