//! Vehicle records keyed by plate text.
//!
//! [`FileStore`] keeps one JSON object per line. Lookups normalize the query
//! and fall back to a single-edit match when exactly one record is that
//! close, which absorbs the usual O/0 and I/1 confusions without ever
//! guessing between two vehicles.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("{path} line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("plate {plate} appears more than once (line {line})")]
    DuplicatePlate { plate: String, line: usize },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("writing {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
}

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleRecord {
    pub plate: String,
    pub owner_name: String,
    pub contact_address: String,
    pub contact_number: String,
    pub make: String,
    pub model: String,
    pub engine_number: String,
    pub tax_status: String,
    pub stolen: bool,
    #[serde(default)]
    pub complaints: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Exact,
    Fuzzy,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookupOutcome {
    pub record: Option<VehicleRecord>,
    pub matched: bool,
    pub match_kind: MatchKind,
    /// Distance to the returned record, or to the nearest one when nothing
    /// matched (0 for an empty store).
    pub edit_distance: usize,
}

impl LookupOutcome {
    fn none(edit_distance: usize) -> LookupOutcome {
        LookupOutcome { record: None, matched: false, match_kind: MatchKind::None, edit_distance }
    }
}

/// Uppercases and drops everything but ASCII letters and digits.
pub fn normalize_plate(s: &str) -> String {
    s.chars().filter(char::is_ascii_alphanumeric).map(|c| c.to_ascii_uppercase()).collect()
}

/// The boundary the service talks to; a remote registry client can stand in
/// for [`FileStore`].
pub trait VehicleLookup: Send + Sync {
    fn lookup(&self, plate: &str) -> LookupOutcome;
    fn record_count(&self) -> usize;
}

/// Exact match, else the unique record at edit distance 1.
pub fn lookup_in<'a>(records: impl IntoIterator<Item = &'a VehicleRecord>, plate: &str) -> LookupOutcome {
    let query = normalize_plate(plate);
    let mut nearest = None::<usize>;
    let mut close = Vec::new();
    for r in records {
        if r.plate == query {
            return LookupOutcome {
                record: Some(r.clone()),
                matched: true,
                match_kind: MatchKind::Exact,
                edit_distance: 0,
            };
        }
        let d = strsim::levenshtein(&query, &r.plate);
        nearest = Some(nearest.map_or(d, |n| n.min(d)));
        if d == 1 {
            close.push(r);
        }
    }
    match close.as_slice() {
        [only] => LookupOutcome {
            record: Some((*only).clone()),
            matched: true,
            match_kind: MatchKind::Fuzzy,
            edit_distance: 1,
        },
        _ => LookupOutcome::none(nearest.unwrap_or(0)),
    }
}

fn validate(mut record: VehicleRecord) -> std::result::Result<VehicleRecord, String> {
    record.plate = normalize_plate(&record.plate);
    if record.plate.is_empty() {
        return Err("plate has no letters or digits".into());
    }
    Ok(record)
}

/// Parses JSON-lines records; blank lines are skipped and plates are
/// normalized before the duplicate check.
pub fn parse_records(text: &str, path: &Path) -> Result<Vec<VehicleRecord>> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { path: path.to_path_buf(), line: line_no, message };
        let record: VehicleRecord = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        let record = validate(record).map_err(parse_err)?;
        if seen.insert(record.plate.clone(), line_no).is_some() {
            return Err(Error::DuplicatePlate { plate: record.plate, line: line_no });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn format_records<'a>(records: impl IntoIterator<Item = &'a VehicleRecord>) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// A JSON-lines file held in memory. Readers share a lock; writers are
/// serialized and replace the file atomically before the change becomes
/// visible.
#[derive(Debug)]
pub struct FileStore {
    path: PathBuf,
    records: RwLock<BTreeMap<String, VehicleRecord>>,
    writer: Mutex<()>,
}

impl FileStore {
    /// Opens an existing store. A missing file is an error; use
    /// [`FileStore::create`] to start one.
    pub fn open(path: impl AsRef<Path>) -> Result<FileStore> {
        let path = path.as_ref().to_path_buf();
        let records = read_map(&path)?;
        Ok(FileStore { path, records: RwLock::new(records), writer: Mutex::new(()) })
    }

    /// Opens `path`, creating an empty file if it does not exist.
    pub fn create(path: impl AsRef<Path>) -> Result<FileStore> {
        let path = path.as_ref();
        if !path.exists() {
            fs::write(path, "").map_err(|source| Error::Write { path: path.to_path_buf(), source })?;
        }
        FileStore::open(path)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, plate: &str) -> Option<VehicleRecord> {
        self.records.read().expect("store lock").get(&normalize_plate(plate)).cloned()
    }

    pub fn records(&self) -> Vec<VehicleRecord> {
        self.records.read().expect("store lock").values().cloned().collect()
    }

    /// Inserts or replaces by plate.
    pub fn upsert(&self, record: VehicleRecord) -> Result<()> {
        let record = validate(record).map_err(Error::InvalidRecord)?;
        let _w = self.writer.lock().expect("writer lock");
        let mut next = self.records.read().expect("store lock").clone();
        next.insert(record.plate.clone(), record);
        self.persist(&next)?;
        *self.records.write().expect("store lock") = next;
        Ok(())
    }

    /// Re-reads the file, e.g. after it was edited by hand. On error the
    /// current contents stay in place.
    pub fn reload(&self) -> Result<usize> {
        let _w = self.writer.lock().expect("writer lock");
        let fresh = read_map(&self.path)?;
        let n = fresh.len();
        *self.records.write().expect("store lock") = fresh;
        Ok(n)
    }

    fn persist(&self, records: &BTreeMap<String, VehicleRecord>) -> Result<()> {
        let write_err = |source| Error::Write { path: self.path.clone(), source };
        let mut tmp = self.path.clone().into_os_string();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        let mut f = fs::File::create(&tmp).map_err(write_err)?;
        f.write_all(format_records(records.values()).as_bytes()).map_err(write_err)?;
        f.sync_all().map_err(write_err)?;
        fs::rename(&tmp, &self.path).map_err(write_err)
    }
}

fn read_map(path: &Path) -> Result<BTreeMap<String, VehicleRecord>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })?;
    Ok(parse_records(&text, path)?.into_iter().map(|r| (r.plate.clone(), r)).collect())
}

impl VehicleLookup for FileStore {
    fn lookup(&self, plate: &str) -> LookupOutcome {
        lookup_in(self.records.read().expect("store lock").values(), plate)
    }

    fn record_count(&self) -> usize {
        self.records.read().expect("store lock").len()
    }
}

/// A store with no records, for running without a database.
#[derive(Debug, Default, Clone, Copy)]
pub struct EmptyStore;

impl VehicleLookup for EmptyStore {
    fn lookup(&self, _: &str) -> LookupOutcome {
        LookupOutcome::none(0)
    }

    fn record_count(&self) -> usize {
        0
    }
}

/// A record with placeholder details, for demos and tests.
pub fn sample_record(plate: &str, owner: &str) -> VehicleRecord {
    VehicleRecord {
        plate: normalize_plate(plate),
        owner_name: owner.to_string(),
        contact_address: "12 Station Road, Pune".to_string(),
        contact_number: "+91 98200 00000".to_string(),
        make: "Maruti".to_string(),
        model: "Swift".to_string(),
        engine_number: format!("K12M{}", normalize_plate(plate)),
        tax_status: "paid".to_string(),
        stolen: false,
        complaints: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize_plate("mh 01-ab 1234"), "MH01AB1234");
        assert_eq!(normalize_plate("ké 9"), "K9");
        assert_eq!(normalize_plate(""), "");
    }

    #[test]
    fn exact_fuzzy_and_none() {
        let recs = [sample_record("MH01AB1234", "a"), sample_record("KA05NB1234", "b")];
        let exact = lookup_in(&recs, "mh 01 ab 1234");
        assert_eq!((exact.match_kind, exact.edit_distance), (MatchKind::Exact, 0));
        let fuzzy = lookup_in(&recs, "MH01AB1235");
        assert_eq!((fuzzy.match_kind, fuzzy.edit_distance), (MatchKind::Fuzzy, 1));
        assert_eq!(fuzzy.record.unwrap().owner_name, "a");
        let none = lookup_in(&recs, "DL01AB9999");
        assert_eq!(none.match_kind, MatchKind::None);
        assert!(none.record.is_none() && !none.matched);
    }

    #[test]
    fn ties_at_distance_one_are_not_guessed() {
        let recs = [sample_record("MH01AB1234", "a"), sample_record("MH01AB1236", "b")];
        let out = lookup_in(&recs, "MH01AB1235");
        assert_eq!(out.match_kind, MatchKind::None);
        assert_eq!(out.edit_distance, 1);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let p = Path::new("db.jsonl");
        let good = serde_json::to_string(&sample_record("AB1", "x")).unwrap();
        let text = format!("{good}\n\n{{\"plate\": 3}}\n");
        match parse_records(&text, p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let dup = serde_json::to_string(&sample_record("ab 1", "y")).unwrap();
        match parse_records(&format!("{good}\n{dup}\n"), p) {
            Err(Error::DuplicatePlate { plate, line }) => {
                assert_eq!((plate.as_str(), line), ("AB1", 2))
            }
            other => panic!("{other:?}"),
        }
        let blank = serde_json::to_string(&sample_record("--", "z")).unwrap();
        assert!(matches!(parse_records(&blank, p), Err(Error::Parse { line: 1, .. })));
    }
}
