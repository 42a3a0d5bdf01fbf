use std::sync::Arc;

use lpr_datastore::{
    format_records, lookup_in, normalize_plate, sample_record, Error, FileStore, MatchKind, VehicleLookup,
    VehicleRecord,
};
use proptest::prelude::*;

fn write(dir: &std::path::Path, records: &[VehicleRecord]) -> std::path::PathBuf {
    let path = dir.join("vehicles.jsonl");
    std::fs::write(&path, format_records(records)).unwrap();
    path
}

#[test]
fn empty_file_opens_empty() {
    let tmp = tempfile::tempdir().unwrap();
    let store = FileStore::open(write(tmp.path(), &[])).unwrap();
    assert_eq!(store.record_count(), 0);
    assert_eq!(store.lookup("MH01AB1234").match_kind, MatchKind::None);
}

#[test]
fn fixture_records_are_retrievable() {
    let tmp = tempfile::tempdir().unwrap();
    let recs = [sample_record("MH01AB1234", "A"), sample_record("KA05NB1234", "B"), sample_record("TN09BC5678", "C")];
    let store = FileStore::open(write(tmp.path(), &recs)).unwrap();
    assert_eq!(store.record_count(), 3);
    for r in &recs {
        assert_eq!(store.lookup(&r.plate).record.as_ref(), Some(r));
    }
}

#[test]
fn duplicate_plate_names_the_plate() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), &[sample_record("GJ01RT4455", "A"), sample_record("GJ01RT4455", "B")]);
    let err = FileStore::open(&path).unwrap_err();
    assert!(matches!(&err, Error::DuplicatePlate { plate, .. } if plate == "GJ01RT4455"));
    assert!(err.to_string().contains("GJ01RT4455"));
}

#[test]
fn missing_file_is_an_error_unless_created() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("none.jsonl");
    assert!(matches!(FileStore::open(&path), Err(Error::Read { .. })));
    assert_eq!(FileStore::create(&path).unwrap().record_count(), 0);
}

#[test]
fn upsert_persists_and_replaces() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("v.jsonl");
    let store = FileStore::create(&path).unwrap();
    let rec = sample_record("UP32KL0099", "Asha");
    store.upsert(rec.clone()).unwrap();
    let got = store.lookup("up32 kl 0099");
    assert_eq!((got.match_kind, got.record.as_ref()), (MatchKind::Exact, Some(&rec)));

    let mut changed = rec.clone();
    changed.stolen = true;
    changed.complaints.push("reported stolen".into());
    store.upsert(changed.clone()).unwrap();
    assert_eq!(store.record_count(), 1);
    assert_eq!(store.get("UP32KL0099"), Some(changed.clone()));

    let reopened = FileStore::open(&path).unwrap();
    assert_eq!(reopened.records(), vec![changed]);
    assert!(!tmp.path().join("v.jsonl.tmp").exists());
}

#[test]
fn upsert_normalizes_and_rejects_empty_plates() {
    let tmp = tempfile::tempdir().unwrap();
    let store = FileStore::create(tmp.path().join("v.jsonl")).unwrap();
    store.upsert(sample_record("dl 8c 1234", "x")).unwrap();
    assert!(store.get("DL8C1234").is_some());
    let mut bad = sample_record("x", "y");
    bad.plate = " - ".into();
    assert!(matches!(store.upsert(bad), Err(Error::InvalidRecord(_))));
}

#[test]
fn reload_picks_up_external_edits() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), &[sample_record("AB12", "x")]);
    let store = FileStore::open(&path).unwrap();
    write(tmp.path(), &[sample_record("AB12", "x"), sample_record("CD34", "y")]);
    assert_eq!(store.reload().unwrap(), 2);
    assert_eq!(store.record_count(), 2);
    std::fs::write(&path, "{").unwrap();
    assert!(store.reload().is_err());
    assert_eq!(store.record_count(), 2);
}

#[test]
fn concurrent_readers_see_whole_records() {
    let tmp = tempfile::tempdir().unwrap();
    let store = Arc::new(FileStore::create(tmp.path().join("v.jsonl")).unwrap());
    std::thread::scope(|s| {
        let writer = {
            let store = store.clone();
            s.spawn(move || {
                for i in 0..50 {
                    let mut r = sample_record("MH01AB1234", &format!("owner{i}"));
                    r.model = format!("model{i}");
                    store.upsert(r).unwrap();
                }
            })
        };
        for _ in 0..4 {
            let store = store.clone();
            s.spawn(move || {
                for _ in 0..500 {
                    if let Some(r) = store.lookup("MH01AB1234").record {
                        assert_eq!(r.owner_name.trim_start_matches("owner"), r.model.trim_start_matches("model"));
                    }
                }
            });
        }
        writer.join().unwrap();
    });
}

fn levenshtein_oracle(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            cur[j] = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + (a[i - 1] != b[j - 1]) as usize);
        }
        prev = cur;
    }
    prev[b.len()]
}

proptest! {
    #[test]
    fn normalization_is_idempotent(s in "\\PC{0,20}") {
        let once = normalize_plate(&s);
        prop_assert_eq!(normalize_plate(&once), once.clone());
        prop_assert!(once.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit()));
    }

    #[test]
    fn lookup_agrees_with_a_distance_scan(
        plates in prop::collection::btree_set("[A-C0-2]{3,5}", 1..8),
        query in "[A-C0-2]{2,6}",
    ) {
        let recs: Vec<_> = plates.iter().map(|p| sample_record(p, p)).collect();
        let out = lookup_in(&recs, &query);
        let dists: Vec<usize> = recs.iter().map(|r| levenshtein_oracle(&query, &r.plate)).collect();
        let ones = dists.iter().filter(|&&d| d == 1).count();
        let expected = if dists.contains(&0) {
            MatchKind::Exact
        } else if ones == 1 {
            MatchKind::Fuzzy
        } else {
            MatchKind::None
        };
        prop_assert_eq!(out.match_kind, expected);
        prop_assert_eq!(out.matched, out.record.is_some());
        if let Some(r) = &out.record {
            prop_assert_eq!(levenshtein_oracle(&query, &r.plate), out.edit_distance);
        }
    }

    #[test]
    fn upserted_records_come_back_exactly(owner in "[a-zA-Z ]{1,12}", stolen: bool, plate in "[A-Z]{2}[0-9]{2}[A-Z]{1,2}[0-9]{4}") {
        let tmp = tempfile::tempdir().unwrap();
        let store = FileStore::create(tmp.path().join("v.jsonl")).unwrap();
        let mut rec = sample_record(&plate, &owner);
        rec.stolen = stolen;
        store.upsert(rec.clone()).unwrap();
        prop_assert_eq!(store.lookup(&plate).record, Some(rec));
    }
}
