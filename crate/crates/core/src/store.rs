//! Day-record store: one document per (person, date).
//!
//! Readers get an `Arc` snapshot of a whole day and never observe a partially
//! written one. Writes for the same key are serialized; on disk a document is
//! written to a temporary file and renamed into place.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::llm::{CallUsage, InferenceResult};
use crate::model::{validate_day_record, DayRecord, PersonId, UserProfile, ValidationReport};
use crate::occurrence::{Occurrence, OutlierFlag, Trendline};

/// Derived artifacts for a stored day.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DayAnalysis {
    pub occurrences: Vec<Occurrence>,
    #[serde(default)]
    pub outliers: Vec<OutlierFlag>,
    #[serde(default)]
    pub trendlines: Vec<Trendline>,
    #[serde(default)]
    pub hourly: Vec<InferenceResult>,
    pub glance: Option<InferenceResult>,
    #[serde(default)]
    pub usage: Vec<CallUsage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredDay {
    pub record: DayRecord,
    pub analysis: Option<DayAnalysis>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("record rejected by validation:\n{0}")]
    Rejected(ValidationReport),
    #[error("no stored day for {person} on {date}")]
    UnknownDay { person: PersonId, date: NaiveDate },
    #[error("store io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt document {path}: {source}")]
    Corrupt {
        path: PathBuf,
        source: serde_json::Error,
    },
}

type DayKey = (PersonId, NaiveDate);

#[derive(Debug, Default)]
pub struct DayStore {
    root: Option<PathBuf>,
    days: RwLock<HashMap<DayKey, Arc<StoredDay>>>,
    writers: Mutex<HashMap<DayKey, Arc<Mutex<()>>>>,
}

impl DayStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// File-backed store rooted at `root`. Documents are loaded lazily.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root: Some(root),
            ..Self::default()
        })
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    /// Validate and persist a record, replacing any previous version of the
    /// day. Replacing a record drops its stale analysis.
    pub fn put_record(&self, record: DayRecord) -> Result<ValidationReport, StoreError> {
        let report = validate_day_record(&record);
        if !report.is_accepted() {
            return Err(StoreError::Rejected(report));
        }
        let key = (record.person_id.clone(), record.date);
        self.write(key, StoredDay {
            record,
            analysis: None,
        })?;
        Ok(report)
    }

    pub fn put_analysis(
        &self,
        person: &PersonId,
        date: NaiveDate,
        analysis: DayAnalysis,
    ) -> Result<(), StoreError> {
        let key = (person.clone(), date);
        let lock = self.writer(&key);
        let _guard = lock.lock().expect("writer lock poisoned");
        let current = self.get(person, date)?.ok_or_else(|| StoreError::UnknownDay {
            person: person.clone(),
            date,
        })?;
        let next = StoredDay {
            record: current.record.clone(),
            analysis: Some(analysis),
        };
        self.commit(key, next)
    }

    pub fn get(&self, person: &PersonId, date: NaiveDate) -> Result<Option<Arc<StoredDay>>, StoreError> {
        let key = (person.clone(), date);
        if let Some(day) = self.days.read().expect("store lock poisoned").get(&key) {
            return Ok(Some(Arc::clone(day)));
        }
        let Some(path) = self.doc_path(person, date) else {
            return Ok(None);
        };
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)?;
        let day: StoredDay =
            serde_json::from_str(&text).map_err(|source| StoreError::Corrupt { path, source })?;
        let day = Arc::new(day);
        let mut days = self.days.write().expect("store lock poisoned");
        Ok(Some(Arc::clone(days.entry(key).or_insert(day))))
    }

    pub fn record(&self, person: &PersonId, date: NaiveDate) -> Result<Option<DayRecord>, StoreError> {
        Ok(self.get(person, date)?.map(|d| d.record.clone()))
    }

    /// Dates stored for a person, ascending.
    pub fn dates(&self, person: &PersonId) -> Result<Vec<NaiveDate>, StoreError> {
        let mut dates: BTreeSet<NaiveDate> = self
            .days
            .read()
            .expect("store lock poisoned")
            .keys()
            .filter(|(p, _)| p == person)
            .map(|(_, d)| *d)
            .collect();
        if let Some(root) = &self.root {
            let dir = root.join(person.as_str());
            if dir.is_dir() {
                for entry in fs::read_dir(dir)? {
                    let name = entry?.file_name();
                    let name = name.to_string_lossy();
                    if let Some(stem) = name.strip_suffix(".json") {
                        if let Ok(d) = stem.parse::<NaiveDate>() {
                            dates.insert(d);
                        }
                    }
                }
            }
        }
        Ok(dates.into_iter().collect())
    }

    /// Profile from the person's most recent stored day.
    pub fn profile(&self, person: &PersonId) -> Result<Option<UserProfile>, StoreError> {
        let Some(last) = self.dates(person)?.pop() else {
            return Ok(None);
        };
        Ok(self.get(person, last)?.map(|d| d.record.profile.clone()))
    }

    fn write(&self, key: DayKey, day: StoredDay) -> Result<(), StoreError> {
        let lock = self.writer(&key);
        let _guard = lock.lock().expect("writer lock poisoned");
        self.commit(key, day)
    }

    fn commit(&self, key: DayKey, day: StoredDay) -> Result<(), StoreError> {
        if let Some(path) = self.doc_path(&key.0, key.1) {
            let dir = path.parent().expect("document has a parent");
            fs::create_dir_all(dir)?;
            let tmp = dir.join(format!(".{}.tmp", key.1));
            {
                let mut f = fs::File::create(&tmp)?;
                let json = serde_json::to_vec_pretty(&day).expect("stored day serializes");
                f.write_all(&json)?;
                f.sync_all()?;
            }
            fs::rename(&tmp, &path)?;
        }
        self.days
            .write()
            .expect("store lock poisoned")
            .insert(key, Arc::new(day));
        Ok(())
    }

    fn writer(&self, key: &DayKey) -> Arc<Mutex<()>> {
        let mut writers = self.writers.lock().expect("writer map poisoned");
        Arc::clone(writers.entry(key.clone()).or_default())
    }

    fn doc_path(&self, person: &PersonId, date: NaiveDate) -> Option<PathBuf> {
        self.root
            .as_ref()
            .map(|r| r.join(person.as_str()).join(format!("{date}.json")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DayFrame, Interval, IntervalStream, Stream, StreamKind};
    use chrono::DateTime;

    fn record() -> DayRecord {
        let mut d = DayRecord::new(
            PersonId::new("p1").unwrap(),
            NaiveDate::from_ymd_opt(2024, 11, 18).unwrap(),
            DayFrame::utc(),
        );
        d.set_stream(Stream::Intervals(IntervalStream {
            kind: StreamKind::Activity,
            intervals: vec![Interval::new(
                DateTime::parse_from_rfc3339("2024-11-18T08:00:00Z").unwrap(),
                DateTime::parse_from_rfc3339("2024-11-18T09:00:00Z").unwrap(),
                "walking",
            )],
        }));
        d
    }

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let rec = record();
        {
            let store = DayStore::open(dir.path()).unwrap();
            store.put_record(rec.clone()).unwrap();
        }
        let store = DayStore::open(dir.path()).unwrap();
        let back = store.record(&rec.person_id, rec.date).unwrap().unwrap();
        assert_eq!(back, rec);
        assert_eq!(store.dates(&rec.person_id).unwrap(), vec![rec.date]);
    }

    #[test]
    fn rejected_records_are_not_persisted() {
        let store = DayStore::in_memory();
        let mut rec = record();
        if let Some(Stream::Intervals(s)) = rec.streams.first_mut() {
            s.intervals[0].label = "flying".into();
        }
        assert!(matches!(store.put_record(rec.clone()), Err(StoreError::Rejected(_))));
        assert!(store.get(&rec.person_id, rec.date).unwrap().is_none());
    }

    #[test]
    fn snapshots_survive_replacement() {
        let store = DayStore::in_memory();
        let rec = record();
        store.put_record(rec.clone()).unwrap();
        let snapshot = store.get(&rec.person_id, rec.date).unwrap().unwrap();
        store
            .put_analysis(&rec.person_id, rec.date, DayAnalysis::default())
            .unwrap();
        assert!(snapshot.analysis.is_none());
        let fresh = store.get(&rec.person_id, rec.date).unwrap().unwrap();
        assert!(fresh.analysis.is_some());
        // Re-ingest clears stale analysis.
        store.put_record(rec.clone()).unwrap();
        assert!(store.get(&rec.person_id, rec.date).unwrap().unwrap().analysis.is_none());
    }

    #[test]
    fn analysis_for_unknown_day_fails() {
        let store = DayStore::in_memory();
        let rec = record();
        let err = store
            .put_analysis(&rec.person_id, rec.date, DayAnalysis::default())
            .unwrap_err();
        assert!(matches!(err, StoreError::UnknownDay { .. }));
    }
}
