//! Work ingestion: parse JSONL work records, attribute them to period
//! windows, deduplicate references, and resolve cited-side venue metadata.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::Deserialize;

use crate::classify::{parse_outlet, CitedResolution, OutletType};
use crate::error::{Error, Result};
use crate::registry::{PeriodWindow, Registry};

/// One stored citing work with its deduplicated outgoing references.
#[derive(Debug, Clone)]
pub struct StoredWork {
    pub work_id: String,
    pub journal_id: String,
    pub publication_year: i32,
    pub period_id: String,
    pub references: BTreeSet<String>,
    /// The source record listed the work itself among its references.
    /// Kept as a journal self-reference, flagged here for diagnostics.
    pub cites_itself: bool,
}

/// Venue metadata for a work on the cited side.
#[derive(Debug, Clone, Default)]
pub struct CitedMeta {
    pub journal_id: Option<String>,
    pub outlet: Option<OutletType>,
}

/// Counters for records that were skipped rather than stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub stored: u64,
    pub malformed: u64,
    pub missing_journal_id: u64,
    pub missing_year: u64,
    pub outside_windows: u64,
    pub unknown_journal: u64,
    /// 1-based line numbers of malformed lines.
    pub malformed_lines: Vec<u64>,
}

#[derive(Debug, Deserialize)]
struct RawWork {
    id: String,
    #[serde(default)]
    journal_id: Option<String>,
    #[serde(default)]
    publication_year: Option<i32>,
    #[serde(default)]
    referenced_works: Vec<String>,
    #[serde(rename = "type", default)]
    outlet_type: Option<String>,
}

/// Ingested corpus: stored works plus cited-side metadata.
#[derive(Debug, Clone, Default)]
pub struct CorpusStore {
    pub periods: Vec<PeriodWindow>,
    pub works: BTreeMap<String, StoredWork>,
    /// Venue metadata usable for cited-side resolution. Populated from every
    /// well-formed ingested line (stored or not) and from explicit metadata
    /// snapshots.
    pub cited_meta: BTreeMap<String, CitedMeta>,
    pub report: IngestReport,
}

impl CorpusStore {
    /// Period containing a publication year, if any.
    pub fn period_of_year(&self, year: i32) -> Option<&str> {
        self.periods
            .iter()
            .find(|p| p.contains(year))
            .map(|p| p.period_id.as_str())
    }

    /// Periods in which a journal has at least one stored work.
    pub fn active_periods(&self, journal_id: &str) -> BTreeSet<String> {
        self.works
            .values()
            .filter(|w| w.journal_id == journal_id)
            .map(|w| w.period_id.clone())
            .collect()
    }

    /// Number of stored works per period.
    pub fn works_per_period(&self) -> BTreeMap<String, u64> {
        let mut totals: BTreeMap<String, u64> = BTreeMap::new();
        for w in self.works.values() {
            *totals.entry(w.period_id.clone()).or_insert(0) += 1;
        }
        totals
    }

    /// Total deduplicated reference edges per period.
    pub fn refs_per_period(&self) -> BTreeMap<String, u64> {
        let mut totals: BTreeMap<String, u64> = BTreeMap::new();
        for w in self.works.values() {
            *totals.entry(w.period_id.clone()).or_insert(0) += w.references.len() as u64;
        }
        totals
    }

    /// Resolve the cited side of a reference id.
    pub fn resolve_cited(&self, work_id: &str) -> CitedResolution {
        match self.cited_meta.get(work_id) {
            Some(meta) => CitedResolution {
                journal_id: meta.journal_id.clone(),
                // A work published in a known journal is a journal article
                // unless its declared type says otherwise.
                outlet: meta
                    .outlet
                    .or(meta.journal_id.as_ref().map(|_| OutletType::Journal)),
            },
            None => CitedResolution::default(),
        }
    }

    /// Merge cited-side metadata lines (same JSONL shape as works).
    pub fn load_cited_metadata(&mut self, reader: impl BufRead) -> Result<u64> {
        let mut loaded = 0;
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::data(format!("metadata line {}: {e}", idx + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawWork = match serde_json::from_str(&line) {
                Ok(raw) => raw,
                Err(_) => continue, // tolerated: miss-file entries are not fatal
            };
            self.cited_meta.insert(
                raw.id,
                CitedMeta {
                    journal_id: raw.journal_id,
                    outlet: raw.outlet_type.as_deref().and_then(parse_outlet),
                },
            );
            loaded += 1;
        }
        Ok(loaded)
    }
}

/// Ingest a JSONL stream of work records.
///
/// A work is stored when its journal is in the citing registry and its
/// publication year falls in a window. Everything else is counted and
/// skipped; malformed lines are logged by line number. References are
/// deduplicated per work (set semantics).
pub fn ingest_works(
    reader: impl BufRead,
    registry: &Registry,
    periods: &[PeriodWindow],
) -> Result<CorpusStore> {
    let mut store = CorpusStore {
        periods: periods.to_vec(),
        ..CorpusStore::default()
    };
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(|e| Error::data(format!("works line {line_no}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawWork = match serde_json::from_str(&line) {
            Ok(raw) => raw,
            Err(_) => {
                store.report.malformed += 1;
                store.report.malformed_lines.push(line_no);
                continue;
            }
        };

        // Every well-formed record contributes venue metadata for the cited
        // side, whether or not the work itself is stored.
        store.cited_meta.insert(
            raw.id.clone(),
            CitedMeta {
                journal_id: raw.journal_id.clone(),
                outlet: raw.outlet_type.as_deref().and_then(parse_outlet),
            },
        );

        let Some(journal_id) = raw.journal_id else {
            store.report.missing_journal_id += 1;
            continue;
        };
        if !registry.journals.contains_key(&journal_id) {
            store.report.unknown_journal += 1;
            continue;
        }
        let Some(year) = raw.publication_year else {
            store.report.missing_year += 1;
            continue;
        };
        let Some(period_id) = periods
            .iter()
            .find(|p| p.contains(year))
            .map(|p| p.period_id.clone())
        else {
            store.report.outside_windows += 1;
            continue;
        };

        let references: BTreeSet<String> = raw.referenced_works.into_iter().collect();
        // Self-listing is kept as an edge; only the flag records the anomaly.
        let cites_itself = references.contains(&raw.id);
        store.report.stored += 1;
        store.works.insert(
            raw.id.clone(),
            StoredWork {
                work_id: raw.id,
                journal_id,
                publication_year: year,
                period_id,
                references,
                cites_itself,
            },
        );
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::{builtin_schemes, load_registry};
    use std::io::Write;

    fn sample_periods() -> Vec<PeriodWindow> {
        [("p1", 2006, 2008), ("p2", 2012, 2014), ("p3", 2019, 2021)]
            .iter()
            .map(|(id, s, e)| PeriodWindow {
                period_id: id.to_string(),
                year_start: *s,
                year_end: *e,
            })
            .collect()
    }

    fn small_registry() -> Registry {
        let dir = tempfile::tempdir().unwrap();
        let jp = dir.path().join("j.csv");
        let cp = dir.path().join("c.csv");
        std::fs::File::create(&jp)
            .unwrap()
            .write_all(
                b"journal_id,name,cluster_id,econlit,truc,openalex_econ\nJ1,A,,1,0,0\nJ2,B,,1,0,0\n",
            )
            .unwrap();
        std::fs::File::create(&cp).unwrap().write_all(b"cluster_id,label\n").unwrap();
        load_registry(&jp, &cp, &builtin_schemes()).unwrap()
    }

    #[test]
    fn window_attribution_skips_out_of_window_years() {
        let registry = small_registry();
        let input = r#"{"id":"w1","journal_id":"J1","publication_year":2007,"referenced_works":[]}
{"id":"w2","journal_id":"J1","publication_year":2010,"referenced_works":[]}
{"id":"w3","journal_id":"J2","publication_year":2013,"referenced_works":[]}
{"id":"w4","journal_id":"J2","publication_year":2020,"referenced_works":[]}
"#;
        let store = ingest_works(input.as_bytes(), &registry, &sample_periods()).unwrap();
        assert_eq!(store.works.len(), 3);
        assert_eq!(store.report.stored, 3);
        assert_eq!(store.report.outside_windows, 1);
        assert_eq!(store.works["w1"].period_id, "p1");
        assert_eq!(store.works["w4"].period_id, "p3");
    }

    #[test]
    fn duplicate_references_collapse_to_one_edge() {
        let registry = small_registry();
        let input = r#"{"id":"w1","journal_id":"J1","publication_year":2007,"referenced_works":["r1","r1","r2"]}"#;
        let store = ingest_works(input.as_bytes(), &registry, &sample_periods()).unwrap();
        assert_eq!(store.works["w1"].references.len(), 2);
    }

    #[test]
    fn empty_stream_yields_empty_store() {
        let registry = small_registry();
        let store = ingest_works("".as_bytes(), &registry, &sample_periods()).unwrap();
        assert!(store.works.is_empty());
        assert_eq!(store.report, IngestReport::default());
    }

    #[test]
    fn malformed_and_missing_fields_are_counted() {
        let registry = small_registry();
        let input = r#"not json at all
{"id":"w1","publication_year":2007}
{"id":"w2","journal_id":"J1"}
{"id":"w3","journal_id":"NOPE","publication_year":2007}
"#;
        let store = ingest_works(input.as_bytes(), &registry, &sample_periods()).unwrap();
        assert_eq!(store.report.malformed, 1);
        assert_eq!(store.report.malformed_lines, vec![1]);
        assert_eq!(store.report.missing_journal_id, 1);
        assert_eq!(store.report.missing_year, 1);
        assert_eq!(store.report.unknown_journal, 1);
        assert_eq!(store.report.stored, 0);
    }

    #[test]
    fn self_listing_is_kept_and_flagged() {
        let registry = small_registry();
        let input = r#"{"id":"w1","journal_id":"J1","publication_year":2007,"referenced_works":["w1","r2"]}"#;
        let store = ingest_works(input.as_bytes(), &registry, &sample_periods()).unwrap();
        let w = &store.works["w1"];
        assert!(w.cites_itself);
        assert_eq!(w.references.len(), 2);
    }

    #[test]
    fn active_periods_tracks_stored_works() {
        let registry = small_registry();
        let input = r#"{"id":"w1","journal_id":"J1","publication_year":2007,"referenced_works":[]}
{"id":"w2","journal_id":"J1","publication_year":2020,"referenced_works":[]}
"#;
        let store = ingest_works(input.as_bytes(), &registry, &sample_periods()).unwrap();
        let active = store.active_periods("J1");
        assert_eq!(active.into_iter().collect::<Vec<_>>(), vec!["p1", "p3"]);
        assert!(store.active_periods("J2").is_empty());
    }

    #[test]
    fn cited_resolution_prefers_declared_type() {
        let registry = small_registry();
        let input = r#"{"id":"w1","journal_id":"J1","publication_year":2007,"referenced_works":[]}"#;
        let mut store = ingest_works(input.as_bytes(), &registry, &sample_periods()).unwrap();
        store
            .load_cited_metadata(
                r#"{"id":"b1","journal_id":"BV","type":"book series"}
{"id":"r9","type":"repository"}
"#
                .as_bytes(),
            )
            .unwrap();
        assert_eq!(store.resolve_cited("w1").outlet, Some(OutletType::Journal));
        assert_eq!(store.resolve_cited("b1").outlet, Some(OutletType::Book));
        assert_eq!(store.resolve_cited("b1").journal(), None);
        assert_eq!(store.resolve_cited("r9").outlet, Some(OutletType::Repository));
        assert_eq!(store.resolve_cited("ghost"), CitedResolution::default());
    }
}
