//! The counts cube: exhaustive tally of classified references keyed by
//! (period, citing journal, cited journal, outlet), with the journal
//! classification table embedded so downstream stages are self-contained.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::classify::{
    classify_reference, ClassifiedReference, Classification, JournalClass, OutletType,
};
use crate::corpus::CorpusStore;
use crate::error::{Error, Result};
use crate::registry::Registry;

pub const CUBE_FORMAT_VERSION: &str = "v1";

/// Outlet axis of the cube. Unlike [`OutletType`] this keeps unresolved
/// venues as their own bucket; share reports fold them into Repository.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutletKind {
    Journal,
    Book,
    Conference,
    Repository,
    Unresolved,
}

impl OutletKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutletKind::Journal => "journal",
            OutletKind::Book => "book",
            OutletKind::Conference => "conference",
            OutletKind::Repository => "repository",
            OutletKind::Unresolved => "unresolved",
        }
    }

    pub fn parse(s: &str) -> Result<OutletKind> {
        match s {
            "journal" => Ok(OutletKind::Journal),
            "book" => Ok(OutletKind::Book),
            "conference" => Ok(OutletKind::Conference),
            "repository" => Ok(OutletKind::Repository),
            "unresolved" => Ok(OutletKind::Unresolved),
            other => Err(Error::data(format!("unknown outlet kind '{other}'"))),
        }
    }

    pub fn from_outlet(outlet: Option<OutletType>) -> OutletKind {
        match outlet {
            Some(OutletType::Journal) => OutletKind::Journal,
            Some(OutletType::Book) => OutletKind::Book,
            Some(OutletType::Conference) => OutletKind::Conference,
            Some(OutletType::Repository) => OutletKind::Repository,
            None => OutletKind::Unresolved,
        }
    }

    /// The four-way reporting bucket (unresolved folds into Repository,
    /// mirroring the repository-and-other convention).
    pub fn report_bucket(&self) -> OutletType {
        match self {
            OutletKind::Journal => OutletType::Journal,
            OutletKind::Book => OutletType::Book,
            OutletKind::Conference => OutletType::Conference,
            OutletKind::Repository | OutletKind::Unresolved => OutletType::Repository,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub period_id: String,
    pub citing_journal: String,
    /// Present only when the cited item resolves to a journal article.
    pub cited_journal: Option<String>,
    pub outlet: OutletKind,
}

/// Tally of classified references plus the classification table needed to
/// interpret it. Construction is order- and partition-independent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsCube {
    pub class: Classification,
    pub period_ids: Vec<String>,
    cells: BTreeMap<CellKey, u64>,
}

fn work_cells(store: &CorpusStore, work: &crate::corpus::StoredWork) -> Vec<(CellKey, u64)> {
    work.references
        .iter()
        .map(|cited_id| {
            let cited = store.resolve_cited(cited_id);
            let outlet = OutletKind::from_outlet(cited.outlet);
            let cited_journal = cited.journal().map(str::to_string);
            (
                CellKey {
                    period_id: work.period_id.clone(),
                    citing_journal: work.journal_id.clone(),
                    cited_journal,
                    outlet,
                },
                1,
            )
        })
        .collect()
}

fn merge_into(acc: &mut BTreeMap<CellKey, u64>, cells: Vec<(CellKey, u64)>) {
    for (key, n) in cells {
        *acc.entry(key).or_insert(0) += n;
    }
}

impl CountsCube {
    /// Build the cube from an ingested store. Dispatches to the parallel
    /// partition scan when the `parallel` feature is enabled.
    pub fn build(store: &CorpusStore, registry: &Registry) -> CountsCube {
        #[cfg(feature = "parallel")]
        {
            Self::build_parallel(store, registry)
        }
        #[cfg(not(feature = "parallel"))]
        {
            Self::build_sequential(store, registry)
        }
    }

    pub fn build_sequential(store: &CorpusStore, registry: &Registry) -> CountsCube {
        let mut cells = BTreeMap::new();
        for work in store.works.values() {
            merge_into(&mut cells, work_cells(store, work));
        }
        CountsCube {
            class: Classification::from_registry(registry),
            period_ids: store.periods.iter().map(|p| p.period_id.clone()).collect(),
            cells,
        }
    }

    /// Parallel partition scan followed by a deterministic associative merge.
    #[cfg(feature = "parallel")]
    pub fn build_parallel(store: &CorpusStore, registry: &Registry) -> CountsCube {
        let works: Vec<_> = store.works.values().collect();
        let cells = works
            .par_iter()
            .fold(BTreeMap::new, |mut acc, work| {
                merge_into(&mut acc, work_cells(store, work));
                acc
            })
            .reduce(BTreeMap::new, |mut a, b| {
                for (key, n) in b {
                    *a.entry(key).or_insert(0) += n;
                }
                a
            });
        CountsCube {
            class: Classification::from_registry(registry),
            period_ids: store.periods.iter().map(|p| p.period_id.clone()).collect(),
            cells,
        }
    }

    /// Assemble a cube directly from cells (fixture replay and tests).
    pub fn from_parts(
        class: Classification,
        period_ids: Vec<String>,
        raw_cells: Vec<(CellKey, u64)>,
    ) -> CountsCube {
        let mut cells = BTreeMap::new();
        merge_into(&mut cells, raw_cells);
        CountsCube {
            class,
            period_ids,
            cells,
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (&CellKey, u64)> {
        self.cells.iter().map(|(k, v)| (k, *v))
    }

    /// Total reference count in one period (all outlets).
    pub fn total(&self, period_id: &str) -> u64 {
        self.cells
            .iter()
            .filter(|(k, _)| k.period_id == period_id)
            .map(|(_, v)| v)
            .sum()
    }

    /// Write the versioned columnar snapshot. Byte-stable for identical
    /// inputs: rows are emitted in key order.
    pub fn write_snapshot(&self, mut w: impl Write) -> Result<()> {
        let io_err = |e: std::io::Error| Error::data(format!("cube write: {e}"));
        writeln!(w, "#refflow-cube {CUBE_FORMAT_VERSION}").map_err(io_err)?;
        writeln!(w, "#schemes {}", self.class.scheme_ids.join(",")).map_err(io_err)?;
        writeln!(w, "#periods {}", self.period_ids.join(",")).map_err(io_err)?;
        writeln!(w, "[journals]").map_err(io_err)?;
        writeln!(
            w,
            "journal_id,cluster_id,cluster_admitted,{}",
            self.class.scheme_ids.join(",")
        )
        .map_err(io_err)?;
        for (id, jc) in &self.class.journals {
            let cluster = jc.cluster_id.map(|c| c.to_string()).unwrap_or_default();
            let memberships: Vec<String> = self
                .class
                .scheme_ids
                .iter()
                .map(|s| u8::from(jc.membership.get(s).copied().unwrap_or(false)).to_string())
                .collect();
            writeln!(
                w,
                "{id},{cluster},{},{}",
                u8::from(jc.cluster_admitted),
                memberships.join(",")
            )
            .map_err(io_err)?;
        }
        writeln!(w, "[cells]").map_err(io_err)?;
        writeln!(w, "period,citing_journal,cited_journal,outlet,count").map_err(io_err)?;
        for (key, count) in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{count}",
                key.period_id,
                key.citing_journal,
                key.cited_journal.as_deref().unwrap_or(""),
                key.outlet.as_str()
            )
            .map_err(io_err)?;
        }
        Ok(())
    }

    pub fn read_snapshot(reader: impl BufRead) -> Result<CountsCube> {
        let mut lines = reader.lines();
        let mut next = || -> Result<Option<String>> {
            match lines.next() {
                Some(Ok(l)) => Ok(Some(l)),
                Some(Err(e)) => Err(Error::data(format!("cube read: {e}"))),
                None => Ok(None),
            }
        };

        let header = next()?.ok_or_else(|| Error::data("empty cube file"))?;
        let expected = format!("#refflow-cube {CUBE_FORMAT_VERSION}");
        if header != expected {
            return Err(Error::data(format!(
                "unsupported cube header '{header}' (expected '{expected}')"
            )));
        }
        let schemes_line = next()?.ok_or_else(|| Error::data("cube missing #schemes line"))?;
        let scheme_ids: Vec<String> = schemes_line
            .strip_prefix("#schemes ")
            .ok_or_else(|| Error::data("cube missing #schemes line"))?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        let periods_line = next()?.ok_or_else(|| Error::data("cube missing #periods line"))?;
        let period_ids: Vec<String> = periods_line
            .strip_prefix("#periods ")
            .ok_or_else(|| Error::data("cube missing #periods line"))?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();

        if next()?.as_deref() != Some("[journals]") {
            return Err(Error::data("cube missing [journals] section"));
        }
        next()?; // journals column header
        let mut journals: BTreeMap<String, JournalClass> = BTreeMap::new();
        let mut cells: BTreeMap<CellKey, u64> = BTreeMap::new();
        let mut in_cells = false;
        let mut seen_cells_header = false;
        while let Some(line) = next()? {
            if line == "[cells]" {
                in_cells = true;
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if in_cells && !seen_cells_header {
                seen_cells_header = true; // cells column header
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if !in_cells {
                let expected_len = 3 + scheme_ids.len();
                if fields.len() != expected_len {
                    return Err(Error::data(format!("bad journal row '{line}'")));
                }
                let cluster_id = if fields[1].is_empty() {
                    None
                } else {
                    Some(
                        fields[1]
                            .parse()
                            .map_err(|_| Error::data(format!("bad cluster id in '{line}'")))?,
                    )
                };
                let membership = scheme_ids
                    .iter()
                    .zip(&fields[3..])
                    .map(|(s, v)| (s.clone(), *v == "1"))
                    .collect();
                journals.insert(
                    fields[0].to_string(),
                    JournalClass {
                        cluster_id,
                        cluster_admitted: fields[2] == "1",
                        membership,
                    },
                );
            } else {
                if fields.len() != 5 {
                    return Err(Error::data(format!("bad cell row '{line}'")));
                }
                let key = CellKey {
                    period_id: fields[0].to_string(),
                    citing_journal: fields[1].to_string(),
                    cited_journal: (!fields[2].is_empty()).then(|| fields[2].to_string()),
                    outlet: OutletKind::parse(fields[3])?,
                };
                let count: u64 = fields[4]
                    .parse()
                    .map_err(|_| Error::data(format!("bad count in '{line}'")))?;
                *cells.entry(key).or_insert(0) += count;
            }
        }

        Ok(CountsCube {
            class: Classification {
                scheme_ids,
                journals,
            },
            period_ids,
            cells,
        })
    }
}

/// Materialize every classified reference of the store (the direct-edge
/// route: diagnostics and the oracle-style iteration, no cube involved).
pub fn classified_references(store: &CorpusStore, class: &Classification) -> Vec<ClassifiedReference> {
    let mut out = Vec::new();
    for work in store.works.values() {
        for cited_id in &work.references {
            let cited = store.resolve_cited(cited_id);
            out.push(classify_reference(
                &work.period_id,
                &work.journal_id,
                cited_id,
                &cited,
                class,
            ));
        }
    }
    out
}
