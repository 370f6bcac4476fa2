//! Journal and cluster registry: the static inputs describing which journals
//! are analyzed, how they are clustered, and which classification schemes
//! mark them as field members.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Clusters smaller than this are loaded but excluded from default analysis.
pub const CLUSTER_ADMISSION_THRESHOLD: usize = 10;

/// One journal of the registry, the unit of analysis.
#[derive(Debug, Clone)]
pub struct JournalRecord {
    pub journal_id: String,
    pub name: String,
    pub cluster_id: Option<u32>,
    /// scheme_id -> is this journal a field member under that scheme.
    pub field_membership: BTreeMap<String, bool>,
}

#[derive(Debug, Clone)]
pub struct ClusterRecord {
    pub cluster_id: u32,
    pub label: String,
    /// Number of registry journals carrying this cluster_id.
    pub member_count: usize,
    /// Below the admission threshold: loaded and queryable, but excluded
    /// from default analysis sets.
    pub below_threshold: bool,
}

/// Where a scheme's membership booleans come from.
#[derive(Debug, Clone)]
pub enum SchemeSource {
    /// A 0/1 column of the journal registry CSV.
    Column(String),
    /// An external file with one journal_id per line (`#` comments allowed).
    IdList(PathBuf),
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub scheme_id: String,
    pub source: SchemeSource,
}

impl SchemeConfig {
    pub fn column(scheme_id: &str) -> Self {
        SchemeConfig {
            scheme_id: scheme_id.to_string(),
            source: SchemeSource::Column(scheme_id.to_string()),
        }
    }

    pub fn id_list(scheme_id: &str, path: impl Into<PathBuf>) -> Self {
        SchemeConfig {
            scheme_id: scheme_id.to_string(),
            source: SchemeSource::IdList(path.into()),
        }
    }
}

/// The three schemes carried as columns of the registry CSV.
pub fn builtin_schemes() -> Vec<SchemeConfig> {
    ["econlit", "truc", "openalex_econ"]
        .iter()
        .map(|s| SchemeConfig::column(s))
        .collect()
}

/// Validated, immutable registry of journals and clusters.
#[derive(Debug, Clone)]
pub struct Registry {
    pub journals: BTreeMap<String, JournalRecord>,
    pub clusters: BTreeMap<u32, ClusterRecord>,
    pub scheme_ids: Vec<String>,
}

impl Registry {
    pub fn is_member(&self, journal_id: &str, scheme_id: &str) -> bool {
        self.journals
            .get(journal_id)
            .and_then(|j| j.field_membership.get(scheme_id))
            .copied()
            .unwrap_or(false)
    }

    pub fn cluster_of(&self, journal_id: &str) -> Option<u32> {
        self.journals.get(journal_id).and_then(|j| j.cluster_id)
    }

    /// The journal's cluster, only if that cluster meets the admission threshold.
    pub fn admitted_cluster_of(&self, journal_id: &str) -> Option<u32> {
        let c = self.cluster_of(journal_id)?;
        let rec = self.clusters.get(&c)?;
        (!rec.below_threshold).then_some(c)
    }

    /// Cluster ids meeting the admission threshold, in id order.
    pub fn admitted_clusters(&self) -> Vec<u32> {
        self.clusters
            .values()
            .filter(|c| !c.below_threshold)
            .map(|c| c.cluster_id)
            .collect()
    }
}

/// Inclusive time window used for period attribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodWindow {
    pub period_id: String,
    pub year_start: i32,
    pub year_end: i32,
}

impl PeriodWindow {
    pub fn contains(&self, year: i32) -> bool {
        year >= self.year_start && year <= self.year_end
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn read_id_list(path: &Path) -> Result<BTreeSet<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ids = BTreeSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        ids.insert(trimmed.to_string());
    }
    Ok(ids)
}

/// Load and validate the journal/cluster registry.
///
/// Journal CSV columns: `journal_id,name,cluster_id,<scheme columns...>`
/// (empty cluster_id = unclustered). Cluster CSV columns: `cluster_id,label`.
pub fn load_registry(
    journal_csv: &Path,
    cluster_csv: &Path,
    schemes: &[SchemeConfig],
) -> Result<Registry> {
    let mut cluster_labels: BTreeMap<u32, String> = BTreeMap::new();
    let mut rdr = open_csv(cluster_csv)?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::data(format!("{}: {e}", cluster_csv.display())))?
        .clone();
    let cid_col = headers
        .iter()
        .position(|h| h == "cluster_id")
        .ok_or_else(|| Error::data(format!("{}: missing cluster_id column", cluster_csv.display())))?;
    let label_col = headers
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| Error::data(format!("{}: missing label column", cluster_csv.display())))?;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::data(format!("{}: {e}", cluster_csv.display())))?;
        let cid: u32 = rec[cid_col]
            .trim()
            .parse()
            .map_err(|_| Error::data(format!("invalid cluster_id '{}'", &rec[cid_col])))?;
        cluster_labels.insert(cid, rec[label_col].to_string());
    }

    // Resolve id-list schemes up front so the journal pass is a pure lookup.
    let mut id_lists: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for scheme in schemes {
        if let SchemeSource::IdList(path) = &scheme.source {
            id_lists.insert(scheme.scheme_id.clone(), read_id_list(path)?);
        }
    }

    let mut rdr = open_csv(journal_csv)?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::data(format!("{}: {e}", journal_csv.display())))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col("journal_id")
        .ok_or_else(|| Error::data(format!("{}: missing journal_id column", journal_csv.display())))?;
    let name_col = col("name")
        .ok_or_else(|| Error::data(format!("{}: missing name column", journal_csv.display())))?;
    let cluster_col = col("cluster_id")
        .ok_or_else(|| Error::data(format!("{}: missing cluster_id column", journal_csv.display())))?;

    let mut scheme_cols: BTreeMap<String, usize> = BTreeMap::new();
    for scheme in schemes {
        if let SchemeSource::Column(column) = &scheme.source {
            let idx = col(column).ok_or_else(|| {
                Error::data(format!(
                    "{}: missing scheme column '{}' for scheme '{}'",
                    journal_csv.display(),
                    column,
                    scheme.scheme_id
                ))
            })?;
            scheme_cols.insert(scheme.scheme_id.clone(), idx);
        }
    }

    let mut journals: BTreeMap<String, JournalRecord> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::data(format!("{}: {e}", journal_csv.display())))?;
        let journal_id = rec[id_col].trim().to_string();
        if journal_id.is_empty() {
            return Err(Error::data("journal row with empty journal_id"));
        }
        if journals.contains_key(&journal_id) {
            return Err(Error::data(format!("duplicate journal_id '{journal_id}'")));
        }
        let cluster_field = rec[cluster_col].trim();
        let cluster_id = if cluster_field.is_empty() {
            None
        } else {
            let cid: u32 = cluster_field
                .parse()
                .map_err(|_| Error::data(format!("journal '{journal_id}': invalid cluster_id '{cluster_field}'")))?;
            if !cluster_labels.contains_key(&cid) {
                return Err(Error::data(format!(
                    "journal '{journal_id}' references undeclared cluster {cid}"
                )));
            }
            Some(cid)
        };

        let mut field_membership = BTreeMap::new();
        for scheme in schemes {
            let member = match &scheme.source {
                SchemeSource::Column(_) => {
                    let idx = scheme_cols[&scheme.scheme_id];
                    match rec[idx].trim() {
                        "1" => true,
                        "0" | "" => false,
                        other => {
                            return Err(Error::data(format!(
                                "journal '{journal_id}': scheme '{}' value '{other}' is not 0/1",
                                scheme.scheme_id
                            )))
                        }
                    }
                }
                SchemeSource::IdList(_) => id_lists[&scheme.scheme_id].contains(&journal_id),
            };
            field_membership.insert(scheme.scheme_id.clone(), member);
        }

        journals.insert(
            journal_id.clone(),
            JournalRecord {
                journal_id,
                name: rec[name_col].to_string(),
                cluster_id,
                field_membership,
            },
        );
    }

    let mut member_counts: BTreeMap<u32, usize> = BTreeMap::new();
    for j in journals.values() {
        if let Some(c) = j.cluster_id {
            *member_counts.entry(c).or_insert(0) += 1;
        }
    }
    let clusters = cluster_labels
        .into_iter()
        .map(|(cid, label)| {
            let member_count = member_counts.get(&cid).copied().unwrap_or(0);
            (
                cid,
                ClusterRecord {
                    cluster_id: cid,
                    label,
                    member_count,
                    below_threshold: member_count < CLUSTER_ADMISSION_THRESHOLD,
                },
            )
        })
        .collect();

    Ok(Registry {
        journals,
        clusters,
        scheme_ids: schemes.iter().map(|s| s.scheme_id.clone()).collect(),
    })
}

/// Load period windows from a `period_id,year_start,year_end` CSV.
/// Windows must be well-formed and pairwise disjoint.
pub fn load_periods(path: &Path) -> Result<Vec<PeriodWindow>> {
    let mut rdr = open_csv(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?
        .clone();
    for required in ["period_id", "year_start", "year_end"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::data(format!("{}: missing {required} column", path.display())));
        }
    }
    let idx = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (id_col, start_col, end_col) = (idx("period_id"), idx("year_start"), idx("year_end"));

    let mut periods: Vec<PeriodWindow> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        let period = PeriodWindow {
            period_id: rec[id_col].trim().to_string(),
            year_start: rec[start_col]
                .trim()
                .parse()
                .map_err(|_| Error::data(format!("invalid year_start '{}'", &rec[start_col])))?,
            year_end: rec[end_col]
                .trim()
                .parse()
                .map_err(|_| Error::data(format!("invalid year_end '{}'", &rec[end_col])))?,
        };
        if period.year_start > period.year_end {
            return Err(Error::data(format!(
                "period '{}': year_start {} > year_end {}",
                period.period_id, period.year_start, period.year_end
            )));
        }
        if periods.iter().any(|p| p.period_id == period.period_id) {
            return Err(Error::data(format!("duplicate period_id '{}'", period.period_id)));
        }
        periods.push(period);
    }
    for (i, a) in periods.iter().enumerate() {
        for b in &periods[i + 1..] {
            if a.year_start <= b.year_end && b.year_start <= a.year_end {
                return Err(Error::data(format!(
                    "periods '{}' and '{}' overlap",
                    a.period_id, b.period_id
                )));
            }
        }
    }
    Ok(periods)
}
