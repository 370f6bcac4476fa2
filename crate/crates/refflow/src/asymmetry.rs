//! Reference Asymmetry matrices between clusters or journals, net-exporter
//! rankings, and the long-format heatmap export.

use std::collections::BTreeMap;
use std::io::Write;

use num::rational::{BigRational, Ratio};
use num::{BigInt, Signed, Zero};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::cube::{CountsCube, OutletKind};
use crate::error::{Error, Result};
use crate::indicators::{DenomMode, Granularity, SchemeSel, SidecarEntry};
use crate::share::{format_share, Share};

/// Which entities the matrix covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntityFilter {
    /// All admitted clusters (cluster granularity).
    AllClusters,
    /// The journals of one cluster.
    WithinCluster(u32),
    /// The journals of two clusters (e.g. CORE vs. a field cluster).
    CrossClusters(u32, u32),
    /// An explicit journal list.
    Journals(Vec<String>),
    /// Every citing journal (emitted only on request: size, not feasibility).
    AllJournals,
}

/// Antisymmetric matrix of normalized reference-intensity differences,
/// with its raw flows.
#[derive(Debug, Clone)]
pub struct RaMatrix {
    pub scheme: String,
    pub period_id: String,
    pub granularity: Granularity,
    pub denom: DenomMode,
    pub entity_ids: Vec<String>,
    /// flows[i][j]: references from entity i to journal articles of entity j.
    pub flows: Vec<Vec<u64>>,
    /// totals[i]: entity i's full reference count under the denominator mode.
    pub totals: Vec<u64>,
    /// ra[i][j] = flows[i][j]/totals[i] - flows[j][i]/totals[j], exact.
    pub ra: Vec<Vec<Share>>,
    /// Entities dropped because their total was zero.
    pub excluded: Vec<SidecarEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExporterRanking {
    pub entity_id: String,
    pub negative_count: usize,
    pub row_sum: BigRational,
    pub rank: usize,
}

fn entity_universe(cube: &CountsCube, sel: &SchemeSel, filter: &EntityFilter) -> Result<Vec<String>> {
    let class = &cube.class;
    let journals_of = |cluster: u32| -> Vec<String> {
        class
            .journals
            .keys()
            .filter(|j| class.admitted_cluster_of(j) == Some(cluster))
            .cloned()
            .collect()
    };
    let ids = match filter {
        EntityFilter::AllClusters => class
            .admitted_clusters()
            .into_iter()
            .map(|c| c.to_string())
            .collect(),
        EntityFilter::WithinCluster(c) => journals_of(*c),
        EntityFilter::CrossClusters(a, b) => {
            let mut ids = journals_of(*a);
            ids.extend(journals_of(*b));
            ids.sort();
            ids.dedup();
            ids
        }
        EntityFilter::Journals(list) => {
            let mut ids = list.clone();
            ids.sort();
            ids.dedup();
            for id in &ids {
                if !class.journals.contains_key(id) {
                    return Err(Error::data(format!("unknown journal '{id}' in entity filter")));
                }
            }
            ids
        }
        EntityFilter::AllJournals => class
            .journals
            .keys()
            .filter(|j| class.is_member(j, &sel.citing))
            .cloned()
            .collect(),
    };
    Ok(ids)
}

/// Build the RA matrix over the filtered entities for one period.
pub fn ra_matrix(
    cube: &CountsCube,
    sel: &SchemeSel,
    denom: DenomMode,
    granularity: Granularity,
    filter: &EntityFilter,
    period_id: &str,
) -> Result<RaMatrix> {
    if granularity == Granularity::Field {
        return Err(Error::usage("RA matrices are defined for cluster and journal granularity"));
    }
    crate::classify::require_scheme(&cube.class, &sel.citing)?;
    let class = &cube.class;
    let candidates = entity_universe(cube, sel, filter)?;
    let index: BTreeMap<&str, usize> = candidates
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let entity_of = |journal: &str| -> Option<usize> {
        match granularity {
            Granularity::Cluster => class
                .admitted_cluster_of(journal)
                .and_then(|c| index.get(c.to_string().as_str()).copied()),
            Granularity::Journal => index.get(journal).copied(),
            Granularity::Field => None,
        }
    };

    let n = candidates.len();
    let mut flows = vec![vec![0u64; n]; n];
    let mut totals = vec![0u64; n];
    for (key, count) in cube.cells() {
        if key.period_id != period_id || !class.is_member(&key.citing_journal, &sel.citing) {
            continue;
        }
        let Some(i) = entity_of(&key.citing_journal) else {
            continue;
        };
        let in_denominator = match denom {
            DenomMode::AllOutlets => true,
            DenomMode::JournalOnly => key.outlet == OutletKind::Journal,
        };
        if in_denominator {
            totals[i] += count;
        }
        if key.outlet == OutletKind::Journal {
            if let Some(j) = key.cited_journal.as_deref().and_then(entity_of) {
                flows[i][j] += count;
            }
        }
    }

    // Drop zero-total entities (never silently: sidecar records each).
    let mut keep = Vec::new();
    let mut excluded = Vec::new();
    for (i, id) in candidates.iter().enumerate() {
        if totals[i] > 0 {
            keep.push(i);
        } else {
            excluded.push(SidecarEntry {
                scope_id: id.clone(),
                reason: "no references in period".to_string(),
            });
        }
    }
    if matches!(filter, EntityFilter::WithinCluster(_)) && keep.len() < 2 {
        return Err(Error::data(format!(
            "degenerate matrix: cluster has {} active journal(s) in period {period_id}",
            keep.len()
        )));
    }
    let entity_ids: Vec<String> = keep.iter().map(|&i| candidates[i].clone()).collect();
    let flows: Vec<Vec<u64>> = keep
        .iter()
        .map(|&i| keep.iter().map(|&j| flows[i][j]).collect())
        .collect();
    let totals: Vec<u64> = keep.iter().map(|&i| totals[i]).collect();

    let ra_row = |i: usize| -> Vec<Share> {
        (0..totals.len())
            .map(|j| {
                Ratio::new(flows[i][j] as i64, totals[i] as i64)
                    - Ratio::new(flows[j][i] as i64, totals[j] as i64)
            })
            .collect()
    };
    #[cfg(feature = "parallel")]
    let ra: Vec<Vec<Share>> = (0..totals.len()).into_par_iter().map(ra_row).collect();
    #[cfg(not(feature = "parallel"))]
    let ra: Vec<Vec<Share>> = (0..totals.len()).map(ra_row).collect();

    Ok(RaMatrix {
        scheme: sel.label(),
        period_id: period_id.to_string(),
        granularity,
        denom,
        entity_ids,
        flows,
        totals,
        ra,
        excluded,
    })
}

/// RA matrix restricted to the journals of one cluster.
pub fn within_cluster_ra(
    cube: &CountsCube,
    sel: &SchemeSel,
    denom: DenomMode,
    cluster_id: u32,
    period_id: &str,
) -> Result<RaMatrix> {
    ra_matrix(
        cube,
        sel,
        denom,
        Granularity::Journal,
        &EntityFilter::WithinCluster(cluster_id),
        period_id,
    )
}

/// Rank entities as net knowledge exporters: most strictly-negative row
/// entries first, then most negative row sum, ties broken lexicographically.
pub fn net_exporters(matrix: &RaMatrix) -> Vec<ExporterRanking> {
    let n = matrix.entity_ids.len();
    let mut rankings: Vec<ExporterRanking> = (0..n)
        .map(|i| {
            let negative_count = (0..n)
                .filter(|&j| j != i && matrix.ra[i][j].is_negative())
                .count();
            let row_sum: BigRational = (0..n)
                .map(|j| {
                    BigRational::new(
                        BigInt::from(*matrix.ra[i][j].numer()),
                        BigInt::from(*matrix.ra[i][j].denom()),
                    )
                })
                .fold(BigRational::zero(), |acc, v| acc + v);
            ExporterRanking {
                entity_id: matrix.entity_ids[i].clone(),
                negative_count,
                row_sum,
                rank: 0,
            }
        })
        .collect();
    rankings.sort_by(|a, b| {
        b.negative_count
            .cmp(&a.negative_count)
            .then_with(|| a.row_sum.cmp(&b.row_sum))
            .then_with(|| a.entity_id.cmp(&b.entity_id))
    });
    for (i, r) in rankings.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    rankings
}

/// Long-format heatmap CSV: full matrix, both triangles, so any plotting
/// tool renders the paired-cell heatmaps directly.
pub fn export_heatmap(matrix: &RaMatrix, mut w: impl Write) -> Result<()> {
    let io_err = |e: std::io::Error| Error::data(format!("heatmap write: {e}"));
    writeln!(w, "# scheme={}", matrix.scheme).map_err(io_err)?;
    writeln!(w, "# denominator={}", matrix.denom.as_str()).map_err(io_err)?;
    writeln!(w, "# sign_convention=negative-means-row-entity-is-net-exporter-to-column-entity")
        .map_err(io_err)?;
    writeln!(w, "period,granularity,row_entity,col_entity,flow_ij,flow_ji,ra").map_err(io_err)?;
    let n = matrix.entity_ids.len();
    for i in 0..n {
        for j in 0..n {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                matrix.period_id,
                matrix.granularity.as_str(),
                matrix.entity_ids[i],
                matrix.entity_ids[j],
                matrix.flows[i][j],
                matrix.flows[j][i],
                format_share(matrix.ra[i][j]),
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}
