//! Re-run the field-level indicator suite under alternative journal
//! classification schemes and produce the scheme comparison tables.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use std::collections::BTreeSet;

use crate::corpus::CorpusStore;
use crate::cube::CountsCube;
use crate::error::{Error, Result};
use crate::indicators::{
    indicator_table, DenomMode, Granularity, IndicatorRow, SchemeSel,
};
use crate::registry::Registry;

/// Journal counts and field-level indicators of one scheme in one period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeComparisonRow {
    pub scheme: String,
    pub period_id: String,
    pub citing_count: u64,
    pub cited_count: u64,
}

fn require_registry_scheme(registry: &Registry, scheme_id: &str) -> Result<()> {
    if registry.scheme_ids.iter().any(|s| s == scheme_id) {
        Ok(())
    } else {
        Err(Error::usage(format!("unknown scheme '{scheme_id}'")))
    }
}

/// Count citing journals (scheme members with at least one stored work in
/// the period) and cited journals (scheme members receiving at least one
/// citation in the period).
pub fn count_journals_by_scheme(
    registry: &Registry,
    store: &CorpusStore,
    period_id: &str,
    scheme_ids: &[String],
) -> Result<Vec<SchemeComparisonRow>> {
    for scheme in scheme_ids {
        require_registry_scheme(registry, scheme)?;
    }
    let mut citing: BTreeSet<&str> = BTreeSet::new();
    let mut cited: BTreeSet<String> = BTreeSet::new();
    for work in store.works.values() {
        if work.period_id != period_id {
            continue;
        }
        citing.insert(&work.journal_id);
        for cited_id in &work.references {
            if let Some(journal) = store.resolve_cited(cited_id).journal() {
                cited.insert(journal.to_string());
            }
        }
    }
    Ok(scheme_ids
        .iter()
        .map(|scheme| SchemeComparisonRow {
            scheme: scheme.clone(),
            period_id: period_id.to_string(),
            citing_count: citing
                .iter()
                .filter(|j| registry.is_member(j, scheme))
                .count() as u64,
            cited_count: cited
                .iter()
                .filter(|j| registry.is_member(j, scheme))
                .count() as u64,
        })
        .collect())
}

/// The four field-level indicator rows of one scheme. `cited_override`
/// re-scopes only the cited side (mixed-scheme runs); by default the scheme
/// filters both sides.
pub fn field_indicators_by_scheme(
    cube: &CountsCube,
    scheme_id: &str,
    period_id: &str,
    denom: DenomMode,
    cited_override: Option<&str>,
) -> Result<Vec<IndicatorRow>> {
    let sel = SchemeSel {
        citing: scheme_id.to_string(),
        cited: cited_override.unwrap_or(scheme_id).to_string(),
    };
    let (rows, sidecar) = indicator_table(cube, &sel, denom, Granularity::Field, period_id)?;
    if let Some(entry) = sidecar.first() {
        return Err(Error::data(format!(
            "scheme '{scheme_id}' has no citing references in period {period_id}: {}",
            entry.reason
        )));
    }
    Ok(rows)
}

/// Field indicators for several schemes over one shared read-only cube.
/// Schemes are independent, so they evaluate in parallel.
pub fn field_indicators_for_schemes(
    cube: &CountsCube,
    scheme_ids: &[String],
    period_id: &str,
    denom: DenomMode,
) -> Result<Vec<Vec<IndicatorRow>>> {
    #[cfg(feature = "parallel")]
    {
        scheme_ids
            .par_iter()
            .map(|s| field_indicators_by_scheme(cube, s, period_id, denom, None))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        scheme_ids
            .iter()
            .map(|s| field_indicators_by_scheme(cube, s, period_id, denom, None))
            .collect()
    }
}
