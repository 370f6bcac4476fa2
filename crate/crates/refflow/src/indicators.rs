//! Self-referentiality indicators at field/cluster/journal granularity,
//! self-impact, outlet-type shares, and the bivariate scatter points behind
//! the influence plots.

use std::collections::BTreeMap;

use crate::classify::{OutletType, RefFlags};
use crate::cube::{CountsCube, OutletKind};
use crate::error::{Error, Result};
use crate::share::{share, Share};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Granularity {
    Field,
    Cluster,
    Journal,
}

impl Granularity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Granularity::Field => "field",
            Granularity::Cluster => "cluster",
            Granularity::Journal => "journal",
        }
    }

    pub fn parse(s: &str) -> Result<Granularity> {
        match s {
            "field" => Ok(Granularity::Field),
            "cluster" => Ok(Granularity::Cluster),
            "journal" => Ok(Granularity::Journal),
            other => Err(Error::usage(format!("unknown granularity '{other}'"))),
        }
    }
}

/// The four self-reference indicator types of Eq-style nesting
/// journal-self <= within-cluster <= in-any-cluster (<= within-field).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum IndicatorType {
    JournalSelf,
    WithinCluster,
    InAnyCluster,
    WithinField,
}

impl IndicatorType {
    pub const ALL: [IndicatorType; 4] = [
        IndicatorType::JournalSelf,
        IndicatorType::WithinCluster,
        IndicatorType::InAnyCluster,
        IndicatorType::WithinField,
    ];

    pub fn code(&self) -> u8 {
        match self {
            IndicatorType::JournalSelf => 1,
            IndicatorType::WithinCluster => 2,
            IndicatorType::InAnyCluster => 3,
            IndicatorType::WithinField => 4,
        }
    }

    fn of(self, flags: &RefFlags) -> bool {
        match self {
            IndicatorType::JournalSelf => flags.is_journal_self,
            IndicatorType::WithinCluster => flags.is_within_cluster,
            IndicatorType::InAnyCluster => flags.is_in_any_cluster,
            IndicatorType::WithinField => flags.is_within_field,
        }
    }
}

/// Which references enter the denominator R_g.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenomMode {
    /// All references, resolvable or not (default).
    AllOutlets,
    /// Only references resolved to journal articles.
    JournalOnly,
}

impl DenomMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DenomMode::AllOutlets => "all-outlets",
            DenomMode::JournalOnly => "journal-only",
        }
    }
}

/// Scheme selection: the citing-side filter and the cited-side membership
/// rule. Normally the same scheme; robustness runs may override the cited
/// side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeSel {
    pub citing: String,
    pub cited: String,
}

impl SchemeSel {
    pub fn same(scheme_id: &str) -> Self {
        SchemeSel {
            citing: scheme_id.to_string(),
            cited: scheme_id.to_string(),
        }
    }

    pub fn label(&self) -> String {
        if self.citing == self.cited {
            self.citing.clone()
        } else {
            format!("{}>{}", self.citing, self.cited)
        }
    }

    fn validate(&self, cube: &CountsCube) -> Result<()> {
        crate::classify::require_scheme(&cube.class, &self.citing)?;
        crate::classify::require_scheme(&cube.class, &self.cited)
    }
}

/// A scope an indicator is computed for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    Field,
    Cluster(u32),
    Journal(String),
}

impl Scope {
    pub fn id(&self) -> String {
        match self {
            Scope::Field => "FIELD".to_string(),
            Scope::Cluster(c) => c.to_string(),
            Scope::Journal(j) => j.clone(),
        }
    }

    pub fn granularity(&self) -> Granularity {
        match self {
            Scope::Field => Granularity::Field,
            Scope::Cluster(_) => Granularity::Cluster,
            Scope::Journal(_) => Granularity::Journal,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IndicatorRow {
    pub scheme: String,
    pub period_id: String,
    pub granularity: Granularity,
    pub scope_id: String,
    pub itype: IndicatorType,
    pub s: u64,
    pub r: u64,
    pub share: Share,
}

#[derive(Debug, Clone)]
pub struct SelfImpactRow {
    pub scheme: String,
    pub period_id: String,
    pub granularity: Granularity,
    pub scope_id: String,
    pub sc: u64,
    pub c: u64,
    pub si: Share,
}

#[derive(Debug, Clone)]
pub struct OutletShareRow {
    pub period_id: String,
    pub outlet_type: OutletType,
    pub citations: u64,
    pub share: Share,
}

/// Scope skipped by a batch operation, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SidecarEntry {
    pub scope_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct JournalAgg {
    /// Outgoing references, all outlets.
    pub r_all: u64,
    /// Outgoing references resolved to journal articles.
    pub r_journal: u64,
    /// Numerators for the four indicator types.
    pub s: [u64; 4],
    /// Citations received from the citing set.
    pub received_total: u64,
    /// ... of which from the journal itself.
    pub received_self: u64,
    /// ... of which from journals of its own admitted cluster (incl. itself).
    pub received_same_cluster: u64,
}

impl JournalAgg {
    fn add(&mut self, other: &JournalAgg) {
        self.r_all += other.r_all;
        self.r_journal += other.r_journal;
        for t in 0..4 {
            self.s[t] += other.s[t];
        }
        self.received_total += other.received_total;
        self.received_self += other.received_self;
        self.received_same_cluster += other.received_same_cluster;
    }
}

/// One pass over the cube for a (scheme selection, period): per-journal
/// outgoing and received tallies from which every indicator derives.
#[derive(Debug, Clone)]
pub struct Aggregates {
    pub sel: SchemeSel,
    pub period_id: String,
    pub journals: BTreeMap<String, JournalAgg>,
}

impl Aggregates {
    pub fn compute(cube: &CountsCube, sel: &SchemeSel, period_id: &str) -> Result<Aggregates> {
        sel.validate(cube)?;
        let class = &cube.class;
        let mut journals: BTreeMap<String, JournalAgg> = BTreeMap::new();
        for (key, count) in cube.cells() {
            if key.period_id != period_id {
                continue;
            }
            if !class.is_member(&key.citing_journal, &sel.citing) {
                continue;
            }
            let entry = journals.entry(key.citing_journal.clone()).or_default();
            entry.r_all += count;
            if key.outlet == OutletKind::Journal {
                entry.r_journal += count;
            }
            let outlet = match key.outlet {
                OutletKind::Journal => Some(OutletType::Journal),
                _ => None,
            };
            let flags = class.flags(
                &sel.cited,
                &key.citing_journal,
                key.cited_journal.as_deref(),
                outlet,
            );
            for (t, itype) in IndicatorType::ALL.iter().enumerate() {
                if itype.of(&flags) {
                    entry.s[t] += count;
                }
            }

            // Received side: the cited journal must be a registry journal.
            if let Some(cited) = &key.cited_journal {
                if class.journals.contains_key(cited) {
                    let citing_cluster = class.admitted_cluster_of(&key.citing_journal);
                    let cited_cluster = class.admitted_cluster_of(cited);
                    let rx = journals.entry(cited.clone()).or_default();
                    rx.received_total += count;
                    if *cited == key.citing_journal {
                        rx.received_self += count;
                    }
                    if cited_cluster.is_some() && cited_cluster == citing_cluster {
                        rx.received_same_cluster += count;
                    }
                }
            }
        }
        Ok(Aggregates {
            sel: sel.clone(),
            period_id: period_id.to_string(),
            journals,
        })
    }

    /// Sum the aggregates of every journal in a scope. Field scope sums all
    /// citing journals; cluster scope sums its member journals.
    pub fn scope_agg(&self, cube: &CountsCube, scope: &Scope) -> JournalAgg {
        let class = &cube.class;
        let mut total = JournalAgg::default();
        match scope {
            Scope::Field => {
                for agg in self.journals.values() {
                    total.add(agg);
                }
            }
            Scope::Cluster(c) => {
                for (id, agg) in &self.journals {
                    if class.admitted_cluster_of(id) == Some(*c) {
                        total.add(agg);
                    }
                }
            }
            Scope::Journal(j) => {
                if let Some(agg) = self.journals.get(j) {
                    total.add(agg);
                }
            }
        }
        total
    }

    fn denominator(&self, agg: &JournalAgg, denom: DenomMode) -> u64 {
        match denom {
            DenomMode::AllOutlets => agg.r_all,
            DenomMode::JournalOnly => agg.r_journal,
        }
    }
}

/// Share of self-references of one type in one scope.
pub fn self_ref_share(
    cube: &CountsCube,
    sel: &SchemeSel,
    denom: DenomMode,
    scope: &Scope,
    itype: IndicatorType,
    period_id: &str,
) -> Result<IndicatorRow> {
    let aggs = Aggregates::compute(cube, sel, period_id)?;
    self_ref_share_from(&aggs, cube, denom, scope, itype)
}

fn self_ref_share_from(
    aggs: &Aggregates,
    cube: &CountsCube,
    denom: DenomMode,
    scope: &Scope,
    itype: IndicatorType,
) -> Result<IndicatorRow> {
    let agg = aggs.scope_agg(cube, scope);
    let r = aggs.denominator(&agg, denom);
    if r == 0 {
        return Err(Error::data(format!(
            "no references in scope {} for period {}",
            scope.id(),
            aggs.period_id
        )));
    }
    let s = agg.s[itype as usize];
    Ok(IndicatorRow {
        scheme: aggs.sel.label(),
        period_id: aggs.period_id.clone(),
        granularity: scope.granularity(),
        scope_id: scope.id(),
        itype,
        s,
        r,
        share: share(s, r),
    })
}

/// Self-impact of a cluster or journal.
pub fn self_impact(
    cube: &CountsCube,
    sel: &SchemeSel,
    scope: &Scope,
    period_id: &str,
) -> Result<SelfImpactRow> {
    let aggs = Aggregates::compute(cube, sel, period_id)?;
    self_impact_from(&aggs, cube, scope)
}

fn self_impact_from(aggs: &Aggregates, cube: &CountsCube, scope: &Scope) -> Result<SelfImpactRow> {
    let granularity = scope.granularity();
    if granularity == Granularity::Field {
        return Err(Error::usage("self-impact is defined for cluster and journal scopes"));
    }
    let agg = aggs.scope_agg(cube, scope);
    let (sc, c) = match scope {
        Scope::Cluster(_) => (agg.received_same_cluster, agg.received_total),
        Scope::Journal(_) => (agg.received_self, agg.received_total),
        Scope::Field => unreachable!(),
    };
    if c == 0 {
        return Err(Error::data(format!(
            "scope {} never cited within corpus in period {}",
            scope.id(),
            aggs.period_id
        )));
    }
    Ok(SelfImpactRow {
        scheme: aggs.sel.label(),
        period_id: aggs.period_id.clone(),
        granularity,
        scope_id: scope.id(),
        sc,
        c,
        si: share(sc, c),
    })
}

/// Share of citations a journal receives from journals of its own cluster
/// (including itself). Distinct from journal-level self-impact.
pub fn received_within_cluster_share(
    cube: &CountsCube,
    sel: &SchemeSel,
    journal_id: &str,
    period_id: &str,
) -> Result<Share> {
    let aggs = Aggregates::compute(cube, sel, period_id)?;
    received_within_cluster_from(&aggs, cube, journal_id)
}

fn received_within_cluster_from(
    aggs: &Aggregates,
    cube: &CountsCube,
    journal_id: &str,
) -> Result<Share> {
    if cube.class.admitted_cluster_of(journal_id).is_none() {
        return Err(Error::data(format!("journal '{journal_id}' has no cluster")));
    }
    let agg = aggs.journals.get(journal_id).copied().unwrap_or_default();
    if agg.received_total == 0 {
        return Err(Error::data(format!(
            "journal '{journal_id}' never cited within corpus in period {}",
            aggs.period_id
        )));
    }
    Ok(share(agg.received_same_cluster, agg.received_total))
}

/// Outlet-type shares of one period: four rows, shares sum to 1.
/// Unresolved venues count under Repository (repository-and-other bucket).
pub fn outlet_shares(cube: &CountsCube, period_id: &str) -> Vec<OutletShareRow> {
    let mut counts: BTreeMap<OutletType, u64> = OutletType::ALL.iter().map(|o| (*o, 0)).collect();
    for (key, count) in cube.cells() {
        if key.period_id == period_id {
            *counts.get_mut(&key.outlet.report_bucket()).unwrap() += count;
        }
    }
    let total: u64 = counts.values().sum();
    OutletType::ALL
        .iter()
        .map(|outlet| OutletShareRow {
            period_id: period_id.to_string(),
            outlet_type: *outlet,
            citations: counts[outlet],
            share: if total == 0 {
                share(0, 1)
            } else {
                share(counts[outlet], total)
            },
        })
        .collect()
}

fn scopes_for(cube: &CountsCube, sel: &SchemeSel, granularity: Granularity) -> Vec<Scope> {
    match granularity {
        Granularity::Field => vec![Scope::Field],
        Granularity::Cluster => cube
            .class
            .admitted_clusters()
            .into_iter()
            .map(Scope::Cluster)
            .collect(),
        Granularity::Journal => cube
            .class
            .journals
            .keys()
            .filter(|j| cube.class.is_member(j, &sel.citing))
            .cloned()
            .map(Scope::Journal)
            .collect(),
    }
}

/// Batch wrapper over [`self_ref_share`]: all scopes x all four types,
/// sorted by (scope, type). Scopes with R = 0 go to the sidecar.
pub fn indicator_table(
    cube: &CountsCube,
    sel: &SchemeSel,
    denom: DenomMode,
    granularity: Granularity,
    period_id: &str,
) -> Result<(Vec<IndicatorRow>, Vec<SidecarEntry>)> {
    let aggs = Aggregates::compute(cube, sel, period_id)?;
    let mut rows = Vec::new();
    let mut sidecar = Vec::new();
    for scope in scopes_for(cube, sel, granularity) {
        let agg = aggs.scope_agg(cube, &scope);
        if aggs.denominator(&agg, denom) == 0 {
            sidecar.push(SidecarEntry {
                scope_id: scope.id(),
                reason: "no references in scope".to_string(),
            });
            continue;
        }
        for itype in IndicatorType::ALL {
            rows.push(self_ref_share_from(&aggs, cube, denom, &scope, itype)?);
        }
    }
    Ok((rows, sidecar))
}

/// Batch self-impact rows for all scopes at a granularity.
pub fn self_impact_table(
    cube: &CountsCube,
    sel: &SchemeSel,
    granularity: Granularity,
    period_id: &str,
) -> Result<(Vec<SelfImpactRow>, Vec<SidecarEntry>)> {
    if granularity == Granularity::Field {
        return Err(Error::usage("self-impact is defined for cluster and journal scopes"));
    }
    let aggs = Aggregates::compute(cube, sel, period_id)?;
    let mut rows = Vec::new();
    let mut sidecar = Vec::new();
    for scope in scopes_for(cube, sel, granularity) {
        match self_impact_from(&aggs, cube, &scope) {
            Ok(row) => rows.push(row),
            Err(e) => sidecar.push(SidecarEntry {
                scope_id: scope.id(),
                reason: e.to_string(),
            }),
        }
    }
    Ok((rows, sidecar))
}

/// One point of the self-referentiality-vs-influence scatters.
#[derive(Debug, Clone)]
pub struct ScatterPoint {
    pub scope_id: String,
    /// Within-cluster reference share of the scope.
    pub x: Share,
    /// Share of received citations originating within the scope's cluster.
    pub y: Share,
}

/// Bivariate points: x = within-cluster reference share, y = received-from-
/// within share. Scopes failing preconditions are listed in the sidecar.
pub fn scatter_points(
    cube: &CountsCube,
    sel: &SchemeSel,
    denom: DenomMode,
    granularity: Granularity,
    period_id: &str,
) -> Result<(Vec<ScatterPoint>, Vec<SidecarEntry>)> {
    if granularity == Granularity::Field {
        return Err(Error::usage("scatter points are defined for cluster and journal scopes"));
    }
    let aggs = Aggregates::compute(cube, sel, period_id)?;
    let mut points = Vec::new();
    let mut sidecar = Vec::new();
    for scope in scopes_for(cube, sel, granularity) {
        if let Scope::Journal(j) = &scope {
            if cube.class.admitted_cluster_of(j).is_none() {
                sidecar.push(SidecarEntry {
                    scope_id: scope.id(),
                    reason: "no cluster".to_string(),
                });
                continue;
            }
        }
        let x = match self_ref_share_from(&aggs, cube, denom, &scope, IndicatorType::WithinCluster) {
            Ok(row) => row.share,
            Err(e) => {
                sidecar.push(SidecarEntry {
                    scope_id: scope.id(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let y = match &scope {
            Scope::Cluster(_) => match self_impact_from(&aggs, cube, &scope) {
                Ok(row) => row.si,
                Err(e) => {
                    sidecar.push(SidecarEntry {
                        scope_id: scope.id(),
                        reason: e.to_string(),
                    });
                    continue;
                }
            },
            Scope::Journal(j) => match received_within_cluster_from(&aggs, cube, j) {
                Ok(share) => share,
                Err(e) => {
                    sidecar.push(SidecarEntry {
                        scope_id: scope.id(),
                        reason: e.to_string(),
                    });
                    continue;
                }
            },
            Scope::Field => unreachable!(),
        };
        points.push(ScatterPoint {
            scope_id: scope.id(),
            x,
            y,
        });
    }
    Ok((points, sidecar))
}
