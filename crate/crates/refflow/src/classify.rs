//! Reference classification: outlet typing and the per-scheme
//! self-referentiality flags attached to every reference edge.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::registry::Registry;

/// Venue class of a cited item. OpenAlex "book series" / "ebook platform"
/// fold into Book; "repository" / "other" fold into Repository.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutletType {
    Journal,
    Book,
    Conference,
    Repository,
}

impl OutletType {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutletType::Journal => "journal",
            OutletType::Book => "book",
            OutletType::Conference => "conference",
            OutletType::Repository => "repository",
        }
    }

    pub const ALL: [OutletType; 4] = [
        OutletType::Journal,
        OutletType::Book,
        OutletType::Conference,
        OutletType::Repository,
    ];
}

/// Map an OpenAlex-style type string to an outlet class. Unknown strings
/// resolve to None (unresolved outlet).
pub fn parse_outlet(s: &str) -> Option<OutletType> {
    match s.trim().to_ascii_lowercase().as_str() {
        "journal" | "article" => Some(OutletType::Journal),
        "book" | "book series" | "book-series" | "ebook platform" | "book chapter" => {
            Some(OutletType::Book)
        }
        "conference" | "proceedings" => Some(OutletType::Conference),
        "repository" | "other" | "preprint" => Some(OutletType::Repository),
        _ => None,
    }
}

/// The four self-reference flags of one classified reference under one scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RefFlags {
    pub is_journal_self: bool,
    pub is_within_cluster: bool,
    pub is_in_any_cluster: bool,
    pub is_within_field: bool,
}

impl RefFlags {
    pub const NONE: RefFlags = RefFlags {
        is_journal_self: false,
        is_within_cluster: false,
        is_in_any_cluster: false,
        is_within_field: false,
    };
}

/// Per-journal classification info embedded in the cube snapshot so
/// downstream stages need no registry access.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JournalClass {
    pub cluster_id: Option<u32>,
    pub cluster_admitted: bool,
    /// scheme_id -> field membership.
    pub membership: BTreeMap<String, bool>,
}

/// Classification table for all registry journals plus the scheme list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub scheme_ids: Vec<String>,
    pub journals: BTreeMap<String, JournalClass>,
}

impl Classification {
    pub fn from_registry(registry: &Registry) -> Self {
        let journals = registry
            .journals
            .values()
            .map(|j| {
                (
                    j.journal_id.clone(),
                    JournalClass {
                        cluster_id: j.cluster_id,
                        cluster_admitted: registry.admitted_cluster_of(&j.journal_id).is_some(),
                        membership: j.field_membership.clone(),
                    },
                )
            })
            .collect();
        Classification {
            scheme_ids: registry.scheme_ids.clone(),
            journals,
        }
    }

    pub fn has_scheme(&self, scheme_id: &str) -> bool {
        self.scheme_ids.iter().any(|s| s == scheme_id)
    }

    pub fn is_member(&self, journal_id: &str, scheme_id: &str) -> bool {
        self.journals
            .get(journal_id)
            .and_then(|j| j.membership.get(scheme_id))
            .copied()
            .unwrap_or(false)
    }

    /// The journal's admitted cluster, if any.
    pub fn admitted_cluster_of(&self, journal_id: &str) -> Option<u32> {
        let j = self.journals.get(journal_id)?;
        j.cluster_admitted.then_some(()).and(j.cluster_id)
    }

    /// Sorted admitted cluster ids.
    pub fn admitted_clusters(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .journals
            .values()
            .filter(|j| j.cluster_admitted)
            .filter_map(|j| j.cluster_id)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Compute the four flags of a reference under one cited-side scheme.
    ///
    /// A reference only carries flags when it resolves to a journal outlet
    /// with a known cited journal; everything else is flags-false. Membership
    /// of the cited journal gates every flag, so nesting
    /// journal_self => within_cluster => in_any_cluster => within_field holds
    /// whenever the citing journal is an admitted-cluster scheme member.
    pub fn flags(
        &self,
        scheme_id: &str,
        citing_journal: &str,
        cited_journal: Option<&str>,
        outlet: Option<OutletType>,
    ) -> RefFlags {
        let cited = match (outlet, cited_journal) {
            (Some(OutletType::Journal), Some(cited)) => cited,
            _ => return RefFlags::NONE,
        };
        if !self.is_member(cited, scheme_id) {
            return RefFlags::NONE;
        }
        let cited_cluster = self.admitted_cluster_of(cited);
        let citing_cluster = self.admitted_cluster_of(citing_journal);
        RefFlags {
            is_journal_self: citing_journal == cited,
            is_within_cluster: cited_cluster.is_some() && cited_cluster == citing_cluster,
            is_in_any_cluster: cited_cluster.is_some(),
            is_within_field: true,
        }
    }
}

/// Resolved metadata for the cited side of a reference.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CitedResolution {
    pub journal_id: Option<String>,
    pub outlet: Option<OutletType>,
}

impl CitedResolution {
    /// The cited journal id, only meaningful for journal outlets.
    pub fn journal(&self) -> Option<&str> {
        match self.outlet {
            Some(OutletType::Journal) => self.journal_id.as_deref(),
            _ => None,
        }
    }
}

/// One fully classified reference edge with flags for every configured scheme.
#[derive(Debug, Clone)]
pub struct ClassifiedReference {
    pub period_id: String,
    pub citing_journal_id: String,
    pub cited_work_id: String,
    pub cited_journal_id: Option<String>,
    pub outlet_type: Option<OutletType>,
    pub flags: BTreeMap<String, RefFlags>,
}

/// Classify one reference edge. Never fails: unresolvable metadata degrades
/// to flags-false.
pub fn classify_reference(
    period_id: &str,
    citing_journal_id: &str,
    cited_work_id: &str,
    cited: &CitedResolution,
    class: &Classification,
) -> ClassifiedReference {
    let cited_journal_id = cited.journal().map(str::to_string);
    let flags = class
        .scheme_ids
        .iter()
        .map(|scheme| {
            (
                scheme.clone(),
                class.flags(scheme, citing_journal_id, cited_journal_id.as_deref(), cited.outlet),
            )
        })
        .collect();
    ClassifiedReference {
        period_id: period_id.to_string(),
        citing_journal_id: citing_journal_id.to_string(),
        cited_work_id: cited_work_id.to_string(),
        cited_journal_id,
        outlet_type: cited.outlet,
        flags,
    }
}

/// Validate that a scheme exists in a classification.
pub fn require_scheme(class: &Classification, scheme_id: &str) -> Result<()> {
    if class.has_scheme(scheme_id) {
        Ok(())
    } else {
        Err(Error::data(format!(
            "unknown scheme '{scheme_id}' (configured: {})",
            class.scheme_ids.join(", ")
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::{load_registry, builtin_schemes};
    use std::io::Write;

    /// Registry with two admitted clusters (3 and 7) of 10 journals each
    /// plus an unclustered EconLit journal and a non-member journal.
    pub(crate) fn fixture_classification() -> Classification {
        let dir = tempfile::tempdir().unwrap();
        let mut journals = String::from("journal_id,name,cluster_id,econlit,truc,openalex_econ\n");
        for i in 1..=10 {
            journals.push_str(&format!("J{i},Journal {i},3,1,{},1\n", u8::from(i <= 3)));
        }
        for i in 1..=10 {
            journals.push_str(&format!("K{i},Kournal {i},7,1,0,1\n"));
        }
        journals.push_str("F1,Field Only,,1,0,1\n");
        journals.push_str("X1,Outside,,0,0,0\n");
        let jp = dir.path().join("journals.csv");
        let cp = dir.path().join("clusters.csv");
        std::fs::File::create(&jp).unwrap().write_all(journals.as_bytes()).unwrap();
        std::fs::File::create(&cp)
            .unwrap()
            .write_all(b"cluster_id,label\n3,Core\n7,Other\n")
            .unwrap();
        let reg = load_registry(&jp, &cp, &builtin_schemes()).unwrap();
        Classification::from_registry(&reg)
    }

    fn journal_cited(id: &str) -> CitedResolution {
        CitedResolution {
            journal_id: Some(id.to_string()),
            outlet: Some(OutletType::Journal),
        }
    }

    #[test]
    fn self_citation_sets_all_flags() {
        let class = fixture_classification();
        let r = classify_reference("p1", "J1", "w1", &journal_cited("J1"), &class);
        let f = r.flags["econlit"];
        assert!(f.is_journal_self && f.is_within_cluster && f.is_in_any_cluster && f.is_within_field);
    }

    #[test]
    fn cross_cluster_reference() {
        let class = fixture_classification();
        let r = classify_reference("p1", "J1", "w1", &journal_cited("K1"), &class);
        let f = r.flags["econlit"];
        assert!(!f.is_journal_self);
        assert!(!f.is_within_cluster);
        assert!(f.is_in_any_cluster);
        assert!(f.is_within_field);
    }

    #[test]
    fn book_reference_has_no_flags_and_no_journal() {
        let class = fixture_classification();
        let cited = CitedResolution {
            journal_id: Some("J1".to_string()),
            outlet: Some(OutletType::Book),
        };
        let r = classify_reference("p1", "J1", "w1", &cited, &class);
        assert_eq!(r.cited_journal_id, None);
        assert_eq!(r.flags["econlit"], RefFlags::NONE);
    }

    #[test]
    fn unresolved_venue_degrades_to_flags_false() {
        let class = fixture_classification();
        let r = classify_reference("p1", "J1", "w1", &CitedResolution::default(), &class);
        assert_eq!(r.outlet_type, None);
        assert_eq!(r.flags["econlit"], RefFlags::NONE);
    }

    #[test]
    fn field_only_journal_hits_within_field_only() {
        let class = fixture_classification();
        let r = classify_reference("p1", "J1", "w1", &journal_cited("F1"), &class);
        let f = r.flags["econlit"];
        assert!(!f.is_within_cluster && !f.is_in_any_cluster && f.is_within_field);
    }

    #[test]
    fn scheme_membership_gates_all_flags() {
        let class = fixture_classification();
        // K1 is not a truc member, so nothing counts under truc.
        let r = classify_reference("p1", "J1", "w1", &journal_cited("K1"), &class);
        assert_eq!(r.flags["truc"], RefFlags::NONE);
        // J2 is a truc member in J1's cluster.
        let r = classify_reference("p1", "J1", "w1", &journal_cited("J2"), &class);
        let f = r.flags["truc"];
        assert!(f.is_within_cluster && f.is_in_any_cluster && f.is_within_field);
    }

    #[test]
    fn outlet_parsing_folds_openalex_types() {
        assert_eq!(parse_outlet("book series"), Some(OutletType::Book));
        assert_eq!(parse_outlet("ebook platform"), Some(OutletType::Book));
        assert_eq!(parse_outlet("other"), Some(OutletType::Repository));
        assert_eq!(parse_outlet("journal"), Some(OutletType::Journal));
        assert_eq!(parse_outlet("mystery"), None);
    }
}
