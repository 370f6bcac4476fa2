//! Property tests for the structural invariants of the library: flag
//! nesting, count-cube permutation invariance, indicator monotonicity,
//! asymmetry-matrix algebra, and energy-statistic symmetries.

use std::collections::BTreeMap;

use num::rational::Ratio;
use proptest::prelude::*;

use refflow::asymmetry::{ra_matrix, EntityFilter};
use refflow::classify::{Classification, JournalClass, OutletType};
use refflow::cube::{CellKey, CountsCube, OutletKind};
use refflow::indicators::{indicator_table, DenomMode, Granularity, SchemeSel};
use refflow::share::{format_share, share};
use refflow::stats::{
    distribution_summary, energy_statistic, permutation_labels, permutation_test, SampleSet,
};

// ------------------------------------------------------------ generators

/// A small universe: clustered members C{c}J{j}, unclustered members U{u},
/// and non-member journals X{x}.
#[derive(Debug, Clone)]
struct Universe {
    class: Classification,
    ids: Vec<String>,
}

fn universe(clusters: u32, per_cluster: u32, unclustered: u32, outside: u32) -> Universe {
    let mut journals = BTreeMap::new();
    let mut ids = Vec::new();
    let mut add = |id: String, cluster: Option<u32>, member: bool| {
        journals.insert(
            id.clone(),
            JournalClass {
                cluster_id: cluster,
                cluster_admitted: cluster.is_some(),
                membership: BTreeMap::from([("s".to_string(), member)]),
            },
        );
        ids.push(id);
    };
    for c in 1..=clusters {
        for j in 0..per_cluster {
            add(format!("C{c}J{j}"), Some(c), true);
        }
    }
    for u in 0..unclustered {
        add(format!("U{u}"), None, true);
    }
    for x in 0..outside {
        add(format!("X{x}"), None, false);
    }
    Universe {
        class: Classification {
            scheme_ids: vec!["s".to_string()],
            journals,
        },
        ids,
    }
}

#[derive(Debug, Clone)]
struct RawEdge {
    citing: usize,
    cited: Option<usize>,
    outlet: OutletKind,
    count: u64,
}

fn edge_strategy(n_ids: usize) -> impl Strategy<Value = RawEdge> {
    (
        0..n_ids,
        prop_oneof![
            (0..n_ids).prop_map(Some),
            Just(None),
        ],
        prop_oneof![
            Just(OutletKind::Journal),
            Just(OutletKind::Book),
            Just(OutletKind::Conference),
            Just(OutletKind::Repository),
            Just(OutletKind::Unresolved),
        ],
        1..20u64,
    )
        .prop_map(|(citing, cited, outlet, count)| RawEdge {
            citing,
            cited,
            outlet,
            count,
        })
}

fn cube_from_edges(u: &Universe, edges: &[RawEdge]) -> CountsCube {
    let cells = edges
        .iter()
        .map(|e| {
            (
                CellKey {
                    period_id: "p1".to_string(),
                    citing_journal: u.ids[e.citing].clone(),
                    cited_journal: e.cited.map(|i| u.ids[i].clone()),
                    outlet: e.outlet,
                },
                e.count,
            )
        })
        .collect();
    CountsCube::from_parts(u.class.clone(), vec!["p1".to_string()], cells)
}

fn snapshot_bytes(cube: &CountsCube) -> Vec<u8> {
    let mut buf = Vec::new();
    cube.write_snapshot(&mut buf).unwrap();
    buf
}

// ---------------------------------------------------------- flag nesting

proptest! {
    #[test]
    fn flags_are_nested(
        citing in 0..12usize,
        cited in proptest::option::of(0..12usize),
        outlet in prop_oneof![
            Just(Some(OutletType::Journal)),
            Just(Some(OutletType::Book)),
            Just(None),
        ],
    ) {
        let u = universe(3, 3, 2, 1);
        let f = u.class.flags(
            "s",
            &u.ids[citing],
            cited.map(|i| u.ids[i].as_str()),
            outlet,
        );
        // each tighter notion implies the next wider one; journal self-
        // citation implies within-cluster whenever the journal is clustered
        prop_assert!(!f.is_within_cluster || f.is_in_any_cluster);
        prop_assert!(!f.is_in_any_cluster || f.is_within_field);
        if u.class.admitted_cluster_of(&u.ids[citing]).is_some() {
            prop_assert!(!f.is_journal_self || f.is_within_cluster);
        }
        if f.is_journal_self {
            prop_assert_eq!(cited.map(|i| u.ids[i].as_str()), Some(u.ids[citing].as_str()));
        }
    }
}

// ------------------------------------------- cube permutation invariance

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cube_is_order_and_partition_independent(
        edges in proptest::collection::vec(edge_strategy(9), 1..40),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let u = universe(2, 3, 2, 1);
        let baseline = cube_from_edges(&u, &edges);

        // shuffle the edges and split every count into two increments
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut split: Vec<RawEdge> = Vec::new();
        for e in &edges {
            if e.count > 1 {
                let a = e.count / 2;
                split.push(RawEdge { count: a, ..e.clone() });
                split.push(RawEdge { count: e.count - a, ..e.clone() });
            } else {
                split.push(e.clone());
            }
        }
        split.shuffle(&mut rng);
        let reshaped = cube_from_edges(&u, &split);
        prop_assert_eq!(snapshot_bytes(&baseline), snapshot_bytes(&reshaped));
    }

    #[test]
    fn snapshot_round_trips_byte_identically(
        edges in proptest::collection::vec(edge_strategy(9), 1..40),
    ) {
        let u = universe(2, 3, 2, 1);
        let cube = cube_from_edges(&u, &edges);
        let bytes = snapshot_bytes(&cube);
        let reread = CountsCube::read_snapshot(&bytes[..]).unwrap();
        prop_assert_eq!(bytes, snapshot_bytes(&reread));
    }
}

// ------------------------------------------------ indicator monotonicity

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn indicator_types_are_monotone(
        edges in proptest::collection::vec(edge_strategy(9), 1..60),
        denom_journal_only in any::<bool>(),
        granularity in prop_oneof![
            Just(Granularity::Field),
            Just(Granularity::Cluster),
            Just(Granularity::Journal),
        ],
    ) {
        // all members clustered, so the four notions nest exactly
        let u = universe(3, 3, 0, 0);
        let cube = cube_from_edges(&u, &edges);
        let denom = if denom_journal_only {
            DenomMode::JournalOnly
        } else {
            DenomMode::AllOutlets
        };
        let (rows, _) =
            indicator_table(&cube, &SchemeSel::same("s"), denom, granularity, "p1").unwrap();
        let mut by_scope: BTreeMap<&str, Vec<Ratio<i64>>> = BTreeMap::new();
        for row in &rows {
            by_scope.entry(row.scope_id.as_str()).or_default().push(row.share);
        }
        for (scope, shares) in by_scope {
            prop_assert_eq!(shares.len(), 4, "scope {}", scope);
            for w in shares.windows(2) {
                prop_assert!(w[0] <= w[1], "scope {}: {} > {}", scope, w[0], w[1]);
            }
        }
    }
}

// ---------------------------------------------------- asymmetry algebra

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ra_matrix_is_antisymmetric(
        edges in proptest::collection::vec(edge_strategy(9), 1..60),
        denom_journal_only in any::<bool>(),
    ) {
        let u = universe(3, 3, 0, 0);
        let cube = cube_from_edges(&u, &edges);
        let denom = if denom_journal_only {
            DenomMode::JournalOnly
        } else {
            DenomMode::AllOutlets
        };
        let m = ra_matrix(
            &cube,
            &SchemeSel::same("s"),
            denom,
            Granularity::Cluster,
            &EntityFilter::AllClusters,
            "p1",
        )
        .unwrap();
        let zero = Ratio::new(0, 1);
        for i in 0..m.entity_ids.len() {
            prop_assert_eq!(m.ra[i][i], zero);
            for j in 0..m.entity_ids.len() {
                prop_assert_eq!(m.ra[i][j] + m.ra[j][i], zero);
                prop_assert!(m.ra[i][j] >= Ratio::new(-1, 1) && m.ra[i][j] <= Ratio::new(1, 1));
            }
        }
    }
}

// ------------------------------------------------------ energy statistic

fn points_strategy(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(
        proptest::collection::vec(-100.0..100.0f64, 2),
        n..n + 4,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_is_invariant_under_group_order_and_translation(
        a in points_strategy(2),
        b in points_strategy(2),
        dx in -50.0..50.0f64,
        dy in -50.0..50.0f64,
    ) {
        let set = |a: Vec<Vec<f64>>, b: Vec<Vec<f64>>| {
            SampleSet::new(vec![("a".to_string(), a), ("b".to_string(), b)]).unwrap()
        };
        let e = energy_statistic(&set(a.clone(), b.clone())).unwrap();
        prop_assert!(e >= 0.0);
        let e_swapped = energy_statistic(&set(b.clone(), a.clone())).unwrap();
        prop_assert!((e - e_swapped).abs() <= 1e-9 * e.max(1.0));
        let shift = |pts: &[Vec<f64>]| -> Vec<Vec<f64>> {
            pts.iter().map(|p| vec![p[0] + dx, p[1] + dy]).collect()
        };
        let e_shifted = energy_statistic(&set(shift(&a), shift(&b))).unwrap();
        prop_assert!((e - e_shifted).abs() <= 1e-7 * e.max(1.0));
    }

    #[test]
    fn permutation_p_respects_floor_and_label_multiset(
        a in points_strategy(3),
        b in points_strategy(3),
        seed in any::<u64>(),
        n_perms in 19..200u64,
    ) {
        let samples =
            SampleSet::new(vec![("a".to_string(), a.clone()), ("b".to_string(), b)]).unwrap();
        let result = permutation_test(&samples, n_perms, seed).unwrap();
        let floor = 1.0 / (1 + n_perms) as f64;
        prop_assert!(result.p_value >= floor && result.p_value <= 1.0);

        let base: Vec<u32> = samples
            .sizes()
            .iter()
            .enumerate()
            .flat_map(|(g, n)| std::iter::repeat(g as u32).take(*n))
            .collect();
        let drawn = permutation_labels(&base, seed, n_perms / 2);
        let sorted = |mut v: Vec<u32>| { v.sort_unstable(); v };
        prop_assert_eq!(sorted(drawn), sorted(base));
    }
}

// ----------------------------------------------- shares and summaries

proptest! {
    #[test]
    fn formatted_share_is_a_faithful_rounding(num in 0..=1_000_000u64, extra in 1..1_000_000u64) {
        let den = num + extra;
        let s = share(num, den);
        let text = format_share(s);
        let parsed: f64 = text.parse().unwrap();
        let exact = num as f64 / den as f64;
        prop_assert!((parsed - exact).abs() <= 5.000_001e-7, "{} vs {}", text, exact);
    }

    #[test]
    fn boxplot_summary_is_ordered(values in proptest::collection::vec(-1e6..1e6f64, 1..50)) {
        let rows = distribution_summary(&[("g".to_string(), values.clone())]).unwrap();
        prop_assert_eq!(rows.len(), 1);
        let r = &rows[0];
        let (min, max) = values.iter().fold((f64::MAX, f64::MIN), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
        // note: with an extreme outlier the interpolated quartile can fall
        // below every in-fence observation, so whiskers are only compared
        // with each other and the data range, not with q1/q3
        prop_assert!(min <= r.lower_whisker);
        prop_assert!(r.lower_whisker <= r.upper_whisker);
        prop_assert!(r.upper_whisker <= max);
        prop_assert!(r.q1 <= r.median && r.median <= r.q3);
        let fence = 1.5 * (r.q3 - r.q1);
        prop_assert!(r
            .outliers
            .iter()
            .all(|v| *v < r.q1 - fence || *v > r.q3 + fence));
        prop_assert_eq!(
            r.outliers.len(),
            values.iter().filter(|v| **v < r.q1 - fence || **v > r.q3 + fence).count()
        );
    }
}
