//! k-sample energy-distance equality test with permutation p-values, and
//! Tukey boxplot summaries for the distribution exports.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Labeled samples of d-dimensional points.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub dim: usize,
    pub groups: Vec<(String, Vec<Vec<f64>>)>,
}

impl SampleSet {
    pub fn new(groups: Vec<(String, Vec<Vec<f64>>)>) -> Result<SampleSet> {
        let dim = groups
            .first()
            .and_then(|(_, pts)| pts.first())
            .map(|p| p.len())
            .ok_or_else(|| Error::data("sample set needs at least one point"))?;
        for (label, pts) in &groups {
            if pts.is_empty() {
                return Err(Error::data(format!("sample '{label}' has size 0")));
            }
            for p in pts {
                if p.len() != dim {
                    return Err(Error::data(format!(
                        "dimension mismatch in sample '{label}': expected {dim}, got {}",
                        p.len()
                    )));
                }
            }
        }
        Ok(SampleSet { dim, groups })
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|(_, pts)| pts.len()).collect()
    }

    fn pooled(&self) -> Vec<&[f64]> {
        self.groups
            .iter()
            .flat_map(|(_, pts)| pts.iter().map(|p| p.as_slice()))
            .collect()
    }

    /// Group index of each pooled point, in pooled order.
    fn base_labels(&self) -> Vec<u32> {
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(g, (_, pts))| std::iter::repeat(g as u32).take(pts.len()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTestResult {
    pub e: f64,
    pub p_value: f64,
    pub n_permutations: u64,
    pub seed: u64,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Pairwise distances of the pooled points, computed once and shared
/// read-only across permutations.
fn distance_matrix(points: &[&[f64]]) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = euclidean(points[i], points[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// k-sample energy statistic of a label assignment over a shared distance
/// matrix: the sum over sample pairs (a, b) of
/// (n_a n_b/(n_a+n_b)) (2 mean d(a,b) - mean d(a,a') - mean d(b,b')),
/// with within-sample means over all ordered pairs (diagonal included).
/// Each pairwise term is clamped at zero against floating-point noise.
fn energy_from_labels(dist: &[Vec<f64>], labels: &[u32], k: usize) -> f64 {
    let n = labels.len();
    let mut sums = vec![vec![0.0f64; k]; k];
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l as usize] += 1;
    }
    for i in 0..n {
        let gi = labels[i] as usize;
        let row = &dist[i];
        for j in 0..n {
            sums[gi][labels[j] as usize] += row[j];
        }
    }
    let mut total = 0.0;
    for a in 0..k {
        for b in (a + 1)..k {
            let (na, nb) = (sizes[a] as f64, sizes[b] as f64);
            let mean_ab = sums[a][b] / (na * nb);
            let mean_aa = sums[a][a] / (na * na);
            let mean_bb = sums[b][b] / (nb * nb);
            let e = (na * nb / (na + nb)) * (2.0 * mean_ab - mean_aa - mean_bb);
            total += e.max(0.0);
        }
    }
    total
}

/// The k-sample energy statistic E of a sample set.
pub fn energy_statistic(samples: &SampleSet) -> Result<f64> {
    if samples.groups.len() < 2 {
        return Err(Error::data("energy statistic needs at least 2 samples"));
    }
    let pooled = samples.pooled();
    let dist = distance_matrix(&pooled);
    Ok(energy_from_labels(&dist, &samples.base_labels(), samples.groups.len()))
}

/// The label assignment drawn for permutation `index`: a Fisher-Yates
/// shuffle of the pooled base labels by a ChaCha8 stream keyed on
/// (seed, index). Counter-based, so the permutation stream is independent
/// of parallel chunking.
pub fn permutation_labels(base_labels: &[u32], seed: u64, index: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(
        seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    let mut labels = base_labels.to_vec();
    labels.shuffle(&mut rng);
    labels
}

fn permuted_statistic(dist: &[Vec<f64>], base: &[u32], k: usize, seed: u64, index: u64) -> f64 {
    let labels = permutation_labels(base, seed, index);
    energy_from_labels(dist, &labels, k)
}

/// All permuted statistics, sequential route.
pub fn permutation_statistics_sequential(
    samples: &SampleSet,
    n_permutations: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let pooled = samples.pooled();
    let dist = distance_matrix(&pooled);
    let base = samples.base_labels();
    let k = samples.groups.len();
    Ok((0..n_permutations)
        .map(|i| permuted_statistic(&dist, &base, k, seed, i))
        .collect())
}

/// All permuted statistics, parallel route. Identical output to the
/// sequential route for any thread count.
#[cfg(feature = "parallel")]
pub fn permutation_statistics_parallel(
    samples: &SampleSet,
    n_permutations: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let pooled = samples.pooled();
    let dist = distance_matrix(&pooled);
    let base = samples.base_labels();
    let k = samples.groups.len();
    Ok((0..n_permutations)
        .into_par_iter()
        .map(|i| permuted_statistic(&dist, &base, k, seed, i))
        .collect())
}

/// Permutation equality test. p = (1 + #{E* >= E}) / (1 + n_permutations),
/// so p is never 0 and never exceeds 1.
pub fn permutation_test(
    samples: &SampleSet,
    n_permutations: u64,
    seed: u64,
) -> Result<EnergyTestResult> {
    if n_permutations == 0 {
        return Err(Error::data("n_permutations must be at least 1"));
    }
    let e = energy_statistic(samples)?;
    #[cfg(feature = "parallel")]
    let stats = permutation_statistics_parallel(samples, n_permutations, seed)?;
    #[cfg(not(feature = "parallel"))]
    let stats = permutation_statistics_sequential(samples, n_permutations, seed)?;
    let count = stats.iter().filter(|&&s| s >= e).count() as u64;
    Ok(EnergyTestResult {
        e,
        p_value: (1 + count) as f64 / (1 + n_permutations) as f64,
        n_permutations,
        seed,
    })
}

/// Tukey boxplot statistics of one scope's values.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxplotSummary {
    pub scope_id: String,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers: Vec<f64>,
}

/// Linear interpolation between order statistics (type-7 convention).
fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Boxplot summaries: whiskers at 1.5 x IQR, outliers beyond the whiskers.
pub fn distribution_summary(groups: &[(String, Vec<f64>)]) -> Result<Vec<BoxplotSummary>> {
    let mut out = Vec::new();
    for (scope_id, values) in groups {
        if values.is_empty() {
            return Err(Error::data(format!("scope '{scope_id}' has no values")));
        }
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q1 = quantile_type7(&sorted, 0.25);
        let median = quantile_type7(&sorted, 0.5);
        let q3 = quantile_type7(&sorted, 0.75);
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let lower_whisker = sorted
            .iter()
            .copied()
            .find(|v| *v >= lo_fence)
            .unwrap_or(sorted[0]);
        let upper_whisker = sorted
            .iter()
            .rev()
            .copied()
            .find(|v| *v <= hi_fence)
            .unwrap_or(sorted[sorted.len() - 1]);
        let outliers = sorted
            .iter()
            .copied()
            .filter(|v| *v < lo_fence || *v > hi_fence)
            .collect();
        out.push(BoxplotSummary {
            scope_id: scope_id.clone(),
            median,
            q1,
            q3,
            lower_whisker,
            upper_whisker,
            outliers,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_groups(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> SampleSet {
        SampleSet::new(vec![("a".to_string(), a), ("b".to_string(), b)]).unwrap()
    }

    /// Brute-force pairwise energy statistic, straight from the formula,
    /// no distance matrix reuse.
    fn brute_force_pair(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let mean = |xs: &[Vec<f64>], ys: &[Vec<f64>]| {
            let mut s = 0.0;
            for x in xs {
                for y in ys {
                    s += euclidean(x, y);
                }
            }
            s / (xs.len() * ys.len()) as f64
        };
        (na * nb / (na + nb)) * (2.0 * mean(a, b) - mean(a, a) - mean(b, b))
    }

    #[test]
    fn closed_form_two_singletons() {
        let samples = two_groups(vec![vec![0.0, 0.0]], vec![vec![1.0, 0.0]]);
        let e = energy_statistic(&samples).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_multisets_give_exact_zero() {
        let pts = vec![vec![0.3, 1.7], vec![2.0, -1.0], vec![5.5, 0.1]];
        let samples = two_groups(pts.clone(), pts);
        assert_eq!(energy_statistic(&samples).unwrap(), 0.0);
    }

    #[test]
    fn three_samples_sum_of_pairwise_terms() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 0.5]];
        let b = vec![vec![3.0, 1.0], vec![2.5, 2.0], vec![4.0, 1.5]];
        let c = vec![vec![-1.0, 2.0], vec![0.5, 3.0]];
        let samples = SampleSet::new(vec![
            ("a".to_string(), a.clone()),
            ("b".to_string(), b.clone()),
            ("c".to_string(), c.clone()),
        ])
        .unwrap();
        let e = energy_statistic(&samples).unwrap();
        let expected =
            brute_force_pair(&a, &b) + brute_force_pair(&a, &c) + brute_force_pair(&b, &c);
        assert!((e - expected).abs() < 1e-10, "{e} vs {expected}");
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let res = SampleSet::new(vec![
            ("a".to_string(), vec![vec![0.0, 0.0]]),
            ("b".to_string(), vec![vec![1.0]]),
        ]);
        assert!(res.is_err());
    }

    #[test]
    fn rigid_motion_invariance() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 2.0]];
        let b = vec![vec![3.0, 1.0], vec![-1.0, 0.5]];
        let e0 = energy_statistic(&two_groups(a.clone(), b.clone())).unwrap();
        // translate by (10, -4) and rotate by 0.7 rad
        let (s, c) = (0.7f64.sin(), 0.7f64.cos());
        let xf = |p: &Vec<f64>| vec![c * p[0] - s * p[1] + 10.0, s * p[0] + c * p[1] - 4.0];
        let e1 = energy_statistic(&two_groups(
            a.iter().map(xf).collect(),
            b.iter().map(xf).collect(),
        ))
        .unwrap();
        assert!((e0 - e1).abs() < 1e-10);
    }

    #[test]
    fn scaling_points_scales_e_linearly() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 2.0]];
        let b = vec![vec![3.0, 1.0], vec![-1.0, 0.5]];
        let e0 = energy_statistic(&two_groups(a.clone(), b.clone())).unwrap();
        let k = 3.5;
        let scale = |p: &Vec<f64>| p.iter().map(|v| v * k).collect::<Vec<_>>();
        let e1 = energy_statistic(&two_groups(
            a.iter().map(scale).collect(),
            b.iter().map(scale).collect(),
        ))
        .unwrap();
        assert!((e1 - k * e0).abs() < 1e-9);
    }

    #[test]
    fn identical_samples_always_accept() {
        let pts = vec![vec![0.0, 1.0], vec![2.0, 2.0], vec![1.0, 0.0]];
        let samples = two_groups(pts.clone(), pts);
        let result = permutation_test(&samples, 99, 7).unwrap();
        assert_eq!(result.e, 0.0);
        assert_eq!(result.p_value, 1.0);
    }

    #[test]
    fn well_separated_samples_hit_the_floor_p() {
        let a: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.01, 0.0]).collect();
        let b: Vec<Vec<f64>> = (0..20).map(|i| vec![10.0 + i as f64 * 0.01, 10.0]).collect();
        let result = permutation_test(&two_groups(a, b), 999, 42).unwrap();
        assert_eq!(result.p_value, 1.0 / 1000.0);
    }

    #[test]
    fn p_value_is_never_zero_and_deterministic() {
        let a = vec![vec![0.0, 0.0], vec![0.1, 0.2]];
        let b = vec![vec![5.0, 5.0], vec![5.1, 5.3]];
        let samples = two_groups(a, b);
        let r1 = permutation_test(&samples, 49, 11).unwrap();
        let r2 = permutation_test(&samples, 49, 11).unwrap();
        assert!(r1.p_value >= 1.0 / 50.0);
        assert_eq!(r1, r2);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_streams_agree() {
        let a: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let b: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 + 0.5, i as f64]).collect();
        let samples = two_groups(a, b);
        let seq = permutation_statistics_sequential(&samples, 200, 3).unwrap();
        let par = permutation_statistics_parallel(&samples, 200, 3).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn summary_hand_computed_quartiles() {
        let rows = distribution_summary(&[(
            "s".to_string(),
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
        )])
        .unwrap();
        let r = &rows[0];
        assert_eq!((r.median, r.q1, r.q3), (3.0, 2.0, 4.0));
        assert!(r.outliers.is_empty());
        assert_eq!((r.lower_whisker, r.upper_whisker), (1.0, 5.0));
    }

    #[test]
    fn summary_single_value() {
        let rows = distribution_summary(&[("s".to_string(), vec![0.42])]).unwrap();
        let r = &rows[0];
        assert_eq!(
            (r.median, r.q1, r.q3, r.lower_whisker, r.upper_whisker),
            (0.42, 0.42, 0.42, 0.42, 0.42)
        );
        assert!(r.outliers.is_empty());
    }

    #[test]
    fn summary_flags_extreme_outlier() {
        let mut values = vec![0.0; 9];
        values.push(100.0);
        let rows = distribution_summary(&[("s".to_string(), values)]).unwrap();
        let r = &rows[0];
        assert_eq!(r.outliers, vec![100.0]);
        assert_eq!(r.upper_whisker, 0.0);
    }
}
