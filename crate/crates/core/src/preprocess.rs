//! The preprocessing pool: min-max scaling, z-score scaling, data squashing,
//! removal of highly correlated features and k-means discretization.
//!
//! Every method maps an immutable database to a new one. Numeric domains are
//! recomputed from the transformed data; categorical attributes pass through
//! untouched except where squashing replaces whole rows.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Domain, TransactionDatabase, Value};
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("invalid preprocessing parameter: {0}")]
    InvalidParameter(String),
}

/// One member of the preprocessing pool. The declaration order is the pool
/// order and the order in which a chain is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PreprocessKind {
    MM,
    ZS,
    DS,
    RHC,
    DK,
}

impl PreprocessKind {
    pub const ALL: [PreprocessKind; 5] = [
        PreprocessKind::MM,
        PreprocessKind::ZS,
        PreprocessKind::DS,
        PreprocessKind::RHC,
        PreprocessKind::DK,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PreprocessKind::MM => "MM",
            PreprocessKind::ZS => "ZS",
            PreprocessKind::DS => "DS",
            PreprocessKind::RHC => "RHC",
            PreprocessKind::DK => "DK",
        }
    }
}

impl fmt::Display for PreprocessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PreprocessKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PreprocessKind::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                format!("unknown preprocessing method '{s}' (expected MM, ZS, DS, RHC or DK)")
            })
    }
}

/// Tunables of the parameterized pool members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessParams {
    /// Fraction of transactions kept by data squashing, in (0, 1].
    pub squash_ratio: f64,
    /// Absolute Pearson correlation at which a feature is dropped, in (0, 1].
    pub rhc_threshold: f64,
    /// Number of k-means bins per numeric attribute, at least 2.
    pub dk_k: usize,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        PreprocessParams {
            squash_ratio: 0.5,
            rhc_threshold: 0.95,
            dk_k: 5,
        }
    }
}

impl PreprocessParams {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        check_unit_interval("squash ratio", self.squash_ratio)?;
        check_unit_interval("correlation threshold", self.rhc_threshold)?;
        check_k(self.dk_k)
    }
}

fn check_unit_interval(what: &str, v: f64) -> Result<(), PreprocessError> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(PreprocessError::InvalidParameter(format!(
            "{what} must lie in (0, 1], got {v}"
        )))
    }
}

fn check_k(k: usize) -> Result<(), PreprocessError> {
    if k >= 2 {
        Ok(())
    } else {
        Err(PreprocessError::InvalidParameter(format!(
            "k-means bin count must be >= 2, got {k}"
        )))
    }
}

/// Applies `f` to every numeric column and recomputes the numeric domains.
fn map_numeric_columns<F>(db: &TransactionDatabase, mut f: F) -> TransactionDatabase
where
    F: FnMut(&[f64], f64, f64) -> Vec<f64>,
{
    let mut rows: Vec<Vec<Value>> = db.rows().to_vec();
    for (j, attr) in db.attributes().iter().enumerate() {
        if let Domain::Numeric { min, max } = attr.domain {
            let mapped = f(&db.numeric_column(j), min, max);
            for (row, v) in rows.iter_mut().zip(mapped) {
                row[j] = Value::Num(v);
            }
        }
    }
    TransactionDatabase::with_recomputed_domains(db.attributes().to_vec(), rows)
}

/// Rescales every numeric attribute onto [0, 1]. Constant attributes map to 0.
pub fn min_max(db: &TransactionDatabase) -> TransactionDatabase {
    map_numeric_columns(db, |col, min, max| {
        let span = max - min;
        col.iter()
            .map(|&v| {
                if span > 0.0 {
                    ((v - min) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    })
}

fn mean_std(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Standardizes every numeric attribute with the population standard
/// deviation. Zero-variance attributes map to 0.
pub fn z_score(db: &TransactionDatabase) -> TransactionDatabase {
    map_numeric_columns(db, |col, _, _| {
        let (mean, sd) = mean_std(col);
        col.iter()
            .map(|&v| if sd > 0.0 { (v - mean) / sd } else { 0.0 })
            .collect()
    })
}

/// Reduces the database to `ceil(ratio * N)` representative transactions by
/// k-means clustering of the min-max normalized numeric features. Each
/// cluster contributes one row: the mean of its numeric cells and the mode of
/// its categorical cells.
pub fn squash(
    db: &TransactionDatabase,
    ratio: f64,
    seed: u64,
) -> Result<TransactionDatabase, PreprocessError> {
    check_unit_interval("squash ratio", ratio)?;
    let n = db.n_transactions();
    let k = ((ratio * n as f64).ceil() as usize).clamp(1, n);
    if k == n {
        return Ok(db.clone());
    }

    let numeric: Vec<usize> = (0..db.n_attributes())
        .filter(|&j| db.attributes()[j].is_numeric())
        .collect();
    let points: Vec<Vec<f64>> = normalized_points(db, &numeric);
    let (centroids, assignment, init) = lloyd(&points, k, seed);

    let mut rows = Vec::with_capacity(k);
    for (c, centroid) in centroids.iter().enumerate() {
        let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
        let mut row = Vec::with_capacity(db.n_attributes());
        for (j, attr) in db.attributes().iter().enumerate() {
            let cell = match &attr.domain {
                Domain::Numeric { min, max } => {
                    if members.is_empty() {
                        let pos = numeric.iter().position(|&q| q == j).unwrap();
                        Value::Num(min + centroid[pos] * (max - min))
                    } else {
                        let sum: f64 = members
                            .iter()
                            .map(|&i| db.rows()[i][j].as_num().unwrap())
                            .sum();
                        Value::Num(sum / members.len() as f64)
                    }
                }
                Domain::Categorical { categories } => {
                    if members.is_empty() {
                        db.rows()[init[c]][j]
                    } else {
                        let mut counts = vec![0usize; categories.len()];
                        for &i in &members {
                            if let Value::Cat(v) = db.rows()[i][j] {
                                counts[v] += 1;
                            }
                        }
                        // first maximum wins ties
                        let mode = counts
                            .iter()
                            .enumerate()
                            .fold(
                                (0, 0),
                                |best, (v, &cnt)| if cnt > best.1 { (v, cnt) } else { best },
                            )
                            .0;
                        Value::Cat(mode)
                    }
                }
            };
            row.push(cell);
        }
        rows.push(row);
    }
    Ok(TransactionDatabase::with_recomputed_domains(
        db.attributes().to_vec(),
        rows,
    ))
}

pub(crate) fn normalized_points(db: &TransactionDatabase, numeric: &[usize]) -> Vec<Vec<f64>> {
    let bounds: Vec<(f64, f64)> = numeric
        .iter()
        .map(|&j| match db.attributes()[j].domain {
            Domain::Numeric { min, max } => (min, max),
            Domain::Categorical { .. } => unreachable!(),
        })
        .collect();
    db.rows()
        .iter()
        .map(|row| {
            numeric
                .iter()
                .zip(&bounds)
                .map(|(&j, &(min, max))| {
                    let v = row[j].as_num().unwrap();
                    if max > min {
                        (v - min) / (max - min)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

const LLOYD_MAX_ITER: usize = 100;

/// Lloyd's k-means. Initial centroids are `k` seeded-random rows, preferring
/// distinct points. Returns centroids, assignment and the initial row index of
/// every cluster.
fn lloyd(points: &[Vec<f64>], k: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>, Vec<usize>) {
    let n = points.len();
    let mut rng = seed::rng(seed);

    let mut distinct: Vec<usize> = Vec::new();
    let mut repeated: Vec<usize> = Vec::new();
    for i in 0..n {
        if distinct.iter().any(|&d| points[d] == points[i]) {
            repeated.push(i);
        } else {
            distinct.push(i);
        }
    }
    let mut init: Vec<usize> = if distinct.len() >= k {
        let mut picked: Vec<usize> = sample(&mut rng, distinct.len(), k)
            .into_iter()
            .map(|p| distinct[p])
            .collect();
        picked.sort_unstable();
        picked
    } else {
        let mut picked = distinct.clone();
        picked.extend_from_slice(&repeated[..k - distinct.len()]);
        picked
    };
    init.truncate(k);

    let mut centroids: Vec<Vec<f64>> = init.iter().map(|&i| points[i].clone()).collect();
    let mut assignment = vec![usize::MAX; n];
    for _ in 0..LLOYD_MAX_ITER {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let c = nearest(p, &centroids);
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let dim = points.first().map_or(0, Vec::len);
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    (centroids, assignment, init)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    if sa == 0.0 || sb == 0.0 {
        return 0.0;
    }
    let n = a.len() as f64;
    let cov = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / n;
    (cov / (sa * sb)).clamp(-1.0, 1.0)
}

/// Drops the later-indexed member of every numeric attribute pair whose
/// absolute Pearson correlation reaches `threshold`. Pairs are swept in index
/// order and already dropped attributes take no further part.
pub fn remove_highly_correlated(
    db: &TransactionDatabase,
    threshold: f64,
) -> Result<TransactionDatabase, PreprocessError> {
    check_unit_interval("correlation threshold", threshold)?;
    let m = db.n_attributes();
    let columns: Vec<Option<Vec<f64>>> = (0..m)
        .map(|j| {
            db.attributes()[j]
                .is_numeric()
                .then(|| db.numeric_column(j))
        })
        .collect();
    let mut dropped = vec![false; m];
    for i in 0..m {
        let Some(ci) = &columns[i] else { continue };
        if dropped[i] {
            continue;
        }
        for j in i + 1..m {
            if dropped[j] {
                continue;
            }
            if let Some(cj) = &columns[j] {
                if pearson(ci, cj).abs() >= threshold {
                    dropped[j] = true;
                }
            }
        }
    }
    let keep: Vec<usize> = (0..m).filter(|&j| !dropped[j]).collect();
    Ok(db.project(&keep))
}

/// One-dimensional k-means with quantile seeding; every value is replaced by
/// its cluster centroid.
pub(crate) fn kmeans_1d(values: &[f64], k: usize) -> Vec<f64> {
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let m = distinct.len();
    let k = k.min(m);
    if k == m {
        return values.to_vec();
    }
    let mut centroids: Vec<f64> = (0..k)
        .map(|i| distinct[(2 * i + 1) * m / (2 * k)])
        .collect();
    let assign = |v: f64, centroids: &[f64]| {
        let mut best = 0;
        for c in 1..centroids.len() {
            if (v - centroids[c]).abs() < (v - centroids[best]).abs() {
                best = c;
            }
        }
        best
    };
    let mut assignment: Vec<usize> = vec![usize::MAX; values.len()];
    for _ in 0..LLOYD_MAX_ITER {
        let next: Vec<usize> = values.iter().map(|&v| assign(v, &centroids)).collect();
        if next == assignment {
            break;
        }
        assignment = next;
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&v, &c) in values.iter().zip(&assignment) {
            sums[c] += v;
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c] / counts[c] as f64;
            }
        }
    }
    assignment.iter().map(|&c| centroids[c]).collect()
}

/// Replaces every numeric value by the centroid of its 1-D k-means cluster.
pub fn kmeans_discretize(
    db: &TransactionDatabase,
    k: usize,
) -> Result<TransactionDatabase, PreprocessError> {
    check_k(k)?;
    Ok(map_numeric_columns(db, |col, _, _| kmeans_1d(col, k)))
}

/// Applies the selected methods in pool order, whatever order they were given in.
pub fn apply_chain(
    db: &TransactionDatabase,
    methods: &[PreprocessKind],
    params: &PreprocessParams,
    seed: u64,
) -> Result<TransactionDatabase, PreprocessError> {
    let mut out = db.clone();
    for kind in PreprocessKind::ALL {
        if !methods.contains(&kind) {
            continue;
        }
        out = match kind {
            PreprocessKind::MM => min_max(&out),
            PreprocessKind::ZS => z_score(&out),
            PreprocessKind::DS => squash(&out, params.squash_ratio, seed)?,
            PreprocessKind::RHC => remove_highly_correlated(&out, params.rhc_threshold)?,
            PreprocessKind::DK => kmeans_discretize(&out, params.dk_k)?,
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_csv;
    use proptest::prelude::*;

    fn db(text: &str) -> TransactionDatabase {
        parse_csv(text.as_bytes(), true).unwrap()
    }

    fn col(db: &TransactionDatabase, j: usize) -> Vec<f64> {
        db.numeric_column(j)
    }

    #[test]
    fn min_max_formula() {
        let out = min_max(&db("a,b\n2,r\n5,r\n7,g\n9,b\n"));
        assert_eq!(col(&out, 0), vec![0.0, 3.0 / 7.0, 5.0 / 7.0, 1.0]);
        assert_eq!(
            out.attribute_domain(0).unwrap(),
            &Domain::Numeric { min: 0.0, max: 1.0 }
        );
        assert_eq!(out.rows()[2][1], Value::Cat(1));
    }

    #[test]
    fn min_max_constant_column_is_zero() {
        let out = min_max(&db("a\n3\n3\n3\n"));
        assert_eq!(col(&out, 0), vec![0.0; 3]);
    }

    #[test]
    fn z_score_hand_values() {
        let out = z_score(&db("a\n1\n3\n"));
        assert_eq!(col(&out, 0), vec![-1.0, 1.0]);
        let out = z_score(&db("a\n4\n4\n"));
        assert_eq!(col(&out, 0), vec![0.0, 0.0]);
    }

    #[test]
    fn squash_identity_ratio() {
        let d = db("a,b\n1,x\n2,y\n3,x\n");
        assert_eq!(squash(&d, 1.0, 1).unwrap(), d);
    }

    #[test]
    fn squash_collapses_duplicates() {
        let d = db("a,b\n1.5,x\n1.5,x\n1.5,x\n1.5,x\n");
        let out = squash(&d, 0.25, 9).unwrap();
        assert_eq!(out.n_transactions(), 1);
        assert_eq!(out.rows()[0], d.rows()[0]);
    }

    #[test]
    fn squash_rejects_bad_ratio() {
        let d = db("a\n1\n");
        assert!(squash(&d, 0.0, 1).is_err());
        assert!(squash(&d, 1.5, 1).is_err());
    }

    /// A 40 x 8 numeric table shaped like the Bolts data.
    fn bolts_like() -> TransactionDatabase {
        let mut text = String::from("run,speed1,total,speed2,number2,sens,time,t20bolt\n");
        for i in 0..40u32 {
            let x = |a: u32, b: u32| ((i * a + b) % 17) as f64 + (i % 3) as f64 * 0.25;
            text.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                i + 1,
                x(3, 1),
                x(5, 2) * 2.0,
                x(7, 3),
                (i % 4) as f64,
                x(11, 5) / 3.0,
                x(13, 7) + 10.0,
                x(2, 9) * 1.5
            ));
        }
        db(&text)
    }

    /// Independent check of a squashing result: every output row must be the
    /// mean of the input rows whose nearest (brute force) normalized centroid
    /// it is, i.e. a Lloyd fixed point.
    #[test]
    fn squash_bolts_half() {
        let d = bolts_like();
        let out = squash(&d, 0.5, 42).unwrap();
        assert_eq!(out.n_transactions(), 20);

        let numeric: Vec<usize> = (0..d.n_attributes()).collect();
        let pts = normalized_points(&d, &numeric);
        let bounds: Vec<(f64, f64)> = (0..d.n_attributes())
            .map(|j| match d.attributes()[j].domain {
                Domain::Numeric { min, max } => (min, max),
                _ => unreachable!(),
            })
            .collect();
        let centroids: Vec<Vec<f64>> = out
            .rows()
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&bounds)
                    .map(|(v, (lo, hi))| {
                        if hi > lo {
                            (v.as_num().unwrap() - lo) / (hi - lo)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        for (c, out_row) in out.rows().iter().enumerate() {
            let members: Vec<usize> = (0..pts.len())
                .filter(|&i| {
                    let dists: Vec<f64> = centroids.iter().map(|ct| sq_dist(&pts[i], ct)).collect();
                    let best = dists.iter().cloned().fold(f64::INFINITY, f64::min);
                    dists.iter().position(|&x| x == best) == Some(c)
                })
                .collect();
            if members.is_empty() {
                continue;
            }
            for (j, value) in out_row.iter().enumerate() {
                let mean = members
                    .iter()
                    .map(|&i| d.rows()[i][j].as_num().unwrap())
                    .sum::<f64>()
                    / members.len() as f64;
                assert!((mean - value.as_num().unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rhc_drops_scaled_copy() {
        let out =
            remove_highly_correlated(&db("a,b,c\n1,2,5\n2,4,1\n3,6,4\n4,8,2\n"), 0.95).unwrap();
        let names: Vec<_> = out.attributes().iter().map(|a| a.name.clone()).collect();
        assert_eq!(names, ["a", "c"]);
    }

    #[test]
    fn rhc_keeps_uncorrelated() {
        // r = 0 exactly for this pair
        let d = db("a,b\n1,1\n2,-1\n3,-1\n4,1\n");
        assert_eq!(remove_highly_correlated(&d, 0.95).unwrap(), d);
    }

    #[test]
    fn rhc_three_identical_keeps_first() {
        let out =
            remove_highly_correlated(&db("a,b,c,d\n1,1,1,x\n2,2,2,y\n5,5,5,x\n"), 0.95).unwrap();
        let names: Vec<_> = out.attributes().iter().map(|a| a.name.clone()).collect();
        assert_eq!(names, ["a", "d"]);
    }

    /// Exhaustive optimal 1-D k-means: optimal clusters are contiguous runs
    /// of the sorted values, so enumerate every split into k runs.
    fn exhaustive_1d(values: &[f64], k: usize) -> Vec<f64> {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut best: Option<(f64, Vec<usize>)> = None;
        fn rec(
            start: usize,
            left: usize,
            n: usize,
            cuts: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if left == 1 {
                out.push(cuts.clone());
                return;
            }
            for c in start + 1..=n - left + 1 {
                cuts.push(c);
                rec(c, left - 1, n, cuts, out);
                cuts.pop();
            }
        }
        let mut all = Vec::new();
        rec(0, k, n, &mut Vec::new(), &mut all);
        for cuts in all {
            let mut bounds = vec![0];
            bounds.extend(&cuts);
            bounds.push(n);
            let sse: f64 = bounds
                .windows(2)
                .map(|w| {
                    let seg = &sorted[w[0]..w[1]];
                    let m = seg.iter().sum::<f64>() / seg.len() as f64;
                    seg.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
                })
                .sum();
            if best.as_ref().is_none_or(|(b, _)| sse < *b) {
                best = Some((sse, bounds));
            }
        }
        let bounds = best.unwrap().1;
        values
            .iter()
            .map(|v| {
                let pos = sorted.iter().position(|s| s == v).unwrap();
                let w = bounds
                    .windows(2)
                    .find(|w| w[0] <= pos && pos < w[1])
                    .unwrap();
                let seg = &sorted[w[0]..w[1]];
                seg.iter().sum::<f64>() / seg.len() as f64
            })
            .collect()
    }

    #[test]
    fn kmeans_1d_matches_exhaustive_oracle() {
        let values = [1.0, 2.0, 9.0, 10.0];
        let expected = exhaustive_1d(&values, 2);
        assert_eq!(expected, vec![1.5, 1.5, 9.5, 9.5]);
        assert_eq!(kmeans_1d(&values, 2), expected);
        let out = kmeans_discretize(&db("a\n1\n2\n9\n10\n"), 2).unwrap();
        assert_eq!(col(&out, 0), expected);
    }

    #[test]
    fn kmeans_few_distinct_values_unchanged() {
        assert_eq!(kmeans_1d(&[3.0, 1.0, 3.0], 5), vec![3.0, 1.0, 3.0]);
        assert_eq!(kmeans_1d(&[4.0, 4.0, 4.0], 2), vec![4.0; 3]);
        assert!(kmeans_discretize(&db("a\n1\n"), 1).is_err());
    }

    #[test]
    fn chain_order_and_composition() {
        let d = db("a,b,c\n1,2,0\n2,4,5\n3,6,1\n7,14,2\n");
        assert_eq!(
            apply_chain(&d, &[], &PreprocessParams::default(), 0).unwrap(),
            d
        );
        assert_eq!(
            apply_chain(&d, &[PreprocessKind::MM], &PreprocessParams::default(), 0).unwrap(),
            min_max(&d)
        );
        let manual = remove_highly_correlated(&min_max(&d), 0.95).unwrap();
        let chained = apply_chain(
            &d,
            &[PreprocessKind::RHC, PreprocessKind::MM],
            &PreprocessParams::default(),
            0,
        )
        .unwrap();
        assert_eq!(chained, manual);
        assert_eq!(chained.n_attributes(), 2);
    }

    #[test]
    fn parse_kind_names() {
        assert_eq!(
            "rhc".parse::<PreprocessKind>().unwrap(),
            PreprocessKind::RHC
        );
        assert!("foo".parse::<PreprocessKind>().is_err());
    }

    fn arb_db() -> impl Strategy<Value = TransactionDatabase> {
        (1usize..4, 2usize..12).prop_flat_map(|(m, n)| {
            (
                proptest::collection::vec(proptest::collection::vec(-50i32..50, m), n),
                proptest::collection::vec(0usize..3, n),
            )
                .prop_map(move |(cells, cats)| {
                    let mut text = (0..m)
                        .map(|j| format!("n{j}"))
                        .collect::<Vec<_>>()
                        .join(",");
                    text.push_str(",cat\n");
                    for (row, c) in cells.iter().zip(&cats) {
                        let nums: Vec<String> =
                            row.iter().map(|v| format!("{}", *v as f64 / 4.0)).collect();
                        text.push_str(&format!("{},k{c}\n", nums.join(",")));
                    }
                    parse_csv(text.as_bytes(), true).unwrap()
                })
        })
    }

    fn assert_valid(db: &TransactionDatabase) {
        TransactionDatabase::new(db.attributes().to_vec(), db.rows().to_vec()).unwrap();
    }

    proptest! {
        #[test]
        fn methods_preserve_schema_validity(d in arb_db(), seed in 0u64..1000) {
            let p = PreprocessParams::default();
            for out in [
                min_max(&d),
                z_score(&d),
                squash(&d, p.squash_ratio, seed).unwrap(),
                remove_highly_correlated(&d, p.rhc_threshold).unwrap(),
                kmeans_discretize(&d, p.dk_k).unwrap(),
            ] {
                assert_valid(&out);
            }
        }

        #[test]
        fn min_max_idempotent_and_z_score_stable(d in arb_db()) {
            let once = min_max(&d);
            prop_assert_eq!(min_max(&once), once);
            let z = z_score(&d);
            let zz = z_score(&z);
            for (a, b) in z.rows().iter().zip(zz.rows()) {
                for (x, y) in a.iter().zip(b) {
                    if let (Value::Num(x), Value::Num(y)) = (x, y) {
                        prop_assert!((x - y).abs() <= 1e-9);
                    }
                }
            }
        }

        #[test]
        fn rhc_never_grows_nor_empties(d in arb_db(), t in 0.01f64..=1.0) {
            let out = remove_highly_correlated(&d, t).unwrap();
            prop_assert!(out.n_attributes() <= d.n_attributes());
            prop_assert!(out.n_attributes() >= 1);
        }

        #[test]
        fn chain_is_deterministic(d in arb_db(), mask in 0u8..32, seed in 0u64..100) {
            let methods: Vec<PreprocessKind> = PreprocessKind::ALL
                .into_iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, k)| k)
                .collect();
            let p = PreprocessParams::default();
            prop_assert_eq!(apply_chain(&d, &methods, &p, seed).unwrap(), apply_chain(&d, &methods, &p, seed).unwrap());
        }
    }
}
