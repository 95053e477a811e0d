//! Split-set search on a selected variable.
//!
//! Candidate splits are scored by the reduction in total squared error.
//! Every unit contributes values to one or more "dimensions": the response
//! components in the multiresponse layout, or time bins in the longitudinal
//! layout (a piecewise-constant mean curve per child). Per-dimension sums are
//! accumulated so that each candidate is scored in `O(dims)`.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, Obs};
use crate::error::{Error, Result};
use crate::sample::{MultiResponse, PredictorValues, Response, Sample};
use crate::selector::SignMatrix;
use crate::stats::Curve;

/// Categorical variables with at most this many categories (missing
/// included) are searched exhaustively.
pub const EXHAUSTIVE_CATEGORY_LIMIT: usize = 11;
/// Time bins used to score longitudinal candidates when a node has more
/// distinct times than this.
pub const MAX_TIME_BINS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SplitRule {
    Numeric {
        var: usize,
        threshold: f64,
        missing_goes_left: bool,
        /// Missing values left, all observed values right.
        all_missing_split: bool,
    },
    Categorical {
        var: usize,
        left_categories: BTreeSet<u32>,
        missing_in_left: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl SplitRule {
    pub fn var(&self) -> usize {
        match self {
            Self::Numeric { var, .. } | Self::Categorical { var, .. } => *var,
        }
    }
}

pub fn apply_split(rule: &SplitRule, x: Cell) -> Result<Side> {
    let left = match (rule, x) {
        (
            SplitRule::Numeric {
                missing_goes_left,
                all_missing_split,
                ..
            },
            Cell::Missing,
        ) => *all_missing_split || *missing_goes_left,
        (
            SplitRule::Numeric {
                threshold,
                all_missing_split,
                ..
            },
            Cell::Number(v),
        ) => !*all_missing_split && v <= *threshold,
        (SplitRule::Categorical { missing_in_left, .. }, Cell::Missing) => *missing_in_left,
        (SplitRule::Categorical { left_categories, .. }, Cell::Category(c)) => left_categories.contains(&c),
        _ => return Err(Error::TypeMismatch),
    };
    Ok(if left { Side::Left } else { Side::Right })
}

/// Splits `units` into (left, right) under `rule`.
pub fn partition(sample: &Sample, rule: &SplitRule, units: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let p = &sample.predictors[rule.var()];
    units
        .iter()
        .partition(|&&i| matches!(apply_split(rule, p.cell(i as usize)), Ok(Side::Left)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpurityReport {
    pub parent_sse: f64,
    pub left_sse: f64,
    pub right_sse: f64,
    pub gain: f64,
}

impl ImpurityReport {
    fn new(parent_sse: f64, left_sse: f64, right_sse: f64) -> Self {
        Self {
            parent_sse,
            left_sse,
            right_sse,
            gain: parent_sse - left_sse - right_sse,
        }
    }
}

/// Per-response weights applied to squared errors. Normalizing uses
/// `1/s_k²` from the root node so impurities are comparable across nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseScale {
    pub weights: Vec<f64>,
}

impl ResponseScale {
    pub fn unit(d: usize) -> Self {
        Self { weights: vec![1.0; d] }
    }

    pub fn from_root(sample: &Sample, units: &[u32], normalize: bool) -> Self {
        match &sample.response {
            Response::Multi(m) if normalize => Self {
                weights: m
                    .values
                    .iter()
                    .map(|col| {
                        let v: Vec<f64> = units.iter().filter_map(|&i| col[i as usize]).collect();
                        let (_, sd) = crate::selector::mean_sd(&v);
                        if sd > 0.0 {
                            1.0 / (sd * sd)
                        } else {
                            1.0
                        }
                    })
                    .collect(),
            },
            Response::Multi(m) => Self::unit(m.dim()),
            Response::Long(_) => Self::unit(1),
        }
    }
}

/// Sum of squared deviations about the node means of each response, over
/// nonmissing values, weighted per response.
pub fn node_impurity(resp: &MultiResponse, units: &[u32], scale: &ResponseScale) -> f64 {
    resp.values
        .iter()
        .zip(&scale.weights)
        .map(|(col, w)| {
            let v: Vec<f64> = units.iter().filter_map(|&i| col[i as usize]).collect();
            if v.is_empty() {
                return 0.0;
            }
            let m = v.iter().sum::<f64>() / v.len() as f64;
            w * v.iter().map(|y| (y - m).powi(2)).sum::<f64>()
        })
        .sum()
}

/// Squared deviations of every observation from a curve.
pub fn node_impurity_long(series: &[Vec<Obs>], units: &[u32], curve: &Curve) -> f64 {
    units
        .iter()
        .flat_map(|&i| series[i as usize].iter())
        .map(|o| (o.y - curve.eval(o.u)).powi(2))
        .sum()
}

/// Per-unit sufficient statistics `(n, Σy, Σy²)` for every dimension,
/// with values centered on the node mean of their dimension.
#[derive(Clone, Debug)]
pub struct SplitScorer<'a> {
    sample: &'a Sample,
    units: &'a [u32],
    dims: usize,
    weights: Vec<f64>,
    stats: Vec<f64>,
}

type Acc = Vec<f64>;

impl<'a> SplitScorer<'a> {
    pub fn new(sample: &'a Sample, units: &'a [u32], scale: &ResponseScale) -> Self {
        match &sample.response {
            Response::Multi(m) => Self::multi(sample, m, units, scale),
            Response::Long(l) => Self::binned(sample, &l.series, units),
        }
    }

    fn multi(sample: &'a Sample, m: &MultiResponse, units: &'a [u32], scale: &ResponseScale) -> Self {
        let dims = m.dim();
        let centers: Vec<f64> = m
            .values
            .iter()
            .map(|col| {
                let (s, n) = units
                    .iter()
                    .filter_map(|&i| col[i as usize])
                    .fold((0.0, 0usize), |(s, n), y| (s + y, n + 1));
                if n > 0 {
                    s / n as f64
                } else {
                    0.0
                }
            })
            .collect();
        let mut stats = vec![0.0; units.len() * dims * 3];
        for (pos, &i) in units.iter().enumerate() {
            for (k, col) in m.values.iter().enumerate() {
                if let Some(y) = col[i as usize] {
                    let c = y - centers[k];
                    let base = (pos * dims + k) * 3;
                    stats[base] = 1.0;
                    stats[base + 1] = c;
                    stats[base + 2] = c * c;
                }
            }
        }
        Self {
            sample,
            units,
            dims,
            weights: scale.weights.clone(),
            stats,
        }
    }

    fn binned(sample: &'a Sample, series: &[Vec<Obs>], units: &'a [u32]) -> Self {
        let mut times: Vec<f64> = units
            .iter()
            .flat_map(|&i| series[i as usize].iter().map(|o| o.u))
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let bin_of: Box<dyn Fn(f64) -> usize> = if times.len() <= MAX_TIME_BINS {
            let t = times.clone();
            Box::new(move |u| t.partition_point(|&v| v < u))
        } else {
            let (lo, hi) = (times[0], times[times.len() - 1]);
            let width = (hi - lo) / MAX_TIME_BINS as f64;
            Box::new(move |u| (((u - lo) / width) as usize).min(MAX_TIME_BINS - 1))
        };
        let dims = times.len().clamp(1, MAX_TIME_BINS);
        let mut sums = vec![(0.0, 0usize); dims];
        for &i in units {
            for o in &series[i as usize] {
                let b = bin_of(o.u);
                sums[b].0 += o.y;
                sums[b].1 += 1;
            }
        }
        let centers: Vec<f64> = sums
            .iter()
            .map(|&(s, n)| if n > 0 { s / n as f64 } else { 0.0 })
            .collect();
        let mut stats = vec![0.0; units.len() * dims * 3];
        for (pos, &i) in units.iter().enumerate() {
            for o in &series[i as usize] {
                let b = bin_of(o.u);
                let c = o.y - centers[b];
                let base = (pos * dims + b) * 3;
                stats[base] += 1.0;
                stats[base + 1] += c;
                stats[base + 2] += c * c;
            }
        }
        Self {
            sample,
            units,
            dims,
            weights: vec![1.0; dims],
            stats,
        }
    }

    fn zero(&self) -> Acc {
        vec![0.0; self.dims * 3]
    }

    fn add(&self, acc: &mut Acc, pos: usize) {
        let s = &self.stats[pos * self.dims * 3..(pos + 1) * self.dims * 3];
        acc.iter_mut().zip(s).for_each(|(a, b)| *a += b);
    }

    fn sub(a: &Acc, b: &Acc) -> Acc {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    fn sse(&self, acc: &Acc) -> f64 {
        (0..self.dims)
            .map(|k| {
                let (n, s, ss) = (acc[3 * k], acc[3 * k + 1], acc[3 * k + 2]);
                if n > 0.0 {
                    self.weights[k] * (ss - s * s / n).max(0.0)
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn total(&self) -> Acc {
        let mut t = self.zero();
        (0..self.units.len()).for_each(|p| self.add(&mut t, p));
        t
    }

    /// Scoring impurity of the whole node.
    pub fn parent_sse(&self) -> f64 {
        self.sse(&self.total())
    }

    /// Scores an arbitrary partition given as a left/right flag per node
    /// position.
    pub fn report_for(&self, left: &[bool]) -> ImpurityReport {
        let mut l = self.zero();
        let mut r = self.zero();
        for (pos, &is_left) in left.iter().enumerate() {
            self.add(if is_left { &mut l } else { &mut r }, pos);
        }
        ImpurityReport::new(self.parent_sse(), self.sse(&l), self.sse(&r))
    }

    pub fn best_numeric(&self, var: usize) -> Result<(SplitRule, ImpurityReport)> {
        let PredictorValues::Numeric(values) = &self.sample.predictors[var].values else {
            return Err(Error::TypeMismatch);
        };
        let mut present: Vec<(f64, usize)> = Vec::with_capacity(self.units.len());
        let mut missing = self.zero();
        let mut n_missing = 0;
        for (pos, &i) in self.units.iter().enumerate() {
            match values[i as usize] {
                Some(x) => present.push((x, pos)),
                None => {
                    self.add(&mut missing, pos);
                    n_missing += 1;
                }
            }
        }
        if present.is_empty() {
            return Err(Error::Unsplittable);
        }
        present.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mean = present.iter().map(|p| p.0).sum::<f64>() / present.len() as f64;
        let total = self.total();
        let parent = self.sse(&total);

        let mut best: Option<(SplitRule, ImpurityReport)> = None;
        let mut prefix = self.zero();
        for w in 0..present.len() - 1 {
            self.add(&mut prefix, present[w].1);
            let (lo, hi) = (present[w].0, present[w + 1].0);
            if lo == hi {
                continue;
            }
            let mut c = lo + (hi - lo) / 2.0;
            if c >= hi {
                c = lo;
            }
            let missing_left = mean <= c;
            let left = if missing_left && n_missing > 0 {
                prefix.iter().zip(&missing).map(|(a, b)| a + b).collect()
            } else {
                prefix.clone()
            };
            let right = Self::sub(&total, &left);
            let report = ImpurityReport::new(parent, self.sse(&left), self.sse(&right));
            if best.as_ref().is_none_or(|(_, b)| report.gain > b.gain) {
                best = Some((
                    SplitRule::Numeric {
                        var,
                        threshold: c,
                        missing_goes_left: missing_left,
                        all_missing_split: false,
                    },
                    report,
                ));
            }
        }
        if n_missing > 0 {
            let right = Self::sub(&total, &missing);
            let report = ImpurityReport::new(parent, self.sse(&missing), self.sse(&right));
            if best.as_ref().is_none_or(|(_, b)| report.gain > b.gain) {
                best = Some((
                    SplitRule::Numeric {
                        var,
                        threshold: present[present.len() - 1].0,
                        missing_goes_left: true,
                        all_missing_split: true,
                    },
                    report,
                ));
            }
        }
        best.ok_or(Error::Unsplittable)
    }

    /// Best subset split; missing values act as one more category.
    /// `force_heuristic` uses the ordered search regardless of the number
    /// of categories.
    pub fn best_categorical(
        &self,
        var: usize,
        z: &SignMatrix,
        force_heuristic: bool,
    ) -> Result<(SplitRule, ImpurityReport)> {
        let limit = if force_heuristic { 0 } else { EXHAUSTIVE_CATEGORY_LIMIT };
        self.categorical_search(var, limit, CategoryOrder::SignPatterns(z))
    }

    /// Exhaustive subset search up to `limit` categories, otherwise a search
    /// over the `m − 1` cuts of the categories sorted by `order`.
    pub fn categorical_search(
        &self,
        var: usize,
        limit: usize,
        order: CategoryOrder<'_>,
    ) -> Result<(SplitRule, ImpurityReport)> {
        let PredictorValues::Categorical { codes, .. } = &self.sample.predictors[var].values else {
            return Err(Error::TypeMismatch);
        };
        // categories in first-appearance order; `None` is the missing category
        let mut index: HashMap<Option<u32>, usize> = HashMap::new();
        let mut cats: Vec<Option<u32>> = Vec::new();
        let mut acc: Vec<Acc> = Vec::new();
        let mut count: Vec<usize> = Vec::new();
        let mut cat_of = Vec::with_capacity(self.units.len());
        for (pos, &i) in self.units.iter().enumerate() {
            let key = codes[i as usize];
            let c = *index.entry(key).or_insert_with(|| {
                cats.push(key);
                acc.push(self.zero());
                count.push(0);
                cats.len() - 1
            });
            self.add(&mut acc[c], pos);
            count[c] += 1;
            cat_of.push(c);
        }
        let m = cats.len();
        if m < 2 {
            return Err(Error::Unsplittable);
        }
        let total = self.total();
        let parent = self.sse(&total);
        let score = |members: &[usize]| -> ImpurityReport {
            let mut left = self.zero();
            for &c in members {
                left.iter_mut().zip(&acc[c]).for_each(|(a, b)| *a += b);
            }
            let right = Self::sub(&total, &left);
            ImpurityReport::new(parent, self.sse(&left), self.sse(&right))
        };

        let mut best: Option<(Vec<usize>, ImpurityReport)> = None;
        let mut consider = |members: Vec<usize>| {
            let r = score(&members);
            if best.as_ref().is_none_or(|(_, b)| r.gain > b.gain) {
                best = Some((members, r));
            }
        };
        if m <= limit {
            // last category always on the right
            for mask in 1u32..(1 << (m - 1)) {
                consider((0..m - 1).filter(|&c| mask >> c & 1 == 1).collect());
            }
        } else {
            let ordered = match order {
                CategoryOrder::SignPatterns(z) => principal_order(&sign_profiles(z, &cat_of, m)),
                CategoryOrder::Means => principal_order(&self.mean_profiles(&acc)),
            };
            for cut in 1..m {
                consider(ordered[..cut].to_vec());
            }
        }
        let (members, report) = best.expect("at least one candidate");
        let left_n: usize = members.iter().map(|&c| count[c]).sum();
        let missing_in_left = match index.get(&None) {
            Some(c) => members.contains(c),
            None => 2 * left_n >= self.units.len(),
        };
        let left_categories = members.iter().filter_map(|&c| cats[c]).collect();
        Ok((
            SplitRule::Categorical {
                var,
                left_categories,
                missing_in_left,
            },
            report,
        ))
    }

    /// Weighted category mean vectors, each scaled by `√w_k`.
    fn mean_profiles(&self, acc: &[Acc]) -> Vec<(Vec<f64>, f64)> {
        acc.iter()
            .map(|a| {
                let size = (0..self.dims).map(|k| a[3 * k]).fold(0.0, f64::max);
                let profile = (0..self.dims)
                    .map(|k| {
                        let n = a[3 * k];
                        if n > 0.0 {
                            self.weights[k].sqrt() * a[3 * k + 1] / n
                        } else {
                            0.0
                        }
                    })
                    .collect();
                (profile, size.max(1.0))
            })
            .collect()
    }

    /// Split on `var` for a selected interaction pair `(var, other)`: each
    /// candidate split on `var` is scored after splitting both children
    /// again on `other` (at the child mean, or into single categories), and
    /// the candidate with the smallest four-way impurity wins. Returns the
    /// rule and that impurity.
    pub fn lookahead(&self, var: usize, other: usize, z: &SignMatrix) -> Result<(SplitRule, f64)> {
        let p = &self.sample.predictors[var];
        if let PredictorValues::Categorical { .. } = p.values {
            let (rule, _) = self.best_categorical(var, z, false)?;
            let (l, r): (Vec<usize>, Vec<usize>) = (0..self.units.len())
                .partition(|&pos| matches!(apply_split(&rule, p.cell(self.units[pos] as usize)), Ok(Side::Left)));
            let sse = self.second_level(&l, other) + self.second_level(&r, other);
            return Ok((rule, sse));
        }
        let PredictorValues::Numeric(values) = &p.values else {
            unreachable!()
        };
        let mut present: Vec<(f64, usize)> = Vec::with_capacity(self.units.len());
        let mut missing = Vec::new();
        for (pos, &i) in self.units.iter().enumerate() {
            match values[i as usize] {
                Some(x) => present.push((x, pos)),
                None => missing.push(pos),
            }
        }
        if present.is_empty() {
            return Err(Error::Unsplittable);
        }
        present.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mean = present.iter().map(|p| p.0).sum::<f64>() / present.len() as f64;
        let ordered: Vec<usize> = present.iter().map(|p| p.1).collect();

        let mut best: Option<(SplitRule, f64)> = None;
        let mut left = Vec::with_capacity(self.units.len());
        let mut right = Vec::with_capacity(self.units.len());
        for w in 0..present.len() - 1 {
            let (lo, hi) = (present[w].0, present[w + 1].0);
            if lo == hi {
                continue;
            }
            let mut c = lo + (hi - lo) / 2.0;
            if c >= hi {
                c = lo;
            }
            let missing_left = mean <= c;
            left.clear();
            right.clear();
            left.extend_from_slice(&ordered[..=w]);
            right.extend_from_slice(&ordered[w + 1..]);
            if missing_left {
                left.extend_from_slice(&missing);
            } else {
                right.extend_from_slice(&missing);
            }
            let sse = self.second_level(&left, other) + self.second_level(&right, other);
            if best.as_ref().is_none_or(|b| sse < b.1) {
                let rule = SplitRule::Numeric {
                    var,
                    threshold: c,
                    missing_goes_left: missing_left,
                    all_missing_split: false,
                };
                best = Some((rule, sse));
            }
        }
        if !missing.is_empty() {
            let sse = self.second_level(&missing, other) + self.second_level(&ordered, other);
            if best.as_ref().is_none_or(|b| sse < b.1) {
                let rule = SplitRule::Numeric {
                    var,
                    threshold: present[present.len() - 1].0,
                    missing_goes_left: true,
                    all_missing_split: true,
                };
                best = Some((rule, sse));
            }
        }
        best.ok_or(Error::Unsplittable)
    }

    /// Impurity of the node positions `group` after splitting them on `var`
    /// at their mean (numeric, missing values to the left) or into one cell
    /// per category.
    fn second_level(&self, group: &[usize], var: usize) -> f64 {
        match &self.sample.predictors[var].values {
            PredictorValues::Numeric(v) => {
                let (s, n) = group
                    .iter()
                    .filter_map(|&pos| v[self.units[pos] as usize])
                    .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
                let mean = if n > 0 { s / n as f64 } else { 0.0 };
                let mut l = self.zero();
                let mut r = self.zero();
                for &pos in group {
                    match v[self.units[pos] as usize] {
                        Some(x) if x > mean => self.add(&mut r, pos),
                        _ => self.add(&mut l, pos),
                    }
                }
                self.sse(&l) + self.sse(&r)
            }
            PredictorValues::Categorical { codes, .. } => {
                let mut cells: HashMap<Option<u32>, Acc> = HashMap::new();
                for &pos in group {
                    let acc = cells
                        .entry(codes[self.units[pos] as usize])
                        .or_insert_with(|| self.zero());
                    self.add(acc, pos);
                }
                cells.values().map(|a| self.sse(a)).sum()
            }
        }
    }
}

/// How categories are ordered when there are too many to enumerate subsets.
#[derive(Clone, Copy, Debug)]
pub enum CategoryOrder<'z> {
    /// First principal coordinate of each category's sign-pattern
    /// proportions.
    SignPatterns(&'z SignMatrix),
    /// First principal coordinate of each category's (weighted) response
    /// means; reduces to ordering by mean for one response.
    Means,
}

/// Per-category sign-pattern proportion vectors with category sizes.
fn sign_profiles(z: &SignMatrix, cat_of: &[usize], m: usize) -> Vec<(Vec<f64>, f64)> {
    let (cols, n_cols) = z.pattern_columns();
    let mut props = vec![vec![0.0; n_cols]; m];
    let mut sizes = vec![0.0; m];
    for (&c, &col) in cat_of.iter().zip(&cols) {
        props[c][col] += 1.0;
        sizes[c] += 1.0;
    }
    props
        .into_iter()
        .zip(sizes)
        .map(|(mut p, n)| {
            p.iter_mut().for_each(|v| *v /= n);
            (p, n)
        })
        .collect()
}

/// Orders categories by their score on the first principal axis of their
/// profile vectors, weighting each category by its size.
fn principal_order(profiles: &[(Vec<f64>, f64)]) -> Vec<usize> {
    let m = profiles.len();
    let dim = profiles.first().map_or(0, |p| p.0.len());
    let total: f64 = profiles.iter().map(|p| p.1).sum();
    let centre: Vec<f64> = (0..dim)
        .map(|j| profiles.iter().map(|(p, n)| p[j] * n).sum::<f64>() / total)
        .collect();
    let centred: Vec<Vec<f64>> = profiles
        .iter()
        .map(|(p, _)| p.iter().zip(&centre).map(|(a, b)| a - b).collect())
        .collect();
    let sizes: Vec<f64> = profiles.iter().map(|p| p.1).collect();
    let axis = leading_axis(&centred, &sizes);
    let scores: Vec<f64> = centred
        .iter()
        .map(|p| p.iter().zip(&axis).map(|(a, b)| a * b).sum())
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    order
}

/// Leading eigenvector of `Σ w_i r_i r_iᵀ` by power iteration.
fn leading_axis(rows: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let dim = rows.first().map_or(0, Vec::len);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let start = rows
        .iter()
        .zip(w)
        .max_by(|a, b| (norm(a.0) * a.1).total_cmp(&(norm(b.0) * b.1)))
        .map(|(r, _)| r.clone())
        .unwrap_or_default();
    let mut v = start;
    let n0 = norm(&v);
    if n0 == 0.0 {
        return vec![0.0; dim];
    }
    v.iter_mut().for_each(|x| *x /= n0);
    for _ in 0..200 {
        let mut next = vec![0.0; dim];
        for (r, &wi) in rows.iter().zip(w) {
            let proj: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() * wi;
            next.iter_mut().zip(r).for_each(|(n, a)| *n += proj * a);
        }
        let nn = norm(&next);
        if nn == 0.0 {
            break;
        }
        next.iter_mut().for_each(|x| *x /= nn);
        let delta: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if delta < 1e-12 {
            break;
        }
    }
    v
}

pub fn best_numeric_split(
    sample: &Sample,
    units: &[u32],
    var: usize,
    scale: &ResponseScale,
) -> Result<(SplitRule, ImpurityReport)> {
    SplitScorer::new(sample, units, scale).best_numeric(var)
}

pub fn best_categorical_split(
    sample: &Sample,
    units: &[u32],
    var: usize,
    z: &SignMatrix,
    scale: &ResponseScale,
) -> Result<(SplitRule, ImpurityReport)> {
    SplitScorer::new(sample, units, scale).best_categorical(var, z, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Predictor;
    use crate::selector::{sign_vectors_multi, MissingSign};

    fn sample(preds: Vec<Predictor>, ys: Vec<Vec<Option<f64>>>) -> Sample {
        let names = (0..ys.len()).map(|k| format!("y{k}")).collect();
        Sample::multi(preds, names, ys).unwrap()
    }

    #[test]
    fn impurity_basics() {
        let s = sample(
            vec![Predictor::numeric("x", vec![Some(0.0), Some(1.0)])],
            vec![vec![Some(0.0), Some(2.0)], vec![Some(1.0), Some(1.0)]],
        );
        let m = s.multi_response().unwrap();
        assert_eq!(node_impurity(m, &[0, 1], &ResponseScale::unit(2)), 2.0);
        assert_eq!(node_impurity(m, &[1], &ResponseScale::unit(2)), 0.0);
    }

    #[test]
    fn perfect_separation() {
        let s = sample(
            vec![Predictor::numeric(
                "x",
                vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0)],
            )],
            vec![vec![Some(0.0), Some(0.0), Some(10.0), Some(10.0)]],
        );
        let (rule, rep) = best_numeric_split(&s, &[0, 1, 2, 3], 0, &ResponseScale::unit(1)).unwrap();
        assert!(matches!(rule, SplitRule::Numeric { threshold, all_missing_split: false, .. } if threshold == 2.5));
        assert!((rep.gain - 100.0).abs() < 1e-12);
        assert!(rep.left_sse.abs() < 1e-12 && rep.right_sse.abs() < 1e-12);
    }

    #[test]
    fn missing_values_enable_the_all_missing_split() {
        // y is explained entirely by missingness of x
        let s = sample(
            vec![Predictor::numeric(
                "x",
                vec![Some(1.0), Some(2.0), None, None, Some(3.0)],
            )],
            vec![vec![Some(0.0), Some(0.0), Some(5.0), Some(5.0), Some(0.0)]],
        );
        let (rule, rep) = best_numeric_split(&s, &[0, 1, 2, 3, 4], 0, &ResponseScale::unit(1)).unwrap();
        assert!(matches!(
            rule,
            SplitRule::Numeric {
                all_missing_split: true,
                ..
            }
        ));
        assert!((rep.gain - 30.0).abs() < 1e-12);
        assert_eq!(apply_split(&rule, Cell::Missing).unwrap(), Side::Left);
        assert_eq!(apply_split(&rule, Cell::Number(-100.0)).unwrap(), Side::Right);
    }

    #[test]
    fn unsplittable_numeric() {
        let s = sample(
            vec![Predictor::numeric("x", vec![Some(1.0), Some(1.0)])],
            vec![vec![Some(0.0), Some(1.0)]],
        );
        assert!(matches!(
            best_numeric_split(&s, &[0, 1], 0, &ResponseScale::unit(1)),
            Err(Error::Unsplittable)
        ));
    }

    fn cats(codes: &[u32], levels: usize) -> Predictor {
        Predictor::categorical(
            "g",
            codes.iter().map(|&c| Some(c)).collect(),
            (0..levels).map(|l| format!("c{l}")).collect(),
        )
    }

    #[test]
    fn categorical_perfect_split() {
        let s = sample(
            vec![cats(&[0, 1, 2, 0, 1, 2], 3)],
            vec![vec![Some(5.0), Some(0.0), Some(0.0), Some(5.0), Some(0.0), Some(0.0)]],
        );
        let units = s.all_units();
        let z = sign_vectors_multi(s.multi_response().unwrap(), &units, MissingSign::Minus).unwrap();
        let (rule, rep) = best_categorical_split(&s, &units, 0, &z, &ResponseScale::unit(1)).unwrap();
        let SplitRule::Categorical { left_categories, .. } = &rule else {
            panic!()
        };
        // {A} vs {B, C}, either orientation
        assert!(*left_categories == BTreeSet::from([0]) || *left_categories == BTreeSet::from([1, 2]));
        assert!(rep.left_sse.abs() < 1e-12 && rep.right_sse.abs() < 1e-12);
    }

    #[test]
    fn two_categories_single_split() {
        let s = sample(vec![cats(&[0, 1, 1], 2)], vec![vec![Some(1.0), Some(2.0), Some(4.0)]]);
        let units = s.all_units();
        let z = sign_vectors_multi(s.multi_response().unwrap(), &units, MissingSign::Minus).unwrap();
        let (rule, _) = best_categorical_split(&s, &units, 0, &z, &ResponseScale::unit(1)).unwrap();
        assert_eq!(
            rule,
            SplitRule::Categorical {
                var: 0,
                left_categories: BTreeSet::from([0]),
                missing_in_left: false
            }
        );
        let s1 = sample(vec![cats(&[1, 1], 2)], vec![vec![Some(1.0), Some(2.0)]]);
        let z1 = sign_vectors_multi(s1.multi_response().unwrap(), &[0, 1], MissingSign::Minus).unwrap();
        assert!(best_categorical_split(&s1, &[0, 1], 0, &z1, &ResponseScale::unit(1)).is_err());
    }

    #[test]
    fn routing() {
        let r = SplitRule::Numeric {
            var: 0,
            threshold: 2.5,
            missing_goes_left: false,
            all_missing_split: false,
        };
        assert_eq!(apply_split(&r, Cell::Number(2.5)).unwrap(), Side::Left);
        assert_eq!(apply_split(&r, Cell::Number(2.6)).unwrap(), Side::Right);
        assert_eq!(apply_split(&r, Cell::Missing).unwrap(), Side::Right);
        assert!(apply_split(&r, Cell::Category(0)).is_err());
        let c = SplitRule::Categorical {
            var: 0,
            left_categories: BTreeSet::from([0, 2]),
            missing_in_left: true,
        };
        assert_eq!(apply_split(&c, Cell::Category(1)).unwrap(), Side::Right);
        assert_eq!(apply_split(&c, Cell::Category(2)).unwrap(), Side::Left);
        assert_eq!(apply_split(&c, Cell::Missing).unwrap(), Side::Left);
        assert!(apply_split(&c, Cell::Number(1.0)).is_err());
    }
}
