//! Split-variable selection by chi-squared tests of residual sign patterns.
//!
//! Each unit in a node gets a sign vector `Z ∈ {−1, +1}^d`. Every predictor
//! is grouped (intervals for numeric, categories for categorical, plus a
//! missing group) and cross-tabulated against the observed `Z` patterns.
//! The variable with the smallest p-value is chosen if it beats `0.05/d`;
//! otherwise pairwise interaction tables are tried against
//! `0.05/(d(d−1))`, falling back to the smallest main-effect p-value.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::Obs;
use crate::error::{Error, Result};
use crate::sample::{MultiResponse, Predictor, PredictorValues, Sample};
use crate::stats::{chisq_test, ContingencyTable, Curve};

pub const SIGNIFICANCE: f64 = 0.05;
/// Interaction pairs with more nonempty cells than this are skipped.
pub const MAX_INTERACTION_ROWS: usize = 64;
pub const MAX_SIGN_DIM: usize = 31;

/// Sign assigned to a missing response component.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingSign {
    #[default]
    Minus,
    Plus,
}

/// Residual sign vectors of the units in a node, one bit per component
/// (set = +1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignMatrix {
    d: usize,
    patterns: Vec<u32>,
}

impl SignMatrix {
    pub fn from_patterns(d: usize, patterns: Vec<u32>) -> Self {
        assert!((1..=MAX_SIGN_DIM).contains(&d));
        assert!(patterns.iter().all(|&p| p >> d == 0));
        Self { d, patterns }
    }

    pub fn from_signs(rows: &[Vec<i8>]) -> Self {
        let d = rows.first().map_or(1, Vec::len);
        let patterns = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold(0u32, |acc, (k, &s)| if s > 0 { acc | 1 << k } else { acc })
            })
            .collect();
        Self::from_patterns(d, patterns)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn pattern(&self, i: usize) -> u32 {
        self.patterns[i]
    }

    pub fn sign(&self, i: usize, k: usize) -> i8 {
        if self.patterns[i] >> k & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn signs(&self, i: usize) -> Vec<i8> {
        (0..self.d).map(|k| self.sign(i, k)).collect()
    }

    /// Dense column index of each unit's pattern (observed patterns only, in
    /// order of first appearance) and the number of distinct patterns.
    pub fn pattern_columns(&self) -> (Vec<usize>, usize) {
        let mut index: HashMap<u32, usize> = HashMap::new();
        let cols = self
            .patterns
            .iter()
            .map(|&p| {
                let next = index.len();
                *index.entry(p).or_insert(next)
            })
            .collect();
        (cols, index.len())
    }
}

/// Signs about the node means of each response; `Y_k ≤ ȳ_k` is −1.
pub fn sign_vectors_multi(resp: &MultiResponse, units: &[u32], missing: MissingSign) -> Result<SignMatrix> {
    let d = resp.dim();
    if units.is_empty() {
        return Err(Error::InvalidData("empty node".into()));
    }
    if d > MAX_SIGN_DIM {
        return Err(Error::Config(format!("at most {MAX_SIGN_DIM} responses supported")));
    }
    let mut means = Vec::with_capacity(d);
    for (k, col) in resp.values.iter().enumerate() {
        let (sum, n) = units
            .iter()
            .filter_map(|&i| col[i as usize])
            .fold((0.0, 0usize), |(s, n), y| (s + y, n + 1));
        if n == 0 {
            return Err(Error::InvalidData(format!(
                "response `{}` is entirely missing in the node",
                resp.names[k]
            )));
        }
        means.push(sum / n as f64);
    }
    let patterns = units
        .iter()
        .map(|&i| {
            resp.values
                .iter()
                .zip(&means)
                .enumerate()
                .fold(0u32, |acc, (k, (col, m))| {
                    let plus = match col[i as usize] {
                        Some(y) => y > *m,
                        None => missing == MissingSign::Plus,
                    };
                    if plus {
                        acc | 1 << k
                    } else {
                        acc
                    }
                })
        })
        .collect();
    Ok(SignMatrix::from_patterns(d, patterns))
}

/// `d` equal-length intervals covering `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeIntervals {
    pub start: f64,
    pub end: f64,
    pub d: usize,
}

impl TimeIntervals {
    pub fn spanning<'a>(series: impl IntoIterator<Item = &'a [Obs]>, d: usize) -> Option<Self> {
        let (lo, hi) = series
            .into_iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), o| {
                (lo.min(o.u), hi.max(o.u))
            });
        (lo <= hi).then_some(Self { start: lo, end: hi, d })
    }

    pub fn index(&self, u: f64) -> usize {
        let width = (self.end - self.start) / self.d as f64;
        if width <= 0.0 {
            return 0;
        }
        (((u - self.start) / width).floor().max(0.0) as usize).min(self.d - 1)
    }
}

/// Per subject and time interval: +1 when at least as many observations lie
/// strictly above the curve as on or below it; −1 otherwise, including for
/// intervals with no observations.
pub fn sign_vectors_long(series: &[&[Obs]], curve: &Curve, d: usize) -> Result<SignMatrix> {
    if series.is_empty() {
        return Err(Error::InvalidData("no subjects in node".into()));
    }
    if d == 0 || d > MAX_SIGN_DIM {
        return Err(Error::Config(format!("interval count must be in 1..={MAX_SIGN_DIM}")));
    }
    let intervals = TimeIntervals::spanning(series.iter().copied(), d);
    let patterns = series
        .iter()
        .map(|obs| {
            let mut above = vec![0usize; d];
            let mut below = vec![0usize; d];
            let iv = intervals.expect("nonempty series");
            for o in obs.iter() {
                let k = iv.index(o.u);
                if o.y > curve.eval(o.u) {
                    above[k] += 1;
                } else {
                    below[k] += 1;
                }
            }
            (0..d).fold(0u32, |acc, k| {
                if above[k] + below[k] > 0 && above[k] >= below[k] {
                    acc | 1 << k
                } else {
                    acc
                }
            })
        })
        .collect();
    Ok(SignMatrix::from_patterns(d, patterns))
}

/// Row group of every unit in a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupAssignment {
    pub groups: Vec<usize>,
    /// Total number of groups, including the missing group if present.
    pub n_groups: usize,
    pub missing_group: Option<usize>,
}

/// Interval cut points used to group a numeric variable.
pub fn numeric_cuts(mean: f64, sd: f64, node_n: usize, d: usize) -> Vec<f64> {
    let threshold = 5.0 * 2f64.powi(d as i32 + 2);
    if (node_n as f64) < threshold {
        let h = sd * 3f64.sqrt() / 3.0;
        vec![mean - h, mean + h]
    } else {
        let h = sd * 3f64.sqrt() / 2.0;
        vec![mean - h, mean, mean + h]
    }
}

pub fn group_numeric(x: &[Option<f64>], node_n: usize, d: usize) -> GroupAssignment {
    let present: Vec<f64> = x.iter().flatten().copied().collect();
    let has_missing = present.len() < x.len();
    let constant = present.windows(2).all(|w| w[0] == w[1]);
    let cuts = if constant || present.is_empty() {
        Vec::new()
    } else {
        let (mean, sd) = mean_sd(&present);
        numeric_cuts(mean, sd, node_n, d)
    };
    let missing_group = has_missing.then_some(cuts.len() + 1);
    let groups = x
        .iter()
        .map(|v| match v {
            // left-open, right-closed intervals
            Some(v) => cuts.partition_point(|&c| c < *v),
            None => cuts.len() + 1,
        })
        .collect();
    GroupAssignment {
        groups,
        n_groups: cuts.len() + 1 + usize::from(has_missing),
        missing_group,
    }
}

/// One group per observed category, in order of first appearance.
pub fn group_categorical(codes: &[Option<u32>]) -> GroupAssignment {
    let mut index: HashMap<u32, usize> = HashMap::new();
    let mut has_missing = false;
    for c in codes {
        match c {
            Some(c) => {
                let next = index.len();
                index.entry(*c).or_insert(next);
            }
            None => has_missing = true,
        }
    }
    let m = index.len();
    let groups = codes.iter().map(|c| c.map_or(m, |c| index[&c])).collect();
    GroupAssignment {
        groups,
        n_groups: m + usize::from(has_missing),
        missing_group: has_missing.then_some(m),
    }
}

/// Mean and unbiased standard deviation.
pub(crate) fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn group_predictor(p: &Predictor, units: &[u32], d: usize) -> GroupAssignment {
    match &p.values {
        PredictorValues::Numeric(v) => {
            let x: Vec<Option<f64>> = units.iter().map(|&i| v[i as usize]).collect();
            group_numeric(&x, units.len(), d)
        }
        PredictorValues::Categorical { codes, .. } => {
            let c: Vec<Option<u32>> = units.iter().map(|&i| codes[i as usize]).collect();
            group_categorical(&c)
        }
    }
}

fn table_pvalue(groups: &[usize], n_groups: usize, cols: &[usize], n_cols: usize) -> f64 {
    let mut t = ContingencyTable::zeros(n_groups, n_cols);
    for (&g, &c) in groups.iter().zip(cols) {
        t.add(g, c, 1);
    }
    chisq_test(&t)
}

pub fn main_effect_pvalue(sample: &Sample, units: &[u32], z: &SignMatrix, var: usize) -> f64 {
    let g = group_predictor(&sample.predictors[var], units, z.dim());
    let (cols, n_cols) = z.pattern_columns();
    table_pvalue(&g.groups, g.n_groups, &cols, n_cols)
}

/// Halves at the node mean for numeric variables, one cell per category for
/// categorical ones; `None` for missing.
fn interaction_cells(p: &Predictor, units: &[u32]) -> Vec<Option<usize>> {
    match &p.values {
        PredictorValues::Numeric(v) => {
            let present: Vec<f64> = units.iter().filter_map(|&i| v[i as usize]).collect();
            let mean = present.iter().sum::<f64>() / present.len().max(1) as f64;
            units
                .iter()
                .map(|&i| v[i as usize].map(|x| usize::from(x > mean)))
                .collect()
        }
        PredictorValues::Categorical { codes, .. } => {
            let mut index: HashMap<u32, usize> = HashMap::new();
            units
                .iter()
                .map(|&i| {
                    codes[i as usize].map(|c| {
                        let next = index.len();
                        *index.entry(c).or_insert(next)
                    })
                })
                .collect()
        }
    }
}

pub fn interaction_pvalue(sample: &Sample, units: &[u32], z: &SignMatrix, var_i: usize, var_j: usize) -> f64 {
    assert_ne!(var_i, var_j);
    let (pi, pj) = (&sample.predictors[var_i], &sample.predictors[var_j]);
    if !pi.varies(units) || !pj.varies(units) {
        return 1.0;
    }
    let a = interaction_cells(pi, units);
    let b = interaction_cells(pj, units);
    let mut index: HashMap<Option<(usize, usize)>, usize> = HashMap::new();
    let groups: Vec<usize> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| {
            let key = x.zip(*y);
            let next = index.len();
            *index.entry(key).or_insert(next)
        })
        .collect();
    if index.len() > MAX_INTERACTION_ROWS {
        return 1.0;
    }
    let (cols, n_cols) = z.pattern_columns();
    table_pvalue(&groups, index.len(), &cols, n_cols)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionKind {
    MainEffect(usize),
    Interaction(usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub kind: SelectionKind,
    /// Main-effect p-value of every predictor (1 for predictors that do not
    /// vary in the node).
    pub main_p: Vec<f64>,
    /// Interaction p-values `(i, j, p)`; empty unless the main-effect stage
    /// found nothing significant.
    pub interaction_p: Vec<(usize, usize, f64)>,
    pub chosen_p: f64,
    /// False when neither threshold was met and the smallest main-effect
    /// p-value was taken as a fallback.
    pub significant: bool,
}

pub fn main_threshold(d: usize) -> f64 {
    SIGNIFICANCE / d as f64
}

/// `0.05 / (d(d−1))`, with the denominator floored at one so that `d = 1`
/// uses 0.05.
pub fn interaction_threshold(d: usize) -> f64 {
    SIGNIFICANCE / (d * d.saturating_sub(1)).max(1) as f64
}

/// Index of the smallest value, first wins on ties.
fn argmin(values: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    values.fold(None, |best, (i, p)| match best {
        Some((_, bp)) if bp <= p => best,
        _ => Some((i, p)),
    })
}

pub fn select_split_variable(sample: &Sample, units: &[u32], z: &SignMatrix) -> Result<Selection> {
    let d = z.dim();
    let varying: Vec<bool> = sample.predictors.iter().map(|p| p.varies(units)).collect();
    if !varying.iter().any(|&v| v) {
        return Err(Error::NoSplit);
    }
    let main_p: Vec<f64> = (0..sample.predictors.len())
        .map(|j| {
            if varying[j] {
                main_effect_pvalue(sample, units, z, j)
            } else {
                1.0
            }
        })
        .collect();
    let (best, best_p) = argmin(main_p.iter().copied().enumerate().filter(|&(j, _)| varying[j]))
        .expect("at least one varying predictor");
    if best_p < main_threshold(d) {
        return Ok(Selection {
            kind: SelectionKind::MainEffect(best),
            main_p,
            interaction_p: Vec::new(),
            chosen_p: best_p,
            significant: true,
        });
    }

    let p = sample.predictors.len();
    let mut interaction_p = Vec::with_capacity(p * p.saturating_sub(1) / 2);
    for i in 0..p {
        for j in i + 1..p {
            let pv = if varying[i] && varying[j] {
                interaction_pvalue(sample, units, z, i, j)
            } else {
                1.0
            };
            interaction_p.push((i, j, pv));
        }
    }
    if let Some((k, pv)) = argmin(interaction_p.iter().map(|t| t.2).enumerate()) {
        if pv < interaction_threshold(d) {
            let (i, j, _) = interaction_p[k];
            return Ok(Selection {
                kind: SelectionKind::Interaction(i, j),
                main_p,
                interaction_p,
                chosen_p: pv,
                significant: true,
            });
        }
    }
    Ok(Selection {
        kind: SelectionKind::MainEffect(best),
        main_p,
        interaction_p,
        chosen_p: best_p,
        significant: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Predictor;

    fn multi(values: Vec<Vec<Option<f64>>>) -> MultiResponse {
        MultiResponse {
            names: (0..values.len()).map(|k| format!("y{k}")).collect(),
            values,
        }
    }

    #[test]
    fn signs_about_the_mean() {
        let r = multi(vec![vec![Some(1.0), Some(3.0)], vec![Some(1.0), Some(3.0)]]);
        let z = sign_vectors_multi(&r, &[0, 1], MissingSign::Minus).unwrap();
        assert_eq!(z.signs(0), vec![-1, -1]);
        assert_eq!(z.signs(1), vec![1, 1]);
    }

    #[test]
    fn ties_at_the_mean_are_negative() {
        let r = multi(vec![vec![Some(1.0), Some(2.0), Some(3.0)]]);
        let z = sign_vectors_multi(&r, &[0, 1, 2], MissingSign::Minus).unwrap();
        assert_eq!(z.sign(1, 0), -1);
    }

    #[test]
    fn missing_response_uses_chosen_sign() {
        let r = multi(vec![
            vec![Some(10.0), Some(0.0), Some(5.0)],
            vec![None, Some(1.0), Some(3.0)],
        ]);
        let z = sign_vectors_multi(&r, &[0, 1, 2], MissingSign::Minus).unwrap();
        assert_eq!(z.signs(0), vec![1, -1]);
        let z = sign_vectors_multi(&r, &[0, 1, 2], MissingSign::Plus).unwrap();
        assert_eq!(z.signs(0), vec![1, 1]);
        let r = multi(vec![vec![Some(1.0), Some(2.0)], vec![None, None]]);
        assert!(sign_vectors_multi(&r, &[0, 1], MissingSign::Minus).is_err());
    }

    #[test]
    fn longitudinal_signs() {
        let curve = Curve::new(vec![(0.0, 0.0), (9.0, 0.0)]).unwrap();
        let high: Vec<Obs> = (0..10).map(|u| Obs { u: u as f64, y: 1.0 }).collect();
        // nothing in the middle interval [3, 6)
        let gap: Vec<Obs> = [0.0, 1.0, 7.0, 9.0].iter().map(|&u| Obs { u, y: 1.0 }).collect();
        // interval 0: one above, one on the curve -> +1 (ties count as >=)
        let tie = vec![Obs { u: 0.0, y: 1.0 }, Obs { u: 1.0, y: 0.0 }, Obs { u: 9.0, y: -1.0 }];
        let z = sign_vectors_long(&[&high, &gap, &tie], &curve, 3).unwrap();
        assert_eq!(z.signs(0), vec![1, 1, 1]);
        assert_eq!(z.signs(1), vec![1, -1, 1]);
        assert_eq!(z.signs(2), vec![1, -1, -1]);
        assert!(sign_vectors_long(&[], &curve, 3).is_err());
    }

    #[test]
    fn three_groups_below_threshold() {
        assert_eq!(numeric_cuts(0.0, 1.0, 50, 3).len(), 2);
        let c = numeric_cuts(0.0, 1.0, 50, 3);
        assert!((c[1] - 0.577_35).abs() < 1e-5 && (c[0] + 0.577_35).abs() < 1e-5);
        let c = numeric_cuts(0.0, 1.0, 200, 3);
        assert_eq!(c.len(), 3);
        assert!((c[0] + 0.866_03).abs() < 1e-5 && c[1] == 0.0 && (c[2] - 0.866_03).abs() < 1e-5);
        // boundary: 5 * 2^5 = 160
        assert_eq!(numeric_cuts(0.0, 1.0, 159, 3).len(), 2);
        assert_eq!(numeric_cuts(0.0, 1.0, 160, 3).len(), 3);
    }

    #[test]
    fn grouping_with_missing_and_constants() {
        let g = group_numeric(&[Some(-2.0), Some(0.0), Some(2.0), None], 4, 1);
        assert_eq!(g.groups, vec![0, 1, 2, 3]);
        assert_eq!(g.n_groups, 4);
        assert_eq!(g.missing_group, Some(3));
        let g = group_numeric(&[Some(0.1); 5], 5, 1);
        assert_eq!(g.groups, vec![0; 5]);
        assert_eq!(g.n_groups, 1);
        // right-closed: a value exactly on a cut goes to the lower group
        let g = group_numeric(&[Some(-1.0), Some(0.0), Some(1.0)], 3, 1);
        let (m, s) = mean_sd(&[-1.0, 0.0, 1.0]);
        let cuts = numeric_cuts(m, s, 3, 1);
        assert_eq!(g.groups[1], cuts.partition_point(|&c| c < 0.0));
    }

    #[test]
    fn categorical_grouping() {
        let g = group_categorical(&[Some(4), Some(1), None, Some(4)]);
        assert_eq!(g.groups, vec![0, 1, 2, 0]);
        assert_eq!(g.n_groups, 3);
    }

    #[test]
    fn thresholds() {
        assert!((main_threshold(3) - 0.016_667).abs() < 1e-6);
        assert!((interaction_threshold(3) - 0.008_333).abs() < 1e-6);
        assert_eq!(interaction_threshold(1), 0.05);
    }

    fn sample_with(preds: Vec<Predictor>, y: Vec<f64>) -> Sample {
        Sample::multi(preds, vec!["y".into()], vec![y.into_iter().map(Some).collect()]).unwrap()
    }

    #[test]
    fn single_group_predictor_has_unit_pvalue() {
        let s = sample_with(
            vec![Predictor::numeric("x", vec![Some(1.0); 6])],
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        );
        let units = s.all_units();
        let z = sign_vectors_multi(s.multi_response().unwrap(), &units, MissingSign::Minus).unwrap();
        assert_eq!(main_effect_pvalue(&s, &units, &z, 0), 1.0);
        assert!(matches!(select_split_variable(&s, &units, &z), Err(Error::NoSplit)));
    }

    #[test]
    fn binary_by_constant_interaction_is_uninformative() {
        let s = sample_with(
            vec![
                Predictor::categorical("g", (0..8).map(|i| Some(i % 2)).collect(), vec!["a".into(), "b".into()]),
                Predictor::numeric("c", vec![Some(2.0); 8]),
            ],
            (0..8).map(|i| (i % 2) as f64).collect(),
        );
        let units = s.all_units();
        let z = sign_vectors_multi(s.multi_response().unwrap(), &units, MissingSign::Minus).unwrap();
        assert_eq!(interaction_pvalue(&s, &units, &z, 0, 1), 1.0);
    }
}
