//! Exhaustive-search multivariate regression tree in the style of CART and
//! MVPART, used as the comparator in every experiment.
//!
//! Every split on every variable is scored by the reduction in summed
//! (optionally normalized) squared error, using only the units observed in
//! that variable. Trees are grown with [`crate::tree::grow_units`] and
//! [`crate::tree::Method::Baseline`], which drops units missing any response
//! up front and units missing the split variable at each node.

use crate::error::{Error, Result};
use crate::par;
use crate::sample::{PredictorKind, PredictorValues, Sample};
use crate::splitter::{CategoryOrder, ImpurityReport, ResponseScale, SplitRule, SplitScorer};
use crate::tree::{grow_units, GrowConfig, Method, Tree};

/// Categorical variables with at most this many observed categories are
/// searched over all subsets.
pub const CATEGORY_CAP: usize = 15;

/// Best split over all predictors; ties go to the first variable.
pub fn cart_best_split(sample: &Sample, units: &[u32], scale: &ResponseScale) -> Result<(SplitRule, ImpurityReport)> {
    if units.len() < 2 {
        return Err(Error::NoSplit);
    }
    let per_var = par::map_range(sample.predictors.len(), |var| {
        best_for_variable(sample, units, var, scale)
    });
    per_var
        .into_iter()
        .flatten()
        .fold(None, |best: Option<(SplitRule, ImpurityReport)>, cand| match best {
            Some(b) if b.1.gain >= cand.1.gain => Some(b),
            _ => Some(cand),
        })
        .ok_or(Error::NoSplit)
}

/// Best split on one variable among the units observed in it.
pub fn best_for_variable(
    sample: &Sample,
    units: &[u32],
    var: usize,
    scale: &ResponseScale,
) -> Option<(SplitRule, ImpurityReport)> {
    let p = &sample.predictors[var];
    let observed: Vec<u32> = units.iter().copied().filter(|&i| !p.is_missing(i as usize)).collect();
    if observed.len() < 2 {
        return None;
    }
    let scorer = SplitScorer::new(sample, &observed, scale);
    match p.kind() {
        PredictorKind::Numeric => {
            let (rule, report) = scorer.best_numeric(var).ok()?;
            let SplitRule::Numeric { threshold, .. } = rule else {
                unreachable!()
            };
            let PredictorValues::Numeric(x) = &p.values else {
                unreachable!()
            };
            let left = observed
                .iter()
                .filter(|&&i| x[i as usize].is_some_and(|v| v <= threshold))
                .count();
            Some((
                SplitRule::Numeric {
                    var,
                    threshold,
                    missing_goes_left: 2 * left >= observed.len(),
                    all_missing_split: false,
                },
                report,
            ))
        }
        PredictorKind::Categorical => scorer.categorical_search(var, CATEGORY_CAP, CategoryOrder::Means).ok(),
    }
}

/// Full (unpruned) baseline tree.
pub fn grow_baseline(sample: &Sample, config: &GrowConfig) -> Result<Tree> {
    grow_units(sample, &sample.all_units(), config, Method::Baseline, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Predictor;
    use crate::tree::grow;

    fn complete(n: usize) -> Sample {
        let x: Vec<Option<f64>> = (0..n).map(|i| Some(((i * 37) % n) as f64)).collect();
        let y: Vec<Option<f64>> = x
            .iter()
            .map(|v| Some(if v.unwrap() < n as f64 / 3.0 { 1.0 } else { 4.0 } + (v.unwrap() * 0.01).sin()))
            .collect();
        Sample::multi(vec![Predictor::numeric("x", x)], vec!["y".into()], vec![y]).unwrap()
    }

    #[test]
    fn single_variable_matches_guide() {
        let s = complete(90);
        let cfg = GrowConfig::multiresponse();
        let a = grow(&s, &cfg).unwrap();
        let b = grow_baseline(&s, &cfg).unwrap();
        let leaves = |t: &Tree| {
            let mut v: Vec<Vec<u32>> = t
                .leaves()
                .map(|n| {
                    let mut u = n.units.clone();
                    u.sort_unstable();
                    u
                })
                .collect();
            v.sort();
            v
        };
        assert_eq!(leaves(&a), leaves(&b));
    }

    #[test]
    fn strong_variable_beats_many_valued_noise() {
        let n = 60;
        let strong: Vec<Option<f64>> = (0..n).map(|i| Some((i % 2) as f64)).collect();
        let noise: Vec<Option<f64>> = (0..n).map(|i| Some(((i * 13) % 59) as f64)).collect();
        let y: Vec<Option<f64>> = (0..n)
            .map(|i| Some(10.0 * (i % 2) as f64 + ((i * 7) % 5) as f64 * 0.1))
            .collect();
        let s = Sample::multi(
            vec![Predictor::numeric("noise", noise), Predictor::numeric("strong", strong)],
            vec!["y".into()],
            vec![y],
        )
        .unwrap();
        let (rule, _) = cart_best_split(&s, &s.all_units(), &ResponseScale::unit(1)).unwrap();
        assert_eq!(rule.var(), 1);
    }

    #[test]
    fn incomplete_responses_are_dropped() {
        let n = 40;
        let x: Vec<Option<f64>> = (0..n).map(|i| Some(i as f64)).collect();
        let y1: Vec<Option<f64>> = (0..n).map(|i| Some(i as f64)).collect();
        let y2: Vec<Option<f64>> = (0..n).map(|i| (i % 4 != 0).then_some(i as f64)).collect();
        let s = Sample::multi(
            vec![Predictor::numeric("x", x)],
            vec!["a".into(), "b".into()],
            vec![y1, y2],
        )
        .unwrap();
        let t = grow_baseline(&s, &GrowConfig::multiresponse()).unwrap();
        assert_eq!(t.root().n, 30);
    }

    #[test]
    fn missing_split_values_are_dropped_at_the_node() {
        let n = 40;
        let x: Vec<Option<f64>> = (0..n).map(|i| (i % 5 != 0).then_some(i as f64)).collect();
        let y: Vec<Option<f64>> = (0..n).map(|i| Some(if i < 20 { 0.0 } else { 5.0 })).collect();
        let s = Sample::multi(vec![Predictor::numeric("x", x)], vec!["y".into()], vec![y]).unwrap();
        let t = grow_baseline(&s, &GrowConfig::multiresponse()).unwrap();
        let sp = t.root().split.as_ref().unwrap();
        assert_eq!(t.nodes[sp.left].n + t.nodes[sp.right].n, 32);
    }

    #[test]
    fn no_split_on_tiny_or_constant_nodes() {
        let s = Sample::multi(
            vec![Predictor::numeric("x", vec![Some(1.0), Some(1.0)])],
            vec!["y".into()],
            vec![vec![Some(0.0), Some(1.0)]],
        )
        .unwrap();
        assert!(cart_best_split(&s, &[0, 1], &ResponseScale::unit(1)).is_err());
        assert!(cart_best_split(&s, &[0], &ResponseScale::unit(1)).is_err());
    }
}
