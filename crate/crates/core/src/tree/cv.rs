use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{grow_units, prune_sequence, GrowConfig, Method, PruneSequence, Tree};
use crate::error::{Error, Result};
use crate::par;
use crate::sample::{Response, Sample};
use crate::splitter::ResponseScale;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CvOptions {
    pub folds: usize,
    /// Pick the smallest subtree within this many standard errors of the
    /// minimum CV error.
    pub se_rule: f64,
    pub seed: u64,
    pub method: Method,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: 10,
            se_rule: 0.0,
            seed: 20_090_101,
            method: Method::Guide,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CvResult {
    /// Unpruned tree on all units.
    pub full: Tree,
    /// Weakest-link sequence of `full`, with CV errors filled in.
    pub sequence: PruneSequence,
    pub chosen: usize,
    /// `full` pruned to the chosen subtree.
    pub tree: Tree,
}

/// Grows on all units, then picks a subtree by V-fold cross-validation.
pub fn cross_validate(sample: &Sample, config: &GrowConfig, opts: &CvOptions) -> Result<CvResult> {
    let units = usable_units(sample, opts.method);
    let scale = ResponseScale::from_root(sample, &units, config.normalize);
    cross_validate_units(sample, &units, config, opts, &scale)
}

fn usable_units(sample: &Sample, method: Method) -> Vec<u32> {
    match (method, &sample.response) {
        (Method::Baseline, Response::Multi(m)) => sample
            .all_units()
            .into_iter()
            .filter(|&i| m.values.iter().all(|c| c[i as usize].is_some()))
            .collect(),
        _ => sample.all_units(),
    }
}

pub(crate) fn cross_validate_units(
    sample: &Sample,
    units: &[u32],
    config: &GrowConfig,
    opts: &CvOptions,
    scale: &ResponseScale,
) -> Result<CvResult> {
    if opts.folds < 2 {
        return Err(Error::Config("at least two folds are needed".into()));
    }
    if !(opts.se_rule >= 0.0) {
        return Err(Error::Config("se_rule must be nonnegative".into()));
    }
    let full = grow_units(sample, units, config, opts.method, Some(scale))?;
    let mut sequence = prune_sequence(&full);
    let k = sequence.steps.len();
    // geometric midpoints of consecutive critical alphas
    let betas: Vec<f64> = (0..k)
        .map(|i| {
            if i + 1 < k {
                (sequence.steps[i].alpha * sequence.steps[i + 1].alpha).sqrt()
            } else {
                f64::INFINITY
            }
        })
        .collect();

    let v = opts.folds.min(units.len());
    let mut shuffled = units.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));
    let fold_errors = par::map_range(v, |f| -> Result<Vec<Vec<f64>>> {
        let (test, train): (Vec<(usize, u32)>, Vec<(usize, u32)>) =
            shuffled.iter().copied().enumerate().partition(|(pos, _)| pos % v == f);
        let train: Vec<u32> = train.into_iter().map(|p| p.1).collect();
        check_fold(sample, &train)?;
        let tree = grow_units(sample, &train, config, opts.method, Some(scale))?;
        let seq = prune_sequence(&tree);
        test.iter()
            .map(|&(_, unit)| {
                betas
                    .iter()
                    .map(|&b| tree.unit_error(sample, unit, |id| seq.is_terminal(id, b)))
                    .collect()
            })
            .collect()
    });
    let mut errors: Vec<Vec<f64>> = Vec::with_capacity(units.len());
    for fold in fold_errors {
        errors.extend(fold?);
    }
    let n = errors.len() as f64;
    for (i, step) in sequence.steps.iter_mut().enumerate() {
        let mean = errors.iter().map(|e| e[i]).sum::<f64>() / n;
        let var = errors.iter().map(|e| (e[i] - mean).powi(2)).sum::<f64>() / n;
        step.cv_error = mean;
        step.cv_se = (var / n).sqrt();
    }
    let chosen = choose(&sequence, opts.se_rule);
    let tree = sequence.subtree(&full, chosen);
    Ok(CvResult {
        full,
        sequence,
        chosen,
        tree,
    })
}

/// Largest step (smallest subtree) whose CV error is within `se_rule`
/// standard errors of the minimum.
fn choose(seq: &PruneSequence, se_rule: f64) -> usize {
    let (best, min) = seq
        .steps
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, s)| {
            if s.cv_error < bv {
                (i, s.cv_error)
            } else {
                (bi, bv)
            }
        });
    let bound = min + se_rule * seq.steps[best].cv_se;
    let slack = 1e-12 * bound.abs();
    (0..seq.steps.len())
        .rev()
        .find(|&i| seq.steps[i].cv_error <= bound + slack)
        .unwrap_or(best)
}

fn check_fold(sample: &Sample, train: &[u32]) -> Result<()> {
    if let Response::Multi(m) = &sample.response {
        for (k, col) in m.values.iter().enumerate() {
            if train.iter().all(|&i| col[i as usize].is_none()) {
                return Err(Error::InvalidData(format!(
                    "response `{}` has no observed values in a training fold",
                    m.names[k]
                )));
            }
        }
    }
    Ok(())
}

/// Leave-one-out estimate of prediction error of the CV-pruned tree: each
/// unit is predicted by a tree grown and pruned without it. Errors are
/// weighted by the full-sample response scale, so with `normalize` the
/// result is the sum over responses of normalized mean squared errors.
pub fn loo_prediction_error(sample: &Sample, config: &GrowConfig, opts: &CvOptions) -> Result<f64> {
    let units = usable_units(sample, opts.method);
    let scale = ResponseScale::from_root(sample, &units, config.normalize);
    let errs = par::map_range(units.len(), |i| -> Result<f64> {
        let train: Vec<u32> = units.iter().copied().filter(|&u| u != units[i]).collect();
        let o = CvOptions {
            seed: opts.seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            ..*opts
        };
        let fit = cross_validate_units(sample, &train, config, &o, &scale)?;
        fit.tree.unit_error(sample, units[i], |_| false)
    });
    let total: f64 = errs.into_iter().sum::<Result<f64>>()?;
    Ok(total / units.len() as f64)
}
