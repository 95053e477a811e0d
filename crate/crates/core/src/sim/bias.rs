use std::fmt::Write;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::Serialize;

use super::trial_rng;
use crate::baseline::cart_best_split;
use crate::error::{Error, Result};
use crate::par;
use crate::sample::{MultiResponse, Predictor, PredictorValues, Response, Sample};
use crate::selector::{select_split_variable, sign_vectors_multi, MissingSign};
use crate::splitter::ResponseScale;
use crate::stats::chisq_pvalue;
use crate::tree::{split_selected, Method};

#[derive(Clone, Debug, PartialEq)]
pub struct BiasOptions {
    pub trials: usize,
    pub seed: u64,
    pub method: Method,
    /// Add one independent uniform categorical predictor `C_k` per entry.
    pub augment: Vec<usize>,
    /// Make this fraction of one predictor's values missing at random.
    pub missing: Option<(usize, f64)>,
    pub normalize: bool,
    pub missing_y_sign: MissingSign,
}

impl Default for BiasOptions {
    fn default() -> Self {
        Self {
            trials: 2000,
            seed: 1,
            method: Method::Guide,
            augment: Vec::new(),
            missing: None,
            normalize: true,
            missing_y_sign: MissingSign::Minus,
        }
    }
}

/// Root-node selection counts per predictor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasReport {
    pub names: Vec<String>,
    pub counts: Vec<usize>,
    /// Trials in which no split was possible.
    pub no_split: usize,
    pub trials: usize,
}

impl BiasReport {
    pub fn frequency(&self, j: usize) -> f64 {
        self.counts[j] as f64 / self.trials as f64
    }

    /// Binomial standard error of the observed frequency.
    pub fn se(&self, j: usize) -> f64 {
        let f = self.frequency(j);
        (f * (1.0 - f) / self.trials as f64).sqrt()
    }

    /// Selection probability of an unbiased method.
    pub fn null_probability(&self) -> f64 {
        1.0 / self.names.len() as f64
    }

    /// Binomial standard error under the unbiased null.
    pub fn null_se(&self) -> f64 {
        let p = self.null_probability();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Goodness-of-fit p-value of the counts against equal probabilities.
    pub fn uniformity_pvalue(&self) -> f64 {
        let total: usize = self.counts.iter().sum();
        if total == 0 || self.counts.len() < 2 {
            return 1.0;
        }
        let e = total as f64 / self.counts.len() as f64;
        let stat = self.counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        chisq_pvalue(stat, self.counts.len() - 1)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Long format: `variable,count,frequency,se`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variable,count,frequency,se\n");
        for (j, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "{name},{},{},{}", self.counts[j], self.frequency(j), self.se(j));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self.names.iter().map(String::len).max().unwrap_or(8).max(8);
        let mut out = format!(
            "{:<width$}  {:>6}  {:>9}  {:>7}\n",
            "variable", "count", "frequency", "se"
        );
        for (j, name) in self.names.iter().enumerate() {
            let _ = writeln!(
                out,
                "{name:<width$}  {:>6}  {:>9.4}  {:>7.4}",
                self.counts[j],
                self.frequency(j),
                self.se(j)
            );
        }
        let _ = writeln!(
            out,
            "trials {}, no split {}, unbiased level {:.4} (se {:.4})",
            self.trials,
            self.no_split,
            self.null_probability(),
            self.null_se()
        );
        out
    }
}

/// Variable chosen to split the root node of `sample`, or `None` when no
/// split is possible.
pub fn root_choice(sample: &Sample, method: Method, normalize: bool, missing_y_sign: MissingSign) -> Option<usize> {
    let m = sample.multi_response()?;
    match method {
        Method::Guide => {
            let units = sample.all_units();
            let z = sign_vectors_multi(m, &units, missing_y_sign).ok()?;
            let selection = select_split_variable(sample, &units, &z).ok()?;
            let scale = ResponseScale::from_root(sample, &units, normalize);
            split_selected(sample, &units, &z, &scale, selection.kind).map(|(rule, _)| rule.var())
        }
        Method::Baseline => {
            let units: Vec<u32> = sample
                .all_units()
                .into_iter()
                .filter(|&i| m.values.iter().all(|c| c[i as usize].is_some()))
                .collect();
            let scale = ResponseScale::from_root(sample, &units, normalize);
            cart_best_split(sample, &units, &scale).ok().map(|(rule, _)| rule.var())
        }
    }
}

/// Bootstrap the rows, permute every predictor independently (destroying
/// any association with the responses), optionally add `C_k` columns and
/// missing values, and tally the variable selected at the root.
pub fn bias_experiment(population: &Sample, opts: &BiasOptions) -> Result<BiasReport> {
    let Response::Multi(resp) = &population.response else {
        return Err(Error::InvalidData(
            "bias experiments need a multiresponse sample".into(),
        ));
    };
    if opts.trials == 0 {
        return Err(Error::Config("at least one trial is needed".into()));
    }
    if let Some((var, frac)) = opts.missing {
        if var >= population.predictors.len() + opts.augment.len() || !(0.0..=1.0).contains(&frac) {
            return Err(Error::Config("invalid missing-value injection".into()));
        }
    }
    if opts.augment.iter().any(|&k| k < 2) {
        return Err(Error::Config("C_k needs at least two categories".into()));
    }
    let mut names: Vec<String> = population.predictors.iter().map(|p| p.name.clone()).collect();
    names.extend(opts.augment.iter().map(|k| format!("C{k}")));

    let choices = par::map_range(opts.trials, |t| -> Result<Option<usize>> {
        let s = trial_sample(population, resp, opts, t as u64)?;
        Ok(root_choice(&s, opts.method, opts.normalize, opts.missing_y_sign))
    });
    let mut counts = vec![0; names.len()];
    let mut no_split = 0;
    for c in choices {
        match c? {
            Some(j) => counts[j] += 1,
            None => no_split += 1,
        }
    }
    Ok(BiasReport {
        names,
        counts,
        no_split,
        trials: opts.trials,
    })
}

fn trial_sample(population: &Sample, resp: &MultiResponse, opts: &BiasOptions, trial: u64) -> Result<Sample> {
    let mut rng = trial_rng(opts.seed, trial);
    let n = population.n_units();
    let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut predictors: Vec<Predictor> = population
        .predictors
        .iter()
        .map(|p| {
            let values = match &p.values {
                PredictorValues::Numeric(v) => {
                    let mut col: Vec<Option<f64>> = rows.iter().map(|&r| v[r]).collect();
                    col.shuffle(&mut rng);
                    PredictorValues::Numeric(col)
                }
                PredictorValues::Categorical { codes, levels } => {
                    let mut col: Vec<Option<u32>> = rows.iter().map(|&r| codes[r]).collect();
                    col.shuffle(&mut rng);
                    PredictorValues::Categorical {
                        codes: col,
                        levels: levels.clone(),
                    }
                }
            };
            Predictor {
                name: p.name.clone(),
                values,
            }
        })
        .collect();
    for &k in &opts.augment {
        let codes = (0..n).map(|_| Some(rng.random_range(0..k as u32))).collect();
        let levels = (0..k).map(|c| format!("c{c}")).collect();
        predictors.push(Predictor::categorical(format!("C{k}"), codes, levels));
    }
    if let Some((var, frac)) = opts.missing {
        let m = (frac * n as f64).round() as usize;
        let hit = index::sample(&mut rng, n, m.min(n));
        match &mut predictors[var].values {
            PredictorValues::Numeric(v) => hit.iter().for_each(|i| v[i] = None),
            PredictorValues::Categorical { codes, .. } => hit.iter().for_each(|i| codes[i] = None),
        }
    }
    let values = resp
        .values
        .iter()
        .map(|col| rows.iter().map(|&r| col[r]).collect())
        .collect();
    Sample::multi(predictors, resp.names.clone(), values)
}
