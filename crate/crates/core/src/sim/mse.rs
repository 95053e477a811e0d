use std::fmt::{self, Write};
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use super::scenario::{gen_scenario, ScenarioKind, ScenarioSpec, LONG_TIMES};
use super::trial_rng;
use crate::dataset::Cell;
use crate::error::{Error, Result};
use crate::par;
use crate::tree::{cross_validate, CvOptions, GrowConfig, Method, Tree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MseMethod {
    /// One tree per response.
    UnivariateGuide,
    MultivariateGuide,
    Baseline,
}

impl MseMethod {
    pub const ALL: [MseMethod; 3] = [Self::UnivariateGuide, Self::MultivariateGuide, Self::Baseline];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::UnivariateGuide => "univariate_guide",
            Self::MultivariateGuide => "multivariate_guide",
            Self::Baseline => "baseline",
        }
    }
}

impl fmt::Display for MseMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MseMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Where fitted means are compared with the truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestDesign {
    /// Fresh draws from the predictor law in each trial.
    Random(usize),
    /// Full grid with this many midpoint levels per predictor axis, crossed
    /// with every time point for longitudinal kinds.
    Grid(usize),
}

impl TestDesign {
    pub fn default_for(kind: ScenarioKind) -> Self {
        if kind.is_longitudinal() {
            Self::Grid(6)
        } else {
            Self::Random(100)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MseOptions {
    pub trials: usize,
    pub seed: u64,
    /// Training rows (or subjects).
    pub n: usize,
    pub methods: Vec<MseMethod>,
    pub test: Option<TestDesign>,
    pub folds: usize,
    pub se_rule: f64,
    pub normalize: bool,
    pub noise_scale: f64,
}

impl Default for MseOptions {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 1,
            n: 100,
            methods: MseMethod::ALL.to_vec(),
            test: None,
            folds: 10,
            se_rule: 0.0,
            normalize: false,
            noise_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: MseMethod,
    pub mean_mse: f64,
    pub se: f64,
    pub mean_leaves: f64,
    pub per_trial: Vec<f64>,
    pub leaves: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MseReport {
    pub kind: ScenarioKind,
    pub n: usize,
    pub trials: usize,
    pub methods: Vec<MethodSummary>,
}

impl MseReport {
    pub fn get(&self, m: MseMethod) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,method,mse,se,leaves\n");
        for s in &self.methods {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.kind, s.method, s.mean_mse, s.se, s.mean_leaves
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} (n = {}, {} trials)\n", self.kind, self.n, self.trials);
        let _ = writeln!(
            out,
            "{:<20}  {:>10}  {:>8}  {:>7}",
            "method", "MSE x 100", "se", "leaves"
        );
        for s in &self.methods {
            let _ = writeln!(
                out,
                "{:<20}  {:>10.2}  {:>8.2}  {:>7.2}",
                s.method.as_str(),
                100.0 * s.mean_mse,
                100.0 * s.se,
                s.mean_leaves
            );
        }
        out
    }
}

/// Repeatedly generate training data, fit CV-pruned trees with each method
/// and score them against the true means.
pub fn mse_experiment(kind: ScenarioKind, opts: &MseOptions) -> Result<MseReport> {
    if opts.trials < 2 {
        return Err(Error::Config("at least two trials are needed".into()));
    }
    if opts.methods.is_empty() {
        return Err(Error::Config("no methods requested".into()));
    }
    if kind.is_longitudinal() && opts.methods.iter().any(|&m| m != MseMethod::MultivariateGuide) {
        return Err(Error::Config(
            "longitudinal scenarios support only the multivariate_guide method".into(),
        ));
    }
    let design = opts.test.unwrap_or(TestDesign::default_for(kind));
    let grid = match design {
        TestDesign::Grid(levels) => Some(grid_points(kind.n_predictors(), levels)),
        TestDesign::Random(_) => None,
    };
    let results = par::map_range(opts.trials, |t| {
        run_trial(kind, opts, design, grid.as_deref(), t as u64)
    });
    let mut per_method: Vec<(Vec<f64>, Vec<usize>)> = vec![(Vec::new(), Vec::new()); opts.methods.len()];
    for r in results {
        for (slot, (mse, leaves)) in per_method.iter_mut().zip(r?) {
            slot.0.push(mse);
            slot.1.push(leaves);
        }
    }
    let methods = opts
        .methods
        .iter()
        .zip(per_method)
        .map(|(&method, (per_trial, leaves))| {
            let n = per_trial.len() as f64;
            let mean = per_trial.iter().sum::<f64>() / n;
            let var = per_trial.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            MethodSummary {
                method,
                mean_mse: mean,
                se: (var / n).sqrt(),
                mean_leaves: leaves.iter().sum::<usize>() as f64 / n,
                per_trial,
                leaves,
            }
        })
        .collect();
    Ok(MseReport {
        kind,
        n: opts.n,
        trials: opts.trials,
        methods,
    })
}

/// Midpoints of `levels` equal cells of (−1, 1) per axis, crossed over `p` axes.
fn grid_points(p: usize, levels: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..levels).map(|i| -1.0 + (2 * i + 1) as f64 / levels as f64).collect();
    let mut points = vec![Vec::new()];
    for _ in 0..p {
        points = points
            .into_iter()
            .flat_map(|pt| {
                axis.iter().map(move |&a| {
                    let mut q = pt.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    points
}

fn run_trial(
    kind: ScenarioKind,
    opts: &MseOptions,
    design: TestDesign,
    grid: Option<&[Vec<f64>]>,
    trial: u64,
) -> Result<Vec<(f64, usize)>> {
    let mut rng = trial_rng(opts.seed, trial);
    let spec = ScenarioSpec {
        kind,
        n: opts.n,
        noise_scale: opts.noise_scale,
    };
    let g = gen_scenario(&spec, &mut rng)?;
    let cv_seed: u64 = rng.random();
    let fresh: Vec<Vec<f64>>;
    let test: &[Vec<f64>] = match (design, grid) {
        (TestDesign::Grid(_), Some(points)) => points,
        (TestDesign::Random(m), _) => {
            fresh = (0..m).map(|_| kind.draw_x(&mut rng)).collect();
            &fresh
        }
        _ => unreachable!("grid is built for grid designs"),
    };
    let config = GrowConfig {
        normalize: opts.normalize,
        ..GrowConfig::for_layout(g.sample.layout())
    };
    let cv = |method: Method, sample: &crate::Sample| -> Result<Tree> {
        let o = CvOptions {
            folds: opts.folds,
            se_rule: opts.se_rule,
            seed: cv_seed,
            method,
        };
        Ok(cross_validate(sample, &config, &o)?.tree)
    };
    opts.methods
        .iter()
        .map(|&m| -> Result<(f64, usize)> {
            if kind.is_longitudinal() {
                let tree = cv(Method::Guide, &g.sample)?;
                return Ok((long_mse(&tree, kind, test)?, tree.n_leaves()));
            }
            let trees: Vec<Tree> = match m {
                MseMethod::UnivariateGuide => (0..3)
                    .map(|k| cv(Method::Guide, &g.sample.single_response(k).expect("multiresponse")))
                    .collect::<Result<_>>()?,
                MseMethod::MultivariateGuide => vec![cv(Method::Guide, &g.sample)?],
                MseMethod::Baseline => vec![cv(Method::Baseline, &g.sample)?],
            };
            let mut sse = 0.0;
            for x in test {
                let truth = kind.mean(x, None);
                let cells: Vec<Cell> = x.iter().map(|&v| Cell::Number(v)).collect();
                let mut pred = Vec::with_capacity(3);
                for t in &trees {
                    pred.extend_from_slice(t.predict(&cells, None)?.as_vector().expect("mean summary"));
                }
                sse += pred.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            }
            Ok((sse / test.len() as f64, trees.iter().map(Tree::n_leaves).sum()))
        })
        .collect()
}

/// Mean squared error over grid points and time points `1..=LONG_TIMES`.
fn long_mse(tree: &Tree, kind: ScenarioKind, test: &[Vec<f64>]) -> Result<f64> {
    let mut sse = 0.0;
    for x in test {
        let cells: Vec<Cell> = x.iter().map(|&v| Cell::Number(v)).collect();
        let leaf = tree.leaf_of(&cells)?;
        for t in 1..=LONG_TIMES {
            let u = t as f64;
            let f = tree.node_prediction(leaf, Some(u))?.as_scalar().expect("curve summary");
            sse += (f - kind.mean(x, Some(u))[0]).powi(2);
        }
    }
    Ok(sse / (test.len() * LONG_TIMES) as f64)
}
