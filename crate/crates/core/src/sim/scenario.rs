use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::dataset::{Column, ColumnRole, ColumnValues, Dataset, Layout};
use crate::error::{Error, Result};
use crate::sample::Sample;

/// Correlation between paired predictors in the correlated-normal design.
pub const CORRELATION: f64 = 0.5;
/// Noise standard deviation of the multiresponse scenarios (variance 0.25).
pub const NOISE_SD: f64 = 0.5;
/// Time points `u = 1..=LONG_TIMES` of the longitudinal models.
pub const LONG_TIMES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    IndepUniform1,
    IndepUniform2,
    IndepUniform3,
    CorrNormal1,
    CorrNormal2,
    CorrNormal3,
    LongLinear,
    LongStep,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 8] = [
        Self::IndepUniform1,
        Self::IndepUniform2,
        Self::IndepUniform3,
        Self::CorrNormal1,
        Self::CorrNormal2,
        Self::CorrNormal3,
        Self::LongLinear,
        Self::LongStep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::IndepUniform1 => "indep_uniform_1",
            Self::IndepUniform2 => "indep_uniform_2",
            Self::IndepUniform3 => "indep_uniform_3",
            Self::CorrNormal1 => "corr_normal_1",
            Self::CorrNormal2 => "corr_normal_2",
            Self::CorrNormal3 => "corr_normal_3",
            Self::LongLinear => "long_linear",
            Self::LongStep => "long_step",
        }
    }

    pub fn is_longitudinal(self) -> bool {
        matches!(self, Self::LongLinear | Self::LongStep)
    }

    pub fn n_predictors(self) -> usize {
        if self.is_longitudinal() {
            5
        } else {
            7
        }
    }

    fn correlated(self) -> bool {
        matches!(self, Self::CorrNormal1 | Self::CorrNormal2 | Self::CorrNormal3)
    }

    /// True conditional mean: three responses, or the trajectory value at
    /// time `u` for the longitudinal kinds.
    pub fn mean(self, x: &[f64], u: Option<f64>) -> Vec<f64> {
        match self {
            Self::IndepUniform1 | Self::CorrNormal1 => vec![x[0], x[1], x[2]],
            Self::IndepUniform2 | Self::CorrNormal2 => vec![x[0] + x[1]; 3],
            Self::IndepUniform3 | Self::CorrNormal3 => {
                if x[0] * x[1] > 0.0 {
                    vec![1.0, -1.0, 0.0]
                } else {
                    vec![0.0, 0.0, 1.0]
                }
            }
            Self::LongLinear => {
                let u = u.expect("longitudinal mean needs a time");
                vec![1.0 + x[0] + x[1] + 2.0 * x[0] * x[1] + 0.5 * u]
            }
            Self::LongStep => {
                let u = u.expect("longitudinal mean needs a time");
                vec![if x[0] <= 0.0 { 2.5 } else { 0.0 } + 0.5 * u]
            }
        }
    }

    /// One predictor vector drawn from the scenario's law.
    pub fn draw_x(self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        if self.is_longitudinal() {
            let d = Uniform::new(-1.0, 1.0).expect("valid range");
            return (0..5).map(|_| d.sample(rng)).collect();
        }
        let unif = Uniform::new(-0.5, 0.5).expect("valid range");
        if !self.correlated() {
            return (0..7).map(|_| unif.sample(rng)).collect();
        }
        // (X1, X3, X4) and (X2, X5, X6) are equicorrelated blocks:
        // X = √r·W + √(1−r)·E gives unit variances and correlation r.
        let (a, b) = (CORRELATION.sqrt(), (1.0 - CORRELATION).sqrt());
        let block = |rng: &mut ChaCha8Rng| {
            let w: f64 = StandardNormal.sample(rng);
            let mut v = [0.0; 3];
            for x in &mut v {
                let e: f64 = StandardNormal.sample(rng);
                *x = a * w + b * e;
            }
            v
        };
        let p = block(rng);
        let q = block(rng);
        vec![p[0], q[0], p[1], p[2], q[1], q[2], unif.sample(rng)]
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Rows, or subjects for the longitudinal kinds.
    pub n: usize,
    /// Multiplier on the noise (and random effects); 0 gives noiseless data.
    pub noise_scale: f64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, n: usize) -> Self {
        Self {
            kind,
            n,
            noise_scale: 1.0,
        }
    }
}

/// Generated training data with its law.
#[derive(Clone, Debug)]
pub struct Generated {
    pub dataset: Dataset,
    pub sample: Sample,
    pub kind: ScenarioKind,
}

impl Generated {
    pub fn truth(&self, x: &[f64], u: Option<f64>) -> Vec<f64> {
        self.kind.mean(x, u)
    }
}

pub fn gen_scenario(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<Generated> {
    let kind = spec.kind;
    let p = kind.n_predictors();
    let xs: Vec<Vec<f64>> = (0..spec.n).map(|_| kind.draw_x(rng)).collect();
    let numeric = |name: String, role: ColumnRole, v: Vec<f64>| Column {
        name,
        role,
        missing: vec![false; v.len()],
        values: ColumnValues::Numeric(v),
    };
    let mut columns = Vec::new();
    if kind.is_longitudinal() {
        let b0 = Normal::new(0.0, 0.5 * spec.noise_scale).map_err(|e| Error::Config(e.to_string()))?;
        let b1 = Normal::new(0.0, 0.25 * spec.noise_scale).map_err(|e| Error::Config(e.to_string()))?;
        let eps = Normal::new(0.0, spec.noise_scale).map_err(|e| Error::Config(e.to_string()))?;
        let rows = spec.n * LONG_TIMES;
        let (mut id, mut time, mut y) = (
            Vec::with_capacity(rows),
            Vec::with_capacity(rows),
            Vec::with_capacity(rows),
        );
        for (i, x) in xs.iter().enumerate() {
            let (r0, r1) = (b0.sample(rng), b1.sample(rng));
            for t in 1..=LONG_TIMES {
                let u = t as f64;
                id.push(i as u32);
                time.push(u);
                y.push(kind.mean(x, Some(u))[0] + r0 + r1 * u + eps.sample(rng));
            }
        }
        columns.push(Column {
            name: "id".into(),
            role: ColumnRole::SubjectId,
            missing: vec![false; rows],
            values: ColumnValues::Categorical {
                codes: id,
                levels: (0..spec.n).map(|i| format!("s{i}")).collect(),
            },
        });
        columns.push(numeric("u".into(), ColumnRole::Time, time));
        for j in 0..p {
            let v = xs.iter().flat_map(|x| std::iter::repeat_n(x[j], LONG_TIMES)).collect();
            columns.push(numeric(format!("X{}", j + 1), ColumnRole::NumericPredictor, v));
        }
        columns.push(numeric("y".into(), ColumnRole::Response, y));
    } else {
        let eps = Normal::new(0.0, NOISE_SD * spec.noise_scale).map_err(|e| Error::Config(e.to_string()))?;
        let ys: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| kind.mean(x, None).into_iter().map(|m| m + eps.sample(rng)).collect())
            .collect();
        for j in 0..p {
            columns.push(numeric(
                format!("X{}", j + 1),
                ColumnRole::NumericPredictor,
                xs.iter().map(|x| x[j]).collect(),
            ));
        }
        for k in 0..3 {
            columns.push(numeric(
                format!("Y{}", k + 1),
                ColumnRole::Response,
                ys.iter().map(|y| y[k]).collect(),
            ));
        }
    }
    let dataset = Dataset::from_columns(columns)?;
    debug_assert_eq!(
        dataset.layout,
        if kind.is_longitudinal() {
            Layout::Longitudinal
        } else {
            Layout::Multiresponse
        }
    );
    let sample = Sample::from_dataset(&dataset)?;
    Ok(Generated { dataset, sample, kind })
}
