//! Unit-level view of a dataset used for fitting.
//!
//! A unit is a row in the multiresponse layout and a subject in the
//! longitudinal layout. Predictors are stored per unit; responses are either
//! a `d`-column matrix with missing entries or one trajectory per unit.

use serde::{Deserialize, Serialize};

use crate::dataset::{group_by_subject, Cell, ColumnRole, ColumnValues, Dataset, Layout, Obs, SubjectSeries};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum PredictorValues {
    Numeric(Vec<Option<f64>>),
    Categorical {
        codes: Vec<Option<u32>>,
        levels: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Predictor {
    pub name: String,
    pub values: PredictorValues,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    Numeric,
    Categorical,
}

impl Predictor {
    pub fn numeric(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Self {
            name: name.into(),
            values: PredictorValues::Numeric(values),
        }
    }

    pub fn categorical(name: impl Into<String>, codes: Vec<Option<u32>>, levels: Vec<String>) -> Self {
        Self {
            name: name.into(),
            values: PredictorValues::Categorical { codes, levels },
        }
    }

    pub fn kind(&self) -> PredictorKind {
        match self.values {
            PredictorValues::Numeric(_) => PredictorKind::Numeric,
            PredictorValues::Categorical { .. } => PredictorKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match &self.values {
            PredictorValues::Numeric(v) => v.len(),
            PredictorValues::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self, unit: usize) -> Cell {
        match &self.values {
            PredictorValues::Numeric(v) => v[unit].map_or(Cell::Missing, Cell::Number),
            PredictorValues::Categorical { codes, .. } => codes[unit].map_or(Cell::Missing, Cell::Category),
        }
    }

    pub fn is_missing(&self, unit: usize) -> bool {
        match &self.values {
            PredictorValues::Numeric(v) => v[unit].is_none(),
            PredictorValues::Categorical { codes, .. } => codes[unit].is_none(),
        }
    }

    pub fn levels(&self) -> &[String] {
        match &self.values {
            PredictorValues::Categorical { levels, .. } => levels,
            PredictorValues::Numeric(_) => &[],
        }
    }

    /// True when the units show at least two distinct values, counting
    /// "missing" as a value.
    pub fn varies(&self, units: &[u32]) -> bool {
        let mut first: Option<Cell> = None;
        for &i in units {
            let c = self.cell(i as usize);
            match first {
                None => first = Some(c),
                Some(f) if f != c => return true,
                _ => {}
            }
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiResponse {
    pub names: Vec<String>,
    /// `values[k][unit]`
    pub values: Vec<Vec<Option<f64>>>,
}

impl MultiResponse {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LongResponse {
    pub name: String,
    /// One time-sorted trajectory per unit.
    pub series: Vec<Vec<Obs>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Response {
    Multi(MultiResponse),
    Long(LongResponse),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub predictors: Vec<Predictor>,
    pub response: Response,
    /// Subject ids in the longitudinal layout.
    pub unit_ids: Option<Vec<String>>,
}

impl Sample {
    pub fn multi(predictors: Vec<Predictor>, names: Vec<String>, values: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let s = Self {
            predictors,
            response: Response::Multi(MultiResponse { names, values }),
            unit_ids: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn longitudinal(predictors: Vec<Predictor>, name: String, series: Vec<Vec<Obs>>) -> Result<Self> {
        let s = Self {
            predictors,
            response: Response::Long(LongResponse { name, series }),
            unit_ids: None,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_units();
        if self.predictors.is_empty() {
            return Err(Error::InvalidData("no predictors".into()));
        }
        if let Some(p) = self.predictors.iter().find(|p| p.len() != n) {
            return Err(Error::InvalidData(format!(
                "predictor `{}` has {} units, expected {n}",
                p.name,
                p.len()
            )));
        }
        match &self.response {
            Response::Multi(m) => {
                if m.values.is_empty() || m.values.len() != m.names.len() {
                    return Err(Error::InvalidData("response names and columns differ".into()));
                }
                if m.values.iter().any(|c| c.len() != n) {
                    return Err(Error::InvalidData("response columns differ in length".into()));
                }
            }
            Response::Long(l) => {
                if l.series.iter().any(|s| s.windows(2).any(|w| w[0].u > w[1].u)) {
                    return Err(Error::InvalidData("series not sorted by time".into()));
                }
            }
        }
        Ok(())
    }

    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        match ds.layout {
            Layout::Multiresponse => {
                let predictors = ds
                    .predictors()
                    .map(|c| predictor_from_column(c.name.clone(), c.role, &c.values, &c.missing))
                    .collect();
                let (names, values) = ds
                    .responses()
                    .map(|c| (c.name.clone(), (0..ds.n_rows).map(|r| c.number(r)).collect()))
                    .unzip();
                Self::multi(predictors, names, values)
            }
            Layout::Longitudinal => {
                let series = group_by_subject(ds)?;
                let template: Vec<Predictor> = ds
                    .predictors()
                    .map(|c| predictor_from_column(c.name.clone(), c.role, &c.values, &c.missing))
                    .collect();
                let name = ds.responses().next().unwrap().name.clone();
                Self::from_series(&template, name, &series)
            }
        }
    }

    /// Builds a longitudinal sample; `template` supplies predictor names,
    /// kinds and category levels matching the order of `SubjectSeries::x`.
    pub fn from_series(template: &[Predictor], name: String, series: &[SubjectSeries]) -> Result<Self> {
        let predictors = template
            .iter()
            .enumerate()
            .map(|(j, p)| match &p.values {
                PredictorValues::Numeric(_) => Predictor::numeric(
                    p.name.clone(),
                    series
                        .iter()
                        .map(|s| match s.x[j] {
                            Cell::Number(v) => Some(v),
                            _ => None,
                        })
                        .collect(),
                ),
                PredictorValues::Categorical { levels, .. } => Predictor::categorical(
                    p.name.clone(),
                    series
                        .iter()
                        .map(|s| match s.x[j] {
                            Cell::Category(c) => Some(c),
                            _ => None,
                        })
                        .collect(),
                    levels.clone(),
                ),
            })
            .collect();
        let mut s = Self::longitudinal(predictors, name, series.iter().map(|s| s.obs.clone()).collect())?;
        s.unit_ids = Some(series.iter().map(|s| s.subject_id.clone()).collect());
        Ok(s)
    }

    pub fn n_units(&self) -> usize {
        match &self.response {
            Response::Multi(m) => m.values.first().map_or(0, Vec::len),
            Response::Long(l) => l.series.len(),
        }
    }

    pub fn all_units(&self) -> Vec<u32> {
        (0..self.n_units() as u32).collect()
    }

    pub fn layout(&self) -> Layout {
        match self.response {
            Response::Multi(_) => Layout::Multiresponse,
            Response::Long(_) => Layout::Longitudinal,
        }
    }

    pub fn multi_response(&self) -> Option<&MultiResponse> {
        match &self.response {
            Response::Multi(m) => Some(m),
            Response::Long(_) => None,
        }
    }

    pub fn long_response(&self) -> Option<&LongResponse> {
        match &self.response {
            Response::Long(l) => Some(l),
            Response::Multi(_) => None,
        }
    }

    /// Predictor cells of one unit, in predictor order.
    pub fn row(&self, unit: usize) -> Vec<Cell> {
        self.predictors.iter().map(|p| p.cell(unit)).collect()
    }

    /// Copy holding only response `k`, for one-tree-per-response fits.
    pub fn single_response(&self, k: usize) -> Option<Self> {
        let m = self.multi_response()?;
        Some(Self {
            predictors: self.predictors.clone(),
            response: Response::Multi(MultiResponse {
                names: vec![m.names[k].clone()],
                values: vec![m.values[k].clone()],
            }),
            unit_ids: None,
        })
    }
}

fn predictor_from_column(name: String, role: ColumnRole, values: &ColumnValues, missing: &[bool]) -> Predictor {
    match (role, values) {
        (ColumnRole::NumericPredictor, ColumnValues::Numeric(v)) => {
            Predictor::numeric(name, v.iter().zip(missing).map(|(&x, &m)| (!m).then_some(x)).collect())
        }
        (_, ColumnValues::Categorical { codes, levels }) => Predictor::categorical(
            name,
            codes.iter().zip(missing).map(|(&c, &m)| (!m).then_some(c)).collect(),
            levels.clone(),
        ),
        (_, ColumnValues::Numeric(v)) => {
            Predictor::numeric(name, v.iter().zip(missing).map(|(&x, &m)| (!m).then_some(x)).collect())
        }
    }
}
