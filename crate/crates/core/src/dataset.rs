//! Columnar tables with column roles and explicit missingness.
//!
//! A [`Dataset`] is the loaded CSV. Fitting works on a [`crate::Sample`],
//! which is built from a dataset (one unit per row, or one unit per subject
//! in the longitudinal layout).

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    NumericPredictor,
    CategoricalPredictor,
    Response,
    Time,
    SubjectId,
    Excluded,
}

impl ColumnRole {
    pub fn is_predictor(self) -> bool {
        matches!(self, Self::NumericPredictor | Self::CategoricalPredictor)
    }

    fn is_numeric(self) -> bool {
        matches!(self, Self::NumericPredictor | Self::Response | Self::Time)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::NumericPredictor => "numeric_predictor",
            Self::CategoricalPredictor => "categorical_predictor",
            Self::Response => "response",
            Self::Time => "time",
            Self::SubjectId => "subject_id",
            Self::Excluded => "excluded",
        }
    }
}

impl fmt::Display for ColumnRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ColumnRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "numeric_predictor" | "numeric" | "n" => Self::NumericPredictor,
            "categorical_predictor" | "categorical" | "c" => Self::CategoricalPredictor,
            "response" | "d" => Self::Response,
            "time" | "t" => Self::Time,
            "subject_id" | "subject" | "id" => Self::SubjectId,
            "excluded" | "x" => Self::Excluded,
            other => return Err(Error::RoleSpec(format!("unknown role `{other}`"))),
        })
    }
}

/// Column name to role mapping, read from a `name:role` per line file.
///
/// Blank lines and lines starting with `#` are ignored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoleSpec {
    entries: Vec<(String, ColumnRole)>,
}

impl RoleSpec {
    pub fn new<S: Into<String>>(entries: impl IntoIterator<Item = (S, ColumnRole)>) -> Self {
        Self {
            entries: entries.into_iter().map(|(n, r)| (n.into(), r)).collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, role) = line
                .rsplit_once(':')
                .ok_or_else(|| Error::RoleSpec(format!("line {}: expected `name:role`", lineno + 1)))?;
            let name = name.trim().to_string();
            if !seen.insert(name.clone()) {
                return Err(Error::RoleSpec(format!("column `{name}` listed twice")));
            }
            entries.push((name, role.parse()?));
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, name: &str) -> Option<ColumnRole> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, r)| *r)
    }

    pub fn entries(&self) -> &[(String, ColumnRole)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(n, r)| format!("{n}:{r}\n")).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Multiresponse,
    Longitudinal,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnValues {
    /// Missing cells hold NaN; consult the mask.
    Numeric(Vec<f64>),
    /// Codes index `levels`, which are kept in first-appearance order.
    /// Missing cells hold `u32::MAX`.
    Categorical { codes: Vec<u32>, levels: Vec<String> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub role: ColumnRole,
    pub values: ColumnValues,
    pub missing: Vec<bool>,
}

/// A single possibly-missing cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Missing,
    Number(f64),
    Category(u32),
}

impl Column {
    pub fn len(&self) -> usize {
        self.missing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn cell(&self, row: usize) -> Cell {
        if self.missing[row] {
            return Cell::Missing;
        }
        match &self.values {
            ColumnValues::Numeric(v) => Cell::Number(v[row]),
            ColumnValues::Categorical { codes, .. } => Cell::Category(codes[row]),
        }
    }

    pub fn number(&self, row: usize) -> Option<f64> {
        match (&self.values, self.missing[row]) {
            (ColumnValues::Numeric(v), false) => Some(v[row]),
            _ => None,
        }
    }

    /// Text form of a cell, `None` when missing.
    pub fn text(&self, row: usize) -> Option<String> {
        if self.missing[row] {
            return None;
        }
        Some(match &self.values {
            ColumnValues::Numeric(v) => v[row].to_string(),
            ColumnValues::Categorical { codes, levels } => levels[codes[row] as usize].clone(),
        })
    }

    pub fn levels(&self) -> Option<&[String]> {
        match &self.values {
            ColumnValues::Categorical { levels, .. } => Some(levels),
            ColumnValues::Numeric(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LoadOptions {
    /// Tokens (besides the empty field) read as missing.
    pub missing_tokens: Vec<String>,
    /// Treat columns absent from the role spec as excluded instead of
    /// rejecting them.
    pub exclude_unlisted: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            missing_tokens: vec!["NA".to_string()],
            exclude_unlisted: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub columns: Vec<Column>,
    pub n_rows: usize,
    pub layout: Layout,
}

impl Dataset {
    /// Builds a dataset from already parsed columns and validates it.
    pub fn from_columns(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Column::len);
        let mut names = HashSet::new();
        for c in &columns {
            if c.len() != n_rows {
                return Err(Error::InvalidData(format!(
                    "column `{}` has {} rows, expected {n_rows}",
                    c.name,
                    c.len()
                )));
            }
            if !names.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
        }
        let count = |role| columns.iter().filter(|c| c.role == role).count();
        let n_pred = columns.iter().filter(|c| c.role.is_predictor()).count();
        let (n_time, n_subj, n_resp) = (
            count(ColumnRole::Time),
            count(ColumnRole::SubjectId),
            count(ColumnRole::Response),
        );
        if n_pred == 0 {
            return Err(Error::InvalidData("no predictor columns".into()));
        }
        let layout = match (n_time, n_subj) {
            (0, 0) => {
                if n_resp == 0 {
                    return Err(Error::InvalidData("no response columns".into()));
                }
                Layout::Multiresponse
            }
            (1, 1) => {
                if n_resp != 1 {
                    return Err(Error::InvalidData(
                        "longitudinal layout needs exactly one response value column".into(),
                    ));
                }
                Layout::Longitudinal
            }
            _ => {
                return Err(Error::InvalidData(
                    "longitudinal layout needs exactly one time and one subject_id column".into(),
                ))
            }
        };
        let ds = Self {
            columns,
            n_rows,
            layout,
        };
        if layout == Layout::Longitudinal {
            let time = ds.column_by_role(ColumnRole::Time).unwrap();
            let subj = ds.column_by_role(ColumnRole::SubjectId).unwrap();
            for row in 0..n_rows {
                if subj.missing[row] {
                    return Err(Error::InvalidData(format!("row {}: missing subject id", row + 1)));
                }
                match time.number(row) {
                    Some(u) if u.is_finite() => {}
                    _ => {
                        return Err(Error::InvalidData(format!(
                            "row {}: missing or non-finite time",
                            row + 1
                        )))
                    }
                }
            }
        }
        Ok(ds)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    fn column_by_role(&self, role: ColumnRole) -> Option<&Column> {
        self.columns.iter().find(|c| c.role == role)
    }

    pub fn predictors(&self) -> impl Iterator<Item = &Column> {
        self.columns.iter().filter(|c| c.role.is_predictor())
    }

    pub fn responses(&self) -> impl Iterator<Item = &Column> {
        self.columns.iter().filter(|c| c.role == ColumnRole::Response)
    }

    pub fn is_missing(&self, row: usize, column: &str) -> Option<bool> {
        self.column(column).map(|c| c.missing[row])
    }

    pub fn role_spec(&self) -> RoleSpec {
        RoleSpec::new(self.columns.iter().map(|c| (c.name.clone(), c.role)))
    }

    /// Writes the table as CSV with missing cells as empty fields.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for row in 0..self.n_rows {
            wr.write_record(self.columns.iter().map(|c| c.text(row).unwrap_or_default()))?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn load_csv(path: impl AsRef<Path>, roles: &RoleSpec, opts: &LoadOptions) -> Result<Dataset> {
    read_csv(std::fs::File::open(path)?, roles, opts)
}

pub fn read_csv<R: Read>(reader: R, roles: &RoleSpec, opts: &LoadOptions) -> Result<Dataset> {
    Dataset::from_columns(read_columns(reader, roles, opts)?)
}

/// Parses typed columns without the layout checks of [`Dataset`], e.g. for
/// prediction inputs that carry no responses.
pub fn read_columns<R: Read>(reader: R, roles: &RoleSpec, opts: &LoadOptions) -> Result<Vec<Column>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    for (name, _) in roles.entries() {
        if !seen.contains(name.as_str()) {
            return Err(Error::UnknownColumn(name.clone()));
        }
    }
    let col_roles = headers
        .iter()
        .map(|h| match roles.get(h) {
            Some(r) => Ok(r),
            None if opts.exclude_unlisted => Ok(ColumnRole::Excluded),
            None => Err(Error::UnassignedColumn(h.clone())),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut builders: Vec<ColumnBuilder> = col_roles.iter().map(|r| ColumnBuilder::new(*r)).collect();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for (j, b) in builders.iter_mut().enumerate() {
            let raw = record.get(j).unwrap_or("").trim();
            let missing = raw.is_empty() || opts.missing_tokens.iter().any(|t| t == raw);
            b.push(raw, missing).map_err(|token| Error::ParseNumber {
                row: row + 1,
                column: headers[j].clone(),
                token,
            })?;
        }
    }

    Ok(headers
        .into_iter()
        .zip(builders)
        .map(|(name, b)| b.finish(name))
        .collect())
}

struct ColumnBuilder {
    role: ColumnRole,
    numbers: Vec<f64>,
    codes: Vec<u32>,
    levels: Vec<String>,
    index: HashMap<String, u32>,
    missing: Vec<bool>,
}

impl ColumnBuilder {
    fn new(role: ColumnRole) -> Self {
        Self {
            role,
            numbers: Vec::new(),
            codes: Vec::new(),
            levels: Vec::new(),
            index: HashMap::new(),
            missing: Vec::new(),
        }
    }

    fn push(&mut self, raw: &str, missing: bool) -> std::result::Result<(), String> {
        self.missing.push(missing);
        if self.role.is_numeric() {
            let v = if missing {
                f64::NAN
            } else {
                raw.parse::<f64>().map_err(|_| raw.to_string())?
            };
            self.numbers.push(v);
        } else if missing {
            self.codes.push(u32::MAX);
        } else {
            let next = self.levels.len() as u32;
            let code = *self.index.entry(raw.to_string()).or_insert_with(|| {
                self.levels.push(raw.to_string());
                next
            });
            self.codes.push(code);
        }
        Ok(())
    }

    fn finish(self, name: String) -> Column {
        let values = if self.role.is_numeric() {
            ColumnValues::Numeric(self.numbers)
        } else {
            ColumnValues::Categorical {
                codes: self.codes,
                levels: self.levels,
            }
        };
        Column {
            name,
            role: self.role,
            values,
            missing: self.missing,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obs {
    pub u: f64,
    pub y: f64,
}

/// One subject's time-fixed predictors and observed trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectSeries {
    pub subject_id: String,
    /// One cell per predictor column, in dataset column order.
    pub x: Vec<Cell>,
    /// Sorted by time.
    pub obs: Vec<Obs>,
}

/// Groups a longitudinal dataset into one series per subject, in order of
/// first appearance. Rows with a missing response are skipped, and subjects
/// left without observations are dropped.
pub fn group_by_subject(ds: &Dataset) -> Result<Vec<SubjectSeries>> {
    if ds.layout != Layout::Longitudinal {
        return Err(Error::InvalidData("dataset is not longitudinal".into()));
    }
    let subj = ds.column_by_role(ColumnRole::SubjectId).unwrap();
    let time = ds.column_by_role(ColumnRole::Time).unwrap();
    let resp = ds.column_by_role(ColumnRole::Response).unwrap();
    let preds: Vec<&Column> = ds.predictors().collect();

    let mut order: Vec<String> = Vec::new();
    let mut by_id: HashMap<String, SubjectSeries> = HashMap::new();
    for row in 0..ds.n_rows {
        let id = subj.text(row).unwrap();
        let x: Vec<Cell> = preds.iter().map(|c| c.cell(row)).collect();
        let entry = by_id.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            SubjectSeries {
                subject_id: id.clone(),
                x: x.clone(),
                obs: Vec::new(),
            }
        });
        if let Some(j) = entry.x.iter().zip(&x).position(|(a, b)| !same_cell(a, b)) {
            return Err(Error::InconsistentSubject {
                subject: id,
                column: preds[j].name.clone(),
            });
        }
        if let Some(y) = resp.number(row) {
            entry.obs.push(Obs {
                u: time.number(row).unwrap(),
                y,
            });
        }
    }
    Ok(order
        .into_iter()
        .filter_map(|id| by_id.remove(&id))
        .filter(|s| !s.obs.is_empty())
        .map(|mut s| {
            s.obs.sort_by(|a, b| a.u.total_cmp(&b.u));
            s
        })
        .collect())
}

fn same_cell(a: &Cell, b: &Cell) -> bool {
    match (a, b) {
        (Cell::Number(x), Cell::Number(y)) => x.to_bits() == y.to_bits() || x == y,
        _ => a == b,
    }
}

/// Appends each subject's series in `b`, shifted by `offset`, to its series
/// in `a`. Used to model two parallel series as one long series.
pub fn concat_series(a: &[SubjectSeries], b: &[SubjectSeries], offset: f64) -> Result<Vec<SubjectSeries>> {
    let max_a = a
        .iter()
        .flat_map(|s| s.obs.iter().map(|o| o.u))
        .fold(f64::NEG_INFINITY, f64::max);
    if offset < max_a {
        return Err(Error::Config(format!(
            "offset {offset} is below the largest time {max_a} of the first series"
        )));
    }
    let b_index: HashMap<&str, &SubjectSeries> = b.iter().map(|s| (s.subject_id.as_str(), s)).collect();
    if let Some(s) = b.iter().find(|s| !a.iter().any(|t| t.subject_id == s.subject_id)) {
        return Err(Error::SubjectMismatch(s.subject_id.clone()));
    }
    a.iter()
        .map(|s| {
            let other = b_index
                .get(s.subject_id.as_str())
                .ok_or_else(|| Error::SubjectMismatch(s.subject_id.clone()))?;
            let mut out = s.clone();
            out.obs.extend(other.obs.iter().map(|o| Obs {
                u: o.u + offset,
                y: o.y,
            }));
            Ok(out)
        })
        .collect()
}
