//! Regression trees: growth, cost-complexity pruning, cross-validation,
//! prediction and persistence.

mod cv;
mod grow;
mod model;
mod prune;
mod render;

use serde::{Deserialize, Serialize};

pub use cv::{cross_validate, loo_prediction_error, CvOptions, CvResult};
pub(crate) use grow::split_selected;
pub use grow::{grow, grow_units};
pub use model::MODEL_VERSION;
pub use prune::{prune_sequence, PruneSequence, PruneStep};

use crate::dataset::{Cell, Layout};
use crate::error::{Error, Result};
use crate::sample::{PredictorKind, Response, Sample};
use crate::selector::MissingSign;
use crate::splitter::{apply_split, ResponseScale, Side, SplitRule};
use crate::stats::{Curve, LowessParams};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Guide,
    Baseline,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "guide" => Ok(Self::Guide),
            "baseline" | "cart" | "mvpart" => Ok(Self::Baseline),
            _ => Err(Error::Config(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowConfig {
    /// Nodes with fewer units (rows or subjects) are not split.
    pub min_node_size: usize,
    pub max_depth: usize,
    /// Number of time intervals for longitudinal sign vectors.
    pub intervals: usize,
    pub missing_y_sign: MissingSign,
    /// Weight each response by `1/s²` of the root node.
    pub normalize: bool,
    pub lowess: LowessParams,
}

impl GrowConfig {
    pub fn multiresponse() -> Self {
        Self {
            min_node_size: 10,
            max_depth: 30,
            intervals: 3,
            missing_y_sign: MissingSign::Minus,
            normalize: false,
            lowess: LowessParams::default(),
        }
    }

    pub fn longitudinal() -> Self {
        Self {
            min_node_size: 5,
            ..Self::multiresponse()
        }
    }

    pub fn for_layout(layout: Layout) -> Self {
        match layout {
            Layout::Multiresponse => Self::multiresponse(),
            Layout::Longitudinal => Self::longitudinal(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_node_size < 2 {
            return Err(Error::Config("min_node_size must be at least 2".into()));
        }
        if self.intervals == 0 || self.intervals > crate::selector::MAX_SIGN_DIM {
            return Err(Error::Config(format!(
                "intervals must be in 1..={}",
                crate::selector::MAX_SIGN_DIM
            )));
        }
        if !(self.lowess.span > 0.0 && self.lowess.span <= 1.0) {
            return Err(Error::Config("lowess span must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Fitted value of a node.
#[derive(Clone, Debug, PartialEq)]
pub enum Summary {
    Mean(Vec<f64>),
    Curve(Curve),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Prediction {
    Vector(Vec<f64>),
    Scalar(f64),
}

impl Prediction {
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Self::Vector(v) => Some(v),
            Self::Scalar(_) => None,
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Self::Scalar(v) => Some(*v),
            Self::Vector(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub rule: SplitRule,
    pub left: usize,
    pub right: usize,
    pub gain: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: usize,
    pub depth: usize,
    /// Training units reaching the node; empty for deserialized trees.
    pub units: Vec<u32>,
    pub n: usize,
    /// Impurity of the node's training units about its own summary.
    pub sse: f64,
    pub summary: Summary,
    pub split: Option<Split>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorSpec {
    pub name: String,
    pub kind: PredictorKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

/// Column layout a tree was trained on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub predictors: Vec<PredictorSpec>,
    pub responses: Vec<String>,
}

impl Schema {
    pub fn of(sample: &Sample) -> Self {
        Self {
            predictors: sample
                .predictors
                .iter()
                .map(|p| PredictorSpec {
                    name: p.name.clone(),
                    kind: p.kind(),
                    levels: p.levels().to_vec(),
                })
                .collect(),
            responses: match &sample.response {
                Response::Multi(m) => m.names.clone(),
                Response::Long(l) => vec![l.name.clone()],
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    pub method: Method,
    pub layout: Layout,
    pub schema: Schema,
    pub scale: ResponseScale,
    /// Preorder; `nodes[0]` is the root.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    /// Sum of terminal-node impurities.
    pub fn leaf_sse(&self) -> f64 {
        self.leaves().map(|n| n.sse).sum()
    }

    /// Terminal node reached by `x`, treating nodes for which `stop` holds
    /// as terminal.
    pub(crate) fn route(&self, x: &[Cell], stop: impl Fn(usize) -> bool) -> Result<usize> {
        if x.len() != self.schema.predictors.len() {
            return Err(Error::InvalidData(format!(
                "expected {} predictor values, got {}",
                self.schema.predictors.len(),
                x.len()
            )));
        }
        let mut id = 0;
        while let Some(split) = &self.nodes[id].split {
            if stop(id) {
                break;
            }
            id = match apply_split(&split.rule, x[split.rule.var()])? {
                Side::Left => split.left,
                Side::Right => split.right,
            };
        }
        Ok(id)
    }

    pub fn leaf_of(&self, x: &[Cell]) -> Result<usize> {
        self.route(x, |_| false)
    }

    pub fn predict(&self, x: &[Cell], u: Option<f64>) -> Result<Prediction> {
        let id = self.leaf_of(x)?;
        self.node_prediction(id, u)
    }

    pub(crate) fn node_prediction(&self, id: usize, u: Option<f64>) -> Result<Prediction> {
        match (&self.nodes[id].summary, u) {
            (Summary::Mean(m), None) => Ok(Prediction::Vector(m.clone())),
            (Summary::Curve(c), Some(u)) => Ok(Prediction::Scalar(c.eval(u))),
            (Summary::Mean(_), Some(_)) => Err(Error::InvalidData("time given for a multiresponse tree".into())),
            (Summary::Curve(_), None) => Err(Error::InvalidData("longitudinal prediction needs a time value".into())),
        }
    }

    /// Copy with every node for which `collapse` holds turned into a leaf;
    /// ids are reassigned in preorder.
    pub fn collapsed(&self, collapse: impl Fn(usize) -> bool) -> Tree {
        let mut nodes = Vec::new();
        self.copy_subtree(0, &collapse, &mut nodes);
        Tree {
            method: self.method,
            layout: self.layout,
            schema: self.schema.clone(),
            scale: self.scale.clone(),
            nodes,
        }
    }

    fn copy_subtree(&self, id: usize, collapse: &impl Fn(usize) -> bool, out: &mut Vec<Node>) -> usize {
        let new_id = out.len();
        let mut node = self.nodes[id].clone();
        node.id = new_id;
        let split = node.split.take();
        out.push(node);
        if let Some(s) = split.filter(|_| !collapse(id)) {
            let left = self.copy_subtree(s.left, collapse, out);
            let right = self.copy_subtree(s.right, collapse, out);
            out[new_id].split = Some(Split { left, right, ..s });
        }
        new_id
    }

    /// Weighted squared error of the tree's predictions for one unit of
    /// `sample`, with nodes satisfying `stop` treated as terminal.
    pub(crate) fn unit_error(&self, sample: &Sample, unit: u32, stop: impl Fn(usize) -> bool) -> Result<f64> {
        let id = self.route(&sample.row(unit as usize), stop)?;
        Ok(match (&self.nodes[id].summary, &sample.response) {
            (Summary::Mean(m), Response::Multi(r)) => r
                .values
                .iter()
                .zip(m)
                .zip(&self.scale.weights)
                .filter_map(|((col, mu), w)| col[unit as usize].map(|y| w * (y - mu).powi(2)))
                .sum(),
            (Summary::Curve(c), Response::Long(l)) => l.series[unit as usize]
                .iter()
                .map(|o| (o.y - c.eval(o.u)).powi(2))
                .sum(),
            _ => return Err(Error::InvalidData("sample layout does not match the tree".into())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Obs;
    use crate::sample::Predictor;

    fn step_sample(n: usize) -> Sample {
        let x: Vec<Option<f64>> = (0..n).map(|i| Some(i as f64)).collect();
        let y: Vec<Option<f64>> = (0..n).map(|i| Some(if i < n / 2 { 0.0 } else { 10.0 })).collect();
        Sample::multi(vec![Predictor::numeric("x", x)], vec!["y".into()], vec![y]).unwrap()
    }

    #[test]
    fn constant_response_gives_single_node() {
        let n = 40;
        let x: Vec<Option<f64>> = (0..n).map(|i| Some(i as f64)).collect();
        let s = Sample::multi(
            vec![Predictor::numeric("x", x)],
            vec!["y".into()],
            vec![vec![Some(3.0); n]],
        )
        .unwrap();
        let t = grow(&s, &GrowConfig::multiresponse()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(
            t.predict(&[Cell::Number(-5.0)], None).unwrap(),
            Prediction::Vector(vec![3.0])
        );
    }

    #[test]
    fn small_sample_gives_single_node() {
        let t = grow(&step_sample(9), &GrowConfig::multiresponse()).unwrap();
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn step_is_found_and_threshold_is_inclusive() {
        let t = grow(&step_sample(40), &GrowConfig::multiresponse()).unwrap();
        let split = t.root().split.as_ref().unwrap();
        let SplitRule::Numeric { threshold, .. } = split.rule else {
            panic!()
        };
        assert_eq!(threshold, 19.5);
        let left = t.predict(&[Cell::Number(19.5)], None).unwrap();
        assert_eq!(left, Prediction::Vector(vec![0.0]));
        let right = t.predict(&[Cell::Number(19.6)], None).unwrap();
        assert_eq!(right, Prediction::Vector(vec![10.0]));
    }

    #[test]
    fn children_partition_parent_units() {
        let t = grow(
            &step_sample(60),
            &GrowConfig {
                min_node_size: 4,
                ..GrowConfig::multiresponse()
            },
        )
        .unwrap();
        for node in &t.nodes {
            if let Some(s) = &node.split {
                let mut both: Vec<u32> = t.nodes[s.left]
                    .units
                    .iter()
                    .chain(&t.nodes[s.right].units)
                    .copied()
                    .collect();
                both.sort_unstable();
                let mut parent = node.units.clone();
                parent.sort_unstable();
                assert_eq!(both, parent);
            }
        }
    }

    #[test]
    fn wrong_arity_and_layout_are_rejected() {
        let t = grow(&step_sample(40), &GrowConfig::multiresponse()).unwrap();
        assert!(t.predict(&[], None).is_err());
        assert!(t.predict(&[Cell::Number(1.0)], Some(2.0)).is_err());
        assert!(t.predict(&[Cell::Category(0)], None).is_err());
    }

    #[test]
    fn longitudinal_leaves_hold_curves() {
        let n = 60;
        let x: Vec<Option<f64>> = (0..n).map(|i| Some(if i % 2 == 0 { -1.0 } else { 1.0 })).collect();
        let series: Vec<Vec<Obs>> = (0..n)
            .map(|i| {
                (1..=6)
                    .map(|u| Obs {
                        u: u as f64,
                        y: if i % 2 == 0 { 5.0 } else { 0.0 } + 0.3 * u as f64 + 0.01 * ((i * u) % 7) as f64,
                    })
                    .collect()
            })
            .collect();
        let s = Sample::longitudinal(vec![Predictor::numeric("x", x)], "y".into(), series).unwrap();
        let t = grow(&s, &GrowConfig::longitudinal()).unwrap();
        let split = t.root().split.as_ref().unwrap();
        assert_eq!(split.rule.var(), 0);
        let low = t
            .predict(&[Cell::Number(-1.0)], Some(2.0))
            .unwrap()
            .as_scalar()
            .unwrap();
        let high = t.predict(&[Cell::Number(1.0)], Some(2.0)).unwrap().as_scalar().unwrap();
        assert!((low - 5.6).abs() < 0.1, "{low}");
        assert!((high - 0.6).abs() < 0.1, "{high}");
        assert!(t.predict(&[Cell::Number(1.0)], None).is_err());
    }
}
