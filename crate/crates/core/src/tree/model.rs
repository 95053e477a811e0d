//! JSON persistence of fitted trees.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Method, Node, PredictorSpec, Schema, Split, Summary, Tree};
use crate::dataset::{Cell, Column, ColumnRole, ColumnValues, Dataset, Layout};
use crate::error::{Error, Result};
use crate::sample::PredictorKind;
use crate::splitter::{ResponseScale, SplitRule};
use crate::stats::Curve;

pub const MODEL_VERSION: u32 = 1;

/// Code given to categories that were not seen in training; it is never in
/// a left subset, so such values go right.
pub const UNSEEN_CATEGORY: u32 = u32::MAX - 1;

#[derive(Serialize, Deserialize)]
struct Document {
    version: u32,
    method: Method,
    layout: Layout,
    roles: Vec<RoleEntry>,
    predictors: Vec<PredictorSpec>,
    responses: Vec<String>,
    weights: Vec<f64>,
    nodes: Vec<NodeDoc>,
}

#[derive(Serialize, Deserialize)]
struct RoleEntry {
    name: String,
    role: ColumnRole,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: usize,
    #[serde(default)]
    depth: usize,
    n: usize,
    sse: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rule: Option<SplitRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    curve_knots: Option<Curve>,
}

impl Tree {
    pub fn to_json(&self) -> String {
        let roles = self
            .schema
            .predictors
            .iter()
            .map(|p| RoleEntry {
                name: p.name.clone(),
                role: match p.kind {
                    PredictorKind::Numeric => ColumnRole::NumericPredictor,
                    PredictorKind::Categorical => ColumnRole::CategoricalPredictor,
                },
            })
            .chain(self.schema.responses.iter().map(|r| RoleEntry {
                name: r.clone(),
                role: ColumnRole::Response,
            }))
            .collect();
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let (mean, curve_knots) = match &n.summary {
                    Summary::Mean(m) => (Some(m.clone()), None),
                    Summary::Curve(c) => (None, Some(c.clone())),
                };
                NodeDoc {
                    id: n.id,
                    depth: n.depth,
                    n: n.n,
                    sse: n.sse,
                    rule: n.split.as_ref().map(|s| s.rule.clone()),
                    left: n.split.as_ref().map(|s| s.left),
                    right: n.split.as_ref().map(|s| s.right),
                    gain: n.split.as_ref().map(|s| s.gain),
                    mean,
                    curve_knots,
                }
            })
            .collect();
        let doc = Document {
            version: MODEL_VERSION,
            method: self.method,
            layout: self.layout,
            roles,
            predictors: self.schema.predictors.clone(),
            responses: self.schema.responses.clone(),
            weights: self.scale.weights.clone(),
            nodes,
        };
        serde_json::to_string_pretty(&doc).expect("tree documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Tree> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == MODEL_VERSION as u64 => {}
            Some(v) => return Err(Error::Model(format!("unsupported model version {v}"))),
            None => return Err(Error::Model("missing model version".into())),
        }
        let doc: Document = serde_json::from_value(value)?;
        let schema = Schema {
            predictors: doc.predictors,
            responses: doc.responses,
        };
        let n_resp = schema.responses.len();
        let weights = if doc.weights.is_empty() {
            vec![1.0; if doc.layout == Layout::Longitudinal { 1 } else { n_resp }]
        } else {
            doc.weights
        };
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for (i, nd) in doc.nodes.into_iter().enumerate() {
            if nd.id != i {
                return Err(Error::Model(format!("node {i} carries id {}", nd.id)));
            }
            let summary = match (doc.layout, nd.mean, nd.curve_knots) {
                (Layout::Multiresponse, Some(m), None) if m.len() == n_resp => Summary::Mean(m),
                (Layout::Longitudinal, None, Some(c)) => Summary::Curve(c),
                _ => return Err(Error::Model(format!("node {i} has no valid summary"))),
            };
            let split = match (nd.rule, nd.left, nd.right) {
                (None, None, None) => None,
                (Some(rule), Some(left), Some(right)) => {
                    check_rule(&rule, &schema, i)?;
                    Some(Split {
                        rule,
                        left,
                        right,
                        gain: nd.gain.unwrap_or(0.0),
                    })
                }
                _ => return Err(Error::Model(format!("node {i} has an incomplete split"))),
            };
            nodes.push(Node {
                id: i,
                depth: nd.depth,
                units: Vec::new(),
                n: nd.n,
                sse: nd.sse,
                summary,
                split,
            });
        }
        check_structure(&nodes)?;
        Ok(Tree {
            method: doc.method,
            layout: doc.layout,
            schema,
            scale: ResponseScale { weights },
            nodes,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Tree> {
        Tree::from_json(&std::fs::read_to_string(path)?)
    }

    /// Predictor cells of every row of `ds`, matched to the model's
    /// predictors by column name and category label.
    pub fn cells_from_dataset(&self, ds: &Dataset) -> Result<Vec<Vec<Cell>>> {
        self.cells_from_columns(&ds.columns)
    }

    /// As [`Tree::cells_from_dataset`], for columns of equal length.
    pub fn cells_from_columns(&self, columns: &[Column]) -> Result<Vec<Vec<Cell>>> {
        let cols = self
            .schema
            .predictors
            .iter()
            .map(|p| {
                columns
                    .iter()
                    .find(|c| c.name == p.name)
                    .ok_or_else(|| Error::UnknownColumn(p.name.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let n_rows = cols.first().map_or(0, |c| c.len());
        let maps: Vec<Vec<u32>> = cols
            .iter()
            .zip(&self.schema.predictors)
            .map(|(c, p)| match &c.values {
                ColumnValues::Categorical { levels, .. } => levels
                    .iter()
                    .map(|l| {
                        p.levels
                            .iter()
                            .position(|m| m == l)
                            .map_or(UNSEEN_CATEGORY, |i| i as u32)
                    })
                    .collect(),
                ColumnValues::Numeric(_) => Vec::new(),
            })
            .collect();
        (0..n_rows)
            .map(|r| {
                cols.iter()
                    .zip(&self.schema.predictors)
                    .zip(&maps)
                    .map(|((c, p), map)| match (p.kind, c.cell(r)) {
                        (_, Cell::Missing) => Ok(Cell::Missing),
                        (PredictorKind::Numeric, Cell::Number(v)) => Ok(Cell::Number(v)),
                        (PredictorKind::Categorical, Cell::Category(code)) => Ok(Cell::Category(map[code as usize])),
                        _ => Err(Error::Model(format!(
                            "column `{}` does not have the type the model expects",
                            p.name
                        ))),
                    })
                    .collect()
            })
            .collect()
    }
}

fn check_rule(rule: &SplitRule, schema: &Schema, node: usize) -> Result<()> {
    let var = rule.var();
    let Some(p) = schema.predictors.get(var) else {
        return Err(Error::Model(format!("node {node} splits on unknown variable {var}")));
    };
    let ok = matches!(
        (rule, p.kind),
        (SplitRule::Numeric { .. }, PredictorKind::Numeric)
            | (SplitRule::Categorical { .. }, PredictorKind::Categorical)
    );
    if !ok {
        return Err(Error::Model(format!(
            "node {node}: rule type does not match variable `{}`",
            p.name
        )));
    }
    Ok(())
}

/// Every non-root node has exactly one parent, children come after their
/// parent, and subtrees are contiguous (preorder).
fn check_structure(nodes: &[Node]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::Model("tree has no nodes".into()));
    }
    let mut parents = vec![0usize; nodes.len()];
    for n in nodes {
        if let Some(s) = &n.split {
            for c in [s.left, s.right] {
                if c <= n.id || c >= nodes.len() {
                    return Err(Error::Model(format!("node {} has invalid child {c}", n.id)));
                }
                parents[c] += 1;
            }
            if s.left != n.id + 1 || s.right <= s.left {
                return Err(Error::Model(format!("node {} is not in preorder", n.id)));
            }
        }
    }
    if parents[0] != 0 || parents[1..].iter().any(|&p| p != 1) {
        return Err(Error::Model("nodes do not form a single tree".into()));
    }
    // right child must start right after the left subtree
    fn end(nodes: &[Node], id: usize) -> Result<usize> {
        match &nodes[id].split {
            None => Ok(id + 1),
            Some(s) => {
                let left_end = end(nodes, s.left)?;
                if left_end != s.right {
                    return Err(Error::Model(format!("node {id} is not in preorder")));
                }
                end(nodes, s.right)
            }
        }
    }
    if end(nodes, 0)? != nodes.len() {
        return Err(Error::Model("tree has unreachable nodes".into()));
    }
    Ok(())
}
