use super::{GrowConfig, Method, Node, Schema, Split, Summary, Tree};
use crate::baseline::cart_best_split;
use crate::error::{Error, Result};
use crate::par;
use crate::sample::{PredictorKind, Response, Sample};
use crate::selector::{select_split_variable, sign_vectors_long, sign_vectors_multi, SelectionKind, SignMatrix};
use crate::splitter::{
    apply_split, node_impurity, node_impurity_long, partition, ResponseScale, Side, SplitRule, SplitScorer,
};
use crate::stats::{lowess, Curve};

/// Grows the full GUIDE tree on every unit of `sample`.
pub fn grow(sample: &Sample, config: &GrowConfig) -> Result<Tree> {
    grow_units(sample, &sample.all_units(), config, Method::Guide, None)
}

/// Grows a tree on a subset of units. `scale` fixes the response weights;
/// by default they come from `units` (and `config.normalize`).
pub fn grow_units(
    sample: &Sample,
    units: &[u32],
    config: &GrowConfig,
    method: Method,
    scale: Option<&ResponseScale>,
) -> Result<Tree> {
    config.validate()?;
    let units: Vec<u32> = match (method, &sample.response) {
        // complete cases only
        (Method::Baseline, Response::Multi(m)) => units
            .iter()
            .copied()
            .filter(|&i| m.values.iter().all(|col| col[i as usize].is_some()))
            .collect(),
        _ => units.to_vec(),
    };
    if units.is_empty() {
        return Err(Error::InvalidData("no usable units to grow a tree on".into()));
    }
    let scale = match scale {
        Some(s) => s.clone(),
        None => ResponseScale::from_root(sample, &units, config.normalize),
    };
    let grower = Grower {
        sample,
        config,
        method,
        scale,
        tol: 0.0,
    };
    let (_, root_sse) = grower.fit(&units, None);
    let grower = Grower {
        tol: 1e-12 * root_sse,
        ..grower
    };
    let grown = grower.grow(units, 0, None);
    let mut nodes = Vec::new();
    flatten(grown, &mut nodes);
    Ok(Tree {
        method,
        layout: sample.layout(),
        schema: Schema::of(sample),
        scale: grower.scale,
        nodes,
    })
}

struct Grower<'a> {
    sample: &'a Sample,
    config: &'a GrowConfig,
    method: Method,
    scale: ResponseScale,
    /// Nodes with impurity at or below this are treated as constant.
    tol: f64,
}

struct Grown {
    depth: usize,
    units: Vec<u32>,
    sse: f64,
    summary: Summary,
    split: Option<(SplitRule, f64, Box<Grown>, Box<Grown>)>,
}

impl Grower<'_> {
    fn fit(&self, units: &[u32], parent: Option<&Summary>) -> (Summary, f64) {
        match &self.sample.response {
            Response::Multi(m) => {
                let parent_mean = match parent {
                    Some(Summary::Mean(v)) => Some(v),
                    _ => None,
                };
                let mean = m
                    .values
                    .iter()
                    .enumerate()
                    .map(|(k, col)| {
                        let (s, n) = units
                            .iter()
                            .filter_map(|&i| col[i as usize])
                            .fold((0.0, 0usize), |(s, n), y| (s + y, n + 1));
                        if n > 0 {
                            s / n as f64
                        } else {
                            parent_mean.map_or(0.0, |p| p[k])
                        }
                    })
                    .collect();
                (Summary::Mean(mean), node_impurity(m, units, &self.scale))
            }
            Response::Long(l) => {
                let points: Vec<(f64, f64)> = units
                    .iter()
                    .flat_map(|&i| l.series[i as usize].iter().map(|o| (o.u, o.y)))
                    .collect();
                let curve =
                    lowess(&points, self.config.lowess.span, self.config.lowess.robust_iters).unwrap_or_else(|_| {
                        let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len().max(1) as f64;
                        Curve::constant(mean)
                    });
                let sse = node_impurity_long(&l.series, units, &curve);
                (Summary::Curve(curve), sse)
            }
        }
    }

    fn grow(&self, units: Vec<u32>, depth: usize, parent: Option<&Summary>) -> Grown {
        let (summary, sse) = self.fit(&units, parent);
        let mut node = Grown {
            depth,
            units,
            sse,
            summary,
            split: None,
        };
        if node.units.len() < self.config.min_node_size || depth >= self.config.max_depth || sse <= self.tol {
            return node;
        }
        let found = match self.method {
            Method::Guide => self.guide_split(&node.units, &node.summary),
            Method::Baseline => self.baseline_split(&node.units),
        };
        let Some((rule, gain, left, right)) = found else {
            return node;
        };
        if left.is_empty() || right.is_empty() {
            return node;
        }
        let parent = &node.summary;
        let (l, r) = par::join(
            || self.grow(left, depth + 1, Some(parent)),
            || self.grow(right, depth + 1, Some(parent)),
        );
        node.split = Some((rule, gain, Box::new(l), Box::new(r)));
        node
    }

    fn guide_split(&self, units: &[u32], summary: &Summary) -> Option<(SplitRule, f64, Vec<u32>, Vec<u32>)> {
        let z = match (&self.sample.response, summary) {
            (Response::Multi(m), _) => sign_vectors_multi(m, units, self.config.missing_y_sign).ok()?,
            (Response::Long(l), Summary::Curve(c)) => {
                let series: Vec<&[_]> = units.iter().map(|&i| l.series[i as usize].as_slice()).collect();
                sign_vectors_long(&series, c, self.config.intervals).ok()?
            }
            _ => return None,
        };
        let selection = select_split_variable(self.sample, units, &z).ok()?;
        let (rule, gain) = split_selected(self.sample, units, &z, &self.scale, selection.kind)?;
        let (left, right) = partition(self.sample, &rule, units);
        Some((rule, gain, left, right))
    }

    fn baseline_split(&self, units: &[u32]) -> Option<(SplitRule, f64, Vec<u32>, Vec<u32>)> {
        let (rule, report) = cart_best_split(self.sample, units, &self.scale).ok()?;
        let p = &self.sample.predictors[rule.var()];
        let observed: Vec<u32> = units.iter().copied().filter(|&i| !p.is_missing(i as usize)).collect();
        let (left, right) = partition(self.sample, &rule, &observed);
        Some((rule, report.gain, left, right))
    }
}

/// Best split on the selected variable. For an interaction pair, each
/// member's candidates are scored two levels deep (see
/// [`SplitScorer::lookahead`]) and the lower four-way impurity wins, first
/// member on ties. The returned gain is that of the single split.
pub(crate) fn split_selected(
    sample: &Sample,
    units: &[u32],
    z: &SignMatrix,
    scale: &ResponseScale,
    kind: SelectionKind,
) -> Option<(SplitRule, f64)> {
    let scorer = SplitScorer::new(sample, units, scale);
    match kind {
        SelectionKind::MainEffect(var) => {
            let found = match sample.predictors[var].kind() {
                PredictorKind::Numeric => scorer.best_numeric(var),
                PredictorKind::Categorical => scorer.best_categorical(var, z, false),
            };
            found.ok().map(|(rule, report)| (rule, report.gain))
        }
        SelectionKind::Interaction(i, j) => {
            let mut best: Option<(SplitRule, f64)> = None;
            for (var, other) in [(i, j), (j, i)] {
                if let Ok((rule, sse)) = scorer.lookahead(var, other, z) {
                    if best.as_ref().is_none_or(|b| sse < b.1) {
                        best = Some((rule, sse));
                    }
                }
            }
            let (rule, _) = best?;
            let p = &sample.predictors[rule.var()];
            let left: Vec<bool> = units
                .iter()
                .map(|&u| matches!(apply_split(&rule, p.cell(u as usize)), Ok(Side::Left)))
                .collect();
            let gain = scorer.report_for(&left).gain;
            Some((rule, gain))
        }
    }
}

fn flatten(g: Grown, out: &mut Vec<Node>) -> usize {
    let id = out.len();
    out.push(Node {
        id,
        depth: g.depth,
        n: g.units.len(),
        units: g.units,
        sse: g.sse,
        summary: g.summary,
        split: None,
    });
    if let Some((rule, gain, l, r)) = g.split {
        let left = flatten(*l, out);
        let right = flatten(*r, out);
        out[id].split = Some(Split {
            rule,
            left,
            right,
            gain,
        });
    }
    id
}
