use super::Tree;

/// One subtree of the weakest-link sequence. CV fields are NaN until
/// filled in by cross-validation.
#[derive(Clone, Debug, PartialEq)]
pub struct PruneStep {
    pub alpha: f64,
    pub n_leaves: usize,
    pub train_sse: f64,
    pub cv_error: f64,
    pub cv_se: f64,
}

/// Nested subtrees indexed by increasing cost-complexity parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct PruneSequence {
    pub steps: Vec<PruneStep>,
    /// Per node, the smallest alpha at which it is terminal; 0 for leaves.
    pub collapse_alpha: Vec<f64>,
}

impl PruneSequence {
    /// Whether node `id` is terminal in the subtree optimal at `alpha`.
    pub fn is_terminal(&self, id: usize, alpha: f64) -> bool {
        self.collapse_alpha[id] <= alpha
    }

    pub fn subtree(&self, tree: &Tree, step: usize) -> Tree {
        let alpha = self.steps[step].alpha;
        tree.collapsed(|id| self.is_terminal(id, alpha))
    }

    /// Index of the subtree in force at `alpha`.
    pub fn step_at(&self, alpha: f64) -> usize {
        self.steps.partition_point(|s| s.alpha <= alpha).saturating_sub(1)
    }
}

/// Minimal cost-complexity pruning: repeatedly collapse every internal node
/// minimizing `g(t) = (R(t) − R(T_t)) / (|T_t| − 1)`.
pub fn prune_sequence(tree: &Tree) -> PruneSequence {
    let nodes = &tree.nodes;
    let n = nodes.len();
    let tol = 1e-12 * nodes[0].sse.abs().max(f64::MIN_POSITIVE);
    let mut collapse_alpha: Vec<f64> = nodes
        .iter()
        .map(|nd| if nd.is_leaf() { 0.0 } else { f64::INFINITY })
        .collect();
    let mut collapsed = vec![false; n];
    let mut steps = vec![PruneStep {
        alpha: 0.0,
        n_leaves: tree.n_leaves(),
        train_sse: tree.leaf_sse(),
        cv_error: f64::NAN,
        cv_se: f64::NAN,
    }];

    let mut sub_sse = vec![0.0; n];
    let mut sub_leaves = vec![0usize; n];
    loop {
        // children follow their parent in preorder
        for id in (0..n).rev() {
            match &nodes[id].split {
                Some(s) if !collapsed[id] => {
                    sub_sse[id] = sub_sse[s.left] + sub_sse[s.right];
                    sub_leaves[id] = sub_leaves[s.left] + sub_leaves[s.right];
                }
                _ => {
                    sub_sse[id] = nodes[id].sse;
                    sub_leaves[id] = 1;
                }
            }
        }
        let live = |id: usize| !collapsed[id] && !nodes[id].is_leaf() && reachable(tree, &collapsed, id);
        let g: Vec<(usize, f64)> = (0..n)
            .filter(|&id| live(id))
            .map(|id| (id, (nodes[id].sse - sub_sse[id]) / (sub_leaves[id] - 1) as f64))
            .collect();
        let Some(gmin) = g.iter().map(|p| p.1).min_by(f64::total_cmp) else {
            break;
        };
        let last = steps.last().unwrap().alpha;
        let merge = gmin <= last + tol;
        let alpha = if merge { last } else { gmin };
        for &(id, gv) in &g {
            if gv <= gmin + tol {
                collapse_below(tree, id, alpha, &mut collapsed, &mut collapse_alpha);
            }
        }
        let n_leaves = (0..n)
            .filter(|&id| reachable(tree, &collapsed, id) && (nodes[id].is_leaf() || collapsed[id]))
            .count();
        let train_sse = (0..n)
            .filter(|&id| reachable(tree, &collapsed, id) && (nodes[id].is_leaf() || collapsed[id]))
            .map(|id| nodes[id].sse)
            .sum();
        let step = PruneStep {
            alpha,
            n_leaves,
            train_sse,
            cv_error: f64::NAN,
            cv_se: f64::NAN,
        };
        if merge {
            *steps.last_mut().unwrap() = step;
        } else {
            steps.push(step);
        }
    }
    PruneSequence { steps, collapse_alpha }
}

fn collapse_below(tree: &Tree, id: usize, alpha: f64, collapsed: &mut [bool], collapse_alpha: &mut [f64]) {
    if collapse_alpha[id] > alpha {
        collapse_alpha[id] = alpha;
    }
    collapsed[id] = true;
    if let Some(s) = &tree.nodes[id].split {
        for child in [s.left, s.right] {
            if !tree.nodes[child].is_leaf() {
                collapse_below(tree, child, alpha, collapsed, collapse_alpha);
            }
        }
    }
}

/// Whether no proper ancestor of `id` is collapsed.
fn reachable(tree: &Tree, collapsed: &[bool], id: usize) -> bool {
    let mut cur = 0;
    while cur != id {
        if collapsed[cur] {
            return false;
        }
        let Some(s) = &tree.nodes[cur].split else {
            return false;
        };
        cur = if id >= s.right { s.right } else { s.left };
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Layout;
    use crate::splitter::{ResponseScale, SplitRule};
    use crate::tree::{Method, Node, Schema, Split, Summary};

    fn node(id: usize, sse: f64, split: Option<(usize, usize)>) -> Node {
        Node {
            id,
            depth: 0,
            units: Vec::new(),
            n: 1,
            sse,
            summary: Summary::Mean(vec![0.0]),
            split: split.map(|(left, right)| Split {
                rule: SplitRule::Numeric {
                    var: 0,
                    threshold: id as f64,
                    missing_goes_left: true,
                    all_missing_split: false,
                },
                left,
                right,
                gain: 0.0,
            }),
        }
    }

    fn tree(nodes: Vec<Node>) -> Tree {
        Tree {
            method: Method::Guide,
            layout: Layout::Multiresponse,
            schema: Schema {
                predictors: vec![],
                responses: vec!["y".into()],
            },
            scale: ResponseScale::unit(1),
            nodes,
        }
    }

    #[test]
    fn single_node() {
        let s = prune_sequence(&tree(vec![node(0, 5.0, None)]));
        assert_eq!(s.steps.len(), 1);
        assert_eq!(s.steps[0].alpha, 0.0);
    }

    #[test]
    fn hand_computed_three_leaf_tree() {
        // root(100) -> [a(30) -> 10, 10], 40
        // g(a) = (30 - 20) / 1 = 10, g(root) = (100 - 60) / 2 = 20
        // after collapsing a: g(root) = (100 - 70) / 1 = 30
        let t = tree(vec![
            node(0, 100.0, Some((1, 4))),
            node(1, 30.0, Some((2, 3))),
            node(2, 10.0, None),
            node(3, 10.0, None),
            node(4, 40.0, None),
        ]);
        let s = prune_sequence(&t);
        let alphas: Vec<f64> = s.steps.iter().map(|x| x.alpha).collect();
        assert_eq!(alphas, vec![0.0, 10.0, 30.0]);
        let leaves: Vec<usize> = s.steps.iter().map(|x| x.n_leaves).collect();
        assert_eq!(leaves, vec![3, 2, 1]);
        let sse: Vec<f64> = s.steps.iter().map(|x| x.train_sse).collect();
        assert_eq!(sse, vec![60.0, 70.0, 100.0]);
        assert_eq!(s.collapse_alpha[1], 10.0);
        assert_eq!(s.collapse_alpha[0], 30.0);
        assert_eq!(s.subtree(&t, 1).nodes.len(), 3);
    }

    #[test]
    fn weaker_ancestor_takes_descendants_along() {
        // g(root) = (100 - 95) / 2 = 2.5 < g(a) = (60 - 50) / 1 = 10
        let t = tree(vec![
            node(0, 100.0, Some((1, 4))),
            node(1, 60.0, Some((2, 3))),
            node(2, 25.0, None),
            node(3, 25.0, None),
            node(4, 45.0, None),
        ]);
        let s = prune_sequence(&t);
        assert_eq!(s.steps.len(), 2);
        assert_eq!(s.steps[1].alpha, 2.5);
        assert_eq!(s.collapse_alpha[1], 2.5);
    }

    #[test]
    fn zero_gain_links_fold_into_first_step() {
        let t = tree(vec![
            node(0, 100.0, Some((1, 2))),
            node(1, 40.0, None),
            node(2, 20.0, Some((3, 4))),
            node(3, 10.0, None),
            node(4, 10.0, None),
        ]);
        let s = prune_sequence(&t);
        assert_eq!(s.steps[0].alpha, 0.0);
        assert_eq!(s.steps[0].n_leaves, 2);
        assert_eq!(s.steps[1].alpha, 40.0);
    }
}
