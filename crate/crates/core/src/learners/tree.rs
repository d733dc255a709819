//! CART trees grown greedily on axis-aligned thresholds.
//!
//! Classification trees use weighted Gini impurity; regression trees (used by
//! gradient boosting) use weighted squared error. Categorical columns are
//! split ordinally on their integer index.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_width, Classifier};
use crate::error::{OrdError, Result};
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::Count(m) => m.clamp(1, n_features.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum number of training rows on each side of a split.
    pub min_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 12,
            min_leaf: 2,
            max_features: MaxFeatures::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { value: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
}

impl DecisionTree {
    /// Leaf reached by `row`.
    pub fn leaf_value(&self, row: ArrayView1<'_, f64>) -> &[f64] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, id: usize) -> usize {
            match &t.nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Scalar leaf output; used by regression trees.
    pub fn predict_value(&self, row: ArrayView1<'_, f64>) -> f64 {
        self.leaf_value(row)[0]
    }
}

impl Classifier for DecisionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<[f64; 2]>> {
        check_width(self.n_features, x)?;
        Ok(x.rows()
            .into_iter()
            .map(|r| {
                let v = self.leaf_value(r);
                [v[0], v[1]]
            })
            .collect())
    }
}

/// Column-major copy of a feature matrix, shared by all trees of an ensemble.
pub(crate) struct Columns {
    pub cols: Vec<Vec<f64>>,
}

impl Columns {
    pub fn new(x: ArrayView2<'_, f64>) -> Self {
        Columns {
            cols: x.columns().into_iter().map(|c| c.to_vec()).collect(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.cols.len()
    }
}

/// Additive sufficient statistics of a node: `[w0, w1, w2]` class weights for
/// Gini, `[w, wy, wy^2]` for squared error.
pub(crate) type Stats = [f64; 3];

pub(crate) trait SplitTarget: Sync {
    fn stats_of(&self, row: usize) -> Stats;
    /// Impurity times node weight; lower is purer.
    fn mass(&self, s: &Stats) -> f64;
    fn weight(&self, s: &Stats) -> f64;
    fn is_pure(&self, s: &Stats) -> bool;
    fn leaf(&self, rows: &[usize], s: &Stats) -> Vec<f64>;
}

pub(crate) struct GiniTarget<'a> {
    pub labels: &'a [u8],
    pub weights: &'a [f64],
}

impl SplitTarget for GiniTarget<'_> {
    fn stats_of(&self, row: usize) -> Stats {
        let mut s = [0.0; 3];
        s[self.labels[row] as usize] = self.weights[row];
        s
    }

    fn mass(&self, s: &Stats) -> f64 {
        let w = s[0] + s[1] + s[2];
        if w <= 0.0 {
            return 0.0;
        }
        (w - (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]) / w).max(0.0)
    }

    fn weight(&self, s: &Stats) -> f64 {
        s[0] + s[1] + s[2]
    }

    fn is_pure(&self, s: &Stats) -> bool {
        s.iter().filter(|&&c| c > 0.0).count() <= 1
    }

    fn leaf(&self, _rows: &[usize], s: &Stats) -> Vec<f64> {
        let w = s[0] + s[1];
        if w <= 0.0 {
            return vec![0.5, 0.5];
        }
        let p1 = s[1] / w;
        vec![1.0 - p1, p1]
    }
}

/// Squared-error splits on `targets`; leaves are computed by `leaf_fn`.
pub(crate) struct RegressionTarget<'a, F: Fn(&[usize]) -> f64 + Sync> {
    pub targets: &'a [f64],
    pub leaf_fn: F,
}

impl<F: Fn(&[usize]) -> f64 + Sync> SplitTarget for RegressionTarget<'_, F> {
    fn stats_of(&self, row: usize) -> Stats {
        let y = self.targets[row];
        [1.0, y, y * y]
    }

    fn mass(&self, s: &Stats) -> f64 {
        if s[0] <= 0.0 {
            return 0.0;
        }
        (s[2] - s[1] * s[1] / s[0]).max(0.0)
    }

    fn weight(&self, s: &Stats) -> f64 {
        s[0]
    }

    fn is_pure(&self, s: &Stats) -> bool {
        self.mass(s) <= 1e-14 * s[2].abs().max(1e-300)
    }

    fn leaf(&self, rows: &[usize], _s: &Stats) -> Vec<f64> {
        vec![(self.leaf_fn)(rows)]
    }
}

fn add(a: &mut Stats, b: &Stats) {
    a[0] += b[0];
    a[1] += b[1];
    a[2] += b[2];
}

fn sub(a: &Stats, b: &Stats) -> Stats {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    /// Larger gain wins; near-ties go to the lower column, then lower threshold.
    fn beats(&self, other: &Option<Candidate>, eps: f64) -> bool {
        match other {
            None => true,
            Some(o) => {
                if self.gain > o.gain + eps {
                    true
                } else if self.gain >= o.gain - eps {
                    (self.feature, self.threshold) < (o.feature, o.threshold)
                } else {
                    false
                }
            }
        }
    }
}

pub(crate) fn grow<T: SplitTarget>(
    cols: &Columns,
    rows: Vec<usize>,
    target: &T,
    params: &TreeParams,
    mut rng: Option<&mut Rng>,
) -> DecisionTree {
    let n_features = cols.n_features();
    let m = params.max_features.resolve(n_features);
    let min_leaf = params.min_leaf.max(1);
    let mut nodes: Vec<Node> = vec![Node::Leaf { value: Vec::new() }];
    let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, rows, 0)];
    let mut buf: Vec<(f64, usize)> = Vec::new();
    let mut order: Vec<usize> = (0..n_features).collect();

    while let Some((id, rows, depth)) = stack.pop() {
        let mut parent = [0.0; 3];
        for &r in &rows {
            add(&mut parent, &target.stats_of(r));
        }
        let stop = depth >= params.max_depth || rows.len() < 2 * min_leaf || target.is_pure(&parent);
        let best = if stop {
            None
        } else {
            let parent_mass = target.mass(&parent);
            let eps = 1e-12 * target.weight(&parent).abs().max(1e-300);
            if m < n_features {
                if let Some(r) = rng.as_deref_mut() {
                    order.shuffle(r);
                }
            }
            let mut best: Option<Candidate> = None;
            let mut visited = 0;
            for &f in order.iter() {
                if visited == m {
                    break;
                }
                let col = &cols.cols[f];
                buf.clear();
                buf.extend(rows.iter().map(|&r| (col[r], r)));
                buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                if buf[0].0 == buf[buf.len() - 1].0 {
                    continue;
                }
                visited += 1;
                let n = buf.len();
                let mut left = [0.0; 3];
                for i in 0..n - 1 {
                    add(&mut left, &target.stats_of(buf[i].1));
                    let n_left = i + 1;
                    if buf[i].0 == buf[i + 1].0 || n_left < min_leaf || n - n_left < min_leaf {
                        continue;
                    }
                    let right = sub(&parent, &left);
                    let gain = parent_mass - target.mass(&left) - target.mass(&right);
                    let (lo, hi) = (buf[i].0, buf[i + 1].0);
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    let cand = Candidate { gain, feature: f, threshold };
                    if cand.beats(&best, eps) {
                        best = Some(cand);
                    }
                }
            }
            best.filter(|b| b.gain > eps)
        };

        match best {
            None => nodes[id] = Node::Leaf { value: target.leaf(&rows, &parent) },
            Some(c) => {
                let col = &cols.cols[c.feature];
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| col[i] <= c.threshold);
                let left = nodes.len();
                let right = left + 1;
                nodes.push(Node::Leaf { value: Vec::new() });
                nodes.push(Node::Leaf { value: Vec::new() });
                nodes[id] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right,
                };
                stack.push((right, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
        }
    }
    DecisionTree { nodes, n_features }
}

/// Weighted-Gini classification tree on binary labels.
pub fn fit_tree(x: ArrayView2<'_, f64>, y: &[u8], weights: &[f64], params: &TreeParams) -> Result<DecisionTree> {
    validate_xyw(x, y, weights)?;
    let cols = Columns::new(x);
    let target = GiniTarget { labels: y, weights };
    Ok(grow(&cols, (0..y.len()).collect(), &target, params, None))
}

pub(crate) fn validate_xyw(x: ArrayView2<'_, f64>, y: &[u8], weights: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(OrdError::invalid("cannot fit on an empty training set"));
    }
    if x.nrows() != y.len() || weights.len() != y.len() {
        return Err(OrdError::invalid(format!(
            "row count mismatch: X has {}, y has {}, weights has {}",
            x.nrows(),
            y.len(),
            weights.len()
        )));
    }
    if y.iter().any(|&l| l > 1) {
        return Err(OrdError::invalid("learners take binary labels"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(OrdError::invalid("weights must be finite and non-negative"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn gini_mass(c0: f64, c1: f64) -> f64 {
        let w = c0 + c1;
        if w == 0.0 {
            0.0
        } else {
            w - (c0 * c0 + c1 * c1) / w
        }
    }

    /// Brute force over every midpoint of every column; returns (gain, col, thr).
    fn brute_best_split(x: &Array2<f64>, y: &[u8], w: &[f64]) -> (f64, usize, f64) {
        let mut best = (f64::NEG_INFINITY, 0, 0.0);
        let (p0, p1) = y.iter().zip(w).fold((0.0, 0.0), |(a, b), (&l, &wi)| {
            if l == 0 { (a + wi, b) } else { (a, b + wi) }
        });
        for j in 0..x.ncols() {
            let mut vals: Vec<f64> = x.column(j).to_vec();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for k in 0..vals.len().saturating_sub(1) {
                let t = (vals[k] + vals[k + 1]) / 2.0;
                let (mut l0, mut l1) = (0.0, 0.0);
                for i in 0..y.len() {
                    if x[[i, j]] <= t {
                        if y[i] == 0 { l0 += w[i] } else { l1 += w[i] }
                    }
                }
                let gain = gini_mass(p0, p1) - gini_mass(l0, l1) - gini_mass(p0 - l0, p1 - l1);
                if gain > best.0 + 1e-12 {
                    best = (gain, j, t);
                }
            }
        }
        best
    }

    fn root_split(t: &DecisionTree) -> (usize, f64) {
        match &t.nodes[0] {
            Node::Split { feature, threshold, .. } => (*feature, *threshold),
            Node::Leaf { .. } => panic!("root is a leaf"),
        }
    }

    #[test]
    fn depth_one_split_on_four_points() {
        let x = array![[1.0], [2.0], [3.0], [4.0]];
        let y = [0, 0, 1, 1];
        let w = [1.0; 4];
        let (gain, col, thr) = brute_best_split(&x, &y, &w);
        assert!(gain > 0.0);
        let params = TreeParams { max_depth: 1, min_leaf: 1, ..Default::default() };
        let t = fit_tree(x.view(), &y, &w, &params).unwrap();
        assert_eq!(root_split(&t), (col, thr));
        assert_eq!(thr, 2.5);
        let p = t.predict_proba(x.view()).unwrap();
        assert_eq!(p[0], [1.0, 0.0]);
        assert_eq!(p[3], [0.0, 1.0]);
    }

    #[test]
    fn pure_labels_give_single_leaf() {
        let x = array![[1.0], [2.0], [3.0]];
        let t = fit_tree(x.view(), &[1, 1, 1], &[1.0; 3], &TreeParams::default()).unwrap();
        assert_eq!(t.nodes, vec![Node::Leaf { value: vec![0.0, 1.0] }]);
    }

    #[test]
    fn heavy_points_choose_the_split() {
        // XOR-ish layout: the two heavy points differ only along column 1.
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let y = [0, 1, 1, 0];
        let w = [1.0, 1.0, 1e-6, 1e-6];
        let (_, col, thr) = brute_best_split(&x, &y, &w);
        assert_eq!((col, thr), (1, 0.5));
        let params = TreeParams { max_depth: 1, min_leaf: 1, ..Default::default() };
        let t = fit_tree(x.view(), &y, &w, &params).unwrap();
        assert_eq!(root_split(&t), (col, thr));
    }

    #[test]
    fn ties_go_to_lowest_column() {
        // both columns separate the classes perfectly
        let x = array![[0.0, 5.0], [1.0, 6.0], [2.0, 7.0], [3.0, 8.0]];
        let params = TreeParams { max_depth: 1, min_leaf: 1, ..Default::default() };
        let t = fit_tree(x.view(), &[0, 0, 1, 1], &[1.0; 4], &params).unwrap();
        assert_eq!(root_split(&t), (0, 1.5));
    }

    #[test]
    fn empty_and_mismatched_inputs_error() {
        let x = Array2::<f64>::zeros((0, 2));
        assert!(fit_tree(x.view(), &[], &[], &TreeParams::default()).is_err());
        let x = array![[1.0], [2.0]];
        assert!(fit_tree(x.view(), &[0], &[1.0], &TreeParams::default()).is_err());
    }

    #[test]
    fn leaves_are_distributions_and_children_partition_rows() {
        use crate::seed::rng_from_seed;
        use rand::Rng;
        let mut rng = rng_from_seed(5);
        let n = 200;
        let x = Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0));
        let y: Vec<u8> = (0..n).map(|i| u8::from(x[[i, 0]] + 0.3 * x[[i, 1]] > 0.1)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
        let t = fit_tree(x.view(), &y, &w, &TreeParams::default()).unwrap();
        for node in &t.nodes {
            if let Node::Leaf { value } = node {
                assert!(value.iter().all(|&p| p >= 0.0));
                assert!((value.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        // every row reaches exactly one leaf: count leaf arrivals
        let mut arrivals = 0;
        for r in x.rows() {
            let _ = t.leaf_value(r);
            arrivals += 1;
        }
        assert_eq!(arrivals, n);
        assert!(t.depth() <= 12);
    }
}
