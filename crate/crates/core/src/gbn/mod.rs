//! Gaussian Bayesian networks over motion primitives.
//!
//! Each node is a linear-Gaussian CPD in centred form,
//! `x_i | parents ~ N(mu_i + sum_j b_ij (x_j - mu_j), sigma_i^2)`, so the node
//! means are also the marginal means of the joint distribution.

mod io;
mod learn;
mod precision;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::GbnError;
use crate::gauss::{self, GaussianParams, RngStream};

pub use io::{format_number, format_significant, MODEL_HEADER, load_model, load_traces, model_from_csv, model_to_csv, save_model, save_traces, traces_from_csv, traces_to_csv};
pub use learn::{learned_chain, LearningState, DEFAULT_PRIOR_SCALE};
pub use precision::{extract, extract_banded, precision_chain, precision_recursive};

/// Conditional variances of the seven parking primitives, in node order.
pub const REFERENCE_VARIANCES: [f64; 7] = [0.0062, 0.0032, 0.0019, 0.022, 0.0008, 0.0178, 0.0013];

/// Dependence of each primitive on its predecessor: b21, b32, ..., b76.
pub const REFERENCE_COEFFICIENTS: [f64; 6] = [0.7968, -0.2086, 0.5475, -0.0045, 1.1920, -0.0968];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotionType {
    Drive,
    Turn,
}

impl MotionType {
    pub fn as_str(self) -> &'static str {
        match self {
            MotionType::Drive => "drive",
            MotionType::Turn => "turn",
        }
    }
}

impl FromStr for MotionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "drive" => Ok(MotionType::Drive),
            "turn" => Ok(MotionType::Turn),
            other => Err(format!("unknown motion type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }

    /// +1 for forward, -1 for backward. Turns use forward for counter-clockwise.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(format!("unknown motion direction `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbnNode {
    pub label: String,
    pub motion: MotionType,
    pub direction: Direction,
    pub mean: f64,
    pub variance: f64,
    /// `(parent index, coefficient)`, indices 0-based.
    pub parents: Vec<(usize, f64)>,
}

impl GbnNode {
    pub fn new(label: &str, motion: MotionType, direction: Direction, mean: f64, variance: f64) -> Self {
        Self {
            label: label.to_string(),
            motion,
            direction,
            mean,
            variance,
            parents: Vec::new(),
        }
    }

    pub fn with_parent(mut self, parent: usize, coefficient: f64) -> Self {
        self.parents.push((parent, coefficient));
        self
    }

    /// Coefficient on `parent`, 0 when it is not a parent.
    pub fn coefficient(&self, parent: usize) -> f64 {
        self.parents
            .iter()
            .filter(|(p, _)| *p == parent)
            .map(|(_, b)| *b)
            .sum()
    }
}

/// A validated network: nodes in topological order, unique labels, positive variances.
#[derive(Debug, Clone, PartialEq)]
pub struct Gbn {
    nodes: Vec<GbnNode>,
}

impl Gbn {
    pub fn new(nodes: Vec<GbnNode>) -> Result<Self, GbnError> {
        let mut seen = HashSet::new();
        for (i, node) in nodes.iter().enumerate() {
            if !(node.variance > 0.0 && node.variance.is_finite()) {
                return Err(GbnError::NonPositiveVariance {
                    node: i + 1,
                    variance: node.variance,
                });
            }
            if let Some(&(p, _)) = node.parents.iter().find(|(p, _)| *p >= i) {
                return Err(GbnError::NonTopological {
                    node: i + 1,
                    parent: p + 1,
                });
            }
            if !seen.insert(node.label.clone()) {
                return Err(GbnError::DuplicateLabel(node.label.clone()));
            }
        }
        Ok(Self { nodes })
    }

    /// Chain `x1 -> x2 -> ... -> xn`; `coefficients[k]` links node k+1 to node k.
    pub fn chain(
        layout: &[(&str, MotionType, Direction)],
        means: &[f64],
        variances: &[f64],
        coefficients: &[f64],
    ) -> Result<Self, GbnError> {
        let n = layout.len();
        if means.len() != n || variances.len() != n || coefficients.len() + 1 != n.max(1) {
            return Err(GbnError::Shape(format!(
                "chain of {n} nodes needs {n} means, {n} variances and {} coefficients",
                n.saturating_sub(1)
            )));
        }
        let nodes = layout
            .iter()
            .enumerate()
            .map(|(i, &(label, motion, direction))| {
                let node = GbnNode::new(label, motion, direction, means[i], variances[i]);
                if i == 0 {
                    node
                } else {
                    node.with_parent(i - 1, coefficients[i - 1])
                }
            })
            .collect();
        Self::new(nodes)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[GbnNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &GbnNode {
        &self.nodes[i]
    }

    pub fn means(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.mean).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.variance).collect()
    }

    /// Predecessor coefficients `b_{i+1,i}` of a chain, length n-1.
    pub fn chain_coefficients(&self) -> Vec<f64> {
        (1..self.len()).map(|i| self.nodes[i].coefficient(i - 1)).collect()
    }

    /// Every node depends on at most its immediate predecessor.
    pub fn is_chain(&self) -> bool {
        self.nodes
            .iter()
            .enumerate()
            .all(|(i, n)| n.parents.iter().all(|&(p, _)| i > 0 && p == i - 1))
    }

    /// Copy labels, motion types and directions from `template`.
    pub fn with_layout_of(mut self, template: &Gbn) -> Result<Self, GbnError> {
        if template.len() != self.len() {
            return Err(GbnError::SizeMismatch {
                expected: self.len(),
                found: template.len(),
            });
        }
        for (node, t) in self.nodes.iter_mut().zip(template.nodes()) {
            node.label = t.label.clone();
            node.motion = t.motion;
            node.direction = t.direction;
        }
        Ok(self)
    }

    /// Replace every variance, e.g. to build a near-deterministic model.
    pub fn with_variances(mut self, variance: f64) -> Result<Self, GbnError> {
        for n in &mut self.nodes {
            n.variance = variance;
        }
        Self::new(self.nodes)
    }

    /// Ancestral sample of the whole command vector.
    pub fn sample_commands(&self, rng: &mut RngStream) -> Vec<f64> {
        self.sample_given(&[], rng)
    }

    /// Sample the nodes after `prefix`, holding the first `prefix.len()` nodes at
    /// the given values. Exact because the prefix is closed under ancestors.
    pub fn sample_given(&self, prefix: &[f64], rng: &mut RngStream) -> Vec<f64> {
        let mut x: Vec<f64> = prefix.iter().copied().take(self.len()).collect();
        for i in x.len()..self.len() {
            let node = &self.nodes[i];
            let mean = self.conditional_mean(i, &x);
            x.push(gauss::sample(
                GaussianParams {
                    mean,
                    variance: node.variance,
                },
                rng,
            ));
        }
        x
    }

    /// Mean of node `i` given values for all of its parents.
    pub fn conditional_mean(&self, i: usize, values: &[f64]) -> f64 {
        let node = &self.nodes[i];
        node.mean
            + node
                .parents
                .iter()
                .map(|&(p, b)| b * (values[p] - self.nodes[p].mean))
                .sum::<f64>()
    }
}

impl fmt::Display for Gbn {
    /// Two-row blocks of coefficient and variance, four nodes per block.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for chunk_start in (0..self.len()).step_by(4) {
            let end = (chunk_start + 4).min(self.len());
            let mut coef_row = Vec::new();
            let mut var_row = Vec::new();
            for i in chunk_start..end {
                let node = &self.nodes[i];
                if i == 0 {
                    coef_row.push(format!("{:>8} {:>10}", "-", ""));
                } else {
                    let b = node.coefficient(i - 1);
                    coef_row.push(format!("{:>8} {:>10.4}", format!("b{}{}", i + 1, i), b));
                }
                var_row.push(format!("{:>8} {:>10.4}", format!("s2_{}", i + 1), node.variance));
            }
            writeln!(f, "{}", coef_row.join(" |"))?;
            writeln!(f, "{}", var_row.join(" |"))?;
        }
        Ok(())
    }
}

/// One recorded maneuver: primitive magnitudes in node order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace(pub Vec<f64>);

impl Trace {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Trace {
    fn from(v: Vec<f64>) -> Self {
        Trace(v)
    }
}

/// Unit-variance chain whose layout follows trace column labels: `l*` columns
/// are drives and `alpha*` columns turns, all forward.
pub fn layout_from_labels(labels: &[String]) -> Result<Gbn, GbnError> {
    let nodes = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let motion = if l.starts_with("alpha") { MotionType::Turn } else { MotionType::Drive };
            let node = GbnNode::new(l, motion, Direction::Forward, 0.0, 1.0);
            if i == 0 {
                node
            } else {
                node.with_parent(i - 1, 0.0)
            }
        })
        .collect();
    Gbn::new(nodes)
}

/// Default labels for a chain that alternates drive and turn primitives,
/// starting with a drive: l1, alpha1, l2, ...
pub fn alternating_layout(n: usize) -> Vec<(String, MotionType, Direction)> {
    (0..n)
        .map(|i| {
            if i % 2 == 0 {
                (format!("l{}", i / 2 + 1), MotionType::Drive, Direction::Backward)
            } else {
                (format!("alpha{}", i / 2 + 1), MotionType::Turn, Direction::Forward)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_chain() -> Gbn {
        Gbn::chain(
            &[
                ("l1", MotionType::Drive, Direction::Backward),
                ("alpha1", MotionType::Turn, Direction::Forward),
                ("l2", MotionType::Drive, Direction::Backward),
            ],
            &[0.5, 0.6, 0.4],
            &[0.01, 0.02, 0.03],
            &[0.8, -0.2],
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        let bad_var = GbnNode::new("a", MotionType::Drive, Direction::Forward, 0.0, 0.0);
        assert!(matches!(
            Gbn::new(vec![bad_var]),
            Err(GbnError::NonPositiveVariance { node: 1, .. })
        ));
        let a = GbnNode::new("a", MotionType::Drive, Direction::Forward, 0.0, 1.0);
        let b = GbnNode::new("b", MotionType::Drive, Direction::Forward, 0.0, 1.0).with_parent(1, 0.5);
        assert!(matches!(
            Gbn::new(vec![a.clone(), b]),
            Err(GbnError::NonTopological { node: 2, parent: 2 })
        ));
        assert!(matches!(
            Gbn::new(vec![a.clone(), a]),
            Err(GbnError::DuplicateLabel(_))
        ));
    }

    #[test]
    fn chain_shape() {
        let g = small_chain();
        assert!(g.is_chain());
        assert_eq!(g.chain_coefficients(), vec![0.8, -0.2]);
        let a = GbnNode::new("a", MotionType::Drive, Direction::Forward, 0.0, 1.0);
        let b = GbnNode::new("b", MotionType::Drive, Direction::Forward, 0.0, 1.0);
        let c = GbnNode::new("c", MotionType::Drive, Direction::Forward, 0.0, 1.0).with_parent(0, 1.0);
        assert!(!Gbn::new(vec![a, b, c]).unwrap().is_chain());
    }

    #[test]
    fn degenerate_sampling_returns_means() {
        let g = small_chain().with_variances(1e-18).unwrap();
        let mut rng = RngStream::new(4);
        let x = g.sample_commands(&mut rng);
        for (xi, mi) in x.iter().zip(g.means()) {
            assert!((xi - mi).abs() < 1e-6);
        }
    }

    #[test]
    fn conditioning_shifts_later_nodes() {
        let g = small_chain().with_variances(1e-18).unwrap();
        let mut rng = RngStream::new(4);
        // l1 came out 0.1 long: alpha1 should move by 0.8 * 0.1, l2 by -0.2 * 0.08.
        let x = g.sample_given(&[0.6], &mut rng);
        assert_eq!(x[0], 0.6);
        assert!((x[1] - 0.68).abs() < 1e-6);
        assert!((x[2] - (0.4 - 0.2 * 0.08)).abs() < 1e-6);
    }

    #[test]
    fn first_marginal_moments() {
        let g = small_chain();
        let mut rng = RngStream::new(8);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| g.sample_commands(&mut rng)[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 0.5).abs() < 3.0 * (0.01 / n as f64).sqrt());
        // var of sample variance ~ 2 sigma^4 / n
        assert!((var - 0.01).abs() < 3.0 * (2.0 * 0.01f64.powi(2) / n as f64).sqrt());
    }

    #[test]
    fn display_lays_out_coefficients_and_variances() {
        let text = small_chain().to_string();
        assert!(text.contains("b21"));
        assert!(text.contains("s2_3"));
    }

    #[test]
    fn alternating_labels() {
        let l = alternating_layout(7);
        let labels: Vec<&str> = l.iter().map(|x| x.0.as_str()).collect();
        assert_eq!(labels, ["l1", "alpha1", "l2", "alpha2", "l3", "alpha3", "l4"]);
    }
}
