//! Seeded random problem instances for tests, benchmarks and solver
//! comparisons.

use std::ops::RangeInclusive;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::impurity::{Constraint, Impurity};
use crate::objective::ProblemSpec;
use crate::prob::{ChannelMatrix, JointDistribution, SoftQuantizer};

/// The 4-point binary instance used throughout the docs and tests.
///
/// Posteriors `p(X_1 | Y)` are `[0.8, 0.6, 0.2, 0.4]`, every `p(Y_m) = 0.25`.
pub fn e1_joint() -> JointDistribution {
    JointDistribution::from_rows(&[vec![0.20, 0.15, 0.05, 0.10], vec![0.05, 0.10, 0.20, 0.15]])
        .expect("valid joint")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    None,
    Entropy,
    Linear,
}

/// Sampling ranges for [`random_spec`].
#[derive(Debug, Clone)]
pub struct SpecRanges {
    pub sources: RangeInclusive<usize>,
    pub points: RangeInclusive<usize>,
    pub cells: RangeInclusive<usize>,
    pub outputs: RangeInclusive<usize>,
    pub betas: Vec<f64>,
    pub impurities: Vec<Impurity>,
    pub constraints: Vec<ConstraintKind>,
    /// Probability that a joint entry is exactly zero.
    pub zero_prob: f64,
}

impl Default for SpecRanges {
    fn default() -> Self {
        Self {
            sources: 2..=3,
            points: 3..=8,
            cells: 1..=3,
            outputs: 1..=3,
            betas: vec![0.1, 1.0, 10.0],
            impurities: vec![Impurity::Entropy, Impurity::Gini],
            constraints: vec![
                ConstraintKind::None,
                ConstraintKind::Entropy,
                ConstraintKind::Linear,
            ],
            zero_prob: 0.1,
        }
    }
}

/// Random `N x M` joint with every column populated.
pub fn random_joint<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    zero_prob: f64,
) -> JointDistribution {
    let mut raw = Array2::from_shape_fn((n, m), |_| {
        if rng.gen_bool(zero_prob) {
            0.0
        } else {
            rng.gen_range(0.01..1.0)
        }
    });
    for mut col in raw.columns_mut() {
        if col.sum() == 0.0 {
            let n_pick = rng.gen_range(0..n);
            col[n_pick] = rng.gen_range(0.01..1.0);
        }
    }
    let total = raw.sum();
    JointDistribution::validate(raw / total).expect("valid joint")
}

/// Random row-stochastic channel. When `k == h` the identity is returned
/// half the time.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, k: usize, h: usize) -> ChannelMatrix {
    if k == h && rng.gen_bool(0.5) {
        return ChannelMatrix::identity(k);
    }
    let mut raw = Array2::from_shape_fn((k, h), |_| rng.gen_range(0.0..1.0f64).powi(2));
    for mut row in raw.rows_mut() {
        let total = row.sum();
        if total == 0.0 {
            row[0] = 1.0;
        } else {
            row /= total;
        }
    }
    ChannelMatrix::new(raw).expect("valid channel")
}

pub fn random_constraint<R: Rng + ?Sized>(rng: &mut R, kind: ConstraintKind, k: usize) -> Constraint {
    match kind {
        ConstraintKind::None => Constraint::None,
        ConstraintKind::Entropy => Constraint::Entropy,
        ConstraintKind::Linear => Constraint::Linear((0..k).map(|_| rng.gen_range(0.0..2.0)).collect()),
    }
}

pub fn random_spec<R: Rng + ?Sized>(rng: &mut R, ranges: &SpecRanges) -> ProblemSpec {
    let n = rng.gen_range(ranges.sources.clone());
    let m = rng.gen_range(ranges.points.clone());
    let k = rng.gen_range(ranges.cells.clone());
    let h = rng.gen_range(ranges.outputs.clone());
    let joint = random_joint(rng, n, m, ranges.zero_prob);
    let channel = random_channel(rng, k, h);
    let beta = *ranges.betas.choose(rng).expect("at least one beta");
    let impurity = *ranges.impurities.choose(rng).expect("at least one impurity");
    let kind = *ranges.constraints.choose(rng).expect("at least one constraint");
    let constraint = random_constraint(rng, kind, k);
    ProblemSpec::new(joint, channel, k, impurity, constraint, beta).expect("valid spec")
}

/// Uniform random labels.
pub fn random_labels<R: Rng + ?Sized>(rng: &mut R, m: usize, k: usize) -> Vec<usize> {
    (0..m).map(|_| rng.gen_range(0..k)).collect()
}

/// Random soft quantizer. Rows are drawn with a skew so that both
/// near-uniform and near-hard rows show up.
pub fn random_soft<R: Rng + ?Sized>(rng: &mut R, m: usize, k: usize) -> SoftQuantizer {
    let power = [1, 3, 8][rng.gen_range(0..3)];
    let mut w = Array2::from_shape_fn((m, k), |_| rng.gen_range(0.0..1.0f64).powi(power));
    for mut row in w.rows_mut() {
        let total = row.sum();
        if total == 0.0 {
            row[0] = 1.0;
        } else {
            row /= total;
        }
    }
    SoftQuantizer::new(w).expect("valid soft quantizer")
}
