//! Probability containers and the linear forward model.
//!
//! A quantizer maps the data alphabet `Y` (size `M`) onto `K` cells `Z`; the
//! cells are then sent through a row-stochastic relay channel onto `H`
//! outputs `T`. Everything downstream only ever needs the joints
//! `p(X, Z_k)` and `p(X, T_h)`, which are linear in the quantizer.
//!
//! Matrices are stored as `ndarray::Array2<f64>` with the source symbol `X_n`
//! on the row axis, so column `m` of a [`JointDistribution`] is the vector
//! `p(X, Y_m)`.

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

/// Tolerance for probability invariants (sums, row-stochasticity).
pub const PROB_TOL: f64 = 1e-9;

/// Inputs whose total is within this distance of 1 are renormalized instead
/// of rejected.
pub const INPUT_TOL: f64 = 1e-6;

/// The joint pmf `p(X, Y)` as an `N x M` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    entries: Array2<f64>,
    p_x: Vec<f64>,
    p_y: Vec<f64>,
}

impl JointDistribution {
    /// Validates a raw nonnegative `N x M` matrix.
    ///
    /// A total within [`INPUT_TOL`] of 1 is rescaled to sum to exactly 1;
    /// anything further away is rejected.
    pub fn validate(raw: Array2<f64>) -> Result<Self> {
        let (n, m) = raw.dim();
        if n < 2 || m < 1 {
            return Err(Error::DimensionMismatch(format!(
                "joint needs at least 2 rows and 1 column, got {n} x {m}"
            )));
        }
        check_entries(&raw)?;
        let total = raw.sum();
        if (total - 1.0).abs() > INPUT_TOL {
            return Err(Error::SumNotOne { total });
        }
        let entries = raw / total;
        let p_y: Vec<f64> = entries.sum_axis(Axis(0)).to_vec();
        if let Some(index) = p_y.iter().position(|&w| w <= 0.0) {
            return Err(Error::ZeroColumn { index });
        }
        let p_x = entries.sum_axis(Axis(1)).to_vec();
        Ok(Self { entries, p_x, p_y })
    }

    /// Builds from row-major nested vectors (one row per source symbol).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::validate(rows_to_array(rows)?)
    }

    /// Number of source symbols `N`.
    pub fn num_sources(&self) -> usize {
        self.entries.nrows()
    }

    /// Number of data symbols `M`.
    pub fn num_points(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// `p(X, Y_m)`.
    pub fn column(&self, m: usize) -> ArrayView1<'_, f64> {
        self.entries.column(m)
    }

    pub fn p_x(&self) -> &[f64] {
        &self.p_x
    }

    pub fn p_y(&self) -> &[f64] {
        &self.p_y
    }

    /// Posterior matrix: column `m` is `p(X | Y_m)`.
    pub fn posteriors(&self) -> Array2<f64> {
        let mut post = self.entries.clone();
        for (mut col, &w) in post.columns_mut().into_iter().zip(&self.p_y) {
            col /= w;
        }
        post
    }

    /// Posterior `p(X_1 | Y_m)` for every `m`; the scalar coordinate that
    /// orders points when the source is binary.
    pub fn first_posterior(&self) -> Vec<f64> {
        self.entries
            .row(0)
            .iter()
            .zip(&self.p_y)
            .map(|(&a, &w)| a / w)
            .collect()
    }
}

/// Row-stochastic `K x H` relay channel, `A[k][h] = p(T_h | Z_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: Array2<f64>,
}

impl ChannelMatrix {
    /// Validates a raw channel. Rows within [`INPUT_TOL`] of 1 are rescaled.
    pub fn new(raw: Array2<f64>) -> Result<Self> {
        let (k, h) = raw.dim();
        if k < 1 || h < 1 {
            return Err(Error::DimensionMismatch(format!(
                "channel needs at least one row and column, got {k} x {h}"
            )));
        }
        check_entries(&raw)?;
        let mut entries = raw;
        for (row, mut r) in entries.rows_mut().into_iter().enumerate() {
            let total = r.sum();
            if (total - 1.0).abs() > INPUT_TOL {
                return Err(Error::RowNotStochastic { row, total });
            }
            r /= total;
        }
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows_to_array(rows)?)
    }

    /// The noiseless channel with `H = K`.
    pub fn identity(k: usize) -> Self {
        Self {
            entries: Array2::eye(k),
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.entries.nrows()
    }

    pub fn num_outputs(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// True when the channel is exactly the `K x K` identity.
    pub fn is_identity(&self) -> bool {
        let (k, h) = self.entries.dim();
        k == h
            && self
                .entries
                .indexed_iter()
                .all(|((i, j), &a)| a == if i == j { 1.0 } else { 0.0 })
    }
}

/// Deterministic assignment of each data point to one of `num_cells` cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HardQuantizer {
    labels: Vec<usize>,
    num_cells: usize,
}

impl HardQuantizer {
    pub fn new(labels: Vec<usize>, num_cells: usize) -> Result<Self> {
        if num_cells == 0 {
            return Err(Error::InvalidSpec("quantizer needs at least one cell".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&k| k >= num_cells) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                limit: num_cells,
            });
        }
        Ok(Self { labels, num_cells })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_points(&self) -> usize {
        self.labels.len()
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    /// The equivalent 0/1 soft quantizer.
    pub fn to_soft(&self) -> SoftQuantizer {
        let mut w = Array2::zeros((self.labels.len(), self.num_cells));
        for (m, &k) in self.labels.iter().enumerate() {
            w[[m, k]] = 1.0;
        }
        SoftQuantizer { weights: w }
    }
}

/// Stochastic assignment: `weights[m][k] = p(Z_k | Y_m)`, rows sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftQuantizer {
    weights: Array2<f64>,
}

impl SoftQuantizer {
    pub fn new(weights: Array2<f64>) -> Result<Self> {
        if weights.ncols() == 0 {
            return Err(Error::InvalidSpec("quantizer needs at least one cell".into()));
        }
        for ((row, col), &w) in weights.indexed_iter() {
            if w < 0.0 {
                return Err(Error::NegativeEntry { row, col, value: w });
            }
            if !(w <= 1.0) {
                return Err(Error::OutOfRange(w));
            }
        }
        for (row, r) in weights.rows().into_iter().enumerate() {
            let total = r.sum();
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::RowNotStochastic { row, total });
            }
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn num_cells(&self) -> usize {
        self.weights.ncols()
    }

    pub fn num_points(&self) -> usize {
        self.weights.nrows()
    }
}

/// Hard or soft quantizer `Q: Y -> Z`.
#[derive(Debug, Clone, PartialEq)]
pub enum Quantizer {
    Hard(HardQuantizer),
    Soft(SoftQuantizer),
}

impl Quantizer {
    pub fn num_cells(&self) -> usize {
        match self {
            Quantizer::Hard(q) => q.num_cells(),
            Quantizer::Soft(q) => q.num_cells(),
        }
    }

    pub fn num_points(&self) -> usize {
        match self {
            Quantizer::Hard(q) => q.num_points(),
            Quantizer::Soft(q) => q.num_points(),
        }
    }

    pub fn to_soft(&self) -> SoftQuantizer {
        match self {
            Quantizer::Hard(q) => q.to_soft(),
            Quantizer::Soft(q) => q.clone(),
        }
    }
}

impl From<HardQuantizer> for Quantizer {
    fn from(q: HardQuantizer) -> Self {
        Quantizer::Hard(q)
    }
}

impl From<SoftQuantizer> for Quantizer {
    fn from(q: SoftQuantizer) -> Self {
        Quantizer::Soft(q)
    }
}

/// `p(X, Z_k)` as an `N x K` matrix plus the cell masses `p(Z_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterJoints {
    entries: Array2<f64>,
    mass: Vec<f64>,
}

impl ClusterJoints {
    pub fn from_entries(entries: Array2<f64>) -> Self {
        let mass = entries.sum_axis(Axis(0)).to_vec();
        Self { entries, mass }
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn num_cells(&self) -> usize {
        self.entries.ncols()
    }
}

/// `p(X, T_h)` as an `N x H` matrix plus the output masses `p(T_h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputJoints {
    entries: Array2<f64>,
    mass: Vec<f64>,
}

impl OutputJoints {
    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn num_outputs(&self) -> usize {
        self.entries.ncols()
    }
}

/// `p(X_n, Z_k) = sum_m p(X_n, Y_m) p(Z_k | Y_m)`. Empty cells give zero columns.
pub fn push_to_clusters(joint: &JointDistribution, q: &Quantizer) -> Result<ClusterJoints> {
    if q.num_points() != joint.num_points() {
        return Err(Error::DimensionMismatch(format!(
            "quantizer covers {} points, joint has {}",
            q.num_points(),
            joint.num_points()
        )));
    }
    let entries = match q {
        Quantizer::Hard(hard) => {
            let mut c = Array2::zeros((joint.num_sources(), hard.num_cells()));
            for (m, &k) in hard.labels().iter().enumerate() {
                let mut col = c.column_mut(k);
                col += &joint.column(m);
            }
            c
        }
        Quantizer::Soft(soft) => joint.entries().dot(soft.weights()),
    };
    Ok(ClusterJoints::from_entries(entries))
}

/// `p(X_n, T_h) = sum_k p(X_n, Z_k) A[k][h]`.
pub fn push_through_channel(
    clusters: &ClusterJoints,
    channel: &ChannelMatrix,
) -> Result<OutputJoints> {
    if clusters.num_cells() != channel.num_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "{} cells but channel has {} inputs",
            clusters.num_cells(),
            channel.num_inputs()
        )));
    }
    let entries = clusters.entries().dot(channel.entries());
    let mass = entries.sum_axis(Axis(0)).to_vec();
    Ok(OutputJoints { entries, mass })
}

fn check_entries(raw: &Array2<f64>) -> Result<()> {
    for ((row, col), &value) in raw.indexed_iter() {
        if !value.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "non-finite entry at ({row}, {col})"
            )));
        }
        if value < 0.0 {
            return Err(Error::NegativeEntry { row, col, value });
        }
    }
    Ok(())
}

pub(crate) fn rows_to_array(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(r) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch(format!(
            "row {r} has {} entries, row 0 has {ncols}",
            rows[r].len()
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), ncols), flat)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))
}
