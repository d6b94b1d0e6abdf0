//! The joint objective `beta * F(X, T) + G(p_Z)` and the per-point distance
//! that characterizes its local minima.
//!
//! For a hard partition, moving point `Y_m` from cell `q` to cell `s`
//! changes the objective at rate `D(Y_m, Z_s) - D(Y_m, Z_q)`, where
//!
//! ```text
//! D(Y_m, Z_k) = beta * sum_h A[k][h] * <c_h, p(X, Y_m)> + d_k * p(Y_m)
//! ```
//!
//! `c_h` is the gradient of the cell impurity at the output joint
//! `p(X, T_h)` and `d_k = g_k'(p(Z_k))`. Because the objective is concave in
//! the quantizer, this rate also bounds the change of the complete move, so
//! sending a point to a strictly nearer cell always lowers the objective.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::impurity::{Constraint, Impurity};
use crate::prob::{
    push_through_channel, push_to_clusters, ChannelMatrix, ClusterJoints, HardQuantizer,
    JointDistribution, OutputJoints, Quantizer, SoftQuantizer,
};

/// One fully specified optimization instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    joint: JointDistribution,
    channel: ChannelMatrix,
    num_cells: usize,
    impurity: Impurity,
    constraint: Constraint,
    beta: f64,
}

impl ProblemSpec {
    pub fn new(
        joint: JointDistribution,
        channel: ChannelMatrix,
        num_cells: usize,
        impurity: Impurity,
        constraint: Constraint,
        beta: f64,
    ) -> Result<Self> {
        if num_cells == 0 {
            return Err(Error::InvalidSpec("num_cells must be at least 1".into()));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidSpec(format!("beta must be positive, got {beta}")));
        }
        if channel.num_inputs() != num_cells {
            return Err(Error::DimensionMismatch(format!(
                "channel has {} inputs for {num_cells} cells",
                channel.num_inputs()
            )));
        }
        if let Constraint::Linear(w) = &constraint {
            if w.len() != num_cells {
                return Err(Error::DimensionMismatch(format!(
                    "{} linear constraint weights for {num_cells} cells",
                    w.len()
                )));
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidSpec("non-finite constraint weight".into()));
            }
        }
        Ok(Self {
            joint,
            channel,
            num_cells,
            impurity,
            constraint,
            beta,
        })
    }

    /// An instance over the noiseless channel (`H = K`).
    pub fn with_identity_channel(
        joint: JointDistribution,
        num_cells: usize,
        impurity: Impurity,
        constraint: Constraint,
        beta: f64,
    ) -> Result<Self> {
        Self::new(
            joint,
            ChannelMatrix::identity(num_cells),
            num_cells,
            impurity,
            constraint,
            beta,
        )
    }

    pub fn joint(&self) -> &JointDistribution {
        &self.joint
    }

    pub fn channel(&self) -> &ChannelMatrix {
        &self.channel
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_sources(&self) -> usize {
        self.joint.num_sources()
    }

    pub fn num_points(&self) -> usize {
        self.joint.num_points()
    }

    pub fn num_outputs(&self) -> usize {
        self.channel.num_outputs()
    }

    pub fn impurity(&self) -> Impurity {
        self.impurity
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Everything derived from one quantizer: joints, gradients and objective.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedState {
    pub cluster_joints: ClusterJoints,
    pub output_joints: OutputJoints,
    /// `N x H`; column `h` is the (clamped) gradient `c_h` at `p(X, T_h)`.
    pub output_gradients: Array2<f64>,
    /// `d_k` for each cell.
    pub constraint_derivatives: Vec<f64>,
    pub f_value: f64,
    pub g_value: f64,
    pub objective: f64,
}

/// Evaluates a hard or soft quantizer.
pub fn evaluate(spec: &ProblemSpec, q: &Quantizer) -> Result<EvaluatedState> {
    if q.num_cells() != spec.num_cells() {
        return Err(Error::DimensionMismatch(format!(
            "quantizer has {} cells, problem has {}",
            q.num_cells(),
            spec.num_cells()
        )));
    }
    let cluster_joints = push_to_clusters(spec.joint(), q)?;
    let output_joints = push_through_channel(&cluster_joints, spec.channel())?;

    let n = spec.num_sources();
    let f = spec.impurity();
    let mut output_gradients = Array2::zeros((n, spec.num_outputs()));
    let mut f_value = 0.0;
    let mut v = vec![0.0; n];
    let mut c = vec![0.0; n];
    for (h, col) in output_joints.entries().columns().into_iter().enumerate() {
        v.iter_mut().zip(col).for_each(|(a, &b)| *a = b);
        f_value += f.value(&v);
        f.gradient_clamped(&v, &mut c);
        output_gradients.column_mut(h).assign(&Array1::from(c.clone()));
    }

    let g = spec.constraint();
    let mass = cluster_joints.mass();
    let g_value = mass.iter().enumerate().map(|(k, &p)| g.value(k, p)).sum();
    let constraint_derivatives = mass
        .iter()
        .enumerate()
        .map(|(k, &p)| g.derivative(k, p))
        .collect();

    Ok(EvaluatedState {
        cluster_joints,
        output_joints,
        output_gradients,
        constraint_derivatives,
        f_value,
        g_value,
        objective: spec.beta() * f_value + g_value,
    })
}

fn check_indices(spec: &ProblemSpec, m: usize, k: usize) -> Result<()> {
    if m >= spec.num_points() {
        return Err(Error::IndexOutOfRange {
            index: m,
            limit: spec.num_points(),
        });
    }
    if k >= spec.num_cells() {
        return Err(Error::IndexOutOfRange {
            index: k,
            limit: spec.num_cells(),
        });
    }
    Ok(())
}

/// `beta * sum_h A[k][h] <c_h, x> + d_k * scale` for a source vector `x`.
fn raw_distance(state: &EvaluatedState, spec: &ProblemSpec, x: &[f64], scale: f64, k: usize) -> f64 {
    let a = spec.channel().entries();
    let mut acc = 0.0;
    for (h, c) in state.output_gradients.columns().into_iter().enumerate() {
        let akh = a[[k, h]];
        if akh != 0.0 {
            acc += akh * c.iter().zip(x).map(|(ci, xi)| ci * xi).sum::<f64>();
        }
    }
    spec.beta() * acc + state.constraint_derivatives[k] * scale
}

/// `D(Y_m, Z_k)` using the joint column `p(X, Y_m)`.
pub fn distance(state: &EvaluatedState, spec: &ProblemSpec, m: usize, k: usize) -> Result<f64> {
    check_indices(spec, m, k)?;
    let x = spec.joint().column(m).to_vec();
    Ok(raw_distance(state, spec, &x, spec.joint().p_y()[m], k))
}

/// `D'(Y_m, Z_k) = D(Y_m, Z_k) / p(Y_m)`, computed from the posterior.
pub fn scaled_distance(
    state: &EvaluatedState,
    spec: &ProblemSpec,
    m: usize,
    k: usize,
) -> Result<f64> {
    check_indices(spec, m, k)?;
    let w = spec.joint().p_y()[m];
    let post: Vec<f64> = spec.joint().column(m).iter().map(|x| x / w).collect();
    Ok(raw_distance(state, spec, &post, 1.0, k))
}

/// `D'(Y_m, Z_k)` for every cell.
pub fn scaled_distances(state: &EvaluatedState, spec: &ProblemSpec, m: usize) -> Result<Vec<f64>> {
    (0..spec.num_cells())
        .map(|k| scaled_distance(state, spec, m, k))
        .collect()
}

/// Index of the smallest value; anything within `tie_tol` of the minimum
/// counts as tied and the lowest index wins.
pub fn nearest_cell(distances: &[f64], tie_tol: f64) -> usize {
    let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    distances
        .iter()
        .position(|&d| d <= min + tie_tol)
        .unwrap_or(0)
}

/// [`nearest_cell`] with the tie tolerance scaled by the largest magnitude,
/// so that `D` and `D' = D / p(Y_m)` tie on the same cells.
pub fn nearest_cell_relative(distances: &[f64], rel_tol: f64) -> usize {
    let scale = distances.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    nearest_cell(distances, rel_tol * scale)
}

/// Objective after moving a fraction `t` of point `m` from cell `from` to
/// cell `to`. `t = 0` is `q` itself; `t = 1` is the fully reassigned
/// partition.
pub fn path_objective(
    spec: &ProblemSpec,
    q: &HardQuantizer,
    m: usize,
    from: usize,
    to: usize,
    t: f64,
) -> Result<f64> {
    check_indices(spec, m, to)?;
    if q.labels().get(m) != Some(&from) {
        return Err(Error::InvalidMove(format!("point {m} is not in cell {from}")));
    }
    if from == to {
        return Err(Error::InvalidMove("source and target cells coincide".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange(t));
    }
    let mut w = q.to_soft().weights().clone();
    w[[m, from]] = 1.0 - t;
    w[[m, to]] = t;
    let soft = SoftQuantizer::new(w)?;
    Ok(evaluate(spec, &soft.into())?.objective)
}

/// Scores hard partitions straight from per-cell joints, skipping the
/// gradient work done by [`evaluate`]. Used by the enumeration solvers.
pub(crate) struct CellScorer<'a> {
    spec: &'a ProblemSpec,
    outputs: Vec<f64>,
}

impl<'a> CellScorer<'a> {
    pub fn new(spec: &'a ProblemSpec) -> Self {
        Self {
            spec,
            outputs: vec![0.0; spec.num_outputs() * spec.num_sources()],
        }
    }

    /// `cells` is cell-major (`K x N`), `mass` holds `p(Z_k)`. Returns the
    /// objective.
    pub fn score(&mut self, cells: &[f64], mass: &[f64]) -> f64 {
        let n = self.spec.num_sources();
        let a = self.spec.channel().entries();
        self.outputs.iter_mut().for_each(|x| *x = 0.0);
        for (k, cell) in cells.chunks_exact(n).enumerate() {
            if mass[k] == 0.0 {
                continue;
            }
            for (h, out) in self.outputs.chunks_exact_mut(n).enumerate() {
                let akh = a[[k, h]];
                if akh != 0.0 {
                    out.iter_mut().zip(cell).for_each(|(o, &c)| *o += akh * c);
                }
            }
        }
        let f = self.spec.impurity();
        let f_value: f64 = self.outputs.chunks_exact(n).map(|v| f.value(v)).sum();
        let g = self.spec.constraint();
        let g_value: f64 = mass.iter().enumerate().map(|(k, &p)| g.value(k, p)).sum();
        self.spec.beta() * f_value + g_value
    }

    /// Objective of a hard labeling.
    pub fn score_labels(&mut self, labels: &[usize], cells: &mut [f64], mass: &mut [f64]) -> f64 {
        let n = self.spec.num_sources();
        let joint = self.spec.joint();
        cells.iter_mut().for_each(|x| *x = 0.0);
        mass.iter_mut().for_each(|x| *x = 0.0);
        for (m, &k) in labels.iter().enumerate() {
            let cell = &mut cells[k * n..(k + 1) * n];
            cell.iter_mut()
                .zip(joint.column(m))
                .for_each(|(c, &x)| *c += x);
            mass[k] += joint.p_y()[m];
        }
        self.score(cells, mass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e1_spec(constraint: Constraint) -> ProblemSpec {
        ProblemSpec::with_identity_channel(synth::e1_joint(), 2, Impurity::Entropy, constraint, 1.0)
            .unwrap()
    }

    fn hard(labels: &[usize], k: usize) -> Quantizer {
        HardQuantizer::new(labels.to_vec(), k).unwrap().into()
    }

    #[test]
    fn e1_objective() {
        let s = evaluate(&e1_spec(Constraint::None), &hard(&[0, 0, 1, 1], 2)).unwrap();
        assert!((s.f_value - 0.881291).abs() < 1e-6);
        assert_eq!(s.objective, s.f_value);

        let s = evaluate(&e1_spec(Constraint::Entropy), &hard(&[0, 0, 1, 1], 2)).unwrap();
        assert!((s.g_value - 1.0).abs() < 1e-12);
        assert!((s.objective - 1.881291).abs() < 1e-6);
        assert!((s.objective - (s.f_value + s.g_value)).abs() <= 1e-12);
    }

    #[test]
    fn single_cell_collapse() {
        let spec = ProblemSpec::with_identity_channel(
            synth::e1_joint(),
            1,
            Impurity::Entropy,
            Constraint::None,
            1.0,
        )
        .unwrap();
        let s = evaluate(&spec, &hard(&[0; 4], 1)).unwrap();
        assert!((s.f_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distance_examples() {
        let spec = e1_spec(Constraint::None);
        let s = evaluate(&spec, &hard(&[0, 0, 1, 1], 2)).unwrap();
        // Y1 has posterior (0.8, 0.2)
        assert!((scaled_distance(&s, &spec, 0, 0).unwrap() - 0.759051).abs() < 1e-6);
        let d = distance(&s, &spec, 0, 0).unwrap();
        assert!((d - 0.25 * 0.759051).abs() < 1e-6);

        // a point whose posterior equals the cell's conditional
        let joint = JointDistribution::validate(array![[0.35, 0.15], [0.15, 0.35]]).unwrap();
        let spec = ProblemSpec::with_identity_channel(joint, 2, Impurity::Entropy, Constraint::None, 1.0)
            .unwrap();
        let s = evaluate(&spec, &hard(&[0, 1], 2)).unwrap();
        assert!((scaled_distance(&s, &spec, 0, 0).unwrap() - 0.881291).abs() < 1e-6);

        assert!(matches!(
            distance(&s, &spec, 2, 0),
            Err(Error::IndexOutOfRange { index: 2, .. })
        ));
    }

    #[test]
    fn identical_channel_rows_tie() {
        let a = ChannelMatrix::from_rows(&[vec![0.3, 0.7], vec![0.3, 0.7], vec![0.9, 0.1]]).unwrap();
        let spec = ProblemSpec::new(synth::e1_joint(), a, 3, Impurity::Gini, Constraint::None, 2.5)
            .unwrap();
        let s = evaluate(&spec, &hard(&[0, 1, 2, 1], 3)).unwrap();
        for m in 0..4 {
            assert_eq!(
                distance(&s, &spec, m, 0).unwrap(),
                distance(&s, &spec, m, 1).unwrap()
            );
        }
    }

    #[test]
    fn path_objective_endpoints() {
        let spec = e1_spec(Constraint::None);
        let q = HardQuantizer::new(vec![0, 0, 1, 1], 2).unwrap();
        let base = evaluate(&spec, &q.clone().into()).unwrap().objective;
        assert_eq!(path_objective(&spec, &q, 1, 0, 1, 0.0).unwrap(), base);
        let moved = evaluate(&spec, &hard(&[0, 1, 1, 1], 2)).unwrap().objective;
        let end = path_objective(&spec, &q, 1, 0, 1, 1.0).unwrap();
        assert!((end - moved).abs() < 1e-15);
        // 0.25 H(0.8) + 0.75 H(0.4)
        assert!((end - 0.908695).abs() < 1e-6);
        assert!(matches!(
            path_objective(&spec, &q, 1, 1, 0, 0.5),
            Err(Error::InvalidMove(_))
        ));
    }

    #[test]
    fn nearest_cell_ties_go_low() {
        assert_eq!(nearest_cell(&[1.0, 0.5, 0.5], 0.0), 1);
        assert_eq!(nearest_cell(&[0.5 + 1e-13, 0.5], 1e-12), 0);
        assert_eq!(nearest_cell(&[0.6, 0.5], 1e-12), 1);
    }

    #[test]
    fn evaluate_rejects_wrong_cell_count() {
        assert!(matches!(
            evaluate(&e1_spec(Constraint::None), &hard(&[0, 0, 1, 1], 3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn scorer_matches_evaluate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let spec = synth::random_spec(&mut rng, &synth::SpecRanges::default());
            let labels = synth::random_labels(&mut rng, spec.num_points(), spec.num_cells());
            let q = HardQuantizer::new(labels.clone(), spec.num_cells()).unwrap();
            let reference = evaluate(&spec, &q.into()).unwrap().objective;
            let mut cells = vec![0.0; spec.num_cells() * spec.num_sources()];
            let mut mass = vec![0.0; spec.num_cells()];
            let fast = CellScorer::new(&spec).score_labels(&labels, &mut cells, &mut mass);
            assert!((fast - reference).abs() <= 1e-12, "{fast} vs {reference}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn objective_is_beta_f_plus_g(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = synth::random_spec(&mut rng, &synth::SpecRanges::default());
            let soft = synth::random_soft(&mut rng, spec.num_points(), spec.num_cells());
            let s = evaluate(&spec, &soft.into()).unwrap();
            prop_assert!((s.objective - (spec.beta() * s.f_value + s.g_value)).abs() <= 1e-12);
            prop_assert!((s.output_joints.entries().sum() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn linear_in_quantizer(seed in any::<u64>(), lambda in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = synth::random_spec(&mut rng, &synth::SpecRanges::default());
            let a = synth::random_soft(&mut rng, spec.num_points(), spec.num_cells());
            let b = synth::random_soft(&mut rng, spec.num_points(), spec.num_cells());
            let mix = SoftQuantizer::new(a.weights() * lambda + b.weights() * (1.0 - lambda)).unwrap();
            let ca = push_to_clusters(spec.joint(), &a.into()).unwrap();
            let cb = push_to_clusters(spec.joint(), &b.into()).unwrap();
            let cm = push_to_clusters(spec.joint(), &mix.into()).unwrap();
            let expect = ca.entries() * lambda + cb.entries() * (1.0 - lambda);
            for (x, y) in cm.entries().iter().zip(expect.iter()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
            let t = push_through_channel(&cm, spec.channel()).unwrap();
            for (n, row) in t.entries().rows().into_iter().enumerate() {
                prop_assert!((row.sum() - spec.joint().p_x()[n]).abs() <= 1e-9);
            }
        }

        #[test]
        fn scaled_distance_has_same_argmin(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = synth::random_spec(&mut rng, &synth::SpecRanges::default());
            let labels = synth::random_labels(&mut rng, spec.num_points(), spec.num_cells());
            let q = HardQuantizer::new(labels, spec.num_cells()).unwrap();
            let s = evaluate(&spec, &q.into()).unwrap();
            for m in 0..spec.num_points() {
                let d: Vec<f64> = (0..spec.num_cells()).map(|k| distance(&s, &spec, m, k).unwrap()).collect();
                let dp = scaled_distances(&s, &spec, m).unwrap();
                prop_assert_eq!(nearest_cell_relative(&d, 1e-12), nearest_cell_relative(&dp, 1e-12));
            }
        }
    }
}
