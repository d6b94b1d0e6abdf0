use crate::error::Result;
use crate::objective::{evaluate, nearest_cell, scaled_distances, EvaluatedState, ProblemSpec};
use crate::prob::HardQuantizer;

/// Tie tolerance on `D'` used when certifying that a point sits in a
/// nearest cell.
pub const CERTIFICATE_TOL: f64 = 1e-9;

/// Result of any solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solver: String,
    pub quantizer: HardQuantizer,
    pub objective: f64,
    pub f_value: f64,
    pub g_value: f64,
    /// Sweeps used by each restart. Empty for the exact solvers.
    pub iterations_used: Vec<usize>,
    /// Whether each restart stopped because a sweep changed nothing.
    pub converged: Vec<bool>,
    /// Objective before the first sweep and after each sweep of the winning
    /// restart. Exact solvers report the single final value.
    pub objective_trace: Vec<f64>,
    /// Every point sits in a cell of minimal `D'` (within [`CERTIFICATE_TOL`]).
    pub optimality_certificate: bool,
}

impl SolveReport {
    /// Builds a report for a final hard partition, evaluating it from scratch.
    pub fn from_quantizer(
        spec: &ProblemSpec,
        solver: &str,
        quantizer: HardQuantizer,
        iterations_used: Vec<usize>,
        objective_trace: Option<Vec<f64>>,
    ) -> Result<Self> {
        let state = evaluate(spec, &quantizer.clone().into())?;
        let optimality_certificate = nearest_violations(spec, &state, quantizer.labels())?.is_empty();
        Ok(Self {
            solver: solver.to_string(),
            objective_trace: objective_trace.unwrap_or_else(|| vec![state.objective]),
            objective: state.objective,
            f_value: state.f_value,
            g_value: state.g_value,
            quantizer,
            iterations_used,
            converged: Vec::new(),
            optimality_certificate,
        })
    }

    pub fn labels(&self) -> &[usize] {
        self.quantizer.labels()
    }
}

/// A point whose assigned cell is not among its nearest cells.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestViolation {
    pub point: usize,
    pub assigned: usize,
    pub nearest: usize,
    /// `D'(assigned) - D'(nearest)`.
    pub gap: f64,
}

pub(crate) fn nearest_violations(
    spec: &ProblemSpec,
    state: &EvaluatedState,
    labels: &[usize],
) -> Result<Vec<NearestViolation>> {
    let mut out = Vec::new();
    for (m, &assigned) in labels.iter().enumerate() {
        let d = scaled_distances(state, spec, m)?;
        let nearest = nearest_cell(&d, 0.0);
        let gap = d[assigned] - d[nearest];
        if gap > CERTIFICATE_TOL {
            out.push(NearestViolation {
                point: m,
                assigned,
                nearest,
                gap,
            });
        }
    }
    Ok(out)
}
