//! The JSON solve report and the posterior CSV.

use std::io::Write;

use copart_core::{evaluate, ProblemSpec, SolveReport};
use serde::Serialize;

use crate::error::CliError;
use crate::problem::FORMAT_VERSION;

fn to_rows<'a, I, R>(rows: I) -> Vec<Vec<f64>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = &'a f64>,
{
    rows.into_iter().map(|r| r.into_iter().copied().collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportFile {
    pub format: u32,
    pub solver: String,
    pub impurity: String,
    pub constraint: String,
    pub beta: f64,
    pub objective: f64,
    #[serde(rename = "F_value")]
    pub f_value: f64,
    #[serde(rename = "G_value")]
    pub g_value: f64,
    /// 1-based cell of each data point.
    pub assignment: Vec<usize>,
    pub cell_masses: Vec<f64>,
    /// `p(X, T)`, one row per source symbol.
    pub output_joint: Vec<Vec<f64>>,
    pub optimality_certificate: bool,
    pub objective_trace: Vec<f64>,
    pub iterations_used: Vec<usize>,
    pub converged: Vec<bool>,
    pub joint_xy: Vec<Vec<f64>>,
    pub channel: Vec<Vec<f64>>,
}

impl ReportFile {
    pub fn build(spec: &ProblemSpec, report: &SolveReport) -> Result<Self, CliError> {
        let state = evaluate(spec, &report.quantizer.clone().into())?;
        Ok(Self {
            format: FORMAT_VERSION,
            solver: report.solver.clone(),
            impurity: spec.impurity().name().to_string(),
            constraint: spec.constraint().name().to_string(),
            beta: spec.beta(),
            objective: report.objective,
            f_value: report.f_value,
            g_value: report.g_value,
            assignment: report.labels().iter().map(|k| k + 1).collect(),
            cell_masses: state.cluster_joints.mass().to_vec(),
            output_joint: to_rows(state.output_joints.entries().rows()),
            optimality_certificate: report.optimality_certificate,
            objective_trace: report.objective_trace.clone(),
            iterations_used: report.iterations_used.clone(),
            converged: report.converged.clone(),
            joint_xy: to_rows(spec.joint().entries().rows()),
            channel: to_rows(spec.channel().entries().rows()),
        })
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

/// Writes one row per data point in original order: 1-based index, `p(Y)`,
/// each posterior `p(X_n | Y)` and the 1-based assigned cell.
pub fn write_posteriors<W: Write>(spec: &ProblemSpec, assignment: &[usize], out: W) -> Result<(), CliError> {
    let fail = |e: csv::Error| CliError::Output(format!("writing posteriors: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let n = spec.num_sources();
    let mut header = vec!["index".to_string(), "p_Y".to_string()];
    header.extend((1..=n).map(|i| format!("p_X{i}|Y")));
    header.push("assigned_cell".to_string());
    w.write_record(&header).map_err(fail)?;
    let post = spec.joint().posteriors();
    for (m, &p_y) in spec.joint().p_y().iter().enumerate() {
        let mut record = vec![(m + 1).to_string(), p_y.to_string()];
        record.extend(post.column(m).iter().map(|p| p.to_string()));
        record.push(assignment[m].to_string());
        w.write_record(&record).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::Output(format!("writing posteriors: {e}")))
}
