//! The JSON problem file.

use copart_core::{ChannelMatrix, Constraint, Impurity, Init, JointDistribution, ProblemSpec, SolverOptions, SweepMode};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpurityName {
    Entropy,
    Gini,
}

impl From<ImpurityName> for Impurity {
    fn from(name: ImpurityName) -> Self {
        match name {
            ImpurityName::Entropy => Impurity::Entropy,
            ImpurityName::Gini => Impurity::Gini,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintName {
    #[default]
    None,
    Entropy,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintEntry {
    pub name: ConstraintName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverName {
    #[default]
    Iterative,
    Bruteforce,
    Thresholds,
    Dp,
}

impl SolverName {
    pub const ALL: [SolverName; 4] = [
        SolverName::Bruteforce,
        SolverName::Thresholds,
        SolverName::Dp,
        SolverName::Iterative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverName::Iterative => "iterative",
            SolverName::Bruteforce => "bruteforce",
            SolverName::Thresholds => "thresholds",
            SolverName::Dp => "dp",
        }
    }

    pub fn is_exact(self) -> bool {
        self != SolverName::Iterative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepName {
    #[default]
    Sequential,
    Batch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptionsEntry {
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub sweep_mode: SweepName,
}

impl Default for OptionsEntry {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            seed: d.seed,
            restarts: d.restarts,
            max_iterations: d.max_iterations,
            sweep_mode: SweepName::Sequential,
        }
    }
}

impl OptionsEntry {
    pub fn to_solver_options(&self) -> SolverOptions {
        SolverOptions {
            seed: self.seed,
            restarts: self.restarts,
            max_iterations: self.max_iterations,
            sweep_mode: match self.sweep_mode {
                SweepName::Sequential => SweepMode::Sequential,
                SweepName::Batch => SweepMode::Batch,
            },
            init: Init::Random,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub format: u32,
    pub joint_xy: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<Vec<Vec<f64>>>,
    pub num_cells: usize,
    pub beta: f64,
    pub impurity: ImpurityName,
    #[serde(default)]
    pub constraint: ConstraintEntry,
    #[serde(default)]
    pub solver: SolverName,
    #[serde(default)]
    pub options: OptionsEntry,
}

impl ProblemFile {
    /// Parses a problem file. Errors name the key path and position.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::Input(format!("{inner}"))
            } else {
                CliError::Input(format!("{path}: {inner}"))
            }
        })?;
        if file.format != FORMAT_VERSION {
            return Err(CliError::Input(format!(
                "format: unsupported version {}, expected {FORMAT_VERSION}",
                file.format
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem file serializes")
    }

    pub fn to_spec(&self) -> Result<ProblemSpec, CliError> {
        let input = |key: &str, msg: String| CliError::Input(format!("{key}: {msg}"));
        let joint = JointDistribution::from_rows(&self.joint_xy).map_err(|e| input("joint_xy", e.to_string()))?;
        if self.num_cells == 0 {
            return Err(input("num_cells", "must be at least 1".into()));
        }
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return Err(input("beta", format!("must be positive, got {}", self.beta)));
        }
        let channel = match &self.channel {
            None => ChannelMatrix::identity(self.num_cells),
            Some(rows) => {
                let channel = ChannelMatrix::from_rows(rows).map_err(|e| input("channel", e.to_string()))?;
                if channel.num_inputs() != self.num_cells {
                    return Err(input(
                        "channel",
                        format!("has {} rows but num_cells is {}", channel.num_inputs(), self.num_cells),
                    ));
                }
                channel
            }
        };
        let constraint = match (self.constraint.name, &self.constraint.weights) {
            (ConstraintName::None, None) => Constraint::None,
            (ConstraintName::Entropy, None) => Constraint::Entropy,
            (ConstraintName::Linear, Some(w)) => {
                if w.len() != self.num_cells {
                    return Err(input(
                        "constraint.weights",
                        format!("expected {} weights, got {}", self.num_cells, w.len()),
                    ));
                }
                if let Some(bad) = w.iter().find(|x| !x.is_finite()) {
                    return Err(input("constraint.weights", format!("non-finite weight {bad}")));
                }
                Constraint::Linear(w.clone())
            }
            (ConstraintName::Linear, None) => {
                return Err(input("constraint.weights", "required for the linear constraint".into()))
            }
            (_, Some(_)) => return Err(input("constraint.weights", "only allowed for the linear constraint".into())),
        };
        if self.options.restarts == 0 {
            return Err(input("options.restarts", "must be at least 1".into()));
        }
        if self.options.max_iterations == 0 {
            return Err(input("options.max_iterations", "must be at least 1".into()));
        }
        ProblemSpec::new(joint, channel, self.num_cells, self.impurity.into(), constraint, self.beta)
            .map_err(|e| CliError::Input(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const E1: &str = r#"{
        "format": 1,
        "joint_xy": [[0.20, 0.15, 0.05, 0.10], [0.05, 0.10, 0.20, 0.15]],
        "num_cells": 2,
        "beta": 1.0,
        "impurity": "entropy",
        "solver": "bruteforce"
    }"#;

    #[test]
    fn defaults_fill_in() {
        let file = ProblemFile::parse(E1).unwrap();
        assert_eq!(file.constraint.name, ConstraintName::None);
        assert_eq!(file.options, OptionsEntry::default());
        let spec = file.to_spec().unwrap();
        assert!(spec.channel().is_identity());
        assert_eq!(spec.num_points(), 4);
    }

    #[test]
    fn parse_errors_name_the_key() {
        let bad = E1.replace("\"entropy\"", "\"shannon\"");
        let err = ProblemFile::parse(&bad).unwrap_err().to_string();
        assert!(err.starts_with("impurity:"), "{err}");
        assert!(err.contains("line"), "{err}");

        let bad = E1.replace("0.20, 0.15", "0.20, \"x\"");
        let err = ProblemFile::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("joint_xy"), "{err}");

        let bad = E1.replace("\"format\": 1", "\"format\": 2");
        assert!(ProblemFile::parse(&bad).unwrap_err().to_string().starts_with("format:"));

        let bad = E1.replace("\"beta\"", "\"betta\"");
        assert!(ProblemFile::parse(&bad).is_err());
    }

    #[test]
    fn validation_errors_name_the_key() {
        let cases = [
            (E1.replace("0.20, 0.15", "0.40, 0.15"), "joint_xy"),
            (E1.replace("\"beta\": 1.0", "\"beta\": -1.0"), "beta"),
            (E1.replace("\"num_cells\": 2", "\"num_cells\": 0"), "num_cells"),
            (
                E1.replace("\"num_cells\": 2,", "\"num_cells\": 2, \"channel\": [[1.0, 0.0]],"),
                "channel",
            ),
            (
                E1.replace("\"num_cells\": 2,", "\"num_cells\": 2, \"constraint\": {\"name\": \"linear\", \"weights\": [1.0]},"),
                "constraint.weights",
            ),
            (
                E1.replace("\"num_cells\": 2,", "\"num_cells\": 2, \"options\": {\"restarts\": 0},"),
                "options.restarts",
            ),
        ];
        for (text, key) in cases {
            let err = ProblemFile::parse(&text).unwrap().to_spec().unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert!(err.to_string().starts_with(key), "{err}");
        }
    }
}
