//! Problem instances as TOML documents.
//!
//! ```toml
//! source_labels = ["0", "1"]          # optional, defaults to indices
//! repro_labels = ["0", "1"]           # optional
//! nominal = [0.8, 0.2]
//! distortion = [[0, 1], [1, 0]]       # one row per source symbol
//! radius = 0.02
//! radius_unit = "nats"                # "nats" (default) or "bits"
//! budget = 0.1
//!
//! [solver]                            # optional
//! tol = 1e-9
//! seed = 7
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::prob::{DistortionMatrix, ProbVector, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiusUnit {
    #[default]
    Nats,
    Bits,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    repro_labels: Option<Vec<String>>,
    nominal: Vec<f64>,
    distortion: Vec<Vec<f64>>,
    radius: f64,
    #[serde(default)]
    radius_unit: RadiusUnit,
    budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    solver: Option<SolverSettings>,
}

/// A parsed instance with its labels and optional solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub problem: ProblemInstance,
    pub source_labels: Vec<String>,
    pub repro_labels: Vec<String>,
    pub solver: SolverSettings,
}

/// Parse or validation failure, naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceError {
    pub origin: String,
    pub message: String,
}

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.origin, self.message)
    }
}

impl std::error::Error for InstanceError {}

impl InstanceFile {
    pub fn read(path: &Path) -> Result<Self, InstanceError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| InstanceError {
            origin: origin.clone(),
            message: e.to_string(),
        })?;
        Self::parse(&text, &origin)
    }

    /// Parses `text`; `origin` names the source in diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self, InstanceError> {
        let fail = |message: String| InstanceError {
            origin: origin.to_string(),
            message,
        };
        let doc: Document = toml::from_str(text).map_err(|e| fail(e.to_string().trim_end().to_string()))?;
        let m = doc.nominal.len();
        if m == 0 {
            return Err(fail("nominal: at least one source symbol is required".into()));
        }
        if doc.distortion.len() != m {
            return Err(fail(format!(
                "distortion: {} rows for {m} source symbols (one row per entry of nominal)",
                doc.distortion.len()
            )));
        }
        let n = doc.distortion[0].len();
        if n == 0 {
            return Err(fail(
                "distortion row 0: at least one reproduction symbol is required".into(),
            ));
        }
        for (i, row) in doc.distortion.iter().enumerate() {
            if row.len() != n {
                return Err(fail(format!(
                    "distortion row {i}: {} entries, expected {n} like row 0",
                    row.len()
                )));
            }
            if let Some((j, v)) = row.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
                return Err(fail(format!(
                    "distortion row {i}, column {j}: {v} is not a finite nonnegative number"
                )));
            }
        }
        let source_labels = labels(doc.source_labels, m, "source_labels", "source symbols").map_err(fail)?;
        let repro_labels = labels(doc.repro_labels, n, "repro_labels", "reproduction symbols").map_err(fail)?;
        let nominal = ProbVector::new(doc.nominal).map_err(|e| fail(format!("nominal: {e}")))?;
        let rho = DistortionMatrix::new(doc.distortion).map_err(|e| fail(format!("distortion: {e}")))?;
        if !doc.radius.is_finite() || doc.radius < 0.0 {
            return Err(fail(format!(
                "radius: {} is not a finite nonnegative number",
                doc.radius
            )));
        }
        let radius = match doc.radius_unit {
            RadiusUnit::Nats => doc.radius,
            RadiusUnit::Bits => doc.radius * std::f64::consts::LN_2,
        };
        if !doc.budget.is_finite() || doc.budget < 0.0 {
            return Err(fail(format!(
                "budget: {} is not a finite nonnegative number",
                doc.budget
            )));
        }
        let solver = doc.solver.unwrap_or_default();
        if let Some(tol) = solver.tol {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(fail(format!("solver.tol: {tol} must be positive")));
            }
        }
        let problem = ProblemInstance::new(rho, nominal, radius, doc.budget).map_err(|e| fail(e.to_string()))?;
        Ok(InstanceFile {
            problem,
            source_labels,
            repro_labels,
            solver,
        })
    }

    /// TOML text that parses back to the same instance. The radius is
    /// written in nats so no unit conversion is involved.
    pub fn to_toml(&self) -> String {
        let doc = Document {
            source_labels: Some(self.source_labels.clone()),
            repro_labels: Some(self.repro_labels.clone()),
            nominal: self.problem.nominal.as_slice().to_vec(),
            distortion: self.problem.rho.to_rows(),
            radius: self.problem.radius,
            radius_unit: RadiusUnit::Nats,
            budget: self.problem.budget,
            solver: (self.solver != SolverSettings::default()).then_some(self.solver),
        };
        toml::to_string(&doc).expect("instance documents always serialize")
    }
}

fn labels(given: Option<Vec<String>>, count: usize, field: &str, what: &str) -> Result<Vec<String>, String> {
    match given {
        None => Ok((0..count).map(|i| i.to_string()).collect()),
        Some(l) if l.len() == count => Ok(l),
        Some(l) => Err(format!("{field}: {} labels for {count} {what}", l.len())),
    }
}
