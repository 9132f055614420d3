//! JSON model files written by `fit` and read back by `error --model`.

use serde::{Deserialize, Serialize};

use polylin::fit::FitReport;
use polylin::{Partition, PolygonalFunction};

use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub iterations: usize,
    pub final_cost: f64,
    pub final_gradient_norm: f64,
    pub converged: bool,
    pub function_evals: usize,
    pub stage_evals: Vec<usize>,
    pub stage_k: Vec<f64>,
}

impl From<&FitReport> for ReportRecord {
    fn from(r: &FitReport) -> Self {
        Self {
            iterations: r.iterations,
            final_cost: r.final_cost,
            final_gradient_norm: r.final_gradient_norm,
            converged: r.converged,
            function_evals: r.function_evals,
            stage_evals: r.stage_evals.clone(),
            stage_k: r.stage_k.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub function: String,
    pub interval: [f64; 2],
    pub partition: String,
    pub fit: String,
    pub segments: usize,
    pub knots: Vec<f64>,
    pub ordinates: Vec<f64>,
    /// Measured L1 distance between the function and the model.
    pub l1_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportRecord>,
}

impl ModelFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, Failure> {
        let m: ModelFile =
            serde_json::from_str(text).map_err(|e| Failure::config(format!("invalid model file: {e}")))?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Failure::config(format!(
                "model schema version {} is not supported (expected {SCHEMA_VERSION})",
                m.schema_version
            )));
        }
        Ok(m)
    }

    pub fn polygonal(&self) -> Result<PolygonalFunction, Failure> {
        let p = Partition::new(self.knots.clone())?;
        Ok(PolygonalFunction::new(p, self.ordinates.clone())?)
    }
}
