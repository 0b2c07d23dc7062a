//! Serialized records. The JSON schemas printed by `relax schema` are derived
//! from these types.

use schemars::JsonSchema;
use serde::Serialize;

use relax_core::measure::OscillationInterval;

#[derive(Debug, Clone, Serialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BcRecord {
    Dirichlet { left: f64, right: f64 },
    Natural,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct SolverRecord {
    pub gamma: f64,
    pub h: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub gs_sweeps: usize,
    pub tol: f64,
    pub max_outer: usize,
    /// Convexity splitting constant; absent for convex potentials.
    pub splitting_a: Option<f64>,
    pub bc: BcRecord,
    pub init: String,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct IntervalRecord {
    pub x0: f64,
    pub x1: f64,
    #[serde(rename = "dL")]
    pub d_left: f64,
    #[serde(rename = "dR")]
    pub d_right: f64,
    pub weight_left: f64,
    pub weight_right: f64,
}

impl From<&OscillationInterval> for IntervalRecord {
    fn from(i: &OscillationInterval) -> Self {
        Self {
            x0: i.x0,
            x1: i.x1,
            d_left: i.d_left,
            d_right: i.d_right,
            weight_left: i.weight_left,
            weight_right: i.weight_right,
        }
    }
}

/// `report.json` of a one-dimensional run.
#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct RunReport {
    pub experiment: String,
    pub dx: f64,
    pub n_cells: usize,
    /// `null` when the energy is not finite.
    pub final_energy: Option<f64>,
    /// Semi-analytic value, for the experiments that have one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_energy: Option<f64>,
    pub converged: bool,
    pub outer_iterations: usize,
    pub final_constraint_error: Option<f64>,
    pub oscillation_intervals: Vec<IntervalRecord>,
    /// Seed of the random integrand, when there is one.
    pub seed: Option<u64>,
    pub config: SolverRecord,
}

#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct Solver2DRecord {
    pub gamma: f64,
    pub h: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub gs_sweeps: usize,
    pub tol: f64,
    pub max_outer: usize,
    pub splitting_a: f64,
    pub init: String,
}

/// `report.json` of the two-dimensional run.
#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct Run2DReport {
    pub experiment: String,
    pub delta: f64,
    pub n: usize,
    pub final_energy: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub final_constraint_error: Option<f64>,
    pub config: Solver2DRecord,
}

/// Output of `relax oracle`.
#[derive(Debug, Clone, Serialize, JsonSchema)]
pub struct OracleReport {
    pub experiment: String,
    pub x_star: f64,
    pub energy: f64,
    pub hamiltonian_drift: f64,
    pub hamiltonian_level: f64,
}

pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}
