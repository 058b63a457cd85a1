use std::collections::BTreeMap;

use serde::Serialize;

use crate::eomsolve::{DynVerdict, Dynamics, Transversality};
use crate::excalc::VecField;
use crate::geomech::StructureReport;
use crate::simulate::MonitorMax;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    pub coordinate: String,
    pub value: String,
}

fn components(x: &VecField) -> Vec<Component> {
    let chart = x.chart();
    (0..chart.dim())
        .map(|i| Component {
            coordinate: chart.name(i).to_string(),
            value: x.comp(i).to_string(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DynamicsReport {
    pub verdict: DynVerdict,
    pub field: Option<String>,
    pub components: Vec<Component>,
    pub gauge: Vec<String>,
    pub secondary: Vec<String>,
    pub surface: BTreeMap<String, String>,
    pub witness: Option<String>,
    pub provenance: String,
}

impl From<&Dynamics> for DynamicsReport {
    fn from(d: &Dynamics) -> Self {
        DynamicsReport {
            verdict: d.verdict,
            field: d.z.as_ref().map(VecField::to_string),
            components: d.z.as_ref().map(components).unwrap_or_default(),
            gauge: d.gauge.iter().map(VecField::to_string).collect(),
            secondary: d.secondary.iter().map(ToString::to_string).collect(),
            surface: d.surface.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            witness: d.witness.clone(),
            provenance: d.provenance.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransversalityReport {
    pub exists: bool,
    pub x: Option<String>,
    pub components: Vec<Component>,
    pub kernel: Vec<String>,
    pub conditions: Vec<String>,
    pub witness: Option<String>,
}

impl From<&Transversality> for TransversalityReport {
    fn from(t: &Transversality) -> Self {
        match t {
            Transversality::Exists { x, kernel, conditions } => TransversalityReport {
                exists: true,
                x: Some(x.to_string()),
                components: components(x),
                kernel: kernel.iter().map(VecField::to_string).collect(),
                conditions: conditions.iter().map(ToString::to_string).collect(),
                witness: None,
            },
            Transversality::NoSolution { witness } => TransversalityReport {
                exists: false,
                x: None,
                components: Vec::new(),
                kernel: Vec::new(),
                conditions: Vec::new(),
                witness: Some(witness.clone()),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub chart: String,
    /// Constructed forms in canonical text.
    pub forms: BTreeMap<String, String>,
    pub dynamics: Option<DynamicsReport>,
    pub transversality: Option<TransversalityReport>,
    pub structure: Option<StructureReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegrationReport {
    pub stage: String,
    pub span: f64,
    pub step: f64,
    pub steps: usize,
    pub csv: String,
    pub initial_state: BTreeMap<String, f64>,
    pub final_state: BTreeMap<String, f64>,
    pub monitors: Vec<MonitorMax>,
}

/// Top-level JSON document written by every subcommand.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub problem: String,
    pub seed: u64,
    pub trials: usize,
    pub chart: String,
    pub lagrangian: Option<String>,
    pub hamiltonian: Option<String>,
    pub stages: Vec<StageReport>,
    pub integration: Option<IntegrationReport>,
    pub verification: Vec<CheckReport>,
    pub status: String,
    pub exit_code: i32,
}
