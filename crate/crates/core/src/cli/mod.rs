//! Problem files, the stage pipeline and machine-readable reports.

mod pipeline;
mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::eomsolve::EomError;
use crate::excalc::{Chart, Form};
use crate::geomech::GeomError;
use crate::simulate::SimError;
use crate::symexpr::{Expr, ZeroTest};

pub use pipeline::{run, Command, Options, Outcome};
pub use report::{
    CheckReport, Component, DynamicsReport, IntegrationReport, Report, StageReport, TransversalityReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_RANK: i32 = 4;
pub const EXIT_INCONSISTENT: i32 = 5;
pub const EXIT_GAUGE: i32 = 6;
pub const EXIT_VERIFY: i32 = 7;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("hypothesis failure: {0}")]
    Hypothesis(String),
    #[error("{0}")]
    Rank(String),
    #[error("gauge freedom requires pinning: {0}")]
    Gauge(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Other(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Hypothesis(_) => EXIT_HYPOTHESIS,
            CliError::Rank(_) => EXIT_RANK,
            CliError::Gauge(_) => EXIT_GAUGE,
            CliError::Sim(_) | CliError::Other(_) | CliError::Io(_) => EXIT_OTHER,
        }
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::MissingRole(_) | GeomError::Chart(_) | GeomError::NotAdapted(_) => {
                CliError::Parse(e.to_string())
            }
            GeomError::Normalization { .. } | GeomError::NotCoOriented | GeomError::Incompatible(_) => {
                CliError::Hypothesis(e.to_string())
            }
            GeomError::Undecided(_) | GeomError::RankUndecided { .. } => CliError::Rank(e.to_string()),
            GeomError::Expr(_) => CliError::Other(e.to_string()),
        }
    }
}

impl From<EomError> for CliError {
    fn from(e: EomError) -> Self {
        match e {
            EomError::Geom(g) => g.into(),
            EomError::MissingTime => CliError::Parse(e.to_string()),
            EomError::RankUndecided { .. } => CliError::Rank(e.to_string()),
            EomError::Expr(_) | EomError::ChartMismatch => CliError::Other(e.to_string()),
        }
    }
}

/// Constructions a pipeline can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Hamiltonian,
    CocontactHamiltonian,
    Lagrangian,
    Herglotz,
    ModifiedPrecosymplectic,
    SkinnerRusk,
    HerglotzAbsorbed,
    Classify,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Hamiltonian,
        Stage::CocontactHamiltonian,
        Stage::Lagrangian,
        Stage::Herglotz,
        Stage::ModifiedPrecosymplectic,
        Stage::SkinnerRusk,
        Stage::HerglotzAbsorbed,
        Stage::Classify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Hamiltonian => "hamiltonian",
            Stage::CocontactHamiltonian => "cocontact_hamiltonian",
            Stage::Lagrangian => "lagrangian",
            Stage::Herglotz => "herglotz",
            Stage::ModifiedPrecosymplectic => "modified_precosymplectic",
            Stage::SkinnerRusk => "skinner_rusk",
            Stage::HerglotzAbsorbed => "herglotz_absorbed",
            Stage::Classify => "classify",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| CliError::Parse(format!("unknown pipeline stage `{s}`")))
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub time: Option<String>,
    #[serde(default)]
    pub positions: Vec<String>,
    #[serde(default)]
    pub velocities: Vec<String>,
    #[serde(default)]
    pub momenta: Vec<String>,
    pub action: Option<String>,
    /// Symbolic parameters with the numeric values used for integration.
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    /// Abstract functions with their coordinate arguments.
    #[serde(default)]
    pub functions: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Vakonomic {
    /// `"cartan"` for `κ^i = dq^i − v^i dt`, `"none"` for no forms.
    Keyword(String),
    List(Vec<String>),
}

impl Default for Vakonomic {
    fn default() -> Self {
        Vakonomic::Keyword("cartan".into())
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    #[serde(default)]
    pub functions: Vec<String>,
    #[serde(default)]
    pub nonholonomic: Vec<String>,
    #[serde(default)]
    pub vakonomic: Vakonomic,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateSpec {
    /// Stage whose dynamics are integrated; the first stage with dynamics by default.
    pub stage: Option<String>,
    pub x0: BTreeMap<String, f64>,
    pub span: f64,
    pub step: f64,
    #[serde(default)]
    pub monitors: Vec<String>,
    #[serde(default)]
    pub observables: BTreeMap<String, String>,
    #[serde(default)]
    pub drifts: BTreeMap<String, String>,
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Flips the sign of the time part of the second 2-form of every pair.
    #[serde(default)]
    pub corrupt: bool,
}

/// Problem file as written on disk.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub lagrangian: Option<String>,
    pub hamiltonian: Option<String>,
    #[serde(default)]
    pub pipeline: Vec<String>,
    pub chart: ChartSpec,
    #[serde(default)]
    pub constraints: ConstraintSpec,
    /// Coordinate pinnings `x = expr`, added as function constraints.
    #[serde(default)]
    pub gauge: BTreeMap<String, String>,
    pub integrate: Option<IntegrateSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
}

/// A problem file resolved against its chart.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub file: ProblemFile,
    pub chart: Arc<Chart>,
    pub lagrangian: Option<Expr>,
    pub hamiltonian: Option<Expr>,
    pub functions: Vec<Expr>,
    pub nonholonomic: Vec<Form>,
    /// `None` selects the Cartan forms.
    pub vakonomic: Option<Vec<Form>>,
    pub pins: Vec<Expr>,
    pub stages: Vec<Stage>,
    pub zero_test: ZeroTest,
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn parse_err(what: &str, e: impl fmt::Display) -> CliError {
    CliError::Parse(format!("{what}: {e}"))
}

impl Problem {
    pub fn from_str(name: &str, text: &str, zero_test: ZeroTest) -> Result<Problem, CliError> {
        let file: ProblemFile = toml::from_str(text).map_err(|e| parse_err(name, e))?;
        let c = &file.chart;
        let time = c
            .time
            .as_deref()
            .ok_or_else(|| CliError::Parse("chart declares no time coordinate".into()))?;
        let mut b = Chart::builder()
            .time(time)
            .positions(&refs(&c.positions))
            .velocities(&refs(&c.velocities))
            .momenta(&refs(&c.momenta));
        if let Some(s) = &c.action {
            b = b.action(s);
        }
        for p in c.parameters.keys() {
            b = b.param(p);
        }
        for (f, args) in &c.functions {
            b = b.function(f, &refs(args));
        }
        let chart = b.build().map_err(|e| parse_err("chart", e))?;
        let scalar = |what: &str, s: &str| chart.parse(s).map_err(|e| parse_err(&format!("{what} `{s}`"), e));
        let form = |what: &str, s: &str| Form::parse(&chart, s).map_err(|e| parse_err(&format!("{what} `{s}`"), e));
        let lagrangian = file
            .lagrangian
            .as_deref()
            .map(|s| scalar("lagrangian", s))
            .transpose()?;
        let hamiltonian = file
            .hamiltonian
            .as_deref()
            .map(|s| scalar("hamiltonian", s))
            .transpose()?;
        let functions = file
            .constraints
            .functions
            .iter()
            .map(|s| scalar("constraint", s))
            .collect::<Result<_, _>>()?;
        let nonholonomic = file
            .constraints
            .nonholonomic
            .iter()
            .map(|s| form("nonholonomic constraint", s))
            .collect::<Result<_, _>>()?;
        let vakonomic = match &file.constraints.vakonomic {
            Vakonomic::Keyword(k) if k == "cartan" => None,
            Vakonomic::Keyword(k) if k == "none" => Some(Vec::new()),
            Vakonomic::Keyword(k) => return Err(CliError::Parse(format!("unknown vakonomic keyword `{k}`"))),
            Vakonomic::List(l) => Some(
                l.iter()
                    .map(|s| form("vakonomic constraint", s))
                    .collect::<Result<_, _>>()?,
            ),
        };
        let mut pins = Vec::new();
        for (x, v) in &file.gauge {
            if chart.index(x).is_none() {
                return Err(CliError::Parse(format!("gauge pins `{x}`, which is not a coordinate")));
            }
            pins.push(&chart.expr(x) - &scalar("gauge", v)?);
        }
        let stages = file
            .pipeline
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Stage>, _>>()?;
        if stages.is_empty() {
            return Err(CliError::Parse("pipeline is empty".into()));
        }
        Ok(Problem {
            name: name.to_string(),
            file,
            chart,
            lagrangian,
            hamiltonian,
            functions,
            nonholonomic,
            vakonomic,
            pins,
            stages,
            zero_test,
        })
    }

    pub fn load(path: &Path, zero_test: ZeroTest) -> Result<Problem, CliError> {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map_or("problem".into(), |s| s.to_string_lossy().into_owned());
        Problem::from_str(&name, &text, zero_test)
    }

    pub fn lagrangian(&self) -> Result<&Expr, CliError> {
        self.lagrangian
            .as_ref()
            .ok_or_else(|| CliError::Parse("stage needs a lagrangian".into()))
    }

    pub fn hamiltonian(&self) -> Result<&Expr, CliError> {
        self.hamiltonian
            .as_ref()
            .ok_or_else(|| CliError::Parse("stage needs a hamiltonian".into()))
    }
}
