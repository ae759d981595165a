//! Scenario runner: a TOML config selects a suite of numerical checks; the
//! result is a JSON [`VerificationReport`] plus CSV plot tables.

mod suites;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use suites::SUITES;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown suite {0:?} (see --list-suites)")]
    UnknownSuite(String),
    #[error("invalid config: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

/// Sample counts per check family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Samples {
    pub dehn_twist: usize,
    pub strictness: usize,
    pub liouville: usize,
    pub transversality: usize,
    pub monodromy: usize,
    pub rounded_window: usize,
    pub giroux: usize,
    pub binding: usize,
    pub move_chains: usize,
    pub non_connected: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Self {
            dehn_twist: 500,
            strictness: 500,
            liouville: 100,
            transversality: 10_000,
            monodromy: 200,
            rounded_window: 40,
            giroux: 200,
            binding: 20,
            move_chains: 1000,
            non_connected: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub symplectic: f64,
    pub strictness: f64,
    pub liouville: f64,
    pub monodromy: f64,
    pub twist_matrix: f64,
    pub pre_surgery: f64,
    pub giroux: f64,
    pub glue: f64,
    /// Allowed distance of the fitted rounded-window exponent from 1.
    pub exponent: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symplectic: 1e-6,
            strictness: 1e-8,
            liouville: 1e-6,
            monodromy: 1e-6,
            twist_matrix: 1e-9,
            pre_surgery: 1e-10,
            giroux: 1e-5,
            glue: 1e-12,
            exponent: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub suite: String,
    pub seed: u64,
    /// Sphere dimensions for the cotangent twist checks.
    pub sphere_dims: Vec<usize>,
    /// `(n, k)` model shapes.
    pub shapes: Vec<[usize; 2]>,
    /// `k + 1` values for the monodromy checks.
    pub zw_dims: Vec<usize>,
    pub epsilon: f64,
    pub delta: f64,
    pub transversality_deltas: Vec<f64>,
    pub window_deltas: Vec<f64>,
    pub a_list: Vec<f64>,
    /// Gluing-region constant.
    pub c: f64,
    pub p0: f64,
    pub k_fold: u32,
    /// Bound for equivalence searches (stabilizations plus destabilizations).
    pub move_depth: usize,
    pub samples: Samples,
    pub tolerances: Tolerances,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            suite: "all".into(),
            seed: 7,
            sphere_dims: vec![1, 2, 3],
            shapes: vec![[2, 1], [3, 1], [3, 2]],
            zw_dims: vec![2, 3, 4],
            epsilon: 0.1,
            delta: 0.05,
            transversality_deltas: vec![0.05, 0.1],
            window_deltas: vec![0.02, 0.01, 0.005],
            a_list: vec![10.0, 100.0, 1000.0, 10000.0],
            c: 4.0,
            p0: 1.0,
            k_fold: 1,
            move_depth: 6,
            samples: Samples::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Lists every offending field.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !SUITES.contains(&self.suite.as_str()) {
            return Err(ScenarioError::UnknownSuite(self.suite.clone()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.symplectic", t.symplectic),
            ("tolerances.strictness", t.strictness),
            ("tolerances.liouville", t.liouville),
            ("tolerances.monodromy", t.monodromy),
            ("tolerances.twist_matrix", t.twist_matrix),
            ("tolerances.pre_surgery", t.pre_surgery),
            ("tolerances.giroux", t.giroux),
            ("tolerances.glue", t.glue),
            ("tolerances.exponent", t.exponent),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            bad.push(format!("epsilon must lie in (0, 0.5), got {}", self.epsilon));
        }
        for (name, v) in std::iter::once(("delta", self.delta))
            .chain(self.transversality_deltas.iter().map(|d| ("transversality_deltas", *d)))
            .chain(self.window_deltas.iter().map(|d| ("window_deltas", *d)))
        {
            if !(v > 0.0 && v < 0.25) {
                bad.push(format!("{name} entries must lie in (0, 1/4), got {v}"));
            }
        }
        if self.window_deltas.len() < 2 {
            bad.push("window_deltas needs at least two values for the exponent fit".into());
        }
        if self.a_list.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            bad.push("a_list entries must be positive and finite".into());
        }
        if !(self.c > 1.0) {
            bad.push(format!("c must exceed 1, got {}", self.c));
        }
        if !(self.p0 > 0.0) {
            bad.push(format!("p0 must be positive, got {}", self.p0));
        }
        if self.k_fold == 0 {
            bad.push("k_fold must be at least 1".into());
        }
        if self.sphere_dims.contains(&0) {
            bad.push("sphere_dims entries must be at least 1".into());
        }
        if self.zw_dims.iter().any(|l| *l < 2) {
            bad.push("zw_dims entries must be at least 2".into());
        }
        for [n, k] in &self.shapes {
            if *k + 1 > *n {
                bad.push(format!("shapes entry ({n}, {k}) needs k < n"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(bad))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `value < threshold`
    Below,
    /// `value <= threshold`
    AtMost,
    /// `value > threshold`
    Above,
}

impl Comparison {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Below => value < threshold,
            Comparison::AtMost => value <= threshold,
            Comparison::Above => value > threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// The formula the check exercises.
    pub anchor: String,
    pub samples: usize,
    /// What `value` measures, e.g. "max residual".
    pub statistic: String,
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub passed: bool,
    /// Named auxiliary values (fitted constants, worked outputs).
    pub data: std::collections::BTreeMap<String, Vec<f64>>,
    pub diagnostics: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
    pub config: ScenarioConfig,
    pub environment: Environment,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// A CSV table: header plus numeric rows.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PlotTable {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| ScenarioError::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string())).map_err(io)?;
        }
        w.flush().map_err(|e| ScenarioError::Io(e.to_string()))
    }
}

pub fn emit_plot_data(table: &PlotTable, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
    table.write_csv(std::io::BufWriter::new(f))
}

/// Stage-2 style trajectory table: `time, theta, F, <coords>`.
pub fn trajectory_table(
    name: &str,
    traj: &crate::flows::Trajectory,
    shape: crate::weinstein::ModelShape,
    profile: &crate::weinstein::HandleProfile,
) -> PlotTable {
    let mut header = vec!["time".to_string(), "theta".to_string(), "F".to_string()];
    for i in 0..shape.m() {
        header.push(format!("x{i}"));
        header.push(format!("y{i}"));
    }
    for j in 0..shape.zw_len() {
        header.push(format!("z{j}"));
        header.push(format!("w{j}"));
    }
    let mut t = PlotTable {
        name: name.into(),
        header,
        rows: vec![],
    };
    for (time, p) in traj.times().iter().zip(traj.points()) {
        let mp = crate::weinstein::ModelPoint::from_ambient(shape, p.coords()).expect("trajectory dimension");
        let mut row = vec![*time, crate::weinstein::theta_page(&mp), crate::weinstein::f_eval(&mp, profile)];
        row.extend_from_slice(p.coords());
        t.rows.push(row);
    }
    t
}

#[derive(Clone, Debug)]
pub struct SuiteOutput {
    pub report: VerificationReport,
    pub plots: Vec<PlotTable>,
}

impl SuiteOutput {
    /// Writes `report.json` and one CSV per plot table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| ScenarioError::Io(e.to_string()))?;
        std::fs::write(dir.join("report.json"), self.report.to_json()).map_err(|e| ScenarioError::Io(e.to_string()))?;
        for p in &self.plots {
            emit_plot_data(p, &dir.join(format!("{}.csv", p.name)))?;
        }
        Ok(())
    }
}

/// Runs the configured suite. Checks are ordered by name.
pub fn run_suite(config: &ScenarioConfig) -> Result<SuiteOutput> {
    config.validate()?;
    let (mut checks, mut plots) = suites::run(config);
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    plots.sort_by(|a, b| a.name.cmp(&b.name));
    let report = VerificationReport {
        suite: config.suite.clone(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        config: config.clone(),
        environment: Environment {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
    };
    Ok(SuiteOutput { report, plots })
}
