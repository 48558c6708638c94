//! Experiment configuration.
//!
//! Precedence, lowest first: built-in defaults, the JSON file given with
//! `--config`, then command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use metastable_core::{AuditOptions, IntervalUnion, Partition, EIGEN_TOLERANCE};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ConductanceSweep,
    GapSweep,
    HittingTimes,
    VerifyAssumptions,
    CheegerAudit,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::ConductanceSweep,
        Experiment::GapSweep,
        Experiment::HittingTimes,
        Experiment::VerifyAssumptions,
        Experiment::CheegerAudit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::ConductanceSweep => "conductance-sweep",
            Experiment::GapSweep => "gap-sweep",
            Experiment::HittingTimes => "hitting-times",
            Experiment::VerifyAssumptions => "verify-assumptions",
            Experiment::CheegerAudit => "cheeger-audit",
        }
    }

    /// The `experiment` component of every random stream this experiment uses.
    pub fn stream_code(&self) -> u64 {
        match self {
            Experiment::ConductanceSweep => 1,
            Experiment::GapSweep => 2,
            Experiment::HittingTimes => 3,
            Experiment::VerifyAssumptions => 4,
            Experiment::CheegerAudit => 5,
        }
    }

    /// Replica count used when none is configured. For the conductance sweep
    /// this is the number of one-step Monte-Carlo samples.
    pub fn default_replicas(&self) -> u64 {
        match self {
            Experiment::ConductanceSweep => 1_000_000,
            Experiment::HittingTimes => 200,
            _ => 1,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Config(format!(
                "unknown format {s:?}, expected csv or json"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Conductance quadrature.
    pub quadrature: f64,
    /// Eigenvector residual.
    pub eigen: f64,
    pub detailed_balance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quadrature: 1e-9,
            eigen: EIGEN_TOLERANCE,
            detailed_balance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub sigmas: Vec<f64>,
    pub seed: u64,
    /// `None` means the experiment's default.
    pub replicas: Option<u64>,
    /// Cells in the grid chain; `None` picks 40 cells per sigma.
    pub grid_n: Option<usize>,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    pub format: Format,
    /// The set whose conductance and exit times are measured.
    pub set: IntervalUnion,
    /// Starting point for hitting times.
    pub start: f64,
    /// Hitting-time cap; `None` means `ceil(100 / Phi)`.
    pub hitting_cap: Option<u64>,
    /// Epsilon for the hitting-time ratio tail fraction.
    pub ratio_epsilon: f64,
    /// Partition for the assumption audit; overrides `cut`.
    pub partition: Option<Partition>,
    /// Split the line at `cut` with interiors and buffers of width 3 and 4.
    pub cut: Option<f64>,
    pub audit: AuditOptions,
    /// Also compute the gap on a grid with twice as many cells.
    pub refine: bool,
    pub dump_matrix: bool,
    /// Fill the `wall_time_ms` column. Off by default so that output bytes
    /// depend only on the configuration.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::ConductanceSweep,
            sigmas: vec![0.5, 0.4, 0.3, 0.25, 0.2],
            seed: 20_240_501,
            replicas: None,
            grid_n: None,
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("out"),
            format: Format::Csv,
            set: IntervalUnion::below(0.0),
            start: -1.0,
            hitting_cap: None,
            ratio_epsilon: 0.3,
            partition: None,
            cut: None,
            audit: AuditOptions::default(),
            refine: false,
            dump_matrix: false,
            timing: false,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub sigmas: Option<Vec<f64>>,
    pub replicas: Option<u64>,
    pub grid_n: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub cut: Option<f64>,
    pub refine: bool,
    pub dump_matrix: bool,
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(e) = o.experiment {
            self.experiment = e;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(s) = o.sigmas {
            self.sigmas = s;
        }
        if o.replicas.is_some() {
            self.replicas = o.replicas;
        }
        if o.grid_n.is_some() {
            self.grid_n = o.grid_n;
        }
        if let Some(d) = o.output_dir {
            self.output_dir = d;
        }
        if let Some(f) = o.format {
            self.format = f;
        }
        if o.cut.is_some() {
            self.cut = o.cut;
            self.partition = None;
        }
        self.refine |= o.refine;
        self.dump_matrix |= o.dump_matrix;
        self.timing |= o.timing;
    }

    pub fn replicas(&self) -> u64 {
        self.replicas
            .unwrap_or_else(|| self.experiment.default_replicas())
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigmas.iter().copied().fold(0.0, f64::max)
    }

    pub fn partition(&self) -> Result<Partition> {
        match (&self.partition, self.cut) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(c)) => Ok(Partition::split_at(c, 3.0, 4.0)?),
            (None, None) => Ok(Partition::symmetric()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.sigmas.is_empty() {
            return bad("sigmas must not be empty".into());
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return bad(format!("sigmas must be positive, got {s}"));
        }
        if self.replicas == Some(0) && self.experiment != Experiment::ConductanceSweep {
            return bad("replicas must be at least 1".into());
        }
        if self.grid_n.is_some_and(|n| n < 2) {
            return bad("grid_n must be at least 2".into());
        }
        for (name, t) in [
            ("quadrature", self.tolerances.quadrature),
            ("eigen", self.tolerances.eigen),
            ("detailed_balance", self.tolerances.detailed_balance),
        ] {
            if !(t > 0.0) {
                return bad(format!("tolerance {name} must be positive, got {t}"));
            }
        }
        if self.experiment == Experiment::VerifyAssumptions {
            let p = self.partition()?;
            if p.len() < 2 {
                return bad(format!(
                    "the assumption audit needs at least two modes, got {}",
                    p.len()
                ));
            }
        }
        Ok(())
    }
}

/// Parse `0.5,0.4,0.3`.
pub fn parse_sigmas(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("bad sigma {t:?}: {e}")))
        })
        .collect()
}
