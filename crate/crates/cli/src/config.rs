//! TOML run configuration, schema `qcrit-config/1`.

use std::path::Path;
use std::sync::Arc;

use qcrit::criticality::{CriticalityOptions, SpecFamily};
use qcrit::eigen::EigenOptions;
use qcrit::green::{GreenOptions, HoleSchedule};
use qcrit::mesh::{make_exhaustion, ExhaustionKind, ExhaustionParams, Grading, Mesh, RadiusScale};
use qcrit::morrey::MorreyParams;
use qcrit::qcore::{MatrixSpec, PotentialSpec, ProblemSpec};
use qcrit::solver::{MonotoneOptions, SolveOptions};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_SCHEMA: &str = "qcrit-config/1";

fn default_seed() -> u64 {
    42
}

fn identity() -> MatrixSpec {
    MatrixSpec::Identity
}

fn zero_potential() -> PotentialSpec {
    PotentialSpec::Const { c: 0.0 }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub eigen: EigenOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exhaustion: Option<ExhaustionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criticality: Option<CriticalityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub green: Option<GreenConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morrey: Option<MorreyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<LoadConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterate: Option<IterateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub p: f64,
    /// Dimension the mesh stands for; above 1 an interval is a radial
    /// coordinate. Defaults to the mesh dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient_n: Option<usize>,
    pub domain: DomainConfig,
    #[serde(default = "identity")]
    pub matrix: MatrixSpec,
    #[serde(default = "zero_potential")]
    pub potential: PotentialSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum DomainConfig {
    Interval {
        a: f64,
        b: f64,
        n: usize,
        #[serde(default)]
        grading: Grading,
    },
    Rectangle {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
        nx: usize,
        ny: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExhaustionConfig {
    pub kind: ExhaustionKind,
    pub scale: RadiusScale,
    pub first: usize,
    pub count: usize,
    /// Elements of the largest member (per axis for squares).
    pub elements: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grading: Option<Grading>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalityConfig {
    /// Perturbation direction `U`.
    pub weight: PotentialSpec,
    /// Normalization point.
    pub x0: [f64; 2],
    #[serde(default)]
    pub options: CriticalityOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenConfig {
    pub pole: [f64; 2],
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub holes: HoleSchedule,
    #[serde(default = "default_stabilization")]
    pub stabilization_tol: f64,
    /// Compare the verdict with the sign of `lambda1` (one domain) or the
    /// criticality probe (exhaustion).
    #[serde(default = "yes")]
    pub cross_check: bool,
}

fn default_levels() -> usize {
    8
}

fn default_stabilization() -> f64 {
    1e-2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorreyConfig {
    pub q: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Battery size for the Morrey-Adams constant; 0 skips it.
    #[serde(default)]
    pub battery: usize,
}

fn default_k_max() -> usize {
    6
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    #[serde(default = "zero_potential")]
    pub g: PotentialSpec,
    /// Constant Dirichlet data.
    #[serde(default)]
    pub boundary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterateConfig {
    /// Constant supersolution; `(max g / min V)^{1/(p-1)}` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supersolution: Option<f64>,
    #[serde(default)]
    pub options: MonotoneOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_suites")]
    pub suites: Vec<String>,
}

pub fn default_samples() -> usize {
    100_000
}

fn default_suites() -> Vec<String> {
    vec!["all".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for field CSVs; `QCRIT_OUT_DIR` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "yes")]
    pub csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, csv: true }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::InvalidConfig(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    /// A minimal configuration for commands that need none (verify).
    pub fn verify_default() -> Self {
        RunConfig {
            schema: CONFIG_SCHEMA.into(),
            seed: default_seed(),
            problem: ProblemConfig {
                p: 2.0,
                ambient_n: None,
                domain: DomainConfig::Interval {
                    a: 0.0,
                    b: 1.0,
                    n: 64,
                    grading: Grading::Uniform,
                },
                matrix: identity(),
                potential: zero_potential(),
            },
            solver: SolveOptions::default(),
            eigen: EigenOptions::default(),
            exhaustion: None,
            criticality: None,
            green: None,
            morrey: None,
            load: None,
            iterate: None,
            verify: Some(VerifyConfig {
                samples: default_samples(),
                suites: default_suites(),
            }),
            output: OutputConfig::default(),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(invalid(format!("schema must be {CONFIG_SCHEMA:?}, got {:?}", self.schema)));
        }
        let p = self.problem.p;
        if !(p > 1.0 && p.is_finite()) {
            return Err(invalid(format!("p must be a finite number > 1, got {p}")));
        }
        let dim = match self.problem.domain {
            DomainConfig::Interval { a, b, n, .. } => {
                if !(a < b) || n < 2 {
                    return Err(invalid("interval needs a < b and n >= 2"));
                }
                1
            }
            DomainConfig::Rectangle { x0, y0, x1, y1, nx, ny } => {
                if !(x0 < x1 && y0 < y1) || nx < 2 || ny < 2 {
                    return Err(invalid("rectangle needs x0 < x1, y0 < y1 and nx, ny >= 2"));
                }
                2
            }
        };
        let n = self.ambient_n();
        if dim == 2 && n != 2 {
            return Err(invalid("a rectangle lives in ambient dimension 2"));
        }
        if n == 0 {
            return Err(invalid("ambient_n must be positive"));
        }
        self.solver.validate()?;
        self.eigen.solve.validate()?;
        if let Some(m) = &self.morrey {
            MorreyParams::new(p, n, m.q).map_err(|e| invalid(e.to_string()))?;
            if m.k_max < 4 {
                return Err(invalid("morrey.k_max must be at least 4"));
            }
        }
        if let Some(e) = &self.exhaustion {
            if e.count < 2 {
                return Err(invalid("an exhaustion needs at least two members"));
            }
        }
        if let Some(g) = &self.green {
            if g.levels < 2 {
                return Err(invalid("green.levels must be at least 2"));
            }
        }
        if let Some(v) = &self.verify {
            if v.samples == 0 {
                return Err(invalid("verify.samples must be positive"));
            }
        }
        Ok(())
    }

    pub fn ambient_n(&self) -> usize {
        self.problem.ambient_n.unwrap_or(match self.problem.domain {
            DomainConfig::Interval { .. } => 1,
            DomainConfig::Rectangle { .. } => 2,
        })
    }

    pub fn mesh(&self) -> CliResult<Arc<Mesh>> {
        let n = self.ambient_n();
        let m = match self.problem.domain {
            DomainConfig::Interval { a, b, n: k, grading } => Mesh::interval_graded(&[a, b], k, grading, n)?,
            DomainConfig::Rectangle { x0, y0, x1, y1, nx, ny } => Mesh::rectangle(x0, y0, x1, y1, nx, ny)?,
        };
        Ok(Arc::new(m))
    }

    pub fn spec(&self) -> CliResult<ProblemSpec> {
        Ok(ProblemSpec::from_catalog(
            self.problem.p,
            self.mesh()?,
            &self.problem.matrix,
            &self.problem.potential,
        )?)
    }

    /// The exhaustion family, anchored at `anchors`.
    pub fn family(&self, anchors: Vec<[f64; 2]>) -> CliResult<SpecFamily> {
        let e = self
            .exhaustion
            .as_ref()
            .ok_or_else(|| invalid("this command needs an [exhaustion] section"))?;
        let mut params = ExhaustionParams::new(e.kind, e.scale, e.first, e.elements).with_anchors(anchors);
        if let Some(n) = self.problem.ambient_n {
            params = params.with_ambient(n);
        }
        if let Some(g) = e.grading {
            params = params.with_grading(g);
        }
        let schedule = make_exhaustion(&params, e.count)?;
        Ok(SpecFamily::from_catalog(
            schedule,
            self.problem.p,
            &self.problem.matrix,
            &self.problem.potential,
        )?)
    }

    pub fn green_options(&self) -> CliResult<GreenOptions> {
        let g = self
            .green
            .as_ref()
            .ok_or_else(|| invalid("this command needs a [green] section"))?;
        Ok(GreenOptions {
            levels: g.levels,
            holes: g.holes,
            stabilization_tol: g.stabilization_tol,
            solve: SolveOptions {
                record_trace: false,
                ..self.solver
            },
            ..GreenOptions::default()
        })
    }
}
