//! Experiment configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coefficient::Coefficient;
use crate::domain::{Domain, Grid};
use crate::error::{Error, Result};
use crate::field::FieldExpr;
use crate::kernel::KernelFamily;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    CnTable,
    PonceSweep,
    Gconv,
    VitaliCheck,
    SimpleCheck,
    MeasurableCheck,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::CnTable => "cn_table",
            ExperimentKind::PonceSweep => "ponce_sweep",
            ExperimentKind::Gconv => "gconv",
            ExperimentKind::VitaliCheck => "vitali_check",
            ExperimentKind::SimpleCheck => "simple_check",
            ExperimentKind::MeasurableCheck => "measurable_check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection { lower: vec![0.0], upper: vec![1.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Requested nodes per axis; raised so that each horizon is a whole
    /// number of cells.
    pub n: Vec<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: vec![1000] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub family: String,
    pub p: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection { family: "constant".into(), p: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientSection {
    pub spec: String,
}

impl Default for CoefficientSection {
    fn default() -> Self {
        CoefficientSection { spec: "const:1".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadSection {
    /// Right-hand side `f` of the solve.
    pub f: String,
    /// Functions `f` to cover in the partition check.
    pub fixtures: Vec<String>,
}

impl Default for LoadSection {
    fn default() -> Self {
        LoadSection {
            f: "const:1".into(),
            fixtures: vec!["const:2".into(), "affine:0,1".into(), "quad:0,0,1".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    /// A field expression, `solve` (use the nonlocal solution for each
    /// horizon) or `random` (random nodal values, block checks only).
    pub u: String,
    /// Weights `ξ` of the partition check.
    pub weights: Vec<String>,
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection {
            u: "x".into(),
            weights: vec!["const:1".into(), "sin:1,1".into(), "indicator:0.3,0.7".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Horizons, strictly decreasing.
    pub deltas: Vec<f64>,
    /// Overrides the default inequality tolerance.
    pub tol_ineq: Option<f64>,
    /// Smallest acceptable fitted order of the gap.
    pub min_order: Option<f64>,
    /// Largest acceptable solution error at the smallest horizon.
    pub max_final_error: Option<f64>,
    /// Largest acceptable nonlocal energy of the solutions.
    pub energy_bound: Option<f64>,
    /// Solver gradient tolerance; the solver default when absent.
    pub tol_grad: Option<f64>,
    pub ks: Vec<usize>,
    pub residual_tol: f64,
    pub instances: usize,
    pub seed: u64,
    pub dims: Vec<usize>,
    pub ps: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            deltas: vec![0.2, 0.1, 0.05],
            tol_ineq: None,
            min_order: None,
            max_final_error: None,
            energy_bound: None,
            tol_grad: None,
            ks: vec![5, 10, 20],
            residual_tol: 1e-3,
            instances: 20,
            seed: 1,
            dims: vec![1, 2, 3],
            ps: vec![1.5, 2.0, 3.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    /// Two columns `delta gap`.
    Plot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Directory for report files; nothing is written when absent.
    pub dir: Option<PathBuf>,
    /// File name stem; the experiment id when absent.
    pub stem: Option<String>,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: None, stem: None, formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Plot] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub coefficient: CoefficientSection,
    #[serde(default)]
    pub load: LoadSection,
    #[serde(default)]
    pub field: FieldSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// How the field entering the energies is obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec {
    Fixed(FieldExpr),
    Solve,
    Random,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            name: None,
            domain: DomainSection::default(),
            grid: GridSection::default(),
            kernel: KernelSection::default(),
            coefficient: CoefficientSection::default(),
            load: LoadSection::default(),
            field: FieldSection::default(),
            sweep: SweepSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.experiment.id().to_string())
    }

    /// Checks everything that does not need a grid.
    pub fn validate(&self) -> Result<()> {
        let domain = self.domain()?;
        self.family()?;
        if !(self.kernel.p > 1.0) {
            return Err(Error::Config(format!("kernel.p = {} must exceed 1", self.kernel.p)));
        }
        if self.grid.n.len() != domain.dim() {
            return Err(Error::Config(format!(
                "grid.n has {} entries for a {}-dimensional domain",
                self.grid.n.len(),
                domain.dim()
            )));
        }
        let d = &self.sweep.deltas;
        if d.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::Config("horizons must be positive".into()));
        }
        if d.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(format!("horizons {d:?} are not strictly decreasing")));
        }
        if self.sweep.ks.iter().any(|&k| k == 0) {
            return Err(Error::Config("oscillation parameters k must be at least 1".into()));
        }
        if !(self.sweep.residual_tol > 0.0) {
            return Err(Error::Config("residual_tol must be positive".into()));
        }
        if let Some(t) = self.sweep.tol_grad {
            if !(t > 0.0) {
                return Err(Error::Config("tol_grad must be positive".into()));
            }
        }
        self.coefficient()?;
        self.load.f.parse::<FieldExpr>()?;
        self.field_spec()?;
        for s in self.load.fixtures.iter().chain(&self.field.weights) {
            s.parse::<FieldExpr>()?;
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::new(self.domain.lower.clone(), self.domain.upper.clone())
            .map_err(|e| Error::Config(format!("domain: {e}")))
    }

    pub fn family(&self) -> Result<KernelFamily> {
        self.kernel.family.parse()
    }

    pub fn coefficient(&self) -> Result<Coefficient> {
        Coefficient::parse(&self.domain()?, &self.coefficient.spec)
    }

    pub fn load_expr(&self) -> Result<FieldExpr> {
        self.load.f.parse()
    }

    pub fn field_spec(&self) -> Result<FieldSpec> {
        match self.field.u.trim() {
            "solve" => Ok(FieldSpec::Solve),
            "random" => Ok(FieldSpec::Random),
            s => Ok(FieldSpec::Fixed(s.parse()?)),
        }
    }

    /// One grid per horizon, each with collar equal to its horizon. Fails if a
    /// horizon does not exceed twice the spacing.
    pub fn grids(&self) -> Result<Vec<Grid>> {
        let domain = self.domain()?;
        self.sweep
            .deltas
            .iter()
            .map(|&delta| {
                let grid = Grid::build(&domain, &self.grid.n, delta)?;
                if delta <= 2.0 * grid.max_spacing() {
                    return Err(Error::Config(format!(
                        "horizon {delta} is not above twice the spacing {}",
                        grid.max_spacing()
                    )));
                }
                Ok(grid)
            })
            .collect()
    }
}
