//! TOML configuration schemas.
//!
//! Every config is fully validated by its `build`/`validate` method before any
//! field or solver is allocated.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use flrw_dirac::field::Grid;
use flrw_dirac::init::{Family, InitialData, LmForm};
use flrw_dirac::models::{LochakFns, NonlinearitySpec, PotentialKind, PotentialSpec};
use flrw_dirac::solver::{Model, SolverConfig};
use flrw_dirac::spacetime::Cosmology;
use flrw_dirac::{diagnostics, Error, C64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_blowup_factor() -> f64 {
    1e6
}

fn default_sobolev_k() -> u32 {
    2
}

fn missing(name: &str) -> CliError {
    CliError::validation(Error::InvalidParameter {
        name: name.to_string(),
        reason: "required for this kind".to_string(),
    })
}

/// Reads and parses a TOML file. Unreadable files are runtime errors, parse
/// errors are validation errors.
pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::runtime(e).context(format!("reading {}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::validation(e).context(format!("parsing {}", path.display())))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosmologyConfig {
    pub ell: f64,
    #[serde(default = "one")]
    pub a0: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassConfig {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub box_length: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKindConfig {
    #[default]
    Zero,
    ScalarBump,
    CustomMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    #[serde(default)]
    pub kind: PotentialKindConfig,
    #[serde(default)]
    pub amplitude: f64,
    /// Defaults to the box centre.
    pub center: Option<[f64; 3]>,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub time_power: f64,
    /// Rows of `[re, im]` pairs; required for `custom_matrix`.
    pub matrix: Option<[[[f64; 2]; 4]; 4]>,
    #[serde(default)]
    pub hermitian_required: bool,
    #[serde(default)]
    pub gamma2_condition_required: bool,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            kind: PotentialKindConfig::Zero,
            amplitude: 0.0,
            center: None,
            width: 1.0,
            time_power: 0.0,
            matrix: None,
            hermitian_required: false,
            gamma2_condition_required: false,
        }
    }
}

impl PotentialConfig {
    pub fn build(&self, grid: &Grid) -> CliResult<PotentialSpec> {
        let kind = match self.kind {
            PotentialKindConfig::Zero => PotentialKind::Zero,
            PotentialKindConfig::ScalarBump => PotentialKind::ScalarBump,
            PotentialKindConfig::CustomMatrix => {
                PotentialKind::CustomMatrix(flrw_dirac::models::Mat4CSerde(
                    self.matrix.ok_or_else(|| missing("potential.matrix"))?,
                ))
            }
        };
        let spec = PotentialSpec {
            kind,
            amplitude: self.amplitude,
            center: self.center.unwrap_or_else(|| grid.center()),
            width: self.width,
            time_power: self.time_power,
            hermitian_required: self.hermitian_required,
            gamma2_condition_required: self.gamma2_condition_required,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    #[default]
    None,
    PowerAbs,
    PowerG0g5,
    LochakForm,
    BlowupG,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    #[serde(default)]
    pub kind: NonlinearityKind,
    /// Growth exponent of the power families.
    pub alpha_exp: Option<f64>,
    /// Sign of `power_abs` (`+1` or `-1`).
    pub sign: Option<f64>,
    pub c0: Option<f64>,
    /// Linear Lochak coefficients: `α = alpha_xi ξ + alpha_eta η`, `β = beta_xi ξ + beta_eta η`.
    #[serde(default)]
    pub alpha_xi: f64,
    #[serde(default)]
    pub alpha_eta: f64,
    #[serde(default)]
    pub beta_xi: f64,
    #[serde(default)]
    pub beta_eta: f64,
}

impl NonlinearityConfig {
    pub fn build(&self) -> CliResult<NonlinearitySpec> {
        let alpha = || {
            self.alpha_exp
                .ok_or_else(|| missing("nonlinearity.alpha_exp"))
        };
        let spec = match self.kind {
            NonlinearityKind::None => NonlinearitySpec::None,
            NonlinearityKind::PowerAbs => NonlinearitySpec::PowerAbs {
                alpha: alpha()?,
                sign: self.sign.unwrap_or(1.0),
            },
            NonlinearityKind::PowerG0g5 => NonlinearitySpec::PowerG0G5 { alpha: alpha()? },
            NonlinearityKind::LochakForm => NonlinearitySpec::LochakForm(LochakFns::Linear {
                alpha_xi: self.alpha_xi,
                alpha_eta: self.alpha_eta,
                beta_xi: self.beta_xi,
                beta_eta: self.beta_eta,
            }),
            NonlinearityKind::BlowupG => NonlinearitySpec::BlowupG {
                alpha: alpha()?,
                c0: self.c0.ok_or_else(|| missing("nonlinearity.c0"))?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "one")]
    pub t_start: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub dt_max: f64,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    #[serde(default = "default_blowup_factor")]
    pub blowup_factor: f64,
    #[serde(default = "default_sobolev_k")]
    pub sobolev_k: u32,
    /// Seed for the potential-flag sampling.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyConfig {
    Gaussian,
    Bump,
    PlaneWavePacket,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataConfig {
    pub family: FamilyConfig,
    /// Carrier wavenumber of `plane_wave_packet`.
    pub wavenumber: Option<f64>,
    pub amplitude: f64,
    pub width: f64,
    /// Defaults to the box centre.
    pub center: Option<[f64; 3]>,
    /// Use the `ρ² ≡ 0` component pattern: `(g, 0, g, 0)`, or the Majorana
    /// pattern when `lm_z` is given.
    #[serde(default)]
    pub lm_constrained: bool,
    pub lm_z: Option<[f64; 2]>,
    /// Fixed spinor coefficients as `[re, im]` pairs; drawn from `seed` otherwise.
    pub components: Option<[[f64; 2]; 4]>,
    #[serde(default)]
    pub seed: u64,
}

impl InitialDataConfig {
    pub fn build(&self, grid: &Grid) -> CliResult<InitialData> {
        let family = match self.family {
            FamilyConfig::Gaussian => Family::Gaussian,
            FamilyConfig::Bump => Family::Bump,
            FamilyConfig::PlaneWavePacket => Family::PlaneWavePacket {
                wavenumber: self
                    .wavenumber
                    .ok_or_else(|| missing("initial_data.wavenumber"))?,
            },
        };
        if self.lm_z.is_some() && !self.lm_constrained {
            return Err(CliError::validation(Error::InvalidParameter {
                name: "initial_data.lm_z".into(),
                reason: "only meaningful with lm_constrained = true".into(),
            }));
        }
        let lm = self.lm_constrained.then_some(match self.lm_z {
            Some(z) => LmForm::Majorana { z },
            None => LmForm::Pair,
        });
        let data = InitialData {
            family,
            amplitude: self.amplitude,
            width: self.width,
            center: self.center.unwrap_or_else(|| grid.center()),
            lm,
            components: self.components,
            seed: self.seed,
        };
        data.validate()?;
        Ok(data)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub snapshots: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            dir: default_dir(),
            snapshots: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cosmology: CosmologyConfig,
    pub mass: MassConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub nonlinearity: NonlinearityConfig,
    pub solver: SolverSection,
    pub initial_data: InitialDataConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

/// Validated run inputs.
#[derive(Debug)]
pub struct Prepared {
    pub model: Model,
    pub grid: Grid,
    pub solver: SolverConfig,
    pub initial_data: InitialData,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        read_toml(path)
    }

    pub fn build(&self) -> CliResult<Prepared> {
        let cosmology = Cosmology::new(self.cosmology.ell, self.cosmology.a0)?;
        let grid = Grid::new(self.grid.dim, self.grid.n, self.grid.box_length)?;
        let model = Model {
            cosmology,
            mass: C64::new(self.mass.re, self.mass.im),
            potential: self.potential.build(&grid)?,
            nonlinearity: self.nonlinearity.build()?,
        };
        model.validate()?;
        let s = &self.solver;
        let solver = SolverConfig {
            t_start: s.t_start,
            t_end: s.t_end,
            cfl: s.cfl,
            dt_max: s.dt_max,
            blowup_factor: s.blowup_factor,
            record_every: s.record_every,
            sobolev_k: s.sobolev_k,
            support: None,
            defect_z: None,
            seed: s.seed,
        };
        solver.validate()?;
        let initial_data = self.initial_data.build(&grid)?;
        Ok(Prepared {
            model,
            grid,
            solver,
            initial_data,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: String,
    pub tolerance: f64,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// List of named diagnostics checks.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationSuite {
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

impl VerificationSuite {
    pub fn load(path: &Path) -> CliResult<Self> {
        let suite: Self = read_toml(path)?;
        suite.validate()?;
        Ok(suite)
    }

    pub fn validate(&self) -> CliResult<()> {
        for (i, c) in self.checks.iter().enumerate() {
            if !diagnostics::CHECKS.contains(&c.name.as_str()) {
                return Err(CliError::validation(Error::InvalidParameter {
                    name: format!("checks[{i}].name"),
                    reason: format!(
                        "unknown check {:?}; expected one of {:?}",
                        c.name,
                        diagnostics::CHECKS
                    ),
                }));
            }
            if !(c.tolerance >= 0.0) {
                return Err(CliError::validation(Error::InvalidParameter {
                    name: format!("checks[{i}].tolerance"),
                    reason: format!("must be non-negative, got {}", c.tolerance),
                }));
            }
        }
        Ok(())
    }
}

/// Optional direct simulation per sweep case: a 3D Gaussian of width `r`
/// scaled to energy `e1`, evolved with the `blowup_g` nonlinearity.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalConfig {
    #[serde(default = "default_empirical_n")]
    pub n: usize,
    pub box_length: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub dt_max: f64,
    #[serde(default = "one")]
    pub mass_re: f64,
    /// Relative slack allowed on `t_numerical <= T_bu`.
    #[serde(default)]
    pub slack: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_empirical_n() -> usize {
    32
}

/// Cartesian parameter grid for the blow-up classifier.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub ell: Vec<f64>,
    pub alpha: Vec<f64>,
    #[serde(default = "zero_list")]
    pub im_m: Vec<f64>,
    #[serde(default = "one_list")]
    pub c0: Vec<f64>,
    #[serde(default = "one_list")]
    pub r: Vec<f64>,
    #[serde(default = "one_list")]
    pub e1: Vec<f64>,
    #[serde(default = "one")]
    pub a0: f64,
    pub empirical: Option<EmpiricalConfig>,
}

fn zero_list() -> Vec<f64> {
    vec![0.0]
}

fn one_list() -> Vec<f64> {
    vec![1.0]
}

impl SweepConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let cfg: Self = read_toml(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let lists = [
            ("ell", &self.ell),
            ("alpha", &self.alpha),
            ("im_m", &self.im_m),
            ("c0", &self.c0),
            ("r", &self.r),
            ("e1", &self.e1),
        ];
        for (name, values) in lists {
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(CliError::validation(Error::InvalidParameter {
                    name: name.to_string(),
                    reason: format!("entries must be finite, got {v}"),
                }));
            }
        }
        if let Some(e) = &self.empirical {
            Grid::new(3, e.n, e.box_length).map_err(|e| CliError::from(e).context("empirical"))?;
            SolverConfig {
                t_end: e.t_end,
                cfl: e.cfl,
                dt_max: e.dt_max,
                ..SolverConfig::default()
            }
            .validate()
            .map_err(|err| CliError::from(err).context("empirical"))?;
        }
        Ok(())
    }

    /// Number of cases in the Cartesian product.
    pub fn len(&self) -> usize {
        self.ell.len()
            * self.alpha.len()
            * self.im_m.len()
            * self.c0.len()
            * self.r.len()
            * self.e1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
