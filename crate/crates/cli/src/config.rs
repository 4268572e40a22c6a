//! Run configuration: one JSON document drives every subcommand. Unknown
//! keys are rejected so sweep configs stay reproducible.

use serde::{Deserialize, Serialize};

use kirchhoff_core::groundstate::ShootConfig;
use kirchhoff_core::kirchhoff_coeff::CoeffConfig;
use kirchhoff_core::nonlinearity::NonlinearityConfig;
use kirchhoff_core::radial_numerics::GridSpec;
use kirchhoff_core::semiclassical::PotentialSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub moser: MoserConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub nonlinearity: NonlinearityConfig,
    pub m: f64,
    pub coeff: CoeffConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialConfig>,
}

/// The built-in radial well `V(ρ) = m + ρ²/(1+ρ²)`, with the well value
/// taken from the problem mass.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub o_radius: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub grid: GridSpec,
    pub s_max: Option<f64>,
    pub r_end: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let d = ShootConfig::default();
        Self {
            grid: GridSpec::canonical(),
            s_max: None,
            r_end: d.r_end,
        }
    }
}

impl NumericsConfig {
    pub fn shoot_config(&self) -> ShootConfig {
        ShootConfig {
            grid: self.grid,
            s_max: self.s_max,
            r_end: self.r_end,
            ..ShootConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MoserConfig {
    pub n_max: u32,
    pub beta0: Option<f64>,
}

impl Default for MoserConfig {
    fn default() -> Self {
        Self {
            n_max: 1 << 20,
            beta0: None,
        }
    }
}

impl RunConfig {
    /// The built-in three-dimensional critical problem with an affine
    /// coefficient and the default radial well.
    pub fn default_3d() -> Self {
        Self {
            problem: ProblemConfig {
                nonlinearity: NonlinearityConfig {
                    n: 3,
                    family: "critical_sobolev".into(),
                    lambda: Some(1.0),
                    p: Some(5.0),
                    mu: None,
                    truncation: None,
                },
                m: 1.0,
                coeff: CoeffConfig {
                    family: "affine".into(),
                    a: Some(1.0),
                    b: Some(0.5),
                    c: None,
                },
                potential: Some(PotentialConfig { o_radius: 1.0 }),
            },
            numerics: NumericsConfig::default(),
            moser: MoserConfig::default(),
            eps_list: Some(vec![0.5, 0.2, 0.1, 0.05]),
        }
    }

    pub fn potential_spec(&self) -> Option<Result<PotentialSpec, String>> {
        self.problem
            .potential
            .map(|p| PotentialSpec::radial_well(self.problem.m, p.o_radius).map_err(|e| e.to_string()))
    }
}
