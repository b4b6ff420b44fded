//! TOML experiment configuration. Unknown keys are hard errors: a silent
//! knob typo would invalidate a lemma verdict.

use crate::domain::{self, GridDomain};
use crate::error::{Error, Result};
use crate::potential::{self, AssumptionConstants, PotentialSpec};
use crate::qsa::WalkBackend;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
    pub d: usize,
    pub beta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub l: f64,
    pub m: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub g: f64,
    pub c_lsi: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
}

fn default_rho() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    /// Truncation radius; omit to derive it from the tail bound at the
    /// run's epsilon.
    pub r: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub eta: f64,
    #[serde(default = "default_true")]
    pub lazy: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub epsilon: f64,
    pub alpha_scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    /// one of mala | ula | sula
    pub kind: String,
    #[serde(default)]
    pub batch: Option<usize>,
    #[serde(default = "default_c_proj")]
    pub c_proj: f64,
}

fn default_c_proj() -> f64 {
    crate::qsa::C_PROJ
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    #[serde(default = "default_shots")]
    pub shots: usize,
    pub epsilon: f64,
}

fn default_shots() -> usize {
    10_000
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub json: Option<String>,
    #[serde(default)]
    pub csv: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialSection,
    pub constants: ConstantsSection,
    pub domain: DomainSection,
    pub chain: ChainSection,
    pub schedule: ScheduleSection,
    pub backend: BackendSection,
    pub run: RunSection,
    #[serde(default)]
    pub output: Option<OutputSection>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        if !matches!(self.backend.kind.as_str(), "mala" | "ula" | "sula") {
            return Err(Error::Config(format!(
                "backend.kind '{}' not one of mala|ula|sula",
                self.backend.kind
            )));
        }
        if self.backend.kind == "sula" && self.backend.batch.is_none() {
            return Err(Error::Config("sula backend requires backend.batch".into()));
        }
        if !(self.backend.c_proj > 0.0) {
            return Err(Error::Config("backend.c_proj must be positive".into()));
        }
        if !(self.run.epsilon > 0.0 && self.run.epsilon < 1.0) {
            return Err(Error::Config("run.epsilon must lie in (0,1)".into()));
        }
        Ok(())
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        potential::catalog(
            &self.potential.name,
            &self.potential.params,
            self.potential.d,
            self.potential.beta,
        )
    }

    pub fn assumption_constants(&self) -> AssumptionConstants {
        AssumptionConstants {
            l: self.constants.l,
            m: self.constants.m,
            b: self.constants.b,
            g: self.constants.g,
            c_lsi: self.constants.c_lsi,
            rho: self.constants.rho,
        }
    }

    pub fn grid(&self) -> Result<GridDomain> {
        let r = match self.domain.r {
            Some(r) => r,
            None => domain::truncation_radius(
                self.run.epsilon,
                self.potential.d,
                self.constants.m,
                self.potential.beta,
                self.constants.l,
            ),
        };
        domain::build_grid(self.potential.d, r, self.domain.n)
    }

    pub fn walk_backend(&self) -> WalkBackend {
        match self.backend.kind.as_str() {
            "mala" => WalkBackend::Mala,
            "ula" => WalkBackend::Ula,
            _ => WalkBackend::Sula {
                batch_size: self.backend.batch.unwrap_or(1),
            },
        }
    }
}
