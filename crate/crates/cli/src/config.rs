//! Run configuration. Every section rejects unknown keys.

use std::path::Path;

use serde::{Deserialize, Serialize};

use fockshell::meanfield::{ContinuumParams, ReferenceEnergy, SpinParams};
use fockshell::model::ModelConfig;
use fockshell::ncstates::{enumerate_labels, sample_labels, NcLabel, DEFAULT_LABEL_CAP};
use fockshell::spectra::SolverMode;
use fockshell::kspace::{KGrid, Units};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub labels: LabelSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub magnet: Option<MagnetConfig>,
    pub criteria: Option<CriteriaConfig>,
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LabelSpec {
    #[default]
    All,
    AllWithSkips,
    Sampled {
        seed: u64,
        count: usize,
        #[serde(default)]
        include_skips: bool,
    },
    Explicit {
        labels: Vec<NcLabel>,
    },
}

impl LabelSpec {
    pub fn resolve(&self, grid: &KGrid<f64>, cap: u128) -> fockshell::Result<Vec<NcLabel>> {
        Ok(match self {
            LabelSpec::All => enumerate_labels(grid, false, cap)?.collect(),
            LabelSpec::AllWithSkips => enumerate_labels(grid, true, cap)?.collect(),
            LabelSpec::Sampled {
                seed,
                count,
                include_skips,
            } => sample_labels(grid, *count, *seed, *include_skips),
            LabelSpec::Explicit { labels } => {
                for l in labels {
                    l.validate(grid)?;
                }
                labels.clone()
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorConfig {
    /// Explicit particle number; defaults to the fully paired layer plus
    /// explicit core.
    pub particles: Option<usize>,
    pub twice_sz: Option<i32>,
    pub momentum: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "dense")]
    pub mode: SolverMode,
    #[serde(default = "default_cap")]
    pub label_cap: u128,
    pub sector: Option<SectorConfig>,
}

fn dense() -> SolverMode {
    SolverMode::Dense
}

fn default_cap() -> u128 {
    DEFAULT_LABEL_CAP
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: SolverMode::Dense,
            label_cap: DEFAULT_LABEL_CAP,
            sector: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default = "default_samples")]
    pub rayleigh_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// `ξ` used for the `q = 0` pair, as `[re, im]`; the triplet is `[-1, 0]`.
    pub zero_pair_xi: Option<[f64; 2]>,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_samples() -> usize {
    100
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            tolerance: default_tol(),
            rayleigh_samples: default_samples(),
            seed: 0,
            zero_pair_xi: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; `--out` takes precedence.
    pub dir: Option<String>,
    /// File name prefix for every artifact.
    #[serde(default)]
    pub prefix: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagnetConfig {
    pub lambda: f64,
    pub i0: f64,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default)]
    pub field: f64,
    #[serde(default)]
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub units: Units<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaConfig {
    pub kf: f64,
    pub delta: f64,
    pub n_total: f64,
    #[serde(default = "one")]
    pub mass: f64,
    pub g_ss: f64,
    #[serde(default)]
    pub a_fs: f64,
    #[serde(default)]
    pub j_f: f64,
    #[serde(default)]
    pub n_f: f64,
    #[serde(default)]
    pub field: f64,
    #[serde(default)]
    pub reference: ReferenceConfig,
    /// Effective pair mass; stored and reported only.
    pub pair_effective_mass: Option<f64>,
    #[serde(default)]
    pub units: Units<f64>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceConfig {
    #[default]
    Fermi,
    Bcs {
        energy: Option<f64>,
    },
}

impl ReferenceConfig {
    pub fn energy(self) -> ReferenceEnergy<f64> {
        match self {
            ReferenceConfig::Fermi => ReferenceEnergy::Fermi,
            ReferenceConfig::Bcs { energy } => ReferenceEnergy::Bcs(energy),
        }
    }
}

impl CriteriaConfig {
    pub fn continuum(&self) -> ContinuumParams<f64> {
        ContinuumParams {
            hbar: self.units.hbar,
            ..ContinuumParams::quadratic(self.kf, self.delta, self.n_total, self.mass)
        }
    }

    pub fn spin(&self) -> SpinParams<f64> {
        SpinParams {
            g_ss: self.g_ss,
            a_fs: self.a_fs,
            j_f: self.j_f,
            n_f: self.n_f,
            field: self.field,
            units: self.units,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

/// Criterion map over `G_ss × Δ`, all other inputs from `criteria`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub g_ss: Range,
    pub delta: Range,
}

pub struct Loaded {
    pub config: RunConfig,
    pub sha256: String,
}

pub fn load(path: &Path) -> Result<Loaded, String> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| format!("config is not UTF-8: {e}"))?;
    let config: RunConfig = serde_json::from_str(text).map_err(|e| format!("invalid config {}: {e}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(Loaded { config, sha256 })
}
