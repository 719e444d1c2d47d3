//! Run configuration: one TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use hab_core::cocycle::Dynamics;
use hab_core::group::Signature;
use hab_core::hab::{QuadratureSettings, SweepSettings};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub signature: Option<Signature>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
    /// Gate tolerance for reported gaps.
    pub tol: Option<f64>,
    pub family: FamilyConfig,
    pub quadrature: QuadratureSettings,
    pub mean_value: MeanValueConfig,
    pub cocycle: CocycleConfig,
    pub lyapunov: LyapunovConfig,
    pub sweep: SweepSettings,
    pub schrodinger: SchrodingerConfig,
    pub sample: SampleConfig,
}

/// Where a list of matrices comes from; exactly one source may be set.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    /// Matrix JSON files.
    pub matrices: Vec<PathBuf>,
    /// Angle vectors `Γ`, one boost `K(Γ)` each.
    pub boosts: Vec<Vec<f64>>,
    pub random: Option<RandomFamily>,
    /// Treat the matrices as elements of `HSp(2d)`.
    pub hsp: Option<usize>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFamily {
    pub count: usize,
    pub gamma_max: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanValueConfig {
    pub radius: f64,
    pub n_points: usize,
    /// Points `[re, im]` at which the fixed point is compared with `ln ρ`.
    pub fixed_points: Vec<[f64; 2]>,
    pub fixed_point_tol: f64,
    pub max_iter: usize,
}

impl Default for MeanValueConfig {
    fn default() -> Self {
        Self {
            radius: 0.9,
            n_points: 4096,
            fixed_points: vec![[0.0, 0.0], [0.3, 0.0], [0.0, 0.5], [-0.7, 0.0]],
            fixed_point_tol: 1e-14,
            max_iter: 100_000,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CocycleConfig {
    pub dynamics: Option<Dynamics>,
    pub table: FamilyConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovConfig {
    /// Wedge order; defaults to the `d` of the group.
    pub k: Option<usize>,
    pub steps: usize,
    pub burn_in: usize,
    pub theta: f64,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            k: None,
            steps: 200_000,
            burn_in: 1_000,
            theta: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum PotentialConfig {
    Zero,
    /// `V = diag(values)` at every site.
    Diagonal { values: Vec<f64> },
    /// One diagonal per symbol of finite dynamics.
    Anderson { values: Vec<Vec<f64>> },
    /// `λ cos 2π(x + j/d)` on the diagonal, `t⊥` off it.
    Cosine { coupling: f64, transverse: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchrodingerConfig {
    pub d: usize,
    pub energy: f64,
    /// Scalar hopping `T = t·1`.
    pub hopping: f64,
    pub potential: PotentialConfig,
    pub dynamics: Option<Dynamics>,
    /// Also run the θ-sweep of the averaging identity.
    pub sweep: bool,
}

impl Default for SchrodingerConfig {
    fn default() -> Self {
        Self {
            d: 1,
            energy: 0.0,
            hopping: 1.0,
            potential: PotentialConfig::Zero,
            dynamics: None,
            sweep: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub count: usize,
    pub gamma_max: f64,
    /// Sample `HSp(2d)` instead of `U(c,d)`.
    pub hsp: Option<usize>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            count: 1,
            gamma_max: 1.0,
            hsp: None,
        }
    }
}

/// Overrides taken from the command line; `Some` wins over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub signature: Option<Signature>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub tol: Option<f64>,
    pub matrices: Vec<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.family.resolve(base);
        cfg.cocycle.table.resolve(base);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: Overrides) {
        self.seed = o.seed.or(self.seed);
        self.signature = o.signature.or(self.signature);
        self.output_dir = o.output_dir.or(self.output_dir.take());
        self.format = o.format.or(self.format);
        self.tol = o.tol.or(self.tol);
        if !o.matrices.is_empty() {
            self.family.matrices = o.matrices;
        }
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Invalid("a seed is required (--seed or `seed = ...`)".into()))
    }

    pub fn signature(&self) -> Result<Signature, CliError> {
        self.signature
            .ok_or_else(|| CliError::Invalid("a signature is required (--sig c,d or `signature = { c, d }`)".into()))
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(1e-8)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

impl FamilyConfig {
    fn resolve(&mut self, base: &Path) {
        for p in &mut self.matrices {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

pub fn parse_signature(s: &str) -> Result<Signature, String> {
    let (c, d) = s.split_once(',').ok_or("expected c,d")?;
    let c = c.trim().parse().map_err(|e| format!("c: {e}"))?;
    let d = d.trim().parse().map_err(|e| format!("d: {e}"))?;
    Signature::new(c, d).map_err(|e| e.to_string())
}
