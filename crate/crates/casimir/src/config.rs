//! Run configurations. Every command reads one TOML document; unknown keys
//! are rejected and absent sections fall back to the reference setup
//! (gold-coated sphere of radius 294.3 um over a copper plate).

use std::path::{Path, PathBuf};

use casimir_core::lifshitz::SpherePlaneGeometry;
use casimir_core::oscillator::{AmplitudeSchedule, NoiseConfig, OscillatorParams};
use casimir_core::roughness::{weights_from_heightmap, weights_from_heightmaps, RoughnessDistribution, RoughnessEntry};
use casimir_core::yukawa::{Layer, LayeredBody, Shape, YukawaMethod};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::io;
use crate::registry::toml_error;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const REFERENCE_RADIUS: f64 = 294.3e-6;

/// Reads a config file, or returns the defaults when there is none.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<(T, PathBuf)> {
    match path {
        None => Ok((T::default(), PathBuf::from("."))),
        Some(p) => {
            let text = io::read_to_string(p)?;
            let cfg = toml::from_str(&text).map_err(|e| toml_error(p, &text, &e))?;
            Ok((cfg, p.parent().map(Path::to_path_buf).unwrap_or_default()))
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Either explicit `values` or `start`, `stop`, `points` (and `spacing`).
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Grid {
    pub fn explicit(values: Vec<f64>) -> Self {
        Grid { values: Some(values), ..Grid::default() }
    }

    pub fn resolve(&self, what: &str) -> Result<Vec<f64>> {
        let v = match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n)
                    .map(|i| {
                        let t = i as f64 / (n - 1) as f64;
                        match self.spacing {
                            Spacing::Linear => a + (b - a) * t,
                            Spacing::Log => a * (b / a).powf(t),
                        }
                    })
                    .collect(),
            },
            (None, None, None, None) => Vec::new(),
            _ => return Err(usage(format!("{what} grid: give either `values` or all of `start`, `stop`, `points`"))),
        };
        if v.is_empty() {
            return Err(usage(format!("{what} grid is empty")));
        }
        if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(usage(format!("{what} grid value {x} must be positive")));
        }
        if self.spacing == Spacing::Log && self.start.is_some_and(|a| a <= 0.0) {
            return Err(usage(format!("{what} grid: log spacing needs a positive start")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub radius_m: f64,
    pub delta0_m: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { radius_m: REFERENCE_RADIUS, delta0_m: 0.0 }
    }
}

impl GeometryConfig {
    /// Geometry at metal separation `z`.
    pub fn at(&self, z: f64) -> Result<SpherePlaneGeometry> {
        Ok(SpherePlaneGeometry::new(self.radius_m, z, self.delta0_m)?)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialsConfig {
    pub sphere: String,
    pub plate: String,
}

impl Default for MaterialsConfig {
    fn default() -> Self {
        MaterialsConfig { sphere: "au".into(), plate: "cu".into() }
    }
}

/// One of: explicit `entries = [[offset_m, weight], ...]`, a combined
/// `heightmap`, or `sphere_map` plus `plate_map`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoughnessConfig {
    pub entries: Option<Vec<[f64; 2]>>,
    pub heightmap: Option<PathBuf>,
    pub sphere_map: Option<PathBuf>,
    pub plate_map: Option<PathBuf>,
    pub bins: Option<usize>,
}

impl RoughnessConfig {
    pub fn distribution(&self, base: &Path) -> Result<RoughnessDistribution> {
        let bins = self.bins.unwrap_or(casimir_core::roughness::DEFAULT_BINS);
        match (&self.entries, &self.heightmap, &self.sphere_map, &self.plate_map) {
            (Some(e), None, None, None) => Ok(RoughnessDistribution::new(
                e.iter().map(|&[offset, weight]| RoughnessEntry { offset, weight }).collect(),
            )?),
            (None, Some(h), None, None) => Ok(weights_from_heightmap(&io::read_heightmap(&resolve(base, h))?, bins)?),
            (None, None, Some(s), Some(p)) => Ok(weights_from_heightmaps(
                &io::read_heightmap(&resolve(base, s))?,
                &io::read_heightmap(&resolve(base, p))?,
                bins,
            )?),
            _ => Err(usage("roughness: give exactly one of `entries`, `heightmap`, or `sphere_map` with `plate_map`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    #[default]
    Force,
    Gradient,
}

/// `force` and `pressure` commands.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub registry: Option<PathBuf>,
    pub tol: Option<f64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub quantity: Option<Quantity>,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub materials: MaterialsConfig,
    #[serde(default)]
    pub grid: Grid,
    pub roughness: Option<RoughnessConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Nominal radius the fit starts from, m.
    pub radius_guess_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatorConfig {
    pub f0_hz: f64,
    pub coupling_per_kg: f64,
    pub quality: f64,
}

impl Default for OscillatorConfig {
    fn default() -> Self {
        let r = OscillatorParams::REFERENCE;
        OscillatorConfig {
            f0_hz: r.f0_hz(),
            coupling_per_kg: r.coupling,
            quality: r.quality,
        }
    }
}

impl OscillatorConfig {
    pub fn params(&self) -> Result<OscillatorParams> {
        Ok(OscillatorParams::new(
            2.0 * std::f64::consts::PI * self.f0_hz,
            self.quality,
            self.coupling_per_kg,
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub freq_noise_hz_per_rthz: f64,
    pub separation_noise_m: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let n = NoiseConfig::default();
        NoiseSection {
            freq_noise_hz_per_rthz: n.freq_noise_density,
            separation_noise_m: n.separation_noise_rms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmplitudeSection {
    pub z_near_m: f64,
    pub amp_near_m: f64,
    pub z_far_m: f64,
    pub amp_far_m: f64,
}

impl Default for AmplitudeSection {
    fn default() -> Self {
        let a = AmplitudeSchedule::default();
        AmplitudeSection {
            z_near_m: a.z_near,
            amp_near_m: a.amp_near,
            z_far_m: a.z_far,
            amp_far_m: a.amp_far,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRunConfig {
    pub registry: Option<PathBuf>,
    pub tol: Option<f64>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    /// Raw sweep CSV; the inverted CSV goes next to it.
    pub out: Option<PathBuf>,
    pub inverted_out: Option<PathBuf>,
    #[serde(default = "default_integration_time")]
    pub integration_time_s: f64,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub materials: MaterialsConfig,
    #[serde(default)]
    pub grid: Grid,
    pub roughness: Option<RoughnessConfig>,
    #[serde(default)]
    pub oscillator: OscillatorConfig,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub amplitude: AmplitudeSection,
}

fn default_integration_time() -> f64 {
    10.0
}

impl Default for SweepRunConfig {
    fn default() -> Self {
        SweepRunConfig {
            registry: None,
            tol: None,
            threads: None,
            seed: None,
            out: None,
            inverted_out: None,
            integration_time_s: default_integration_time(),
            geometry: GeometryConfig::default(),
            materials: MaterialsConfig::default(),
            grid: Grid::default(),
            roughness: None,
            oscillator: OscillatorConfig::default(),
            noise: NoiseSection::default(),
            amplitude: AmplitudeSection::default(),
        }
    }
}

impl SweepRunConfig {
    pub fn sweep(&self) -> Result<casimir_core::oscillator::SweepConfig> {
        let a = self.amplitude;
        let cfg = casimir_core::oscillator::SweepConfig {
            z_grid: self.grid.resolve("separation")?,
            amplitude: AmplitudeSchedule {
                z_near: a.z_near_m,
                amp_near: a.amp_near_m,
                z_far: a.z_far_m,
                amp_far: a.amp_far_m,
            },
            integration_time: self.integration_time_s,
            noise: NoiseConfig {
                freq_noise_density: self.noise.freq_noise_hz_per_rthz,
                separation_noise_rms: self.noise.separation_noise_m,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `layers = [[thickness_m, density], ...]` outermost first.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    #[serde(default)]
    pub layers: Vec<[f64; 2]>,
    pub core_density: f64,
}

impl BodyConfig {
    fn layers(&self) -> Vec<Layer> {
        self.layers
            .iter()
            .map(|&[thickness, density]| Layer { thickness, density })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodConfig {
    #[default]
    Auto,
    Analytic,
    Quadrature,
}

impl From<MethodConfig> for YukawaMethod {
    fn from(m: MethodConfig) -> Self {
        match m {
            MethodConfig::Auto => YukawaMethod::Auto,
            MethodConfig::Analytic => YukawaMethod::Analytic,
            MethodConfig::Quadrature => YukawaMethod::Quadrature,
        }
    }
}

/// Residual force bound: a constant, or a `z_m,bound_n` CSV interpolated
/// linearly and held constant beyond its ends.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub constant_n: Option<f64>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub method: MethodConfig,
    pub radius_m: Option<f64>,
    pub sphere: Option<BodyConfig>,
    pub plate: Option<BodyConfig>,
    #[serde(default)]
    pub lambda: Grid,
    #[serde(default)]
    pub grid: Grid,
    pub bound: Option<BoundConfig>,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        LimitsConfig {
            threads: None,
            out: None,
            method: MethodConfig::Auto,
            radius_m: None,
            sphere: None,
            plate: None,
            lambda: Grid::default(),
            grid: Grid::default(),
            bound: None,
        }
    }
}

impl LimitsConfig {
    pub fn bodies(&self) -> Result<(LayeredBody, LayeredBody)> {
        let radius = self.radius_m.unwrap_or(REFERENCE_RADIUS);
        let sphere = match &self.sphere {
            None => LayeredBody::reference_sphere(radius)?,
            Some(b) => LayeredBody::sphere(radius, b.layers(), b.core_density)?,
        };
        let plate = match &self.plate {
            None => LayeredBody::reference_plate()?,
            Some(b) => LayeredBody::half_space(b.layers(), b.core_density)?,
        };
        debug_assert!(matches!(sphere.shape, Shape::Sphere { .. }));
        Ok((sphere, plate))
    }

    pub fn bound(&self, base: &Path) -> Result<Bound> {
        match &self.bound {
            Some(BoundConfig { constant_n: Some(c), file: None }) => Ok(Bound::Constant(*c)),
            Some(BoundConfig { constant_n: None, file: Some(f) }) => {
                let rows = io::read_bound(&resolve(base, f))?;
                if rows.is_empty() {
                    return Err(usage("bound file has no rows"));
                }
                Ok(Bound::Table(rows))
            }
            _ => Err(usage("limits: give `bound.constant_n` or `bound.file`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Bound {
    Constant(f64),
    Table(Vec<(f64, f64)>),
}

impl Bound {
    pub fn at(&self, z: f64) -> f64 {
        match self {
            Bound::Constant(c) => *c,
            Bound::Table(rows) => {
                let i = rows.partition_point(|r| r.0 < z);
                if i == 0 {
                    return rows[0].1;
                }
                if i == rows.len() {
                    return rows[rows.len() - 1].1;
                }
                let (z0, b0) = rows[i - 1];
                let (z1, b1) = rows[i];
                b0 + (b1 - b0) * (z - z0) / (z1 - z0)
            }
        }
    }
}
