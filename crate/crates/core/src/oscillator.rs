//! Micro-torsional oscillator: spring constant, separation bookkeeping, the
//! frequency shift under a force gradient, and synthetic sweeps.
//!
//! Sign convention: `gradient` is `dF/dz` of the signed force. An attractive
//! force that strengthens as the gap closes has a positive gradient and
//! lowers the resonance:
//!
//! ```text
//! omega_r = omega0 [1 - (b^2 / 2 I omega0^2) dF/dz]
//! ```
//!
//! Higher orders in the tilt `theta` shift the resonance by roughly 0.1%;
//! that systematic is not modeled, only bounded by the linear-domain guard.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::error::{config, domain};
use crate::lifshitz::{LifshitzPair, SpherePlaneGeometry};
use crate::roughness::{averaged_gradient_with, RoughnessDistribution};
use crate::Result;

/// Largest `|c g|` with `c = b^2 / 2 I omega0^2` accepted as linear response.
pub const LINEAR_DOMAIN: f64 = 0.1;
/// Largest plate tilt accepted by the small-angle bookkeeping, rad.
pub const MAX_TILT: f64 = 0.01;
const CONSISTENCY_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerpentineSpring {
    pub width: f64,
    pub thickness: f64,
    pub length: f64,
    pub youngs_modulus: f64,
}

impl SerpentineSpring {
    /// 2 um x 2 um polysilicon serpentine, 500 um long.
    pub const REFERENCE: SerpentineSpring = SerpentineSpring {
        width: 2e-6,
        thickness: 2e-6,
        length: 500e-6,
        youngs_modulus: 180e9,
    };
}

/// Torsional spring constant `w t^3 E / (6 L)`, N m/rad.
pub fn spring_constant(s: &SerpentineSpring) -> Result<f64> {
    for (name, v) in [
        ("width", s.width),
        ("thickness", s.thickness),
        ("length", s.length),
        ("Young's modulus", s.youngs_modulus),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(domain!("spring {name} must be positive, got {v}"));
        }
    }
    Ok(s.width * s.thickness * s.thickness * s.thickness * s.youngs_modulus / (6.0 * s.length))
}

/// `z_metal = z_i - z_o - z_g - b theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationModel {
    /// Interferometer reading `z_i`, m.
    pub z_fiber: f64,
    /// Reading at contact `z_o`, m.
    pub z_contact: f64,
    /// Plate-to-substrate gap `z_g`, m.
    pub z_gap: f64,
    pub lever_b: f64,
    pub theta: f64,
}

impl SeparationModel {
    pub fn separation(&self) -> Result<f64> {
        if !(libm::fabs(self.theta) <= MAX_TILT) {
            return Err(domain!(
                "tilt {} rad exceeds the small-angle limit {MAX_TILT} rad",
                self.theta
            ));
        }
        if self.lever_b < 0.0 {
            return Err(domain!("lever arm must be non-negative"));
        }
        Ok(self.z_fiber - self.z_contact - self.z_gap - self.lever_b * self.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    /// Free resonance, rad/s.
    pub omega0: f64,
    pub quality: f64,
    /// `b^2 / 2I`, 1/kg.
    pub coupling: f64,
    pub kappa: Option<f64>,
    pub inertia: Option<f64>,
    pub lever_b: Option<f64>,
}

impl OscillatorParams {
    /// The reference device: 687.23 Hz resonance, `b^2/2I = 6.489e8 /kg`,
    /// measured `kappa = 8.6e-10 N m/rad`, `I = 4.6e-17 kg m^2`. `Q` is not
    /// a measured value; 8000 is typical of such devices in vacuum and does
    /// not enter any computed quantity.
    pub const REFERENCE: OscillatorParams = OscillatorParams {
        omega0: 2.0 * PI * 687.23,
        quality: 8000.0,
        coupling: 6.489e8,
        kappa: Some(8.6e-10),
        inertia: Some(4.6e-17),
        lever_b: None,
    };

    pub fn new(omega0: f64, quality: f64, coupling: f64) -> Result<Self> {
        let p = OscillatorParams {
            omega0,
            quality,
            coupling,
            kappa: None,
            inertia: None,
            lever_b: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega0", Some(self.omega0)),
            ("Q", Some(self.quality)),
            ("b^2/2I", Some(self.coupling)),
            ("kappa", self.kappa),
            ("I", self.inertia),
            ("b", self.lever_b),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(config!("oscillator {name} must be positive, got {v}"));
                }
            }
        }
        if let (Some(k), Some(i)) = (self.kappa, self.inertia) {
            let w = libm::sqrt(k / i);
            if libm::fabs(w / self.omega0 - 1.0) > CONSISTENCY_TOL {
                return Err(config!(
                    "sqrt(kappa/I) = {w:.6e} rad/s disagrees with omega0 = {:.6e} rad/s by more than 2%",
                    self.omega0
                ));
            }
        }
        if let (Some(b), Some(i)) = (self.lever_b, self.inertia) {
            let c = b * b / (2.0 * i);
            if libm::fabs(c / self.coupling - 1.0) > CONSISTENCY_TOL {
                return Err(config!(
                    "b^2/2I = {c:.6e} /kg disagrees with the coupling {:.6e} /kg by more than 2%",
                    self.coupling
                ));
            }
        }
        Ok(())
    }

    pub fn f0_hz(&self) -> f64 {
        self.omega0 / (2.0 * PI)
    }

    /// Fractional frequency shift per unit gradient, `b^2 / (2 I omega0^2)`, m/N.
    pub fn sensitivity(&self) -> f64 {
        self.coupling / (self.omega0 * self.omega0)
    }
}

fn check_linear(params: &OscillatorParams, gradient: f64) -> Result<()> {
    let x = params.sensitivity() * gradient;
    if !(libm::fabs(x) < LINEAR_DOMAIN) {
        return Err(domain!(
            "gradient {gradient:e} N/m shifts the resonance by a fraction {x:e}; \
             the linear model holds only below {LINEAR_DOMAIN}, use a smaller gradient"
        ));
    }
    Ok(())
}

/// `omega_r - omega0`, rad/s.
pub fn frequency_shift(params: &OscillatorParams, gradient: f64) -> Result<f64> {
    params.validate()?;
    check_linear(params, gradient)?;
    Ok(-params.coupling * gradient / params.omega0)
}

/// Resonance under a force gradient, rad/s.
pub fn resonant_frequency(params: &OscillatorParams, gradient: f64) -> Result<f64> {
    Ok(params.omega0 + frequency_shift(params, gradient)?)
}

/// Inverse of [`frequency_shift`].
pub fn gradient_from_shift(params: &OscillatorParams, delta_omega: f64) -> Result<f64> {
    params.validate()?;
    let g = -delta_omega * params.omega0 / params.coupling;
    check_linear(params, g)?;
    Ok(g)
}

/// Inverse of [`resonant_frequency`]. Subtracting `omega0` costs about
/// `eps omega0 / |delta omega|` relative precision; [`gradient_from_shift`]
/// avoids that when the shift is known directly.
pub fn gradient_from_frequency(params: &OscillatorParams, omega_r: f64) -> Result<f64> {
    gradient_from_shift(params, omega_r - params.omega0)
}

/// Gradient whose shift is exactly `delta_f_min` (Hz), N/m.
pub fn min_detectable_gradient(params: &OscillatorParams, delta_f_min: f64) -> Result<f64> {
    if !(delta_f_min > 0.0) {
        return Err(domain!("frequency resolution must be positive, got {delta_f_min}"));
    }
    params.validate()?;
    Ok(2.0 * PI * delta_f_min * params.omega0 / params.coupling)
}

/// Plane-plane pressure resolution equivalent to a gradient resolution for
/// a sphere of radius `radius`: `g / (2 pi R)`, N/m^2.
pub fn pressure_resolution(min_gradient: f64, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(domain!("radius must be positive"));
    }
    Ok(min_gradient / (2.0 * PI * radius))
}

/// Drive amplitude interpolated linearly in separation between two anchors
/// and held constant outside them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeSchedule {
    pub z_near: f64,
    pub amp_near: f64,
    pub z_far: f64,
    pub amp_far: f64,
}

impl Default for AmplitudeSchedule {
    fn default() -> Self {
        AmplitudeSchedule {
            z_near: 0.2e-6,
            amp_near: 3e-9,
            z_far: 1.2e-6,
            amp_far: 35e-9,
        }
    }
}

impl AmplitudeSchedule {
    pub fn amplitude(&self, z: f64) -> f64 {
        if z <= self.z_near {
            return self.amp_near;
        }
        if z >= self.z_far {
            return self.amp_far;
        }
        let t = (z - self.z_near) / (self.z_far - self.z_near);
        self.amp_near + t * (self.amp_far - self.amp_near)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Frequency noise density, Hz/sqrt(Hz); the per-point standard
    /// deviation is this over `sqrt(integration_time)`.
    pub freq_noise_density: f64,
    /// Standard deviation of the separation jitter, m.
    pub separation_noise_rms: f64,
}

impl NoiseConfig {
    pub const NONE: NoiseConfig = NoiseConfig {
        freq_noise_density: 0.0,
        separation_noise_rms: 0.0,
    };
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            freq_noise_density: 10e-3,
            separation_noise_rms: 0.32e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub z_grid: Vec<f64>,
    pub amplitude: AmplitudeSchedule,
    /// Seconds per point.
    pub integration_time: f64,
    pub noise: NoiseConfig,
}

impl SweepConfig {
    /// `n` separations spaced evenly over `[z_min, z_max]`, default schedule
    /// and noise, 10 s per point.
    pub fn linear(z_min: f64, z_max: f64, n: usize) -> Self {
        let z_grid = match n {
            0 => Vec::new(),
            1 => alloc::vec![z_min],
            _ => (0..n)
                .map(|i| z_min + (z_max - z_min) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        SweepConfig {
            z_grid,
            amplitude: AmplitudeSchedule::default(),
            integration_time: 10.0,
            noise: NoiseConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.z_grid.is_empty() {
            return Err(config!("sweep grid is empty"));
        }
        if !(self.integration_time > 0.0 && self.integration_time.is_finite()) {
            return Err(config!("integration time must be positive"));
        }
        if !(self.noise.freq_noise_density >= 0.0 && self.noise.separation_noise_rms >= 0.0) {
            return Err(config!("noise magnitudes must be non-negative"));
        }
        let mut bad = String::new();
        for (i, &z) in self.z_grid.iter().enumerate() {
            if !(z > 0.0 && z.is_finite()) {
                return Err(config!("point {i}: separation {z} must be positive"));
            }
            let a = self.amplitude.amplitude(z);
            if !(a < z / 5.0) {
                if !bad.is_empty() {
                    bad.push_str("; ");
                }
                bad.push_str(&alloc::format!("point {i}: A = {a:e} m not below z/5 = {:e} m", z / 5.0));
            }
        }
        if !bad.is_empty() {
            return Err(config!("drive amplitude too large: {bad}"));
        }
        Ok(())
    }

    pub fn freq_sigma_hz(&self) -> f64 {
        self.noise.freq_noise_density / libm::sqrt(self.integration_time)
    }
}

/// Noise draws for one sweep point, fixed by the seed and the point index
/// so points may be evaluated in any order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointPlan {
    pub index: usize,
    /// Nominal separation, m.
    pub z: f64,
    /// Separation actually probed, `z` plus jitter, m.
    pub z_actual: f64,
    /// Additive frequency error, Hz.
    pub freq_error_hz: f64,
    pub sigma_hz: f64,
}

pub fn plan_point(cfg: &SweepConfig, index: usize, seed: u64) -> Result<PointPlan> {
    let z = *cfg
        .z_grid
        .get(index)
        .ok_or_else(|| config!("point {index} outside a grid of {}", cfg.z_grid.len()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let sigma_hz = cfg.freq_sigma_hz();
    let jitter = draw(&mut rng, cfg.noise.separation_noise_rms)?;
    let freq_error_hz = draw(&mut rng, sigma_hz)?;
    Ok(PointPlan {
        index,
        z,
        z_actual: z + jitter,
        freq_error_hz,
        sigma_hz,
    })
}

fn draw(rng: &mut ChaCha8Rng, sigma: f64) -> Result<f64> {
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let n = Normal::new(0.0, sigma).map_err(|_| config!("noise level {sigma} invalid"))?;
    Ok(n.sample(rng))
}

pub fn plan_sweep(cfg: &SweepConfig, seed: u64) -> Result<Vec<PointPlan>> {
    cfg.validate()?;
    (0..cfg.z_grid.len()).map(|i| plan_point(cfg, i, seed)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// Nominal separation, m.
    pub z: f64,
    /// Measured resonance, Hz.
    pub f_hz: f64,
    /// Measured `f - f0`, Hz. Carried separately so inversion does not
    /// lose the digits cancelled in `f - f0`.
    pub shift_hz: f64,
    pub sigma_hz: f64,
    /// Noise-free gradient at the probed separation, N/m.
    pub true_gradient: f64,
}

/// Turns a plan and the gradient at `plan.z_actual` into a measurement.
pub fn complete_point(params: &OscillatorParams, plan: &PointPlan, gradient: f64) -> Result<SweepPoint> {
    let shift_hz = frequency_shift(params, gradient)? / (2.0 * PI) + plan.freq_error_hz;
    Ok(SweepPoint {
        z: plan.z,
        f_hz: params.f0_hz() + shift_hz,
        shift_hz,
        sigma_hz: plan.sigma_hz,
        true_gradient: gradient,
    })
}

/// Synthetic sweep with `gradient(z)` as the force-gradient model.
pub fn simulate_sweep_with<G>(
    cfg: &SweepConfig,
    params: &OscillatorParams,
    mut gradient: G,
    seed: u64,
) -> Result<Vec<SweepPoint>>
where
    G: FnMut(f64) -> Result<f64>,
{
    params.validate()?;
    plan_sweep(cfg, seed)?
        .iter()
        .map(|plan| complete_point(params, plan, gradient(plan.z_actual)?))
        .collect()
}

/// Roughness-averaged Casimir gradient at metal separation `z`, with the
/// contact offset applied: `2 pi R <|P|>(z + 2 delta0)`.
pub fn casimir_gradient(
    pair: &LifshitzPair,
    geometry: &SpherePlaneGeometry,
    dist: &RoughnessDistribution,
    z: f64,
    tol: f64,
) -> Result<f64> {
    let zc = z + 2.0 * geometry.delta0;
    Ok(averaged_gradient_with(pair, zc, geometry.radius, dist, tol)?.value)
}

/// Synthetic Casimir sweep: roughness-averaged gradients mapped through the
/// oscillator response plus the configured noise. Deterministic in `seed`.
pub fn simulate_sweep(
    cfg: &SweepConfig,
    params: &OscillatorParams,
    geometry: &SpherePlaneGeometry,
    pair: &LifshitzPair,
    dist: &RoughnessDistribution,
    tol: f64,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    geometry.validate()?;
    simulate_sweep_with(cfg, params, |z| casimir_gradient(pair, geometry, dist, z, tol), seed)
}

/// Gradients recovered from a sweep's frequency shifts.
pub fn invert_sweep(params: &OscillatorParams, points: &[SweepPoint]) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| gradient_from_shift(params, 2.0 * PI * p.shift_hz))
        .collect()
}
