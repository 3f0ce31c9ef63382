//! Calibration datasets and fit reports.

use casimir_core::electrostatics::{
    add_relative_noise, calibrate, default_sweep_design, initial_guess, synthesize_samples, CalibrationFit,
    CalibrationParams, CalibrationSample,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::io;

/// Parameters the bundled dataset was generated from.
pub const BUNDLED_TRUTH: CalibrationParams = CalibrationParams {
    k: 50_280.0,
    v0: 0.6325,
    radius: 294.3e-6,
    delta0: 39.4e-9,
};
/// Relative capacitance noise of the bundled dataset (1 part in 5e5).
pub const BUNDLED_NOISE: f64 = 2e-6;
pub const BUNDLED_SEED: u64 = 2024;

/// The bundled dataset, regenerable with `casimir calibration-data`.
pub const BUNDLED_CSV: &str = include_str!("../data/calibration_synthetic.csv");

pub const NOMINAL_RADIUS: f64 = 300e-6;

/// Sweep over the default `(z, V)` design with relative `dC` noise.
pub fn synthetic_dataset(truth: &CalibrationParams, rel_noise: f64, seed: u64) -> Result<Vec<CalibrationSample>> {
    let (zs, vs) = default_sweep_design(truth.v0);
    let mut samples = synthesize_samples(truth, &zs, &vs)?;
    if rel_noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        add_relative_noise(&mut samples, rel_noise, &mut rng)?;
    }
    Ok(samples)
}

pub fn bundled_samples() -> Result<Vec<CalibrationSample>> {
    io::parse_calibration(BUNDLED_CSV, std::path::Path::new("<bundled>"))
}

/// Fit from the heuristic starting point.
pub fn fit(samples: &[CalibrationSample], nominal_radius: f64) -> Result<CalibrationFit> {
    let guess = initial_guess(samples, nominal_radius)?;
    Ok(calibrate(samples, &guess)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub samples: usize,
    pub k_n_per_f: f64,
    pub k_sigma: f64,
    pub v0_v: f64,
    pub v0_sigma: f64,
    pub radius_m: f64,
    pub radius_sigma: f64,
    pub delta0_m: f64,
    pub delta0_sigma: f64,
    pub residual_rms_n: f64,
    pub iterations: usize,
    /// Order: k, V0, R, delta0.
    pub covariance: [[f64; 4]; 4],
}

impl FitReport {
    pub fn new(fit: &CalibrationFit, samples: usize) -> Self {
        let [ks, vs, rs, ds] = fit.std_errors();
        FitReport {
            samples,
            k_n_per_f: fit.k,
            k_sigma: ks,
            v0_v: fit.v0,
            v0_sigma: vs,
            radius_m: fit.radius,
            radius_sigma: rs,
            delta0_m: fit.delta0,
            delta0_sigma: ds,
            residual_rms_n: fit.residual_rms,
            iterations: fit.iterations,
            covariance: fit.covariance,
        }
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k:<14} = {v}\n"));
        kv("samples", self.samples.to_string());
        kv("k_n_per_f", format!("{:e}", self.k_n_per_f));
        kv("k_sigma", format!("{:e}", self.k_sigma));
        kv("v0_v", format!("{:e}", self.v0_v));
        kv("v0_sigma", format!("{:e}", self.v0_sigma));
        kv("radius_m", format!("{:e}", self.radius_m));
        kv("radius_sigma", format!("{:e}", self.radius_sigma));
        kv("delta0_m", format!("{:e}", self.delta0_m));
        kv("delta0_sigma", format!("{:e}", self.delta0_sigma));
        kv("residual_rms_n", format!("{:e}", self.residual_rms_n));
        kv("iterations", self.iterations.to_string());
        s
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_file_is_current() {
        let regenerated = io::calibration_csv(&synthetic_dataset(&BUNDLED_TRUTH, BUNDLED_NOISE, BUNDLED_SEED).unwrap());
        assert_eq!(regenerated, BUNDLED_CSV);
    }

    #[test]
    fn bundled_fit_recovers_truth() {
        let s = bundled_samples().unwrap();
        let f = fit(&s, NOMINAL_RADIUS).unwrap();
        let r = FitReport::new(&f, s.len());
        for (got, want, sigma) in [
            (r.k_n_per_f, BUNDLED_TRUTH.k, r.k_sigma),
            (r.v0_v, BUNDLED_TRUTH.v0, r.v0_sigma),
            (r.radius_m, BUNDLED_TRUTH.radius, r.radius_sigma),
            (r.delta0_m, BUNDLED_TRUTH.delta0, r.delta0_sigma),
        ] {
            assert!((got - want).abs() < 5.0 * sigma, "{got} vs {want} +- {sigma}");
        }
        assert!(r.text().contains("k_n_per_f"));
        let v: serde_json::Value = serde_json::from_str(&r.json()).unwrap();
        assert_eq!(v["samples"], 60);
    }
}
