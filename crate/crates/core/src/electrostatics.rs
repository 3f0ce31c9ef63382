//! Sphere-plane electrostatics and the calibration fit.
//!
//! The attraction between a sphere of radius `R` at potential difference
//! `dV` from a plane, with surface gap `d`, is
//!
//! ```text
//! F = 2 pi eps0 dV^2 g(d/R),
//! g(x) = -sum_{n>=1} [coth u - n coth(n u)] / sinh(n u),   cosh u = 1 + x
//! ```
//!
//! The gap is `d = z_metal + 2 delta0`. Forces here are attraction
//! magnitudes (non-negative); signed totals are assembled by callers.
//!
//! For small `x` the series has the asymptotic expansion
//!
//! ```text
//! g(x) = 1/(2x) + ln(x)/6 + C0 - x ln(x)/45 + C1 x + ...
//! ```
//!
//! whose constants `C0`, `C1` were obtained from high-precision
//! evaluations of the exact series.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_core::RngCore;
use rand_distr::{Distribution, Normal};

use crate::constants::EPS0;
use crate::error::{config, domain};
use crate::lifshitz::SpherePlaneGeometry;
use crate::lsq::{levenberg_marquardt, LmOptions};
use crate::{Error, Result};

pub const DEFAULT_SERIES_TOL: f64 = 1e-12;
pub const MAX_SERIES_TERMS: usize = 100_000;

/// Constant term of the small-gap expansion of `g`.
pub const EXPANSION_C0: f64 = -0.252_374_196_172_427_8;
/// Coefficient of the linear term of the small-gap expansion of `g`.
pub const EXPANSION_C1: f64 = -0.005_621_797_752_587_6;

/// Accuracy a truncated expansion must reach to count as sufficient in
/// [`series_truncation_report`].
pub const EXPANSION_TARGET: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectrostaticConfig {
    /// Potential applied to the sphere, V.
    pub v_applied: f64,
    /// Residual contact potential `V0`, V.
    pub v_residual: f64,
    pub geometry: SpherePlaneGeometry,
    /// Series stops once the tail bound drops below this fraction of the sum.
    pub series_tol: f64,
}

impl ElectrostaticConfig {
    pub fn new(v_applied: f64, v_residual: f64, geometry: SpherePlaneGeometry) -> Result<Self> {
        let cfg = ElectrostaticConfig {
            v_applied,
            v_residual,
            geometry,
            series_tol: DEFAULT_SERIES_TOL,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.series_tol > 0.0 && self.series_tol <= 1e-6) {
            return Err(config!("series tolerance {} outside (0, 1e-6]", self.series_tol));
        }
        if !(self.v_applied.is_finite() && self.v_residual.is_finite()) {
            return Err(config!("voltages must be finite"));
        }
        self.geometry.validate()
    }

    pub fn gap(&self) -> f64 {
        self.geometry.corrected_separation()
    }
}

/// Value of the series `g(x)` and the number of terms summed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
}

fn series_parameter(x: f64) -> f64 {
    // acosh(1 + x) without cancellation at small x
    libm::log1p(x + libm::sqrt(x * (2.0 + x)))
}

/// `n`-th term `[coth u - n coth(n u)] / sinh(n u)`.
fn series_term(u: f64, coth_u: f64, n: usize) -> f64 {
    let nu = n as f64 * u;
    let em = libm::expm1(-2.0 * nu); // e^{-2nu} - 1, negative
    let coth_nu = (2.0 + em) / -em;
    let csch_nu = 2.0 * libm::exp(-nu) / -em;
    (coth_u - n as f64 * coth_nu) * csch_nu
}

fn coth(u: f64) -> f64 {
    let em = libm::expm1(-2.0 * u);
    (2.0 + em) / -em
}

/// Sums `g(x)` until the geometric tail bound is below `tol` of the sum.
pub fn series_sum(x: f64, tol: f64) -> Result<SeriesValue> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(domain!("gap ratio must be positive, got {x}"));
    }
    let u = series_parameter(x);
    let coth_u = coth(u);
    let decay = libm::exp(-u);
    // n = 1 contributes exactly zero
    let mut sum = 0.0;
    for n in 2..=MAX_SERIES_TERMS {
        let t = series_term(u, coth_u, n);
        sum += t;
        // successive term ratio tends to e^{-u} (n+1)/n from below
        let r = decay * (n as f64 + 1.0) / n as f64;
        if r < 1.0 && n as f64 * u > 1.0 {
            let tail = libm::fabs(t) * r / (1.0 - r);
            if tail <= tol * libm::fabs(sum) {
                return Ok(SeriesValue {
                    value: -sum,
                    terms: n,
                });
            }
        }
    }
    Err(Error::Convergence {
        partial: -sum,
        est_rel_error: f64::INFINITY,
        evaluations: MAX_SERIES_TERMS,
    })
}

/// Attraction `2 pi eps0 dV^2 g(d/R)` for a bare gap `d`.
pub fn force_at_gap(voltage_diff: f64, gap: f64, radius: f64, tol: f64) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(domain!("gap z_metal + 2 delta0 must be positive, got {gap}"));
    }
    if !(radius > 0.0) {
        return Err(domain!("sphere radius must be positive, got {radius}"));
    }
    if voltage_diff == 0.0 {
        return Ok(0.0);
    }
    let g = series_sum(gap / radius, tol)?;
    Ok(2.0 * PI * EPS0 * voltage_diff * voltage_diff * g.value)
}

/// Electrostatic attraction magnitude for a configuration, N.
pub fn electrostatic_force(cfg: &ElectrostaticConfig) -> Result<f64> {
    cfg.validate()?;
    force_at_gap(
        cfg.v_applied - cfg.v_residual,
        cfg.gap(),
        cfg.geometry.radius,
        cfg.series_tol,
    )
}

/// Leading small-gap form `pi eps0 dV^2 R / d`.
pub fn small_gap_asymptote(voltage_diff: f64, gap: f64, radius: f64) -> f64 {
    PI * EPS0 * voltage_diff * voltage_diff * radius / gap
}

/// Small-gap expansion of `g(x)` truncated after `order` groups of terms
/// (1: `1/(2x)`, 2: adds `ln(x)/6 + C0`, 3: adds `-x ln(x)/45 + C1 x`).
pub fn small_gap_expansion(x: f64, order: usize) -> f64 {
    let lx = libm::log(x);
    let mut g = 0.0;
    if order >= 1 {
        g += 0.5 / x;
    }
    if order >= 2 {
        g += lx / 6.0 + EXPANSION_C0;
    }
    if order >= 3 {
        g += -x * lx / 45.0 + EXPANSION_C1 * x;
    }
    g
}

pub const EXPANSION_MAX_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionOrder {
    pub order: usize,
    pub value: f64,
    pub rel_error: f64,
}

/// Convergence diagnostics of the series at one geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub gap_ratio: f64,
    pub exact: f64,
    pub terms: usize,
    /// `(n, partial sum of g up to n)`, sampled.
    pub partial_sums: Vec<(usize, f64)>,
    pub expansion: Vec<ExpansionOrder>,
    /// Lowest expansion order within [`EXPANSION_TARGET`] of the series.
    pub sufficient_order: Option<usize>,
}

pub fn series_truncation_report(cfg: &ElectrostaticConfig) -> Result<TruncationReport> {
    cfg.validate()?;
    let x = cfg.gap() / cfg.geometry.radius;
    let exact = series_sum(x, cfg.series_tol)?;
    let u = series_parameter(x);
    let coth_u = coth(u);
    let mut partial_sums = Vec::new();
    let mut sum = 0.0;
    let mut next_record = 1;
    for n in 1..=exact.terms {
        if n > 1 {
            sum -= series_term(u, coth_u, n);
        }
        if n == next_record || n == exact.terms {
            partial_sums.push((n, sum));
            next_record = if n < 16 { n + 1 } else { n + n / 4 };
        }
    }
    let expansion: Vec<ExpansionOrder> = (1..=EXPANSION_MAX_ORDER)
        .map(|order| {
            let value = small_gap_expansion(x, order);
            ExpansionOrder {
                order,
                value,
                rel_error: libm::fabs(value / exact.value - 1.0),
            }
        })
        .collect();
    let sufficient_order = expansion
        .iter()
        .find(|e| e.rel_error < EXPANSION_TARGET)
        .map(|e| e.order);
    Ok(TruncationReport {
        gap_ratio: x,
        exact: exact.value,
        terms: exact.terms,
        partial_sums,
        expansion,
        sufficient_order,
    })
}

/// One point of an electrostatic calibration sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSample {
    /// Metal-to-metal separation, m.
    pub z_metal: f64,
    /// Potential applied to the sphere, V.
    pub v_applied: f64,
    /// Measured capacitance difference, F.
    pub delta_c: f64,
}

/// Parameters of the calibration model `k dC = F_e(z, V; V0, R, delta0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationParams {
    /// Force per capacitance difference, N/F.
    pub k: f64,
    /// Residual potential, V.
    pub v0: f64,
    /// Sphere radius, m.
    pub radius: f64,
    /// Per-surface contact offset, m.
    pub delta0: f64,
}

impl CalibrationParams {
    fn to_array(self) -> [f64; 4] {
        [self.k, self.v0, self.radius, self.delta0]
    }

    fn from_array(a: [f64; 4]) -> Self {
        CalibrationParams {
            k: a[0],
            v0: a[1],
            radius: a[2],
            delta0: a[3],
        }
    }

    /// Model force at one sample, N.
    pub fn model_force(&self, z_metal: f64, v_applied: f64) -> Result<f64> {
        force_at_gap(v_applied - self.v0, z_metal + 2.0 * self.delta0, self.radius, FIT_SERIES_TOL)
    }
}

const FIT_SERIES_TOL: f64 = 1e-14;

/// Fitted calibration with its covariance, in the order
/// `(k, v0, radius, delta0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFit {
    pub k: f64,
    pub v0: f64,
    pub radius: f64,
    pub delta0: f64,
    pub covariance: [[f64; 4]; 4],
    /// RMS of `k dC - F_e` at the optimum, N.
    pub residual_rms: f64,
    pub iterations: usize,
    /// Cost after each accepted iteration.
    pub trace: Vec<f64>,
}

impl CalibrationFit {
    pub fn params(&self) -> CalibrationParams {
        CalibrationParams {
            k: self.k,
            v0: self.v0,
            radius: self.radius,
            delta0: self.delta0,
        }
    }

    /// One-sigma uncertainties from the covariance diagonal.
    pub fn std_errors(&self) -> [f64; 4] {
        core::array::from_fn(|i| libm::sqrt(self.covariance[i][i].max(0.0)))
    }
}

fn distinct(values: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

fn check_samples(samples: &[CalibrationSample]) -> Result<()> {
    for (i, s) in samples.iter().enumerate() {
        if !(s.z_metal.is_finite() && s.z_metal > 0.0) {
            return Err(domain!("sample {i}: separation {} must be positive", s.z_metal));
        }
        if !(s.v_applied.is_finite() && s.delta_c.is_finite()) {
            return Err(domain!("sample {i}: non-finite voltage or capacitance"));
        }
    }
    let voltages = distinct(samples.iter().map(|s| s.v_applied));
    if voltages < 2 {
        return Err(Error::Identifiability(
            "all samples share one voltage: k and V0 cannot be separated".into(),
        ));
    }
    let mut pairs: Vec<(f64, f64)> = samples.iter().map(|s| (s.z_metal, s.v_applied)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs.dedup();
    if pairs.len() < 4 {
        return Err(Error::Identifiability(alloc::format!(
            "{} distinct (z, V) combinations; at least 4 are needed for 4 parameters",
            pairs.len()
        )));
    }
    Ok(())
}

/// Starting point for [`calibrate`]: `V0` from a parabola through the
/// voltage scan at the most densely sampled separation, `R` nominal,
/// `delta0` of 10 nm, and `k` as the median ratio of model force to `dC`.
pub fn initial_guess(samples: &[CalibrationSample], nominal_radius: f64) -> Result<CalibrationParams> {
    check_samples(samples)?;
    if !(nominal_radius > 0.0) {
        return Err(domain!("nominal radius must be positive"));
    }
    let mut zs: Vec<f64> = samples.iter().map(|s| s.z_metal).collect();
    zs.sort_by(f64::total_cmp);
    let mut best = (zs[0], 0usize);
    let mut i = 0;
    while i < zs.len() {
        let j = zs[i..].iter().take_while(|z| **z == zs[i]).count();
        if j > best.1 {
            best = (zs[i], j);
        }
        i += j;
    }
    let scan: Vec<&CalibrationSample> = samples.iter().filter(|s| s.z_metal == best.0).collect();
    let v0 = if distinct(scan.iter().map(|s| s.v_applied)) >= 3 {
        // least-squares parabola dC = a V^2 + b V + c
        let mut ata = [[0.0; 3]; 3];
        let mut atb = [0.0; 3];
        for s in &scan {
            let row = [s.v_applied * s.v_applied, s.v_applied, 1.0];
            for a in 0..3 {
                atb[a] += row[a] * s.delta_c;
                for b in 0..3 {
                    ata[a][b] += row[a] * row[b];
                }
            }
        }
        match crate::lsq::solve(ata, atb) {
            Some([a, b, _]) if a != 0.0 => -b / (2.0 * a),
            _ => 0.0,
        }
    } else {
        0.0
    };
    let mut guess = CalibrationParams {
        k: 1.0,
        v0,
        radius: nominal_radius,
        delta0: 10e-9,
    };
    let mut ratios: Vec<f64> = samples
        .iter()
        .filter(|s| s.delta_c != 0.0)
        .filter_map(|s| guess.model_force(s.z_metal, s.v_applied).ok().map(|f| f / s.delta_c))
        .filter(|r| r.is_finite() && *r > 0.0)
        .collect();
    if ratios.is_empty() {
        return Err(Error::Identifiability("no sample carries a usable force signal".into()));
    }
    ratios.sort_by(f64::total_cmp);
    guess.k = ratios[ratios.len() / 2];
    Ok(guess)
}

/// Least-squares fit of `(k, V0, R, delta0)` to `k dC = F_e(z, V)`.
pub fn calibrate(samples: &[CalibrationSample], initial: &CalibrationParams) -> Result<CalibrationFit> {
    check_samples(samples)?;
    let force_scale = {
        let s: f64 = samples.iter().map(|s| libm::fabs(initial.k * s.delta_c)).sum();
        let s = s / samples.len() as f64;
        if s > 0.0 {
            s
        } else {
            1.0
        }
    };
    let scale = [
        libm::fabs(initial.k).max(f64::MIN_POSITIVE),
        libm::fabs(initial.v0).max(1.0),
        libm::fabs(initial.radius).max(f64::MIN_POSITIVE),
        libm::fabs(initial.delta0).max(1e-9),
    ];
    let residuals = |p: &[f64; 4], out: &mut [f64]| -> Result<()> {
        let params = CalibrationParams::from_array(*p);
        if !(params.radius > 0.0) {
            return Err(domain!("radius left the physical domain"));
        }
        for (o, s) in out.iter_mut().zip(samples) {
            let f = params.model_force(s.z_metal, s.v_applied)?;
            *o = (params.k * s.delta_c - f) / force_scale;
        }
        Ok(())
    };
    let report = levenberg_marquardt(
        residuals,
        samples.len(),
        initial.to_array(),
        scale,
        LmOptions::default(),
    )?;
    let params = CalibrationParams::from_array(report.params);
    if !(params.k > 0.0) || !(params.delta0 >= 0.0) {
        return Err(Error::Fit {
            reason: alloc::format!(
                "fit left the physical domain (k = {:e}, delta0 = {:e})",
                params.k,
                params.delta0
            ),
            trace: report.trace,
        });
    }
    let dof = samples.len().saturating_sub(4).max(1) as f64;
    let ssr_newton = report.sum_squares * force_scale * force_scale;
    let variance = ssr_newton / dof;
    // residuals were divided by force_scale, so (J^T J)^-1 carries 1/scale^2
    let covariance = core::array::from_fn(|a| {
        core::array::from_fn(|b| report.inverse_normal[a][b] * variance / (force_scale * force_scale))
    });
    Ok(CalibrationFit {
        k: params.k,
        v0: params.v0,
        radius: params.radius,
        delta0: params.delta0,
        covariance,
        residual_rms: libm::sqrt(ssr_newton / samples.len() as f64),
        iterations: report.iterations,
        trace: report.trace,
    })
}

/// Noiseless sweep over every `(z, V)` pair, with `dC = F_e / k`.
pub fn synthesize_samples(
    truth: &CalibrationParams,
    z_grid: &[f64],
    voltages: &[f64],
) -> Result<Vec<CalibrationSample>> {
    if !(truth.k > 0.0) {
        return Err(domain!("k must be positive"));
    }
    let mut out = Vec::with_capacity(z_grid.len() * voltages.len());
    for &z in z_grid {
        for &v in voltages {
            let f = truth.model_force(z, v)?;
            out.push(CalibrationSample {
                z_metal: z,
                v_applied: v,
                delta_c: f / truth.k,
            });
        }
    }
    Ok(out)
}

/// Multiplies every `dC` by `1 + N(0, rel_sigma)`.
pub fn add_relative_noise<R: RngCore>(samples: &mut [CalibrationSample], rel_sigma: f64, rng: &mut R) -> Result<()> {
    let normal = Normal::new(0.0, rel_sigma).map_err(|_| domain!("noise level {rel_sigma} invalid"))?;
    for s in samples.iter_mut() {
        s.delta_c *= 1.0 + normal.sample(rng);
    }
    Ok(())
}

/// Separation grid and voltage set used for synthetic calibration sweeps:
/// 15 separations from 3 to 10 um and four voltages at `V0 -/+ 0.30 V`,
/// `V0 -/+ 0.24 V`.
pub fn default_sweep_design(v0: f64) -> (Vec<f64>, Vec<f64>) {
    let zs = (0..15).map(|i| 3e-6 + 0.5e-6 * i as f64).collect();
    let vs = alloc::vec![v0 - 0.30, v0 - 0.24, v0 + 0.24, v0 + 0.30];
    (zs, vs)
}

#[cfg(test)]
mod tests {
    use super::*;

    const R: f64 = 294.3e-6;

    fn cfg(dv: f64, gap: f64) -> ElectrostaticConfig {
        ElectrostaticConfig::new(0.6325 + dv, 0.6325, SpherePlaneGeometry::new(R, gap, 0.0).unwrap()).unwrap()
    }

    #[test]
    fn zero_voltage_difference_gives_zero() {
        assert_eq!(electrostatic_force(&cfg(0.0, 1e-6)).unwrap(), 0.0);
    }

    #[test]
    fn example_point_and_asymptote() {
        let f = electrostatic_force(&cfg(0.3, 1e-6)).unwrap();
        let asym = small_gap_asymptote(0.3, 1e-6, R);
        assert!((asym / 7.367e-10 - 1.0).abs() < 1e-3, "{asym}");
        assert!((f / asym - 1.0).abs() < 0.02, "{f} vs {asym}");
        assert!(f < asym);
    }

    #[test]
    fn quadratic_in_voltage() {
        let f1 = electrostatic_force(&cfg(0.15, 2e-6)).unwrap();
        let f2 = electrostatic_force(&cfg(0.30, 2e-6)).unwrap();
        let f3 = electrostatic_force(&cfg(-0.30, 2e-6)).unwrap();
        assert!((f2 / f1 - 4.0).abs() < 1e-12);
        assert!((f2 / f3 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn contact_offset_enters_as_two_delta0() {
        let a = electrostatic_force(&cfg(0.3, 1.0788e-6)).unwrap();
        let geom = SpherePlaneGeometry::new(R, 1e-6, 39.4e-9).unwrap();
        let b = electrostatic_force(&ElectrostaticConfig::new(0.9325, 0.6325, geom).unwrap()).unwrap();
        assert!((a / b - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decreasing_in_separation() {
        let mut last = f64::INFINITY;
        for k in 1..60 {
            let f = electrostatic_force(&cfg(0.3, 0.1e-6 * k as f64)).unwrap();
            assert!(f < last);
            last = f;
        }
    }

    #[test]
    fn tolerance_and_domain_checks() {
        let mut c = cfg(0.3, 1e-6);
        c.series_tol = 1e-3;
        assert!(electrostatic_force(&c).is_err());
        assert!(force_at_gap(0.3, -1e-7, R, 1e-12).is_err());
        // tiny gap ratio needs more than the allowed number of terms
        assert!(matches!(series_sum(1e-12, 1e-12), Err(Error::Convergence { .. })));
    }

    #[test]
    fn partial_sums_monotone_after_first_term() {
        for x in [1e-3, 0.0034, 0.01, 0.05, 0.1] {
            let r = series_truncation_report(&cfg(0.3, x * R)).unwrap();
            for w in r.partial_sums.windows(2).skip(1) {
                assert!(w[1].1 >= w[0].1, "x={x}: {w:?}");
            }
            let last = r.partial_sums.last().unwrap();
            assert!((last.1 / r.exact - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn expansion_orders() {
        let r = series_truncation_report(&cfg(0.3, 0.0034 * R)).unwrap();
        assert_eq!(r.sufficient_order, Some(2), "{:?}", r.expansion);
        let r = series_truncation_report(&cfg(0.3, 0.1 * R)).unwrap();
        assert_eq!(r.sufficient_order, Some(3), "{:?}", r.expansion);
        // leading term dominates as the gap closes
        let r = series_truncation_report(&cfg(0.3, 1e-6 * R)).unwrap();
        assert!(r.expansion[0].rel_error < 1e-5);
    }

    #[test]
    fn single_voltage_is_not_identifiable() {
        let truth = CalibrationParams { k: 50280.0, v0: 0.6325, radius: R, delta0: 39.4e-9 };
        let (zs, _) = default_sweep_design(truth.v0);
        let s = synthesize_samples(&truth, &zs, &[0.9325]).unwrap();
        assert!(matches!(calibrate(&s, &truth), Err(Error::Identifiability(_))));
    }

    #[test]
    fn noiseless_round_trip() {
        let truth = CalibrationParams { k: 50280.0, v0: 0.6325, radius: R, delta0: 39.4e-9 };
        let (zs, vs) = default_sweep_design(truth.v0);
        let s = synthesize_samples(&truth, &zs, &vs).unwrap();
        let guess = initial_guess(&s, 300e-6).unwrap();
        let fit = calibrate(&s, &guess).unwrap();
        for (got, want) in [
            (fit.k, truth.k),
            (fit.v0, truth.v0),
            (fit.radius, truth.radius),
            (fit.delta0, truth.delta0),
        ] {
            assert!((got / want - 1.0).abs() < 1e-6, "{got} vs {want}: {fit:?}");
        }
    }
}
