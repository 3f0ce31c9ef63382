//! Dielectric functions on the imaginary frequency axis.
//!
//! All energies in this module are photon energies in eV; the conversion
//! to angular frequency happens once, inside [`crate::lifshitz`].
//!
//! A tabulated model combines measured absorption `eps2(omega)` above a
//! splice energy with the Drude absorption below it, and maps the result
//! to `eps(i xi)` through the dispersion relation
//!
//! ```text
//! eps(i xi) = 1 + (2/pi) * int_0^inf omega eps2(omega) / (omega^2 + xi^2) d omega
//! ```
//!
//! Above the last tabulated row the absorption is taken as zero.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{config, domain, invalid};
use crate::interp::MonotoneCubic;
use crate::quadrature::{integrate_log_panels, trapezoid, LogPanels};
use crate::{Error, Result};

/// Relative tolerance of the Drude part of the dispersion integral.
pub const DISPERSION_REL_TOL: f64 = 1e-6;

const DISPERSION_MAX_EVALS: usize = 200_000;

/// One row of tabulated absorption data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalRow {
    pub energy_ev: f64,
    pub eps2: f64,
}

/// Imaginary part of the permittivity on the real frequency axis, sampled
/// at strictly increasing photon energies.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalTable {
    rows: Vec<OpticalRow>,
    source: String,
}

impl OpticalTable {
    /// Validates and wraps the rows. Energies must be positive and strictly
    /// increasing; `eps2` must be finite and non-negative.
    pub fn new(rows: Vec<OpticalRow>, source: impl Into<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(config!("optical table has no rows"));
        }
        for (i, r) in rows.iter().enumerate() {
            if !(r.energy_ev.is_finite() && r.energy_ev > 0.0) {
                return Err(invalid!("row {}: photon energy {} must be positive", i + 1, r.energy_ev));
            }
            if !(r.eps2.is_finite() && r.eps2 >= 0.0) {
                return Err(invalid!("row {}: eps2 {} must be finite and non-negative", i + 1, r.eps2));
            }
        }
        if let Some(i) = rows.windows(2).position(|w| w[1].energy_ev <= w[0].energy_ev) {
            let kind = if rows[i + 1].energy_ev == rows[i].energy_ev {
                "duplicate"
            } else {
                "decreasing"
            };
            return Err(invalid!(
                "row {}: {} photon energy {} eV (energies must be strictly increasing)",
                i + 2,
                kind,
                rows[i + 1].energy_ev
            ));
        }
        Ok(OpticalTable {
            rows,
            source: source.into(),
        })
    }

    pub fn rows(&self) -> &[OpticalRow] {
        &self.rows
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn energy_range(&self) -> (f64, f64) {
        (self.rows[0].energy_ev, self.rows[self.rows.len() - 1].energy_ev)
    }

    /// Linear interpolation of `eps2`; zero outside the table.
    pub fn eps2_at(&self, energy_ev: f64) -> f64 {
        let (lo, hi) = self.energy_range();
        if energy_ev < lo || energy_ev > hi {
            return 0.0;
        }
        let i = self.rows.partition_point(|r| r.energy_ev < energy_ev);
        if i < self.rows.len() && self.rows[i].energy_ev == energy_ev {
            return self.rows[i].eps2;
        }
        let (a, b) = (self.rows[i - 1], self.rows[i]);
        let t = (energy_ev - a.energy_ev) / (b.energy_ev - a.energy_ev);
        a.eps2 + t * (b.eps2 - a.eps2)
    }
}

/// Drude free-electron parameters, both as energies in eV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeParams {
    /// Plasma energy `hbar * omega_p`.
    pub plasma_ev: f64,
    /// Relaxation energy `hbar * gamma`.
    pub relaxation_ev: f64,
}

impl DrudeParams {
    /// Conventional literature defaults for gold. Not fitted to any sample.
    pub const GOLD_DEFAULT: DrudeParams = DrudeParams {
        plasma_ev: 9.0,
        relaxation_ev: 0.035,
    };
    /// Conventional literature defaults for copper. Not fitted to any sample.
    pub const COPPER_DEFAULT: DrudeParams = DrudeParams {
        plasma_ev: 8.9,
        relaxation_ev: 0.030,
    };

    pub fn new(plasma_ev: f64, relaxation_ev: f64) -> Result<Self> {
        let p = DrudeParams {
            plasma_ev,
            relaxation_ev,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.plasma_ev.is_finite() && self.plasma_ev > 0.0) {
            return Err(config!("Drude plasma energy must be positive, got {}", self.plasma_ev));
        }
        if !(self.relaxation_ev.is_finite() && self.relaxation_ev > 0.0) {
            return Err(config!("Drude relaxation energy must be positive, got {}", self.relaxation_ev));
        }
        Ok(())
    }

    /// `eps2` of the Drude model on the real axis:
    /// `wp^2 g / (w (w^2 + g^2))`.
    pub fn eps2_real_axis(&self, omega_ev: f64) -> f64 {
        let g = self.relaxation_ev;
        self.plasma_ev * self.plasma_ev * g / (omega_ev * (omega_ev * omega_ev + g * g))
    }

    fn eps_minus_one(&self, xi_ev: f64) -> f64 {
        self.plasma_ev * self.plasma_ev / (xi_ev * (xi_ev + self.relaxation_ev))
    }
}

/// Drude permittivity at imaginary frequency: `1 + wp^2 / (xi (xi + g))`.
pub fn drude_eps(xi_ev: f64, params: &DrudeParams) -> Result<f64> {
    check_xi(xi_ev)?;
    params.validate()?;
    Ok(1.0 + params.eps_minus_one(xi_ev))
}

fn check_xi(xi_ev: f64) -> Result<()> {
    if !(xi_ev > 0.0) || xi_ev.is_nan() {
        return Err(domain!("imaginary frequency must be positive, got {xi_ev} eV"));
    }
    Ok(())
}

/// Dispersion integral of the analytic Drude absorption over `[0, upper)`,
/// evaluated numerically. Returns the contribution to `eps(i xi) - 1`.
fn drude_absorption_part(drude: &DrudeParams, xi_ev: f64, upper_ev: f64) -> Result<f64> {
    let wp2g = drude.plasma_ev * drude.plasma_ev * drude.relaxation_ev;
    let g2 = drude.relaxation_ev * drude.relaxation_ev;
    let xi2 = xi_ev * xi_ev;
    // omega * eps2 / (omega^2 + xi^2), with the omega factor cancelled
    let integrand = |w: f64| wp2g / ((w * w + g2) * (w * w + xi2));
    let layout = LogPanels {
        first_width: 0.25 * drude.relaxation_ev.min(xi_ev).min(upper_ev),
        ratio: 2.0,
        cutoff: 1e-12,
        end: upper_ev,
    };
    let r = integrate_log_panels(integrand, 0.0, layout, DISPERSION_REL_TOL, DISPERSION_MAX_EVALS)?;
    Ok(2.0 / PI * r.value)
}

/// `eps(i xi) - 1` from the pure Drude absorption run through the numerical
/// dispersion integral. Agrees with [`drude_eps`] up to quadrature error.
pub fn drude_dispersion(drude: &DrudeParams, xi_ev: f64) -> Result<f64> {
    check_xi(xi_ev)?;
    drude.validate()?;
    Ok(1.0 + drude_absorption_part(drude, xi_ev, f64::INFINITY)?)
}

fn table_part(table: &OpticalTable, splice_ev: f64, xi_ev: f64) -> f64 {
    let xi2 = xi_ev * xi_ev;
    let rows = table.rows();
    let start = rows.partition_point(|r| r.energy_ev <= splice_ev);
    let mut xs = Vec::with_capacity(rows.len() - start + 1);
    let mut ys = Vec::with_capacity(rows.len() - start + 1);
    xs.push(splice_ev);
    ys.push(splice_ev * table.eps2_at(splice_ev) / (splice_ev * splice_ev + xi2));
    for r in &rows[start..] {
        xs.push(r.energy_ev);
        ys.push(r.energy_ev * r.eps2 / (r.energy_ev * r.energy_ev + xi2));
    }
    2.0 / PI * trapezoid(&xs, &ys)
}

/// `eps(i xi)` from tabulated absorption, with the Drude absorption used
/// below the table's first row.
pub fn kk_to_imaginary_axis(table: &OpticalTable, drude: &DrudeParams, xi_ev: f64) -> Result<f64> {
    let splice = table.energy_range().0;
    kk_spliced(table, drude, splice, xi_ev)
}

fn kk_spliced(table: &OpticalTable, drude: &DrudeParams, splice_ev: f64, xi_ev: f64) -> Result<f64> {
    check_xi(xi_ev)?;
    if table.rows().is_empty() {
        return Err(config!("optical table has no rows"));
    }
    let low = drude_absorption_part(drude, xi_ev, splice_ev)?;
    Ok(1.0 + low + table_part(table, splice_ev, xi_ev))
}

/// Dielectric response of one body.
#[derive(Debug, Clone, PartialEq)]
pub enum DielectricModel {
    /// Ideal metal. Lifshitz integrals use unit reflection coefficients
    /// directly instead of a large finite permittivity.
    PerfectConductor,
    DrudeOnly(DrudeParams),
    Tabulated {
        table: OpticalTable,
        drude: DrudeParams,
        /// Tabulated absorption is used at and above this energy, Drude
        /// absorption below it.
        splice_ev: f64,
    },
}

impl DielectricModel {
    /// Tabulated model; the splice energy defaults to the first table row.
    pub fn tabulated(table: OpticalTable, drude: DrudeParams, splice_ev: Option<f64>) -> Result<Self> {
        drude.validate()?;
        let (lo, hi) = table.energy_range();
        let splice_ev = splice_ev.unwrap_or(lo);
        if !(splice_ev >= lo && splice_ev < hi) {
            return Err(config!(
                "splice energy {splice_ev} eV must lie in [{lo}, {hi}) eV covered by the table"
            ));
        }
        Ok(DielectricModel::Tabulated {
            table,
            drude,
            splice_ev,
        })
    }

    pub fn is_perfect_conductor(&self) -> bool {
        matches!(self, DielectricModel::PerfectConductor)
    }

    /// `eps(i xi)`; `+inf` for a perfect conductor.
    pub fn eval(&self, xi_ev: f64) -> Result<f64> {
        Ok(1.0 + self.eval_minus_one(xi_ev)?)
    }

    /// `eps(i xi) - 1`, kept separate to avoid cancellation at high `xi`.
    pub fn eval_minus_one(&self, xi_ev: f64) -> Result<f64> {
        check_xi(xi_ev)?;
        match self {
            DielectricModel::PerfectConductor => Ok(f64::INFINITY),
            DielectricModel::DrudeOnly(d) => Ok(d.eps_minus_one(xi_ev)),
            DielectricModel::Tabulated {
                table,
                drude,
                splice_ev,
            } => Ok(kk_spliced(table, drude, *splice_ev, xi_ev)? - 1.0),
        }
    }

    /// Real-axis absorption just below and just above the splice energy.
    /// `None` unless the model is tabulated.
    pub fn splice_absorption(&self) -> Option<(f64, f64)> {
        match self {
            DielectricModel::Tabulated {
                table,
                drude,
                splice_ev,
            } => Some((drude.eps2_real_axis(*splice_ev), table.eps2_at(*splice_ev))),
            _ => None,
        }
    }
}

/// `eps(i xi) - 1` sampled on a log grid and interpolated in log-log
/// coordinates with a monotone cubic. Evaluating a tabulated model directly
/// costs a full dispersion integral per call; this is the form the Lifshitz
/// integrals consume.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPermittivity {
    log_interp: MonotoneCubic,
    xi_min: f64,
    xi_max: f64,
    high_slope: f64,
    high_value: f64,
}

impl SampledPermittivity {
    pub const DEFAULT_XI_MIN_EV: f64 = 1e-7;
    pub const DEFAULT_XI_MAX_EV: f64 = 1e4;
    pub const DEFAULT_POINTS_PER_DECADE: usize = 40;

    pub fn new(model: &DielectricModel) -> Result<Self> {
        Self::with_grid(
            model,
            Self::DEFAULT_XI_MIN_EV,
            Self::DEFAULT_XI_MAX_EV,
            Self::DEFAULT_POINTS_PER_DECADE,
        )
    }

    pub fn with_grid(model: &DielectricModel, xi_min: f64, xi_max: f64, per_decade: usize) -> Result<Self> {
        if model.is_perfect_conductor() {
            return Err(config!("a perfect conductor has no finite permittivity to sample"));
        }
        if !(xi_min > 0.0 && xi_max > xi_min) || per_decade == 0 {
            return Err(config!("invalid sampling grid [{xi_min}, {xi_max}] eV"));
        }
        let decades = libm::log10(xi_max / xi_min);
        let n = libm::ceil(decades * per_decade as f64) as usize + 1;
        let (l0, l1) = (libm::log(xi_min), libm::log(xi_max));
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for k in 0..n {
            let lx = l0 + (l1 - l0) * k as f64 / (n - 1) as f64;
            let v = model.eval_minus_one(libm::exp(lx))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(alloc::format!(
                    "eps(i xi) - 1 = {v} at xi = {} eV is not positive",
                    libm::exp(lx)
                )));
            }
            xs.push(lx);
            ys.push(libm::log(v));
        }
        let log_interp = MonotoneCubic::new(xs, ys)?;
        let high_slope = log_interp.end_slopes().1.min(0.0);
        let high_value = log_interp.eval(l1);
        Ok(SampledPermittivity {
            log_interp,
            xi_min,
            xi_max,
            high_slope,
            high_value,
        })
    }

    /// `eps(i xi) - 1`. Below the grid the value is held at the first node;
    /// above it, extended as a power law with the end slope.
    pub fn eval_minus_one(&self, xi_ev: f64) -> f64 {
        if xi_ev >= self.xi_max {
            let dl = libm::log(xi_ev / self.xi_max);
            return libm::exp(self.high_value + self.high_slope * dl);
        }
        libm::exp(self.log_interp.eval(libm::log(xi_ev.max(self.xi_min))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn au() -> DrudeParams {
        DrudeParams::GOLD_DEFAULT
    }

    #[test]
    fn drude_eps_examples() {
        let p9 = DrudeParams { plasma_ev: 9.0, relaxation_ev: 1e-300 };
        // at xi = wp with negligible damping, eps = 2
        assert!((drude_eps(9.0, &p9).unwrap() - 2.0).abs() < 1e-12);
        let v = drude_eps(0.1, &au()).unwrap();
        assert!((v - 6001.0).abs() < 1e-9, "{v}");
        assert!((drude_eps(1e9, &au()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn drude_eps_rejects_non_positive_xi() {
        assert!(matches!(drude_eps(0.0, &au()), Err(Error::Domain(_))));
        assert!(matches!(drude_eps(-1.0, &au()), Err(Error::Domain(_))));
        assert!(matches!(drude_eps(f64::NAN, &au()), Err(Error::Domain(_))));
    }

    #[test]
    fn drude_dispersion_matches_closed_form_at_example() {
        // closed-form oracle: 1 + 81 / (0.1 * 0.135) = 6001
        let v = drude_dispersion(&au(), 0.1).unwrap();
        assert!((v / 6001.0 - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn empty_table_is_config_error() {
        assert!(matches!(OpticalTable::new(vec![], "x"), Err(Error::Config(_))));
    }

    #[test]
    fn table_validation() {
        let row = |e, v| OpticalRow { energy_ev: e, eps2: v };
        assert!(OpticalTable::new(vec![row(1.0, 1.0), row(2.0, 0.5), row(3.0, 0.1)], "t").is_ok());
        assert!(matches!(
            OpticalTable::new(vec![row(1.0, 1.0), row(2.0, -0.5)], "t"),
            Err(Error::Validation(_))
        ));
        let dup = OpticalTable::new(vec![row(1.0, 1.0), row(1.0, 0.5)], "t").unwrap_err();
        assert!(alloc::format!("{dup}").contains("duplicate"));
        assert!(OpticalTable::new(vec![row(2.0, 1.0), row(1.0, 0.5)], "t").is_err());
        assert!(OpticalTable::new(vec![row(0.0, 1.0)], "t").is_err());
    }

    #[test]
    fn eps2_interpolation() {
        let t = OpticalTable::new(
            vec![
                OpticalRow { energy_ev: 1.0, eps2: 2.0 },
                OpticalRow { energy_ev: 3.0, eps2: 4.0 },
            ],
            "t",
        )
        .unwrap();
        assert_eq!(t.eps2_at(2.0), 3.0);
        assert_eq!(t.eps2_at(0.5), 0.0);
        assert_eq!(t.eps2_at(3.0), 4.0);
    }

    #[test]
    fn tabulated_high_xi_limit_is_one() {
        let rows = (1..=50)
            .map(|k| OpticalRow { energy_ev: 0.1 * k as f64, eps2: 1.0 })
            .collect();
        let m = DielectricModel::tabulated(OpticalTable::new(rows, "flat").unwrap(), au(), None).unwrap();
        let v = m.eval(1e8).unwrap();
        assert!(v >= 1.0 && v - 1.0 < 1e-10, "{v}");
    }

    #[test]
    fn splice_outside_table_rejected() {
        let rows = vec![
            OpticalRow { energy_ev: 1.0, eps2: 1.0 },
            OpticalRow { energy_ev: 2.0, eps2: 1.0 },
        ];
        let t = OpticalTable::new(rows, "t").unwrap();
        assert!(DielectricModel::tabulated(t.clone(), au(), Some(0.5)).is_err());
        assert!(DielectricModel::tabulated(t, au(), Some(2.0)).is_err());
    }

    #[test]
    fn sampled_drude_tracks_closed_form() {
        let m = DielectricModel::DrudeOnly(au());
        let s = SampledPermittivity::new(&m).unwrap();
        for k in 0..=60 {
            let xi = 1e-5 * libm::pow(10.0, k as f64 * 0.13);
            let exact = m.eval_minus_one(xi).unwrap();
            assert!((s.eval_minus_one(xi) / exact - 1.0).abs() < 1e-6, "xi={xi}");
        }
        // power-law continuation above the grid
        let exact = m.eval_minus_one(1e5).unwrap();
        assert!((s.eval_minus_one(1e5) / exact - 1.0).abs() < 1e-3);
    }

    #[test]
    fn perfect_conductor_is_infinite() {
        assert_eq!(DielectricModel::PerfectConductor.eval(1.0).unwrap(), f64::INFINITY);
        assert!(SampledPermittivity::new(&DielectricModel::PerfectConductor).is_err());
    }
}
