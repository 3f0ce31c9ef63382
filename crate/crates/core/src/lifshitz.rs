//! Zero-temperature Lifshitz pressure between two dissimilar half-spaces,
//! the sphere-plane force in the proximity-force approximation, and the
//! ideal-metal closed forms.
//!
//! With `p >= 1`, `s_j = sqrt(eps_j - 1 + p^2)` and the reflection products
//!
//! ```text
//! q_TE = (s1 - p)(s2 - p) / ((s1 + p)(s2 + p))
//! q_TM = (s1 - eps1 p)(s2 - eps2 p) / ((s1 + eps1 p)(s2 + eps2 p))
//! ```
//!
//! the pressure and force are
//!
//! ```text
//! P = -hbar/(2 pi^2 c^3) int xi^3 dxi int p^2 sum_pol q e^{-y} / (1 - q e^{-y}) dp
//! F =  hbar R/(2 pi c^2) int xi^2 dxi int p   sum_pol ln(1 - q e^{-y}) dp
//! ```
//!
//! with `y = 2 p xi z / c`. Integrating in `(t, y)` with `p = 1/t` and
//! `xi = y c t / (2 z)` maps both domains to `t in (0, 1]`, `y in [0, inf)`
//! and pulls the whole `z` dependence into a prefactor:
//!
//! ```text
//! P = -hbar c / (32 pi^2 z^4) int_0^1 dt int_0^inf y^3 sum_pol (...) dy
//! F =  hbar c R / (16 pi z^3) int_0^1 dt int_0^inf y^2 sum_pol (...) dy
//! ```
//!
//! A perfect conductor has `q = 1` in both polarizations.

use core::cell::Cell;
use core::f64::consts::PI;

use crate::constants::{rad_per_s_to_ev, C, HBAR};
use crate::error::{config, domain};
use crate::materials::{DielectricModel, DrudeParams, SampledPermittivity};
use crate::quadrature::{integrate, integrate_log_panels, LogPanels};
use crate::{Error, Result};

/// Smallest and largest accepted relative tolerance.
pub const TOL_RANGE: (f64, f64) = (1e-8, 1e-3);

/// Default floor below which `eps(i xi)` is evaluated at the floor value.
pub const DEFAULT_XI_FLOOR_EV: f64 = 1e-5;

const DEFAULT_MAX_EVALS: usize = 20_000_000;

/// Sphere of radius `radius` above an infinite plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePlaneGeometry {
    /// Sphere radius `R`, m.
    pub radius: f64,
    /// Metal-to-metal separation `z_metal`, m.
    pub separation: f64,
    /// Per-surface contact offset `delta0`, m. The surfaces touch at a mean
    /// separation of `2 delta0`.
    pub delta0: f64,
}

impl SpherePlaneGeometry {
    pub fn new(radius: f64, separation: f64, delta0: f64) -> Result<Self> {
        let g = SpherePlaneGeometry {
            radius,
            separation,
            delta0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(domain!("sphere radius must be positive, got {}", self.radius));
        }
        if !(self.separation.is_finite() && self.separation > 0.0) {
            return Err(domain!("separation must be positive, got {}", self.separation));
        }
        if !(self.delta0.is_finite() && self.delta0 >= 0.0) {
            return Err(domain!("contact offset must be non-negative, got {}", self.delta0));
        }
        Ok(())
    }

    /// Separation fed to the force integrals: `z_metal + 2 delta0`.
    pub fn corrected_separation(&self) -> f64 {
        self.separation + 2.0 * self.delta0
    }

    /// True when `z / R > 0.1`, where the proximity-force description of
    /// the sphere becomes questionable.
    pub fn beyond_small_gap(&self) -> bool {
        self.corrected_separation() / self.radius > 0.1
    }
}

/// A Lifshitz integral with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifshitzResult {
    /// Force (N), pressure (N/m^2) or gradient (N/m).
    pub value: f64,
    pub est_rel_error: f64,
    /// Integrand evaluations spent.
    pub evaluations: usize,
}

/// Closed-form sphere-plane force between ideal metals:
/// `-pi^3 hbar c R / (360 z^3)`.
pub fn ideal_force_sphere_plane(z: f64, radius: f64) -> Result<f64> {
    check_z(z)?;
    check_radius(radius)?;
    Ok(-PI * PI * PI * HBAR * C * radius / (360.0 * z * z * z))
}

/// Closed-form pressure between ideal-metal planes: `-pi^2 hbar c / (240 z^4)`.
pub fn ideal_pressure_plane_plane(z: f64) -> Result<f64> {
    check_z(z)?;
    let z2 = z * z;
    Ok(-PI * PI * HBAR * C / (240.0 * z2 * z2))
}

fn check_z(z: f64) -> Result<()> {
    if !(z.is_finite() && z > 0.0) {
        return Err(domain!("separation must be positive, got {z}"));
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(domain!("sphere radius must be positive, got {r}"));
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= TOL_RANGE.0 && tol <= TOL_RANGE.1) {
        return Err(domain!(
            "tolerance {tol:e} outside [{:e}, {:e}]",
            TOL_RANGE.0,
            TOL_RANGE.1
        ));
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum Response {
    Ideal,
    Drude(DrudeParams),
    Sampled(SampledPermittivity),
}

/// Reflection factors of one body: `(a, 1 - a)` per polarization, where
/// `a_TE = (s - p)/(s + p)` and `a_TM = (eps p - s)/(eps p + s)`.
#[derive(Debug, Clone, Copy)]
struct Reflection {
    te: (f64, f64),
    tm: (f64, f64),
}

impl Response {
    fn reflection(&self, xi_ev: f64, p: f64) -> Reflection {
        let em1 = match self {
            Response::Ideal => {
                return Reflection {
                    te: (1.0, 0.0),
                    tm: (1.0, 0.0),
                }
            }
            Response::Drude(d) => {
                d.plasma_ev * d.plasma_ev / (xi_ev * (xi_ev + d.relaxation_ev))
            }
            Response::Sampled(s) => s.eval_minus_one(xi_ev),
        };
        let s = libm::sqrt(em1 + p * p);
        let sp = s + p;
        let te = (em1 / (sp * sp), 2.0 * p / sp);
        let eps = 1.0 + em1;
        let ep_s = eps * p + s;
        let tm = (em1 * ((eps + 1.0) * p * p - 1.0) / (ep_s * ep_s), 2.0 * s / ep_s);
        Reflection { te, tm }
    }
}

/// `(q, 1 - q)` for the product of two reflection factors.
#[inline]
fn product(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0, a.1 + a.0 * b.1)
}

/// `1 - q e^{-y}`, accurate for `q` near one and small `y`.
#[inline]
fn one_minus_qe(q: (f64, f64), y: f64) -> f64 {
    q.1 - q.0 * libm::expm1(-y)
}

/// `ln(1 - q e^{-y})` given `d = 1 - q e^{-y}`; switches to `log1p` where
/// `d` is close to one.
#[inline]
fn log_one_minus_qe(q: (f64, f64), y: f64, d: f64) -> f64 {
    let x = q.0 * libm::exp(-y);
    if x < 0.5 {
        libm::log1p(-x)
    } else {
        libm::log(d)
    }
}

#[derive(Clone, Copy)]
enum Quantity {
    Pressure,
    Force,
}

/// Two bodies prepared for repeated Lifshitz evaluations. Tabulated models
/// are sampled once on the imaginary axis at construction.
#[derive(Debug, Clone)]
pub struct LifshitzPair {
    first: Response,
    second: Response,
    xi_floor_ev: f64,
    max_evals: usize,
}

impl LifshitzPair {
    pub fn new(m1: &DielectricModel, m2: &DielectricModel) -> Result<Self> {
        Ok(LifshitzPair {
            first: prepare(m1)?,
            second: prepare(m2)?,
            xi_floor_ev: DEFAULT_XI_FLOOR_EV,
            max_evals: DEFAULT_MAX_EVALS,
        })
    }

    /// Overrides the low-frequency floor of `eps(i xi)` evaluations.
    pub fn with_xi_floor(mut self, xi_floor_ev: f64) -> Result<Self> {
        if !(xi_floor_ev > 0.0 && xi_floor_ev.is_finite()) {
            return Err(config!("frequency floor must be positive, got {xi_floor_ev}"));
        }
        self.xi_floor_ev = xi_floor_ev;
        Ok(self)
    }

    /// Caps the integrand evaluations of a single integral.
    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }

    /// True when both bodies are perfect conductors.
    pub fn is_ideal(&self) -> bool {
        matches!((&self.first, &self.second), (Response::Ideal, Response::Ideal))
    }

    /// Plane-plane pressure, N/m^2 (negative: attraction).
    pub fn pressure(&self, z: f64, tol: f64) -> Result<LifshitzResult> {
        check_z(z)?;
        check_tol(tol)?;
        let r = self.double_integral(z, tol, Quantity::Pressure)?;
        let z2 = z * z;
        Ok(LifshitzResult {
            value: -HBAR * C / (32.0 * PI * PI * z2 * z2) * r.value,
            ..r
        })
    }

    /// Sphere-plane force, N (negative: attraction).
    pub fn force(&self, z: f64, radius: f64, tol: f64) -> Result<LifshitzResult> {
        check_z(z)?;
        check_radius(radius)?;
        check_tol(tol)?;
        let r = self.double_integral(z, tol, Quantity::Force)?;
        Ok(LifshitzResult {
            value: HBAR * C * radius / (16.0 * PI * z * z * z) * r.value,
            ..r
        })
    }

    /// `dF/dz = 2 pi R |P|`, N/m.
    pub fn force_gradient(&self, z: f64, radius: f64, tol: f64) -> Result<LifshitzResult> {
        check_radius(radius)?;
        let p = self.pressure(z, tol)?;
        Ok(LifshitzResult {
            value: 2.0 * PI * radius * libm::fabs(p.value),
            ..p
        })
    }

    fn double_integral(&self, z: f64, tol: f64, quantity: Quantity) -> Result<LifshitzResult> {
        let inner_tol = 0.1 * tol;
        let outer_tol = 0.5 * tol;
        // y = 1 corresponds to xi = t c / (2 z)
        let xi_scale_ev = rad_per_s_to_ev(C / (2.0 * z));
        let ideal = self.is_ideal();

        let worst_inner = Cell::new(0.0_f64);
        let used = Cell::new(0_usize);
        let failure: Cell<Option<Error>> = Cell::new(None);

        let outer = |t: f64| -> f64 {
            let p = 1.0 / t;
            let integrand = |y: f64| -> f64 {
                if y == 0.0 {
                    return 0.0;
                }
                let (q_te, q_tm) = if ideal {
                    ((1.0, 0.0), (1.0, 0.0))
                } else {
                    let xi = (y * t * xi_scale_ev).max(self.xi_floor_ev);
                    let a = self.first.reflection(xi, p);
                    let b = self.second.reflection(xi, p);
                    (product(a.te, b.te), product(a.tm, b.tm))
                };
                let (d_te, d_tm) = (one_minus_qe(q_te, y), one_minus_qe(q_tm, y));
                match quantity {
                    Quantity::Pressure => {
                        let e = libm::exp(-y);
                        y * y * y * (q_te.0 * e / d_te + q_tm.0 * e / d_tm)
                    }
                    Quantity::Force => y * y * (log_one_minus_qe(q_te, y, d_te) + log_one_minus_qe(q_tm, y, d_tm)),
                }
            };
            let layout = LogPanels {
                first_width: 0.5,
                ratio: 2.0,
                cutoff: 1e-12,
                end: f64::INFINITY,
            };
            let budget = self.max_evals.saturating_sub(used.get());
            match integrate_log_panels(integrand, 0.0, layout, inner_tol, budget) {
                Ok(r) => {
                    used.set(used.get() + r.evaluations);
                    worst_inner.set(worst_inner.get().max(r.rel_error()));
                    r.value
                }
                Err(e) => {
                    if let Error::Convergence { evaluations, .. } = e {
                        used.set(used.get() + evaluations);
                    }
                    failure.set(Some(e));
                    f64::NAN
                }
            }
        };

        let res = integrate(outer, 0.0, 1.0, outer_tol, 0.0, usize::MAX);
        if let Some(e) = failure.take() {
            return Err(match e {
                Error::Convergence { partial, .. } => Error::Convergence {
                    partial,
                    est_rel_error: f64::INFINITY,
                    evaluations: used.get(),
                },
                other => other,
            });
        }
        let res = res?;
        Ok(LifshitzResult {
            value: res.value,
            est_rel_error: res.rel_error() + worst_inner.get(),
            evaluations: used.get(),
        })
    }
}

fn prepare(m: &DielectricModel) -> Result<Response> {
    Ok(match m {
        DielectricModel::PerfectConductor => Response::Ideal,
        DielectricModel::DrudeOnly(d) => {
            d.validate()?;
            Response::Drude(*d)
        }
        DielectricModel::Tabulated { .. } => Response::Sampled(SampledPermittivity::new(m)?),
    })
}

/// Plane-plane pressure between half-spaces of `m1` and `m2`, N/m^2.
pub fn pressure_plane_plane(
    z: f64,
    m1: &DielectricModel,
    m2: &DielectricModel,
    tol: f64,
) -> Result<LifshitzResult> {
    LifshitzPair::new(m1, m2)?.pressure(z, tol)
}

/// Sphere-plane force (proximity-force form), N.
pub fn force_sphere_plane(
    z: f64,
    radius: f64,
    m1: &DielectricModel,
    m2: &DielectricModel,
    tol: f64,
) -> Result<LifshitzResult> {
    LifshitzPair::new(m1, m2)?.force(z, radius, tol)
}

/// Sphere-plane force gradient `2 pi R |P(z)|`, N/m.
pub fn force_gradient_sphere_plane(
    z: f64,
    radius: f64,
    m1: &DielectricModel,
    m2: &DielectricModel,
    tol: f64,
) -> Result<LifshitzResult> {
    LifshitzPair::new(m1, m2)?.force_gradient(z, radius, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    const R: f64 = 294.3e-6;

    fn au() -> DielectricModel {
        DielectricModel::DrudeOnly(DrudeParams::GOLD_DEFAULT)
    }
    fn cu() -> DielectricModel {
        DielectricModel::DrudeOnly(DrudeParams::COPPER_DEFAULT)
    }

    #[test]
    fn ideal_closed_forms() {
        // direct evaluation of the closed forms with CODATA 2018 constants
        let p = ideal_pressure_plane_plane(1e-6).unwrap();
        assert!((p / -1.300_12e-3 - 1.0).abs() < 1e-5, "{p}");
        let f = ideal_force_sphere_plane(1e-6, R).unwrap();
        assert!((f / -8.013_72e-13 - 1.0).abs() < 1e-5, "{f}");
        assert!((ideal_pressure_plane_plane(0.5e-6).unwrap() / p - 16.0).abs() < 1e-12);
        assert!((ideal_force_sphere_plane(2e-6, R).unwrap() / f - 0.125).abs() < 1e-12);
        assert!((ideal_force_sphere_plane(1e-6, 2.0 * R).unwrap() / f - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_pressure_is_derivative_of_force_over_2pi_r() {
        // d/dz (-A/z^3) = 3A/z^4; compare with 2 pi R |P|
        let z = 0.7e-6;
        let f = ideal_force_sphere_plane(z, R).unwrap();
        let df = -3.0 * f / z;
        let p = ideal_pressure_plane_plane(z).unwrap();
        assert!((df / (2.0 * PI * R * p.abs()) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn closed_forms_reject_bad_domain() {
        assert!(ideal_pressure_plane_plane(0.0).is_err());
        assert!(ideal_force_sphere_plane(1e-6, -1.0).is_err());
        assert!(pressure_plane_plane(1e-6, &au(), &cu(), 1e-2).is_err());
    }

    #[test]
    fn ideal_quadrature_matches_closed_form() {
        let ideal = DielectricModel::PerfectConductor;
        let p = pressure_plane_plane(1e-6, &ideal, &ideal, 1e-6).unwrap();
        let exact = ideal_pressure_plane_plane(1e-6).unwrap();
        assert!((p.value / exact - 1.0).abs() < 1e-6);
        assert!(p.est_rel_error <= 1e-6);
        let f = force_sphere_plane(0.2e-6, R, &ideal, &ideal, 1e-6).unwrap();
        let exact = ideal_force_sphere_plane(0.2e-6, R).unwrap();
        assert!((f.value / exact - 1.0).abs() < 1e-6);
    }

    #[test]
    fn drude_pair_is_weaker_than_ideal_and_symmetric() {
        let pair = LifshitzPair::new(&au(), &cu()).unwrap();
        let swapped = LifshitzPair::new(&cu(), &au()).unwrap();
        let p = pair.pressure(0.5e-6, 1e-7).unwrap();
        assert!(p.value < 0.0);
        assert!(p.value.abs() < ideal_pressure_plane_plane(0.5e-6).unwrap().abs());
        let f1 = pair.force(0.5e-6, R, 1e-7).unwrap().value;
        let f2 = swapped.force(0.5e-6, R, 1e-7).unwrap().value;
        assert!((f1 / f2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_ideal_and_drude_lies_between() {
        let ideal = DielectricModel::PerfectConductor;
        let z = 0.3e-6;
        let both = pressure_plane_plane(z, &au(), &au(), 1e-6).unwrap().value;
        let mixed = pressure_plane_plane(z, &ideal, &au(), 1e-6).unwrap().value;
        let exact = ideal_pressure_plane_plane(z).unwrap();
        assert!(both.abs() < mixed.abs() && mixed.abs() < exact.abs());
    }

    #[test]
    fn xi_floor_insensitivity() {
        let tol = 1e-6;
        let pair = LifshitzPair::new(&au(), &cu()).unwrap();
        let halved = pair.clone().with_xi_floor(0.5 * DEFAULT_XI_FLOOR_EV).unwrap();
        for z in [0.2e-6, 2e-6] {
            let a = pair.pressure(z, tol).unwrap().value;
            let b = halved.pressure(z, tol).unwrap().value;
            assert!((a / b - 1.0).abs() < tol, "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn budget_exhaustion_is_convergence_error() {
        let pair = LifshitzPair::new(&au(), &cu()).unwrap().with_max_evals(500);
        match pair.pressure(1e-6, 1e-8) {
            Err(Error::Convergence { partial, .. }) => assert!(partial.is_finite()),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn geometry_flags() {
        let g = SpherePlaneGeometry::new(R, 1e-6, 39.4e-9).unwrap();
        assert!((g.corrected_separation() - 1.0788e-6).abs() < 1e-18);
        assert!(!g.beyond_small_gap());
        assert!(SpherePlaneGeometry::new(R, 40e-6, 0.0).unwrap().beyond_small_gap());
        assert!(SpherePlaneGeometry::new(R, -1e-6, 0.0).is_err());
        assert!(SpherePlaneGeometry::new(R, 1e-6, -1e-9).is_err());
    }
}
