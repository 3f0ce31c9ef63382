//! Yukawa-type corrections to gravity between a layered sphere and a
//! layered plate, and exclusion limits on their strength.
//!
//! The pair potential is `V(r) = -G alpha m1 m2 exp(-r/lambda) / r`. The
//! plate is laterally infinite. For a sphere of concentric shells the
//! interaction has a closed form: a uniform ball of radius `a` acts outside
//! itself as a point source of strength `4 pi rho lambda^3 psi(a/lambda)`,
//! `psi(x) = x cosh x - sinh x`, and a plane layer integrates the point
//! kernel to `2 pi lambda^2 (e^{-h1/lambda} - e^{-h2/lambda})`. Together
//!
//! ```text
//! F = 2 pi G alpha lambda S M_p e^{-(R + z)/lambda}
//! S = 4 pi lambda^3 sum_shells rho (psi(r_out/lambda) - psi(r_in/lambda))
//! M_p = sum_layers rho (e^{-top/lambda} - e^{-bottom/lambda})
//! ```
//!
//! which reduces to `4 pi^2 G alpha lambda^3 R rho_s rho_p e^{-z/lambda}`
//! for `lambda << R`. A direct volume quadrature is kept alongside as an
//! independent check.

use alloc::vec::Vec;
use core::cell::Cell;
use core::f64::consts::PI;

use crate::constants::G;
use crate::error::{config, domain};
use crate::quadrature::{integrate, integrate_log_panels, LogPanels};
use crate::{Error, Result};

/// Reference densities, kg/m^3.
pub mod density {
    pub const GOLD: f64 = 19_300.0;
    pub const COPPER: f64 = 8_960.0;
    pub const CHROMIUM: f64 = 7_190.0;
    pub const SAPPHIRE: f64 = 3_980.0;
    pub const SILICON: f64 = 2_330.0;
}

/// `lambda / R` from which [`YukawaMethod::Auto`] switches to the volume
/// quadrature.
pub const AUTO_QUADRATURE_RATIO: f64 = 0.05;

const ORACLE_TOL: f64 = 1e-6;
const ORACLE_MAX_EVALS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YukawaParams {
    pub alpha: f64,
    /// Range, m.
    pub lambda: f64,
}

impl YukawaParams {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        let p = YukawaParams { alpha, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(domain!("Yukawa range must be positive, got {}", self.lambda));
        }
        if !self.alpha.is_finite() {
            return Err(domain!("Yukawa strength must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub thickness: f64,
    pub density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Sphere { radius: f64 },
    HalfSpace,
}

/// Coatings listed outermost first over a core. A half-space with
/// `core_density == 0` is a finite slab.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredBody {
    pub layers: Vec<Layer>,
    pub core_density: f64,
    pub shape: Shape,
}

impl LayeredBody {
    pub fn sphere(radius: f64, layers: Vec<Layer>, core_density: f64) -> Result<Self> {
        let b = LayeredBody { layers, core_density, shape: Shape::Sphere { radius } };
        b.validate()?;
        Ok(b)
    }

    pub fn half_space(layers: Vec<Layer>, core_density: f64) -> Result<Self> {
        let b = LayeredBody { layers, core_density, shape: Shape::HalfSpace };
        b.validate()?;
        Ok(b)
    }

    /// Homogeneous body of one density.
    pub fn uniform(shape: Shape, density: f64) -> Result<Self> {
        let b = LayeredBody { layers: Vec::new(), core_density: density, shape };
        b.validate()?;
        Ok(b)
    }

    /// Sapphire ball under 1 nm Cr and 203 nm Au.
    pub fn reference_sphere(radius: f64) -> Result<Self> {
        Self::sphere(
            radius,
            alloc::vec![
                Layer { thickness: 203e-9, density: density::GOLD },
                Layer { thickness: 1e-9, density: density::CHROMIUM },
            ],
            density::SAPPHIRE,
        )
    }

    /// 3.5 um polysilicon plate under 1 nm Cr and 200 nm Cu, vacuum below.
    pub fn reference_plate() -> Result<Self> {
        Self::half_space(
            alloc::vec![
                Layer { thickness: 200e-9, density: density::COPPER },
                Layer { thickness: 1e-9, density: density::CHROMIUM },
                Layer { thickness: 3.5e-6, density: density::SILICON },
            ],
            0.0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.thickness > 0.0 && l.thickness.is_finite()) {
                return Err(config!("layer {i}: thickness must be positive, got {}", l.thickness));
            }
            if !(l.density > 0.0 && l.density.is_finite()) {
                return Err(config!("layer {i}: density must be positive, got {}", l.density));
            }
        }
        if !(self.core_density >= 0.0 && self.core_density.is_finite()) {
            return Err(config!("core density must be non-negative, got {}", self.core_density));
        }
        if let Shape::Sphere { radius } = self.shape {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(config!("sphere radius must be positive, got {radius}"));
            }
            if self.coating_thickness() >= radius {
                return Err(config!("coatings are thicker than the sphere radius"));
            }
        }
        Ok(())
    }

    pub fn coating_thickness(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    /// `(inner depth, outer depth, density)` for every region below the
    /// surface, including the core (outer depth infinite for a half-space).
    fn regions(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.layers.len() + 1);
        let mut depth = 0.0;
        for l in &self.layers {
            out.push((depth, depth + l.thickness, l.density));
            depth += l.thickness;
        }
        let bottom = match self.shape {
            Shape::Sphere { radius } => radius,
            Shape::HalfSpace => f64::INFINITY,
        };
        if self.core_density > 0.0 {
            out.push((depth, bottom, self.core_density));
        }
        out
    }

    fn radius(&self) -> Option<f64> {
        match self.shape {
            Shape::Sphere { radius } => Some(radius),
            Shape::HalfSpace => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum YukawaMethod {
    /// Closed form while `lambda / R < 0.05`, volume quadrature beyond.
    #[default]
    Auto,
    Analytic,
    Quadrature,
}

fn bodies(sphere: &LayeredBody, plate: &LayeredBody) -> Result<f64> {
    sphere.validate()?;
    plate.validate()?;
    if plate.shape != Shape::HalfSpace {
        return Err(config!("the plate must be a half-space body"));
    }
    sphere.radius().ok_or_else(|| config!("the first body must be a sphere"))
}

/// `psi(r/lambda) e^{-R/lambda}` without overflow.
fn scaled_psi(r: f64, radius: f64, lambda: f64) -> f64 {
    let x = r / lambda;
    let psi_scaled = if x < 0.1 {
        let x2 = x * x;
        x * x2 * (1.0 / 3.0 + x2 * (1.0 / 30.0 + x2 * (1.0 / 840.0 + x2 / 45360.0))) * libm::exp(-x)
    } else {
        0.5 * ((x - 1.0) + (x + 1.0) * libm::exp(-2.0 * x))
    };
    psi_scaled * libm::exp((r - radius) / lambda)
}

/// Attractive force at gap `z` for `alpha = 1`, closed form, N.
fn unit_force_analytic(lambda: f64, sphere: &LayeredBody, plate: &LayeredBody, z: f64) -> f64 {
    let radius = sphere.radius().expect("checked by caller");
    let mut s = 0.0;
    for (inner, outer, rho) in sphere.regions() {
        let r_out = radius - inner;
        let r_in = radius - outer;
        let q_in = if r_in > 0.0 { scaled_psi(r_in, radius, lambda) } else { 0.0 };
        s += rho * (scaled_psi(r_out, radius, lambda) - q_in);
    }
    let s = 4.0 * PI * lambda * lambda * lambda * s;
    let mut mp = 0.0;
    for (top, bottom, rho) in plate.regions() {
        // e^{-top} (1 - e^{-(bottom - top)})
        mp += rho * libm::exp(-top / lambda) * -libm::expm1(-(bottom - top) / lambda);
    }
    2.0 * PI * G * lambda * s * mp * libm::exp(-z / lambda)
}

fn take(failure: &Cell<Option<Error>>, r: Result<f64>) -> f64 {
    match r {
        Ok(v) => v,
        Err(e) => {
            let prev = failure.take();
            failure.set(Some(prev.unwrap_or(e)));
            0.0
        }
    }
}

/// Downward pull per unit mass at height `h` above the plate surface,
/// divided by `G alpha`: the volume integral of the kernel's vertical
/// component over the plate.
fn plate_field(lambda: f64, regions: &[(f64, f64, f64)], h: f64, tol: f64) -> Result<f64> {
    let failure = Cell::new(None);
    // sum over a horizontal plane at vertical distance `v`
    let plane = |v: f64| -> f64 {
        let kernel = |s: f64| {
            let r = libm::sqrt(v * v + s * s);
            2.0 * PI * s * libm::exp(-r / lambda) * (1.0 / (r * r) + 1.0 / (lambda * r)) * v / r
        };
        let layout = LogPanels { first_width: 0.5 * v.min(lambda), ..LogPanels::default() };
        take(&failure, integrate_log_panels(kernel, 0.0, layout, tol * 0.1, ORACLE_MAX_EVALS).map(|q| q.value))
    };
    let mut total = 0.0;
    for &(top, bottom, rho) in regions {
        let f = |d: f64| plane(h + d);
        let q = if bottom.is_finite() && bottom - top < 50.0 * lambda {
            integrate(f, top, bottom, tol, 0.0, ORACLE_MAX_EVALS)?
        } else {
            let layout = LogPanels { first_width: lambda, end: bottom, ..LogPanels::default() };
            integrate_log_panels(f, top, layout, tol, ORACLE_MAX_EVALS)?
        };
        total += rho * q.value;
    }
    match failure.take() {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// Attractive force at gap `z` for `alpha = 1` by direct quadrature: the
/// plate field integrated over horizontal cross-sections of the sphere.
fn unit_force_quadrature(lambda: f64, sphere: &LayeredBody, plate: &LayeredBody, z: f64) -> Result<f64> {
    let radius = sphere.radius().expect("checked by caller");
    let centre = z + radius;
    let shells: Vec<(f64, f64, f64)> = sphere
        .regions()
        .into_iter()
        .map(|(inner, outer, rho)| (radius - inner, (radius - outer).max(0.0), rho))
        .collect();
    let plate_regions = plate.regions();
    let failure = Cell::new(None);
    let integrand = |h: f64| -> f64 {
        let y = h - centre;
        let disk = |r: f64| PI * (r * r - y * y).max(0.0);
        let area: f64 = shells.iter().map(|&(ro, ri, rho)| rho * (disk(ro) - disk(ri))).sum();
        if area == 0.0 {
            return 0.0;
        }
        area * take(&failure, plate_field(lambda, &plate_regions, h, ORACLE_TOL * 0.1))
    };
    // kinks where the plane crosses a shell boundary
    let mut breaks: Vec<f64> = alloc::vec![z, centre + radius];
    for &(ro, ri, _) in &shells {
        for r in [ro, ri] {
            if r > 0.0 {
                breaks.push(centre - r);
                breaks.push(centre + r);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut total = 0.0;
    let mut integrand = integrand;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a < z || b <= a {
            continue;
        }
        if (a - z) / lambda > 45.0 {
            break;
        }
        let layout = LogPanels { first_width: lambda.min(b - a), end: b, ..LogPanels::default() };
        total += integrate_log_panels(&mut integrand, a, layout, ORACLE_TOL, ORACLE_MAX_EVALS)?.value;
    }
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(G * total)
}

fn unit_force(lambda: f64, sphere: &LayeredBody, plate: &LayeredBody, z: f64, method: YukawaMethod) -> Result<f64> {
    let radius = bodies(sphere, plate)?;
    if !(z > 0.0 && z.is_finite()) {
        return Err(domain!("separation must be positive, got {z}"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain!("Yukawa range must be positive, got {lambda}"));
    }
    let quadrature = match method {
        YukawaMethod::Auto => lambda / radius >= AUTO_QUADRATURE_RATIO,
        YukawaMethod::Analytic => false,
        YukawaMethod::Quadrature => true,
    };
    if quadrature {
        unit_force_quadrature(lambda, sphere, plate, z)
    } else {
        Ok(unit_force_analytic(lambda, sphere, plate, z))
    }
}

/// Attraction between the sphere and the plate at surface gap `z`, N.
/// Exactly linear in `alpha`; negative `alpha` gives repulsion.
pub fn yukawa_force_sphere_plane(p: &YukawaParams, sphere: &LayeredBody, plate: &LayeredBody, z: f64) -> Result<f64> {
    yukawa_force_with(p, sphere, plate, z, YukawaMethod::Auto)
}

pub fn yukawa_force_with(
    p: &YukawaParams,
    sphere: &LayeredBody,
    plate: &LayeredBody,
    z: f64,
    method: YukawaMethod,
) -> Result<f64> {
    p.validate()?;
    Ok(p.alpha * unit_force(p.lambda, sphere, plate, z, method)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaLimit {
    pub alpha: f64,
    /// Separation where the bound is tightest, m.
    pub z: f64,
}

/// Smallest `alpha` whose force reaches `residual_bound(z)` somewhere on
/// `z_grid`: `min_z bound(z) / F(alpha = 1, z)`.
pub fn alpha_limit<B>(
    mut residual_bound: B,
    lambda: f64,
    sphere: &LayeredBody,
    plate: &LayeredBody,
    z_grid: &[f64],
    method: YukawaMethod,
) -> Result<AlphaLimit>
where
    B: FnMut(f64) -> f64,
{
    if z_grid.is_empty() {
        return Err(config!("separation grid is empty"));
    }
    let mut best = AlphaLimit { alpha: f64::INFINITY, z: z_grid[0] };
    for (i, &z) in z_grid.iter().enumerate() {
        let bound = residual_bound(z);
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(domain!("point {i}: residual bound {bound} must be positive"));
        }
        let alpha = bound / unit_force(lambda, sphere, plate, z, method)?;
        if alpha < best.alpha {
            best = AlphaLimit { alpha, z };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    const R: f64 = 294.3e-6;

    fn pair() -> (LayeredBody, LayeredBody) {
        (LayeredBody::reference_sphere(R).unwrap(), LayeredBody::reference_plate().unwrap())
    }

    #[test]
    fn homogeneous_small_range_limit() {
        let s = LayeredBody::uniform(Shape::Sphere { radius: R }, density::GOLD).unwrap();
        let p = LayeredBody::uniform(Shape::HalfSpace, density::COPPER).unwrap();
        let (lam, z) = (100e-9, 150e-9);
        let f = unit_force_analytic(lam, &s, &p, z);
        let pfa = 4.0 * PI * PI * G * lam.powi(3) * R * density::GOLD * density::COPPER * libm::exp(-z / lam);
        // finite-sphere correction is 1 - lambda/R
        assert!((f / pfa - (1.0 - lam / R)).abs() < 1e-9, "{}", f / pfa);
    }

    #[test]
    fn psi_branches_agree() {
        for x in [0.05, 0.0999, 0.1001, 0.3] {
            let series = {
                let x2 = x * x;
                x * x2 * (1.0 / 3.0 + x2 * (1.0 / 30.0 + x2 * (1.0 / 840.0 + x2 / 45360.0)))
            };
            let exact = x * libm::cosh(x) - libm::sinh(x);
            assert!((series / exact - 1.0).abs() < 1e-10, "{x}");
            assert!((scaled_psi(x, x, 1.0) * libm::exp(x) / exact - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_in_alpha() {
        let (s, p) = pair();
        let y = |a| yukawa_force_sphere_plane(&YukawaParams::new(a, 200e-9).unwrap(), &s, &p, 200e-9).unwrap();
        assert_eq!(y(0.0), 0.0);
        assert_eq!(y(2e13), 2.0 * y(1e13));
        assert!(y(-1e13) < 0.0);
    }

    #[test]
    fn reference_point_is_piconewton_scale() {
        let (s, p) = pair();
        let f = yukawa_force_sphere_plane(&YukawaParams::new(1e13, 200e-9).unwrap(), &s, &p, 200e-9).unwrap();
        assert!(f > 1e-12 && f < 5e-12, "{f}");
    }

    #[test]
    fn chromium_is_negligible() {
        // swapping each 1 nm Cr film for the density beneath it
        let (s, p) = pair();
        let mut s2 = s.clone();
        s2.layers[1].density = density::SAPPHIRE;
        let mut p2 = p.clone();
        p2.layers[1].density = density::SILICON;
        for lam in [20e-9, 50e-9, 200e-9, 500e-9, 1e-6, 10e-6] {
            let a = unit_force_analytic(lam, &s, &p, 200e-9);
            let sphere_only = unit_force_analytic(lam, &s2, &p, 200e-9);
            let both = unit_force_analytic(lam, &s2, &p2, 200e-9);
            assert!((a / sphere_only - 1.0).abs() < 1e-3, "{lam}");
            // the plate film sits over light silicon and peaks near 0.19%
            assert!((a / both - 1.0).abs() < 2e-3, "{lam}: {}", a / both);
            if lam <= 50e-9 {
                assert!((a / both - 1.0).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn thick_coating_approaches_bulk() {
        let s = LayeredBody::uniform(Shape::Sphere { radius: R }, density::GOLD).unwrap();
        let bulk = LayeredBody::uniform(Shape::HalfSpace, density::COPPER).unwrap();
        let target = unit_force_analytic(200e-9, &s, &bulk, 300e-9);
        let mut last = f64::INFINITY;
        for t in [100e-9, 400e-9, 1.6e-6, 6.4e-6] {
            let p = LayeredBody::half_space(alloc::vec![Layer { thickness: t, density: density::COPPER }], density::SILICON)
                .unwrap();
            let err = (unit_force_analytic(200e-9, &s, &p, 300e-9) / target - 1.0).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-12);
    }

    #[test]
    fn monotone_in_gap_and_range() {
        let (s, p) = pair();
        let mut prev = f64::INFINITY;
        for k in 1..30 {
            let f = unit_force(200e-9, &s, &p, 50e-9 * k as f64, YukawaMethod::Analytic).unwrap();
            assert!(f < prev);
            prev = f;
        }
        let mut prev = 0.0;
        for k in 1..30 {
            let f = unit_force(20e-9 * k as f64, &s, &p, 300e-9, YukawaMethod::Analytic).unwrap();
            assert!(f > prev);
            prev = f;
        }
    }

    #[test]
    fn quadrature_matches_closed_form_on_small_sphere() {
        // lambda / R = 0.2 exercises the finite-size terms
        let s = LayeredBody::sphere(1e-6, alloc::vec![Layer { thickness: 100e-9, density: density::GOLD }], density::SAPPHIRE)
            .unwrap();
        let (_, p) = pair();
        let a = unit_force_analytic(200e-9, &s, &p, 100e-9);
        let q = unit_force_quadrature(200e-9, &s, &p, 100e-9).unwrap();
        assert!((q / a - 1.0).abs() < 1e-4, "{}", q / a);
    }

    #[test]
    fn alpha_limit_scales_with_bound() {
        let (s, p) = pair();
        let zs = [0.2e-6, 0.4e-6, 0.8e-6];
        let a = alpha_limit(|_| 1e-12, 200e-9, &s, &p, &zs, YukawaMethod::Auto).unwrap();
        let b = alpha_limit(|_| 0.5e-12, 200e-9, &s, &p, &zs, YukawaMethod::Auto).unwrap();
        assert_eq!(b.alpha, 0.5 * a.alpha);
        assert_eq!(a.z, 0.2e-6);
        let f = yukawa_force_sphere_plane(&YukawaParams::new(1e13, 200e-9).unwrap(), &s, &p, 0.2e-6).unwrap();
        let c = alpha_limit(|_| f, 200e-9, &s, &p, &zs[..1], YukawaMethod::Auto).unwrap();
        assert!((c.alpha / 1e13 - 1.0).abs() < 1e-15);
        assert!(matches!(alpha_limit(|_| 1.0, 200e-9, &s, &p, &[], YukawaMethod::Auto), Err(Error::Config(_))));
        assert!(alpha_limit(|_| -1.0, 200e-9, &s, &p, &zs, YukawaMethod::Auto).is_err());
    }

    #[test]
    fn body_validation() {
        assert!(LayeredBody::sphere(1e-7, alloc::vec![Layer { thickness: 2e-7, density: 1.0 }], 1.0).is_err());
        assert!(LayeredBody::half_space(alloc::vec![Layer { thickness: 1e-7, density: 0.0 }], 1.0).is_err());
        let (s, _) = pair();
        assert!(unit_force(1e-7, &s, &s, 1e-7, YukawaMethod::Analytic).is_err());
        assert!(YukawaParams::new(1.0, 0.0).is_err());
    }
}
