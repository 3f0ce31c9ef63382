//! Physical constants (CODATA 2018, SI units).

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Newtonian constant of gravitation, m^3/(kg s^2).
pub const G: f64 = 6.674_30e-11;
/// Elementary charge, C. Converts eV to J.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Angular frequency (rad/s) corresponding to a photon energy of 1 eV.
pub const RAD_PER_S_PER_EV: f64 = ELEMENTARY_CHARGE / HBAR;

/// The constants as one immutable value, for callers that want to pass
/// them around or print them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
    pub eps0: f64,
    pub g: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        c: C,
        eps0: EPS0,
        g: G,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

/// Photon energy in eV to angular frequency in rad/s.
#[inline]
pub fn ev_to_rad_per_s(ev: f64) -> f64 {
    ev * RAD_PER_S_PER_EV
}

/// Angular frequency in rad/s to photon energy in eV.
#[inline]
pub fn rad_per_s_to_ev(omega: f64) -> f64 {
    omega / RAD_PER_S_PER_EV
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ev_conversion_matches_known_value() {
        // 1 eV ~ 1.519e15 rad/s
        assert!((RAD_PER_S_PER_EV / 1.519_267_448_8e15 - 1.0).abs() < 1e-9);
        assert!((rad_per_s_to_ev(ev_to_rad_per_s(3.7)) - 3.7).abs() < 1e-15);
    }
}
