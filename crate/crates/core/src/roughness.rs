//! Roughness averaging over a discrete distribution of local separations.
//!
//! A [`RoughnessDistribution`] holds separation offsets `dz_i` with weights
//! `w_i`; averaged quantities are `sum_i w_i X(z + dz_i)`. The mean contact
//! offset `delta0` is not part of the distribution: it enters through the
//! corrected separation `z = z_metal + 2 delta0`, and distributions built
//! from height maps are mean-centered.
//!
//! Heights in a [`HeightMap`] are measured along the outward normal of the
//! surface, towards the gap, so a local bump of height `h1 + h2` shrinks
//! the local separation by that amount.

use alloc::vec::Vec;

use crate::error::{config, domain, invalid};
use crate::lifshitz::{LifshitzPair, LifshitzResult};
use crate::materials::DielectricModel;
use crate::Result;

/// Default number of histogram bins for height-map ingestion.
pub const DEFAULT_BINS: usize = 21;

/// Fine sub-bins per output bin used while convolving two height
/// distributions.
const OVERSAMPLE: usize = 32;

const NORMALIZATION_TOL: f64 = 1e-12;

/// One entry of a separation distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughnessEntry {
    /// Separation offset `dz_i`, m.
    pub offset: f64,
    /// Probability `w_i`.
    pub weight: f64,
}

/// Normalized weights over separation offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughnessDistribution {
    entries: Vec<RoughnessEntry>,
}

impl RoughnessDistribution {
    /// Wraps already-normalized entries. Weights must be non-negative and
    /// sum to one within `1e-12`.
    pub fn new(entries: Vec<RoughnessEntry>) -> Result<Self> {
        validate_entries(&entries)?;
        let sum: f64 = entries.iter().map(|e| e.weight).sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(invalid!("roughness weights sum to {sum}, expected 1"));
        }
        Ok(RoughnessDistribution { entries })
    }

    /// Rescales non-negative weights so they sum to one.
    pub fn normalized(mut entries: Vec<RoughnessEntry>) -> Result<Self> {
        validate_entries(&entries)?;
        let sum: f64 = entries.iter().map(|e| e.weight).sum();
        if !(sum > 0.0) {
            return Err(invalid!("roughness weights sum to zero"));
        }
        for e in entries.iter_mut() {
            e.weight /= sum;
        }
        Ok(RoughnessDistribution { entries })
    }

    /// The smooth-surface distribution `{(0, 1)}`.
    pub fn smooth() -> Self {
        RoughnessDistribution {
            entries: alloc::vec![RoughnessEntry {
                offset: 0.0,
                weight: 1.0
            }],
        }
    }

    pub fn entries(&self) -> &[RoughnessEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mean_offset(&self) -> f64 {
        self.entries.iter().map(|e| e.weight * e.offset).sum()
    }

    pub fn rms_offset(&self) -> f64 {
        let m = self.mean_offset();
        libm::sqrt(
            self.entries
                .iter()
                .map(|e| e.weight * (e.offset - m) * (e.offset - m))
                .sum(),
        )
    }

    pub fn min_offset(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.offset)
            .fold(f64::INFINITY, f64::min)
    }
}

fn validate_entries(entries: &[RoughnessEntry]) -> Result<()> {
    if entries.is_empty() {
        return Err(invalid!("roughness distribution needs at least one entry"));
    }
    for (i, e) in entries.iter().enumerate() {
        if !e.offset.is_finite() {
            return Err(invalid!("entry {i}: offset {} is not finite", e.offset));
        }
        if !(e.weight.is_finite() && e.weight >= 0.0) {
            return Err(invalid!("entry {i}: weight {} must be non-negative", e.weight));
        }
    }
    Ok(())
}

/// A scanned topography: row-major heights in m on a square pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    rows: usize,
    cols: usize,
    heights: Vec<f64>,
    pixel_pitch: f64,
}

impl HeightMap {
    pub fn new(rows: usize, cols: usize, heights: Vec<f64>, pixel_pitch: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid!("height map is empty"));
        }
        if heights.len() != rows * cols {
            return Err(invalid!(
                "height map has {} samples, expected {rows} x {cols}",
                heights.len()
            ));
        }
        if let Some(i) = heights.iter().position(|h| !h.is_finite()) {
            return Err(invalid!("height sample {i} is not finite"));
        }
        if !(pixel_pitch.is_finite() && pixel_pitch > 0.0) {
            return Err(invalid!("pixel pitch must be positive, got {pixel_pitch}"));
        }
        Ok(HeightMap {
            rows,
            cols,
            heights,
            pixel_pitch,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn mean(&self) -> f64 {
        self.heights.iter().sum::<f64>() / self.heights.len() as f64
    }
}

/// Mean-centered heights with their range.
fn centered(map: &HeightMap) -> (Vec<f64>, f64, f64) {
    let m = map.mean();
    let v: Vec<f64> = map.heights.iter().map(|h| h - m).collect();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (v, lo, hi)
}

fn fine_histogram(values: &[f64], lo: f64, step: f64, len: usize) -> Vec<f64> {
    let mut h = alloc::vec![0.0; len];
    for v in values {
        let i = if step > 0.0 {
            libm::round((v - lo) / step) as usize
        } else {
            0
        };
        h[i.min(len - 1)] += 1.0;
    }
    h
}

/// Separation distribution for two independent facing surfaces.
///
/// The local separation deficit is `h1 + h2`, so its distribution is the
/// convolution of the two height distributions. It is histogrammed into
/// `bins` equally spaced offsets whose outermost centers sit on the
/// extreme values, then mean-centered. Empty bins are dropped; flat maps
/// give the single entry `{(0, 1)}`.
pub fn weights_from_heightmaps(
    surface1: &HeightMap,
    surface2: &HeightMap,
    bins: usize,
) -> Result<RoughnessDistribution> {
    if bins == 0 {
        return Err(config!("bin count must be at least 1"));
    }
    let (v1, lo1, hi1) = centered(surface1);
    let (v2, lo2, hi2) = centered(surface2);
    let span = (hi1 - lo1) + (hi2 - lo2);
    let scale = lo1.abs().max(hi1.abs()).max(lo2.abs()).max(hi2.abs());
    if bins == 1 || span <= 1e-12 * scale || span == 0.0 {
        return Ok(RoughnessDistribution::smooth());
    }
    let fine_per_bin = OVERSAMPLE;
    let width = span / (bins - 1) as f64;
    let step = width / fine_per_bin as f64;
    let n1 = libm::round((hi1 - lo1) / step) as usize + 1;
    let n2 = libm::round((hi2 - lo2) / step) as usize + 1;
    let h1 = fine_histogram(&v1, lo1, step, n1);
    let h2 = fine_histogram(&v2, lo2, step, n2);

    let mut coarse = alloc::vec![0.0; bins];
    for (i, a) in h1.iter().enumerate().filter(|(_, a)| **a > 0.0) {
        for (j, b) in h2.iter().enumerate().filter(|(_, b)| **b > 0.0) {
            let k = ((i + j) + fine_per_bin / 2) / fine_per_bin;
            coarse[k.min(bins - 1)] += a * b;
        }
    }
    let base = lo1 + lo2;
    let entries = coarse
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(k, w)| RoughnessEntry {
            offset: -(base + k as f64 * width),
            weight: *w,
        })
        .collect();
    Ok(recenter(RoughnessDistribution::normalized(entries)?))
}

/// Separation distribution from a single combined profile, for data that
/// already represents the summed topography of both surfaces.
pub fn weights_from_heightmap(combined: &HeightMap, bins: usize) -> Result<RoughnessDistribution> {
    let flat = HeightMap::new(1, 1, alloc::vec![0.0], combined.pixel_pitch)?;
    weights_from_heightmaps(combined, &flat, bins)
}

fn recenter(mut dist: RoughnessDistribution) -> RoughnessDistribution {
    let m = dist.mean_offset();
    for e in dist.entries.iter_mut() {
        e.offset -= m;
    }
    dist.entries.sort_by(|a, b| a.offset.total_cmp(&b.offset));
    dist
}

fn shifted_separations(z: f64, dist: &RoughnessDistribution) -> Result<Vec<f64>> {
    dist.entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let zi = z + e.offset;
            if zi > 0.0 && zi.is_finite() {
                Ok(zi)
            } else {
                Err(domain!(
                    "entry {i} (offset {:e} m) gives non-positive separation {zi:e} m at z = {z:e} m",
                    e.offset
                ))
            }
        })
        .collect()
}

fn weighted<F>(z: f64, dist: &RoughnessDistribution, mut eval: F) -> Result<LifshitzResult>
where
    F: FnMut(f64) -> Result<LifshitzResult>,
{
    let zs = shifted_separations(z, dist)?;
    let mut value = 0.0;
    let mut worst = 0.0_f64;
    let mut evaluations = 0;
    for (e, zi) in dist.entries.iter().zip(zs) {
        if e.weight == 0.0 {
            continue;
        }
        let r = eval(zi)?;
        value += e.weight * r.value;
        worst = worst.max(r.est_rel_error);
        evaluations += r.evaluations;
    }
    Ok(LifshitzResult {
        value,
        // all terms share a sign, so the weighted error is bounded by the worst
        est_rel_error: worst,
        evaluations,
    })
}

/// Roughness-averaged plane-plane pressure with a prepared pair, N/m^2.
pub fn averaged_pressure_with(
    pair: &LifshitzPair,
    z: f64,
    dist: &RoughnessDistribution,
    tol: f64,
) -> Result<LifshitzResult> {
    weighted(z, dist, |zi| pair.pressure(zi, tol))
}

/// Roughness-averaged sphere-plane force with a prepared pair, N.
pub fn averaged_force_with(
    pair: &LifshitzPair,
    z: f64,
    radius: f64,
    dist: &RoughnessDistribution,
    tol: f64,
) -> Result<LifshitzResult> {
    weighted(z, dist, |zi| pair.force(zi, radius, tol))
}

/// Roughness-averaged force gradient `2 pi R |<P>|`, N/m.
pub fn averaged_gradient_with(
    pair: &LifshitzPair,
    z: f64,
    radius: f64,
    dist: &RoughnessDistribution,
    tol: f64,
) -> Result<LifshitzResult> {
    weighted(z, dist, |zi| pair.force_gradient(zi, radius, tol))
}

/// `sum_i w_i P(z + dz_i)`.
pub fn averaged_pressure(
    z: f64,
    dist: &RoughnessDistribution,
    m1: &DielectricModel,
    m2: &DielectricModel,
    tol: f64,
) -> Result<LifshitzResult> {
    averaged_pressure_with(&LifshitzPair::new(m1, m2)?, z, dist, tol)
}

/// `sum_i w_i F(z + dz_i)`.
pub fn averaged_force(
    z: f64,
    radius: f64,
    dist: &RoughnessDistribution,
    m1: &DielectricModel,
    m2: &DielectricModel,
    tol: f64,
) -> Result<LifshitzResult> {
    averaged_force_with(&LifshitzPair::new(m1, m2)?, z, radius, dist, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifshitz::{ideal_force_sphere_plane, ideal_pressure_plane_plane};
    use crate::Error;
    use alloc::vec;

    fn entry(offset: f64, weight: f64) -> RoughnessEntry {
        RoughnessEntry { offset, weight }
    }

    fn two_level(d: f64, n: usize) -> HeightMap {
        // alternating columns at +d and -d: equal areas
        let h = (0..n * n).map(|k| if k % 2 == 0 { d } else { -d }).collect();
        HeightMap::new(n, n, h, 1e-8).unwrap()
    }

    fn two_level_rows(d: f64, n: usize) -> HeightMap {
        let h = (0..n * n).map(|k| if (k / n).is_multiple_of(2) { d } else { -d }).collect();
        HeightMap::new(n, n, h, 1e-8).unwrap()
    }

    fn flat(n: usize) -> HeightMap {
        HeightMap::new(n, n, vec![3e-9; n * n], 1e-8).unwrap()
    }

    fn assert_dist(d: &RoughnessDistribution, expected: &[(f64, f64)], scale: f64) {
        assert_eq!(d.len(), expected.len(), "{d:?}");
        for (e, (o, w)) in d.entries().iter().zip(expected) {
            assert!((e.offset - o).abs() < 1e-9 * scale, "{d:?}");
            assert!((e.weight - w).abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn flat_maps_give_single_entry() {
        let d = weights_from_heightmaps(&flat(4), &flat(3), DEFAULT_BINS).unwrap();
        assert_dist(&d, &[(0.0, 1.0)], 1.0);
    }

    #[test]
    fn two_level_over_flat() {
        let dd = 5e-9;
        let d = weights_from_heightmaps(&two_level(dd, 4), &flat(4), DEFAULT_BINS).unwrap();
        assert_dist(&d, &[(-dd, 0.5), (dd, 0.5)], dd);
    }

    #[test]
    fn two_independent_two_level_surfaces_convolve() {
        let dd = 5e-9;
        let d = weights_from_heightmaps(&two_level(dd, 4), &two_level_rows(dd, 4), DEFAULT_BINS).unwrap();
        assert_dist(&d, &[(-2.0 * dd, 0.25), (0.0, 0.5), (2.0 * dd, 0.25)], dd);
        assert!(d.mean_offset().abs() < 1e-24);
    }

    #[test]
    fn bumps_reduce_separation() {
        // one tall pixel among flat ones: the rare entry sits at negative offset
        let mut h = vec![0.0; 16];
        h[0] = 15e-9;
        let d = weights_from_heightmap(&HeightMap::new(4, 4, h, 1e-8).unwrap(), 3).unwrap();
        let rare = d.entries().iter().find(|e| (e.weight - 1.0 / 16.0).abs() < 1e-12).unwrap();
        assert!(rare.offset < 0.0);
    }

    #[test]
    fn distribution_validation() {
        assert!(RoughnessDistribution::new(vec![]).is_err());
        assert!(RoughnessDistribution::new(vec![entry(0.0, 0.6)]).is_err());
        assert!(RoughnessDistribution::new(vec![entry(0.0, 1.2), entry(1e-9, -0.2)]).is_err());
        assert!(RoughnessDistribution::new(vec![entry(f64::NAN, 1.0)]).is_err());
        let d = RoughnessDistribution::normalized(vec![entry(0.0, 2.0), entry(1e-9, 6.0)]).unwrap();
        assert!((d.entries()[1].weight - 0.75).abs() < 1e-15);
        assert!(weights_from_heightmaps(&flat(2), &flat(2), 0).is_err());
        assert!(HeightMap::new(2, 2, vec![0.0; 3], 1e-8).is_err());
        assert!(HeightMap::new(0, 2, vec![], 1e-8).is_err());
    }

    #[test]
    fn non_positive_shifted_separation_names_entry() {
        let d = RoughnessDistribution::new(vec![entry(-2e-7, 0.5), entry(2e-7, 0.5)]).unwrap();
        let ideal = DielectricModel::PerfectConductor;
        let err = averaged_pressure(1e-7, &d, &ideal, &ideal, 1e-6).unwrap_err();
        match err {
            Error::Domain(msg) => assert!(msg.contains("entry 0"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_entry_reduces_to_unaveraged() {
        let ideal = DielectricModel::PerfectConductor;
        let pair = LifshitzPair::new(&ideal, &ideal).unwrap();
        let avg = averaged_pressure_with(&pair, 1e-6, &RoughnessDistribution::smooth(), 1e-6).unwrap();
        let raw = pair.pressure(1e-6, 1e-6).unwrap();
        assert_eq!(avg.value, raw.value);
    }

    #[test]
    fn ideal_two_point_pressure_convexity() {
        // (0.9^-4 + 1.1^-4)/2, closed-form z^-4 arithmetic
        let expected = 0.5 * (libm::pow(0.9, -4.0) + libm::pow(1.1, -4.0));
        assert!((expected - 1.103_585).abs() < 1e-6);
        let ideal = DielectricModel::PerfectConductor;
        let d = RoughnessDistribution::new(vec![entry(-1e-7, 0.5), entry(1e-7, 0.5)]).unwrap();
        let avg = averaged_pressure(1e-6, &d, &ideal, &ideal, 1e-7).unwrap().value;
        let raw = ideal_pressure_plane_plane(1e-6).unwrap();
        assert!((avg / raw - expected).abs() < 1e-6);
        // order of entries does not matter
        let rev = RoughnessDistribution::new(vec![entry(1e-7, 0.5), entry(-1e-7, 0.5)]).unwrap();
        let avg2 = averaged_pressure(1e-6, &rev, &ideal, &ideal, 1e-7).unwrap().value;
        assert!((avg / avg2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ideal_two_point_force_convexity_and_split_weights() {
        let a: f64 = 39.4e-9 / 1e-6;
        let expected = 0.5 * (libm::pow(1.0 - a, -3.0) + libm::pow(1.0 + a, -3.0));
        let ideal = DielectricModel::PerfectConductor;
        let r = 294.3e-6;
        let d = RoughnessDistribution::new(vec![entry(-39.4e-9, 0.5), entry(39.4e-9, 0.5)]).unwrap();
        let avg = averaged_force(1e-6, r, &d, &ideal, &ideal, 1e-7).unwrap().value;
        let raw = ideal_force_sphere_plane(1e-6, r).unwrap();
        assert!((avg / raw - expected).abs() < 1e-6);
        let split = RoughnessDistribution::new(vec![
            entry(-39.4e-9, 0.25),
            entry(-39.4e-9, 0.25),
            entry(39.4e-9, 0.5),
        ])
        .unwrap();
        let avg_split = averaged_force(1e-6, r, &split, &ideal, &ideal, 1e-7).unwrap().value;
        assert!((avg_split / avg - 1.0).abs() < 1e-14);
    }
}
