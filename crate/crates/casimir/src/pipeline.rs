//! Grid evaluations dispatched to a worker pool. Results are collected in
//! grid order, so output does not depend on scheduling.

use std::f64::consts::PI;

use casimir_core::lifshitz::{LifshitzPair, LifshitzResult};
use casimir_core::oscillator::{self, OscillatorParams, SweepConfig, SweepPoint};
use casimir_core::roughness::{averaged_force_with, averaged_gradient_with, averaged_pressure_with, RoughnessDistribution};
use casimir_core::yukawa::{alpha_limit, LayeredBody, YukawaMethod};
use rayon::prelude::*;

use crate::config::{Bound, GeometryConfig};
use crate::error::{CliError, Result};
use crate::io::{self, LIMITS_HEADER, SWEEP_HEADER};

/// Pool with `threads` workers; `None` or 0 uses one per core.
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Force,
    Gradient,
    Pressure,
}

impl CurveKind {
    fn column(self) -> &'static str {
        match self {
            CurveKind::Force => "force_n",
            CurveKind::Gradient => "gradient_n_per_m",
            CurveKind::Pressure => "pressure_pa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    /// Metal separation, m.
    pub z: f64,
    pub smooth: LifshitzResult,
    pub rough: Option<LifshitzResult>,
}

fn evaluate(
    pair: &LifshitzPair,
    kind: CurveKind,
    z: f64,
    radius: f64,
    dist: &RoughnessDistribution,
    tol: f64,
) -> casimir_core::Result<LifshitzResult> {
    match kind {
        CurveKind::Force => averaged_force_with(pair, z, radius, dist, tol),
        CurveKind::Gradient => averaged_gradient_with(pair, z, radius, dist, tol),
        CurveKind::Pressure => averaged_pressure_with(pair, z, dist, tol),
    }
}

/// Force, gradient or pressure over `zs` (metal separations, shifted by
/// `2 delta0`), with a roughness-averaged column when `dist` is given.
pub fn curve(
    pool: &rayon::ThreadPool,
    pair: &LifshitzPair,
    geometry: &GeometryConfig,
    dist: Option<&RoughnessDistribution>,
    zs: &[f64],
    kind: CurveKind,
    tol: f64,
) -> Result<Vec<CurveRow>> {
    let smooth = RoughnessDistribution::smooth();
    pool.install(|| {
        zs.par_iter()
            .map(|&z| -> Result<CurveRow> {
                let g = geometry.at(z)?;
                let zc = g.corrected_separation();
                let s = evaluate(pair, kind, zc, g.radius, &smooth, tol)?;
                let rough = dist.map(|d| evaluate(pair, kind, zc, g.radius, d, tol)).transpose()?;
                Ok(CurveRow { z, smooth: s, rough })
            })
            .collect()
    })
}

pub fn curve_csv(kind: CurveKind, rows: &[CurveRow]) -> String {
    let c = kind.column();
    let rough = rows.first().is_some_and(|r| r.rough.is_some());
    let rough_col = format!("{}_rough{}", &c[..c.find('_').unwrap()], &c[c.find('_').unwrap()..]);
    let mut header = vec!["z_m", c, "est_rel_error"];
    if rough {
        header.push(&rough_col);
        header.push("est_rel_error_rough");
    }
    let data: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.z, r.smooth.value, r.smooth.est_rel_error];
            if let Some(q) = r.rough {
                v.extend([q.value, q.est_rel_error]);
            }
            v
        })
        .collect();
    io::render_csv(&header, data.iter().map(Vec::as_slice))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub points: Vec<SweepPoint>,
    /// Gradients recovered from the measured shifts, N/m.
    pub inverted: Vec<f64>,
    /// One-sigma gradient uncertainty from the frequency noise, N/m.
    pub sigma_gradient: Vec<f64>,
}

/// Simulated measurement followed by inversion back to gradients.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    pool: &rayon::ThreadPool,
    cfg: &SweepConfig,
    params: &OscillatorParams,
    geometry: &GeometryConfig,
    pair: &LifshitzPair,
    dist: &RoughnessDistribution,
    tol: f64,
    seed: u64,
) -> Result<SweepOutput> {
    let plans = oscillator::plan_sweep(cfg, seed)?;
    let points = pool.install(|| {
        plans
            .par_iter()
            .map(|plan| -> Result<SweepPoint> {
                let g = geometry.at(plan.z_actual)?;
                let grad = oscillator::casimir_gradient(pair, &g, dist, plan.z_actual, tol)?;
                Ok(oscillator::complete_point(params, plan, grad)?)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let inverted = oscillator::invert_sweep(params, &points)?;
    let per_hz = 2.0 * PI * params.omega0 / params.coupling;
    let sigma_gradient = points.iter().map(|p| p.sigma_hz * per_hz).collect();
    Ok(SweepOutput { points, inverted, sigma_gradient })
}

pub fn sweep_csv(out: &SweepOutput) -> String {
    let rows: Vec<[f64; 3]> = out.points.iter().map(|p| [p.z, p.f_hz, p.sigma_hz]).collect();
    io::render_csv(&SWEEP_HEADER, rows.iter().map(|r| &r[..]))
}

pub const INVERTED_HEADER: [&str; 4] = ["z_m", "gradient_n_per_m", "sigma_n_per_m", "model_gradient_n_per_m"];

pub fn inverted_csv(out: &SweepOutput) -> String {
    let rows: Vec<[f64; 4]> = out
        .points
        .iter()
        .zip(&out.inverted)
        .zip(&out.sigma_gradient)
        .map(|((p, g), s)| [p.z, *g, *s, p.true_gradient])
        .collect();
    io::render_csv(&INVERTED_HEADER, rows.iter().map(|r| &r[..]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub lambda: f64,
    pub alpha: f64,
    /// Separation that set the limit, m.
    pub z: f64,
}

pub fn limits(
    pool: &rayon::ThreadPool,
    lambdas: &[f64],
    zs: &[f64],
    bound: &Bound,
    sphere: &LayeredBody,
    plate: &LayeredBody,
    method: YukawaMethod,
) -> Result<Vec<LimitRow>> {
    pool.install(|| {
        lambdas
            .par_iter()
            .map(|&lambda| -> Result<LimitRow> {
                let l = alpha_limit(|z| bound.at(z), lambda, sphere, plate, zs, method)?;
                Ok(LimitRow { lambda, alpha: l.alpha, z: l.z })
            })
            .collect()
    })
}

pub fn limits_csv(rows: &[LimitRow]) -> String {
    let data: Vec<[f64; 2]> = rows.iter().map(|r| [r.lambda, r.alpha]).collect();
    io::render_csv(&LIMITS_HEADER, data.iter().map(|r| &r[..]))
}
