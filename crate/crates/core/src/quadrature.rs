//! Adaptive Gauss-Kronrod quadrature on finite intervals, and a
//! log-spaced panel scheme for integrals over semi-infinite domains.
//!
//! Error estimates are the raw `|K15 - G7|` differences, with no
//! heuristic rescaling, so they stay on the pessimistic side.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Outcome of a numerical integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

impl QuadResult {
    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            if self.abs_error == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.abs_error / self.value.abs()
        }
    }
}

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
/// Returns `(kronrod, |kronrod - gauss|)`.
pub fn gauss_kronrod_15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, libm::fabs((kronrod - gauss) * half))
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol * |I|)`. Fails with
/// [`Error::Convergence`] once `max_evals` integrand calls are spent.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_evals: usize,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let (value, error) = gauss_kronrod_15(&mut f, a, b);
    let mut evaluations = 15;
    let mut total = value;
    let mut total_err = error;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });

    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Domain(alloc::format!(
                "integrand is not finite on [{a:e}, {b:e}]"
            )));
        }
        let target = abs_tol.max(rel_tol * libm::fabs(total));
        if total_err <= target {
            break;
        }
        if evaluations + 30 > max_evals {
            return Err(Error::Convergence {
                partial: total,
                est_rel_error: total_err / libm::fabs(total).max(f64::MIN_POSITIVE),
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in f64
            return Err(Error::Convergence {
                partial: total,
                est_rel_error: total_err / libm::fabs(total).max(f64::MIN_POSITIVE),
                evaluations,
            });
        }
        let (v1, e1) = gauss_kronrod_15(&mut f, worst.a, mid);
        let (v2, e2) = gauss_kronrod_15(&mut f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }

    // Re-sum to shed accumulated cancellation in the running totals.
    let mut value = 0.0;
    let mut abs_error = 0.0;
    for s in heap.iter() {
        value += s.value;
        abs_error += s.error;
    }
    Ok(QuadResult {
        value,
        abs_error,
        evaluations,
    })
}

/// Panel layout for [`integrate_log_panels`].
#[derive(Debug, Clone, Copy)]
pub struct LogPanels {
    /// Width of the first panel `[start, start + first_width]`.
    pub first_width: f64,
    /// Each later panel is `ratio` times wider than the previous one.
    pub ratio: f64,
    /// Stop once a panel contributes less than `cutoff` times the running
    /// total and contributions are decreasing.
    pub cutoff: f64,
    /// Hard upper end of the domain; `f64::INFINITY` for `[start, inf)`.
    pub end: f64,
}

impl Default for LogPanels {
    fn default() -> Self {
        LogPanels {
            first_width: 1.0,
            ratio: 2.0,
            cutoff: 1e-12,
            end: f64::INFINITY,
        }
    }
}

/// Integrates `f` over `[start, layout.end)` using geometrically growing
/// panels, each refined adaptively. Meant for integrands that are smooth
/// and decay towards the upper end.
pub fn integrate_log_panels<F: FnMut(f64) -> f64>(
    mut f: F,
    start: f64,
    layout: LogPanels,
    rel_tol: f64,
    max_evals: usize,
) -> Result<QuadResult> {
    const MAX_PANELS: usize = 400;
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut evaluations = 0;
    let mut lo = start;
    let mut width = layout.first_width;
    let mut previous = f64::INFINITY;

    for _ in 0..MAX_PANELS {
        let hi = (lo + width).min(layout.end);
        let budget = max_evals.saturating_sub(evaluations);
        let abs_tol = 1e-3 * rel_tol * libm::fabs(total);
        let panel = match integrate(&mut f, lo, hi, rel_tol, abs_tol, budget) {
            Ok(p) => p,
            Err(Error::Convergence {
                partial,
                evaluations: used,
                ..
            }) => {
                let partial = total + partial;
                return Err(Error::Convergence {
                    partial,
                    est_rel_error: f64::INFINITY,
                    evaluations: evaluations + used,
                });
            }
            Err(e) => return Err(e),
        };
        total += panel.value;
        total_err += panel.abs_error;
        evaluations += panel.evaluations;

        let contribution = libm::fabs(panel.value);
        if hi >= layout.end {
            break;
        }
        if contribution <= layout.cutoff * libm::fabs(total) && contribution <= previous {
            break;
        }
        previous = contribution;
        lo = hi;
        width *= layout.ratio;
        if lo.is_infinite() {
            break;
        }
    }
    Ok(QuadResult {
        value: total,
        abs_error: total_err,
        evaluations,
    })
}

/// Composite trapezoid rule on tabulated samples. `xs` must be sorted.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}
