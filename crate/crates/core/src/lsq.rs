//! Small dense Levenberg-Marquardt solver with a central-difference
//! Jacobian, plus the linear algebra it needs.

// Index loops read closer to the matrix algebra here.
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Solver settings.
#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative finite-difference step in scaled parameter space.
    pub jacobian_step: f64,
    /// Stop when the scaled step norm falls below `xtol * (|x| + xtol)`.
    pub xtol: f64,
    /// Stop when an accepted step lowers the cost by less than
    /// `ftol * cost`.
    pub ftol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            jacobian_step: 1e-6,
            xtol: 1e-13,
            ftol: 1e-16,
        }
    }
}

/// Result of a converged fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LmReport<const N: usize> {
    pub params: [f64; N],
    /// `sum r_i^2` at the optimum.
    pub sum_squares: f64,
    /// `(J^T J)^-1` in physical parameter units, unscaled by residual variance.
    pub inverse_normal: [[f64; N]; N],
    pub iterations: usize,
    /// Cost after each accepted iteration.
    pub trace: Vec<f64>,
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Fails when a pivot falls below `1e-14` of the largest entry.
pub fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |m, v| m.max(libm::fabs(*v)));
    if scale == 0.0 {
        return None;
    }
    for col in 0..N {
        let piv = (col..N)
            .max_by(|&i, &j| libm::fabs(a[i][col]).total_cmp(&libm::fabs(a[j][col])))
            .unwrap();
        if libm::fabs(a[piv][col]) < 1e-14 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Matrix inverse by column-wise [`solve`].
pub fn invert<const N: usize>(a: [[f64; N]; N]) -> Option<[[f64; N]; N]> {
    let mut inv = [[0.0; N]; N];
    for j in 0..N {
        let mut e = [0.0; N];
        e[j] = 1.0;
        let col = solve(a, e)?;
        for i in 0..N {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

/// Minimizes `sum r_i(x)^2`.
///
/// `residuals(x, out)` fills `out` (length `m`) and may fail for
/// parameters outside the model domain; such trial points are treated as
/// infinitely costly. `scale` gives a typical magnitude per parameter.
pub fn levenberg_marquardt<const N: usize, F>(
    mut residuals: F,
    m: usize,
    x0: [f64; N],
    scale: [f64; N],
    opts: LmOptions,
) -> Result<LmReport<N>>
where
    F: FnMut(&[f64; N], &mut [f64]) -> Result<()>,
{
    let to_phys = |theta: &[f64; N]| -> [f64; N] { core::array::from_fn(|j| theta[j] * scale[j]) };
    let mut eval = |theta: &[f64; N], out: &mut [f64]| -> Option<f64> {
        residuals(&to_phys(theta), out).ok()?;
        let c: f64 = out.iter().map(|r| r * r).sum();
        c.is_finite().then_some(c)
    };

    let mut theta: [f64; N] = core::array::from_fn(|j| x0[j] / scale[j]);
    let mut r = vec![0.0; m];
    let mut cost = eval(&theta, &mut r).ok_or_else(|| Error::Fit {
        reason: "model cannot be evaluated at the initial guess".into(),
        trace: Vec::new(),
    })?;
    let mut trace = vec![cost];
    let mut lambda = 1e-3;
    let mut jac = vec![[0.0; N]; m];
    let mut rp = vec![0.0; m];
    let mut rm = vec![0.0; m];
    let mut trial = vec![0.0; m];

    let jacobian = |theta: &[f64; N],
                    jac: &mut [[f64; N]],
                    rp: &mut [f64],
                    rm: &mut [f64],
                    eval: &mut dyn FnMut(&[f64; N], &mut [f64]) -> Option<f64>|
     -> Option<()> {
        for j in 0..N {
            let h = opts.jacobian_step * libm::fabs(theta[j]).max(1.0);
            let mut tp = *theta;
            let mut tm = *theta;
            tp[j] += h;
            tm[j] -= h;
            eval(&tp, rp)?;
            eval(&tm, rm)?;
            for i in 0..jac.len() {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        Some(())
    };

    let mut iterations = 0;
    let mut converged = cost == 0.0;
    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        jacobian(&theta, &mut jac, &mut rp, &mut rm, &mut eval).ok_or_else(|| Error::Fit {
            reason: "model cannot be evaluated next to the current point".into(),
            trace: trace.clone(),
        })?;
        let mut jtj = [[0.0; N]; N];
        let mut jtr = [0.0; N];
        for (row, ri) in jac.iter().zip(r.iter()) {
            for a in 0..N {
                jtr[a] += row[a] * ri;
                for b in 0..N {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        if solve(jtj, jtr).is_none() {
            return Err(Error::Identifiability(
                "normal matrix is singular: the data do not constrain every parameter".into(),
            ));
        }

        let mut accepted = false;
        for _ in 0..60 {
            let mut damped = jtj;
            for a in 0..N {
                damped[a][a] += lambda * jtj[a][a];
            }
            let neg: [f64; N] = core::array::from_fn(|a| -jtr[a]);
            let Some(step) = solve(damped, neg) else {
                lambda *= 10.0;
                continue;
            };
            let cand: [f64; N] = core::array::from_fn(|a| theta[a] + step[a]);
            let step_norm = libm::sqrt(step.iter().map(|s| s * s).sum());
            let theta_norm = libm::sqrt(theta.iter().map(|s| s * s).sum());
            match eval(&cand, &mut trial) {
                Some(c) if c <= cost => {
                    let drop = cost - c;
                    theta = cand;
                    cost = c;
                    r.copy_from_slice(&trial);
                    trace.push(cost);
                    lambda = (lambda * 0.1).max(1e-12);
                    accepted = true;
                    if step_norm <= opts.xtol * (theta_norm + opts.xtol)
                        || drop <= opts.ftol * c
                        || cost == 0.0
                    {
                        converged = true;
                    }
                    break;
                }
                _ => {
                    if step_norm <= opts.xtol * (theta_norm + opts.xtol) {
                        // no representable improvement left
                        converged = true;
                        accepted = true;
                        break;
                    }
                    lambda *= 10.0;
                }
            }
        }
        if !accepted {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::Fit {
            reason: alloc::format!("no convergence within {} iterations", opts.max_iterations),
            trace,
        });
    }

    // final Jacobian for the covariance
    jacobian(&theta, &mut jac, &mut rp, &mut rm, &mut eval).ok_or_else(|| Error::Fit {
        reason: "model cannot be evaluated next to the optimum".into(),
        trace: trace.clone(),
    })?;
    let mut jtj = [[0.0; N]; N];
    for row in jac.iter() {
        for a in 0..N {
            for b in 0..N {
                jtj[a][b] += row[a] * row[b];
            }
        }
    }
    let inv = invert(jtj).ok_or_else(|| {
        Error::Identifiability("normal matrix is singular at the optimum".into())
    })?;
    let inverse_normal = core::array::from_fn(|a| core::array::from_fn(|b| inv[a][b] * scale[a] * scale[b]));
    Ok(LmReport {
        params: to_phys(&theta),
        sum_squares: cost,
        inverse_normal,
        iterations,
        trace,
    })
}
