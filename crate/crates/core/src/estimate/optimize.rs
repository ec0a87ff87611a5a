//! Bounded quasi-Newton optimizer shared by all three estimators.
//!
//! Dense BFGS on the transformed parameters with box projection, a
//! backtracking Armijo line search, and central finite-difference
//! gradients. Problems here have at most twelve variables, so the dense
//! inverse-Hessian update costs nothing next to one objective evaluation
//! (a full filter or rollout over weeks of data).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::EstimationError;
use crate::linalg::{dot, norm2, Mat};

/// Stopping rules and multi-start policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    /// Number of seeded random starts.
    pub starts: usize,
    /// Iteration cap per start.
    pub max_iterations: usize,
    /// Converged when the projected gradient norm falls below this.
    pub grad_tolerance: f64,
    /// Stop when the relative objective decrease falls below this.
    pub f_rel_tolerance: f64,
    /// Relative finite-difference step per coordinate.
    pub fd_rel_step: f64,
    /// Root seed for start-point sampling.
    pub seed: u64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            max_iterations: 500,
            grad_tolerance: 1e-8,
            f_rel_tolerance: 1e-12,
            fd_rel_step: 1e-6,
            seed: 0,
        }
    }
}

/// Outcome of one start (or of the winning start in a multi-start run).
#[derive(Debug, Clone, PartialEq)]
pub struct StartOutcome {
    pub z: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// True iff the projected gradient criterion was met.
    pub converged: bool,
    pub gradient_norm: f64,
    pub start_index: usize,
}

fn clamp_into(z: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((zi, &lo), &hi) in z.iter_mut().zip(lower).zip(upper) {
        *zi = zi.clamp(lo, hi);
    }
}

/// Central-difference gradient with per-coordinate relative step.
///
/// Falls back to a one-sided difference when one side is non-finite, and
/// to zero when both sides are (the line search then rejects the point).
fn fd_gradient<F: FnMut(&[f64]) -> f64>(
    objective: &mut F,
    z: &[f64],
    f_z: f64,
    rel_step: f64,
    grad: &mut [f64],
) {
    let mut probe = z.to_vec();
    for i in 0..z.len() {
        let h = rel_step * z[i].abs().max(1.0);
        probe[i] = z[i] + h;
        let f_plus = objective(&probe);
        probe[i] = z[i] - h;
        let f_minus = objective(&probe);
        probe[i] = z[i];
        grad[i] = match (f_plus.is_finite(), f_minus.is_finite()) {
            (true, true) => (f_plus - f_minus) / (2.0 * h),
            (true, false) => (f_plus - f_z) / h,
            (false, true) => (f_z - f_minus) / h,
            (false, false) => 0.0,
        };
    }
}

/// Gradient with outward-pointing components zeroed at active bounds.
fn projected_gradient(z: &[f64], grad: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let tiny = 1e-12;
    z.iter()
        .zip(grad)
        .zip(lower.iter().zip(upper))
        .map(|((&zi, &gi), (&lo, &hi))| {
            if (zi <= lo + tiny && gi > 0.0) || (zi >= hi - tiny && gi < 0.0) {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

/// Minimizes from a single start point inside the box.
///
/// Returns `None` when the objective is non-finite at the start (the
/// multi-start driver then discards this start).
pub fn minimize_single<F: FnMut(&[f64]) -> f64>(
    objective: &mut F,
    lower: &[f64],
    upper: &[f64],
    z0: &[f64],
    opts: &OptimizeOptions,
    start_index: usize,
) -> Option<StartOutcome> {
    let n = z0.len();
    let mut z = z0.to_vec();
    clamp_into(&mut z, lower, upper);
    let mut f_z = objective(&z);
    if !f_z.is_finite() {
        return None;
    }

    let mut h_inv = Mat::identity(n);
    let mut grad = vec![0.0; n];
    fd_gradient(objective, &z, f_z, opts.fd_rel_step, &mut grad);
    let mut iterations = 0;
    let mut converged = false;
    let mut grad_norm;

    // Trial displacements are capped at this norm so a huge early gradient
    // cannot fling every candidate into a non-finite (e.g. unstable) region.
    let trust_radius = 5.0;
    let c1 = 1e-4;
    let line_search = |z: &[f64],
                           f_z: f64,
                           grad: &[f64],
                           direction: &[f64],
                           objective: &mut F|
     -> Option<(Vec<f64>, f64, Vec<f64>)> {
        let mut step = 1.0;
        let dn = norm2(direction);
        if dn > trust_radius {
            step = trust_radius / dn;
        }
        for _ in 0..45 {
            let mut cand: Vec<f64> = z
                .iter()
                .zip(direction)
                .map(|(zi, di)| zi + step * di)
                .collect();
            clamp_into(&mut cand, lower, upper);
            let displacement: Vec<f64> = cand.iter().zip(z).map(|(c, zi)| c - zi).collect();
            if norm2(&displacement) == 0.0 {
                return None;
            }
            let f_cand = objective(&cand);
            if f_cand.is_finite() && f_cand <= f_z + c1 * dot(grad, &displacement) {
                return Some((cand, f_cand, displacement));
            }
            step *= 0.5;
        }
        None
    };

    loop {
        let pg = projected_gradient(&z, &grad, lower, upper);
        grad_norm = norm2(&pg);
        if grad_norm <= opts.grad_tolerance {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }

        // Quasi-Newton direction; fall back to steepest descent whenever
        // the approximation loses descent.
        let mut direction = h_inv.mul_vec(&pg);
        for d in direction.iter_mut() {
            *d = -*d;
        }
        let mut is_steepest = false;
        if dot(&direction, &pg) >= 0.0 {
            h_inv = Mat::identity(n);
            for (d, &g) in direction.iter_mut().zip(&pg) {
                *d = -g;
            }
            is_steepest = true;
        }

        // Backtracking Armijo on the actual (projected) displacement. A
        // failed search on a quasi-Newton direction usually means the
        // curvature model went stale, so reset it and give plain steepest
        // descent one chance before declaring the start stuck.
        let mut accepted = line_search(&z, f_z, &grad, &direction, objective);
        if accepted.is_none() && !is_steepest {
            h_inv = Mat::identity(n);
            let descent: Vec<f64> = pg.iter().map(|&g| -g).collect();
            accepted = line_search(&z, f_z, &grad, &descent, objective);
        }
        let Some((z_new, f_new, s)) = accepted else {
            // Line search exhausted: no further progress from here.
            break;
        };
        iterations += 1;

        let mut grad_new = vec![0.0; n];
        fd_gradient(objective, &z_new, f_new, opts.fd_rel_step, &mut grad_new);

        // BFGS inverse-Hessian update when curvature is usable.
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm2(&s) * norm2(&y) {
            let rho = 1.0 / sy;
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            let hy = h_inv.mul_vec(&y);
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    let update = -rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                    h_inv[(i, j)] += update;
                }
            }
        }

        let f_prev = f_z;
        z = z_new;
        f_z = f_new;
        grad = grad_new;

        if (f_prev - f_z) <= opts.f_rel_tolerance * f_prev.abs().max(1.0) {
            let pg = projected_gradient(&z, &grad, lower, upper);
            grad_norm = norm2(&pg);
            converged = grad_norm <= opts.grad_tolerance;
            break;
        }
    }

    Some(StartOutcome {
        z,
        objective: f_z,
        iterations,
        converged,
        gradient_norm: grad_norm,
        start_index,
    })
}

/// Runs every provided start and returns the best usable outcome.
///
/// A start whose objective is non-finite at its initial point is discarded;
/// ties on the final objective break toward the lowest start index (the
/// iteration order below guarantees this).
pub fn multi_start<F: FnMut(&[f64]) -> f64>(
    objective: &mut F,
    lower: &[f64],
    upper: &[f64],
    start_points: &[Vec<f64>],
    opts: &OptimizeOptions,
) -> Result<StartOutcome, EstimationError> {
    let mut best: Option<StartOutcome> = None;
    for (index, z0) in start_points.iter().enumerate() {
        let Some(outcome) = minimize_single(objective, lower, upper, z0, opts, index) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some(b) => outcome.objective < b.objective,
        };
        if better {
            best = Some(outcome);
        }
    }
    best.ok_or(EstimationError::NoConvergedStart {
        attempted: start_points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn free_box(n: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![-1e3; n], vec![1e3; n])
    }

    #[test]
    fn quadratic_reaches_its_minimum() {
        let mut f = |z: &[f64]| (z[0] - 3.0) * (z[0] - 3.0);
        let (lo, hi) = free_box(1);
        let out = minimize_single(&mut f, &lo, &hi, &[0.0], &OptimizeOptions::default(), 0).unwrap();
        assert!(out.converged);
        assert_abs_diff_eq!(out.z[0], 3.0, epsilon = 1e-6);
    }

    #[test]
    fn rosenbrock_from_classic_start() {
        let mut f = |z: &[f64]| {
            let (x, y) = (z[0], z[1]);
            100.0 * (y - x * x) * (y - x * x) + (1.0 - x) * (1.0 - x)
        };
        let (lo, hi) = free_box(2);
        let out =
            minimize_single(&mut f, &lo, &hi, &[-1.2, 1.0], &OptimizeOptions::default(), 0)
                .unwrap();
        assert_abs_diff_eq!(out.z[0], 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(out.z[1], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn bound_constrained_minimum_sits_on_the_box() {
        // Unconstrained minimum at 3, box caps at 2.
        let mut f = |z: &[f64]| (z[0] - 3.0) * (z[0] - 3.0);
        let out = minimize_single(
            &mut f,
            &[-2.0],
            &[2.0],
            &[0.0],
            &OptimizeOptions::default(),
            0,
        )
        .unwrap();
        assert!(out.converged, "projected gradient vanishes at the bound");
        assert_abs_diff_eq!(out.z[0], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn non_finite_start_is_discarded_others_proceed() {
        let mut f = |z: &[f64]| {
            if z[0] < -5.0 {
                f64::NAN
            } else {
                z[0] * z[0]
            }
        };
        let (lo, hi) = free_box(1);
        let starts = vec![vec![-10.0], vec![4.0]];
        let out = multi_start(&mut f, &lo, &hi, &starts, &OptimizeOptions::default()).unwrap();
        assert_eq!(out.start_index, 1);
        assert_abs_diff_eq!(out.z[0], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn all_starts_non_finite_is_an_error() {
        let mut f = |_: &[f64]| f64::INFINITY;
        let (lo, hi) = free_box(1);
        let starts = vec![vec![0.0], vec![1.0], vec![2.0]];
        let err = multi_start(&mut f, &lo, &hi, &starts, &OptimizeOptions::default());
        assert!(matches!(
            err,
            Err(EstimationError::NoConvergedStart { attempted: 3 })
        ));
    }

    #[test]
    fn ties_break_to_the_lowest_start_index() {
        // Symmetric double well: both starts reach objective 0 exactly.
        let mut f = |z: &[f64]| {
            let d = z[0] * z[0] - 1.0;
            d * d
        };
        let (lo, hi) = free_box(1);
        let starts = vec![vec![0.9], vec![-0.9]];
        let out = multi_start(&mut f, &lo, &hi, &starts, &OptimizeOptions::default()).unwrap();
        assert_eq!(out.start_index, 0);
    }

    #[test]
    fn iteration_cap_reported_without_convergence_claim() {
        let mut f = |z: &[f64]| {
            let (x, y) = (z[0], z[1]);
            100.0 * (y - x * x) * (y - x * x) + (1.0 - x) * (1.0 - x)
        };
        let opts = OptimizeOptions {
            max_iterations: 3,
            ..Default::default()
        };
        let (lo, hi) = free_box(2);
        let out = minimize_single(&mut f, &lo, &hi, &[-1.2, 1.0], &opts, 0).unwrap();
        assert!(!out.converged);
        assert!(out.iterations <= 3);
        assert!(out.gradient_norm > opts.grad_tolerance);
    }
}
