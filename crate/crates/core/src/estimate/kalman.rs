//! Discrete Kalman filter and its prediction-error likelihood.
//!
//! The MLE estimator scores a parameter vector by the negative log
//! likelihood of the innovation sequence,
//! `Σ_k [ e(k)² / S(k) + ln S(k) ]` with `S(k) = C P(k) Cᵀ + R`,
//! running the standard predict/update recursion on the Euler-discretized
//! model. Only the first state is measured, so the innovation is scalar
//! and the update needs no matrix inversion.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::EstimationError;
use crate::linalg::Mat;
use crate::models::{DiscreteModel, MAX_STATES};

use super::TrainingData;

/// Per-run filter output: innovations and their variances, plus the
/// accumulated negative log likelihood (up to the `N ln 2π` constant).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterDiagnostics {
    pub nll: f64,
    pub innovations: Vec<f64>,
    pub innovation_vars: Vec<f64>,
}

/// Runs the filter over the training data.
///
/// `x0` and `p0_var · I` form the prior on the initial state; `q_var · I`
/// is the per-step process covariance and `r_var` the measurement variance.
/// Fails with [`EstimationError::FilterDivergence`] if an innovation
/// variance stops being positive and finite.
pub fn kalman_filter(
    dm: &DiscreteModel,
    data: &TrainingData,
    x0: &[f64],
    p0_var: f64,
    q_var: f64,
    r_var: f64,
) -> Result<FilterDiagnostics, EstimationError> {
    let n = dm.order.n_states();
    let len = data.len();
    let mut x = [0.0; MAX_STATES];
    let mut x_next = [0.0; MAX_STATES];
    x[..n].copy_from_slice(x0);
    let mut p = Mat::identity(n).scale(p0_var);

    let mut diagnostics = FilterDiagnostics {
        nll: 0.0,
        innovations: Vec::with_capacity(len),
        innovation_vars: Vec::with_capacity(len),
    };

    for k in 0..len {
        // Measurement update: C = [1, 0, …, 0] makes S and e scalar.
        let s = p[(0, 0)] + r_var;
        if !(s > 0.0) || !s.is_finite() {
            return Err(EstimationError::FilterDivergence { step: k });
        }
        let e = data.y[k] - x[0];
        if !e.is_finite() {
            return Err(EstimationError::FilterDivergence { step: k });
        }
        diagnostics.nll += e * e / s + s.ln();
        diagnostics.innovations.push(e);
        diagnostics.innovation_vars.push(s);

        // Gain K = P Cᵀ / S is the first column of P over S.
        let mut gain = [0.0; MAX_STATES];
        for i in 0..n {
            gain[i] = p[(i, 0)] / s;
        }
        for i in 0..n {
            x[i] += gain[i] * e;
        }
        // P ← P − K (C P): subtract the outer product with P's first row.
        let p_row0: Vec<f64> = (0..n).map(|j| p[(0, j)]).collect();
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] -= gain[i] * p_row0[j];
            }
        }
        p.symmetrize();

        // Time update.
        if k + 1 < len {
            dm.step(&x[..n], data.u[k], data.w_row(k), &mut x_next[..n]);
            x[..n].copy_from_slice(&x_next[..n]);
            let ap = dm.a_d.matmul(&p);
            p = ap.matmul(&dm.a_d.transpose());
            for i in 0..n {
                p[(i, i)] += q_var;
            }
            p.symmetrize();
        }
    }

    Ok(diagnostics)
}

/// Negative log likelihood of the innovations; the MLE objective.
pub fn kalman_nll(
    dm: &DiscreteModel,
    data: &TrainingData,
    x0: &[f64],
    p0_var: f64,
    q_var: f64,
    r_var: f64,
) -> Result<f64, EstimationError> {
    kalman_filter(dm, data, x0, p0_var, q_var, r_var).map(|d| d.nll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{assemble, discretize, ModelOrder, ParameterVector};
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn scalar_setup() -> (DiscreteModel, ParameterVector) {
        let theta = ParameterVector::new(ModelOrder::Sm1, &[0.01, 1.0e6, 0.8, 1.0, 0.9]).unwrap();
        let dm = discretize(&assemble(&theta), 600.0).unwrap();
        (dm, theta)
    }

    fn constant_data(dm: &DiscreteModel, len: usize) -> TrainingData {
        // Equilibrium at 20 °C ambient with no heat inputs.
        let w_row = [0.0, 0.0, 20.0];
        let mut w = Vec::new();
        for _ in 0..len {
            w.extend_from_slice(&w_row);
        }
        TrainingData::from_parts(dm.order, dm.t_s, vec![20.0; len], vec![0.0; len], w).unwrap()
    }

    #[test]
    fn unit_prior_gives_s_two_and_gain_half() {
        // P = 1, R = 1, C = 1 → S = 2 and Kalman gain 0.5 at the first step.
        let (dm, _) = scalar_setup();
        let data = constant_data(&dm, 10);
        let d = kalman_filter(&dm, &data, &[20.0], 1.0, 1e-4, 1.0).unwrap();
        assert_abs_diff_eq!(d.innovation_vars[0], 2.0, epsilon = 1e-12);
        // gain = P·Cᵀ/S
        assert_abs_diff_eq!(1.0 / d.innovation_vars[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn exact_data_from_exact_state_yields_zero_innovations() {
        let (dm, _) = scalar_setup();
        // Roll the model forward to produce data, then filter it.
        let len = 200;
        let mut y = Vec::with_capacity(len);
        let mut w = Vec::with_capacity(len * 3);
        let mut x = [23.0];
        let mut x_next = [0.0];
        for k in 0..len {
            y.push(x[0]);
            let w_row = [300.0, 150.0, 28.0 + (k as f64 * 0.01).sin()];
            w.extend_from_slice(&w_row);
            dm.step(&x, -500.0, &w_row, &mut x_next);
            x = x_next;
        }
        let data = TrainingData::from_parts(dm.order, dm.t_s, y, vec![-500.0; len], w).unwrap();
        let d = kalman_filter(&dm, &data, &[23.0], 1.0, 1e-4, 2.5e-3).unwrap();
        let rms = (d.innovations.iter().map(|e| e * e).sum::<f64>() / len as f64).sqrt();
        assert!(rms <= 1e-9, "innovation rms {rms}");
    }

    #[test]
    fn innovation_variance_shrinks_toward_steady_state() {
        let (dm, _) = scalar_setup();
        let data = constant_data(&dm, 50);
        let d = kalman_filter(&dm, &data, &[20.0], 1.0, 1e-4, 2.5e-3).unwrap();
        assert!(d.innovation_vars[1] < d.innovation_vars[0]);
        let tail = d.innovation_vars[48];
        let steady = d.innovation_vars[49];
        assert_abs_diff_eq!(tail, steady, epsilon = 1e-6);
        assert!(steady > 2.5e-3, "S stays above the measurement floor");
    }

    #[test]
    fn divergent_variance_is_reported() {
        let (dm, _) = scalar_setup();
        let data = constant_data(&dm, 10);
        // Negative measurement variance drives S non-positive immediately.
        let err = kalman_filter(&dm, &data, &[20.0], 1e-9, 0.0, -1.0);
        assert!(matches!(
            err,
            Err(EstimationError::FilterDivergence { step: 0 })
        ));
    }

    #[test]
    fn nll_prefers_the_true_noise_scale() {
        // Data with known sensor noise: the NLL at the true R should beat
        // badly misspecified alternatives on both sides.
        use crate::rng::{stage_rng, standard_normal};
        let (dm, _) = scalar_setup();
        let len = 800;
        let mut rng = stage_rng(99, "nll-sweep");
        let mut y = Vec::with_capacity(len);
        let mut w = Vec::with_capacity(len * 3);
        let mut x = [20.0];
        let mut x_next = [0.0];
        let true_std = 0.1;
        for _ in 0..len {
            y.push(x[0] + true_std * standard_normal(&mut rng));
            let w_row = [0.0, 0.0, 20.0];
            w.extend_from_slice(&w_row);
            dm.step(&x, 0.0, &w_row, &mut x_next);
            x = x_next;
        }
        let data = TrainingData::from_parts(dm.order, dm.t_s, y, vec![0.0; len], w).unwrap();
        let nll_at = |r: f64| kalman_nll(&dm, &data, &[20.0], 1.0, 1e-8, r).unwrap();
        let at_truth = nll_at(true_std * true_std);
        assert!(at_truth < nll_at(1e-4));
        assert!(at_truth < nll_at(1.0));
    }
}
