//! Output-error least squares via single-shooting.
//!
//! The model is rolled forward noiselessly from a fixed initial state and
//! scored by the sum of squared output errors. Eliminating the states this
//! way leaves only the parameters as decision variables; the optimum
//! coincides with the joint simultaneous formulation because for fixed
//! parameters the noiseless rollout is the unique feasible trajectory.

use crate::models::{DiscreteModel, MAX_STATES};

use super::TrainingData;

/// Sum of squared output errors of the noiseless rollout from `x0`.
///
/// Returns `f64::INFINITY` when the rollout leaves the finite range, so an
/// exploding parameter draw is rejected rather than propagated.
pub fn rollout_sse(dm: &DiscreteModel, data: &TrainingData, x0: &[f64]) -> f64 {
    let n = dm.order.n_states();
    let len = data.len();
    let mut x = [0.0; MAX_STATES];
    let mut x_next = [0.0; MAX_STATES];
    x[..n].copy_from_slice(x0);
    let mut sse = 0.0;
    for k in 0..len {
        let e = data.y[k] - x[0];
        sse += e * e;
        if !sse.is_finite() {
            return f64::INFINITY;
        }
        if k + 1 < len {
            dm.step(&x[..n], data.u[k], data.w_row(k), &mut x_next[..n]);
            x[..n].copy_from_slice(&x_next[..n]);
        }
    }
    sse
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{assemble, discretize, ModelOrder, ParameterVector};
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn zero_error_on_self_generated_data() {
        let theta = ParameterVector::new(ModelOrder::Sm1, &[0.004, 2.0e6, 0.8, 1.0, 0.9]).unwrap();
        let dm = discretize(&assemble(&theta), 600.0).unwrap();
        let len = 300;
        let mut y = Vec::with_capacity(len);
        let mut w = Vec::with_capacity(len * 3);
        let mut x = [24.0];
        let mut x_next = [0.0];
        for k in 0..len {
            y.push(x[0]);
            let w_row = [250.0, 400.0, 30.0 - (k as f64 * 0.02).cos()];
            w.extend_from_slice(&w_row);
            let u = if k % 5 < 2 { -10_000.0 } else { 0.0 };
            dm.step(&x, u, &w_row, &mut x_next);
            x = x_next;
        }
        let u: Vec<f64> = (0..len)
            .map(|k| if k % 5 < 2 { -10_000.0 } else { 0.0 })
            .collect();
        let data = TrainingData::from_parts(dm.order, dm.t_s, y, u, w).unwrap();
        assert_eq!(rollout_sse(&dm, &data, &[24.0]), 0.0);
    }

    #[test]
    fn unstable_rollout_reports_infinity() {
        // 1/(R·C) = 0.01 → A_d = −5 at 600 s: wildly unstable.
        let theta = ParameterVector::new(ModelOrder::Sm1, &[0.01, 1.0e4, 0.0, 0.0, 0.0]).unwrap();
        let dm = crate::models::discretize_unchecked(&assemble(&theta), 600.0);
        let len = 400;
        let w: Vec<f64> = (0..len).flat_map(|_| [0.0, 0.0, 20.0]).collect();
        let data =
            TrainingData::from_parts(dm.order, dm.t_s, vec![20.0; len], vec![0.0; len], w).unwrap();
        assert_eq!(rollout_sse(&dm, &data, &[25.0]), f64::INFINITY);
    }

    #[test]
    fn wrong_parameters_score_worse_than_truth() {
        let truth = ParameterVector::new(ModelOrder::Sm1, &[0.004, 2.0e6, 0.8, 1.0, 0.9]).unwrap();
        let dm = discretize(&assemble(&truth), 600.0).unwrap();
        let len = 200;
        let mut y = Vec::with_capacity(len);
        let mut w = Vec::with_capacity(len * 3);
        let mut x = [22.0];
        let mut x_next = [0.0];
        for k in 0..len {
            y.push(x[0]);
            let w_row = [100.0, 0.0, 25.0 + (k as f64 * 0.1).sin() * 5.0];
            w.extend_from_slice(&w_row);
            dm.step(&x, 0.0, &w_row, &mut x_next);
            x = x_next;
        }
        let data = TrainingData::from_parts(dm.order, dm.t_s, y, vec![0.0; len], w).unwrap();
        let off = ParameterVector::new(ModelOrder::Sm1, &[0.008, 2.0e6, 0.8, 1.0, 0.9]).unwrap();
        let dm_off = discretize(&assemble(&off), 600.0).unwrap();
        assert!(rollout_sse(&dm_off, &data, &[22.0]) > rollout_sse(&dm, &data, &[22.0]));
    }
}
