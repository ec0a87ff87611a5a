//! Batch-estimation inner problem: exact linear-quadratic state smoothing.
//!
//! For a fixed parameter vector the batch objective
//!
//! ```text
//! (x₀ − x̂₀)ᵀ P₀⁻¹ (x₀ − x̂₀)
//!   + Σ_k (y_k − C x_k)² / R
//!   + Σ_k (x_{k+1} − A_d x_k − c_k)ᵀ Q⁻¹ (x_{k+1} − A_d x_k − c_k)
//! ```
//!
//! is quadratic in the state trajectory, with `c_k = B_d u_k + D_d w_k`.
//! Its normal equations form a block-tridiagonal symmetric
//! positive-definite system, solved exactly by a block Thomas sweep with
//! per-block Cholesky factors. The outer optimizer then minimizes the
//! resulting profiled objective over the parameters alone, which is
//! equivalent to the joint state-and-parameter program.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::EstimationError;
use crate::linalg::Mat;
use crate::models::{DiscreteModel, MAX_STATES};

use super::TrainingData;

/// Exact minimizer of the batch objective for fixed parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SmootherSolution {
    /// Smoothed states, flattened row-major: `states[k * n + i]`.
    pub states: Vec<f64>,
    /// Batch objective value at the minimizer (the profiled objective).
    pub objective: f64,
}

impl SmootherSolution {
    pub fn state(&self, k: usize, i: usize, n: usize) -> f64 {
        self.states[k * n + i]
    }
}

/// Solves the inner smoothing problem exactly.
pub fn smooth_states(
    dm: &DiscreteModel,
    data: &TrainingData,
    x0_prior: &[f64],
    p0_var: f64,
    q_var: f64,
    r_var: f64,
) -> Result<SmootherSolution, EstimationError> {
    let n = dm.order.n_states();
    let len = data.len();
    if !(p0_var > 0.0) || !(q_var > 0.0) || !(r_var > 0.0) {
        return Err(EstimationError::SingularCovariance(
            "P0, Q, and R must be positive for batch smoothing".into(),
        ));
    }
    let q_inv = 1.0 / q_var;
    let r_inv = 1.0 / r_var;
    let p0_inv = 1.0 / p0_var;

    // Constant blocks: AᵀA/q and the coupling block M = −(1/q)·A_dᵀ
    // (upper off-diagonal); the lower one is its transpose.
    let a_t = dm.a_d.transpose();
    let ata_q = a_t.matmul(&dm.a_d).scale(q_inv);

    // Drive terms c_k = B_d u_k + D_d w_k for k = 0..len−2.
    let mut drives = vec![0.0; (len - 1) * n];
    for k in 0..len - 1 {
        let w = data.w_row(k);
        for i in 0..n {
            let mut acc = dm.b_d[i] * data.u[k];
            let d_row = dm.d_d.row(i);
            for (j, wj) in w.iter().enumerate() {
                acc += d_row[j] * wj;
            }
            drives[k * n + i] = acc;
        }
    }

    // Forward block-Thomas sweep. S_k are the Schur complements of the
    // leading blocks; we keep their Cholesky factors and the transformed
    // right-hand sides for the backward substitution.
    let mut factors: Vec<Mat> = Vec::with_capacity(len);
    let mut z_rhs = vec![0.0; len * n];

    let mut s_prev_inv: Option<Mat> = None;
    for k in 0..len {
        // Diagonal block.
        let mut diag = Mat::zeros(n, n);
        diag[(0, 0)] += r_inv; // CᵀC/R with C = e₁ᵀ
        if k == 0 {
            for i in 0..n {
                diag[(i, i)] += p0_inv;
            }
        } else {
            for i in 0..n {
                diag[(i, i)] += q_inv;
            }
        }
        if k + 1 < len {
            diag = diag.add(&ata_q);
        }

        // Right-hand side.
        let mut rhs = vec![0.0; n];
        rhs[0] += r_inv * data.y[k];
        if k == 0 {
            for i in 0..n {
                rhs[i] += p0_inv * x0_prior[i];
            }
        } else {
            for i in 0..n {
                rhs[i] += q_inv * drives[(k - 1) * n + i];
            }
        }
        if k + 1 < len {
            // −Mᵀ where M = −(1/q) A_dᵀ contributes +(1/q) A_dᵀ c_k… with a
            // minus sign from the cross term: −(1/q)·A_dᵀ c_k.
            let c_k = &drives[k * n..(k + 1) * n];
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += a_t[(i, j)] * c_k[j];
                }
                rhs[i] -= q_inv * acc;
            }
        }

        // Schur complement against the previous block:
        // S_k = D_k − Mᵀ S_{k−1}⁻¹ M with M = −(1/q) A_dᵀ, so
        // S_k = D_k − (1/q²) A_d S_{k−1}⁻¹ A_dᵀ, and
        // z_k = rhs_k + (1/q) A_d S_{k−1}⁻¹ z_{k−1}.
        let mut s_k = diag;
        if let Some(prev_inv) = &s_prev_inv {
            let corr = dm
                .a_d
                .matmul(prev_inv)
                .matmul(&a_t)
                .scale(q_inv * q_inv);
            s_k = s_k.sub(&corr);

            let z_prev = &z_rhs[(k - 1) * n..k * n];
            let tmp = prev_inv.mul_vec(z_prev);
            let corr_rhs = dm.a_d.mul_vec(&tmp);
            for i in 0..n {
                rhs[i] += q_inv * corr_rhs[i];
            }
        }
        s_k.symmetrize();
        let factor = s_k.cholesky().ok_or_else(|| {
            EstimationError::SingularCovariance("smoother normal equations not positive definite".into())
        })?;
        let s_inv = s_k
            .spd_inverse()
            .ok_or_else(|| EstimationError::SingularCovariance("Schur complement inversion failed".into()))?;
        z_rhs[k * n..(k + 1) * n].copy_from_slice(&rhs);
        factors.push(factor);
        s_prev_inv = Some(s_inv);
    }

    // Backward substitution: x_{len−1} = S⁻¹ z; x_k = S_k⁻¹ (z_k + (1/q) A_dᵀ x_{k+1}).
    let mut states = vec![0.0; len * n];
    for k in (0..len).rev() {
        let mut rhs = z_rhs[k * n..(k + 1) * n].to_vec();
        if k + 1 < len {
            let x_next = &states[(k + 1) * n..(k + 2) * n];
            let coupled = a_t.mul_vec(x_next);
            for i in 0..n {
                rhs[i] += q_inv * coupled[i];
            }
        }
        let x_k = solve_with_factor(&factors[k], &rhs);
        states[k * n..(k + 1) * n].copy_from_slice(&x_k);
    }

    // Objective at the minimizer, evaluated directly from the residuals.
    let mut objective = 0.0;
    for i in 0..n {
        let d = states[i] - x0_prior[i];
        objective += p0_inv * d * d;
    }
    for k in 0..len {
        let v = data.y[k] - states[k * n];
        objective += r_inv * v * v;
    }
    let mut predicted = [0.0; MAX_STATES];
    for k in 0..len - 1 {
        dm.step(
            &states[k * n..(k + 1) * n],
            data.u[k],
            data.w_row(k),
            &mut predicted[..n],
        );
        for i in 0..n {
            let w_res = states[(k + 1) * n + i] - predicted[i];
            objective += q_inv * w_res * w_res;
        }
    }

    if !objective.is_finite() {
        return Err(EstimationError::SingularCovariance(
            "batch objective not finite".into(),
        ));
    }
    Ok(SmootherSolution { states, objective })
}

/// Solves `L Lᵀ x = b` given a lower Cholesky factor.
fn solve_with_factor(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[(i, k)] * y[k];
        }
        y[i] = sum / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[(k, i)] * x[k];
        }
        x[i] = sum / l[(i, i)];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{assemble, discretize, ModelOrder, ParameterVector};
    use crate::rng::{stage_rng, standard_normal};
    use approx::assert_abs_diff_eq;

    fn sm1_model() -> DiscreteModel {
        let theta = ParameterVector::new(ModelOrder::Sm1, &[0.01, 1.0e6, 0.8, 1.0, 0.9]).unwrap();
        discretize(&assemble(&theta), 600.0).unwrap()
    }

    fn sm2_model() -> DiscreteModel {
        let theta =
            ParameterVector::new(ModelOrder::Sm2, &[0.012, 0.008, 2.5e6, 9.0e6, 0.8, 1.0, 0.9])
                .unwrap();
        discretize(&assemble(&theta), 600.0).unwrap()
    }

    fn rollout_data(dm: &DiscreteModel, len: usize, noise_std: f64, seed: u64) -> TrainingData {
        let n = dm.order.n_states();
        let n_w = dm.order.n_disturbances();
        let mut rng = stage_rng(seed, "smoother-data");
        let mut y = Vec::with_capacity(len);
        let mut w = Vec::with_capacity(len * n_w);
        let mut u = Vec::with_capacity(len);
        let mut x = vec![22.0; n];
        let mut x_next = vec![0.0; n];
        for k in 0..len {
            y.push(x[0] + noise_std * standard_normal(&mut rng));
            let mut w_row = vec![0.0; n_w];
            w_row[0] = 200.0;
            w_row[n_w - 1] = 28.0 + (k as f64 * 0.05).sin() * 3.0;
            if n_w == 4 {
                w_row[2] = w_row[3] + 2.0;
            }
            w.extend_from_slice(&w_row);
            let u_k = if k % 7 < 3 { -8_000.0 } else { 0.0 };
            u.push(u_k);
            dm.step(&x, u_k, &w_row, &mut x_next);
            x.copy_from_slice(&x_next);
        }
        TrainingData::from_parts(dm.order, dm.t_s, y, u, w).unwrap()
    }

    /// Gradient of the batch objective w.r.t. the state trajectory must
    /// vanish at the smoother's solution (it is the exact minimizer).
    fn batch_objective(
        dm: &DiscreteModel,
        data: &TrainingData,
        states: &[f64],
        x0_prior: &[f64],
        p0: f64,
        q: f64,
        r: f64,
    ) -> f64 {
        let n = dm.order.n_states();
        let len = data.len();
        let mut obj = 0.0;
        for i in 0..n {
            let d = states[i] - x0_prior[i];
            obj += d * d / p0;
        }
        for k in 0..len {
            let v = data.y[k] - states[k * n];
            obj += v * v / r;
        }
        let mut pred = vec![0.0; n];
        for k in 0..len - 1 {
            dm.step(&states[k * n..(k + 1) * n], data.u[k], data.w_row(k), &mut pred);
            for i in 0..n {
                let w_res = states[(k + 1) * n + i] - pred[i];
                obj += w_res * w_res / q;
            }
        }
        obj
    }

    #[test]
    fn solution_is_a_stationary_point() {
        let dm = sm2_model();
        let data = rollout_data(&dm, 40, 0.05, 1);
        let x0 = [22.0, 22.0];
        let (p0, q, r) = (1.0, 1e-4, 2.5e-3);
        let sol = smooth_states(&dm, &data, &x0, p0, q, r).unwrap();
        assert_abs_diff_eq!(
            sol.objective,
            batch_objective(&dm, &data, &sol.states, &x0, p0, q, r),
            epsilon = 1e-9
        );
        // Perturb each coordinate: the objective must not decrease.
        let h = 1e-5;
        for idx in 0..sol.states.len() {
            let mut up = sol.states.clone();
            up[idx] += h;
            let mut down = sol.states.clone();
            down[idx] -= h;
            let f_up = batch_objective(&dm, &data, &up, &x0, p0, q, r);
            let f_down = batch_objective(&dm, &data, &down, &x0, p0, q, r);
            let grad = (f_up - f_down) / (2.0 * h);
            assert!(grad.abs() < 1e-4, "coordinate {idx}: gradient {grad}");
            assert!(f_up + 1e-12 >= sol.objective && f_down + 1e-12 >= sol.objective);
        }
    }

    #[test]
    fn noiseless_exact_data_is_reproduced() {
        let dm = sm1_model();
        let data = rollout_data(&dm, 60, 0.0, 2);
        let sol = smooth_states(&dm, &data, &[22.0], 1.0, 1e-4, 2.5e-3).unwrap();
        for k in 0..data.len() {
            assert_abs_diff_eq!(sol.state(k, 0, 1), data.y[k], epsilon = 1e-8);
        }
        assert!(sol.objective < 1e-10, "objective {}", sol.objective);
    }

    #[test]
    fn tiny_prior_variance_pins_the_initial_state() {
        let dm = sm1_model();
        let data = rollout_data(&dm, 60, 0.05, 3);
        let supplied = 22.0;
        let sol = smooth_states(&dm, &data, &[supplied], 1e-12, 1e-4, 2.5e-3).unwrap();
        assert_abs_diff_eq!(sol.state(0, 0, 1), supplied, epsilon = 1e-6);
    }

    #[test]
    fn nonpositive_covariances_are_rejected() {
        let dm = sm1_model();
        let data = rollout_data(&dm, 20, 0.0, 4);
        assert!(matches!(
            smooth_states(&dm, &data, &[22.0], 1.0, 0.0, 1e-3),
            Err(EstimationError::SingularCovariance(_))
        ));
        assert!(matches!(
            smooth_states(&dm, &data, &[22.0], -1.0, 1e-4, 1e-3),
            Err(EstimationError::SingularCovariance(_))
        ));
    }
}
