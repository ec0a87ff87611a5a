//! Independent reference implementations used to cross-check the
//! production numerics in tests.
//!
//! Nothing here sits on a hot path, and none of it shares code with the
//! routines it validates: the smoother oracle goes through the classic
//! forward/backward Rauch–Tung–Striebel recursions instead of the banded
//! normal equations, eigenvalues come from Jacobi rotations instead of the
//! Lyapunov criterion, and gradients use a five-point stencil instead of
//! the optimizer's two-point differences.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::EstimationError;
use crate::estimate::TrainingData;
use crate::linalg::Mat;
use crate::models::{DiscreteModel, ModelOrder, ParameterVector, MAX_STATES};

/// Fixed-interval smoothed state means by the Rauch–Tung–Striebel
/// recursion, flattened row-major over `data.len()` steps.
///
/// For a linear-Gaussian model the smoothed means coincide with the joint
/// maximum-a-posteriori trajectory, so this is an exact oracle for the
/// batch smoother's inner linear solve.
pub fn rts_smooth(
    dm: &DiscreteModel,
    data: &TrainingData,
    x0: &[f64],
    p0_var: f64,
    q_var: f64,
    r_var: f64,
) -> Result<Vec<f64>, EstimationError> {
    let n = dm.order.n_states();
    let len = data.len();
    if !(p0_var > 0.0) || !(q_var > 0.0) || !(r_var > 0.0) {
        return Err(EstimationError::SingularCovariance(
            "non-positive covariance in RTS oracle".into(),
        ));
    }
    let a_d = &dm.a_d;

    let mut x_pred = vec![0.0; len * n];
    let mut x_filt = vec![0.0; len * n];
    let mut p_pred: Vec<Mat> = Vec::with_capacity(len);
    let mut p_filt: Vec<Mat> = Vec::with_capacity(len);

    x_pred[..n].copy_from_slice(x0);
    p_pred.push(Mat::diag(&vec![p0_var; n]));

    for k in 0..len {
        // Measurement update with the scalar output y = x[0] + v.
        let pp = &p_pred[k];
        let s = pp[(0, 0)] + r_var;
        if !(s > 0.0) || !s.is_finite() {
            return Err(EstimationError::FilterDivergence { step: k });
        }
        let e = data.y[k] - x_pred[k * n];
        let mut gain = [0.0; MAX_STATES];
        for i in 0..n {
            gain[i] = pp[(i, 0)] / s;
        }
        for i in 0..n {
            x_filt[k * n + i] = x_pred[k * n + i] + gain[i] * e;
        }
        let mut pf = pp.clone();
        for i in 0..n {
            for j in 0..n {
                pf[(i, j)] -= gain[i] * pp[(0, j)];
            }
        }
        pf.symmetrize();
        p_filt.push(pf);

        // Time update.
        if k + 1 < len {
            let mut next = [0.0; MAX_STATES];
            dm.step(
                &x_filt[k * n..(k + 1) * n],
                data.u[k],
                data.w_row(k),
                &mut next[..n],
            );
            x_pred[(k + 1) * n..(k + 2) * n].copy_from_slice(&next[..n]);
            let mut pn = a_d.matmul(&p_filt[k]).matmul(&a_d.transpose());
            for i in 0..n {
                pn[(i, i)] += q_var;
            }
            pn.symmetrize();
            p_pred.push(pn);
        }
    }

    // Backward pass.
    let mut x_smooth = x_filt.clone();
    for k in (0..len - 1).rev() {
        // Gain G = P_filt Aᵀ P_pred(k+1)⁻¹.
        let pp_inv = p_pred[k + 1]
            .spd_inverse()
            .ok_or(EstimationError::SingularCovariance(
                "predicted covariance not positive definite in RTS oracle".into(),
            ))?;
        let g = p_filt[k].matmul(&a_d.transpose()).matmul(&pp_inv);
        for i in 0..n {
            let mut acc = x_filt[k * n + i];
            for j in 0..n {
                acc += g[(i, j)] * (x_smooth[(k + 1) * n + j] - x_pred[(k + 1) * n + j]);
            }
            x_smooth[k * n + i] = acc;
        }
    }
    Ok(x_smooth)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
/// ascending. Panics if the input is not square/symmetric to 1e-9.
pub fn symmetric_eigenvalues(m: &Mat) -> Vec<f64> {
    let n = m.rows();
    assert_eq!(n, m.cols(), "square matrix required");
    for i in 0..n {
        for j in 0..n {
            assert!(
                (m[(i, j)] - m[(j, i)]).abs() <= 1e-9 * (1.0 + m[(i, j)].abs()),
                "matrix must be symmetric"
            );
        }
    }
    let mut a = m.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() < 1e-300 || off.sqrt() < 1e-15 * a.max_abs() * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    eig
}

/// State capacitances of an RC parameter vector, in state order.
pub fn state_capacitances(theta: &ParameterVector) -> Vec<f64> {
    let names: &[&str] = match theta.order() {
        ModelOrder::Sm1 => &["C_in"],
        ModelOrder::Sm2 => &["C_in", "C_w"],
        ModelOrder::Sm4 => &["C_in", "C_w", "C_attic", "C_im"],
    };
    names
        .iter()
        .map(|n| theta.get(n).expect("schema name"))
        .collect()
}

/// Exact eigenvalues of a continuous RC system matrix.
///
/// With `S = diag(√C_i)`, the similarity `S·A·S⁻¹` of a reciprocal RC
/// network is symmetric, so its (real) spectrum equals that of `A` and
/// Jacobi applies. The forward-Euler map then has eigenvalues
/// `1 + t_s·λ`, giving an independent spectral-radius oracle.
pub fn rc_eigenvalues(a: &Mat, capacitances: &[f64]) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(n, capacitances.len());
    let mut sym = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sym[(i, j)] = a[(i, j)] * (capacitances[i] / capacitances[j]).sqrt();
        }
    }
    symmetric_eigenvalues(&sym)
}

/// Five-point central-difference gradient, one order more accurate than
/// the optimizer's own differencing.
pub fn gradient_5point<F: FnMut(&[f64]) -> f64>(mut f: F, z: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; z.len()];
    let mut zz = z.to_vec();
    for i in 0..z.len() {
        let base = z[i];
        let mut eval = |offset: f64| {
            zz[i] = base + offset;
            let v = f(&zz);
            zz[i] = base;
            v
        };
        let f_m2 = eval(-2.0 * h);
        let f_m1 = eval(-h);
        let f_p1 = eval(h);
        let f_p2 = eval(2.0 * h);
        g[i] = (f_m2 - 8.0 * f_m1 + 8.0 * f_p1 - f_p2) / (12.0 * h);
    }
    g
}
