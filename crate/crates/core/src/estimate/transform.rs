//! Positivity-preserving parameter transform.
//!
//! The optimizer works in an internal coordinate `z` where every parameter
//! is unconstrained by scale: resistances and capacitances map through
//! `ln`, gains through a scaled logit over their bounds. This enforces
//! positivity without constraint machinery and flattens the 1e-4…1e9
//! magnitude spread of the physical vector.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;

use crate::models::{ModelOrder, ParamKind};
use crate::rng::{uniform_in, uniform_01};

/// Keeps the logit argument away from exactly 0 or 1.
const LOGIT_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ParamTransform {
    kinds: Vec<ParamKind>,
    bounds: Vec<(f64, f64)>,
}

impl ParamTransform {
    /// Bounds must be finite with `lo < hi`; resistance/capacitance lower
    /// bounds must be positive (log transform).
    pub fn new(order: ModelOrder, bounds: &[(f64, f64)]) -> Self {
        assert_eq!(bounds.len(), order.n_params(), "bounds/parameter mismatch");
        for (kind, (lo, hi)) in order.param_kinds().iter().zip(bounds) {
            assert!(lo.is_finite() && hi.is_finite() && lo < hi, "bad bounds");
            if !matches!(kind, ParamKind::Gain) {
                assert!(*lo > 0.0, "log-transformed bound must be positive");
            }
        }
        Self {
            kinds: order.param_kinds().to_vec(),
            bounds: bounds.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.kinds.len()
    }

    /// Physical → internal.
    pub fn to_internal(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.kinds)
            .zip(&self.bounds)
            .map(|((&x, kind), &(lo, hi))| match kind {
                ParamKind::Resistance | ParamKind::Capacitance => x.ln(),
                ParamKind::Gain => {
                    let p = ((x - lo) / (hi - lo)).clamp(LOGIT_MARGIN, 1.0 - LOGIT_MARGIN);
                    (p / (1.0 - p)).ln()
                }
            })
            .collect()
    }

    /// Internal → physical.
    pub fn to_physical(&self, z: &[f64], theta: &mut [f64]) {
        for (i, (&zi, kind)) in z.iter().zip(&self.kinds).enumerate() {
            let (lo, hi) = self.bounds[i];
            theta[i] = match kind {
                ParamKind::Resistance | ParamKind::Capacitance => zi.exp(),
                ParamKind::Gain => {
                    let p = 1.0 / (1.0 + (-zi).exp());
                    lo + (hi - lo) * p
                }
            };
        }
    }

    /// Box constraints in internal coordinates.
    ///
    /// Log coordinates clamp to the log of the physical bounds; logit
    /// coordinates are clamped only to keep the exponential finite (the
    /// sigmoid already maps all of ℝ inside the physical bounds).
    pub fn internal_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for (kind, &(lo, hi)) in self.kinds.iter().zip(&self.bounds) {
            match kind {
                ParamKind::Resistance | ParamKind::Capacitance => {
                    lower.push(lo.ln());
                    upper.push(hi.ln());
                }
                ParamKind::Gain => {
                    lower.push(-40.0);
                    upper.push(40.0);
                }
            }
        }
        (lower, upper)
    }

    /// Draws a physical start point: log-uniform for resistances and
    /// capacitances, uniform for gains (whose lower bound may be zero).
    pub fn sample_physical(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.kinds
            .iter()
            .zip(&self.bounds)
            .map(|(kind, &(lo, hi))| match kind {
                ParamKind::Resistance | ParamKind::Capacitance => {
                    (uniform_01(rng) * (hi.ln() - lo.ln()) + lo.ln()).exp()
                }
                ParamKind::Gain => uniform_in(rng, lo, hi),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::default_bounds;
    use crate::rng::stage_rng;
    use approx::assert_relative_eq;

    #[test]
    fn round_trip_is_identity() {
        let order = ModelOrder::Sm2;
        let bounds = default_bounds(order);
        let tf = ParamTransform::new(order, &bounds);
        let mut rng = stage_rng(17, "roundtrip");
        let mut back = vec![0.0; tf.dim()];
        for _ in 0..200 {
            let theta = tf.sample_physical(&mut rng);
            let z = tf.to_internal(&theta);
            tf.to_physical(&z, &mut back);
            for (a, b) in theta.iter().zip(&back) {
                assert_relative_eq!(a, b, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn physical_always_inside_bounds() {
        let order = ModelOrder::Sm1;
        let bounds = default_bounds(order);
        let tf = ParamTransform::new(order, &bounds);
        let mut theta = vec![0.0; tf.dim()];
        // Extreme internal points still map inside the physical box.
        for z_val in [-40.0f64, -5.0, 0.0, 5.0, 40.0] {
            let (lower, upper) = tf.internal_box();
            let z: Vec<f64> = lower
                .iter()
                .zip(&upper)
                .map(|(&lo, &hi)| z_val.clamp(lo, hi))
                .collect();
            tf.to_physical(&z, &mut theta);
            for ((v, &(lo, hi)), kind) in theta.iter().zip(&bounds).zip(order.param_kinds()) {
                match kind {
                    ParamKind::Gain => assert!(*v >= lo && *v <= hi),
                    _ => assert!(*v >= lo * 0.999_999 && *v <= hi * 1.000_001),
                }
            }
        }
    }

    #[test]
    fn samples_respect_bounds_and_spread() {
        let order = ModelOrder::Sm4;
        let bounds = default_bounds(order);
        let tf = ParamTransform::new(order, &bounds);
        let mut rng = stage_rng(3, "samples");
        let mut saw_small_r = false;
        let mut saw_large_c = false;
        for _ in 0..500 {
            let theta = tf.sample_physical(&mut rng);
            for (v, &(lo, hi)) in theta.iter().zip(&bounds) {
                assert!(*v >= lo && *v <= hi);
            }
            if theta[0] < 1e-3 {
                saw_small_r = true;
            }
            if theta[5] > 1e8 {
                saw_large_c = true;
            }
        }
        // Log-uniform sampling actually visits the decades.
        assert!(saw_small_r && saw_large_c);
    }

    mod properties {
        use crate::estimate::transform::ParamTransform;
        use crate::models::{default_bounds, ModelOrder};
        use proptest::prelude::*;

        proptest! {
            /// Arbitrary in-bounds parameters survive the internal/physical
            /// round trip.
            #[test]
            fn round_trip_holds_for_arbitrary_parameters(
                r_w in 1e-4f64..1.0,
                r_win in 1e-4f64..1.0,
                c_in in 1e4f64..1e9,
                c_w in 1e4f64..1e9,
                a_ih in 0.0f64..5.0,
                b_ac in 0.0f64..5.0,
                d_solar in 0.0f64..5.0,
            ) {
                let bounds = default_bounds(ModelOrder::Sm2);
                let tf = ParamTransform::new(ModelOrder::Sm2, &bounds);
                let physical = [r_w, r_win, c_in, c_w, a_ih, b_ac, d_solar];
                let z = tf.to_internal(&physical);
                let mut back = [0.0; 7];
                tf.to_physical(&z, &mut back);
                for (a, b) in physical.iter().zip(&back) {
                    prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
                }
                // And the internal point sits inside the optimizer box.
                let (lower, upper) = tf.internal_box();
                for ((zi, lo), hi) in z.iter().zip(&lower).zip(&upper) {
                    prop_assert!(zi >= lo && zi <= hi);
                }
            }
        }
    }
}
