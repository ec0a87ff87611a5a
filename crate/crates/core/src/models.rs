//! RC-network house models: parameter vectors, state-space assembly,
//! forward-Euler discretization, and the HVAC electrical relations.
//!
//! Three fixed model orders are instantiated:
//!
//! * **SM4** — four states `[T_z, T_wall, T_attic, T_im]`, twelve parameters;
//!   the ground-truth generator.
//! * **SM2** — two states `[T_z, T_wall]`, seven parameters.
//! * **SM1** — one state `[T_z]`, five parameters.
//!
//! Wall coupling uses half-resistances: the wall node sits in the middle of
//! the total wall resistance `R_w`, so each side conducts with `2/R_w`.
//! Only the indoor air temperature is observable: `C = [1, 0, …, 0]`.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::ModelError;
use crate::linalg::{is_schur_stable, spectral_radius_estimate, Mat};
use crate::timeseries::ExogenousRecord;

/// Largest state dimension across model orders.
pub const MAX_STATES: usize = 4;
/// Largest disturbance dimension across model orders.
pub const MAX_DISTURBANCES: usize = 5;

/// Model order tag: how many thermal states the RC network carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelOrder {
    Sm1,
    Sm2,
    Sm4,
}

/// Role of one entry of a parameter vector; decides bounds and transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Thermal resistance, K/W; strictly positive.
    Resistance,
    /// Thermal capacitance, J/K; strictly positive.
    Capacitance,
    /// Dimensionless input gain; nonnegative under default bounds.
    Gain,
}

impl ModelOrder {
    pub const ALL: [ModelOrder; 3] = [ModelOrder::Sm1, ModelOrder::Sm2, ModelOrder::Sm4];

    pub fn n_states(self) -> usize {
        match self {
            ModelOrder::Sm1 => 1,
            ModelOrder::Sm2 => 2,
            ModelOrder::Sm4 => 4,
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    pub fn n_disturbances(self) -> usize {
        self.disturbance_labels().len()
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelOrder::Sm1 => "SM1",
            ModelOrder::Sm2 => "SM2",
            ModelOrder::Sm4 => "SM4",
        }
    }

    pub fn parse(text: &str) -> Option<ModelOrder> {
        ModelOrder::ALL
            .into_iter()
            .find(|o| o.label().eq_ignore_ascii_case(text.trim()))
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelOrder::Sm1 => &["R_win", "C_in", "A_ih", "B_ac", "D_solar"],
            ModelOrder::Sm2 => &["R_w", "R_win", "C_in", "C_w", "A_ih", "B_ac", "D_solar"],
            ModelOrder::Sm4 => &[
                "R_w", "R_attic", "R_im", "R_win", "R_roof", "C_in", "C_w", "C_attic", "C_im",
                "A_in", "B_in", "D_im",
            ],
        }
    }

    pub fn param_kinds(self) -> &'static [ParamKind] {
        use ParamKind::*;
        match self {
            ModelOrder::Sm1 => &[Resistance, Capacitance, Gain, Gain, Gain],
            ModelOrder::Sm2 => &[
                Resistance,
                Resistance,
                Capacitance,
                Capacitance,
                Gain,
                Gain,
                Gain,
            ],
            ModelOrder::Sm4 => &[
                Resistance,
                Resistance,
                Resistance,
                Resistance,
                Resistance,
                Capacitance,
                Capacitance,
                Capacitance,
                Capacitance,
                Gain,
                Gain,
                Gain,
            ],
        }
    }

    pub fn param_units(self) -> impl Iterator<Item = &'static str> {
        self.param_kinds().iter().map(|k| match k {
            ParamKind::Resistance => "K/W",
            ParamKind::Capacitance => "J/K",
            ParamKind::Gain => "-",
        })
    }

    pub fn state_labels(self) -> &'static [&'static str] {
        match self {
            ModelOrder::Sm1 => &["T_z"],
            ModelOrder::Sm2 => &["T_z", "T_wall"],
            ModelOrder::Sm4 => &["T_z", "T_wall", "T_attic", "T_im"],
        }
    }

    /// Disturbance ordering is normative; serialization and the `w` vector
    /// of every simulator and estimator follow it exactly.
    pub fn disturbance_labels(self) -> &'static [&'static str] {
        match self {
            ModelOrder::Sm1 => &["Q_IHL", "Q_solar", "T_am"],
            ModelOrder::Sm2 => &["Q_IHL", "Q_solar", "T_sol_w", "T_am"],
            ModelOrder::Sm4 => &["Q_IHL", "Q_solar", "T_sol_w", "T_sol_r", "T_am"],
        }
    }
}

impl core::fmt::Display for ModelOrder {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

/// Fills `out[..order.n_disturbances()]` with the disturbance vector in the
/// normative ordering.
pub fn write_disturbances(order: ModelOrder, rec: &ExogenousRecord, out: &mut [f64]) {
    match order {
        ModelOrder::Sm1 => {
            out[0] = rec.q_ihl;
            out[1] = rec.q_solar;
            out[2] = rec.t_am;
        }
        ModelOrder::Sm2 => {
            out[0] = rec.q_ihl;
            out[1] = rec.q_solar;
            out[2] = rec.t_sol_w;
            out[3] = rec.t_am;
        }
        ModelOrder::Sm4 => {
            out[0] = rec.q_ihl;
            out[1] = rec.q_solar;
            out[2] = rec.t_sol_w;
            out[3] = rec.t_sol_r;
            out[4] = rec.t_am;
        }
    }
}

/// Ordered, validated parameter values for one model order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    order: ModelOrder,
    values: Vec<f64>,
}

impl ParameterVector {
    /// Validates count, positivity of resistances/capacitances, and
    /// finiteness of gains.
    pub fn new(order: ModelOrder, values: &[f64]) -> Result<Self, ModelError> {
        if values.len() != order.n_params() {
            return Err(ModelError::WrongParameterCount {
                order: order.label(),
                expected: order.n_params(),
                got: values.len(),
            });
        }
        for ((&v, &kind), &name) in values
            .iter()
            .zip(order.param_kinds())
            .zip(order.param_names())
        {
            match kind {
                ParamKind::Resistance | ParamKind::Capacitance => {
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(ModelError::NonPositiveParameter {
                            name: name.to_string(),
                            value: v,
                        });
                    }
                }
                ParamKind::Gain => {
                    if !v.is_finite() {
                        return Err(ModelError::NonFiniteParameter {
                            name: name.to_string(),
                        });
                    }
                }
            }
        }
        Ok(Self {
            order,
            values: values.to_vec(),
        })
    }

    /// Builds from `(name, value)` pairs in any order; every schema name
    /// must appear exactly once.
    pub fn from_named(order: ModelOrder, pairs: &[(&str, f64)]) -> Result<Self, ModelError> {
        let names = order.param_names();
        if pairs.len() != names.len() {
            return Err(ModelError::WrongParameterCount {
                order: order.label(),
                expected: names.len(),
                got: pairs.len(),
            });
        }
        let mut values = vec![f64::NAN; names.len()];
        for (name, value) in pairs {
            match names.iter().position(|n| n == name) {
                Some(i) if values[i].is_nan() => values[i] = *value,
                _ => {
                    return Err(ModelError::NonFiniteParameter {
                        name: name.to_string(),
                    })
                }
            }
        }
        Self::new(order, &values)
    }

    pub fn order(&self) -> ModelOrder {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.order
            .param_names()
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.order
            .param_names()
            .iter()
            .zip(&self.values)
            .map(|(n, v)| (*n, *v))
    }

    /// Synthetic ground-truth SM4 parameters.
    ///
    /// These are NOT published values for any studied house; they are sized
    /// so that a 4-ton unit cycles a few times per hour at a 600 s step and
    /// the Euler discretization is comfortably stable.
    pub fn sm4_synthetic_default() -> Self {
        Self::new(
            ModelOrder::Sm4,
            &[
                0.010,  // R_w      K/W
                0.008,  // R_attic  K/W
                0.002,  // R_im     K/W
                0.0066, // R_win    K/W
                0.005,  // R_roof   K/W
                3.0e6,  // C_in     J/K
                1.0e7,  // C_w      J/K
                6.0e5,  // C_attic  J/K
                8.0e6,  // C_im     J/K
                0.9,    // A_in
                1.0,    // B_in
                0.9,    // D_im
            ],
        )
        .expect("defaults are valid")
    }
}

/// Search bounds per parameter: resistances in [1e-4, 1] K/W, capacitances
/// in [1e4, 1e9] J/K, gains in [0, 5].
pub fn default_bounds(order: ModelOrder) -> Vec<(f64, f64)> {
    order
        .param_kinds()
        .iter()
        .map(|k| match k {
            ParamKind::Resistance => (1e-4, 1.0),
            ParamKind::Capacitance => (1e4, 1e9),
            ParamKind::Gain => (0.0, 5.0),
        })
        .collect()
}

/// Continuous-time model `ẋ = A x + B u + D w`, `y = C x` with
/// `C = [1, 0, …, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub order: ModelOrder,
    /// n×n state matrix, entries in 1/s.
    pub a: Mat,
    /// n×1 HVAC input column.
    pub b: Vec<f64>,
    /// n×n_w disturbance matrix.
    pub d: Mat,
}

impl StateSpaceModel {
    /// Output map `y = C x = x[0]`.
    pub fn output(x: &[f64]) -> f64 {
        x[0]
    }
}

/// Builds the continuous-time matrices for the given parameters.
///
/// The `w` columns follow [`ModelOrder::disturbance_labels`]. The interior
/// mass of SM4 exchanges heat passively with the zone (the mass row drains
/// toward `T_z`), and the SM2 wall row couples symmetrically to the zone and
/// the wall sol-air temperature.
pub fn assemble(theta: &ParameterVector) -> StateSpaceModel {
    let order = theta.order();
    let v = theta.values();
    let n = order.n_states();
    let n_w = order.n_disturbances();
    let mut a = Mat::zeros(n, n);
    let mut b = vec![0.0; n];
    let mut d = Mat::zeros(n, n_w);

    match order {
        ModelOrder::Sm1 => {
            let (r_win, c_in, a_ih, b_ac, d_solar) = (v[0], v[1], v[2], v[3], v[4]);
            a[(0, 0)] = -1.0 / (r_win * c_in);
            b[0] = b_ac / c_in;
            d[(0, 0)] = a_ih / c_in; // Q_IHL
            d[(0, 1)] = d_solar / c_in; // Q_solar
            d[(0, 2)] = 1.0 / (r_win * c_in); // T_am
        }
        ModelOrder::Sm2 => {
            let (r_w, r_win, c_in, c_w, a_ih, b_ac, d_solar) =
                (v[0], v[1], v[2], v[3], v[4], v[5], v[6]);
            let g_w = 2.0 / r_w; // each half of the wall resistance
            let g_win = 1.0 / r_win;
            // Zone: wall exchange + window conduction + gains.
            a[(0, 0)] = -(g_w + g_win) / c_in;
            a[(0, 1)] = g_w / c_in;
            b[0] = b_ac / c_in;
            d[(0, 0)] = a_ih / c_in; // Q_IHL
            d[(0, 3)] = g_win / c_in; // T_am
            // Wall: symmetric exchange with the zone and the sol-air side.
            a[(1, 0)] = g_w / c_w;
            a[(1, 1)] = -2.0 * g_w / c_w;
            d[(1, 1)] = d_solar / c_w; // Q_solar
            d[(1, 2)] = g_w / c_w; // T_sol_w
        }
        ModelOrder::Sm4 => {
            let (r_w, r_attic, r_im, r_win, r_roof) = (v[0], v[1], v[2], v[3], v[4]);
            let (c_in, c_w, c_attic, c_im) = (v[5], v[6], v[7], v[8]);
            let (a_in, b_in, d_im) = (v[9], v[10], v[11]);
            let g_w = 2.0 / r_w;
            let g_attic = 1.0 / r_attic;
            let g_im = 1.0 / r_im;
            let g_win = 1.0 / r_win;
            let g_roof = 1.0 / r_roof;
            // Zone.
            a[(0, 0)] = -(g_w + g_attic + g_im + g_win) / c_in;
            a[(0, 1)] = g_w / c_in;
            a[(0, 2)] = g_attic / c_in;
            a[(0, 3)] = g_im / c_in;
            b[0] = b_in / c_in;
            d[(0, 0)] = a_in / c_in; // Q_IHL
            d[(0, 4)] = g_win / c_in; // T_am
            // Wall.
            a[(1, 0)] = g_w / c_w;
            a[(1, 1)] = -2.0 * g_w / c_w;
            d[(1, 2)] = g_w / c_w; // T_sol_w
            // Attic.
            a[(2, 0)] = g_attic / c_attic;
            a[(2, 2)] = -(g_roof + g_attic) / c_attic;
            d[(2, 3)] = g_roof / c_attic; // T_sol_r
            // Interior mass: passive drain toward the zone plus solar charge.
            a[(3, 0)] = g_im / c_im;
            a[(3, 3)] = -g_im / c_im;
            d[(3, 1)] = d_im / c_im; // Q_solar
        }
    }

    StateSpaceModel { order, a, b, d }
}

/// Forward-Euler discretization `A_d = I + t_s A`, `B_d = t_s B`,
/// `D_d = t_s D`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub order: ModelOrder,
    pub a_d: Mat,
    pub b_d: Vec<f64>,
    pub d_d: Mat,
    /// Step, seconds.
    pub t_s: f64,
}

impl DiscreteModel {
    /// One state update `out = A_d x + B_d u + D_d w`.
    pub fn step(&self, x: &[f64], u: f64, w: &[f64], out: &mut [f64]) {
        let n = self.order.n_states();
        let n_w = self.order.n_disturbances();
        for i in 0..n {
            let mut acc = self.b_d[i] * u;
            let a_row = self.a_d.row(i);
            for j in 0..n {
                acc += a_row[j] * x[j];
            }
            let d_row = self.d_d.row(i);
            for j in 0..n_w {
                acc += d_row[j] * w[j];
            }
            out[i] = acc;
        }
    }

    /// Output map `y = x[0]`.
    pub fn output(x: &[f64]) -> f64 {
        x[0]
    }
}

fn euler_matrices(model: &StateSpaceModel, t_s: f64) -> DiscreteModel {
    let n = model.order.n_states();
    let mut a_d = model.a.scale(t_s);
    for i in 0..n {
        a_d[(i, i)] += 1.0;
    }
    DiscreteModel {
        order: model.order,
        a_d,
        b_d: model.b.iter().map(|v| v * t_s).collect(),
        d_d: model.d.scale(t_s),
        t_s,
    }
}

/// Discretizes and refuses transition matrices with spectral radius ≥ 1.
pub fn discretize(model: &StateSpaceModel, t_s: f64) -> Result<DiscreteModel, ModelError> {
    if !(t_s > 0.0) || !t_s.is_finite() {
        return Err(ModelError::InvalidStep(t_s));
    }
    let dm = euler_matrices(model, t_s);
    if !is_schur_stable(&dm.a_d) {
        return Err(ModelError::UnstableDiscretization {
            t_s,
            radius_estimate: spectral_radius_estimate(&dm.a_d),
        });
    }
    Ok(dm)
}

/// Discretizes without the stability gate.
///
/// For hot paths that re-discretize a model already vetted at the same step,
/// and for deliberate construction of unstable instances in diagnostics.
pub fn discretize_unchecked(model: &StateSpaceModel, t_s: f64) -> DiscreteModel {
    euler_matrices(model, t_s)
}

/// COP, power factor, and rated thermal capacity of the HVAC unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HouseElectricalParams {
    /// Coefficient of performance: thermal watts per electrical watt.
    pub cop: f64,
    /// Power factor, in (0, 1].
    pub pf: f64,
    /// Magnitude of the HVAC thermal rate when on, W.
    pub q_ac_rated_w: f64,
}

impl Default for HouseElectricalParams {
    fn default() -> Self {
        Self {
            cop: 3.5,
            pf: 0.95,
            q_ac_rated_w: 14_000.0,
        }
    }
}

impl HouseElectricalParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v, ok) in [
            ("COP", self.cop, self.cop > 0.0 && self.cop.is_finite()),
            ("pf", self.pf, self.pf > 0.0 && self.pf <= 1.0),
            (
                "Q_AC_rated",
                self.q_ac_rated_w,
                self.q_ac_rated_w > 0.0 && self.q_ac_rated_w.is_finite(),
            ),
        ] {
            if !ok {
                return Err(ModelError::NonPositiveParameter {
                    name: name.to_string(),
                    value: v,
                });
            }
        }
        Ok(())
    }
}

/// Electrical draw of the HVAC unit: `P = |Q_HVAC| / COP`.
pub fn hvac_power(q_hvac: f64, elec: &HouseElectricalParams) -> f64 {
    q_hvac.abs() / elec.cop
}

/// Whole-house active power.
pub fn total_power(p_hvac: f64, p_other: f64) -> f64 {
    p_hvac + p_other
}

/// Reactive power `Q = P · tan(acos(pf))`.
pub fn reactive_power(p: f64, pf: f64) -> f64 {
    p * pf.acos().tan()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sm1_theta() -> ParameterVector {
        ParameterVector::new(ModelOrder::Sm1, &[0.01, 1.0e6, 0.8, 1.0, 0.9]).unwrap()
    }

    fn sm2_theta() -> ParameterVector {
        ParameterVector::new(ModelOrder::Sm2, &[0.012, 0.008, 2.5e6, 9.0e6, 0.8, 1.0, 0.9]).unwrap()
    }

    #[test]
    fn order_shapes() {
        assert_eq!(ModelOrder::Sm1.n_states(), 1);
        assert_eq!(ModelOrder::Sm2.n_states(), 2);
        assert_eq!(ModelOrder::Sm4.n_states(), 4);
        assert_eq!(ModelOrder::Sm1.n_params(), 5);
        assert_eq!(ModelOrder::Sm2.n_params(), 7);
        assert_eq!(ModelOrder::Sm4.n_params(), 12);
        assert_eq!(ModelOrder::Sm1.n_disturbances(), 3);
        assert_eq!(ModelOrder::Sm2.n_disturbances(), 4);
        assert_eq!(ModelOrder::Sm4.n_disturbances(), 5);
        assert_eq!(ModelOrder::parse("sm2"), Some(ModelOrder::Sm2));
    }

    #[test]
    fn parameter_validation() {
        let short = ParameterVector::new(ModelOrder::Sm2, &[0.01, 1.0e6]);
        assert!(matches!(
            short,
            Err(ModelError::WrongParameterCount {
                expected: 7,
                got: 2,
                ..
            })
        ));
        let negative = ParameterVector::new(ModelOrder::Sm1, &[-0.01, 1.0e6, 0.8, 1.0, 0.9]);
        assert!(matches!(
            negative,
            Err(ModelError::NonPositiveParameter { .. })
        ));
        let nan_gain = ParameterVector::new(ModelOrder::Sm1, &[0.01, 1.0e6, f64::NAN, 1.0, 0.9]);
        assert!(matches!(nan_gain, Err(ModelError::NonFiniteParameter { .. })));
    }

    #[test]
    fn from_named_any_order() {
        let theta = ParameterVector::from_named(
            ModelOrder::Sm1,
            &[
                ("C_in", 1.0e6),
                ("R_win", 0.01),
                ("D_solar", 0.9),
                ("A_ih", 0.8),
                ("B_ac", 1.0),
            ],
        )
        .unwrap();
        assert_eq!(theta.values(), sm1_theta().values());
        assert_eq!(theta.get("R_win"), Some(0.01));

        let dup = ParameterVector::from_named(
            ModelOrder::Sm1,
            &[
                ("C_in", 1.0e6),
                ("C_in", 2.0e6),
                ("D_solar", 0.9),
                ("A_ih", 0.8),
                ("B_ac", 1.0),
            ],
        );
        assert!(dup.is_err());
    }

    #[test]
    fn sm1_thermal_rate() {
        // 1/(R·C) with R = 0.01 K/W, C = 1e6 J/K.
        let m = assemble(&sm1_theta());
        assert_abs_diff_eq!(m.a[(0, 0)], -1.0e-4, epsilon = 1e-18);
        assert_abs_diff_eq!(m.d[(0, 2)], 1.0e-4, epsilon = 1e-18);
        assert_abs_diff_eq!(m.d[(0, 0)], 0.8e-6, epsilon = 1e-20);
        assert_abs_diff_eq!(m.b[0], 1.0e-6, epsilon = 1e-20);
    }

    #[test]
    fn sm4_wall_row_coefficients() {
        // The wall node couples through half-resistances: its own
        // coefficient is −(2/(R_w/2))/C_w and T_sol_w / T_z each get
        // +(1/(R_w/2))/C_w.
        let theta = ParameterVector::sm4_synthetic_default();
        let r_w = theta.get("R_w").unwrap();
        let c_w = theta.get("C_w").unwrap();
        let m = assemble(&theta);
        assert_abs_diff_eq!(m.a[(1, 1)], -(2.0 / (r_w / 2.0)) / c_w, epsilon = 1e-15);
        assert_abs_diff_eq!(m.a[(1, 0)], (1.0 / (r_w / 2.0)) / c_w, epsilon = 1e-15);
        assert_abs_diff_eq!(m.d[(1, 2)], (1.0 / (r_w / 2.0)) / c_w, epsilon = 1e-15);
        assert_eq!(m.a[(1, 2)], 0.0);
        assert_eq!(m.a[(1, 3)], 0.0);
    }

    #[test]
    fn mass_row_is_passive() {
        let m = assemble(&ParameterVector::sm4_synthetic_default());
        assert!(m.a[(3, 3)] < 0.0);
        assert_abs_diff_eq!(m.a[(3, 0)], -m.a[(3, 3)], epsilon = 1e-18);
    }

    fn equilibrium_residual(theta: &ParameterVector, c: f64) -> f64 {
        // Zero heat gains, all boundary temperatures at c, states at c.
        let order = theta.order();
        let mut values = theta.values().to_vec();
        for (i, kind) in order.param_kinds().iter().enumerate() {
            if *kind == ParamKind::Gain {
                values[i] = 0.0;
            }
        }
        let m = assemble(&ParameterVector::new(order, &values).unwrap());
        let x = vec![c; order.n_states()];
        let rec = ExogenousRecord {
            t_am: c,
            q_solar: 123.0,
            q_ihl: 456.0,
            t_sol_w: c,
            t_sol_r: c,
        };
        let mut w = [0.0; MAX_DISTURBANCES];
        write_disturbances(order, &rec, &mut w);
        let ax = m.a.mul_vec(&x);
        let dw = m.d.mul_vec(&w[..order.n_disturbances()]);
        ax.iter()
            .zip(&dw)
            .map(|(a, d)| (a + d).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn ambient_equilibrium_for_all_orders() {
        assert!(equilibrium_residual(&sm1_theta(), 21.0) < 1e-12);
        assert!(equilibrium_residual(&sm2_theta(), 21.0) < 1e-12);
        assert!(equilibrium_residual(&ParameterVector::sm4_synthetic_default(), 21.0) < 1e-12);
    }

    #[test]
    fn continuous_matrices_are_metzler_and_dominated() {
        // Nonnegative off-diagonals, negative diagonal, and nonpositive row
        // sums over the temperature couplings put every Gershgorin disc in
        // the closed left half plane: the network is passive.
        for theta in [
            sm1_theta(),
            sm2_theta(),
            ParameterVector::sm4_synthetic_default(),
        ] {
            let order = theta.order();
            let m = assemble(&theta);
            let n = order.n_states();
            let temp_cols: Vec<usize> = m
                .d
                .row(0)
                .iter()
                .enumerate()
                .filter(|(j, _)| order.disturbance_labels()[*j].starts_with("T_"))
                .map(|(j, _)| j)
                .collect();
            for i in 0..n {
                assert!(m.a[(i, i)] < 0.0);
                let mut row_sum = 0.0;
                for j in 0..n {
                    if j != i {
                        assert!(m.a[(i, j)] >= 0.0);
                    }
                    row_sum += m.a[(i, j)];
                }
                for &j in &temp_cols {
                    assert!(m.d[(i, j)] >= 0.0);
                    row_sum += m.d[(i, j)];
                }
                assert!(row_sum <= 1e-15, "row {i} sum {row_sum}");
            }
        }
    }

    #[test]
    fn euler_matrices_are_exact() {
        let theta = sm2_theta();
        let m = assemble(&theta);
        let t_s = 600.0;
        let dm = discretize(&m, t_s).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 } + t_s * m.a[(i, j)];
                assert_eq!(dm.a_d[(i, j)], expected);
            }
            assert_eq!(dm.b_d[i], t_s * m.b[i]);
            for j in 0..4 {
                assert_eq!(dm.d_d[(i, j)], t_s * m.d[(i, j)]);
            }
        }
    }

    #[test]
    fn scalar_discretization_cases() {
        let theta = sm1_theta(); // a = −1e−4
        let m = assemble(&theta);
        let dm = discretize(&m, 600.0).unwrap();
        assert_abs_diff_eq!(dm.a_d[(0, 0)], 0.94, epsilon = 1e-12);

        // a = −0.01 → A_d = −5: refused.
        let fast = ParameterVector::new(ModelOrder::Sm1, &[0.01, 1.0e4, 0.8, 1.0, 0.9]).unwrap();
        let err = discretize(&assemble(&fast), 600.0);
        assert!(matches!(err, Err(ModelError::UnstableDiscretization { .. })));
        // ... but the unchecked path still constructs it for diagnostics.
        let forced = discretize_unchecked(&assemble(&fast), 600.0);
        assert_abs_diff_eq!(forced.a_d[(0, 0)], -5.0, epsilon = 1e-12);

        assert!(matches!(
            discretize(&m, 0.0),
            Err(ModelError::InvalidStep(_))
        ));
    }

    #[test]
    fn discrete_step_matches_matrix_algebra() {
        let theta = sm2_theta();
        let dm = discretize(&assemble(&theta), 600.0).unwrap();
        let x = [21.0, 19.0];
        let w = [500.0, 1200.0, 31.0, 28.0];
        let u = -14_000.0;
        let mut next = [0.0; 2];
        dm.step(&x, u, &w, &mut next);
        for i in 0..2 {
            let expected = dm.a_d.row(i)[0] * x[0]
                + dm.a_d.row(i)[1] * x[1]
                + dm.b_d[i] * u
                + crate::linalg::dot(dm.d_d.row(i), &w);
            assert_abs_diff_eq!(next[i], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn hvac_power_cases() {
        let elec = HouseElectricalParams::default();
        assert_eq!(hvac_power(0.0, &elec), 0.0);
        assert_abs_diff_eq!(hvac_power(-10_500.0, &elec), 3_000.0, epsilon = 1e-12);
        assert_eq!(hvac_power(7_000.0, &elec), hvac_power(-7_000.0, &elec));
    }

    #[test]
    fn reactive_power_cases() {
        assert_eq!(reactive_power(1_234.0, 1.0), 0.0);
        // tan(acos(pf)) = sqrt(1 − pf²)/pf as an independent route.
        for pf in [0.8f64, 0.9, 0.95, 1.0] {
            let expected = (1.0 - pf * pf).sqrt() / pf;
            assert_abs_diff_eq!(reactive_power(1_000.0, pf), 1_000.0 * expected, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(reactive_power(1_000.0, 0.95), 328.684_105_178_863, epsilon = 1e-9);
        assert_eq!(total_power(2_000.0, 500.0), 2_500.0);
    }

    #[test]
    fn electrical_validation() {
        assert!(HouseElectricalParams::default().validate().is_ok());
        let bad = HouseElectricalParams {
            pf: 1.2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn disturbance_ordering_is_normative() {
        let rec = ExogenousRecord {
            t_am: 1.0,
            q_solar: 2.0,
            q_ihl: 3.0,
            t_sol_w: 4.0,
            t_sol_r: 5.0,
        };
        let mut w = [0.0; MAX_DISTURBANCES];
        write_disturbances(ModelOrder::Sm1, &rec, &mut w);
        assert_eq!(&w[..3], &[3.0, 2.0, 1.0]);
        write_disturbances(ModelOrder::Sm2, &rec, &mut w);
        assert_eq!(&w[..4], &[3.0, 2.0, 4.0, 1.0]);
        write_disturbances(ModelOrder::Sm4, &rec, &mut w);
        assert_eq!(&w[..5], &[3.0, 2.0, 4.0, 5.0, 1.0]);
    }

    #[test]
    fn truth_default_is_stable_at_ten_minutes() {
        let m = assemble(&ParameterVector::sm4_synthetic_default());
        assert!(discretize(&m, 600.0).is_ok());
    }
}
