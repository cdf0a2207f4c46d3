//! Virtual mass-spring-damper link.
//!
//! Each link obeys `M dx'' + D dx' + K dx = F` per Cartesian axis and is
//! propagated exactly under a zero-order-hold force with the discrete pair
//! `(A_d, B_d)`.

use nalgebra::{Complex, Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::expm_taylor;

/// Tolerance on the damping ratio for a parameter set to count as critically damped.
pub const CRITICAL_TOLERANCE: f64 = 1e-3;

const CHECK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImpedanceError {
    #[error("invalid impedance parameter {name} = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("parameters are not critically damped (zeta = {zeta:.6}); set D = {d_crit:.6} for M and K as given")]
    NotCriticallyDamped { zeta: f64, d_crit: f64 },
    #[error("discretization disagrees with the matrix-exponential check by {residual:e}")]
    CheckFailed { residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImpedanceParams {
    /// Virtual mass, kg.
    #[serde(rename = "M")]
    pub mass: f64,
    /// Damping, N*s/m.
    #[serde(rename = "D")]
    pub damping: f64,
    /// Stiffness, N/m.
    #[serde(rename = "K")]
    pub stiffness: f64,
    /// Leader velocity to link force gain, N*s/m.
    #[serde(rename = "K_v")]
    pub velocity_gain: f64,
}

impl Default for ImpedanceParams {
    fn default() -> Self {
        Self {
            mass: 1.9,
            damping: 12.6,
            stiffness: 20.88,
            velocity_gain: 0.2,
        }
    }
}

impl ImpedanceParams {
    pub fn new(
        mass: f64,
        damping: f64,
        stiffness: f64,
        velocity_gain: f64,
    ) -> Result<Self, ImpedanceError> {
        let p = Self {
            mass,
            damping,
            stiffness,
            velocity_gain,
        };
        p.validate()?;
        Ok(p)
    }

    /// Critically damped parameters for the given mass and stiffness.
    pub fn critical(mass: f64, stiffness: f64, velocity_gain: f64) -> Result<Self, ImpedanceError> {
        Self::new(
            mass,
            solve_critical_damping(mass, stiffness)?,
            stiffness,
            velocity_gain,
        )
    }

    pub fn validate(&self) -> Result<(), ImpedanceError> {
        let checks = [
            ("M", self.mass, self.mass > 0.0, "must be positive"),
            (
                "K",
                self.stiffness,
                self.stiffness > 0.0,
                "must be positive",
            ),
            (
                "D",
                self.damping,
                self.damping >= 0.0,
                "must be non-negative",
            ),
            ("K_v", self.velocity_gain, true, ""),
        ];
        for (name, value, ok, reason) in checks {
            if !value.is_finite() {
                return Err(ImpedanceError::InvalidParam {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
            if !ok {
                return Err(ImpedanceError::InvalidParam {
                    name,
                    value,
                    reason,
                });
            }
        }
        Ok(())
    }

    pub fn natural_frequency(&self) -> f64 {
        (self.stiffness / self.mass).sqrt()
    }

    pub fn damping_ratio(&self) -> f64 {
        self.damping / (2.0 * (self.mass * self.stiffness).sqrt())
    }

    pub fn critically_damped(&self) -> bool {
        (self.damping_ratio() - 1.0).abs() < CRITICAL_TOLERANCE
    }

    /// Continuous state matrix for the state `[dx, dv]`.
    pub fn a_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(
            0.0,
            1.0,
            -self.stiffness / self.mass,
            -self.damping / self.mass,
        )
    }

    pub fn b_vector(&self) -> Vector2<f64> {
        Vector2::new(0.0, 1.0 / self.mass)
    }

    /// Settled displacement under a constant force.
    pub fn static_deflection(&self, force: f64) -> f64 {
        force / self.stiffness
    }
}

/// Damping that makes `M s^2 + D s + K` a perfect square.
pub fn solve_critical_damping(mass: f64, stiffness: f64) -> Result<f64, ImpedanceError> {
    for (name, value) in [("M", mass), ("K", stiffness)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(ImpedanceError::InvalidParam {
                name,
                value,
                reason: "must be positive",
            });
        }
    }
    Ok(2.0 * (mass * stiffness).sqrt())
}

pub fn external_force(velocity_gain: f64, leader_velocity: &Vector3<f64>) -> Vector3<f64> {
    leader_velocity * velocity_gain
}

/// Per-axis link displacement and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkState {
    pub delta_x: Vector3<f64>,
    pub delta_v: Vector3<f64>,
}

impl LinkState {
    pub fn new(delta_x: Vector3<f64>, delta_v: Vector3<f64>) -> Self {
        Self { delta_x, delta_v }
    }

    pub fn is_finite(&self) -> bool {
        self.delta_x
            .iter()
            .chain(self.delta_v.iter())
            .all(|v| v.is_finite())
    }

    /// Stored energy of the link, per axis summed.
    pub fn energy(&self, params: &ImpedanceParams) -> f64 {
        0.5 * params.stiffness * self.delta_x.norm_squared()
            + 0.5 * params.mass * self.delta_v.norm_squared()
    }
}

/// Row-major nested arrays rather than nalgebra's flat column-major layout.
fn rows<S: serde::Serializer>(m: &Matrix2<f64>, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&[[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]], s)
}

/// Exact zero-order-hold discretization of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteImpedance {
    #[serde(rename = "A_d", serialize_with = "rows")]
    a_d: Matrix2<f64>,
    #[serde(rename = "B_d")]
    b_d: Vector2<f64>,
    #[serde(rename = "T")]
    period: f64,
    lambda: f64,
    params: ImpedanceParams,
}

impl DiscreteImpedance {
    pub fn a_d(&self) -> &Matrix2<f64> {
        &self.a_d
    }

    pub fn b_d(&self) -> &Vector2<f64> {
        &self.b_d
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Repeated eigenvalue `-D/(2M)`, 1/s.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn params(&self) -> &ImpedanceParams {
        &self.params
    }

    /// Advances one period under a force held constant across it.
    pub fn step(&self, state: &LinkState, force: &Vector3<f64>) -> LinkState {
        let mut next = LinkState::default();
        for i in 0..3 {
            (next.delta_x[i], next.delta_v[i]) =
                self.step_axis(state.delta_x[i], state.delta_v[i], force[i]);
        }
        next
    }

    /// Scalar version of [`step`](Self::step) for a single axis.
    ///
    /// Evaluated about the static deflection `F/K`: since
    /// `B_d = (I - A_d) [1/K, 0]`, this equals `A_d s + B_d F` but holds the
    /// equilibrium exactly, so a step response never rounds past it.
    pub fn step_axis(&self, x: f64, v: f64, force: f64) -> (f64, f64) {
        let x_eq = force / self.params.stiffness;
        let e = self.a_d * Vector2::new(x - x_eq, v);
        (x_eq + e[0], e[1])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain numeric record")
    }
}

/// `sum_k x^k / (2k)!` and `sum_k x^k / (2k+1)!`, i.e. `cosh(sqrt x)` and
/// `sinh(sqrt x)/sqrt x`, continued through `x <= 0`.
fn even_odd_series(x: f64) -> (f64, f64) {
    if x.abs() > 1.0 {
        let r = x.abs().sqrt();
        return if x > 0.0 {
            (r.cosh(), r.sinh() / r)
        } else {
            (r.cos(), r.sin() / r)
        };
    }
    let (mut c, mut s) = (1.0, 1.0);
    let (mut tc, mut ts) = (1.0, 1.0);
    for k in 0..30 {
        let k = k as f64;
        tc *= x / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
        ts *= x / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
        c += tc;
        s += ts;
        if tc.abs() < 1e-18 && ts.abs() < 1e-18 {
            break;
        }
    }
    (c, s)
}

/// `J_n = int_0^T tau^n e^{mu tau} d tau` for `n = 0..len`.
fn exp_moments(mu: f64, t: f64, len: usize) -> Vec<f64> {
    let z = mu * t;
    let mut out = Vec::with_capacity(len);
    if z.abs() <= 4.0 {
        for n in 0..len {
            let mut term = 1.0;
            let mut sum = 1.0 / (n as f64 + 1.0);
            for i in 1..200 {
                term *= z / i as f64;
                let add = term / (n as f64 + i as f64 + 1.0);
                sum += add;
                if add.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            out.push(t.powi(n as i32 + 1) * sum);
        }
    } else {
        let e = z.exp();
        let mut prev = z.exp_m1() / mu;
        out.push(prev);
        for n in 1..len {
            prev = (t.powi(n as i32) * e - n as f64 * prev) / mu;
            out.push(prev);
        }
    }
    out
}

/// `int_0^T e^{mu tau} C(tau) d tau` and the same for `S(tau)`, with `C`, `S`
/// the even/odd series of [`even_odd_series`] at `nu2 tau^2`.
fn weighted_integrals(mu: f64, nu2: f64, t: f64) -> (f64, f64) {
    if nu2 * t * t > 1.0 {
        let w = nu2.sqrt();
        let e = |l: f64| if l == 0.0 { t } else { (l * t).exp_m1() / l };
        let (ep, em) = (e(mu + w), e(mu - w));
        return (0.5 * (ep + em), 0.5 * (ep - em) / w);
    }
    if nu2 * t * t < -1.0 {
        let w = (-nu2).sqrt();
        let z = Complex::new(mu, w);
        let ez = ((z * t).exp() - 1.0) / z;
        return (ez.re, ez.im / w);
    }
    const TERMS: usize = 24;
    let j = exp_moments(mu, t, 2 * TERMS + 2);
    let (mut ic, mut is) = (0.0, 0.0);
    let mut coef = 1.0; // nu2^k / (2k)!
    for k in 0..=TERMS {
        ic += coef * j[2 * k];
        is += coef / (2 * k + 1) as f64 * j[2 * k + 1];
        coef *= nu2 / ((2 * k + 1) * (2 * k + 2)) as f64;
        if coef == 0.0 {
            break;
        }
    }
    (ic, is)
}

/// Exact discretization without the damping-regime precondition.
///
/// With `mu = -D/(2M)` the matrix `N = A - mu I` squares to
/// `(mu^2 - K/M) I`, so `e^{AT} = e^{mu T} (C I + S N)` for even/odd power
/// series `C`, `S`; at critical damping this is `e^{lambda T}(I + N T)`.
/// Near-critical parameter sets therefore reuse the same expression without
/// the cancellation of the distinct-root formula.
fn discretize_any(params: &ImpedanceParams, period: f64) -> (Matrix2<f64>, Vector2<f64>, f64) {
    let (m, d, k) = (params.mass, params.damping, params.stiffness);
    let mu = -d / (2.0 * m);
    let nu2 = mu * mu - k / m;
    let n = params.a_matrix() - Matrix2::identity() * mu;
    let (c, s) = even_odd_series(nu2 * period * period);
    let a_d = (Matrix2::identity() * c + n * (s * period)) * (mu * period).exp();
    let (ic, is) = weighted_integrals(mu, nu2, period);
    let b_d = Vector2::new(is, ic + mu * is) / m;
    (a_d, b_d, mu)
}

fn augmented_check(
    params: &ImpedanceParams,
    period: f64,
    a_d: &Matrix2<f64>,
    b_d: &Vector2<f64>,
) -> f64 {
    let a = params.a_matrix();
    let b = params.b_vector();
    let mut aug = Matrix3::zeros();
    aug.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
    aug.fixed_view_mut::<2, 1>(0, 2).copy_from(&b);
    let e = expm_taylor(&(aug * period));
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((e[(i, j)] - a_d[(i, j)]).abs());
        }
        worst = worst.max((e[(i, 2)] - b_d[i]).abs());
    }
    worst
}

/// Discretizes a critically damped link for the sample period `period`.
pub fn discretize(
    params: &ImpedanceParams,
    period: f64,
) -> Result<DiscreteImpedance, ImpedanceError> {
    params.validate()?;
    if !(period > 0.0 && period.is_finite()) {
        return Err(ImpedanceError::InvalidParam {
            name: "T",
            value: period,
            reason: "must be positive",
        });
    }
    if !params.critically_damped() {
        return Err(ImpedanceError::NotCriticallyDamped {
            zeta: params.damping_ratio(),
            d_crit: 2.0 * (params.mass * params.stiffness).sqrt(),
        });
    }
    let (a_d, b_d, lambda) = discretize_any(params, period);
    let residual = augmented_check(params, period, &a_d, &b_d);
    if residual.is_nan() || residual > CHECK_TOLERANCE {
        return Err(ImpedanceError::CheckFailed { residual });
    }
    Ok(DiscreteImpedance {
        a_d,
        b_d,
        period,
        lambda,
        params: *params,
    })
}
