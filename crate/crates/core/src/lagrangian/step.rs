use crate::covariance::apply_q;
use crate::shell_noise::{NoiseModel, TrigTable};
use crate::tensor::{Tensor2, Vec2};

use super::{wrap_torus, PolymerState, SimParams};

/// Brownian increments for one pre-limit step, each `N(0, dt)`.
#[derive(Clone, Copy, Debug)]
pub struct PrelimitIncrements<'a> {
    /// One increment per shell mode, in mode order.
    pub modes: &'a [f64],
    /// Thermal increment.
    pub thermal: Vec2,
}

/// Brownian increments for one limit step, each `N(0, dt)`.
#[derive(Clone, Copy, Debug)]
pub struct LimitIncrements {
    /// Drives `Q(R) dW`.
    pub stretch: Vec2,
    /// Drives `√2 σ dW`.
    pub thermal: Vec2,
}

/// The step produced a NaN or infinite coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonFiniteState;

fn check(state: PolymerState) -> Result<PolymerState, NonFiniteState> {
    if state.is_finite() {
        Ok(state)
    } else {
        Err(NonFiniteState)
    }
}

fn drift_r(params: &SimParams, grad_u: Tensor2, r: Vec2) -> Vec2 {
    grad_u.apply(r) - r * (1.0 / params.beta)
}

/// One Heun (predictor–corrector) step of the Stratonovich system
///
/// ```text
/// dX = u_L(X) dt + Σ σ_k(X) ∘ dW_k
/// dR = ∇u_L(X) R dt + Σ ∇σ_k(X) R ∘ dW_k − R/β dt + √2 σ dB
/// ```
///
/// Both stages reuse the same increments. The additive thermal term enters
/// once, as a plain increment.
pub fn step_prelimit(
    state: PolymerState,
    noise: &NoiseModel,
    params: &SimParams,
    inc: PrelimitIncrements<'_>,
    dt: f64,
    trig: &mut TrigTable,
) -> Result<PolymerState, NonFiniteState> {
    let PolymerState { x, r } = state;
    let thermal = inc.thermal * (std::f64::consts::SQRT_2 * params.sigma);
    let u = &params.velocity;
    let with_flow = !u.is_zero();

    let (u0, grad_u0) = if with_flow {
        (u.velocity(x), u.gradient(x))
    } else {
        (Vec2::ZERO, Tensor2::ZERO)
    };
    let (v0, m0) = noise.field_sums(x, inc.modes, trig);
    let dr0 = drift_r(params, grad_u0, r);

    let x_pred = x + u0 * dt + v0;
    let r_pred = r + dr0 * dt + m0.apply(r) + thermal;

    let (u1, grad_u1) = if with_flow {
        (u.velocity(x_pred), u.gradient(x_pred))
    } else {
        (Vec2::ZERO, Tensor2::ZERO)
    };
    let (v1, m1) = noise.field_sums(x_pred, inc.modes, trig);
    let dr1 = drift_r(params, grad_u1, r_pred);

    let x_new = x + (u0 + u1) * (0.5 * dt) + (v0 + v1) * 0.5;
    let r_new = r + (dr0 + dr1) * (0.5 * dt) + (m0.apply(r) + m1.apply(r_pred)) * 0.5 + thermal;
    check(PolymerState {
        x: wrap_torus(x_new),
        r: r_new,
    })
}

/// One Euler–Maruyama step of the limit Itô system
///
/// ```text
/// dX = u_L(X) dt
/// dR = (∇u_L(X) R − R/β) dt + Q(R) dW + √2 σ dB
/// ```
///
/// No drift correction is needed: the rows of `A = Q²` are divergence-free.
pub fn step_limit(state: PolymerState, params: &SimParams, inc: LimitIncrements, dt: f64) -> Result<PolymerState, NonFiniteState> {
    let PolymerState { x, r } = state;
    let u = &params.velocity;
    let (u0, grad_u) = if u.is_zero() {
        (Vec2::ZERO, Tensor2::ZERO)
    } else {
        (u.velocity(x), u.gradient(x))
    };
    let r_new = r
        + drift_r(params, grad_u, r) * dt
        + apply_q(r, inc.stretch, params.a)
        + inc.thermal * (std::f64::consts::SQRT_2 * params.sigma);
    check(PolymerState {
        x: wrap_torus(x + u0 * dt),
        r: r_new,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shell_noise::enumerate_shell;

    #[test]
    fn prelimit_deterministic_relaxation() {
        let noise = enumerate_shell(2, 0.0).unwrap();
        let params = SimParams::prelimit(2, 0.0, 0.5, 0.0);
        let dw = vec![0.3; noise.len()];
        let dt = 0.01;
        let s0 = PolymerState::new(Vec2::new(1.0, 2.0), Vec2::new(1.5, -0.5));
        let inc = PrelimitIncrements { modes: &dw, thermal: Vec2::new(0.2, 0.1) };
        let s1 = step_prelimit(s0, &noise, &params, inc, dt, &mut TrigTable::default()).unwrap();
        let h = dt / params.beta;
        let factor = 1.0 - h + 0.5 * h * h;
        assert!((s1.r - s0.r * factor).norm() < 1e-15);
        assert_eq!(s1.x, s0.x);
    }

    #[test]
    fn prelimit_zero_increments_ignore_sigma() {
        let noise = enumerate_shell(2, 1.0).unwrap();
        let params = SimParams::prelimit(2, 1.0, 2.0, 3.0);
        let dw = vec![0.0; noise.len()];
        let dt = 0.02;
        let s0 = PolymerState::new(Vec2::new(0.3, 4.0), Vec2::new(1.0, 1.0));
        let inc = PrelimitIncrements { modes: &dw, thermal: Vec2::ZERO };
        let s1 = step_prelimit(s0, &noise, &params, inc, dt, &mut TrigTable::default()).unwrap();
        let h = dt / params.beta;
        assert!((s1.r - s0.r * (1.0 - h + 0.5 * h * h)).norm() < 1e-15);
        assert_eq!(s1.x, s0.x);
    }

    #[test]
    fn limit_pure_decay() {
        let params = SimParams::limit(0.0, 2.0, 0.0);
        let s0 = PolymerState::new(Vec2::new(0.1, 0.2), Vec2::new(2.0, -1.0));
        let inc = LimitIncrements { stretch: Vec2::new(0.5, 0.5), thermal: Vec2::new(0.5, 0.5) };
        let s1 = step_limit(s0, &params, inc, 0.1).unwrap();
        assert_eq!(s1.r, s0.r * (1.0 - 0.05));
        assert_eq!(s1.x, s0.x);
    }

    #[test]
    fn limit_at_origin_only_thermal_acts() {
        let params = SimParams::limit(3.0, 1.0, 0.5);
        let s0 = PolymerState::new(Vec2::ZERO, Vec2::ZERO);
        let inc = LimitIncrements { stretch: Vec2::new(10.0, -10.0), thermal: Vec2::new(0.1, 0.2) };
        let s1 = step_limit(s0, &params, inc, 0.01).unwrap();
        let expected = Vec2::new(0.1, 0.2) * (std::f64::consts::SQRT_2 * 0.5);
        assert!((s1.r - expected).norm() < 1e-16);
    }

    #[test]
    fn blowup_is_reported() {
        let params = SimParams::limit(1.0, 1.0, 1.0);
        let s0 = PolymerState::new(Vec2::ZERO, Vec2::new(f64::MAX, f64::MAX));
        let inc = LimitIncrements { stretch: Vec2::new(1.0, 1.0), thermal: Vec2::ZERO };
        assert_eq!(step_limit(s0, &params, inc, 0.01), Err(NonFiniteState));
    }
}
