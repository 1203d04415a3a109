//! Lagrangian Monte Carlo for the polymer pair `(X, R)`: the pre-limit
//! Stratonovich system driven by the shell noise, the limit Itô system
//! driven by `Q(R)`, ensemble statistics and the structure-tensor moment ODE.

mod ensemble;
mod moments;
mod step;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::tensor::{Tensor2, Vec2};

pub use ensemble::{run_ensemble, stability_dt, EnsembleStats, QUANTILE_LEVELS};
pub use moments::{isotropic_fixed_point, moment_ode_solve, moment_rhs, MomentTrajectory};
pub use step::{step_limit, step_prelimit, LimitIncrements, NonFiniteState, PrelimitIncrements};

/// Reduce a point to the fundamental cell `[0, 2π)²`.
pub fn wrap_torus(x: Vec2) -> Vec2 {
    fn wrap(v: f64) -> f64 {
        let w = v.rem_euclid(TAU);
        // rem_euclid can round up to exactly 2π for tiny negative inputs
        if w >= TAU {
            0.0
        } else {
            w
        }
    }
    Vec2::new(wrap(x.x), wrap(x.y))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolymerState {
    /// Center of mass on the torus, radians.
    pub x: Vec2,
    /// End-to-end vector.
    pub r: Vec2,
}

impl PolymerState {
    pub fn new(x: Vec2, r: Vec2) -> Self {
        PolymerState { x: wrap_torus(x), r }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.r.is_finite()
    }
}

/// One term `c cos(m·x) + s sin(m·x)` of a stream function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamTerm {
    pub m: [i32; 2],
    pub cos_amp: f64,
    pub sin_amp: f64,
}

/// Large-scale velocity `u_L = ∇⊥ψ = (−∂₂ψ, ∂₁ψ)` for a trigonometric
/// polynomial `ψ`, divergence-free by construction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VelocityField {
    pub terms: Vec<StreamTerm>,
}

impl VelocityField {
    pub fn zero() -> Self {
        VelocityField::default()
    }

    /// Cellular flow with `ψ(x) = sin x₁ sin x₂`.
    pub fn cellular() -> Self {
        VelocityField {
            terms: vec![
                StreamTerm { m: [1, -1], cos_amp: 0.5, sin_amp: 0.0 },
                StreamTerm { m: [1, 1], cos_amp: -0.5, sin_amp: 0.0 },
            ],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.cos_amp == 0.0 && t.sin_amp == 0.0)
    }

    pub fn stream(&self, x: Vec2) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let (s, c) = (t.m[0] as f64 * x.x + t.m[1] as f64 * x.y).sin_cos();
                t.cos_amp * c + t.sin_amp * s
            })
            .sum()
    }

    pub fn velocity(&self, x: Vec2) -> Vec2 {
        let mut grad_psi = Vec2::ZERO;
        for t in &self.terms {
            let m = Vec2::new(t.m[0] as f64, t.m[1] as f64);
            let (s, c) = m.dot(x).sin_cos();
            grad_psi += m * (t.sin_amp * c - t.cos_amp * s);
        }
        Vec2::new(-grad_psi.y, grad_psi.x)
    }

    /// `∂ⱼ uᵢ` at row `i`, column `j`.
    pub fn gradient(&self, x: Vec2) -> Tensor2 {
        let mut hess = Tensor2::ZERO;
        for t in &self.terms {
            let m = Vec2::new(t.m[0] as f64, t.m[1] as f64);
            let (s, c) = m.dot(x).sin_cos();
            hess += Tensor2::outer(m, m) * -(t.cos_amp * c + t.sin_amp * s);
        }
        Tensor2::new(-hess.yx, -hess.yy, hess.xx, hess.xy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Model {
    /// Shell noise with index `n` (Stratonovich, Heun).
    Prelimit { n: u32 },
    /// Limit SDE with diffusion `Q(R)` (Itô, Euler–Maruyama).
    Limit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub model: Model,
    pub a: f64,
    pub beta: f64,
    pub sigma: f64,
    /// Requested step; the run may refine it (see [`stability_dt`]).
    pub dt: f64,
    pub t_final: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub velocity: VelocityField,
    /// Initial end-to-end vector, shared by all paths.
    pub r0: Vec2,
    /// Initial center of mass; `None` draws it uniformly per path.
    pub x0: Option<Vec2>,
    /// Number of output intervals on the uniform statistics grid.
    pub n_out: usize,
    /// How many times the whole ensemble may be rerun with half the step
    /// after a blowup before giving up.
    pub max_halvings: u32,
}

impl SimParams {
    pub fn limit(a: f64, beta: f64, sigma: f64) -> Self {
        SimParams {
            model: Model::Limit,
            a,
            beta,
            sigma,
            dt: beta / 50.0,
            t_final: 1.0,
            n_paths: 1000,
            seed: 0,
            velocity: VelocityField::zero(),
            r0: Vec2::ZERO,
            x0: None,
            n_out: 10,
            max_halvings: 2,
        }
    }

    pub fn prelimit(n: u32, a: f64, beta: f64, sigma: f64) -> Self {
        SimParams {
            model: Model::Prelimit { n },
            ..SimParams::limit(a, beta, sigma)
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("a", self.a)?;
        require_positive("beta", self.beta)?;
        require_non_negative("sigma", self.sigma)?;
        require_positive("dt", self.dt)?;
        require_positive("t_final", self.t_final)?;
        if self.dt > self.t_final {
            return Err(Error::invalid("dt", format!("{} exceeds t_final {}", self.dt, self.t_final)));
        }
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths", "must be positive"));
        }
        if self.n_out == 0 {
            return Err(Error::invalid("n_out", "must be positive"));
        }
        if !self.r0.is_finite() {
            return Err(Error::invalid("r0", "must be finite"));
        }
        if let Some(x) = self.x0 {
            if !x.is_finite() {
                return Err(Error::invalid("x0", "must be finite"));
            }
        }
        if let Model::Prelimit { n } = self.model {
            if n == 0 || n > crate::shell_noise::MAX_SHELL {
                return Err(Error::invalid("N", format!("must be in 1..={}", crate::shell_noise::MAX_SHELL)));
            }
        }
        Ok(())
    }
}
