//! Closed-form objects of the limit dynamics: the stretching covariance
//! `A(r)`, its square root `Q(r)`, the angular integral `I(r)`, and the
//! rotation-invariant stationary density with its power-law tail.

use std::f64::consts::{LN_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::quad;
use crate::tensor::{Tensor2, Vec2};

/// Turbulent constant `k_T = π log 2 / 8 · a²`.
pub fn kt_turb(a: f64) -> f64 {
    PI * LN_2 / 8.0 * a * a
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    a: f64,
    beta: f64,
    sigma: f64,
    kt_turb: f64,
}

impl LimitParams {
    pub fn new(a: f64, beta: f64, sigma: f64) -> Result<Self> {
        require_non_negative("a", a)?;
        require_positive("beta", beta)?;
        require_non_negative("sigma", sigma)?;
        Ok(LimitParams {
            a,
            beta,
            sigma,
            kt_turb: kt_turb(a),
        })
    }

    /// Parameters with the intensity chosen so that `k_T β` hits `kt_beta`.
    pub fn with_kt_beta(kt_beta: f64, beta: f64, sigma: f64) -> Result<Self> {
        require_non_negative("kt_beta", kt_beta)?;
        require_positive("beta", beta)?;
        let a = (kt_beta / beta * 8.0 / (PI * LN_2)).sqrt();
        Self::new(a, beta, sigma)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn kt_turb(&self) -> f64 {
        self.kt_turb
    }

    pub fn kt_beta(&self) -> f64 {
        self.kt_turb * self.beta
    }

    /// Thermal `kT = σ² β`, the equilibrium variance per component at `a = 0`.
    pub fn thermal_kt(&self) -> f64 {
        self.sigma * self.sigma * self.beta
    }

    /// `D(ρ) = (k_T/2) ρ² + σ²`, the radial diffusivity.
    pub fn radial_diffusivity(&self, rho: f64) -> f64 {
        0.5 * self.kt_turb * rho * rho + self.sigma * self.sigma
    }
}

/// `A(r) = k_T (3|r|² I − 2 r⊗r)`.
pub fn analytic_a(r: Vec2, a: f64) -> Tensor2 {
    kt_turb(a) * (Tensor2::IDENTITY * (3.0 * r.norm_sq()) - Tensor2::outer(r, r) * 2.0)
}

/// The equivalent form `A(r) = k_T (|r|² I + 2 r⊥⊗r⊥)`.
pub fn analytic_a_perp_form(r: Vec2, a: f64) -> Tensor2 {
    let rp = r.perp();
    kt_turb(a) * (Tensor2::IDENTITY * r.norm_sq() + Tensor2::outer(rp, rp) * 2.0)
}

/// Symmetric square root of `A(r)`:
/// `Q(r) = a √(π log 2)/(2√2) · (r⊗r + √3 r⊥⊗r⊥) / |r|`, with `Q(0) = 0`.
pub fn analytic_q(r: Vec2, a: f64) -> Tensor2 {
    let norm = r.norm();
    if norm == 0.0 {
        return Tensor2::ZERO;
    }
    let c = a * (PI * LN_2).sqrt() / (2.0 * SQRT_2);
    let rp = r.perp();
    (Tensor2::outer(r, r) + Tensor2::outer(rp, rp) * 3f64.sqrt()) * (c / norm)
}

/// `Q(r) w` without forming the matrix; the hot path of the limit stepper.
#[inline]
pub(crate) fn apply_q(r: Vec2, w: Vec2, a: f64) -> Vec2 {
    let norm_sq = r.norm_sq();
    if norm_sq == 0.0 {
        return Vec2::ZERO;
    }
    const SQRT_3: f64 = 1.732_050_807_568_877_2;
    let c = a * (PI * LN_2).sqrt() / (2.0 * SQRT_2) / norm_sq.sqrt();
    let rp = r.perp();
    r * (c * r.dot(w)) + rp * (c * SQRT_3 * rp.dot(w))
}

/// Angular integral `I(r) = ∫ (r₁cosφ + r₂sinφ)² [[sin²φ, −sinφcosφ], [−sinφcosφ, cos²φ]] dφ`
/// over the half circle `(0, π/2] ∪ (3π/2, 2π]`, in closed form.
pub fn appendix_i(r: Vec2) -> Tensor2 {
    let n2 = r.norm_sq();
    let off = -2.0 * r.x * r.y;
    Tensor2::new(3.0 * n2 - 2.0 * r.x * r.x, off, off, 3.0 * n2 - 2.0 * r.y * r.y) * (PI / 8.0)
}

/// Density exponent `p = 2/(k_T β)` of the stationary tail `|r|^{-p}`.
pub fn tail_exponent(params: &LimitParams) -> f64 {
    2.0 / params.kt_beta()
}

/// The rotation-invariant stationary density
/// `g(ρ) = C (σ² + (k_T/2) ρ²)^{−1/(k_T β)}`, parametrized by `g0 = g(0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryDensity {
    params: LimitParams,
    g0: f64,
    normalized: bool,
}

const NORM_ABS_TOL: f64 = 1e-12;
const NORM_REL_TOL: f64 = 1e-14;

impl StationaryDensity {
    /// Density with prescribed value at the origin.
    pub fn with_g0(params: LimitParams, g0: f64) -> Result<Self> {
        require_positive("sigma", params.sigma)?;
        require_non_negative("g0", g0)?;
        Ok(StationaryDensity {
            params,
            g0,
            normalized: false,
        })
    }

    /// Probability density on the plane, `2π ∫ g(ρ) ρ dρ = 1`.
    pub fn normalized(params: LimitParams) -> Result<Self> {
        require_positive("sigma", params.sigma)?;
        if params.kt_beta() >= 1.0 {
            return Err(Error::NonNormalizable {
                kt_beta: params.kt_beta(),
            });
        }
        let unit = StationaryDensity::with_g0(params, 1.0)?;
        let mass = unit.radial_moment(1);
        Ok(StationaryDensity {
            params,
            g0: 1.0 / mass,
            normalized: true,
        })
    }

    pub fn params(&self) -> &LimitParams {
        &self.params
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// The constant `C = g(0) σ^{2/(k_T β)}` of the closed form.
    pub fn prefactor(&self) -> f64 {
        self.g0 * self.params.sigma.powf(2.0 / self.params.kt_beta())
    }

    /// Natural log of `g(ρ)/g(0)`.
    pub fn log_shape(&self, rho: f64) -> f64 {
        let p = &self.params;
        let s2 = p.sigma * p.sigma;
        if p.kt_turb == 0.0 {
            -rho * rho / (2.0 * s2 * p.beta)
        } else {
            -(0.5 * p.kt_turb * rho * rho / s2).ln_1p() / p.kt_beta()
        }
    }

    pub fn density(&self, rho: f64) -> f64 {
        self.g0 * self.log_shape(rho).exp()
    }

    /// `g'(ρ) / g(ρ)`, differentiated from the closed form.
    pub fn log_derivative(&self, rho: f64) -> f64 {
        let p = &self.params;
        let s2 = p.sigma * p.sigma;
        if p.kt_turb == 0.0 {
            -rho / (s2 * p.beta)
        } else {
            -(p.kt_turb * rho) / (p.kt_beta() * (s2 + 0.5 * p.kt_turb * rho * rho))
        }
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        self.density(rho) * self.log_derivative(rho)
    }

    /// Scale separating the Gaussian core from the power-law tail.
    pub fn crossover_radius(&self) -> f64 {
        let p = &self.params;
        if p.kt_turb > 0.0 {
            p.sigma * (2.0 / p.kt_turb).sqrt()
        } else {
            p.sigma * p.beta.sqrt()
        }
    }

    /// `2π ∫₀^∞ ρ^power g(ρ) dρ` by adaptive quadrature split at the crossover
    /// radius. Diverges (returns `∞`) when the tail is too heavy.
    pub fn radial_moment(&self, power: i32) -> f64 {
        let p = &self.params;
        if p.kt_turb > 0.0 && tail_exponent(p) <= f64::from(power) + 1.0 {
            return f64::INFINITY;
        }
        let rho_star = self.crossover_radius();
        let f = |rho: f64| rho.powi(power) * self.density(rho);
        let core = quad::integrate(f, 0.0, rho_star, NORM_ABS_TOL, NORM_REL_TOL).value;
        // With ρ = ρ* e^s the power-law tail decays exponentially in s.
        let tail = quad::integrate_to_infinity(
            |s| {
                let rho = rho_star * s.exp();
                rho * f(rho)
            },
            0.0,
            NORM_ABS_TOL,
            NORM_REL_TOL,
        )
        .value;
        2.0 * PI * (core + tail)
    }

    /// `E|R|²` under the normalized density.
    pub fn mean_square_radius(&self) -> f64 {
        self.radial_moment(3) / self.radial_moment(1)
    }
}

pub fn stationary_density(rho: f64, sd: &StationaryDensity) -> f64 {
    sd.density(rho)
}

/// Relative residual of `((k_T/2)ρ + σ²/ρ) g'(ρ) + g(ρ)/β = 0` for the
/// closed form.
pub fn zero_flux_residual(params: &LimitParams, rho: f64) -> f64 {
    let sd = StationaryDensity {
        params: *params,
        g0: 1.0,
        normalized: false,
    };
    // Divided through by g, so the check survives underflow of g itself.
    let lhs = (0.5 * params.kt_turb * rho + params.sigma * params.sigma / rho) * sd.log_derivative(rho);
    (lhs * params.beta + 1.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kt_value() {
        assert!((kt_turb(1.0) - 0.272_198_261_287_950_4).abs() < 1e-15);
    }

    #[test]
    fn a_on_axis() {
        let a = analytic_a(Vec2::new(1.0, 0.0), 1.0);
        let kt = kt_turb(1.0);
        assert!((a - Tensor2::diag(kt, 3.0 * kt)).max_abs() < 1e-15);
        assert_eq!(analytic_a(Vec2::ZERO, 1.0), Tensor2::ZERO);
    }

    #[test]
    fn q_on_axis_and_at_origin() {
        let c = (PI * LN_2).sqrt() / (2.0 * SQRT_2);
        let q = analytic_q(Vec2::new(1.0, 0.0), 1.0);
        assert!((q - Tensor2::diag(c, 3f64.sqrt() * c)).max_abs() < 1e-15);
        assert_eq!(analytic_q(Vec2::ZERO, 2.0), Tensor2::ZERO);
        let a = analytic_a(Vec2::new(1.0, 0.0), 1.0);
        assert!((q.matmul(&q) - a).max_abs() < 1e-15);
    }

    #[test]
    fn apply_q_matches_matrix() {
        let r = Vec2::new(0.3, -1.7);
        let w = Vec2::new(-0.4, 0.9);
        let direct = analytic_q(r, 1.3).apply(w);
        assert!((apply_q(r, w, 1.3) - direct).norm() < 1e-15);
    }

    #[test]
    fn i_on_axis() {
        let i = appendix_i(Vec2::new(1.0, 0.0));
        assert!((i - Tensor2::diag(PI / 8.0, 3.0 * PI / 8.0)).max_abs() <= 1e-14);
        assert_eq!(appendix_i(Vec2::ZERO), Tensor2::ZERO);
    }

    #[test]
    fn exponent_examples() {
        let p = LimitParams::new(1.0, 1.0, 1.0).unwrap();
        assert!((tail_exponent(&p) - 7.347_585_508).abs() < 1e-6);
        let p2 = LimitParams::new(1.0, 2.0, 1.0).unwrap();
        assert!((tail_exponent(&p2) - tail_exponent(&p) / 2.0).abs() < 1e-14);
        let p3 = LimitParams::with_kt_beta(0.4, 1.0, 1.0).unwrap();
        assert!((tail_exponent(&p3) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn density_at_origin_is_g0() {
        let p = LimitParams::new(1.0, 1.0, 1.3).unwrap();
        let sd = StationaryDensity::with_g0(p, 2.5).unwrap();
        assert_eq!(sd.density(0.0), 2.5);
        // C (σ²)^{-1/(kβ)} = g0
        let c = sd.prefactor();
        let back = c * (1.3f64 * 1.3).powf(-1.0 / p.kt_beta());
        assert!((back - 2.5).abs() < 1e-12);
    }

    #[test]
    fn non_normalizable_regime() {
        let p = LimitParams::with_kt_beta(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(StationaryDensity::normalized(p), Err(Error::NonNormalizable { .. })));
        let p = LimitParams::with_kt_beta(1.5, 1.0, 1.0).unwrap();
        assert!(StationaryDensity::normalized(p).is_err());
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(LimitParams::new(-1.0, 1.0, 1.0).is_err());
        assert!(LimitParams::new(1.0, 0.0, 1.0).is_err());
        assert!(LimitParams::new(1.0, 1.0, f64::NAN).is_err());
    }
}
