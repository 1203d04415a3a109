//! Shell-structured transport noise on the torus.
//!
//! The ensemble holds one divergence-free Fourier mode per lattice vector `k`
//! with `N <= |k| <= 2N`, amplitude `θ_k = a / |k|²`, and phase `cos k·x` on
//! the half lattice `K₊ = K₊₊ ∪ K₊₋` and `sin k·x` on `K₋`. Every lattice sum
//! runs over the modes in canonical order (by `|k|²`, then lexicographically
//! by `k`) with compensated summation, so correctors are reproducible bit for
//! bit regardless of how the work is split across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kahan::deterministic_sum;
use crate::tensor::{Tensor2, Vec2};

/// Largest shell index accepted; the ensemble grows like `3πN²`.
pub const MAX_SHELL: u32 = 4096;

/// Tolerance for positive-semidefiniteness of lattice-sum covariances.
pub const TOL_PSD: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    /// `k₁ >= 0, k₂ > 0`
    PlusPlus,
    /// `k₁ < 0, k₂ >= 0`
    MinusPlus,
    /// `k₁ <= 0, k₂ < 0`
    MinusMinus,
    /// `k₁ > 0, k₂ <= 0`
    PlusMinus,
}

impl Quadrant {
    /// Quadrant of a nonzero lattice vector; `None` for the origin.
    pub fn of(k: [i64; 2]) -> Option<Quadrant> {
        let [k1, k2] = k;
        match (k1, k2) {
            (0, 0) => None,
            _ if k1 >= 0 && k2 > 0 => Some(Quadrant::PlusPlus),
            _ if k1 < 0 && k2 >= 0 => Some(Quadrant::MinusPlus),
            _ if k1 <= 0 && k2 < 0 => Some(Quadrant::MinusMinus),
            _ => Some(Quadrant::PlusMinus),
        }
    }

    /// Membership in `K₊ = K₊₊ ∪ K₊₋`.
    pub fn in_plus_half(self) -> bool {
        matches!(self, Quadrant::PlusPlus | Quadrant::PlusMinus)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cos,
    Sin,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Cos => "cos",
            Phase::Sin => "sin",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellMode {
    pub k: [i32; 2],
    pub theta: f64,
    pub phase: Phase,
}

impl ShellMode {
    pub fn norm_sq(&self) -> i64 {
        let [k1, k2] = self.k.map(i64::from);
        k1 * k1 + k2 * k2
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn wavevector(&self) -> Vec2 {
        Vec2::new(self.k[0] as f64, self.k[1] as f64)
    }

    pub fn quadrant(&self) -> Quadrant {
        Quadrant::of(self.k.map(i64::from)).expect("shell modes are nonzero")
    }

    fn phase_arg(&self, x: Vec2) -> f64 {
        self.wavevector().dot(x)
    }

    /// `σ_k(x) = θ k⊥/|k| · cos k·x` (or `sin` on `K₋`).
    pub fn sigma(&self, x: Vec2) -> Vec2 {
        let arg = self.phase_arg(x);
        let wave = match self.phase {
            Phase::Cos => arg.cos(),
            Phase::Sin => arg.sin(),
        };
        self.wavevector().perp() * (self.theta * wave / self.norm())
    }

    /// Jacobian `∂ᵢσ^α` stored as row `α`, column `i`.
    pub fn gradient(&self, x: Vec2) -> Tensor2 {
        let arg = self.phase_arg(x);
        let wave = match self.phase {
            Phase::Cos => -arg.sin(),
            Phase::Sin => arg.cos(),
        };
        let k = self.wavevector();
        Tensor2::outer(k.perp(), k) * (self.theta * wave / self.norm())
    }

    /// Stretching vector `(∇σ_k(x)) r`.
    pub fn grad_sigma_r(&self, x: Vec2, r: Vec2) -> Vec2 {
        self.gradient(x).apply(r)
    }
}

/// A `k ∈ K₊` together with its partner `-k ∈ K₋`; the two share one
/// evaluation of `e^{ik·x}` in the stepping kernel.
#[derive(Clone, Copy, Debug)]
struct ModePair {
    k1: f64,
    k2: f64,
    i1: i32,
    i2: i32,
    coef: f64,
    plus: usize,
    minus: usize,
}

#[derive(Clone, Debug)]
pub struct NoiseModel {
    n: u32,
    a: f64,
    modes: Vec<ShellMode>,
    pairs: Vec<ModePair>,
}

/// Build the shell ensemble `{σ_k : N <= |k| <= 2N}` in canonical order.
pub fn enumerate_shell(n: u32, a: f64) -> Result<NoiseModel> {
    if n == 0 || n > MAX_SHELL {
        return Err(Error::invalid("N", format!("must be in 1..={MAX_SHELL}, got {n}")));
    }
    crate::error::require_non_negative("a", a)?;

    let n = i64::from(n);
    let (lo, hi) = (n * n, 4 * n * n);
    let mut keys: Vec<(i64, i32, i32)> = Vec::new();
    for k1 in -2 * n..=2 * n {
        for k2 in -2 * n..=2 * n {
            let n2 = k1 * k1 + k2 * k2;
            if (lo..=hi).contains(&n2) {
                keys.push((n2, k1 as i32, k2 as i32));
            }
        }
    }
    keys.sort_unstable();

    let modes: Vec<ShellMode> = keys
        .iter()
        .map(|&(n2, k1, k2)| {
            let q = Quadrant::of([k1.into(), k2.into()]).expect("origin excluded");
            ShellMode {
                k: [k1, k2],
                theta: a / n2 as f64,
                phase: if q.in_plus_half() { Phase::Cos } else { Phase::Sin },
            }
        })
        .collect();

    let index_of = |k: [i32; 2]| -> usize {
        let key = (i64::from(k[0]).pow(2) + i64::from(k[1]).pow(2), k[0], k[1]);
        keys.binary_search(&key).expect("shell is symmetric under k -> -k")
    };
    let pairs = modes
        .iter()
        .enumerate()
        .filter(|(_, m)| m.phase == Phase::Cos)
        .map(|(plus, m)| ModePair {
            k1: m.k[0] as f64,
            k2: m.k[1] as f64,
            i1: m.k[0],
            i2: m.k[1],
            coef: m.theta / m.norm(),
            plus,
            minus: index_of([-m.k[0], -m.k[1]]),
        })
        .collect();

    Ok(NoiseModel {
        n: n as u32,
        a,
        modes,
        pairs,
    })
}

/// Reusable table of `cos/sin(m x₁)`, `cos/sin(m x₂)` for `|m| <= 2N`.
#[derive(Clone, Debug, Default)]
pub struct TrigTable {
    c1: Vec<f64>,
    s1: Vec<f64>,
    c2: Vec<f64>,
    s2: Vec<f64>,
}

impl TrigTable {
    fn fill(&mut self, x: Vec2, kmax: i32) {
        let len = (2 * kmax + 1) as usize;
        for buf in [&mut self.c1, &mut self.s1, &mut self.c2, &mut self.s2] {
            buf.resize(len, 0.0);
        }
        for m in -kmax..=kmax {
            let idx = (m + kmax) as usize;
            let (s, c) = (m as f64 * x.x).sin_cos();
            self.s1[idx] = s;
            self.c1[idx] = c;
            let (s, c) = (m as f64 * x.y).sin_cos();
            self.s2[idx] = s;
            self.c2[idx] = c;
        }
    }
}

impl NoiseModel {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn modes(&self) -> &[ShellMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// One velocity vector per mode, in mode order.
    pub fn sigma_eval(&self, x: Vec2) -> Vec<Vec2> {
        self.modes.iter().map(|m| m.sigma(x)).collect()
    }

    /// One stretching vector `(∇σ_k(x)) r` per mode, in mode order.
    pub fn grad_sigma_r_eval(&self, x: Vec2, r: Vec2) -> Vec<Vec2> {
        self.modes.iter().map(|m| m.grad_sigma_r(x, r)).collect()
    }

    /// Scalar corrector `α_N = ½ Σ_{K₊₊} θ_k²`.
    pub fn alpha_n(&self) -> f64 {
        let [s] = deterministic_sum(&self.modes, |m| {
            if m.quadrant() == Quadrant::PlusPlus {
                [0.5 * m.theta * m.theta]
            } else {
                [0.0]
            }
        });
        s
    }

    /// Spatial covariance `Q(z) = Σ_k σ_k(z) ⊗ σ_k(0)`.
    pub fn covariance_q(&self, z: Vec2) -> Tensor2 {
        let origin = Vec2::ZERO;
        Tensor2::from_array(deterministic_sum(&self.modes, |m| {
            Tensor2::outer(m.sigma(z), m.sigma(origin)).to_array()
        }))
    }

    /// Exact stretching covariance `Σ_k (∇σ_k r) ⊗ (∇σ_k r)`, which reduces
    /// to `Σ_{K₊} θ_k² (k·r)² k⊥⊗k⊥ / |k|²` independently of `x`.
    pub fn stretching_covariance_sum(&self, r: Vec2) -> Tensor2 {
        Tensor2::from_array(deterministic_sum(&self.modes, |m| {
            if m.phase == Phase::Sin {
                return [0.0; 4];
            }
            let k = m.wavevector();
            let kp = k.perp();
            let w = m.theta * m.theta * k.dot(r).powi(2) / m.norm_sq() as f64;
            (Tensor2::outer(kp, kp) * w).to_array()
        }))
    }

    /// The same covariance assembled from the per-mode stretching vectors at
    /// the point `x`.
    pub fn stretching_covariance_at(&self, x: Vec2, r: Vec2) -> Tensor2 {
        Tensor2::from_array(deterministic_sum(&self.modes, |m| {
            let v = m.grad_sigma_r(x, r);
            Tensor2::outer(v, v).to_array()
        }))
    }

    /// Noise-weighted field sums at `x` for increments `dw` (one per mode, in
    /// mode order): returns `Σ σ_k(x) dW_k` and the matrix `Σ ∇σ_k(x) dW_k`.
    pub fn field_sums(&self, x: Vec2, dw: &[f64], trig: &mut TrigTable) -> (Vec2, Tensor2) {
        assert_eq!(dw.len(), self.modes.len(), "one increment per mode");
        let kmax = 2 * self.n as i32;
        trig.fill(x, kmax);
        let (mut a1, mut a2) = (0.0, 0.0);
        let (mut b11, mut b12, mut b22) = (0.0, 0.0, 0.0);
        for p in &self.pairs {
            let i = (p.i1 + kmax) as usize;
            let j = (p.i2 + kmax) as usize;
            let (c1, s1, c2, s2) = (trig.c1[i], trig.s1[i], trig.c2[j], trig.s2[j]);
            let c = c1 * c2 - s1 * s2;
            let s = s1 * c2 + c1 * s2;
            let (wp, wm) = (dw[p.plus], dw[p.minus]);
            // σ_{-k}(x) = θ k⊥/|k| sin k·x and ∇σ_{-k} = θ k⊥kᵀ/|k| cos k·x.
            let vel = p.coef * (c * wp + s * wm);
            let grad = p.coef * (c * wm - s * wp);
            a1 += vel * p.k1;
            a2 += vel * p.k2;
            b11 += grad * p.k1 * p.k1;
            b12 += grad * p.k1 * p.k2;
            b22 += grad * p.k2 * p.k2;
        }
        // k⊥ = (-k₂, k₁)
        (Vec2::new(-a2, a1), Tensor2::new(-b12, -b22, b11, b12))
    }
}
