//! Rotation-invariant reduction of the limit Fokker–Planck equation with
//! `u_L = 0`:
//!
//! ```text
//! ∂ₜg = (1/ρ) ∂_ρ( ρ [ D(ρ) ∂_ρ g + (ρ/β) g ] ),   D(ρ) = (k_T/2) ρ² + σ²
//! ```
//!
//! discretized by finite volumes on a linear-then-logarithmic radial grid.
//! Face fluxes are written relative to the closed-form equilibrium `g_s`,
//! `F = 2πρ D g_s ∂_ρ(g/g_s)`, with the geometric mean of `g_s` at the face.
//! Sampled equilibria are then exact discrete fixed points, the update matrix
//! is an M-matrix (positivity, L¹ contraction), and mass is conserved to
//! rounding.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::covariance::{LimitParams, StationaryDensity};
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::kahan::compensated_sum;

pub const DEFAULT_CELLS: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    edges: Vec<f64>,
    centers: Vec<f64>,
    volumes: Vec<f64>,
}

impl RadialGrid {
    /// Uniform cells below `rho_lin`, geometric cells above it, with the two
    /// spacings matched at `rho_lin`.
    pub fn new(rho_lin: f64, rho_max: f64, cells: usize) -> Result<Self> {
        require_positive("rho_max", rho_max)?;
        require_positive("rho_lin", rho_lin)?;
        if cells < 2 {
            return Err(Error::invalid("cells", "need at least 2 cells"));
        }
        let mut edges = Vec::with_capacity(cells + 1);
        if rho_lin >= rho_max {
            edges.extend((0..=cells).map(|i| rho_max * i as f64 / cells as f64));
        } else {
            let span = (rho_max / rho_lin).ln();
            let n_log = ((cells as f64 * span / (1.0 + span)).round() as usize).clamp(1, cells - 1);
            let n_lin = cells - n_log;
            edges.extend((0..n_lin).map(|i| rho_lin * i as f64 / n_lin as f64));
            edges.extend((0..=n_log).map(|j| rho_lin * (span * j as f64 / n_log as f64).exp()));
        }
        *edges.last_mut().expect("non-empty") = rho_max;
        let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let volumes = edges.windows(2).map(|w| PI * (w[1] * w[1] - w[0] * w[0])).collect();
        Ok(RadialGrid { edges, centers, volumes })
    }

    /// Default grid: `ρ_max = 40 σ√β`, linear below `2 σ√β`, 1024 cells.
    pub fn for_params(params: &LimitParams) -> Result<Self> {
        Self::for_params_with_cells(params, DEFAULT_CELLS)
    }

    pub fn for_params_with_cells(params: &LimitParams, cells: usize) -> Result<Self> {
        let scale = params.sigma() * params.beta().sqrt();
        Self::new(2.0 * scale, 40.0 * scale, cells)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn rho_max(&self) -> f64 {
        *self.edges.last().expect("non-empty")
    }

    /// `2π ∫ ρ³ dρ` over each cell.
    fn second_moment_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * PI * (w[1].powi(4) - w[0].powi(4)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    pub grid: RadialGrid,
    /// One value per cell; samples at the cell centers.
    pub values: Vec<f64>,
    pub time: f64,
}

impl RadialField {
    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64, time: f64) -> Self {
        let values = grid.centers.iter().map(|&r| f(r)).collect();
        RadialField { grid, values, time }
    }

    /// Normalized Gaussian with variance `var` per component.
    pub fn gaussian(grid: RadialGrid, var: f64) -> Self {
        Self::from_fn(grid, |r| (-r * r / (2.0 * var)).exp() / (2.0 * PI * var), 0.0)
    }

    /// `Σ values · volumes`.
    pub fn mass(&self) -> f64 {
        compensated_sum(self.values.iter().zip(&self.grid.volumes).map(|(g, v)| g * v))
    }

    /// `∫ |r|² g` over the grid.
    pub fn second_moment(&self) -> f64 {
        compensated_sum(self.values.iter().zip(self.grid.second_moment_weights()).map(|(g, w)| g * w))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn normalized(mut self) -> Self {
        let m = self.mass();
        for v in &mut self.values {
            *v /= m;
        }
        self
    }
}

/// Integrate `((k_T/2)ρ + σ²/ρ) g' = −g/β` outward from `g(0) = g0` with
/// RK4, returning `g` at the cell centers. The equation is linear, so it is
/// advanced in the form `(ln g)' = −ρ/(β D(ρ))`, which keeps full relative
/// accuracy deep in the tail.
pub fn stationary_ode_solve(params: &LimitParams, grid: &RadialGrid, g0: f64) -> Result<RadialField> {
    require_positive("sigma", params.sigma())?;
    require_non_negative("g0", g0)?;
    let beta = params.beta();
    let rate = |rho: f64| rho / (beta * params.radial_diffusivity(rho));
    let rho_star = if params.kt_turb() > 0.0 {
        params.sigma() * (2.0 / params.kt_turb()).sqrt()
    } else {
        f64::INFINITY
    };

    let mut values = Vec::with_capacity(grid.len());
    let (mut rho, mut log_g) = (0.0, 0.0);
    for &target in grid.centers() {
        let span = target - rho;
        let peak = rate(rho).max(rate(target)).max(if (rho..=target).contains(&rho_star) {
            rate(rho_star)
        } else {
            0.0
        });
        let substeps = ((span * peak / 0.01).ceil() as usize).max(4);
        let h = span / substeps as f64;
        for _ in 0..substeps {
            let k1 = -rate(rho);
            let k23 = -rate(rho + 0.5 * h);
            let k4 = -rate(rho + h);
            log_g += h / 6.0 * (k1 + 4.0 * k23 + k4);
            rho += h;
        }
        rho = target;
        values.push(g0 * log_g.exp());
    }
    Ok(RadialField {
        grid: grid.clone(),
        values,
        time: 0.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stepping {
    Explicit,
    /// Backward Euler; unconditionally stable.
    Implicit,
}

/// Precomputed face couplings. The net mass flow from cell `f` into cell
/// `f − 1` across face `f` is `inward[f] g[f] − outward[f] g[f−1]`; the
/// faces at `ρ = 0` and `ρ = ρ_max` carry no flux.
#[derive(Clone, Debug)]
pub struct FpOperator {
    inward: Vec<f64>,
    outward: Vec<f64>,
    volumes: Vec<f64>,
    cfl_dt: f64,
}

/// `ln g_s(b) − ln g_s(a)` for the closed-form equilibrium.
fn log_ratio(params: &LimitParams, a: f64, b: f64) -> f64 {
    let s2 = params.sigma() * params.sigma();
    let kt = params.kt_turb();
    let d2 = b * b - a * a;
    if kt == 0.0 {
        -d2 / (2.0 * s2 * params.beta())
    } else {
        -(0.5 * kt * d2 / (s2 + 0.5 * kt * a * a)).ln_1p() / params.kt_beta()
    }
}

impl FpOperator {
    pub fn new(params: &LimitParams, grid: &RadialGrid) -> Result<Self> {
        require_positive("sigma", params.sigma())?;
        let m = grid.len();
        let (edges, centers) = (grid.edges(), grid.centers());
        let mut inward = vec![0.0; m + 1];
        let mut outward = vec![0.0; m + 1];
        let mut spec_cfl = f64::INFINITY;
        for f in 1..m {
            let (lo, hi) = (centers[f - 1], centers[f]);
            let d_face = 0.5 * (params.radial_diffusivity(lo) + params.radial_diffusivity(hi));
            let gap = hi - lo;
            let w = 2.0 * PI * edges[f] * d_face / gap;
            let half = 0.5 * log_ratio(params, lo, hi);
            inward[f] = w * (-half).exp();
            outward[f] = w * half.exp();
            spec_cfl = spec_cfl.min(0.4 * gap * gap / (2.0 * d_face));
        }
        let volumes = grid.volumes().to_vec();
        let max_rate = (0..m)
            .map(|i| (outward[i + 1] + inward[i]) / volumes[i])
            .fold(0.0, f64::max);
        let cfl_dt = spec_cfl.min(0.9 / max_rate);
        Ok(FpOperator {
            inward,
            outward,
            volumes,
            cfl_dt,
        })
    }

    /// Largest stable explicit step.
    pub fn cfl_dt(&self) -> f64 {
        self.cfl_dt
    }

    fn explicit_step(&self, g: &mut [f64], flux: &mut [f64], dt: f64) {
        let m = g.len();
        for f in 1..m {
            flux[f] = self.inward[f] * g[f] - self.outward[f] * g[f - 1];
        }
        flux[0] = 0.0;
        flux[m] = 0.0;
        for i in 0..m {
            g[i] += dt / self.volumes[i] * (flux[i + 1] - flux[i]);
        }
    }

    fn implicit_step(&self, g: &mut [f64], scratch: &mut [f64], dt: f64) {
        // Thomas algorithm on
        //   (V/dt + outward[i+1] + inward[i]) g_i − inward[i+1] g_{i+1} − outward[i] g_{i−1} = V/dt g_i⁰
        let m = g.len();
        let c = scratch;
        let mut prev_c = 0.0;
        let mut prev_d = 0.0;
        for i in 0..m {
            let vdt = self.volumes[i] / dt;
            let diag = vdt + self.outward[i + 1] + self.inward[i];
            let lower = -self.outward[i];
            let upper = -self.inward[i + 1];
            let denom = diag - lower * prev_c;
            c[i] = upper / denom;
            let d = (vdt * g[i] - lower * prev_d) / denom;
            g[i] = d;
            prev_c = c[i];
            prev_d = d;
        }
        for i in (0..m - 1).rev() {
            g[i] -= c[i] * g[i + 1];
        }
    }
}

/// Evolve `initial` up to the absolute time `t_final` with steps no larger
/// than `dt`.
pub fn fp_radial_evolve(initial: &RadialField, params: &LimitParams, dt: f64, t_final: f64, stepping: Stepping) -> Result<RadialField> {
    let mut out = fp_radial_checkpoints(initial, params, dt, &[t_final], stepping)?;
    Ok(out.pop().expect("one checkpoint"))
}

/// Evolve through increasing absolute `checkpoints`, returning the field at
/// each.
pub fn fp_radial_checkpoints(
    initial: &RadialField,
    params: &LimitParams,
    dt: f64,
    checkpoints: &[f64],
    stepping: Stepping,
) -> Result<Vec<RadialField>> {
    require_positive("dt", dt)?;
    let op = FpOperator::new(params, &initial.grid)?;
    if stepping == Stepping::Explicit && dt > op.cfl_dt() {
        return Err(Error::Cfl {
            dt,
            suggested: op.cfl_dt(),
        });
    }
    let mut field = initial.clone();
    let mut scratch = vec![0.0; field.values.len() + 1];
    let mut out = Vec::with_capacity(checkpoints.len());
    for &target in checkpoints {
        if !(target >= field.time) || !target.is_finite() {
            return Err(Error::invalid("checkpoints", format!("{target} precedes t = {}", field.time)));
        }
        let span = target - field.time;
        let steps = (span / dt).ceil() as usize;
        if steps > 0 {
            let h = span / steps as f64;
            for _ in 0..steps {
                match stepping {
                    Stepping::Explicit => op.explicit_step(&mut field.values, &mut scratch, h),
                    Stepping::Implicit => op.implicit_step(&mut field.values, &mut scratch, h),
                }
            }
        }
        field.time = target;
        out.push(field.clone());
    }
    Ok(out)
}

/// Cell samples of the closed-form equilibrium, scaled to `mass` on the grid.
pub fn discrete_stationary(params: &LimitParams, grid: &RadialGrid, mass: f64) -> Result<RadialField> {
    let unit = StationaryDensity::with_g0(*params, 1.0)?;
    let mut field = RadialField::from_fn(grid.clone(), |r| unit.density(r), 0.0);
    let scale = mass / field.mass();
    for v in &mut field.values {
        *v *= scale;
    }
    Ok(field)
}

/// Weighted L¹ distance `Σ |g − g_s| V` to the equilibrium carrying the same
/// mass on the same (truncated) grid.
pub fn fp_distance_to_stationary(field: &RadialField, params: &LimitParams) -> Result<f64> {
    if params.kt_beta() >= 1.0 {
        return Err(Error::NonNormalizable {
            kt_beta: params.kt_beta(),
        });
    }
    let stat = discrete_stationary(params, &field.grid, field.mass())?;
    Ok(compensated_sum(
        field
            .values
            .iter()
            .zip(&stat.values)
            .zip(field.grid.volumes())
            .map(|((g, s), v)| (g - s).abs() * v),
    ))
}

/// Fraction of the normalized equilibrium mass beyond `rho`, the part cut
/// off by truncating the domain there. `None` when the equilibrium is not
/// normalizable.
pub fn stationary_mass_beyond(params: &LimitParams, rho: f64) -> Option<f64> {
    let kb = params.kt_beta();
    if kb >= 1.0 {
        return None;
    }
    let s2 = params.sigma() * params.sigma();
    if params.kt_turb() == 0.0 {
        return Some((-rho * rho / (2.0 * s2 * params.beta())).exp());
    }
    let u = 0.5 * params.kt_turb() * rho * rho / s2;
    Some(((1.0 - 1.0 / kb) * u.ln_1p()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> LimitParams {
        LimitParams::with_kt_beta(0.4, 1.0, 1.0).unwrap()
    }

    #[test]
    fn grid_shape() {
        let g = RadialGrid::for_params(&params()).unwrap();
        assert_eq!(g.len(), DEFAULT_CELLS);
        assert_eq!(g.edges()[0], 0.0);
        assert_eq!(g.rho_max(), 40.0);
        assert!(g.edges().windows(2).all(|w| w[1] > w[0]));
        assert!(g.volumes().iter().all(|&v| v > 0.0));
        let total: f64 = g.volumes().iter().sum();
        assert!((total - PI * 1600.0).abs() < 1e-9 * total);
    }

    #[test]
    fn zero_g0_gives_zero_field() {
        let g = RadialGrid::new(1.0, 5.0, 32).unwrap();
        let f = stationary_ode_solve(&params(), &g, 0.0).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn explicit_cfl_refusal() {
        let p = params();
        let g = RadialGrid::new(2.0, 40.0, 256).unwrap();
        let f = RadialField::gaussian(g, 1.0);
        let err = fp_radial_evolve(&f, &p, 1.0, 1.0, Stepping::Explicit).unwrap_err();
        match err {
            Error::Cfl { suggested, .. } => assert!(suggested > 0.0 && suggested < 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn distance_rejects_heavy_tail() {
        let p = LimitParams::with_kt_beta(1.2, 1.0, 1.0).unwrap();
        let g = RadialGrid::new(2.0, 40.0, 64).unwrap();
        let f = RadialField::gaussian(g, 1.0);
        assert!(matches!(fp_distance_to_stationary(&f, &p), Err(Error::NonNormalizable { .. })));
    }

    #[test]
    fn truncated_mass_matches_quadrature() {
        let p = params();
        let sd = StationaryDensity::normalized(p).unwrap();
        let rho = 7.0;
        let inside = 2.0 * PI * crate::quad::integrate(|r| r * sd.density(r), 0.0, rho, 1e-14, 1e-13).value;
        let beyond = stationary_mass_beyond(&p, rho).unwrap();
        assert!((inside + beyond - 1.0).abs() < 1e-9);
        assert!(stationary_mass_beyond(&LimitParams::with_kt_beta(1.0, 1.0, 1.0).unwrap(), 1.0).is_none());
    }

    #[test]
    fn implicit_conserves_mass() {
        let p = params();
        let g = RadialGrid::new(2.0, 40.0, 256).unwrap();
        let f = RadialField::gaussian(g, 1.0);
        let m0 = f.mass();
        let out = fp_radial_evolve(&f, &p, 0.05, 2.0, Stepping::Implicit).unwrap();
        assert!((out.mass() - m0).abs() < 1e-12 * m0);
        assert!(out.min_value() >= 0.0);
    }
}
