//! Structure-tensor evolution `T = E[R ⊗ R]` for the limit dynamics with
//! `u_L = 0`. Because `A(r)` is linear in `r ⊗ r`, `E A(R) = k_T (3 tr T I − 2T)`
//! and the moment system closes exactly:
//!
//! ```text
//! dT/dt = −(2/β)(T − σ²β I) + k_T (3 tr(T) I − 2T)
//! ```

use serde::Serialize;

use crate::covariance::LimitParams;
use crate::error::{require_positive, Error, Result};
use crate::tensor::Tensor2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentTrajectory {
    pub times: Vec<f64>,
    pub tensors: Vec<Tensor2>,
}

impl MomentTrajectory {
    pub fn last(&self) -> Tensor2 {
        *self.tensors.last().expect("trajectory holds the initial value")
    }

    /// Piecewise-linear interpolation in time, clamped to the solved range.
    pub fn at(&self, t: f64) -> Tensor2 {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return self.tensors[0];
        }
        if i >= self.times.len() {
            return self.last();
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        self.tensors[i - 1] * (1.0 - w) + self.tensors[i] * w
    }
}

pub fn moment_rhs(params: &LimitParams, t: &Tensor2) -> Tensor2 {
    let thermal = params.thermal_kt();
    let relax = (*t - Tensor2::IDENTITY * thermal) * (-2.0 / params.beta());
    let stretch = (Tensor2::IDENTITY * (3.0 * t.trace()) - *t * 2.0) * params.kt_turb();
    relax + stretch
}

/// RK4 solution on `[0, t_final]` with the largest uniform step `<= dt`.
pub fn moment_ode_solve(params: &LimitParams, t0: Tensor2, t_final: f64, dt: f64) -> Result<MomentTrajectory> {
    require_positive("t_final", t_final)?;
    require_positive("dt", dt)?;
    if !t0.is_psd(1e-12 * t0.max_abs().max(1.0)) {
        return Err(Error::invalid("T0", "must be symmetric positive semidefinite"));
    }
    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let h = t_final / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut tensors = Vec::with_capacity(steps + 1);
    times.push(0.0);
    tensors.push(t0);
    let mut t = t0;
    for i in 1..=steps {
        let k1 = moment_rhs(params, &t);
        let k2 = moment_rhs(params, &(t + k1 * (0.5 * h)));
        let k3 = moment_rhs(params, &(t + k2 * (0.5 * h)));
        let k4 = moment_rhs(params, &(t + k3 * h));
        t += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let time = i as f64 * h;
        let (min_eig, _) = t.sym_eigenvalues();
        if min_eig < -1e-10 * t.trace().abs().max(1.0) {
            return Err(Error::PsdViolation {
                time,
                min_eigenvalue: min_eig,
            });
        }
        times.push(time);
        tensors.push(t);
    }
    Ok(MomentTrajectory { times, tensors })
}

/// `T* = σ²β / (1 − 2 k_T β) · I`, defined when `k_T β < 1/2`.
pub fn isotropic_fixed_point(params: &LimitParams) -> Option<Tensor2> {
    let kb = params.kt_beta();
    (kb < 0.5).then(|| Tensor2::IDENTITY * (params.thermal_kt() / (1.0 - 2.0 * kb)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ou_relaxation_without_noise() {
        let p = LimitParams::new(0.0, 1.5, 0.8).unwrap();
        let t0 = Tensor2::symmetric(3.0, 0.5, 0.2);
        let traj = moment_ode_solve(&p, t0, 4.0, 1e-3).unwrap();
        let eq = Tensor2::IDENTITY * p.thermal_kt();
        for (&time, tensor) in traj.times.iter().zip(&traj.tensors).step_by(400) {
            let exact = eq + (t0 - eq) * (-2.0 * time / p.beta()).exp();
            assert!((*tensor - exact).max_abs() < 1e-12, "t={time}");
        }
    }

    #[test]
    fn subcritical_fixed_point() {
        let p = LimitParams::with_kt_beta(0.3, 1.0, 1.2).unwrap();
        let star = isotropic_fixed_point(&p).unwrap();
        assert!(moment_rhs(&p, &star).max_abs() < 1e-13);
        let traj = moment_ode_solve(&p, Tensor2::ZERO, 40.0, 1e-2).unwrap();
        assert!((traj.last() - star).max_abs() < 1e-9 * star.trace());
    }

    #[test]
    fn supercritical_growth() {
        let p = LimitParams::with_kt_beta(0.6, 1.0, 1.0).unwrap();
        assert!(isotropic_fixed_point(&p).is_none());
        let traj = moment_ode_solve(&p, Tensor2::IDENTITY, 10.0, 1e-2).unwrap();
        let mid = traj.at(5.0).trace();
        assert!(traj.last().trace() > 2.0 * mid);
    }

    #[test]
    fn rejects_indefinite_start() {
        let p = LimitParams::new(1.0, 1.0, 1.0).unwrap();
        assert!(moment_ode_solve(&p, Tensor2::diag(1.0, -1.0), 1.0, 0.1).is_err());
    }

    #[test]
    fn interpolation_hits_nodes() {
        let p = LimitParams::new(1.0, 1.0, 1.0).unwrap();
        let traj = moment_ode_solve(&p, Tensor2::ZERO, 1.0, 0.25).unwrap();
        assert_eq!(traj.at(0.5), traj.tensors[2]);
        assert_eq!(traj.at(10.0), traj.last());
    }
}
