use rayon::prelude::*;
use serde::Serialize;

use crate::covariance::{kt_turb, LimitParams};
use crate::error::{Error, Result};
use crate::kahan::CompensatedSum;
use crate::rng::PathRng;
use crate::shell_noise::{enumerate_shell, NoiseModel, TrigTable};
use crate::tensor::{Tensor2, Vec2};

use super::moments::moment_ode_solve;
use super::step::{step_limit, step_prelimit, LimitIncrements, PrelimitIncrements};
use super::{Model, PolymerState, SimParams};

/// Quantiles of `|R|` recorded at every output time.
/// Refuse runs whose stability rule would need more steps than this.
pub const MAX_STEPS_PER_PATH: f64 = 1e8;

pub const QUANTILE_LEVELS: [f64; 5] = [0.5, 0.9, 0.99, 0.999, 0.9999];

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub n_paths: usize,
    pub dt_used: f64,
    pub steps: usize,
    /// Number of step halvings applied by the stability rule and blowup retries.
    pub halvings: u32,
    pub times: Vec<f64>,
    /// `T̂ = mean(R ⊗ R)` per output time.
    pub structure: Vec<Tensor2>,
    pub structure_se: Vec<Tensor2>,
    pub mean_r: Vec<Vec2>,
    pub mean_r_se: Vec<Vec2>,
    pub mean_r2: Vec<f64>,
    pub mean_r2_se: Vec<f64>,
    pub quantile_levels: Vec<f64>,
    /// `quantiles[t][j]` is the `quantile_levels[j]` quantile of `|R|` at `times[t]`.
    pub quantiles: Vec<Vec<f64>>,
    /// `|R|` of every path at the final time, in path order.
    #[serde(skip)]
    pub final_radii: Vec<f64>,
}

/// Step limit `min(β/50, 1/(50 k_T m₂))`, where `m₂` is the largest `E|R|²`
/// the moment equation predicts on `[0, t_final]`.
pub fn stability_dt(params: &SimParams) -> f64 {
    let base = params.beta / 50.0;
    let kt = kt_turb(params.a);
    if kt == 0.0 {
        return base;
    }
    let r0 = params.r0;
    let mut m2 = r0.norm_sq();
    if let Ok(lp) = LimitParams::new(params.a, params.beta, params.sigma) {
        let h = base.min(params.t_final / 200.0);
        if let Ok(traj) = moment_ode_solve(&lp, Tensor2::outer(r0, r0), params.t_final, h) {
            m2 = traj.tensors.iter().map(Tensor2::trace).fold(m2, f64::max);
        }
    }
    if m2 > 0.0 {
        base.min(1.0 / (50.0 * kt * m2))
    } else {
        base
    }
}

struct Schedule {
    dt: f64,
    steps_per_out: usize,
    n_out: usize,
}

impl Schedule {
    fn new(params: &SimParams, dt: f64) -> Self {
        let interval = params.t_final / params.n_out as f64;
        let steps_per_out = (interval / dt).ceil().max(1.0) as usize;
        Schedule {
            dt: interval / steps_per_out as f64,
            steps_per_out,
            n_out: params.n_out,
        }
    }

    fn total_steps(&self) -> usize {
        self.steps_per_out * self.n_out
    }
}

fn simulate_path(params: &SimParams, noise: Option<&NoiseModel>, sched: &Schedule, path: usize) -> Result<Vec<Vec2>> {
    let mut rng = PathRng::new(params.seed, path as u64);
    let x0 = params.x0.unwrap_or_else(|| {
        let tau = std::f64::consts::TAU;
        Vec2::new(tau * rng.uniform(), tau * rng.uniform())
    });
    let mut state = PolymerState::new(x0, params.r0);
    let mut record = Vec::with_capacity(sched.n_out + 1);
    record.push(state.r);

    let sqrt_dt = sched.dt.sqrt();
    let mut dw = vec![0.0; noise.map_or(0, NoiseModel::len)];
    let mut trig = TrigTable::default();
    for step in 0..sched.total_steps() {
        let next = match noise {
            Some(noise) => {
                rng.fill_normals(&mut dw, sqrt_dt);
                let thermal = rng.normal2(sqrt_dt);
                step_prelimit(state, noise, params, PrelimitIncrements { modes: &dw, thermal }, sched.dt, &mut trig)
            }
            None => {
                let stretch = rng.normal2(sqrt_dt);
                let thermal = rng.normal2(sqrt_dt);
                step_limit(state, params, LimitIncrements { stretch, thermal }, sched.dt)
            }
        };
        state = next.map_err(|_| Error::IntegrationBlowup {
            path,
            time: (step + 1) as f64 * sched.dt,
            dt: sched.dt,
        })?;
        if (step + 1) % sched.steps_per_out == 0 {
            record.push(state.r);
        }
    }
    Ok(record)
}

fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let pos = level * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Mean and standard error `std/√n` of a sample, summed in order.
fn mean_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().collect::<CompensatedSum>().value() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = values.map(|v| (v - mean) * (v - mean)).collect::<CompensatedSum>().value();
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn reduce(records: &[Vec<Vec2>], sched: &Schedule) -> EnsembleStats {
    let n = records.len();
    let mut stats = EnsembleStats {
        n_paths: n,
        dt_used: sched.dt,
        steps: sched.total_steps(),
        quantile_levels: QUANTILE_LEVELS.to_vec(),
        ..Default::default()
    };
    let interval = sched.dt * sched.steps_per_out as f64;
    for t in 0..=sched.n_out {
        stats.times.push(t as f64 * interval);
        let rs = records.iter().map(move |rec| rec[t]);
        let (xx, xx_se) = mean_se(rs.clone().map(|r| r.x * r.x), n);
        let (xy, xy_se) = mean_se(rs.clone().map(|r| r.x * r.y), n);
        let (yy, yy_se) = mean_se(rs.clone().map(|r| r.y * r.y), n);
        stats.structure.push(Tensor2::symmetric(xx, xy, yy));
        stats.structure_se.push(Tensor2::symmetric(xx_se, xy_se, yy_se));
        let (mx, mx_se) = mean_se(rs.clone().map(|r| r.x), n);
        let (my, my_se) = mean_se(rs.clone().map(|r| r.y), n);
        stats.mean_r.push(Vec2::new(mx, my));
        stats.mean_r_se.push(Vec2::new(mx_se, my_se));
        let (m2, m2_se) = mean_se(rs.clone().map(Vec2::norm_sq), n);
        stats.mean_r2.push(m2);
        stats.mean_r2_se.push(m2_se);

        let mut radii: Vec<f64> = rs.map(Vec2::norm).collect();
        if t == sched.n_out {
            stats.final_radii = radii.clone();
        }
        radii.sort_unstable_by(f64::total_cmp);
        stats
            .quantiles
            .push(QUANTILE_LEVELS.iter().map(|&q| quantile_sorted(&radii, q)).collect());
    }
    stats
}

/// Run the Monte Carlo ensemble described by `params`.
///
/// Paths are independent work items on the rayon pool; every path draws from
/// its own counter-based stream and the reduction runs in path order, so the
/// statistics do not depend on the number of threads. A blowup reruns the
/// whole ensemble with half the step, up to `max_halvings` times.
pub fn run_ensemble(params: &SimParams) -> Result<EnsembleStats> {
    params.validate()?;
    let noise = match params.model {
        Model::Prelimit { n } => Some(enumerate_shell(n, params.a)?),
        Model::Limit => None,
    };

    let limit = stability_dt(params);
    if !(limit > 0.0) || params.t_final / limit > MAX_STEPS_PER_PATH {
        // Second-moment growth this fast cannot be resolved; refuse.
        return Err(Error::Cfl {
            dt: params.dt,
            suggested: limit,
        });
    }
    let mut dt = params.dt;
    let mut halvings = 0;
    while dt > limit {
        dt *= 0.5;
        halvings += 1;
    }

    let mut retries = 0;
    loop {
        let sched = Schedule::new(params, dt);
        let results: Vec<Result<Vec<Vec2>>> = (0..params.n_paths)
            .into_par_iter()
            .map(|path| simulate_path(params, noise.as_ref(), &sched, path))
            .collect();
        match results.iter().position(Result::is_err) {
            None => {
                let records: Vec<Vec<Vec2>> = results.into_iter().map(|r| r.expect("checked")).collect();
                let mut stats = reduce(&records, &sched);
                stats.halvings = halvings;
                return Ok(stats);
            }
            Some(first) => {
                if retries >= params.max_halvings {
                    return Err(results.into_iter().nth(first).expect("index valid").expect_err("is error"));
                }
                retries += 1;
                halvings += 1;
                dt *= 0.5;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 5.0);
        assert!((quantile_sorted(&v, 0.9) - 4.6).abs() < 1e-12);
    }

    #[test]
    fn schedule_refines_to_grid() {
        let mut p = SimParams::limit(1.0, 1.0, 1.0);
        p.t_final = 1.0;
        p.n_out = 4;
        let s = Schedule::new(&p, 0.03);
        assert_eq!(s.steps_per_out, 9);
        assert!(s.dt <= 0.03);
        assert!((s.dt * s.total_steps() as f64 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stability_rule_without_stretching() {
        let p = SimParams::limit(0.0, 2.0, 1.0);
        assert_eq!(stability_dt(&p), 0.04);
        let mut p = SimParams::limit(1.0, 1.0, 1.0);
        assert!(stability_dt(&p) <= 0.02);
        p.r0 = Vec2::new(10.0, 0.0);
        let expected = 1.0 / (50.0 * kt_turb(1.0) * 100.0);
        assert!((stability_dt(&p) - expected).abs() < 1e-12);
    }

    #[test]
    fn unresolvable_growth_is_refused() {
        let mut p = SimParams::limit(40.0, 1.0, 1.0);
        p.r0 = Vec2::new(1.0, 0.0);
        p.t_final = 50.0;
        assert!(matches!(run_ensemble(&p), Err(Error::Cfl { .. })));
    }

    #[test]
    fn single_path_is_reproducible() {
        let mut p = SimParams::limit(1.0, 1.0, 1.0);
        p.n_paths = 1;
        p.seed = 42;
        p.r0 = Vec2::new(1.0, 0.0);
        let a = run_ensemble(&p).unwrap();
        let b = run_ensemble(&p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.final_radii, b.final_radii);
    }
}
