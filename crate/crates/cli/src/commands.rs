use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use polystretch::covariance::{analytic_a, tail_exponent};
use polystretch::lagrangian::{isotropic_fixed_point, moment_ode_solve};
use polystretch::radial_fp::{
    fp_distance_to_stationary, fp_radial_checkpoints, stationary_mass_beyond, FpOperator,
};
use polystretch::tail_stats::{ccdf, density_to_survival, hill_fit, hill_sweep, loglog_slope, CcdfPoint, TailFit};
use polystretch::{
    enumerate_shell, run_ensemble, EnsembleStats, LimitParams, Model, RadialField, RadialGrid, SimParams, StationaryDensity,
    Stepping, Tensor2, Vec2, VelocityField,
};

use crate::args::*;
use crate::error::CliError;
use crate::report::{Cell, CsvTable, Report};

/// Files produced by a subcommand; the first one goes to stdout when no
/// output directory is given.
pub struct Outcome {
    pub files: Vec<(String, Report)>,
    pub seed: Option<u64>,
}

impl Outcome {
    fn new(files: Vec<(String, Report)>) -> Self {
        Outcome { files, seed: None }
    }
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl LimitArgs {
    pub fn params(&self) -> Result<LimitParams, CliError> {
        Ok(match self.kt_beta {
            Some(kb) => LimitParams::with_kt_beta(kb, self.beta, self.sigma)?,
            None => LimitParams::new(self.a, self.beta, self.sigma)?,
        })
    }
}

pub fn modes(args: &ModesArgs) -> Result<Outcome, CliError> {
    let model = enumerate_shell(args.n, args.a)?;
    let mut table = CsvTable::new(&["k1", "k2", "theta", "phase"]);
    for m in model.modes() {
        table.push(vec![
            i64::from(m.k[0]).into(),
            i64::from(m.k[1]).into(),
            m.theta.into(),
            m.phase.as_str().into(),
        ]);
    }
    Ok(Outcome::new(vec![("modes.csv".into(), Report::Csv(table))]))
}

#[derive(Serialize)]
struct ShellCheck {
    n: u32,
    modes: usize,
    alpha_n: f64,
    alpha_lower: f64,
    alpha_upper: f64,
    alpha_within_bounds: bool,
    max_rel_error: f64,
    mean_rel_error: f64,
}

#[derive(Serialize)]
struct CovarianceReport {
    a: f64,
    r_samples: usize,
    seed: u64,
    shells: Vec<ShellCheck>,
    /// Least-squares slope of log(max_rel_error) against log N.
    loglog_slope: Option<f64>,
}

fn least_squares_slope(xy: &[(f64, f64)]) -> Option<f64> {
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Unit vectors at uniformly random angles, reproducible from `seed`.
pub fn random_unit_vectors(n: usize, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Vec2::from_angle(TAU * rng.random::<f64>())).collect()
}

pub fn verify_covariance(args: &VerifyCovarianceArgs) -> Result<Outcome, CliError> {
    if args.r_samples == 0 {
        return Err(polystretch::Error::InvalidParameter {
            name: "r_samples",
            reason: "must be positive".into(),
        }
        .into());
    }
    let rs = random_unit_vectors(args.r_samples, args.seed);
    let mut shells = Vec::with_capacity(args.n_list.len());
    for &n in &args.n_list {
        let model = enumerate_shell(n, args.a)?;
        let errors: Vec<f64> = rs
            .iter()
            .map(|&r| {
                let exact = analytic_a(r, args.a);
                (model.stretching_covariance_sum(r) - exact).frobenius_norm() / exact.frobenius_norm()
            })
            .collect();
        let n3 = f64::from(n).powi(3);
        let a2 = args.a * args.a;
        let alpha = model.alpha_n();
        let (lo, hi) = (PI * a2 / (64.0 * n3), PI * a2 / (4.0 * n3));
        shells.push(ShellCheck {
            n,
            modes: model.len(),
            alpha_n: alpha,
            alpha_lower: lo,
            alpha_upper: hi,
            alpha_within_bounds: lo <= alpha && alpha <= hi,
            max_rel_error: errors.iter().copied().fold(0.0, f64::max),
            mean_rel_error: errors.iter().sum::<f64>() / errors.len() as f64,
        });
    }
    let pts: Vec<(f64, f64)> = shells
        .iter()
        .filter(|s| s.max_rel_error > 0.0)
        .map(|s| (f64::from(s.n).ln(), s.max_rel_error.ln()))
        .collect();
    let report = CovarianceReport {
        a: args.a,
        r_samples: args.r_samples,
        seed: args.seed,
        loglog_slope: least_squares_slope(&pts),
        shells,
    };
    Ok(Outcome {
        files: vec![("verify_covariance.json".into(), Report::json(&report))],
        seed: Some(args.seed),
    })
}

fn vec2_arg(v: &[f64], name: &'static str) -> Result<Vec2, CliError> {
    match v {
        [x, y] => Ok(Vec2::new(*x, *y)),
        _ => Err(CliError::Config(format!("{name} needs two components"))),
    }
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    model: ModelKind,
    n: Option<u32>,
    a: f64,
    kt_turb: f64,
    kt_beta: f64,
    beta: f64,
    sigma: f64,
    seed: u64,
    dt_requested: f64,
    stats: &'a EnsembleStats,
}

pub fn sim_params(args: &SimulateArgs) -> Result<SimParams, CliError> {
    let lp = args.limit.params()?;
    let mut p = match args.model {
        ModelKind::Limit => SimParams::limit(lp.a(), lp.beta(), lp.sigma()),
        ModelKind::Prelimit => SimParams::prelimit(args.n, lp.a(), lp.beta(), lp.sigma()),
    };
    if let Some(dt) = args.dt {
        p.dt = dt;
    }
    p.t_final = args.t_final;
    p.n_paths = args.n_paths;
    p.seed = args.seed;
    p.r0 = vec2_arg(&args.r0, "r0")?;
    p.x0 = args.x0.as_deref().map(|v| vec2_arg(v, "x0")).transpose()?;
    p.velocity = match args.velocity {
        FlowKind::Zero => VelocityField::zero(),
        FlowKind::Cellular => VelocityField::cellular(),
    };
    p.n_out = args.n_out;
    p.max_halvings = args.max_halvings;
    Ok(p)
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let p = sim_params(args)?;
    let lp = args.limit.params()?;
    let stats = run_ensemble(&p)?;
    let report = SimulateReport {
        model: args.model,
        n: matches!(p.model, Model::Prelimit { .. }).then_some(args.n),
        a: lp.a(),
        kt_turb: lp.kt_turb(),
        kt_beta: lp.kt_beta(),
        beta: lp.beta(),
        sigma: lp.sigma(),
        seed: p.seed,
        dt_requested: p.dt,
        stats: &stats,
    };
    let mut files = vec![("simulate.json".to_string(), Report::json(&report))];
    if args.samples {
        let mut table = CsvTable::new(&["r"]);
        for &r in &stats.final_radii {
            table.push(vec![r.into()]);
        }
        files.push(("samples.csv".into(), Report::Csv(table)));
    }
    Ok(Outcome {
        files,
        seed: Some(p.seed),
    })
}

#[derive(Serialize)]
struct StationaryHeader {
    /// Density exponent `2/(k_T β)`; null without stretching.
    p: Option<f64>,
    /// Survival exponent `p − 2`.
    q: Option<f64>,
    /// `C` in `C (σ² + (k_T/2) ρ²)^{−1/(k_T β)}` for the `density` column.
    c: f64,
    kt_beta: f64,
    crossover_radius: f64,
    normalization: Normalization,
}

#[derive(Serialize)]
struct Normalization {
    /// `density` is scaled to `g(0) = 1`.
    density_g0: f64,
    normalizable: bool,
    /// `g(0)` of the probability density, when it exists.
    normalized_g0: Option<f64>,
    mean_square_radius: Option<f64>,
}

pub fn stationary(args: &StationaryArgs) -> Result<Outcome, CliError> {
    let lp = args.limit.params()?;
    let unit = StationaryDensity::with_g0(lp, 1.0)?;
    let normalized = StationaryDensity::normalized(lp).ok();
    if args.points < 2 || !(args.rho_min > 0.0 && args.rho_max > args.rho_min) {
        return Err(CliError::Config("need points ≥ 2 and 0 < rho_min < rho_max".into()));
    }
    let scale = lp.sigma() * lp.beta().sqrt();
    let (lo, hi) = (args.rho_min * scale, args.rho_max * scale);
    let span = (hi / lo).ln();
    let header: &[&str] = if normalized.is_some() {
        &["rho", "density", "normalized_density"]
    } else {
        &["rho", "density"]
    };
    let mut table = CsvTable::new(header);
    for i in 0..args.points {
        let rho = if i + 1 == args.points {
            hi
        } else {
            lo * (span * i as f64 / (args.points - 1) as f64).exp()
        };
        let mut row = vec![Cell::from(rho), unit.density(rho).into()];
        if let Some(n) = &normalized {
            row.push(n.density(rho).into());
        }
        table.push(row);
    }
    let p = finite_or_none(tail_exponent(&lp));
    let head = StationaryHeader {
        p,
        q: p.map(density_to_survival),
        c: unit.prefactor(),
        kt_beta: lp.kt_beta(),
        crossover_radius: unit.crossover_radius(),
        normalization: Normalization {
            density_g0: 1.0,
            normalizable: normalized.is_some(),
            normalized_g0: normalized.as_ref().map(StationaryDensity::g0),
            mean_square_radius: normalized.as_ref().and_then(|n| finite_or_none(n.mean_square_radius())),
        },
    };
    Ok(Outcome::new(vec![
        ("stationary.csv".into(), Report::Csv(table)),
        ("stationary.json".into(), Report::json(&head)),
    ]))
}

#[derive(Serialize)]
struct Checkpoint {
    time: f64,
    mass: f64,
    second_moment: f64,
    min_value: f64,
    /// Weighted L¹ distance to the equilibrium; null when not normalizable.
    distance: Option<f64>,
}

#[derive(Serialize)]
struct FpReport {
    stepping: SteppingKind,
    dt: f64,
    cfl_dt: f64,
    cells: usize,
    rho_lin: f64,
    rho_max: f64,
    boundary: &'static str,
    /// Equilibrium mass beyond the outer boundary, lost to truncation.
    truncated_equilibrium_mass: Option<f64>,
    checkpoints: Vec<Checkpoint>,
}

pub fn fp_radial(args: &FpRadialArgs) -> Result<Outcome, CliError> {
    let lp = args.limit.params()?;
    let scale = lp.sigma() * lp.beta().sqrt();
    let grid = RadialGrid::new(args.rho_lin * scale, args.rho_max * scale, args.cells)?;
    let op = FpOperator::new(&lp, &grid)?;
    let stepping = match args.stepping {
        SteppingKind::Explicit => Stepping::Explicit,
        SteppingKind::Implicit => Stepping::Implicit,
    };
    let dt = args.dt.unwrap_or(match stepping {
        Stepping::Explicit => op.cfl_dt(),
        Stepping::Implicit => 0.01,
    });
    let init = RadialField::gaussian(grid.clone(), args.init_var);
    let fields = fp_radial_checkpoints(&init, &lp, dt, &args.checkpoints, stepping)?;

    let mut table = CsvTable::new(&["time", "rho", "g"]);
    let mut checkpoints = Vec::with_capacity(fields.len());
    for f in &fields {
        for (&rho, &g) in f.grid.centers().iter().zip(&f.values) {
            table.push(vec![f.time.into(), rho.into(), g.into()]);
        }
        checkpoints.push(Checkpoint {
            time: f.time,
            mass: f.mass(),
            second_moment: f.second_moment(),
            min_value: f.min_value(),
            distance: fp_distance_to_stationary(f, &lp).ok(),
        });
    }
    let report = FpReport {
        stepping: args.stepping,
        dt,
        cfl_dt: op.cfl_dt(),
        cells: grid.len(),
        rho_lin: args.rho_lin * scale,
        rho_max: grid.rho_max(),
        boundary: "zero flux at rho = 0 and rho = rho_max",
        truncated_equilibrium_mass: stationary_mass_beyond(&lp, grid.rho_max()),
        checkpoints,
    };
    Ok(Outcome::new(vec![
        ("fp_radial.json".into(), Report::json(&report)),
        ("fp_radial.csv".into(), Report::Csv(table)),
    ]))
}

pub fn read_samples(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(CliError::Config(format!("{}:{}: not a number: {field}", path.display(), i + 1)));
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct TailReport {
    n: usize,
    fit: TailFit,
    sweep: Vec<TailFit>,
    /// Slope of log S against log level over the upper two decades of S.
    ccdf_slope: Option<f64>,
    ccdf: Vec<CcdfPoint>,
}

pub fn fit_tail(args: &FitTailArgs) -> Result<Outcome, CliError> {
    let samples = read_samples(&args.input)?;
    let fit = hill_fit(&samples, args.k_fraction)?;
    let sweep = hill_sweep(&samples, &args.sweep)?;
    let points = ccdf(&samples, args.levels)?;
    // Fit where 1e-1 ≥ S ≥ 1e-3, the mid-to-upper tail.
    let in_band: Vec<&CcdfPoint> = points.iter().filter(|p| p.survival <= 0.1 && p.survival >= 1e-3).collect();
    let ccdf_slope = match (in_band.first(), in_band.last()) {
        (Some(a), Some(b)) => loglog_slope(&points, a.level, b.level),
        _ => None,
    };
    let report = TailReport {
        n: samples.len(),
        fit,
        sweep,
        ccdf_slope,
        ccdf: points,
    };
    Ok(Outcome::new(vec![("fit_tail.json".into(), Report::json(&report))]))
}

#[derive(Serialize)]
struct MomentsReport {
    kt_beta: f64,
    /// `tr T*`; null when the isotropic fixed point does not exist.
    fixed_point_trace: Option<f64>,
    final_tensor: Tensor2,
}

pub fn moments(args: &MomentsArgs) -> Result<Outcome, CliError> {
    let lp = args.limit.params()?;
    let t0 = match args.t0.as_slice() {
        [xx, xy, yy] => Tensor2::symmetric(*xx, *xy, *yy),
        _ => return Err(CliError::Config("t0 needs three components".into())),
    };
    if args.n_out == 0 {
        return Err(CliError::Config("n_out must be positive".into()));
    }
    let traj = moment_ode_solve(&lp, t0, args.t_final, args.dt)?;
    let mut table = CsvTable::new(&["t", "xx", "xy", "yy", "trace"]);
    for i in 0..=args.n_out {
        let t = args.t_final * i as f64 / args.n_out as f64;
        let m = traj.at(t);
        table.push(vec![t.into(), m.xx.into(), m.xy.into(), m.yy.into(), m.trace().into()]);
    }
    let report = MomentsReport {
        kt_beta: lp.kt_beta(),
        fixed_point_trace: isotropic_fixed_point(&lp).map(|t| t.trace()),
        final_tensor: traj.last(),
    };
    Ok(Outcome::new(vec![
        ("moments.csv".into(), Report::Csv(table)),
        ("moments.json".into(), Report::json(&report)),
    ]))
}
