//! Heavy-tail diagnostics for samples of `|R|`.
//!
//! In two dimensions a radial density `g(ρ) ~ ρ^{−p}` has survival
//! function `P(|R| > ρ) ~ ρ^{2−p}`; the survival exponent is `q = p − 2`.
//! [`density_to_survival`] and [`survival_to_density`] are the only places
//! that conversion happens.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 1000;
pub const MIN_ORDER_STATISTICS: usize = 50;
pub const MAX_K_FRACTION: f64 = 0.2;
pub const DEFAULT_K_FRACTION: f64 = 0.01;
pub const K_FRACTION_SWEEP: [f64; 3] = [0.005, 0.01, 0.02];

pub fn density_to_survival(p: f64) -> f64 {
    p - 2.0
}

pub fn survival_to_density(q: f64) -> f64 {
    q + 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Survival exponent `q̂`.
    pub q_hat: f64,
    /// Density exponent `p̂ = q̂ + 2`.
    pub p_hat: f64,
    pub k_fraction: f64,
    /// Number of upper order statistics used.
    pub k: usize,
    /// Asymptotic 95% half-width, `1.96 q̂ / √k`.
    pub half_width: f64,
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    if let Some(bad) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::invalid("samples", format!("must be finite and positive, found {bad}")));
    }
    Ok(())
}

fn sorted_descending(samples: &[f64]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_unstable_by(|a, b| b.total_cmp(a));
    s
}

fn hill_sorted(desc: &[f64], k_fraction: f64) -> Result<TailFit> {
    if !(k_fraction > 0.0 && k_fraction <= MAX_K_FRACTION) {
        return Err(Error::invalid("k_fraction", format!("must lie in (0, {MAX_K_FRACTION}], got {k_fraction}")));
    }
    let k = (k_fraction * desc.len() as f64).floor() as usize;
    if k < MIN_ORDER_STATISTICS {
        return Err(Error::TooFewSamples {
            required: (MIN_ORDER_STATISTICS as f64 / k_fraction).ceil() as usize,
            got: desc.len(),
        });
    }
    let threshold = desc[k];
    let gamma = desc[..k].iter().map(|x| (x / threshold).ln()).sum::<f64>() / k as f64;
    if !(gamma > 0.0) {
        return Err(Error::invalid("samples", "upper order statistics are all tied"));
    }
    let q_hat = 1.0 / gamma;
    Ok(TailFit {
        q_hat,
        p_hat: survival_to_density(q_hat),
        k_fraction,
        k,
        half_width: 1.96 * q_hat / (k as f64).sqrt(),
    })
}

/// Hill estimator on the top `⌊k_fraction · n⌋` order statistics.
pub fn hill_fit(samples: &[f64], k_fraction: f64) -> Result<TailFit> {
    check_samples(samples)?;
    hill_sorted(&sorted_descending(samples), k_fraction)
}

/// [`hill_fit`] at each fraction, sorting once.
pub fn hill_sweep(samples: &[f64], fractions: &[f64]) -> Result<Vec<TailFit>> {
    check_samples(samples)?;
    let desc = sorted_descending(samples);
    fractions.iter().map(|&f| hill_sorted(&desc, f)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcdfPoint {
    pub level: f64,
    /// Fraction of samples strictly above `level`.
    pub survival: f64,
}

/// Empirical survival function `S(x) = #{X > x} / n`.
#[derive(Clone, Debug)]
pub struct EmpiricalCcdf {
    sorted: Vec<f64>,
}

impl EmpiricalCcdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples { required: 1, got: 0 });
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::invalid("samples", "contains NaN"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(EmpiricalCcdf { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn survival(&self, level: f64) -> f64 {
        let at_or_below = self.sorted.partition_point(|&x| x <= level);
        (self.sorted.len() - at_or_below) as f64 / self.sorted.len() as f64
    }

    /// `n_levels` log-spaced levels from the smallest positive sample to the
    /// largest sample.
    pub fn log_spaced(&self, n_levels: usize) -> Vec<CcdfPoint> {
        let hi = *self.sorted.last().expect("non-empty");
        let lo = self.sorted.iter().copied().find(|&x| x > 0.0).unwrap_or(hi);
        if !(lo > 0.0) || lo == hi || n_levels < 2 {
            return vec![CcdfPoint {
                level: hi,
                survival: self.survival(hi),
            }];
        }
        let span = (hi / lo).ln();
        (0..n_levels)
            .map(|i| {
                let level = if i + 1 == n_levels {
                    hi
                } else {
                    lo * (span * i as f64 / (n_levels - 1) as f64).exp()
                };
                CcdfPoint {
                    level,
                    survival: self.survival(level),
                }
            })
            .collect()
    }
}

pub fn ccdf(samples: &[f64], n_levels: usize) -> Result<Vec<CcdfPoint>> {
    Ok(EmpiricalCcdf::new(samples)?.log_spaced(n_levels))
}

/// Least-squares slope of `ln S` against `ln level` over points with
/// `lo ≤ level ≤ hi` and `S > 0`. `None` with fewer than two such points.
pub fn loglog_slope(points: &[CcdfPoint], lo: f64, hi: f64) -> Option<f64> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.level >= lo && p.level <= hi && p.survival > 0.0 && p.level > 0.0)
        .map(|p| (p.level.ln(), p.survival.ln()))
        .collect();
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

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFewSamples {
            required: 1,
            got: a.len().min(b.len()),
        });
    }
    let fa = EmpiricalCcdf::new(a)?.sorted;
    let fb = EmpiricalCcdf::new(b)?.sorted;
    let (na, nb) = (fa.len() as f64, fb.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < fa.len() && j < fb.len() {
        let x = fa[i].min(fb[j]);
        while i < fa.len() && fa[i] <= x {
            i += 1;
        }
        while j < fb.len() && fb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// 95% critical value of the two-sample KS statistic under the null,
/// `1.358 √((n + m)/(n m))`.
pub fn ks_floor(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.358 * ((n + m) / (n * m)).sqrt()
}
