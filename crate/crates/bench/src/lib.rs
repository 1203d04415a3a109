//! Shared fixtures for the kernel benchmarks.

use polystretch::{LimitParams, RadialField, RadialGrid, Vec2};

/// Limit model at `k_T β = 0.4`, `σ = β = 1`.
pub fn subcritical_params() -> LimitParams {
    LimitParams::with_kt_beta(0.4, 1.0, 1.0).expect("valid parameters")
}

/// Unit Gaussian on the default radial grid.
pub fn gaussian_field(params: &LimitParams) -> RadialField {
    RadialField::gaussian(RadialGrid::for_params(params).expect("valid grid"), 1.0)
}

/// Deterministic Pareto samples with survival exponent `q`.
pub fn pareto_samples(n: usize, q: f64) -> Vec<f64> {
    (1..=n).map(|i| (i as f64 / (n as f64 + 1.0)).powf(-1.0 / q)).collect()
}

/// Fixed off-axis evaluation point.
pub fn probe_point() -> Vec2 {
    Vec2::new(0.3, 1.1)
}
