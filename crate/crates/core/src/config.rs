/// Numerical tolerances shared across the pipeline.
///
/// `base` is the dimensionless tolerance the analysis scales by context:
/// normality residuals are compared against `base * ||M||^2`, norm gaps
/// against `base * max(1, ||M||)`. The environment variable
/// `SPECTRALLOOP_TOL` overrides the default base.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Base relative tolerance (default 1e-10).
    pub base: f64,
    /// Minimal admissible gap between retained eigenvalues (default 1e-8).
    pub gap_min: f64,
    /// Intertwining / lift residual tolerance (default 1e-7).
    pub lift: f64,
}

pub const DEFAULT_BASE_TOL: f64 = 1e-10;
pub const DEFAULT_GAP_MIN: f64 = 1e-8;
pub const DEFAULT_LIFT_TOL: f64 = 1e-7;

impl Default for Tolerances {
    fn default() -> Self {
        let base = std::env::var("SPECTRALLOOP_TOL")
            .ok()
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|t| t.is_finite() && *t > 0.0)
            .unwrap_or(DEFAULT_BASE_TOL);
        Tolerances {
            base,
            gap_min: DEFAULT_GAP_MIN,
            lift: DEFAULT_LIFT_TOL,
        }
    }
}

impl Tolerances {
    pub fn with_base(base: f64) -> Self {
        Tolerances {
            base,
            ..Default::default()
        }
    }

    /// Tolerance for normality residuals ||MM* - M*M||, which scale like ||M||^2.
    pub fn normality(&self, norm: f64) -> f64 {
        self.base * norm * norm
    }

    /// Tolerance for norm-scale comparisons (loop closure, projector defects).
    pub fn norm_scale(&self, norm: f64) -> f64 {
        self.base * norm.max(1.0)
    }
}
