//! Centralized numerical tolerances.
//!
//! Every module takes its thresholds from one [`Tolerances`] record so a
//! single knob controls the numerical behaviour of the whole solver. The
//! defaults are chosen for well-scaled double-precision data; the
//! `MIQP_OA_TOL` environment variable overrides the factorization base
//! tolerance (see [`Tolerances::from_env`]).

/// Numerical thresholds used across the solver.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Base tolerance for factorizations and linear-system residuals.
    pub factor: f64,
    /// Slack allowed when certifying a matrix positive semidefinite;
    /// checks accept eigenvalue lower bounds down to `-psd_slack * scale`.
    pub psd_slack: f64,
    /// Entries of `x` at or below this are treated as exact zeros when
    /// splitting a point into support and complement.
    pub support: f64,
    /// A relaxation value is considered integral when every `x_i` is
    /// within this distance of 0 or 1.
    pub integrality: f64,
    /// A cut is treated as violated (and added to the master) only when it
    /// cuts away the current point by more than this, relative to the
    /// marginal value scale. Also the outer-approximation stopping slack.
    pub cut_violation: f64,
    /// Stopping threshold for the root-bound cutting-plane loop.
    pub kelley_violation: f64,
    /// Default relative optimality gap for the branch-and-bound.
    pub gap: f64,
    /// Primal feasibility tolerance for the LP and QP solvers.
    pub feas: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            factor: 1e-8,
            psd_slack: 1e-6,
            support: 1e-9,
            integrality: 1e-6,
            cut_violation: 1e-7,
            kelley_violation: 1e-6,
            gap: 1e-4,
            feas: 1e-9,
        }
    }
}

impl Tolerances {
    /// Default tolerances, with the factorization base overridden by the
    /// `MIQP_OA_TOL` environment variable when it is set to a positive
    /// finite number. Unparseable values are ignored.
    pub fn from_env() -> Self {
        let mut t = Tolerances::default();
        if let Ok(s) = std::env::var("MIQP_OA_TOL") {
            if let Ok(v) = s.trim().parse::<f64>() {
                if v.is_finite() && v > 0.0 {
                    t.factor = v;
                }
            }
        }
        t
    }
}
