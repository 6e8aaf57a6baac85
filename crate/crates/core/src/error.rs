use thiserror::Error;

/// Errors surfaced by the closed-form operations and numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("momentum outside the tunneling regime: k^2 = {ksq:.6e} >= 2 m V0 = {threshold:.6e}")]
    AboveBarrier { ksq: f64, threshold: f64 },

    #[error("position x = {x} lies outside the barrier interior [-{a}, {a}]")]
    OutsideBarrier { x: f64, a: f64 },

    #[error("invalid parameter {name} = {value}: must be {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("transfer matrix ill-conditioned: cumulative norm {norm:.3e} exceeds guard {guard:.3e}")]
    IllConditioned { norm: f64, guard: f64 },

    #[error("energy E = {e:.6e} outside the open interval (0, V0 = {v0:.6e})")]
    EnergyOutOfRange { e: f64, v0: f64 },

    #[error("S = {s:.12e} outside the attainable range [{lo:.12e}, {hi:.12e}]")]
    PathRange { s: f64, lo: f64, hi: f64 },

    #[error("no turning point: E = {e:.6e} is not below the potential maximum {vmax:.6e}")]
    NoTurningPoint { e: f64, vmax: f64 },

    #[error("classically forbidden point encountered at x = {x}")]
    TurningPointCrossed { x: f64 },

    #[error("density has no pronounced peak (prominence {prominence:.3e} of maximum)")]
    FlatDensity { prominence: f64 },

    #[error("S(D) not monotone at D = {d}: slope {slope:.3e}")]
    NonMonotonic { d: f64, slope: f64 },

    #[error("root finder failed to bracket a sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, CoreError>;

/// Non-fatal conditions reported alongside results.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// sigma_p / k0 exceeds the narrow-band validation threshold (0.1).
    BroadMomentumSpread { ratio: f64 },
    /// Initial packet centre closer to the barrier than 3 sigma_x.
    PacketNearBarrier { separation_sigmas: f64 },
    /// A probability left [0, 1] by more than the stated tolerance.
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    /// Momentum grid clamped so the band stays below the barrier top.
    GridTruncated { requested_max: f64, clamped_max: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::BroadMomentumSpread { ratio } => {
                write!(f, "sigma_p/k0 = {ratio:.3} exceeds the narrow-band threshold 0.1")
            }
            Warning::PacketNearBarrier { separation_sigmas } => write!(
                f,
                "packet centre only {separation_sigmas:.2} sigma_x left of the barrier"
            ),
            Warning::ProbabilityOutOfRange { name, value } => {
                write!(f, "{name} = {value:.6e} lies outside [0, 1]")
            }
            Warning::GridTruncated {
                requested_max,
                clamped_max,
            } => write!(
                f,
                "momentum grid clamped from {requested_max:.6e} to {clamped_max:.6e}"
            ),
        }
    }
}

/// Outcome of the node-doubling convergence check on a quadrature result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convergence {
    Converged,
    /// Doubling the node count still changed the result by this relative amount.
    Unconverged { rel_change: f64 },
}

impl Convergence {
    pub fn is_converged(&self) -> bool {
        matches!(self, Convergence::Converged)
    }
}
