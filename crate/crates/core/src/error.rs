use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("undetermined mean flow: velocity of the (k, eta) = (0, 0) mode is not defined by vorticity")]
    UndeterminedMeanFlow,

    #[error("symmetrization undefined on zero mode (k = 0)")]
    ZeroModeSymmetrization,

    #[error("lattice overflow: shifting row k = {k} drops {fraction:.3e} of its energy")]
    LatticeOverflow { k: i64, fraction: f64 },

    #[error("Gevrey weight overflow at frequency (k = {k}, eta = {eta})")]
    GevreyWeightOverflow { k: i64, eta: f64 },

    #[error("integrator stall at t = {t} (step size {h:.3e})")]
    IntegratorStall { t: f64, h: f64 },

    #[error("log of nonpositive value {value} at t = {t}")]
    LogOfNonpositive { t: f64, value: f64 },

    #[error("need at least {needed} samples in the fit window, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("unresolved spectrum, increase n_grid (smallest residual {min_residual:.3e})")]
    UnresolvedSpectrum { min_residual: f64 },

    #[error("outside perturbative time-scale: eps^2 * eta / k = {value:.3e} exceeds delta = {delta:.3e}")]
    OutsidePerturbativeTimeScale { value: f64, delta: f64 },

    #[error(
        "time step too large: dt = {dt:.3e} violates the CFL bound, use dt <= {suggested:.3e}"
    )]
    TimeStepTooLarge { dt: f64, suggested: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
