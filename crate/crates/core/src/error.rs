use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode index {mode} out of range for {num_modes} mode(s)")]
    ModeOutOfRange { mode: usize, num_modes: usize },

    #[error("modes must be distinct, got {0} twice")]
    RepeatedMode(usize),

    #[error("parameter `{name}` = {value} outside its domain ({domain})")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("at least one mode is required")]
    NoModes,

    #[error("covariance matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error(
        "covariance matrix violates the uncertainty relation (smallest symplectic eigenvalue {0})"
    )]
    Unphysical(f64),

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("energy {0} cannot be reached on the charging branch")]
    Unreachable(f64),

    #[error("scaling fit needs at least two points with positive abscissa and ordinate")]
    DegenerateFit,

    #[error("Fock cutoff {0} below the minimum of 8 levels")]
    CutoffTooSmall(usize),

    #[error("Fock simulation would need {0} amplitudes, above the configured limit")]
    FockTooLarge(usize),
}

pub(crate) fn check_domain(
    name: &'static str,
    value: f64,
    ok: bool,
    domain: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            domain,
        })
    }
}

pub(crate) fn check_mode(mode: usize, num_modes: usize) -> Result<()> {
    if mode < num_modes {
        Ok(())
    } else {
        Err(Error::ModeOutOfRange { mode, num_modes })
    }
}
