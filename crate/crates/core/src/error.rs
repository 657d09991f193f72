use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state is not normalized: squared norm {norm_sqr}")]
    Normalization { norm_sqr: f64 },

    #[error("mode {mode} out of range for a register of {num_modes} modes")]
    ModeOutOfRange { mode: usize, num_modes: usize },

    #[error("{name} = {value} is outside its allowed range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("coupler must act on two distinct modes (got {0} twice)")]
    InvalidCoupler(usize),

    #[error("unsupported photon number {0}: at most two photons are simulated")]
    UnsupportedSize(usize),

    #[error("states live on different registers ({0} vs {1} modes)")]
    RegisterMismatch(usize, usize),

    #[error("invalid post-selection groups: {0}")]
    Configuration(String),

    #[error("post-selection succeeded with zero probability")]
    DegeneratePostselection,

    #[error("no coincidences recorded")]
    EmptyData,

    #[error("detector efficiency must be positive (got {0})")]
    ZeroEfficiency(f64),

    #[error("internal error: {0}")]
    Internal(String),
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfRange { name, value })
    }
}
