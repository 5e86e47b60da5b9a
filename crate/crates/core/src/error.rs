use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("sobolev order s={0} outside [0, 1]")]
    SobolevOrderOutOfRange(f64),

    #[error("velocity component {value} is not an admissible wavenumber (needs 2*pi*m/L, L={len})")]
    InadmissibleVelocity { value: f64, len: f64 },

    #[error("width r(t) fell to {r:.3e} at t={t:.6} (below floor {floor:.1e})")]
    WidthCollapse { t: f64, r: f64, floor: f64 },

    #[error("fluid variance beta(t) fell to {beta:.3e} at t={t:.6}")]
    VarianceCollapse { t: f64, beta: f64 },

    #[error("time t={t} outside trajectory range [{t0}, {t1}]")]
    OutOfTrajectory { t: f64, t0: f64, t1: f64 },

    #[error("ODE integration failed: {0}")]
    OdeFailure(String),

    #[error("non-finite value detected at t={t}")]
    NanDetected { t: f64 },

    #[error("spectral resampling would alias: {fraction:.3e} of the energy sits above 90% of Nyquist")]
    AliasingDetected { fraction: f64 },

    #[error("mass mismatch: {a} vs {b}")]
    MassMismatch { a: f64, b: f64 },

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("dimension {dim} unsupported for {what}")]
    DimensionUnsupported { dim: usize, what: &'static str },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),
}
