use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape {
        context: &'static str,
        expected: String,
        found: String,
    },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("rk4 step rejected: non-finite entries at stage {stage}")]
    RejectedStep { stage: u8 },
    #[error("sample times are not strictly increasing at index {index}")]
    Ordering { index: usize },
    #[error("caustic: |sin(omega t)| = {sin_abs:e} is below {tolerance:e}")]
    Caustic { sin_abs: f64, tolerance: f64 },
    #[error("argument outside its domain: {0}")]
    Domain(String),
    #[error("memory history is missing mesh point {index}")]
    MissingHistory { index: usize },
    #[error("{count} path pairs exceed the tractability bound {limit}")]
    Size { count: f64, limit: f64 },
    #[error("time {time} is not a mesh point")]
    MeshAlignment { time: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("value out of range for oscillator {index}: {detail}")]
    Range { index: usize, detail: String },
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("ancilla cutoff {dim} leaks {leakage:e} thermal weight (limit {limit:e})")]
    Leakage { dim: usize, leakage: f64, limit: f64 },
}

impl Error {
    pub(crate) fn shape(
        context: &'static str,
        expected: impl core::fmt::Display,
        found: impl core::fmt::Display,
    ) -> Self {
        use alloc::string::ToString;
        Error::Shape {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
