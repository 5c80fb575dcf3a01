use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, CoreError>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("sigma * sigma^T is not positive definite")]
    SingularNoise,
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("non-finite model output at x = {x:?}, theta = {theta:?}")]
    Evaluation { x: Vec<f64>, theta: Vec<f64> },
    #[error("state diverged: x = {x:?}, dt = {dt}")]
    Diverged { x: Vec<f64>, dt: f64 },
    #[error("parameter update diverged at t = {t}: theta = {theta:?}")]
    ParameterDiverged { t: f64, theta: Vec<f64> },
    #[error("parameter norm {norm} exceeded bound {bound} at step {step} (t = {t})")]
    MomentBlowup {
        step: u64,
        t: f64,
        norm: f64,
        bound: f64,
    },
    #[error("step {step}: {source}")]
    AtStep { step: u64, source: Box<CoreError> },
    #[error("integration error: {0}")]
    Integration(String),
    #[error("truncated domain: {0}")]
    Truncation(String),
}

impl CoreError {
    pub(crate) fn at_step(self, step: u64) -> Self {
        CoreError::AtStep {
            step,
            source: Box::new(self),
        }
    }
}
