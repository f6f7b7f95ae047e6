use thiserror::Error;

/// Location and value of the first non-positive density found while
/// evaluating a Fisher-Rao weight.
///
/// `node` indexes the volume quadrature nodes of the cell first
/// (`0..n_q^dim`); face nodes follow, numbered face by face.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("density lost positivity in cell {cell} at quadrature node {node} (value {value:e}){}", context(*.t, *.stage))]
pub struct PositivityLost {
    pub cell: usize,
    pub node: usize,
    pub value: f64,
    pub t: Option<f64>,
    pub stage: Option<usize>,
}

fn context(t: Option<f64>, stage: Option<usize>) -> String {
    match (t, stage) {
        (Some(t), Some(s)) => format!(" at t = {t} (stage {s})"),
        (Some(t), None) => format!(" at t = {t}"),
        (None, Some(s)) => format!(" in stage {s}"),
        (None, None) => String::new(),
    }
}

impl PositivityLost {
    pub fn at_time(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn in_stage(mut self, stage: usize) -> Self {
        self.stage = Some(stage);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("point {0:?} lies outside the unit domain")]
    OutsideDomain(Vec<f64>),
    #[error("basis index {index} out of range for order {order}")]
    IndexOutOfRange { index: usize, order: usize },
    #[error("Clenshaw-Curtis rule needs at least 2 points, got {0}")]
    TooFewQuadraturePoints(usize),
    #[error(transparent)]
    PositivityLost(#[from] PositivityLost),
    #[error("mass block of cell {0} is not positive definite")]
    SingularMass(usize),
    #[error("singular linear system")]
    SingularSystem,
    #[error("unknown problem '{0}'")]
    UnknownProblem(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("Newton iteration stopped after {iterations} iterations with residual {residual:e}")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("candidate density is not positive at an objective quadrature node")]
    NonPositiveCandidate,
    #[error("step {dt} moves particles across more than one cell (h = {h})")]
    StepTooLarge { dt: f64, h: f64 },
    #[error("velocity must be positive on the oracle cell and its upstream neighbour")]
    NonPositiveVelocity,
    #[error("trajectory is empty")]
    EmptyTrajectory,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
