use thiserror::Error;

/// Which of the two structure forms a residual refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Omega,
    Eta,
}

impl std::fmt::Display for FormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FormKind::Omega => f.write_str("omega"),
            FormKind::Eta => f.write_str("eta"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(
        "frame too small: need {needed} vectors in dimension >= {needed}, got {got} (dim {dim})"
    )]
    FrameTooSmall {
        needed: usize,
        got: usize,
        dim: usize,
    },
    #[error("finite-difference step {step} too large (limit {limit})")]
    StepTooLarge { step: f64, limit: f64 },
    #[error("eta vanishes at {0:?}")]
    EtaVanishes(Vec<f64>),
    #[error("{form} is not closed: residual {residual:e}")]
    NotClosed { form: FormKind, residual: f64 },
    #[error("Lichnerowicz map is singular at {0:?}")]
    SingularFlat(Vec<f64>),
    #[error("function `{0}` is not basic")]
    NotBasic(&'static str),
    #[error("df is not in the range of the flat map (residual {0:e})")]
    NoSolution(f64),
    #[error("map is not a symplectomorphism: pullback residual {0:e}")]
    NotSymplectomorphism(f64),
    #[error("base dimension {0} is odd")]
    OddBaseDim(usize),
    #[error("point {point:?} is not in the zero level set (value {value:e})")]
    NotInLevelSet { point: Vec<f64>, value: f64 },
    #[error("parametrization is not an immersion at {0:?}")]
    ParamNotImmersion(Vec<f64>),
    #[error("parameters out of range: {0}")]
    OutOfRange(String),
    #[error("scenario has no torus action")]
    NoAction,
    #[error("scenario has no moment map")]
    NoMomentMap,
    #[error("scenario is not classified: {0}")]
    NotClassified(String),
    #[error("moment image is empty inside the clip box")]
    EmptyImage,
    #[error("moment bodies of dimension {0} are not supported")]
    UnsupportedDimension(usize),
    #[error("0 is not a regular value of the moment map at {0:?}")]
    NotRegularValue(Vec<f64>),
    #[error("slice is not transverse to the orbits at {0:?}")]
    SliceNotTransverse(Vec<f64>),
    #[error("scenario has no foliation")]
    NoFoliation,
    #[error("leaf flow left the chart at {0:?}")]
    FlowLeftChart(Vec<f64>),
    #[error("not a submersion groupoid chart: {0}")]
    NotSubmersionGroupoidShape(String),
    #[error("return map does not fix the origin (|R(0)| = {0:e})")]
    OriginNotFixed(f64),
    #[error("action is not equivariant under the monodromy: residual {0:e}")]
    NotEquivariant(f64),
    #[error("i/o: {0}")]
    Io(String),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
