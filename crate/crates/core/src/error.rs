//! Error type shared by every stage of the pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CegError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CegError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    // --- model validation -------------------------------------------------
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("edge {src} -> {dst} references an unknown vertex")]
    DanglingEdge { src: String, dst: String },
    #[error("edge {src} -> {dst} references unknown d-event `{devent}`")]
    UnknownDEvent {
        src: String,
        dst: String,
        devent: String,
    },
    #[error("vertex `{0}` has more than one parent")]
    MultipleParents(String),
    #[error("the model has no root vertex")]
    NoRoot,
    #[error("the model has more than one root: `{0}` and `{1}`")]
    MultipleRoots(String, String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertex `{0}` is not reachable from the root")]
    Unreachable(String),
    #[error("situation `{vertex}` has two emanating edges with index {index}")]
    DuplicateEdgeIndex { vertex: String, index: u32 },
    #[error("d-event `{devent}` labels more than one edge of the floret at `{vertex}`")]
    DuplicateDEventInFloret { vertex: String, devent: String },
    #[error("situation `{0}` has a single child; florets need at least two edges")]
    DegenerateFloret(String),
    #[error("leaf `{0}` has no leaf status")]
    MissingLeafStatus(String),
    #[error("vertex `{0}` has a leaf status but is not a leaf")]
    StatusOnSituation(String),
    #[error("d-event `{0}` labels edges into leaves with different statuses, or edges into both leaves and situations")]
    InconsistentFailureIndicator(String),
    #[error("situation `{0}` has no probability vector")]
    MissingTheta(String),
    #[error("probability vector of `{vertex}` has {found} entries, floret has {expected}")]
    ThetaLength {
        vertex: String,
        expected: usize,
        found: usize,
    },
    #[error("probability vector of `{vertex}` sums to {sum}, expected 1")]
    ProbabilityNotNormalized { vertex: String, sum: f64 },
    #[error("probability {value} at `{vertex}` is outside the open interval (0, 1)")]
    ProbabilityOutOfOpenInterval { vertex: String, value: f64 },
    #[error("invalid stage declaration: {0}")]
    InvalidStage(String),
    #[error("invalid edge colour declaration: {0}")]
    InvalidColour(String),

    // --- paths and selectors ----------------------------------------------
    #[error("path is not a root-to-leaf path of this tree")]
    PathNotInTree,
    #[error("unknown selector `{0}`")]
    UnknownSelector(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("edge reference `{0}` matches several parallel edges; add `#index`")]
    AmbiguousEdge(String),

    // --- interventions ----------------------------------------------------
    #[error("replacement vector for `{0}` equals the idle vector")]
    IdenticalTheta(String),
    #[error("replacement vector for `{position}` sums to {sum}, expected 1")]
    NotNormalized { position: String, sum: f64 },
    #[error("replacement probability {value} at `{position}` is outside the open interval (0, 1)")]
    OutOfOpenInterval { position: String, value: f64 },
    #[error("position `{0}` is not a position of this CEG")]
    PositionNotInCeg(String),
    #[error("a root-to-sink path traverses both intervened positions `{0}` and `{1}`")]
    OverlappingIntervention(String, String),
    #[error("the set of intervened positions is empty")]
    EmptyInterventionSet,
    #[error("vector length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("missing conditional distribution: {0}")]
    MissingConditional(String),
    #[error("distribution does not sum to 1 (sum = {0})")]
    DistributionNotNormalized(f64),
    #[error("Dirichlet parameters must be strictly positive ({0})")]
    NonPositiveConcentration(String),
    #[error("invalid remedial record: {0}")]
    InvalidRecord(String),
    #[error("indicator edge `{0}` is not labelled by a root-cause d-event")]
    NotARootCauseEdge(String),

    // --- causal queries ---------------------------------------------------
    #[error("controlled d-event `{devent}` also labels edge `{edge}` outside the intervened florets")]
    ControlledEventLeaksOutsideIntervention { devent: String, edge: String },
    #[error("blocks do not partition the intervened paths: {0}")]
    NotAPartition(String),
    #[error("the supplied partition fails the back-door criteria")]
    PartitionNotValid,
    #[error("conditional probability with zero denominator: {0}")]
    UndefinedConditional(String),

    #[error("colour ties cannot be satisfied by a random draw at `{0}`")]
    InfeasibleTies(String),
}

impl CegError {
    pub fn is_parse(&self) -> bool {
        matches!(self, CegError::Parse { .. })
    }

    pub fn parse(err: &serde_json::Error) -> Self {
        let text = err.to_string();
        let suffix = format!(" at line {} column {}", err.line(), err.column());
        CegError::Parse {
            line: err.line(),
            column: err.column(),
            message: text.strip_suffix(&suffix).unwrap_or(&text).to_string(),
        }
    }
}
