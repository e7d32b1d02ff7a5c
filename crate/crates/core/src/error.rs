use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph must have at least one vertex")]
    EmptyGraph,

    #[error("graph has {n} vertices; at most {max} are supported")]
    TooManyVertices { n: usize, max: usize },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("edge ({0}, {1}) appears more than once")]
    MultiEdge(usize, usize),

    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("malformed graph6 input: {0}")]
    Graph6(String),

    #[error("malformed graph input: {0}")]
    GraphInput(String),

    #[error("permutation of length {got} applied to a graph with {expected} vertices")]
    PermutationLength { expected: usize, got: usize },

    #[error("not a permutation: {0}")]
    InvalidPermutation(String),

    #[error("unknown named graph `{0}`")]
    UnknownGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("index ({i}, {j}) out of range for n = {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },

    #[error("auxiliary edge ({0}, {1}) is already an edge of the graph")]
    EdgeInGraph(usize, usize),

    #[error("eigenvalue iteration did not converge at index {index}")]
    NoConvergence { index: usize },

    #[error("characteristic polynomial coefficient {index} has imaginary residue {residue:e}")]
    ImaginaryResidue { index: usize, residue: f64 },

    #[error("steady state is not unique (second-smallest singular value {0:e})")]
    DegenerateSteadyState(f64),

    #[error("dominant eigenvalue is ambiguous (gap {0:e})")]
    AmbiguousBranch(f64),

    #[error("branch crossing detected on the counting-field contour: {0}")]
    BranchCrossing(String),

    #[error("contour cumulant of order {order} disagrees between radii (relative {relative:e})")]
    RadiusConsistency { order: usize, relative: f64 },

    #[error("degenerate zero eigenvalue: |q1| = {0:e}")]
    DegenerateRoot(f64),

    #[error("need cumulants up to order {needed}, have {have}")]
    InsufficientCumulants { needed: usize, have: usize },

    #[error("linear system is singular or too ill-conditioned (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("need more than {needed} samples, have {have}")]
    InsufficientSamples { needed: usize, have: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap this error with the name of the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoConvergence { .. }
            | Error::ImaginaryResidue { .. }
            | Error::DegenerateSteadyState(_)
            | Error::AmbiguousBranch(_)
            | Error::BranchCrossing(_)
            | Error::RadiusConsistency { .. }
            | Error::DegenerateRoot(_)
            | Error::Singular { .. } => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
