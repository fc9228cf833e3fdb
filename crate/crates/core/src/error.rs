use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("trivial conjugacy class")]
    TrivialClass,
    #[error("trivial subgroup")]
    TrivialSubgroup,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("conjugator search exceeded word-length cap {0}")]
    SearchBudgetExceeded(usize),
    #[error("images do not form a basis: {0}")]
    NotAnAutomorphism(String),
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("invalid word: {0}")]
    InvalidWord(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("empty set")]
    EmptySet,
    #[error("optimality gap: best Lipschitz constant {best}, certificate {target}")]
    OptimalityGap { best: String, target: String },
    #[error("map is not tense on every edge")]
    NotTense,
    #[error("vertex {0} has a single gate")]
    NotTrainTrack(usize),
    #[error("event cap {0} exceeded")]
    EventCapExceeded(usize),
    #[error("turn at position {0} is not illegal")]
    NotIllegalEndpoint(usize),
    #[error("rank {0} admits no proper free factors")]
    RankTooSmall(usize),
    #[error("folding path spans too little time for gap {0}")]
    SpanTooShort(String),
    #[error("element is not of finite order within cap {0}")]
    NotFiniteOrder(usize),
    #[error("abelianization is not unimodular")]
    NonUnimodular,
    #[error("generator {0} is trivial in Out")]
    TrivialGenerator(String),
    #[error("points lie in different fibers")]
    DifferentFibers,
    #[error("path is not a geodesic: {0}")]
    NotGeodesic(String),
    #[error("no geodesic of length {0} in the explored ball")]
    NoGeodesicOfLength(usize),
    #[error("ball of radius {explored} too small, need {needed}")]
    BallTooSmall { explored: usize, needed: usize },
}

impl Error {
    /// Budget-type failures map to a distinct CLI exit status.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded(_)
                | Error::SearchBudgetExceeded(_)
                | Error::EventCapExceeded(_)
                | Error::BallTooSmall { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::TrivialClass => "TrivialClass",
            Error::TrivialSubgroup => "TrivialSubgroup",
            Error::BudgetExceeded(_) => "BudgetExceeded",
            Error::SearchBudgetExceeded(_) => "SearchBudgetExceeded",
            Error::NotAnAutomorphism(_) => "NotAnAutomorphism",
            Error::RankMismatch(..) => "RankMismatch",
            Error::InvalidWord(_) => "InvalidWord",
            Error::InvalidGraph(_) => "InvalidGraph",
            Error::Parse(_) => "Parse",
            Error::EmptySet => "EmptySet",
            Error::OptimalityGap { .. } => "OptimalityGap",
            Error::NotTense => "NotTense",
            Error::NotTrainTrack(_) => "NotTrainTrack",
            Error::EventCapExceeded(_) => "EventCapExceeded",
            Error::NotIllegalEndpoint(_) => "NotIllegalEndpoint",
            Error::RankTooSmall(_) => "RankTooSmall",
            Error::SpanTooShort(_) => "SpanTooShort",
            Error::NotFiniteOrder(_) => "NotFiniteOrder",
            Error::NonUnimodular => "NonUnimodular",
            Error::TrivialGenerator(_) => "TrivialGenerator",
            Error::DifferentFibers => "DifferentFibers",
            Error::NotGeodesic(_) => "NotGeodesic",
            Error::NoGeodesicOfLength(_) => "NoGeodesicOfLength",
            Error::BallTooSmall { .. } => "BallTooSmall",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
