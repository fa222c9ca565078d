use thiserror::Error;

use crate::model::LinkId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("target is unreachable: {0}")]
    Unreachable(String),

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error(
        "loop-closure rate solve is singular (|det| = {det:e}): links 12 and 22 are collinear"
    )]
    SingularConfiguration { det: f64 },

    #[error("joint {joint} = {value:.6} rad outside limits [{min:.6}, {max:.6}]")]
    LimitViolation {
        joint: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("yaw singularity: target lies on the joint-0 axis")]
    YawSingularity,

    #[error("pitch singularity: |pitch| = pi")]
    PitchSingularity,

    #[error("infeasible counter-mass mounting on link {link}: {reason}")]
    InfeasibleMounting { link: LinkId, reason: String },

    #[error("missing link profile: {0}")]
    MissingProfile(&'static str),

    #[error("waypoint times must be strictly increasing (index {index})")]
    DuplicateTime { index: usize },

    #[error("infeasible speed law: t_acc + t_dec = {total} s exceeds duration {duration} s")]
    InfeasibleLaw { total: f64, duration: f64 },

    #[error("unknown trajectory id `{0}`")]
    UnknownTrajectory(String),

    #[error("default pose is not valid: {0}")]
    DefaultPoseInvalid(String),

    #[error("workspace cross-section intersects the revolution axis")]
    AxisIntersects,

    #[error("mismatched experiment runs: {0}")]
    MismatchedRuns(String),

    #[error("trajectory left the workspace at sample {index} (t = {t:.3} s): {reason}")]
    TrajectoryAborted {
        index: usize,
        t: f64,
        reason: String,
    },

    #[error("invalid mechanism: {0}")]
    InvalidSpec(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors that mean "the target is outside the workspace".
    pub fn is_unreachable(&self) -> bool {
        matches!(
            self,
            Error::Unreachable(_) | Error::Singular(_) | Error::LimitViolation { .. }
        )
    }
}
