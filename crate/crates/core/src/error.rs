use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::geom::Vec3;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Pipeline stage an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Distance,
    Skeleton,
    Graph,
    Partition,
    Intervals,
    Sweep,
    Cut,
    Relabel,
    Reconstruct,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Distance => "distance",
            Stage::Skeleton => "skeleton",
            Stage::Graph => "graph",
            Stage::Partition => "partition",
            Stage::Intervals => "intervals",
            Stage::Sweep => "sweep",
            Stage::Cut => "cut",
            Stage::Relabel => "relabel",
            Stage::Reconstruct => "reconstruct",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimensions {0:?}")]
    InvalidDims([usize; 3]),
    #[error("invalid spacing {0:?}")]
    InvalidSpacing([f64; 3]),
    #[error("data length {actual} does not match dims (expected {expected})")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("volume has no foreground voxels")]
    EmptyForeground,
    #[error("volume has no background voxels")]
    NoBoundary,
    #[error("disconnected foreground ({0} components)")]
    DisconnectedForeground(usize),
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimsMismatch([usize; 3], [usize; 3]),
    #[error("label {0} not present in volume")]
    AbsentLabel(u32),
    #[error("parameter `{name}` out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("seed voxel {0} is not foreground")]
    SeedOffForeground(usize),
    #[error("back-tracking stagnated at {0:?}")]
    Stagnation(Vec3),
    #[error("skeleton graph contains a cycle through vertices {0:?}")]
    CyclicSkeleton(Vec<usize>),
    #[error("edges {0} and {1} are not adjacent")]
    EdgesNotAdjacent(usize, usize),
    #[error("sub-skeleton concatenation gap {gap} exceeds tolerance at edge {edge}")]
    Discontinuous { edge: usize, gap: f64 },
    #[error("distance field undefined at junction {0:?}")]
    UndefinedRadius(Vec3),
    #[error("cross-section centre {0:?} lies outside the foreground")]
    SectionOutside(Vec3),
    #[error("no cross-sectional contour encloses the centre at {0:?}")]
    NoContour(Vec3),
    #[error("degenerate contour: zero extent around centre")]
    DegenerateContour,
    #[error("decomposition interval has no valid cross-section")]
    EmptyInterval,
    #[error("contours differ in sample count ({0} vs {1})")]
    ContourLength(usize, usize),
    #[error("axis endpoints coincide")]
    DegenerateAxis,
    #[error("frame jump of {degrees:.1} degrees between axis samples")]
    FrameDiscontinuity { degrees: f64 },
    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
    #[error("tube {label} does not fit the grid with a one-radius margin")]
    TubeOutOfBounds { label: u32 },
    #[error("tube {label} radius {radius} is below 1.5 voxels")]
    TubeTooThin { label: u32, radius: f64 },
    #[error("{0}")]
    Other(String),
}

impl Error {
    pub fn at(self, stage: Stage) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Stage tag, when the error was raised inside [`crate::decompose`].
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// The innermost error, stripping stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
