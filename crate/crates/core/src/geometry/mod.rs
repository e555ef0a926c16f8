//! Exact planar primitives: points, segments, balls, polygonal domains and
//! curve networks, plus the two constructive edits on networks (ball
//! surgery and enlargement to a prescribed length).

mod domain;
mod enlarge;
mod network;
mod point;
mod primitives;
mod surgery;

use thiserror::Error;

pub use domain::DomainSpec;
pub use enlarge::{enlarge_to_length, enlarge_with, EnlargeOptions, Enlargement};
pub use network::{
    contains_network, directed_hausdorff, distance_to_network, hausdorff_distance,
    length_in_ball, nearest_on_network, total_length, CurveNetwork, DEFAULT_TOLERANCE,
};
pub use point::Point2;
pub use primitives::{Ball, Primitive, Segment};
pub use surgery::{ball_surgery, polygonization_error, MIN_ARCS};

use crate::grid::GridError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("empty point set")]
    EmptySet,
    #[error("edge of zero length")]
    ZeroLengthEdge,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("ball radius must be positive")]
    NonPositiveRadius,
    #[error("network tolerance must be positive")]
    BadTolerance,
    #[error("edge references a missing vertex")]
    BadIndex,
    #[error("network is not connected")]
    Disconnected,
    #[error("sphere does not meet the network; surgery would disconnect it")]
    DisconnectedResult,
    #[error("polygon is degenerate")]
    DegeneratePolygon,
    #[error("polygon boundary intersects itself")]
    SelfIntersecting,
    #[error("at least 16 arcs are needed, got {0}")]
    TooFewArcs(usize),
    #[error("target length {target} does not exceed current length {length}")]
    TargetTooSmall { target: f64, length: f64 },
    #[error("no room left to place {missing} units of length")]
    NoRoom { missing: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}
