//! Error type shared by the toolkit's fallible operations.

use std::fmt;

use crate::lattice::LatticePoint;

pub type Result<V> = std::result::Result<V, Error>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A point's dimension does not match the strip or system it is used with.
    DimensionMismatch { expected: usize, got: usize },
    /// A point claimed to lie in a strip does not.
    PointOutsideStrip { point: LatticePoint },
    /// A spec-level precondition failed (bad widths, empty window, zero-measure
    /// conditioning set, and similar).
    InvalidSpec(String),
    /// An event is not well-formed for the system it is evaluated against.
    MalformedEvent(String),
    /// A partition fails its disjointness or total-measure check.
    InvalidPartition(String),
    /// A join would exceed the configured atom cap; retry with smaller k or a
    /// coarser partition.
    AtomCapExceeded { cap: usize, attempted: usize },
    /// A greedy point search ran out of first coordinates before satisfying
    /// its tolerance; carries the partial plan found so far.
    SearchExhausted { step: usize, horizon: i64, partial: Vec<LatticePoint> },
    /// A density-one extraction could not certify every requested threshold
    /// within the horizon.
    HorizonTooSmall { requested_p: u32, certified_p: u32, horizon: i64 },
    /// No analytic description of the invariant algebra is registered for
    /// this system/direction pair.
    UnsupportedDecomposition { system: String, direction: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::PointOutsideStrip { point } => {
                write!(f, "point {point} lies outside the strip")
            }
            Error::InvalidSpec(msg) => write!(f, "invalid spec: {msg}"),
            Error::MalformedEvent(msg) => write!(f, "malformed event: {msg}"),
            Error::InvalidPartition(msg) => write!(f, "invalid partition: {msg}"),
            Error::AtomCapExceeded { cap, attempted } => write!(
                f,
                "join would produce {attempted} atoms, over the cap {cap}; \
                 use a smaller k or a coarser partition"
            ),
            Error::SearchExhausted { step, horizon, partial } => write!(
                f,
                "search exhausted at step {step}: no admissible point with first \
                 coordinate <= {horizon} (found {} of the requested points)",
                partial.len()
            ),
            Error::HorizonTooSmall { requested_p, certified_p, horizon } => write!(
                f,
                "horizon {horizon} certifies thresholds only up to p={certified_p} \
                 (requested p={requested_p})"
            ),
            Error::UnsupportedDecomposition { system, direction } => write!(
                f,
                "Kronecker algebra not analytically available for {system} along {direction}"
            ),
        }
    }
}

impl std::error::Error for Error {}
