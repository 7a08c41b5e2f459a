//! Exact computational toolkit for directional mixing analysis of lattice
//! group actions.
//!
//! The crate provides strips of lattice points around a direction through the
//! integer lattice, a small zoo of measure-preserving model systems with
//! exact event measures, partition entropy with sequence-entropy
//! constructions, correlation averages along strips, and a two-parameter
//! suspension built over the model systems.
//!
//! All set-level arithmetic is exact: probabilities are rationals, strip
//! geometry and arc lengths live in real quadratic fields, and floating
//! point appears only in entropy values and report columns. The math kernel
//! is generic over the backing integer type; the aliases below pin the
//! default `BigInt` instantiation used by the command-line tools.

pub mod error;
pub mod lattice;
pub mod mixing;
pub mod partition;
pub mod report;
pub mod scalar;
pub mod suspension;
pub mod systems;

pub use error::{Error, Result};
pub use lattice::{
    enumerate_strip, relative_density, strip_cardinality, strip_contains, strip_density,
    sumset_covers_window, DirectionVector, LatticePoint, StripSpec, SumsetCheck,
};
pub use scalar::{ExactInt, QuadExt};

/// Default integer backing: arbitrary precision.
pub type Int = num_bigint::BigInt;

/// Exact rational over the default backing.
pub type Rational = num_rational::Ratio<Int>;

/// Exact scalar (rational or quadratic surd) over the default backing.
pub type Scalar = QuadExt<Int>;
