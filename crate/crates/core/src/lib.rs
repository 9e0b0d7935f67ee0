//! Random walks killed at the boundary of cones cut out by products of
//! linear forms: exact survival laws on lattices, Monte Carlo estimators,
//! the positive harmonic function `V` and tail-exponent diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cone;
pub mod error;
pub mod exact;
pub mod harmonic;
pub mod increments;
pub mod lattice;
pub mod oracle;
pub mod polynomial;
pub mod rng;
pub mod walk;

pub use asymptotics::{ExponentFit, FitMethod, VerificationReport};
pub use cone::{ChamberFamily, ConeSpec, HarmonicCone, LinearForm};
pub use error::{Error, Result};
pub use exact::Surd;
pub use harmonic::{HarmonicEstimate, VMethod, VOptions};
pub use increments::{DistSpec, IncrementDistribution, IncrementKind};
pub use oracle::{DpOptions, EndpointLaw, LatticeMeasure};
pub use polynomial::SparsePolynomial;
pub use rng::StreamKey;
pub use walk::{CurveMethod, ExitRecord, SurvivalCurve};
