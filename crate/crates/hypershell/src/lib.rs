//! Lattice points in hyperbolic shells of indefinite quadratic forms.
//!
//! The crate counts integer points in `{a ≤ Q[x−M] ≤ b, |x|_∞ ≤ r}`, estimates the
//! matching Lebesgue volumes, computes sup-norm successive minima of the lattices
//! `(r(m − tQn), n/r)`, evaluates theta sums, and checks the explicit remainder
//! bounds against measurements.

pub mod bounds;
pub mod counting;
pub mod error;
pub mod forms;
pub mod minima;
pub mod quad;
pub mod rng;
pub mod scalar;
pub mod shells;
pub mod theta;
pub mod volume;

pub use counting::{count_lattice_points, value_gaps, Algorithm, CountResult, GapReport};
pub use error::{Error, Result};
pub use minima::{successive_minima, MinimaProblem, MinimaResult};
pub use forms::{QuadraticForm, Rationality, SpectralSummary};
pub use scalar::{Rational, Scalar, Surd, Track};
pub use shells::{cube_minimum, AnnulusShellSpec, Interval, Region, ShellSpec};
pub use theta::{theta_integral, theta_sum, ThetaParams, ThetaValue};
pub use volume::{delta_report, distribution_delta, volume_estimate, DeltaReport, VolumeEstimate};
