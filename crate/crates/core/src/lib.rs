//! Exact worst-case uniform error of Fourier partial sums on convolution
//! classes `C^ψ_{β,1}`, and numerical validation of its asymptotics.
//!
//! The class error reduces to the distance, in the sup-norm, from the tail
//! kernel
//!
//! ```text
//! Ψ_{β,n}(t) = Σ_{k≥n} ψ(k) cos(kt − βπ/2)
//! ```
//!
//! to the constants, i.e. half of its oscillation divided by π. Everything in
//! this crate is built around evaluating that quantity with a certified
//! enclosure and comparing it against closed-form main terms.
//!
//! Module map:
//!
//! * [`psi`]: coefficient families, admissibility, decay characteristics.
//! * [`series`]: certified tail sums and the closed forms of the geometric case.
//! * [`kernel`]: the tail kernel, its derivative and envelope decomposition.
//! * [`trig`]: certified global extrema of real trigonometric series.
//! * [`exact`]: the class error, its sandwich bounds and lower-bound witnesses.
//! * [`asymptotics`]: main terms and remainder scales of every asymptotic formula.
//! * [`harness`]: sweep configuration, orchestration and report output.
//! * [`validation`]: the built-in acceptance suite and the dense-grid oracle.

pub mod asymptotics;
pub mod error;
pub mod exact;
pub mod harness;
pub mod kernel;
pub mod psi;
pub mod series;
pub mod trig;
pub mod validation;

mod lnserde;

pub use asymptotics::{FormulaId, Prediction};
pub use error::{Error, Result};
pub use exact::{ErrorEstimate, ExtremaResult, TrigPolynomial};
pub use kernel::{EnvelopeSample, KernelSpec};
pub use psi::{AdmissibilityReport, CharacteristicProfile, PsiFamily, PsiSequence};
pub use series::CertifiedValue;
