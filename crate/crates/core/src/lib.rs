//! Gate-control-noise decoherence of quantum registers.
//!
//! * [`register`]: basis labels, coherence pairs and pointer variables.
//! * [`noise`]: ohmic reservoirs, classical spectra and correlated noise synthesis.
//! * [`rates`]: analytic dephasing rates and worst-case scaling laws.
//! * [`couplings`]: spurious and transient bus couplings with quadrature checks.
//! * [`mcsim`]: Monte-Carlo dephasing engine used as an independent oracle.
//!
//! Natural units (`ħ = k_B = 1`) are used everywhere.

pub mod couplings;
pub mod mcsim;
pub mod error;
pub mod noise;
pub mod quadrature;
pub mod rates;
pub mod register;

pub use error::{GcnError, Result};
