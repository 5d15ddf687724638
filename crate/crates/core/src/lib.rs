//! Non-dissipative decoherence from randomly distributed evolution times.
//!
//! A closed system evolving under a Liouvillian `L` is observed through the
//! average of its unitary evolution over a Gamma-distributed evolution time.
//! The average is itself a semigroup, `V(t) = (1 + iLτ₁)^(-t/τ₂)`, which damps
//! every coherence of Bohr frequency `ω` at the rate `ln(1 + ω²τ₁²)/2τ₂` while
//! leaving the populations untouched.
//!
//! The crate is organised as
//!
//! * [`gamma_kernel`]: the waiting-time and pulse-area distributions;
//! * [`propagator`]: the averaged evolution applied in the energy eigenbasis;
//! * [`master_equation`]: the generalized and second-order phase-destroying
//!   master equations, solved exactly and by fixed-step integration;
//! * [`monte_carlo`]: sampling estimates used as an independent oracle;
//! * [`models`]: cavity-QED Rabi, Ramsey, trapped-ion and interrupted
//!   evolution front-ends;
//! * [`analysis`]: damped-cosine and power-law fitting.
//!
//! All frequencies are angular (rad/s) and all times are in seconds.

pub mod analysis;
pub mod error;
pub mod gamma_kernel;
pub mod master_equation;
pub mod models;
pub mod monte_carlo;
pub mod propagator;
pub mod quadrature;
pub mod state;

pub use error::{Error, Result};
pub use gamma_kernel::{GammaLaw, PulseAreaDistribution, ScalingTimes, WaitingTimeDistribution};
pub use state::{DensityMatrix, EnergySpectrum};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
