//! Physical front-ends: cavity-QED vacuum Rabi oscillations, Ramsey
//! interferometry in the dispersive regime, trapped-ion blue-sideband
//! oscillations and the periodically interrupted evolution.

pub mod interrupted;
pub mod ion;
pub mod rabi;
pub mod ramsey;

pub use interrupted::interrupted_f;
pub use ion::{IonParams, PowerLawExponents};
pub use rabi::RabiQedParams;
pub use ramsey::RamseyParams;

/// A parameter regime in which a closed-form approximation loses accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeWarning {
    pub quantity: &'static str,
    pub value: f64,
    pub limit: f64,
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} = {:.4} exceeds {} (small-tau approximation degraded)",
            self.quantity, self.value, self.limit
        )
    }
}

/// A τ estimate together with any regime warning raised on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct TauEstimate {
    pub tau: f64,
    pub warning: Option<RegimeWarning>,
}
