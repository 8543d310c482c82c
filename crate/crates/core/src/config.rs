use serde::{Deserialize, Serialize};

/// Numerical tolerances threaded through every constructor and check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericConfig {
    /// Max-norm bound on `M - M†` for observables.
    pub hermiticity_tol: f64,
    /// Most negative eigenvalue tolerated in a density operator.
    pub psd_tol: f64,
    /// Allowed deviation of a density operator's trace from one.
    pub trace_tol: f64,
    /// Eigenvalues closer than this are merged into one spectral projector.
    pub degeneracy_tol: f64,
    /// Max-norm bound on `Σ K†K - I` and `Σ effects - I`.
    pub completeness_tol: f64,
    /// Max-norm bound on `U†U - I`.
    pub unitarity_tol: f64,
    /// Outcome probabilities at or below this cannot be conditioned on.
    pub state_prob_floor: f64,
    /// Scalar-operator test used for noise classification and commutator checks.
    pub class_tol: f64,
    /// `η ≤ eta_zero_tol` counts as a non-disturbing instrument.
    pub eta_zero_tol: f64,
    /// `ε ≤ eps_zero_tol` counts as a precise measurement.
    pub eps_zero_tol: f64,
    /// Slack below `-slack_tol` is reported as a violated inequality.
    pub slack_tol: f64,
}

impl Default for NumericConfig {
    fn default() -> Self {
        Self {
            hermiticity_tol: 1e-10,
            psd_tol: 1e-10,
            trace_tol: 1e-10,
            degeneracy_tol: 1e-8,
            completeness_tol: 1e-9,
            unitarity_tol: 1e-9,
            state_prob_floor: 1e-12,
            class_tol: 1e-9,
            eta_zero_tol: 1e-8,
            eps_zero_tol: 1e-8,
            slack_tol: 1e-8,
        }
    }
}

impl NumericConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let all = [
            self.hermiticity_tol,
            self.psd_tol,
            self.trace_tol,
            self.degeneracy_tol,
            self.completeness_tol,
            self.unitarity_tol,
            self.state_prob_floor,
            self.class_tol,
            self.eta_zero_tol,
            self.eps_zero_tol,
            self.slack_tol,
        ];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(crate::Error::InvalidParameter(
                "all tolerances must be positive and finite".into(),
            ))
        }
    }
}
