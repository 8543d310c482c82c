//! Conservation-law audits of measurement models and the quantitative
//! Wigner-Araki-Yanase lower bound
//!
//! ```text
//! ε(A)² ≥ |⟨[A, L₁]⟩|² / (4(ΔL₁)² + 4(ΔL₂)²)
//! ```
//!
//! for models whose coupling conserves `L₁ ⊗ I + I ⊗ L₂` and whose meter
//! commutes with `L₂`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gate::conserving_unitary_for;
use crate::instruments::{induced_povm, instrument_from_model, MeasurementModel};
use crate::metrics::assess_noise;
use crate::operator::{
    commutator, ensure_dim, hermitian_eigen, identity, max_abs, mean_stddev, tensor, trace_product, DensityOperator,
    Observable,
};
use crate::random::{random_density, random_hermitian, random_pure};
use crate::spin::{spin_half, spin_operators};
use crate::{NumericConfig, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationSpec {
    /// `L₁` on the system
    pub system_charge: Observable,
    /// `L₂` on the probe
    pub ancilla_charge: Observable,
}

impl ConservationSpec {
    /// `L₁ ⊗ I + I ⊗ L₂`
    pub fn total(&self) -> Observable {
        let d = self.system_charge.dim();
        let k = self.ancilla_charge.dim();
        Observable::hermitian_part(
            &(tensor(self.system_charge.matrix(), &identity(k)) + tensor(&identity(d), self.ancilla_charge.matrix())),
        )
    }
}

/// `(‖[U, L̃₁ + L̃₂]‖_max, ‖[M, L₂]‖_max)`
pub fn check_conservation(model: &MeasurementModel, spec: &ConservationSpec) -> Result<(f64, f64)> {
    ensure_dim("system charge", model.system_dim(), spec.system_charge.dim())?;
    ensure_dim("ancilla charge", model.ancilla_dim(), spec.ancilla_charge.dim())?;
    let unitary = max_abs(&commutator(model.unitary(), spec.total().matrix()));
    let meter = max_abs(&commutator(model.meter().matrix(), spec.ancilla_charge.matrix()));
    Ok((unitary, meter))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WayBound {
    /// Right-hand side; `+∞` when the denominator vanishes and the numerator does not.
    pub bound: f64,
    /// `|⟨[A, L₁]⟩|²`
    pub numerator: f64,
    pub delta_l1_sq: f64,
    pub delta_l2_sq: f64,
    pub degenerate_denominator: bool,
}

/// The bound evaluated in `ρ ⊗ σ`: `L₁` statistics in `ρ`, `L₂` statistics in `σ`.
pub fn way_bound(
    a: &Observable,
    spec: &ConservationSpec,
    state: &DensityOperator,
    probe: &DensityOperator,
    cfg: &NumericConfig,
) -> Result<WayBound> {
    ensure_dim("observable", state.dim(), a.dim())?;
    ensure_dim("system charge", state.dim(), spec.system_charge.dim())?;
    ensure_dim("ancilla charge", probe.dim(), spec.ancilla_charge.dim())?;
    let numerator = trace_product(&commutator(a.matrix(), spec.system_charge.matrix()), state.matrix()).norm_sqr();
    let (_, d1) = mean_stddev(&spec.system_charge, state)?;
    let (_, d2) = mean_stddev(&spec.ancilla_charge, probe)?;
    let (delta_l1_sq, delta_l2_sq) = (d1 * d1, d2 * d2);
    let spread = delta_l1_sq + delta_l2_sq;
    let (bound, degenerate_denominator) = if spread <= 1e-14 {
        if numerator > cfg.slack_tol {
            (f64::INFINITY, true)
        } else {
            (0.0, false)
        }
    } else {
        (numerator / (4.0 * spread), false)
    };
    Ok(WayBound {
        bound,
        numerator,
        delta_l1_sq,
        delta_l2_sq,
        degenerate_denominator,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WayReport {
    /// `ε(A)²` of the model's POVM in `ρ`
    pub achieved_noise_sq: f64,
    pub bound: f64,
    /// `achieved_noise_sq − bound`
    pub margin: f64,
    pub numerator: f64,
    pub delta_l1_sq: f64,
    pub delta_l2_sq: f64,
    pub conservation_residual: f64,
    pub meter_residual: f64,
    pub degenerate_denominator: bool,
}

impl WayReport {
    /// Both hypotheses of the bound hold within `tol`.
    pub fn hypotheses_hold(&self, tol: f64) -> bool {
        self.conservation_residual <= tol && self.meter_residual <= tol
    }
}

pub fn way_audit(
    model: &MeasurementModel,
    a: &Observable,
    spec: &ConservationSpec,
    state: &DensityOperator,
    cfg: &NumericConfig,
) -> Result<WayReport> {
    ensure_dim("observable", model.system_dim(), a.dim())?;
    ensure_dim("state", model.system_dim(), state.dim())?;
    let (conservation_residual, meter_residual) = check_conservation(model, spec)?;
    let povm = induced_povm(&instrument_from_model(model, cfg)?);
    let achieved_noise_sq = assess_noise(a, &povm, state)?.rms_noise_sq();
    let b = way_bound(a, spec, state, model.ancilla_state(), cfg)?;
    Ok(WayReport {
        achieved_noise_sq,
        bound: b.bound,
        margin: achieved_noise_sq - b.bound,
        numerator: b.numerator,
        delta_l1_sq: b.delta_l1_sq,
        delta_l2_sq: b.delta_l2_sq,
        conservation_residual,
        meter_residual,
        degenerate_denominator: b.degenerate_denominator,
    })
}

/// A conserving model together with the observable and state it is audited on.
#[derive(Debug, Clone)]
pub struct ConservingInstance {
    pub model: MeasurementModel,
    pub spec: ConservationSpec,
    pub observable: Observable,
    pub state: DensityOperator,
}

/// Qubit system with `L₁ = S_x`, spin-`j` probe of dimension `ancilla_dim` with
/// `L₂ = J_x`, a block-diagonal conserving coupling, and a meter that is a
/// random function of `J_x`. Observable, input state and probe state are random.
pub fn random_conserving_instance<R: Rng + ?Sized>(
    rng: &mut R,
    ancilla_dim: usize,
    cfg: &NumericConfig,
) -> ConservingInstance {
    let l1 = Observable::hermitian_part(&spin_half().0).with_label("S_x");
    let l2 = Observable::hermitian_part(&spin_operators(ancilla_dim).0).with_label("J_x");
    let spec = ConservationSpec {
        system_charge: l1,
        ancilla_charge: l2.clone(),
    };
    let unitary = conserving_unitary_for(&spec.total(), rng, cfg);
    // meter: a random relabelling of the J_x eigenbasis with at most two distinct values
    let (_, basis) = hermitian_eigen(l2.matrix());
    let labels: Vec<f64> = (0..ancilla_dim)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let diag = Observable::diagonal(&labels);
    let meter = Observable::hermitian_part(&(&basis * diag.matrix() * basis.adjoint())).with_label("M");
    let probe = if rng.random_bool(0.5) {
        random_pure(rng, ancilla_dim)
    } else {
        random_density(rng, ancilla_dim)
    };
    let model = MeasurementModel::checked(2, probe, unitary, meter, cfg).expect("conserving coupling is unitary");
    ConservingInstance {
        model,
        spec,
        observable: random_hermitian(rng, 2),
        state: if rng.random_bool(0.5) {
            random_pure(rng, 2)
        } else {
            random_density(rng, 2)
        },
    }
}
