//! Seeded randomized sweeps over the library's relations and constructions.
//!
//! Every sample draws from its own stream `task_rng(seed, index)`, samples run
//! data-parallel, and results are folded in index order so a summary depends
//! only on the seed and the sample count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gate::{
    ancilla_floor, basis_fidelities, gate_fidelity, random_conserving_implementation, sz_noise, FidelityOptions,
    GateImplementation,
};
use crate::instruments::{
    action_distance, dilate_channel, dilate_instrument, instrument_from_model, naimark_extension, JointPovm,
    KrausInstrument, Povm,
};
use crate::metrics::{assess_noise, is_spectral_measure};
use crate::operator::{spectral, ComplexMatrix, DensityOperator, Observable};
use crate::random::{
    distinct_labels, haar_unitary, random_channel, random_density, random_hermitian, random_instrument,
    random_joint_povm, random_povm, random_pure, random_unit_vector, task_rng, SweepRng,
};
use crate::relations::{heisenberg_check, instrument_chain, joint_direct_chain, joint_povm_chain};
use crate::spin::spin_operators;
use crate::way::{random_conserving_instance, way_audit};
use crate::{NumericConfig, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkSummary {
    pub name: String,
    pub min_slack: f64,
    /// A sample violates the link when its slack is below `-tolerance`.
    pub tolerance: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub name: String,
    pub samples: usize,
    /// Samples that entered the links; the rest did not meet the sweep's premise.
    pub qualifying: usize,
    pub links: Vec<LinkSummary>,
}

impl SweepSummary {
    pub fn violations(&self) -> usize {
        self.links.iter().map(|l| l.violations).sum()
    }

    pub fn min_slack(&self) -> f64 {
        self.links.iter().map(|l| l.min_slack).fold(f64::INFINITY, f64::min)
    }

    pub fn link(&self, name: &str) -> Option<&LinkSummary> {
        self.links.iter().find(|l| l.name == name)
    }
}

/// Runs `sample` on `count` independent streams. A sample returns its slacks in
/// the order of `links`, or `None` when it does not qualify.
fn run<F>(name: &str, seed: u64, count: usize, links: &[(&str, f64)], sample: F) -> Result<SweepSummary>
where
    F: Fn(&mut SweepRng) -> Result<Option<Vec<f64>>> + Sync,
{
    let results: Vec<Option<Vec<f64>>> = (0..count)
        .into_par_iter()
        .map(|i| sample(&mut task_rng(seed, i as u64)))
        .collect::<Result<_>>()?;
    let mut summary: Vec<LinkSummary> = links
        .iter()
        .map(|&(n, tolerance)| LinkSummary {
            name: n.to_string(),
            min_slack: f64::INFINITY,
            tolerance,
            violations: 0,
        })
        .collect();
    let mut qualifying = 0;
    for slacks in results.iter().flatten() {
        qualifying += 1;
        for (link, &s) in summary.iter_mut().zip(slacks) {
            link.min_slack = link.min_slack.min(s);
            if !(s >= -link.tolerance) {
                link.violations += 1;
            }
        }
    }
    Ok(SweepSummary {
        name: name.to_string(),
        samples: count,
        qualifying,
        links: summary,
    })
}

/// Inclusive range of Hilbert-space dimensions drawn uniformly per sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub min: usize,
    pub max: usize,
}

impl Dims {
    pub const fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }

    pub fn is_valid(&self, smallest: usize) -> bool {
        self.min >= smallest && self.min <= self.max
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(self.min..=self.max)
    }
}

pub const SYSTEM_DIMS: Dims = Dims::new(2, 4);
pub const ANCILLA_DIMS: Dims = Dims::new(2, 5);

fn random_state(rng: &mut SweepRng, dim: usize) -> DensityOperator {
    if rng.random_bool(0.5) {
        random_pure(rng, dim)
    } else {
        random_density(rng, dim)
    }
}

fn random_kraus_layout(rng: &mut SweepRng) -> Vec<usize> {
    let outcomes = rng.random_range(1..=3);
    (0..outcomes).map(|_| rng.random_range(1..=2)).collect()
}

fn chain_names() -> [&'static str; 3] {
    [
        "error products >= spread products",
        "spread products >= noise commutators",
        "noise commutators >= target commutator",
    ]
}

/// Joint POVM whose marginals measure `A` and `B` with state-independent
/// offsets: with weight `p` a scaled spectral measurement of `A`, otherwise of `B`.
pub fn uncorrelated_joint<R: Rng + ?Sized>(rng: &mut R, a: &Observable, b: &Observable, cfg: &NumericConfig) -> JointPovm {
    let p = rng.random_range(0.2..0.8);
    let (r, r2) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let sa = spectral(a, cfg);
    let sb = spectral(b, cfg);
    let mut outcomes = Vec::new();
    let mut effects: Vec<ComplexMatrix> = Vec::new();
    for (l, proj) in sa.eigenvalues.iter().zip(&sa.projectors) {
        outcomes.push((l / p + r, r2));
        effects.push(proj.scale(p));
    }
    for (m, proj) in sb.eigenvalues.iter().zip(&sb.projectors) {
        outcomes.push((r, m / (1.0 - p) + r2));
        effects.push(proj.scale(1.0 - p));
    }
    JointPovm::merging(outcomes, effects).expect("scaled spectral measures are complete")
}

#[derive(Debug, Clone)]
pub struct HeisenbergSample {
    pub a: Observable,
    pub b: Observable,
    pub instrument: KrausInstrument,
    pub state: DensityOperator,
}

/// Mixture of generic instruments and Lüders measurements of `A`, some with
/// shifted labels and some with `B` commuting with `A`, so that every
/// sufficient condition is exercised.
pub fn heisenberg_sample<R: Rng + ?Sized>(rng: &mut R, cfg: &NumericConfig) -> HeisenbergSample {
    heisenberg_sample_in(rng, SYSTEM_DIMS, cfg)
}

pub fn heisenberg_sample_in<R: Rng + ?Sized>(rng: &mut R, dims: Dims, cfg: &NumericConfig) -> HeisenbergSample {
    let d = dims.draw(rng);
    let state = if rng.random_bool(0.5) {
        random_pure(rng, d)
    } else {
        random_density(rng, d)
    };
    let a = random_hermitian(rng, d);
    let commuting_b = |rng: &mut R| {
        let sd = spectral(&a, cfg);
        let values = distinct_labels(rng, sd.len());
        let m = sd
            .projectors
            .iter()
            .zip(values)
            .fold(ComplexMatrix::zeros(d, d), |acc, (p, v)| acc + p.scale(v));
        Observable::hermitian_part(&m)
    };
    let (b, instrument) = match rng.random_range(0..4) {
        0 => {
            let b = random_hermitian(rng, d);
            let layout: Vec<usize> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(1..=2)).collect();
            (b, random_instrument(rng, d, &layout))
        }
        1 => (commuting_b(rng), KrausInstrument::lueders(&a, cfg)),
        2 => {
            let shift = rng.random_range(-1.0..1.0);
            let mut instr = KrausInstrument::lueders(&a, cfg);
            instr.relabel(|x| x + shift);
            (commuting_b(rng), instr)
        }
        _ => (random_hermitian(rng, d), KrausInstrument::lueders(&a, cfg)),
    };
    HeisenbergSample { a, b, instrument, state }
}

/// Instrument chain over random instruments, observables and states.
pub fn instrument_chain_sweep(seed: u64, count: usize, dims: Dims, cfg: &NumericConfig) -> Result<SweepSummary> {
    let names = chain_names().map(|n| (n, cfg.slack_tol));
    run("instrument chain", seed, count, &names, |rng| {
        let d = dims.draw(rng);
        let layout = random_kraus_layout(rng);
        let instr = random_instrument(rng, d, &layout);
        let (a, b) = (random_hermitian(rng, d), random_hermitian(rng, d));
        let state = random_state(rng, d);
        let r = instrument_chain(&a, &b, &instr, &state, cfg)?;
        Ok(Some(r.links.iter().map(|l| l.slack).collect()))
    })
}

/// Chain for direct measurement of commuting `C, D` as approximants of `A, B`.
pub fn direct_chain_sweep(seed: u64, count: usize, dims: Dims, cfg: &NumericConfig) -> Result<SweepSummary> {
    let names = chain_names().map(|n| (n, cfg.slack_tol));
    run("joint direct chain", seed, count, &names, |rng| {
        let d = dims.draw(rng);
        let v = haar_unitary(rng, d);
        let diag = |rng: &mut SweepRng| {
            let values: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            Observable::hermitian_part(&(&v * Observable::diagonal(&values).matrix() * v.adjoint()))
        };
        let (c, dd) = (diag(rng), diag(rng));
        let (a, b) = (random_hermitian(rng, d), random_hermitian(rng, d));
        let state = random_state(rng, d);
        let r = joint_direct_chain(&a, &b, &c, &dd, &state, cfg)?;
        Ok(Some(r.links.iter().map(|l| l.slack).collect()))
    })
}

pub fn joint_povm_sweep(seed: u64, count: usize, dims: Dims, cfg: &NumericConfig) -> Result<SweepSummary> {
    let names = chain_names().map(|n| (n, cfg.slack_tol));
    run("joint POVM chain", seed, count, &names, |rng| {
        let d = dims.draw(rng);
        let (nx, ny) = (rng.random_range(2..=3), rng.random_range(2..=3));
        let joint = random_joint_povm(rng, d, nx, ny);
        let (a, b) = (random_hermitian(rng, d), random_hermitian(rng, d));
        let state = random_state(rng, d);
        let r = joint_povm_chain(&a, &b, &joint, &state, cfg)?;
        Ok(Some(r.links.iter().map(|l| l.slack).collect()))
    })
}

/// Heisenberg product over samples meeting at least one sufficient condition.
pub fn heisenberg_sweep(seed: u64, count: usize, dims: Dims, cfg: &NumericConfig) -> Result<SweepSummary> {
    run(
        "heisenberg conditions",
        seed,
        count,
        &[("eps(A)eta(B) >= half|<[A,B]>|", cfg.slack_tol)],
        |rng| {
            let s = heisenberg_sample_in(rng, dims, cfg);
            let r = heisenberg_check(&s.a, &s.b, &s.instrument, &s.state, cfg)?;
            Ok(r.any_condition().then(|| vec![r.product - r.bound]))
        },
    )
}

/// Spectral measures have `ε ≤ 1e-10` in random states; random non-spectral
/// POVMs have `ε > 1e-6` in the maximally mixed state.
pub fn zero_noise_sweep(seed: u64, count: usize, dims: Dims, cfg: &NumericConfig) -> Result<SweepSummary> {
    run(
        "zero-noise characterisation",
        seed,
        count,
        &[("1e-10 - eps(A, E^A)", 0.0), ("eps(A, non-spectral) - 1e-6", 0.0)],
        |rng| {
            let d = dims.draw(rng);
            let a = random_hermitian(rng, d);
            let state = random_state(rng, d);
            let exact = assess_noise(&a, &Povm::spectral(&a, cfg), &state)?.rms_noise;
            let povm = if rng.random_bool(0.5) {
                let n = rng.random_range(2..=4);
                random_povm(rng, d, n)
            } else {
                Povm::spectral(&a, cfg).relabeled(|x| x + 0.5)
            };
            let noisy = if is_spectral_measure(&a, &povm, cfg) {
                f64::INFINITY
            } else {
                assess_noise(&a, &povm, &DensityOperator::maximally_mixed(d))?.rms_noise
            };
            Ok(Some(vec![1e-10 - exact, noisy - 1e-6]))
        },
    )
}

/// Instrument and channel dilation round trips and Naimark reconstruction.
pub fn dilation_sweep(seed: u64, count: usize, dims: Dims, cfg: &NumericConfig) -> Result<SweepSummary> {
    run(
        "dilation round trips",
        seed,
        count,
        &[
            ("1e-9 - instrument residual", 0.0),
            ("1e-9 - channel residual", 0.0),
            ("1e-9 - naimark residual", 0.0),
        ],
        |rng| {
            let d = dims.draw(rng);
            let layout = random_kraus_layout(rng);
            let instr = random_instrument(rng, d, &layout);
            let back = instrument_from_model(&dilate_instrument(&instr), cfg)?;
            let r1 = action_distance(&instr, &back);
            let kraus_count = rng.random_range(1..=3);
            let channel = random_channel(rng, d, kraus_count);
            let back = instrument_from_model(&dilate_channel(&channel)?, cfg)?;
            let r2 = action_distance(&channel, &back);
            let n = rng.random_range(2..=4);
            let povm = random_povm(rng, d, n);
            let r3 = naimark_extension(&povm, cfg).reconstruction_error(&povm);
            Ok(Some(vec![1e-9 - r1, 1e-9 - r2, 1e-9 - r3]))
        },
    )
}

/// Random conserving models with a qubit system.
pub fn way_sweep(seed: u64, count: usize, ancilla_dims: Dims, cfg: &NumericConfig) -> Result<SweepSummary> {
    run(
        "quantitative WAY bound",
        seed,
        count,
        &[("eps(A)^2 - bound", cfg.slack_tol)],
        |rng| {
            let k = ancilla_dims.draw(rng);
            let inst = random_conserving_instance(rng, k, cfg);
            let r = way_audit(&inst.model, &inst.observable, &inst.spec, &inst.state, cfg)?;
            Ok(Some(vec![r.margin]))
        },
    )
}

fn random_spin_implementation(rng: &mut SweepRng, cfg: &NumericConfig) -> (Observable, GateImplementation) {
    let k = rng.random_range(2..=4);
    let charge = Observable::hermitian_part(&spin_operators(k).0);
    let imp = random_conserving_implementation(&charge, rng, cfg);
    (charge, imp)
}

/// Agreement of the two `ε(S_z)` paths with the minus-minus fidelity form.
pub fn sign_sweep(seed: u64, count: usize, cfg: &NumericConfig) -> Result<SweepSummary> {
    run(
        "sign adjudication",
        seed,
        count,
        &[("1e-9 - path disagreement", 0.0), ("1e-9 - fidelity-form disagreement", 0.0)],
        |rng| {
            let (_, imp) = random_spin_implementation(rng, cfg);
            let psi = random_unit_vector(rng, 2);
            let n = sz_noise(&imp, &psi, cfg)?;
            Ok(Some(vec![1e-9 - n.path_disagreement(), 1e-9 - n.fidelity_disagreement()]))
        },
    )
}

/// Both forms of each basis fidelity on Haar-random implementations.
pub fn fidelity_identity_sweep(seed: u64, count: usize) -> Result<SweepSummary> {
    run(
        "fidelity identities",
        seed,
        count,
        &[("1e-10 - identity residual", 0.0)],
        |rng| {
            let k = rng.random_range(1..=4);
            let imp = GateImplementation::new(haar_unitary(rng, 2 * k), random_unit_vector(rng, k))?;
            Ok(Some(vec![1e-10 - basis_fidelities(&imp).identity_residual()]))
        },
    )
}

/// Certified `1 − F²` of random conserving implementations against the floor
/// set by their own ancilla vector.
pub fn conserving_gate_sweep(seed: u64, count: usize, opts: &FidelityOptions, cfg: &NumericConfig) -> Result<SweepSummary> {
    let opts = FidelityOptions { cb_samples: 0, ..*opts };
    run(
        "conserving gate floor",
        seed,
        count,
        &[("1 - F^2 - floor", 1e-6)],
        |rng| {
            let (charge, imp) = random_spin_implementation(rng, cfg);
            let report = gate_fidelity(&imp, &opts);
            let floor = ancilla_floor(&charge, &imp.ancilla_vector)?;
            Ok(Some(vec![report.gate_error() - floor]))
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepCounts {
    pub instrument_chain: usize,
    pub direct_chain: usize,
    pub joint_povm: usize,
    pub heisenberg: usize,
    pub zero_noise: usize,
    pub dilation: usize,
}

impl Default for SweepCounts {
    fn default() -> Self {
        Self {
            instrument_chain: 10_000,
            direct_chain: 1000,
            joint_povm: 1000,
            heisenberg: 1000,
            zero_noise: 200,
            dilation: 200,
        }
    }
}

impl SweepCounts {
    pub fn all_positive(&self) -> bool {
        [
            self.instrument_chain,
            self.direct_chain,
            self.joint_povm,
            self.heisenberg,
            self.zero_noise,
            self.dilation,
        ]
        .iter()
        .all(|&n| n > 0)
    }
}

/// Every relation sweep, each on its own derived seed.
pub fn relation_sweeps(seed: u64, counts: &SweepCounts, dims: Dims, cfg: &NumericConfig) -> Result<Vec<SweepSummary>> {
    Ok(vec![
        instrument_chain_sweep(seed, counts.instrument_chain, dims, cfg)?,
        direct_chain_sweep(seed.wrapping_add(1), counts.direct_chain, dims, cfg)?,
        joint_povm_sweep(seed.wrapping_add(2), counts.joint_povm, dims, cfg)?,
        heisenberg_sweep(seed.wrapping_add(3), counts.heisenberg, dims, cfg)?,
        zero_noise_sweep(seed.wrapping_add(4), counts.zero_noise, dims, cfg)?,
        dilation_sweep(seed.wrapping_add(5), counts.dilation, dims, cfg)?,
    ])
}
