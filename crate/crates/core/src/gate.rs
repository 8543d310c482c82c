//! Hadamard gates implemented by a system-ancilla unitary under conservation
//! of the total `x` angular momentum.
//!
//! An implementation is a pair `(U, ξ)` acting on qubit ⊗ ancilla; the system
//! channel is `ρ ↦ Tr_A[U(ρ ⊗ |ξ⟩⟨ξ|)U†]`. The ancilla index is the fast one:
//! `|a⟩ ⊗ |j⟩` sits at position `a·k + j`.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::instruments::{rows_of, KrausInstrument, Povm};
use crate::metrics::assess_noise;
use crate::operator::{
    c, ensure_dim, hermitian_eigen, identity, mean_stddev, outer, spectral, tensor, tensor_vec,
    trace_distance, unitarity_defect, unitary_exp, ComplexMatrix, DensityOperator, Observable, StateVector,
    ZERO,
};
use crate::random::{gaussian_matrix, gaussian_vector, haar_unitary, random_unit_vector, seeded, task_rng};
use crate::spin::{basis_vector, hadamard, number_operator, spin_half};
use crate::{Error, NumericConfig, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateImplementation {
    pub ancilla_dim: usize,
    #[serde(with = "crate::codec::matrix")]
    pub unitary: ComplexMatrix,
    #[serde(with = "crate::codec::vector")]
    pub ancilla_vector: StateVector,
}

impl GateImplementation {
    pub fn new(unitary: ComplexMatrix, ancilla_vector: StateVector) -> Result<Self> {
        let imp = Self {
            ancilla_dim: ancilla_vector.len(),
            unitary,
            ancilla_vector,
        };
        imp.validate(&NumericConfig::default())?;
        Ok(imp)
    }

    pub fn validate(&self, cfg: &NumericConfig) -> Result<()> {
        ensure_dim("ancilla vector", self.ancilla_dim, self.ancilla_vector.len())?;
        ensure_dim("implementation rows", 2 * self.ancilla_dim, self.unitary.nrows())?;
        ensure_dim("implementation cols", 2 * self.ancilla_dim, self.unitary.ncols())?;
        let deviation = unitarity_defect(&self.unitary);
        if deviation > cfg.unitarity_tol {
            return Err(Error::NotUnitary { deviation });
        }
        let norm = self.ancilla_vector.norm();
        if (norm - 1.0).abs() > cfg.trace_tol.max(1e-9) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }

    /// `U = H ⊗ I` with ancilla `|0⟩`.
    pub fn exact_hadamard(ancilla_dim: usize) -> Self {
        Self {
            ancilla_dim,
            unitary: tensor(&hadamard(), &identity(ancilla_dim)),
            ancilla_vector: basis_vector(ancilla_dim, 0),
        }
    }

    /// `U(|a⟩ ⊗ ξ)` for `a = 0, 1`.
    fn outputs(&self) -> [StateVector; 2] {
        [0, 1].map(|a| &self.unitary * tensor_vec(&basis_vector(2, a), &self.ancilla_vector))
    }

    /// Kraus operators `K_j = (I ⊗ ⟨j|)U(I ⊗ |ξ⟩)` as plain 2×2 arrays.
    fn kraus_arrays(&self) -> Vec<[[Complex64; 2]; 2]> {
        let k = self.ancilla_dim;
        let out = self.outputs();
        (0..k)
            .map(|j| {
                let mut m = [[ZERO; 2]; 2];
                for b in 0..2 {
                    for a in 0..2 {
                        m[b][a] = out[a][b * k + j];
                    }
                }
                m
            })
            .collect()
    }

    /// The same channel with one more ancilla qubit left idle in `|0⟩`.
    pub fn with_spare_qubit(&self) -> Self {
        Self {
            ancilla_dim: 2 * self.ancilla_dim,
            unitary: tensor(&self.unitary, &identity(2)),
            ancilla_vector: tensor_vec(&self.ancilla_vector, &basis_vector(2, 0)),
        }
    }
}

/// The implemented channel as a one-outcome instrument.
pub fn channel_of(imp: &GateImplementation) -> KrausInstrument {
    let kraus = imp
        .kraus_arrays()
        .into_iter()
        .map(|m| ComplexMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]))
        .collect();
    KrausInstrument::channel(kraus).expect("compressions of a unitary are complete")
}

/// `|E^a_b⟩ = (⟨b| ⊗ I)U(|a⟩ ⊗ |ξ⟩)`, named `e{a}{b}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EVectors {
    #[serde(with = "crate::codec::vector")]
    pub e00: StateVector,
    #[serde(with = "crate::codec::vector")]
    pub e01: StateVector,
    #[serde(with = "crate::codec::vector")]
    pub e10: StateVector,
    #[serde(with = "crate::codec::vector")]
    pub e11: StateVector,
}

impl EVectors {
    /// `‖e_{a0}‖² + ‖e_{a1}‖²` for `a = 0, 1`.
    pub fn norm_sums(&self) -> [f64; 2] {
        [
            self.e00.norm_squared() + self.e01.norm_squared(),
            self.e10.norm_squared() + self.e11.norm_squared(),
        ]
    }

    /// `𝓔(|a⟩⟨a'|) = Σ_{b,b'} ⟨E^{a'}_{b'}|E^a_b⟩ |b⟩⟨b'|`
    pub fn channel_element(&self, a: usize, a2: usize) -> ComplexMatrix {
        let e = |x: usize, y: usize| match (x, y) {
            (0, 0) => &self.e00,
            (0, _) => &self.e01,
            (_, 0) => &self.e10,
            _ => &self.e11,
        };
        ComplexMatrix::from_fn(2, 2, |b, b2| e(a2, b2).dotc(e(a, b)))
    }
}

pub fn e_vectors(imp: &GateImplementation) -> EVectors {
    let k = imp.ancilla_dim;
    let [out0, out1] = imp.outputs();
    EVectors {
        e00: out0.rows(0, k).into_owned(),
        e01: out0.rows(k, k).into_owned(),
        e10: out1.rows(0, k).into_owned(),
        e11: out1.rows(k, k).into_owned(),
    }
}

/// Both sides of each basis-fidelity identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisFidelities {
    /// `½‖e00 + e01‖²`
    pub f0_sq: f64,
    /// `½‖e10 − e11‖²`
    pub f1_sq: f64,
    /// `1 − ½‖e00 − e01‖²`
    pub f0_sq_alt: f64,
    /// `1 − ½‖e10 + e11‖²`
    pub f1_sq_alt: f64,
}

impl BasisFidelities {
    pub fn identity_residual(&self) -> f64 {
        (self.f0_sq - self.f0_sq_alt).abs().max((self.f1_sq - self.f1_sq_alt).abs())
    }
}

pub fn basis_fidelities(imp: &GateImplementation) -> BasisFidelities {
    let ev = e_vectors(imp);
    BasisFidelities {
        f0_sq: 0.5 * (&ev.e00 + &ev.e01).norm_squared(),
        f1_sq: 0.5 * (&ev.e10 - &ev.e11).norm_squared(),
        f0_sq_alt: 1.0 - 0.5 * (&ev.e00 - &ev.e01).norm_squared(),
        f1_sq_alt: 1.0 - 0.5 * (&ev.e10 + &ev.e11).norm_squared(),
    }
}

/// `|ψ⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`
pub fn bloch_state(theta: f64, phi: f64) -> StateVector {
    StateVector::from_vec(vec![
        c((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ])
}

/// Evaluates `F(ψ)² = Σ_j |⟨ψ|H K_j|ψ⟩|²` without building matrices.
struct FidelityKernel {
    hk: Vec<[[Complex64; 2]; 2]>,
}

impl FidelityKernel {
    fn new(imp: &GateImplementation) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let hk = imp
            .kraus_arrays()
            .into_iter()
            .map(|k| {
                let mut m = [[ZERO; 2]; 2];
                for a in 0..2 {
                    m[0][a] = (k[0][a] + k[1][a]) * s;
                    m[1][a] = (k[0][a] - k[1][a]) * s;
                }
                m
            })
            .collect();
        Self { hk }
    }

    fn eval(&self, theta: f64, phi: f64) -> f64 {
        let p0 = c((theta / 2.0).cos(), 0.0);
        let p1 = Complex64::from_polar((theta / 2.0).sin(), phi);
        let psi = [p0, p1];
        self.hk
            .iter()
            .map(|m| {
                let mut q = ZERO;
                for i in 0..2 {
                    for j in 0..2 {
                        q += psi[i].conj() * m[i][j] * psi[j];
                    }
                }
                q.norm_sqr()
            })
            .sum()
    }

    /// Grid minimum refined by Nelder-Mead from the `starts` best cells.
    fn minimise(&self, grid: usize, starts: usize, tol: f64) -> (f64, [f64; 2]) {
        let grid = grid.max(2);
        let mut cells: Vec<(f64, [f64; 2])> = Vec::with_capacity(grid * grid);
        for i in 0..grid {
            let theta = std::f64::consts::PI * i as f64 / (grid - 1) as f64;
            for j in 0..grid {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / grid as f64;
                cells.push((self.eval(theta, phi), [theta, phi]));
            }
        }
        cells.sort_by(|x, y| x.0.total_cmp(&y.0));
        let step = std::f64::consts::PI / grid as f64;
        let mut best = cells[0];
        for &(_, x0) in cells.iter().take(starts) {
            let (x, f) = nelder_mead(|p| self.eval(p[0], p[1]), x0, step, tol);
            if f < best.0 {
                best = (f, x);
            }
        }
        best
    }
}

/// Two-parameter Nelder-Mead minimiser; stops when the simplex spread in
/// value and position both fall below `tol`, or after 2000 iterations.
pub fn nelder_mead(f: impl Fn([f64; 2]) -> f64, x0: [f64; 2], step: f64, tol: f64) -> ([f64; 2], f64) {
    let mut simplex = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]];
    let mut values = simplex.map(&f);
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    for _ in 0..2000 {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        let spread_f = values[2] - values[0];
        let spread_x = simplex[1..]
            .iter()
            .map(|p| (p[0] - simplex[0][0]).abs().max((p[1] - simplex[0][1]).abs()))
            .fold(0.0, f64::max);
        if spread_f <= tol * 1e-6 && spread_x <= tol {
            break;
        }
        let centroid = lerp(simplex[0], simplex[1], 0.5);
        let reflected = lerp(centroid, simplex[2], -1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = lerp(centroid, simplex[2], -2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = if fr < values[2] {
                lerp(centroid, reflected, 0.5)
            } else {
                lerp(centroid, simplex[2], 0.5)
            };
            let fc = f(contracted);
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = lerp(simplex[0], simplex[i], 0.5);
                    values[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap();
    (simplex[best], values[best])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FidelityOptions {
    /// Bloch-angle grid is `grid × grid`.
    pub grid: usize,
    /// Local refinements started from the best grid cells.
    pub refine_starts: usize,
    pub tol: f64,
    /// Random pure inputs on qubit ⊗ reference qubit for the CB-distance bound.
    pub cb_samples: usize,
    pub seed: u64,
}

impl Default for FidelityOptions {
    fn default() -> Self {
        Self {
            grid: 64,
            refine_starts: 8,
            tol: 1e-6,
            cb_samples: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    pub f0_sq: f64,
    pub f1_sq: f64,
    pub gate_fidelity: f64,
    #[serde(with = "crate::codec::vector")]
    pub worst_state: StateVector,
    pub cb_lower_bound: f64,
}

impl FidelityReport {
    /// `1 − F²`
    pub fn gate_error(&self) -> f64 {
        1.0 - self.gate_fidelity * self.gate_fidelity
    }
}

/// `F(ψ)² = ⟨ψ|H†𝓔(|ψ⟩⟨ψ|)H|ψ⟩`
pub fn state_fidelity_sq(imp: &GateImplementation, psi: &StateVector) -> f64 {
    let out = channel_of(imp);
    let rho = outer(psi);
    let target = hadamard() * psi;
    let image = crate::instruments::nonselective_matrix(&out, &rho);
    (target.adjoint() * image * target)[(0, 0)].re
}

pub fn gate_fidelity(imp: &GateImplementation, opts: &FidelityOptions) -> FidelityReport {
    let kernel = FidelityKernel::new(imp);
    let (min_sq, [theta, phi]) = kernel.minimise(opts.grid, opts.refine_starts, opts.tol);
    let worst_state = bloch_state(theta, phi);
    let basis = basis_fidelities(imp);
    FidelityReport {
        f0_sq: basis.f0_sq,
        f1_sq: basis.f1_sq,
        gate_fidelity: min_sq.clamp(0.0, 1.0).sqrt(),
        cb_lower_bound: cb_lower_bound(imp, &worst_state, opts),
        worst_state,
    }
}

/// Largest sampled trace distance between `(𝓔 ⊗ id)(Ψ)` and `(adH ⊗ id)(Ψ)`
/// over pure `Ψ` on qubit ⊗ reference qubit. The worst single-qubit input
/// (with the reference in `|0⟩`) and the maximally entangled input are always
/// included, followed by `cb_samples` random inputs.
pub fn cb_lower_bound(imp: &GateImplementation, worst_state: &StateVector, opts: &FidelityOptions) -> f64 {
    let kraus: Vec<ComplexMatrix> = channel_of(imp)
        .kraus_sets()[0]
        .iter()
        .map(|k| tensor(k, &identity(2)))
        .collect();
    let h = tensor(&hadamard(), &identity(2));
    let distance = |psi: &StateVector| {
        let rho = outer(psi);
        let actual = kraus.iter().fold(ComplexMatrix::zeros(4, 4), |acc, k| acc + k * &rho * k.adjoint());
        let ideal = &h * &rho * h.adjoint();
        trace_distance(&actual, &ideal)
    };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let bell = StateVector::from_vec(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
    let mut best = distance(&tensor_vec(worst_state, &basis_vector(2, 0))).max(distance(&bell));
    let mut rng = seeded(opts.seed);
    for _ in 0..opts.cb_samples {
        best = best.max(distance(&random_unit_vector(&mut rng, 4)));
    }
    best
}

/// `ε(S_z)²` of the measure-`S_x`-after-`U` process, computed three ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SzNoise {
    /// Moment formula with `Π₀{a} = (I ⊗ ⟨ξ|)U†E^{S̃_x}{a}U(I ⊗ |ξ⟩)`.
    pub moment_form: f64,
    /// `‖S̃_x U|ψ ⊗ ξ⟩ − U S̃_z|ψ ⊗ ξ⟩‖²`
    pub norm_form: f64,
    /// `1 − |⟨0|ψ⟩|² F(|0⟩)² − |⟨1|ψ⟩|² F(|1⟩)²`
    pub fidelity_form: f64,
}

impl SzNoise {
    pub fn value(&self) -> f64 {
        self.moment_form
    }

    pub fn path_disagreement(&self) -> f64 {
        (self.moment_form - self.norm_form).abs()
    }

    pub fn fidelity_disagreement(&self) -> f64 {
        (self.moment_form - self.fidelity_form)
            .abs()
            .max((self.norm_form - self.fidelity_form).abs())
    }
}

/// The POVM `Π₀` on the system obtained by applying `U` and measuring `S_x`.
pub fn sz_povm(imp: &GateImplementation, cfg: &NumericConfig) -> Povm {
    let k = imp.ancilla_dim;
    let (sx, _, _) = spin_half();
    let sd = spectral(&Observable::hermitian_part(&sx), cfg);
    let embed_xi = tensor(&identity(2), &ComplexMatrix::from_column_slice(k, 1, imp.ancilla_vector.as_slice()));
    let pulled = &imp.unitary * embed_xi;
    let factors = sd
        .eigenvectors
        .iter()
        .map(|vs| vec![tensor(&rows_of(vs), &identity(k)) * &pulled])
        .collect();
    Povm::from_factors(sd.eigenvalues, factors, 2)
}

pub fn sz_noise(imp: &GateImplementation, psi: &StateVector, cfg: &NumericConfig) -> Result<SzNoise> {
    ensure_dim("input state", 2, psi.len())?;
    let psi = psi.unscale(psi.norm());
    let (sx, _, sz) = spin_half();
    let state = DensityOperator::pure(&psi)?;
    let moment_form = assess_noise(&Observable::hermitian_part(&sz), &sz_povm(imp, cfg), &state)?.rms_noise_sq();

    let k = imp.ancilla_dim;
    let joint = tensor_vec(&psi, &imp.ancilla_vector);
    let lhs = tensor(&sx, &identity(k)) * (&imp.unitary * &joint);
    let rhs = &imp.unitary * (tensor(&sz, &identity(k)) * &joint);
    let norm_form = (lhs - rhs).norm_squared();

    let f = basis_fidelities(imp);
    let fidelity_form = 1.0 - psi[0].norm_sqr() * f.f0_sq - psi[1].norm_sqr() * f.f1_sq;
    Ok(SzNoise {
        moment_form,
        norm_form,
        fidelity_form,
    })
}

/// `S_x ⊗ I + I ⊗ L_x`
pub fn total_charge(ancilla_charge: &Observable) -> Observable {
    let (sx, _, _) = spin_half();
    let k = ancilla_charge.dim();
    Observable::hermitian_part(&(tensor(&sx, &identity(k)) + tensor(&identity(2), ancilla_charge.matrix())))
        .with_label("J_x")
}

/// Orthonormal eigenbases (as columns) of each eigenspace of `charge`.
pub fn charge_blocks(charge: &Observable, cfg: &NumericConfig) -> Vec<ComplexMatrix> {
    spectral(charge, cfg)
        .eigenvectors
        .iter()
        .map(|vs| ComplexMatrix::from_columns(vs))
        .collect()
}

/// `Σ_b V_b W_b V_b†` for block bases `V_b` and block unitaries `W_b`.
pub fn assemble_blocks(blocks: &[ComplexMatrix], unitaries: &[ComplexMatrix]) -> ComplexMatrix {
    let dim = blocks[0].nrows();
    blocks
        .iter()
        .zip(unitaries)
        .fold(ComplexMatrix::zeros(dim, dim), |acc, (v, w)| acc + v * w * v.adjoint())
}

/// Haar-random unitary on each eigenspace of `charge`, assembled in the original basis.
pub fn conserving_unitary_for<R: Rng + ?Sized>(charge: &Observable, rng: &mut R, cfg: &NumericConfig) -> ComplexMatrix {
    let blocks = charge_blocks(charge, cfg);
    let unitaries: Vec<ComplexMatrix> = blocks.iter().map(|v| haar_unitary(rng, v.ncols())).collect();
    assemble_blocks(&blocks, &unitaries)
}

/// Random unitary on qubit ⊗ ancilla commuting with `S_x ⊗ I + I ⊗ L_x`.
pub fn conserving_unitary<R: Rng + ?Sized>(
    ancilla_charge: &Observable,
    rng: &mut R,
    cfg: &NumericConfig,
) -> ComplexMatrix {
    conserving_unitary_for(&total_charge(ancilla_charge), rng, cfg)
}

/// Conserving unitary drawn from a generator seeded with `seed`.
pub fn conserving_unitary_seeded(ancilla_charge: &Observable, seed: u64, cfg: &NumericConfig) -> ComplexMatrix {
    conserving_unitary(ancilla_charge, &mut seeded(seed), cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Coherent,
    Number,
    Thermal,
    SpinEntangled,
    SpinSeparable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub scenario: Scenario,
    /// `⟨N⟩` for field scenarios, `n` for spin ancillas.
    pub parameter: f64,
    /// Lower bound on `1 − F²`.
    pub floor: f64,
    pub achieved_error: Option<f64>,
    pub delta_lx_sq: f64,
}

impl BoundReport {
    pub fn with_achieved(mut self, error: f64) -> Self {
        self.achieved_error = Some(error);
        self
    }

    /// `achieved ≥ floor − tol`, vacuously true when nothing was achieved.
    pub fn respected(&self, tol: f64) -> bool {
        self.achieved_error.is_none_or(|e| e >= self.floor - tol)
    }
}

/// `1/(4 + 4(2ΔL_x)²)`
pub fn floor_from_spread(delta_lx_sq: f64) -> f64 {
    1.0 / (4.0 + 16.0 * delta_lx_sq)
}

/// Floor for a specific ancilla vector: `ΔL_x` evaluated in `ξ`.
pub fn ancilla_floor(ancilla_charge: &Observable, xi: &StateVector) -> Result<f64> {
    let (_, sd) = mean_stddev(ancilla_charge, &DensityOperator::pure(xi)?)?;
    Ok(floor_from_spread(sd * sd))
}

/// Coherent field with `L_x = N` and `(ΔN)² = ⟨N⟩`.
pub fn bound_coherent(mean_photons: f64) -> Result<BoundReport> {
    if !(mean_photons >= 0.0) || !mean_photons.is_finite() {
        return Err(Error::InvalidParameter(format!("mean photon number {mean_photons} must be non-negative")));
    }
    Ok(BoundReport {
        scenario: Scenario::Coherent,
        parameter: mean_photons,
        floor: floor_from_spread(mean_photons),
        achieved_error: None,
        delta_lx_sq: mean_photons,
    })
}

/// `n` spin-½ ancillas: `(ΔL_x)² ≤ n²/4` entangled, `≤ n/4` separable.
pub fn bound_spin(n: u32, entangled: bool) -> Result<BoundReport> {
    if n < 1 {
        return Err(Error::InvalidParameter("spin ancilla needs at least one qubit".into()));
    }
    let n = n as f64;
    let delta_lx_sq = if entangled { n * n / 4.0 } else { n / 4.0 };
    Ok(BoundReport {
        scenario: if entangled { Scenario::SpinEntangled } else { Scenario::SpinSeparable },
        parameter: n,
        floor: floor_from_spread(delta_lx_sq),
        achieved_error: None,
        delta_lx_sq,
    })
}

/// Floor for a field state on the Fock space truncated at `cutoff` photons.
/// Number-diagonal states get `¼`; others use `(ΔN)²` of the truncated state.
pub fn bound_field_state(field_state: &DensityOperator, cutoff: usize) -> Result<BoundReport> {
    ensure_dim("field state", cutoff + 1, field_state.dim())?;
    let number = Observable::hermitian_part(&number_operator(cutoff));
    let (mean, sd) = mean_stddev(&number, field_state)?;
    if field_state.is_diagonal(1e-10) {
        let pure_number = (0..=cutoff).any(|n| (field_state.matrix()[(n, n)].re - 1.0).abs() <= 1e-10);
        return Ok(BoundReport {
            scenario: if pure_number { Scenario::Number } else { Scenario::Thermal },
            parameter: mean,
            floor: 0.25,
            achieved_error: None,
            delta_lx_sq: sd * sd,
        });
    }
    Ok(BoundReport {
        scenario: Scenario::Coherent,
        parameter: mean,
        floor: floor_from_spread(sd * sd),
        achieved_error: None,
        delta_lx_sq: sd * sd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub initial_step: f64,
    /// Bloch grid used for the search objective; certification uses `fidelity.grid`.
    pub search_grid: usize,
    pub fidelity: FidelityOptions,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            iterations: 600,
            restarts: 20,
            seed: 0,
            initial_step: 0.3,
            search_grid: 10,
            fidelity: FidelityOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationOutcome {
    pub best: GateImplementation,
    pub fidelity: FidelityReport,
    pub report: BoundReport,
    /// Certified `1 − F²` of every restart, in restart order.
    pub restart_errors: Vec<f64>,
}

fn search_objective(imp: &GateImplementation, grid: usize) -> f64 {
    FidelityKernel::new(imp).minimise(grid, 2, 1e-6).0
}

fn certify(imp: &GateImplementation, opts: &FidelityOptions) -> FidelityReport {
    gate_fidelity(imp, opts)
}

/// Random-restart hill climbing over conserving unitaries and ancilla vectors,
/// maximising the gate fidelity. Proposals are `U·exp(iεG)` with `G` a random
/// Hermitian matrix commuting with the total charge, and `ξ + εg` renormalised.
/// A supplied warm start is used as restart 0 and is kept if no step improves it.
pub fn optimize_fidelity(
    ancilla_charge: &Observable,
    opts: &OptimizerOptions,
    warm_start: Option<&GateImplementation>,
    cfg: &NumericConfig,
) -> Result<OptimizationOutcome> {
    if opts.restarts == 0 {
        return Err(Error::InvalidParameter("optimizer needs at least one restart".into()));
    }
    let k = ancilla_charge.dim();
    if let Some(w) = warm_start {
        ensure_dim("warm start ancilla", k, w.ancilla_dim)?;
    }
    let total = total_charge(ancilla_charge);
    let blocks = charge_blocks(&total, cfg);
    let spread = {
        let (values, _) = hermitian_eigen(ancilla_charge.matrix());
        values[values.len() - 1] - values[0]
    };

    let results: Vec<(GateImplementation, FidelityReport)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = task_rng(opts.seed, r as u64);
            let start = match (r, warm_start) {
                (0, Some(w)) => w.clone(),
                _ => {
                    let unitaries: Vec<ComplexMatrix> = blocks.iter().map(|v| haar_unitary(&mut rng, v.ncols())).collect();
                    GateImplementation {
                        ancilla_dim: k,
                        unitary: assemble_blocks(&blocks, &unitaries),
                        ancilla_vector: random_unit_vector(&mut rng, k),
                    }
                }
            };
            let mut current = start.clone();
            let mut value = search_objective(&current, opts.search_grid);
            let mut step = opts.initial_step;
            for _ in 0..opts.iterations {
                let generators: Vec<ComplexMatrix> = blocks
                    .iter()
                    .map(|v| {
                        let g = gaussian_matrix(&mut rng, v.ncols(), v.ncols());
                        (&g + g.adjoint()).scale(0.5)
                    })
                    .collect();
                let g = assemble_blocks(&blocks, &generators);
                let unitary = &current.unitary * unitary_exp(&g.scale(step));
                let xi = &current.ancilla_vector + gaussian_vector(&mut rng, k).scale(step / (k as f64).sqrt());
                let candidate = GateImplementation {
                    ancilla_dim: k,
                    unitary,
                    ancilla_vector: xi.unscale(xi.norm()),
                };
                let v = search_objective(&candidate, opts.search_grid);
                if v > value {
                    current = candidate;
                    value = v;
                    step = (step * 1.5).min(1.0);
                } else {
                    step = (step * 0.9).max(1e-4);
                }
            }
            let report = certify(&current, &opts.fidelity);
            if r == 0 && warm_start.is_some() {
                let initial = certify(&start, &opts.fidelity);
                if initial.gate_fidelity >= report.gate_fidelity {
                    return (start, initial);
                }
            }
            (current, report)
        })
        .collect();

    let restart_errors: Vec<f64> = results.iter().map(|(_, f)| f.gate_error()).collect();
    let best_index = (0..results.len())
        .min_by(|&i, &j| restart_errors[i].total_cmp(&restart_errors[j]))
        .unwrap();
    let (best, fidelity) = results[best_index].clone();
    let delta_lx_sq = spread * spread / 4.0;
    let report = BoundReport {
        scenario: Scenario::SpinEntangled,
        parameter: spread,
        floor: floor_from_spread(delta_lx_sq),
        achieved_error: Some(fidelity.gate_error()),
        delta_lx_sq,
    };
    Ok(OptimizationOutcome {
        best,
        fidelity,
        report,
        restart_errors,
    })
}

/// Optimises with `n = 1, …, max_n` ancilla qubits (`L_x = Σ S_x^{(j)}`), warm
/// starting each size from the previous optimum with an idle extra qubit.
pub fn optimize_spin_ladder(max_n: usize, opts: &OptimizerOptions, cfg: &NumericConfig) -> Result<Vec<OptimizationOutcome>> {
    let mut outcomes: Vec<OptimizationOutcome> = Vec::new();
    for n in 1..=max_n {
        let charge = Observable::hermitian_part(&crate::spin::collective_sx(n)).with_label("L_x");
        let warm = outcomes.last().map(|o| o.best.with_spare_qubit());
        outcomes.push(optimize_fidelity(&charge, opts, warm.as_ref(), cfg)?);
    }
    Ok(outcomes)
}

/// Random conserving implementation with a random ancilla vector.
pub fn random_conserving_implementation<R: Rng + ?Sized>(
    ancilla_charge: &Observable,
    rng: &mut R,
    cfg: &NumericConfig,
) -> GateImplementation {
    let unitary = conserving_unitary(ancilla_charge, rng, cfg);
    let k = ancilla_charge.dim();
    GateImplementation {
        ancilla_dim: k,
        unitary,
        ancilla_vector: random_unit_vector(rng, k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{commutator, max_abs, max_abs_diff, partial_trace, Keep};
    use crate::random::{haar_unitary, random_density};
    use crate::spin::{collective_sx, coherent_state, pauli_z, sy_plus, thermal_state};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg() -> NumericConfig {
        NumericConfig::default()
    }

    fn qubit_charge() -> Observable {
        Observable::hermitian_part(&spin_half().0)
    }

    fn identity_impl() -> GateImplementation {
        GateImplementation::new(identity(4), basis_vector(2, 0)).unwrap()
    }

    fn swap() -> ComplexMatrix {
        crate::operator::real_matrix(
            4,
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        )
    }

    #[test]
    fn channel_examples() {
        let mut rng = seeded(1);
        let h = GateImplementation::exact_hadamard(2);
        let ch = channel_of(&h);
        for _ in 0..3 {
            let rho = random_density(&mut rng, 2);
            let out = crate::instruments::nonselective_matrix(&ch, rho.matrix());
            assert!(max_abs_diff(&out, &(hadamard() * rho.matrix() * hadamard())) < 1e-14);
            let out = crate::instruments::nonselective_matrix(&channel_of(&identity_impl()), rho.matrix());
            assert!(max_abs_diff(&out, rho.matrix()) < 1e-14);
        }
        let sw = GateImplementation::new(swap(), basis_vector(2, 0)).unwrap();
        let rho = random_density(&mut rng, 2);
        let out = crate::instruments::nonselective_matrix(&channel_of(&sw), rho.matrix());
        // direct partial-trace oracle
        let joint = rho.tensor(&DensityOperator::basis(2, 0));
        let direct = partial_trace(&(swap() * joint.matrix() * swap()), (2, 2), Keep::First).unwrap();
        assert!(max_abs_diff(&out, &direct) < 1e-14);
        assert!(max_abs_diff(&out, DensityOperator::basis(2, 0).matrix()) < 1e-14);
    }

    #[test]
    fn e_vector_examples() {
        let xi = basis_vector(2, 1);
        let ev = e_vectors(&GateImplementation::new(identity(4), xi.clone()).unwrap());
        assert!((&ev.e00 - &xi).norm() < 1e-15 && ev.e01.norm() < 1e-15);
        assert!(ev.e10.norm() < 1e-15 && (&ev.e11 - &xi).norm() < 1e-15);

        let mut rng = seeded(2);
        let xi = random_unit_vector(&mut rng, 3);
        let ev = e_vectors(&GateImplementation::new(tensor(&hadamard(), &identity(3)), xi.clone()).unwrap());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((&ev.e00 - xi.scale(s)).norm() < 1e-14);
        assert!((&ev.e01 - xi.scale(s)).norm() < 1e-14);
        assert!((&ev.e10 - xi.scale(s)).norm() < 1e-14);
        assert!((&ev.e11 + xi.scale(s)).norm() < 1e-14);

        let imp = GateImplementation::new(haar_unitary(&mut rng, 6), random_unit_vector(&mut rng, 3)).unwrap();
        let ev = e_vectors(&imp);
        for s in ev.norm_sums() {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
        let ch = channel_of(&imp);
        for a in 0..2 {
            for a2 in 0..2 {
                let mut unit = ComplexMatrix::zeros(2, 2);
                unit[(a, a2)] = c(1.0, 0.0);
                let direct = crate::instruments::nonselective_matrix(&ch, &unit);
                assert!(max_abs_diff(&direct, &ev.channel_element(a, a2)) < 1e-13);
            }
        }
    }

    #[test]
    fn basis_fidelity_examples() {
        let f = basis_fidelities(&GateImplementation::exact_hadamard(2));
        assert_abs_diff_eq!(f.f0_sq, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.f1_sq, 1.0, epsilon = 1e-14);
        let f = basis_fidelities(&identity_impl());
        assert_abs_diff_eq!(f.f0_sq, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f.f1_sq, 0.5, epsilon = 1e-15);
        // σ_z H swaps H|0⟩ and H|1⟩: e00 = −e01 = ξ/√2 and e10 = e11 = ξ/√2
        let zh = GateImplementation::new(tensor(&(pauli_z() * hadamard()), &identity(2)), basis_vector(2, 0)).unwrap();
        let f = basis_fidelities(&zh);
        assert_abs_diff_eq!(f.f0_sq, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.f1_sq, 0.0, epsilon = 1e-15);
        assert!(f.identity_residual() < 1e-14);
    }

    #[test]
    fn gate_fidelity_examples() {
        let opts = FidelityOptions {
            cb_samples: 50,
            ..Default::default()
        };
        let r = gate_fidelity(&GateImplementation::exact_hadamard(2), &opts);
        assert_abs_diff_eq!(r.gate_fidelity, 1.0, epsilon = 1e-12);
        assert!(r.cb_lower_bound < 1e-7);

        let r = gate_fidelity(&identity_impl(), &opts);
        assert!(r.gate_fidelity < 1e-3, "{}", r.gate_fidelity);
        // oracle: ⟨ψ|H|ψ⟩ = 0 on the worst state
        let w = &r.worst_state;
        assert!((w.adjoint() * hadamard() * w)[(0, 0)].norm() < 1e-3);
        assert!(r.cb_lower_bound >= r.gate_error() - 1e-9);

        let mut rng = seeded(3);
        let imp = random_conserving_implementation(&qubit_charge(), &mut rng, &cfg());
        let r = gate_fidelity(&imp, &opts);
        assert!(r.gate_error() >= 0.125 - 1e-6);
        assert!(r.gate_fidelity <= r.f0_sq.sqrt().min(r.f1_sq.sqrt()) + 1e-9);
        assert_abs_diff_eq!(
            r.gate_fidelity * r.gate_fidelity,
            state_fidelity_sq(&imp, &r.worst_state),
            epsilon = 1e-12
        );
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let (x, f) = nelder_mead(|p| (p[0] - 1.0).powi(2) + 3.0 * (p[1] + 0.5).powi(2), [0.0, 0.0], 0.3, 1e-10);
        assert!((x[0] - 1.0).abs() < 1e-8 && (x[1] + 0.5).abs() < 1e-8 && f < 1e-15);
    }

    #[test]
    fn sz_noise_examples() {
        let mut rng = seeded(4);
        let psi = random_unit_vector(&mut rng, 2);
        let n = sz_noise(&GateImplementation::exact_hadamard(2), &psi, &cfg()).unwrap();
        assert!(n.moment_form < 1e-20 && n.norm_form < 1e-20);

        let n = sz_noise(&identity_impl(), &sy_plus(), &cfg()).unwrap();
        assert_abs_diff_eq!(n.moment_form, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(n.norm_form, 0.5, epsilon = 1e-14);

        let imp = random_conserving_implementation(&qubit_charge(), &mut rng, &cfg());
        let n = sz_noise(&imp, &psi, &cfg()).unwrap();
        assert!(n.path_disagreement() < 1e-12);
        assert!(n.fidelity_disagreement() < 1e-12);
    }

    #[test]
    fn conserving_unitary_examples() {
        let mut rng = seeded(5);
        let blocks = charge_blocks(&total_charge(&qubit_charge()), &cfg());
        let mut sizes: Vec<usize> = blocks.iter().map(|b| b.ncols()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 1, 2]);

        // nondegenerate total charge: phases only in the charge basis
        let charge = Observable::diagonal(&[0.0, 0.3, 0.7]);
        let total = total_charge(&charge);
        let u = conserving_unitary(&charge, &mut rng, &cfg());
        let (_, basis) = hermitian_eigen(total.matrix());
        let in_basis = basis.adjoint() * &u * &basis;
        let off = in_basis.clone() - ComplexMatrix::from_diagonal(&in_basis.diagonal());
        assert!(max_abs(&off) < 1e-12);

        for _ in 0..100 {
            let u = conserving_unitary(&qubit_charge(), &mut rng, &cfg());
            let total = total_charge(&qubit_charge());
            assert!(max_abs(&commutator(&u, total.matrix())) <= 1e-10);
            assert!(unitarity_defect(&u) < 1e-12);
        }
        let a = conserving_unitary_seeded(&qubit_charge(), 9, &cfg());
        let b = conserving_unitary_seeded(&qubit_charge(), 9, &cfg());
        assert_eq!(a, b);
    }

    #[test]
    fn closed_form_floors() {
        assert_eq!(bound_coherent(0.0).unwrap().floor, 0.25);
        assert_abs_diff_eq!(bound_coherent(1.0).unwrap().floor, 0.05, epsilon = 1e-15);
        assert!(bound_coherent(2.0).unwrap().floor < bound_coherent(1.0).unwrap().floor);
        assert!(bound_coherent(-1.0).is_err());
        assert_abs_diff_eq!(bound_spin(1, true).unwrap().floor, 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(bound_spin(1, false).unwrap().floor, 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(bound_spin(5, true).unwrap().floor, 1.0 / 104.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bound_spin(5, false).unwrap().floor, 1.0 / 24.0, epsilon = 1e-15);
        assert!(bound_spin(0, true).is_err());
    }

    #[test]
    fn field_state_floors() {
        let number = DensityOperator::basis(17, 3);
        let r = bound_field_state(&number, 16).unwrap();
        assert_eq!((r.scenario, r.floor), (Scenario::Number, 0.25));

        let thermal = thermal_state(0.8, 16);
        let r = bound_field_state(&thermal, 16).unwrap();
        assert_eq!((r.scenario, r.floor), (Scenario::Thermal, 0.25));

        let coherent = DensityOperator::pure(&coherent_state(c(1.0, 0.0), 16)).unwrap();
        let r = bound_field_state(&coherent, 16).unwrap();
        assert_abs_diff_eq!(r.floor, 0.05, epsilon = 1e-3);
        assert!(bound_field_state(&coherent, 12).is_err());
    }

    #[test]
    fn optimizer_respects_single_qubit_floor() {
        let opts = OptimizerOptions {
            iterations: 30,
            restarts: 4,
            seed: 7,
            fidelity: FidelityOptions {
                grid: 24,
                cb_samples: 20,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = optimize_fidelity(&qubit_charge(), &opts, None, &cfg()).unwrap();
        assert_abs_diff_eq!(out.report.floor, 0.125, epsilon = 1e-15);
        assert!(out.restart_errors.iter().all(|e| *e >= 0.125 - 1e-6));
        assert!(out.report.respected(1e-6));
        assert!(max_abs(&commutator(&out.best.unitary, total_charge(&qubit_charge()).matrix())) < 1e-9);
    }

    #[test]
    fn spare_qubit_keeps_the_channel() {
        let mut rng = seeded(8);
        let imp = random_conserving_implementation(&qubit_charge(), &mut rng, &cfg());
        let bigger = imp.with_spare_qubit();
        let total = total_charge(&Observable::hermitian_part(&collective_sx(2)));
        assert!(max_abs(&commutator(&bigger.unitary, total.matrix())) < 1e-12);
        let opts = FidelityOptions {
            cb_samples: 0,
            ..Default::default()
        };
        assert_abs_diff_eq!(
            gate_fidelity(&imp, &opts).gate_fidelity,
            gate_fidelity(&bigger, &opts).gate_fidelity,
            epsilon = 1e-12
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn sz_paths_and_floor(seed in any::<u64>(), k in 2usize..=4) {
            let mut rng = seeded(seed);
            let charge = Observable::hermitian_part(&crate::spin::spin_operators(k).0);
            let imp = random_conserving_implementation(&charge, &mut rng, &cfg());
            let psi = random_unit_vector(&mut rng, 2);
            let n = sz_noise(&imp, &psi, &cfg()).unwrap();
            prop_assert!(n.path_disagreement() <= 1e-9);
            prop_assert!(n.fidelity_disagreement() <= 1e-9);
            let at_sy = sz_noise(&imp, &sy_plus(), &cfg()).unwrap().value();
            prop_assert!(at_sy >= ancilla_floor(&charge, &imp.ancilla_vector).unwrap() - 1e-9);
            let f = basis_fidelities(&imp);
            prop_assert!(f.identity_residual() <= 1e-10);
            for s in e_vectors(&imp).norm_sums() {
                prop_assert!((s - 1.0).abs() <= 1e-10);
            }
        }
    }
}
