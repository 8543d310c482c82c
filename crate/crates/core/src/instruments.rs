//! POVMs and Kraus-form instruments with finite outcome sets, indirect
//! measurement models, and the dilation constructions that connect them.
//!
//! An instrument here is a labelled Kraus family `{a ↦ [K_{a,1}, …]}`; the
//! operation for outcome `a` is `ρ ↦ Σ_k K_{a,k} ρ K_{a,k}†`. Every such family
//! arises from a measurement model `(K, σ, U, M)` through
//!
//! ```text
//! I{a}ρ = Tr_K[(I ⊗ E^M{a}) U (ρ ⊗ σ) U†]
//! ```
//!
//! and [`dilate_instrument`] constructs one with a pure probe.

use num_complex::Complex64;

use crate::operator::{
    self, complete_unitary, ensure_dim, hermiticity_defect, identity, max_abs, max_abs_diff, outer,
    psd_sqrt, spectral, tensor, trace_product, unitarity_defect, zeros, ComplexMatrix, DensityOperator,
    Observable, StateVector, ZERO,
};
use crate::{Error, NumericConfig, Result};

const LABEL_TOL: f64 = 1e-9;

fn same_label(a: f64, b: f64) -> bool {
    (a - b).abs() <= LABEL_TOL * a.abs().max(b.abs()).max(1.0)
}

fn check_distinct(labels: &[f64]) -> Result<()> {
    for (i, a) in labels.iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::Malformed(format!("outcome label {a} is not finite")));
        }
        if labels[..i].iter().any(|b| same_label(*a, *b)) {
            return Err(Error::DuplicateOutcome(a.to_string()));
        }
    }
    Ok(())
}

fn check_effects(effects: &[ComplexMatrix], cfg: &NumericConfig) -> Result<usize> {
    let dim = effects
        .first()
        .map(|e| e.nrows())
        .ok_or_else(|| Error::Malformed("empty effect list".into()))?;
    let mut total = zeros(dim);
    for e in effects {
        ensure_dim("effect rows", dim, e.nrows())?;
        ensure_dim("effect cols", dim, e.ncols())?;
        let deviation = hermiticity_defect(e);
        if deviation > cfg.hermiticity_tol {
            return Err(Error::NotHermitian { deviation });
        }
        let (values, _) = operator::hermitian_eigen(e);
        if values[0] < -cfg.psd_tol {
            return Err(Error::NotPositive {
                min_eigenvalue: values[0],
            });
        }
        total += e;
    }
    let deviation = max_abs_diff(&total, &identity(dim));
    if deviation > cfg.completeness_tol {
        return Err(Error::Incomplete { deviation });
    }
    Ok(dim)
}

/// `[√λ_k ⟨v_k|]` stacked as rows, so that `F†F = e` for PSD `e`.
fn eigen_factor(e: &ComplexMatrix) -> ComplexMatrix {
    let (values, vectors) = operator::hermitian_eigen(e);
    let kept: Vec<usize> = (0..values.len()).filter(|&k| values[k] > 0.0).collect();
    ComplexMatrix::from_fn(kept.len(), e.ncols(), |r, j| {
        let k = kept[r];
        vectors[(j, k)].conj() * values[k].sqrt()
    })
}

fn effect_from_factors(dim: usize, factors: &[ComplexMatrix]) -> ComplexMatrix {
    let e = factors.iter().fold(zeros(dim), |acc, f| acc + f.adjoint() * f);
    (&e + e.adjoint()).scale(0.5)
}

/// Outcome-labelled effects summing to the identity.
///
/// Each effect also keeps a factorisation `Π{a} = Σ_j F_j†F_j`. Noise sums are
/// evaluated through the factors, which keeps exact measurements at zero noise
/// to working precision rather than to its square root.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    outcomes: Vec<f64>,
    effects: Vec<ComplexMatrix>,
    factors: Vec<Vec<ComplexMatrix>>,
}

impl Povm {
    pub fn new(outcomes: Vec<f64>, effects: Vec<ComplexMatrix>) -> Result<Self> {
        Self::checked(outcomes, effects, &NumericConfig::default())
    }

    pub fn checked(outcomes: Vec<f64>, effects: Vec<ComplexMatrix>, cfg: &NumericConfig) -> Result<Self> {
        if outcomes.len() != effects.len() {
            return Err(Error::LengthMismatch {
                outcomes: outcomes.len(),
                operators: effects.len(),
            });
        }
        check_distinct(&outcomes)?;
        check_effects(&effects, cfg)?;
        let effects: Vec<ComplexMatrix> = effects.iter().map(|e| (e + e.adjoint()).scale(0.5)).collect();
        let factors = effects.iter().map(|e| vec![eigen_factor(e)]).collect();
        Ok(Self {
            outcomes,
            effects,
            factors,
        })
    }

    /// Builds a POVM from `Π{a} = Σ_j F_j†F_j`; completeness is the caller's contract.
    pub(crate) fn from_factors(outcomes: Vec<f64>, factors: Vec<Vec<ComplexMatrix>>, dim: usize) -> Self {
        let effects = factors.iter().map(|f| effect_from_factors(dim, f)).collect();
        Self {
            outcomes,
            effects,
            factors,
        }
    }

    /// The spectral measure `E^A`, labelled by the eigenvalues of `A`.
    pub fn spectral(obs: &Observable, cfg: &NumericConfig) -> Self {
        let sd = spectral(obs, cfg);
        let factors = sd.eigenvectors.iter().map(|vs| vec![rows_of(vs)]).collect();
        Self {
            outcomes: sd.eigenvalues,
            effects: sd.projectors,
            factors,
        }
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn factors(&self) -> &[Vec<ComplexMatrix>] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &ComplexMatrix)> {
        self.outcomes.iter().copied().zip(self.effects.iter())
    }

    pub fn effect(&self, outcome: f64) -> Option<&ComplexMatrix> {
        self.outcomes
            .iter()
            .position(|&a| same_label(a, outcome))
            .map(|i| &self.effects[i])
    }

    /// Applies `f` to every outcome label; labels that collide are merged.
    pub fn relabeled(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut outcomes: Vec<f64> = Vec::new();
        let mut factors: Vec<Vec<ComplexMatrix>> = Vec::new();
        for (&a, fs) in self.outcomes.iter().zip(&self.factors) {
            let b = f(a);
            match outcomes.iter().position(|&x| same_label(x, b)) {
                Some(i) => factors[i].extend(fs.iter().cloned()),
                None => {
                    outcomes.push(b);
                    factors.push(fs.clone());
                }
            }
        }
        Self::from_factors(outcomes, factors, self.dim())
    }

    /// Whether every effect is an orthogonal projector within `tol`.
    pub fn is_projective(&self, tol: f64) -> bool {
        self.effects.iter().all(|e| max_abs_diff(&(e * e), e) <= tol)
    }

    pub fn probabilities(&self, state: &DensityOperator) -> Result<Vec<(f64, f64)>> {
        ensure_dim("POVM statistics", self.dim(), state.dim())?;
        Ok(self
            .iter()
            .map(|(a, e)| (a, trace_product(e, state.matrix()).re))
            .collect())
    }
}

/// A POVM with outcomes in ℝ².
#[derive(Debug, Clone, PartialEq)]
pub struct JointPovm {
    outcomes: Vec<(f64, f64)>,
    effects: Vec<ComplexMatrix>,
    factors: Vec<ComplexMatrix>,
}

impl JointPovm {
    pub fn new(outcomes: Vec<(f64, f64)>, effects: Vec<ComplexMatrix>) -> Result<Self> {
        Self::checked(outcomes, effects, &NumericConfig::default())
    }

    pub fn checked(
        outcomes: Vec<(f64, f64)>,
        effects: Vec<ComplexMatrix>,
        cfg: &NumericConfig,
    ) -> Result<Self> {
        if outcomes.len() != effects.len() {
            return Err(Error::LengthMismatch {
                outcomes: outcomes.len(),
                operators: effects.len(),
            });
        }
        for (i, (x, y)) in outcomes.iter().enumerate() {
            if outcomes[..i]
                .iter()
                .any(|(u, v)| same_label(*x, *u) && same_label(*y, *v))
            {
                return Err(Error::DuplicateOutcome(format!("({x}, {y})")));
            }
        }
        check_effects(&effects, cfg)?;
        let factors = effects.iter().map(eigen_factor).collect();
        Ok(Self {
            outcomes,
            effects,
            factors,
        })
    }

    /// Like [`JointPovm::new`] but sums the effects of repeated outcome pairs.
    pub fn merging(outcomes: Vec<(f64, f64)>, effects: Vec<ComplexMatrix>) -> Result<Self> {
        let mut merged_o: Vec<(f64, f64)> = Vec::new();
        let mut merged_e: Vec<ComplexMatrix> = Vec::new();
        for ((x, y), e) in outcomes.into_iter().zip(effects) {
            match merged_o
                .iter()
                .position(|(u, v)| same_label(x, *u) && same_label(y, *v))
            {
                Some(i) => merged_e[i] += e,
                None => {
                    merged_o.push((x, y));
                    merged_e.push(e);
                }
            }
        }
        Self::new(merged_o, merged_e)
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn outcomes(&self) -> &[(f64, f64)] {
        &self.outcomes
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }
}

/// Marginal POVMs `Π^A(Δ) = Π(Δ × ℝ)` and `Π^B(Γ) = Π(ℝ × Γ)`, outcomes ascending.
pub fn marginals(joint: &JointPovm) -> (Povm, Povm) {
    let collect = |pick: &dyn Fn(&(f64, f64)) -> f64| {
        let mut labels: Vec<f64> = Vec::new();
        let mut factors: Vec<Vec<ComplexMatrix>> = Vec::new();
        for (o, f) in joint.outcomes.iter().zip(&joint.factors) {
            let a = pick(o);
            match labels.iter().position(|&x| same_label(x, a)) {
                Some(i) => factors[i].push(f.clone()),
                None => {
                    labels.push(a);
                    factors.push(vec![f.clone()]);
                }
            }
        }
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by(|&i, &j| labels[i].total_cmp(&labels[j]));
        Povm::from_factors(
            order.iter().map(|&i| labels[i]).collect(),
            order.iter().map(|&i| factors[i].clone()).collect(),
            joint.dim(),
        )
    };
    (collect(&|o| o.0), collect(&|o| o.1))
}

/// Outcome-labelled Kraus families whose total is trace preserving.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausInstrument {
    outcomes: Vec<f64>,
    kraus: Vec<Vec<ComplexMatrix>>,
}

impl KrausInstrument {
    pub fn new(outcomes: Vec<f64>, kraus: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        Self::checked(outcomes, kraus, &NumericConfig::default())
    }

    pub fn checked(outcomes: Vec<f64>, kraus: Vec<Vec<ComplexMatrix>>, cfg: &NumericConfig) -> Result<Self> {
        if outcomes.len() != kraus.len() {
            return Err(Error::LengthMismatch {
                outcomes: outcomes.len(),
                operators: kraus.len(),
            });
        }
        check_distinct(&outcomes)?;
        let dim = kraus
            .iter()
            .flatten()
            .next()
            .map(|k| k.nrows())
            .ok_or_else(|| Error::Malformed("instrument has no Kraus operators".into()))?;
        let mut total = zeros(dim);
        for (a, set) in outcomes.iter().zip(&kraus) {
            if set.is_empty() {
                return Err(Error::EmptyKrausSet { outcome: *a });
            }
            for k in set {
                ensure_dim("Kraus rows", dim, k.nrows())?;
                ensure_dim("Kraus cols", dim, k.ncols())?;
                if !k.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite);
                }
                total += k.adjoint() * k;
            }
        }
        let deviation = max_abs_diff(&total, &identity(dim));
        if deviation > cfg.completeness_tol {
            return Err(Error::Incomplete { deviation });
        }
        Ok(Self { outcomes, kraus })
    }

    /// Projective (Lüders) instrument: one projector per distinct eigenvalue.
    pub fn lueders(obs: &Observable, cfg: &NumericConfig) -> Self {
        let sd = spectral(obs, cfg);
        Self {
            outcomes: sd.eigenvalues,
            kraus: sd.projectors.into_iter().map(|p| vec![p]).collect(),
        }
    }

    /// One-outcome instrument `ρ ↦ UρU†` labelled 0.
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![0.0], vec![vec![u]])
    }

    /// One-outcome instrument from a Kraus family, labelled 0.
    pub fn channel(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(vec![0.0], vec![kraus])
    }

    pub fn dim(&self) -> usize {
        self.kraus[0][0].nrows()
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn kraus_sets(&self) -> &[Vec<ComplexMatrix>] {
        &self.kraus
    }

    pub fn kraus_count(&self) -> usize {
        self.kraus.iter().map(Vec::len).sum()
    }

    pub fn is_channel(&self) -> bool {
        self.outcomes.len() == 1
    }

    pub fn relabel(&mut self, f: impl Fn(f64) -> f64) {
        for a in &mut self.outcomes {
            *a = f(*a);
        }
    }

    pub fn position(&self, outcome: f64) -> Option<usize> {
        self.outcomes.iter().position(|&a| same_label(a, outcome))
    }

    /// Unnormalised `I{a}(X) = Σ_k K X K†` for outcome index `index`.
    pub fn operation_at(&self, index: usize, x: &ComplexMatrix) -> ComplexMatrix {
        self.kraus[index]
            .iter()
            .fold(zeros(self.dim()), |acc, k| acc + k * x * k.adjoint())
    }

    /// The same family with every Kraus operator collected under one outcome.
    pub fn nonselective(&self) -> Self {
        Self {
            outcomes: vec![0.0],
            kraus: vec![self.kraus.iter().flatten().cloned().collect()],
        }
    }
}

/// Effects `Σ_k K†K` per outcome.
pub fn induced_povm(instr: &KrausInstrument) -> Povm {
    Povm::from_factors(instr.outcomes.clone(), instr.kraus.clone(), instr.dim())
}

pub fn output_distribution(instr: &KrausInstrument, state: &DensityOperator) -> Result<Vec<(f64, f64)>> {
    ensure_dim("output distribution", instr.dim(), state.dim())?;
    Ok((0..instr.outcomes.len())
        .map(|i| {
            let p = instr.kraus[i]
                .iter()
                .map(|k| trace_product(&(k.adjoint() * k), state.matrix()).re)
                .sum();
            (instr.outcomes[i], p)
        })
        .collect())
}

/// Post-measurement state conditioned on `outcome`.
pub fn output_state(
    instr: &KrausInstrument,
    state: &DensityOperator,
    outcome: f64,
    cfg: &NumericConfig,
) -> Result<DensityOperator> {
    ensure_dim("output state", instr.dim(), state.dim())?;
    let index = instr.position(outcome).ok_or(Error::UnknownOutcome(outcome))?;
    let unnormalised = instr.operation_at(index, state.matrix());
    let probability = unnormalised.trace().re;
    if probability <= cfg.state_prob_floor {
        return Err(Error::OutcomeProbabilityZero { outcome, probability });
    }
    Ok(DensityOperator::from_trusted(unnormalised.unscale(probability)))
}

/// `T(ρ) = Σ_a I{a}ρ`
pub fn nonselective_apply(instr: &KrausInstrument, state: &DensityOperator) -> Result<DensityOperator> {
    ensure_dim("nonselective operation", instr.dim(), state.dim())?;
    Ok(DensityOperator::from_trusted(nonselective_matrix(instr, state.matrix())))
}

pub(crate) fn nonselective_matrix(instr: &KrausInstrument, x: &ComplexMatrix) -> ComplexMatrix {
    instr
        .kraus
        .iter()
        .flatten()
        .fold(zeros(instr.dim()), |acc, k| acc + k * x * k.adjoint())
}

/// Heisenberg-picture dual `T*(X) = Σ K† X K`.
pub fn dual_apply(instr: &KrausInstrument, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_dim("dual map", instr.dim(), x.nrows())?;
    ensure_dim("dual map", instr.dim(), x.ncols())?;
    Ok(instr
        .kraus
        .iter()
        .flatten()
        .fold(zeros(instr.dim()), |acc, k| acc + k.adjoint() * x * k))
}

pub fn dual_apply_observable(instr: &KrausInstrument, obs: &Observable) -> Result<Observable> {
    Ok(Observable::hermitian_part(&dual_apply(instr, obs.matrix())?).with_label(format!("T*({})", obs.label())))
}

/// The POVM `T*E^B` obtained by pulling back the spectral measure of `b`.
pub fn pulled_back_povm(instr: &KrausInstrument, b: &Observable, cfg: &NumericConfig) -> Result<Povm> {
    ensure_dim("pulled-back POVM", instr.dim(), b.dim())?;
    let sd = spectral(b, cfg);
    let factors = sd
        .eigenvectors
        .iter()
        .map(|vs| {
            let rows = rows_of(vs);
            instr.kraus.iter().flatten().map(|k| &rows * k).collect()
        })
        .collect();
    Ok(Povm::from_factors(sd.eigenvalues, factors, instr.dim()))
}

/// Stacks `⟨v|` for each `v` as the rows of a matrix.
pub(crate) fn rows_of(vectors: &[StateVector]) -> ComplexMatrix {
    let dim = vectors.first().map_or(0, |v| v.len());
    ComplexMatrix::from_fn(vectors.len(), dim, |r, j| vectors[r][j].conj())
}

/// `ε² = Σ_a Tr[(a − A)Π{a}(a − A)ρ]`, each term evaluated as `Σ_j ‖F_j(a − A)√ρ‖²`.
pub(crate) fn noise_square(povm: &Povm, a: &ComplexMatrix, rho: &ComplexMatrix) -> f64 {
    let d = povm.dim();
    let mut total = 0.0;
    for (&x, fs) in povm.outcomes.iter().zip(&povm.factors) {
        let shifted = identity(d).scale(x) - a;
        for f in fs {
            let y = f * &shifted;
            total += trace_product(&(y.adjoint() * &y), rho).re;
        }
    }
    total.max(0.0)
}

/// `O^{(n)}(Π) = Σ_a aⁿ Π{a}`
pub fn moment_operator(povm: &Povm, n: u32) -> Result<Observable> {
    if n == 0 {
        return Err(Error::InvalidParameter("moment order must be at least 1".into()));
    }
    let m = povm
        .iter()
        .fold(zeros(povm.dim()), |acc, (a, e)| acc + e.scale(a.powi(n as i32)));
    Ok(Observable::hermitian_part(&m).with_label(format!("O^({n})")))
}

pub(crate) fn moments(povm: &Povm) -> (ComplexMatrix, ComplexMatrix) {
    let d = povm.dim();
    povm.iter().fold((zeros(d), zeros(d)), |(o1, o2), (a, e)| {
        (o1 + e.scale(a), o2 + e.scale(a * a))
    })
}

/// Mean and standard deviation of the outcome distribution of a POVM.
pub fn povm_mean_stddev(povm: &Povm, state: &DensityOperator) -> Result<(f64, f64)> {
    ensure_dim("POVM mean/stddev", povm.dim(), state.dim())?;
    let (o1, o2) = moments(povm);
    let mean = trace_product(&o1, state.matrix()).re;
    let second = trace_product(&o2, state.matrix()).re;
    Ok((mean, (second - mean * mean).max(0.0).sqrt()))
}

/// Indirect measurement model `(K, σ, U, M)` on `H ⊗ K`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    system_dim: usize,
    ancilla_dim: usize,
    ancilla_state: DensityOperator,
    unitary: ComplexMatrix,
    meter: Observable,
}

impl MeasurementModel {
    pub fn new(
        system_dim: usize,
        ancilla_state: DensityOperator,
        unitary: ComplexMatrix,
        meter: Observable,
    ) -> Result<Self> {
        Self::checked(system_dim, ancilla_state, unitary, meter, &NumericConfig::default())
    }

    pub fn checked(
        system_dim: usize,
        ancilla_state: DensityOperator,
        unitary: ComplexMatrix,
        meter: Observable,
        cfg: &NumericConfig,
    ) -> Result<Self> {
        let ancilla_dim = ancilla_state.dim();
        ensure_dim("meter", ancilla_dim, meter.dim())?;
        ensure_dim("coupling rows", system_dim * ancilla_dim, unitary.nrows())?;
        ensure_dim("coupling cols", system_dim * ancilla_dim, unitary.ncols())?;
        let deviation = unitarity_defect(&unitary);
        if deviation > cfg.unitarity_tol {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self {
            system_dim,
            ancilla_dim,
            ancilla_state,
            unitary,
            meter,
        })
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn ancilla_state(&self) -> &DensityOperator {
        &self.ancilla_state
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn meter(&self) -> &Observable {
        &self.meter
    }

    /// Whether the probe state has rank one within `tol`.
    pub fn has_pure_probe(&self, tol: f64) -> bool {
        let m = self.ancilla_state.matrix();
        max_abs_diff(&(m * m), m) <= tol
    }

    /// Direct evaluation of `Tr_K[(I ⊗ E^M{a}) U (ρ ⊗ σ) U†]` for every meter outcome.
    pub fn evaluate(&self, rho: &ComplexMatrix, cfg: &NumericConfig) -> Result<Vec<(f64, ComplexMatrix)>> {
        ensure_dim("model input", self.system_dim, rho.nrows())?;
        let joint = tensor(rho, self.ancilla_state.matrix());
        let evolved = &self.unitary * joint * self.unitary.adjoint();
        let sd = spectral(&self.meter, cfg);
        sd.eigenvalues
            .iter()
            .zip(&sd.projectors)
            .map(|(&a, p)| {
                let proj = tensor(&identity(self.system_dim), p);
                operator::partial_trace(&(proj * &evolved), (self.system_dim, self.ancilla_dim), operator::Keep::First)
                    .map(|m| (a, m))
            })
            .collect()
    }
}

/// `(I ⊗ ⟨left|) X (I ⊗ |right⟩)` for `X` on `C^d ⊗ C^k`.
pub(crate) fn compress(
    x: &ComplexMatrix,
    system_dim: usize,
    ancilla_dim: usize,
    left: &StateVector,
    right: &StateVector,
) -> ComplexMatrix {
    ComplexMatrix::from_fn(system_dim, system_dim, |i, j| {
        let mut acc = ZERO;
        for alpha in 0..ancilla_dim {
            let l = left[alpha].conj();
            if l == ZERO {
                continue;
            }
            for beta in 0..ancilla_dim {
                acc += l * x[(i * ancilla_dim + alpha, j * ancilla_dim + beta)] * right[beta];
            }
        }
        acc
    })
}

/// Kraus form of the instrument realised by a measurement model.
///
/// Kraus operators are `√p_j (I ⊗ ⟨m_k|) U (I ⊗ |s_j⟩)` where `σ = Σ p_j |s_j⟩⟨s_j|`
/// and `{|m_k⟩}` spans the meter eigenspace of each outcome.
pub fn instrument_from_model(model: &MeasurementModel, cfg: &NumericConfig) -> Result<KrausInstrument> {
    let deviation = unitarity_defect(&model.unitary);
    if deviation > cfg.unitarity_tol {
        return Err(Error::NotUnitary { deviation });
    }
    let (weights, states) = operator::hermitian_eigen(model.ancilla_state.matrix());
    let probe: Vec<(f64, StateVector)> = weights
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 1e-15)
        .map(|(j, &p)| (p.sqrt(), states.column(j).into_owned()))
        .collect();
    let sd = spectral(&model.meter, cfg);
    let (d, k) = (model.system_dim, model.ancilla_dim);
    let kraus = sd
        .eigenvectors
        .iter()
        .map(|meter_vectors| {
            meter_vectors
                .iter()
                .flat_map(|m| {
                    probe
                        .iter()
                        .map(move |(w, s)| compress(&model.unitary, d, k, m, s).scale(*w))
                })
                .collect()
        })
        .collect();
    KrausInstrument::checked(sd.eigenvalues, kraus, cfg)
}

/// Joint POVM of a model read out by two commuting meters.
pub fn joint_povm_from_model(
    model: &MeasurementModel,
    second_meter: &Observable,
    cfg: &NumericConfig,
) -> Result<JointPovm> {
    ensure_dim("second meter", model.ancilla_dim, second_meter.dim())?;
    let norm = model.meter.commutator_norm(second_meter);
    if norm > cfg.class_tol {
        return Err(Error::NonCommutingPair { norm });
    }
    let (d, k) = (model.system_dim, model.ancilla_dim);
    let first = spectral(&model.meter, cfg);
    let second = spectral(second_meter, cfg);
    let (weights, states) = operator::hermitian_eigen(model.ancilla_state.matrix());
    let mut outcomes = Vec::new();
    let mut effects = Vec::new();
    for (&x, px) in first.eigenvalues.iter().zip(&first.projectors) {
        for (&y, qy) in second.eigenvalues.iter().zip(&second.projectors) {
            let lifted = tensor(&identity(d), &(px * qy));
            let pulled = model.unitary.adjoint() * lifted * &model.unitary;
            let effect = weights
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 1e-15)
                .fold(zeros(d), |acc, (j, &p)| {
                    let s = states.column(j).into_owned();
                    acc + compress(&pulled, d, k, &s, &s).scale(p)
                });
            outcomes.push((x, y));
            effects.push((&effect + effect.adjoint()).scale(0.5));
        }
    }
    JointPovm::checked(outcomes, effects, cfg)
}

/// Pure-probe measurement model realising `instr`.
///
/// The ancilla has one basis vector per Kraus operator; the isometry
/// `V|ψ⟩ = Σ_r K_r|ψ⟩ ⊗ |r⟩` fills the columns `|i⟩ ⊗ |0⟩` of the coupling and
/// the remaining columns are completed in ascending order. The meter reads
/// the outcome label of block `r`.
pub fn dilate_instrument(instr: &KrausInstrument) -> MeasurementModel {
    let d = instr.dim();
    let flat: Vec<(f64, &ComplexMatrix)> = instr
        .outcomes
        .iter()
        .zip(&instr.kraus)
        .flat_map(|(&a, set)| set.iter().map(move |k| (a, k)))
        .collect();
    let m = flat.len();
    let fixed: Vec<(usize, StateVector)> = (0..d)
        .map(|i| {
            let mut col = StateVector::zeros(d * m);
            for (r, (_, k)) in flat.iter().enumerate() {
                for s in 0..d {
                    col[s * m + r] = k[(s, i)];
                }
            }
            (i * m, col)
        })
        .collect();
    let unitary = complete_unitary(d * m, &fixed);
    let meter = Observable::diagonal(&flat.iter().map(|(a, _)| *a).collect::<Vec<_>>()).with_label("M");
    MeasurementModel {
        system_dim: d,
        ancilla_dim: m,
        ancilla_state: DensityOperator::basis(m, 0),
        unitary,
        meter,
    }
}

/// Stinespring dilation of a one-outcome instrument.
pub fn dilate_channel(channel: &KrausInstrument) -> Result<MeasurementModel> {
    if !channel.is_channel() {
        return Err(Error::MultiOutcomeChannel {
            outcomes: channel.outcomes.len(),
        });
    }
    Ok(dilate_instrument(channel))
}

/// Largest entry-wise discrepancy between two instruments' operations on all
/// matrix units `|i⟩⟨j|`, matching outcomes by label. Outcomes present in only
/// one instrument must act as zero.
pub fn action_distance(a: &KrausInstrument, b: &KrausInstrument) -> f64 {
    if a.dim() != b.dim() {
        return f64::INFINITY;
    }
    let d = a.dim();
    let mut worst: f64 = 0.0;
    let mut unit = zeros(d);
    for i in 0..d {
        for j in 0..d {
            unit.fill(ZERO);
            unit[(i, j)] = Complex64::new(1.0, 0.0);
            for (ia, &label) in a.outcomes.iter().enumerate() {
                let left = a.operation_at(ia, &unit);
                let right = b.position(label).map(|ib| b.operation_at(ib, &unit));
                worst = worst.max(match right {
                    Some(r) => max_abs_diff(&left, &r),
                    None => max_abs(&left),
                });
            }
            for (ib, &label) in b.outcomes.iter().enumerate() {
                if a.position(label).is_none() {
                    worst = worst.max(max_abs(&b.operation_at(ib, &unit)));
                }
            }
        }
    }
    worst
}

/// Naimark extension `(W, V, C)` with `V†E^C{a}V = Π{a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaimarkExtension {
    pub extended_dim: usize,
    pub isometry: ComplexMatrix,
    pub extended_observable: Observable,
    pub outcomes: Vec<f64>,
    /// `E^C{a}` in outcome order.
    pub outcome_projectors: Vec<ComplexMatrix>,
}

impl NaimarkExtension {
    /// Max-norm error of `V†V = I` and of `V†E^C{a}V = Π{a}` over all outcomes.
    pub fn reconstruction_error(&self, povm: &Povm) -> f64 {
        let v = &self.isometry;
        let iso = max_abs_diff(&(v.adjoint() * v), &identity(v.ncols()));
        povm.iter().fold(iso, |worst, (a, e)| {
            let err = match self.outcomes.iter().position(|&b| same_label(a, b)) {
                Some(i) => max_abs_diff(&(v.adjoint() * &self.outcome_projectors[i] * v), e),
                None => f64::INFINITY,
            };
            worst.max(err)
        })
    }
}

/// Projective POVMs are returned as-is (`V = I`); otherwise `W = H ⊗ C^m` with
/// `V|ψ⟩ = Σ_a √Π{a}|ψ⟩ ⊗ |a⟩` and `C = I ⊗ diag(a)`.
pub fn naimark_extension(povm: &Povm, cfg: &NumericConfig) -> NaimarkExtension {
    let d = povm.dim();
    if povm.is_projective(cfg.completeness_tol) {
        let c = povm
            .iter()
            .fold(zeros(d), |acc, (a, e)| acc + e.scale(a));
        return NaimarkExtension {
            extended_dim: d,
            isometry: identity(d),
            extended_observable: Observable::hermitian_part(&c).with_label("C"),
            outcomes: povm.outcomes.clone(),
            outcome_projectors: povm.effects.clone(),
        };
    }
    let m = povm.len();
    let roots: Vec<ComplexMatrix> = povm.effects.iter().map(psd_sqrt).collect();
    let isometry = ComplexMatrix::from_fn(d * m, d, |row, i| {
        let (s, a) = (row / m, row % m);
        roots[a][(s, i)]
    });
    let c = tensor(&identity(d), Observable::diagonal(&povm.outcomes).matrix());
    let outcome_projectors = (0..m)
        .map(|a| {
            let mut e = StateVector::zeros(m);
            e[a] = Complex64::new(1.0, 0.0);
            tensor(&identity(d), &outer(&e))
        })
        .collect();
    NaimarkExtension {
        extended_dim: d * m,
        isometry,
        extended_observable: Observable::hermitian_part(&c).with_label("C"),
        outcomes: povm.outcomes.clone(),
        outcome_projectors,
    }
}
