//! Root-mean-square noise of a POVM relative to a target observable, and
//! disturbance of an observable by a channel.

use serde::Serialize;

use crate::instruments::{moments, naimark_extension, noise_square, pulled_back_povm, KrausInstrument, Povm};
use crate::operator::{
    ensure_dim, identity, max_abs, max_abs_diff, spectral, trace_product, ComplexMatrix,
    DensityOperator, Observable,
};
use crate::{NumericConfig, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseAssessment {
    /// `n(A, Π) = O(Π) − A`
    pub mean_noise_operator: Observable,
    pub mean_noise: f64,
    pub rms_noise: f64,
    pub noise_stddev: f64,
}

impl NoiseAssessment {
    pub fn rms_noise_sq(&self) -> f64 {
        self.rms_noise * self.rms_noise
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisturbanceAssessment {
    /// `d(B, T) = n(B, T*E^B)`
    pub mean_disturbance_operator: Observable,
    pub mean_disturbance: f64,
    pub rms_disturbance: f64,
    pub disturbance_stddev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseClass {
    pub uncorrelated: bool,
    pub unbiased: bool,
    /// `r` in `n = rI`; the trace average of `n` when not uncorrelated.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroNoiseReport {
    pub is_spectral: bool,
    pub eps_on_basis: Vec<f64>,
    pub eps_on_faithful: f64,
}

/// Noise of `povm` as a measurement of `a` in `state`.
pub fn assess_noise(a: &Observable, povm: &Povm, state: &DensityOperator) -> Result<NoiseAssessment> {
    ensure_dim("noise observable", povm.dim(), a.dim())?;
    ensure_dim("noise state", povm.dim(), state.dim())?;
    let (o1, _) = moments(povm);
    let noise = &o1 - a.matrix();
    let mean_noise = trace_product(&noise, state.matrix()).re;
    let eps_sq = noise_square(povm, a.matrix(), state.matrix());
    Ok(NoiseAssessment {
        mean_noise_operator: Observable::hermitian_part(&noise).with_label(format!("n({})", a.label())),
        mean_noise,
        rms_noise: eps_sq.sqrt(),
        noise_stddev: (eps_sq - mean_noise * mean_noise).max(0.0).sqrt(),
    })
}

/// `η(B, T, ρ) = ε(B, T*E^B, ρ)` for the nonselective operation of `channel`.
pub fn assess_disturbance(
    b: &Observable,
    channel: &KrausInstrument,
    state: &DensityOperator,
    cfg: &NumericConfig,
) -> Result<DisturbanceAssessment> {
    ensure_dim("disturbance state", channel.dim(), state.dim())?;
    let povm = pulled_back_povm(channel, b, cfg)?;
    let n = assess_noise(b, &povm, state)?;
    Ok(DisturbanceAssessment {
        mean_disturbance_operator: n.mean_noise_operator.with_label(format!("d({})", b.label())),
        mean_disturbance: n.mean_noise,
        rms_disturbance: n.rms_noise,
        disturbance_stddev: n.noise_stddev,
    })
}

/// Scalar test on the noise operator: `n ≈ rI` and `n ≈ 0`.
pub fn classify_operator(noise: &ComplexMatrix, cfg: &NumericConfig) -> NoiseClass {
    let dim = noise.nrows();
    let offset = noise.trace().re / dim as f64;
    let uncorrelated = max_abs_diff(noise, &identity(dim).scale(offset)) <= cfg.class_tol;
    NoiseClass {
        uncorrelated,
        unbiased: uncorrelated && offset.abs() <= cfg.class_tol,
        offset,
    }
}

pub fn classify_noise(a: &Observable, povm: &Povm, cfg: &NumericConfig) -> Result<NoiseClass> {
    ensure_dim("noise observable", povm.dim(), a.dim())?;
    let (o1, _) = moments(povm);
    Ok(classify_operator(&(&o1 - a.matrix()), cfg))
}

/// Whether `povm` is the spectral measure of `a`, with outcomes matched to
/// eigenvalues within `degeneracy_tol`. Outcomes absent from the spectrum
/// must carry a vanishing effect.
pub fn is_spectral_measure(a: &Observable, povm: &Povm, cfg: &NumericConfig) -> bool {
    if a.dim() != povm.dim() {
        return false;
    }
    let sd = spectral(a, cfg);
    let mut matched = vec![false; povm.len()];
    for (lambda, p) in sd.eigenvalues.iter().zip(&sd.projectors) {
        let hit = povm
            .outcomes()
            .iter()
            .position(|&x| (x - lambda).abs() <= cfg.degeneracy_tol);
        match hit {
            Some(i) if max_abs_diff(&povm.effects()[i], p) <= cfg.completeness_tol => matched[i] = true,
            _ => return false,
        }
    }
    povm.effects()
        .iter()
        .zip(&matched)
        .all(|(e, &m)| m || max_abs(e) <= cfg.completeness_tol)
}

/// Spectrality of `povm` for `a` together with `ε` in every computational
/// basis state and in the faithful state `I/d`.
pub fn zero_noise_equivalence(a: &Observable, povm: &Povm, cfg: &NumericConfig) -> Result<ZeroNoiseReport> {
    ensure_dim("zero-noise observable", povm.dim(), a.dim())?;
    let d = a.dim();
    let eps_on_basis = (0..d)
        .map(|i| assess_noise(a, povm, &DensityOperator::basis(d, i)).map(|n| n.rms_noise))
        .collect::<Result<Vec<_>>>()?;
    let eps_on_faithful = assess_noise(a, povm, &DensityOperator::maximally_mixed(d))?.rms_noise;
    Ok(ZeroNoiseReport {
        is_spectral: is_spectral_measure(a, povm, cfg),
        eps_on_basis,
        eps_on_faithful,
    })
}

/// `‖C V √ρ − V A √ρ‖_HS` through a Naimark extension of `povm`.
pub fn noise_via_extension(
    a: &Observable,
    povm: &Povm,
    state: &DensityOperator,
    cfg: &NumericConfig,
) -> Result<f64> {
    ensure_dim("noise observable", povm.dim(), a.dim())?;
    ensure_dim("noise state", povm.dim(), state.dim())?;
    let ext = naimark_extension(povm, cfg);
    let root = state.sqrt();
    let v = &ext.isometry;
    let diff = ext.extended_observable.matrix() * v * &root - v * a.matrix() * &root;
    Ok(crate::operator::hs_norm(&diff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instruments::{dual_apply, induced_povm};
    use crate::operator::{real_matrix, tensor};
    use crate::random::{haar_unitary, random_density, random_hermitian, random_povm, seeded};
    use crate::spin::{pauli_x, pauli_y, pauli_z};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg() -> NumericConfig {
        NumericConfig::default()
    }

    fn sz() -> Observable {
        Observable::new(pauli_z()).unwrap()
    }

    fn coin() -> Povm {
        Povm::new(vec![-1.0, 1.0], vec![identity(2).scale(0.5), identity(2).scale(0.5)]).unwrap()
    }

    #[test]
    fn spectral_measure_is_noiseless() {
        let mut rng = seeded(1);
        for d in 2..=4 {
            let a = random_hermitian(&mut rng, d);
            let rho = random_density(&mut rng, d);
            let n = assess_noise(&a, &Povm::spectral(&a, &cfg()), &rho).unwrap();
            assert!(n.rms_noise < 1e-10);
        }
    }

    #[test]
    fn coin_povm_against_sigma_z() {
        let n = assess_noise(&sz(), &coin(), &DensityOperator::basis(2, 0)).unwrap();
        assert!(max_abs_diff(n.mean_noise_operator.matrix(), &(-pauli_z())) < 1e-15);
        assert_abs_diff_eq!(n.mean_noise, -1.0, epsilon = 1e-15);
        // O = 0, O2 = I: ε² = ⟨I + σ_z²⟩ = 2
        assert_abs_diff_eq!(n.rms_noise, 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(n.noise_stddev, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn shifted_labels_give_constant_noise() {
        let shifted = Povm::spectral(&sz(), &cfg()).relabeled(|a| a + 1.0);
        let class = classify_noise(&sz(), &shifted, &cfg()).unwrap();
        assert!(class.uncorrelated && !class.unbiased);
        assert_abs_diff_eq!(class.offset, 1.0, epsilon = 1e-14);
        let n = assess_noise(&sz(), &shifted, &DensityOperator::basis(2, 1)).unwrap();
        assert!(max_abs_diff(n.mean_noise_operator.matrix(), &identity(2)) < 1e-14);
        assert_abs_diff_eq!(n.rms_noise, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(n.noise_stddev, 0.0, epsilon = 1e-7);
    }

    #[test]
    fn classification_examples() {
        let exact = classify_noise(&sz(), &Povm::spectral(&sz(), &cfg()), &cfg()).unwrap();
        assert!(exact.unbiased && exact.uncorrelated);
        let noisy = classify_noise(&sz(), &coin(), &cfg()).unwrap();
        assert!(!noisy.uncorrelated && !noisy.unbiased);
    }

    #[test]
    fn disturbance_examples() {
        let mut rng = seeded(2);
        let identity_channel = KrausInstrument::channel(vec![identity(3)]).unwrap();
        let b = random_hermitian(&mut rng, 3);
        let rho = random_density(&mut rng, 3);
        let eta = assess_disturbance(&b, &identity_channel, &rho, &cfg()).unwrap();
        assert!(eta.rms_disturbance < 1e-6);

        let lz = KrausInstrument::lueders(&sz(), &cfg());
        let plus = DensityOperator::new(real_matrix(2, &[0.5, 0.5, 0.5, 0.5])).unwrap();
        let sx = Observable::new(pauli_x()).unwrap();
        let eta = assess_disturbance(&sx, &lz, &plus, &cfg()).unwrap();
        assert_abs_diff_eq!(eta.rms_disturbance, 2f64.sqrt(), epsilon = 1e-14);
        // oracle: T*(σ_x) = 0 so d = −σ_x
        assert!(max_abs_diff(eta.mean_disturbance_operator.matrix(), &(-pauli_x())) < 1e-14);

        // conserved observable under a commuting unitary
        let u = crate::operator::unitary_exp(&pauli_z().scale(0.7));
        let channel = KrausInstrument::unitary(u).unwrap();
        let eta = assess_disturbance(&sz(), &channel, &random_density(&mut rng, 2), &cfg()).unwrap();
        assert!(eta.rms_disturbance < 1e-6);
    }

    #[test]
    fn zero_noise_examples() {
        let r = zero_noise_equivalence(&sz(), &Povm::spectral(&sz(), &cfg()), &cfg()).unwrap();
        assert!(r.is_spectral);
        assert!(r.eps_on_faithful < 1e-7 && r.eps_on_basis.iter().all(|e| *e < 1e-7));

        let r = zero_noise_equivalence(&sz(), &coin(), &cfg()).unwrap();
        assert!(!r.is_spectral);
        // ε² on I/2: ⟨I + σ_z²⟩ = 2... minus nothing: O = 0 so ε² = Tr[(I + I)/2] = 2
        assert_abs_diff_eq!(r.eps_on_faithful, 2f64.sqrt(), epsilon = 1e-14);

        let sx = Observable::new(pauli_x()).unwrap();
        let r = zero_noise_equivalence(&sx, &Povm::spectral(&sz(), &cfg()), &cfg()).unwrap();
        assert!(!r.is_spectral);
        assert!(r.eps_on_basis.iter().any(|e| *e > 1e-3));
    }

    #[test]
    fn extension_form_matches_moment_form() {
        let mut rng = seeded(3);
        for _ in 0..30 {
            let d = 2 + rng.random_range(0..3);
            let povm = random_povm(&mut rng, d, 3);
            let a = random_hermitian(&mut rng, d);
            let rho = random_density(&mut rng, d);
            let moment = assess_noise(&a, &povm, &rho).unwrap().rms_noise;
            let hs = noise_via_extension(&a, &povm, &rho, &cfg()).unwrap();
            assert_abs_diff_eq!(moment, hs, epsilon = 1e-9);
        }
    }

    #[test]
    fn fixed_projectors_mean_no_disturbance() {
        let mut rng = seeded(4);
        // B = σ_z ⊗ I is fixed by any unitary of the form I ⊗ W
        let w = haar_unitary(&mut rng, 2);
        let channel = KrausInstrument::unitary(tensor(&identity(2), &w)).unwrap();
        let b = Observable::new(tensor(&pauli_z(), &identity(2))).unwrap();
        for p in spectral(&b, &cfg()).projectors {
            assert!(max_abs_diff(&dual_apply(&channel, &p).unwrap(), &p) < 1e-10);
        }
        let eta = assess_disturbance(&b, &channel, &random_density(&mut rng, 4), &cfg()).unwrap();
        assert!(eta.rms_disturbance < 1e-6);
        let _ = pauli_y();
        let _ = induced_povm(&channel);
    }

    use rand::Rng;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn variance_not_above_mean_square(seed in any::<u64>(), d in 2usize..=4, k in 2usize..=4) {
            let mut rng = seeded(seed);
            let povm = random_povm(&mut rng, d, k);
            let a = random_hermitian(&mut rng, d);
            let rho = random_density(&mut rng, d);
            let n = assess_noise(&a, &povm, &rho).unwrap();
            prop_assert!(n.rms_noise_sq() - n.mean_noise * n.mean_noise >= -1e-12);
            prop_assert!(n.noise_stddev <= n.rms_noise + 1e-12);
        }

        #[test]
        fn spectral_noise_vanishes(seed in any::<u64>(), d in 2usize..=4) {
            let mut rng = seeded(seed);
            let a = random_hermitian(&mut rng, d);
            let rho = random_density(&mut rng, d);
            let n = assess_noise(&a, &Povm::spectral(&a, &cfg()), &rho).unwrap();
            prop_assert!(n.rms_noise <= 1e-10);
        }
    }
}
