//! Standard operators: Paulis, spin-j angular momentum, collective spins and
//! truncated Fock-space states. ħ = 1.

use crate::operator::{c, identity, re, tensor, ComplexMatrix, StateVector, I, ONE, ZERO};

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn hadamard() -> ComplexMatrix {
    let s = re(std::f64::consts::FRAC_1_SQRT_2);
    ComplexMatrix::from_row_slice(2, 2, &[s, s, s, -s])
}

/// `(S_x, S_y, S_z)` for spin ½.
pub fn spin_half() -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    (
        pauli_x().scale(0.5),
        pauli_y().scale(0.5),
        pauli_z().scale(0.5),
    )
}

/// `(J_x, J_y, J_z)` for spin `j = (dim − 1)/2`, basis ordered `m = j, j−1, …, −j`.
pub fn spin_operators(dim: usize) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    assert!(dim >= 1);
    let j = (dim as f64 - 1.0) / 2.0;
    let m = |k: usize| j - k as f64;
    // J+ |m⟩ = sqrt(j(j+1) − m(m+1)) |m+1⟩; index k-1 holds m+1
    let mut raise = ComplexMatrix::zeros(dim, dim);
    for k in 1..dim {
        let mk = m(k);
        raise[(k - 1, k)] = re((j * (j + 1.0) - mk * (mk + 1.0)).sqrt());
    }
    let lower = raise.adjoint();
    let jx = (&raise + &lower).scale(0.5);
    let jy = (&raise - &lower) * c(0.0, -0.5);
    let jz = ComplexMatrix::from_fn(dim, dim, |a, b| if a == b { re(m(a)) } else { ZERO });
    (jx, jy, jz)
}

/// `Σ_j S_x^{(j)}` on `n` spin-½ particles.
pub fn collective_sx(n: usize) -> ComplexMatrix {
    let sx = spin_half().0;
    let dim = 1usize << n;
    (0..n).fold(ComplexMatrix::zeros(dim, dim), |acc, site| {
        let left = identity(1 << site);
        let right = identity(1 << (n - site - 1));
        acc + tensor(&tensor(&left, &sx), &right)
    })
}

/// `(|0⟩ + i|1⟩)/√2`, the `S_y = +½` eigenstate.
pub fn sy_plus() -> StateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::from_vec(vec![re(s), c(0.0, s)])
}

pub fn basis_vector(dim: usize, index: usize) -> StateVector {
    let mut v = StateVector::zeros(dim);
    v[index] = ONE;
    v
}

/// Number operator on the Fock space truncated at `cutoff` photons.
pub fn number_operator(cutoff: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(cutoff + 1, cutoff + 1, |a, b| if a == b { re(a as f64) } else { ZERO })
}

/// Coherent state amplitudes `e^{-|α|²/2} αⁿ/√n!` up to `cutoff`, renormalised.
pub fn coherent_state(alpha: num_complex::Complex64, cutoff: usize) -> StateVector {
    let mut v = StateVector::zeros(cutoff + 1);
    let mut amp = re((-alpha.norm_sqr() / 2.0).exp());
    v[0] = amp;
    for n in 1..=cutoff {
        amp = amp * alpha / (n as f64).sqrt();
        v[n] = amp;
    }
    let norm = v.norm();
    v.unscale(norm)
}

/// Thermal occupation probabilities with mean `mean_photons`, truncated and renormalised.
pub fn thermal_weights(mean_photons: f64, cutoff: usize) -> Vec<f64> {
    let ratio = mean_photons / (1.0 + mean_photons);
    let raw: Vec<f64> = (0..=cutoff).map(|n| ratio.powi(n as i32)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

pub fn thermal_state(mean_photons: f64, cutoff: usize) -> crate::DensityOperator {
    let weights = thermal_weights(mean_photons, cutoff);
    let diag = StateVector::from_iterator(cutoff + 1, weights.iter().map(|&p| c(p, 0.0)));
    crate::DensityOperator::from_trusted(ComplexMatrix::from_diagonal(&diag))
}
