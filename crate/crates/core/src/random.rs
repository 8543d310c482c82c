//! Seeded random operators, states and instruments for property sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::instruments::{JointPovm, KrausInstrument, Povm};
use crate::operator::{c, psd_sqrt, ComplexMatrix, DensityOperator, Observable, StateVector};

pub type SweepRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SweepRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for task `index` of a sweep seeded with `seed`.
pub fn task_rng(seed: u64, index: u64) -> SweepRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// Ginibre matrix with i.i.d. standard complex normal entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        c(a, b) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    gaussian_matrix(rng, dim, 1).column(0).into_owned()
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    let v = gaussian_vector(rng, dim);
    let n = v.norm();
    v.unscale(n)
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Observable {
    let g = gaussian_matrix(rng, dim, dim);
    Observable::hermitian_part(&g)
}

/// Full-rank density operator from the Ginibre ensemble.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityOperator {
    random_density_rank(rng, dim, dim)
}

pub fn random_density_rank<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityOperator {
    let g = gaussian_matrix(rng, dim, rank.max(1));
    let p = &g * g.adjoint();
    let t = p.trace().re;
    DensityOperator::from_trusted(p.unscale(t))
}

pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityOperator {
    DensityOperator::from_trusted(crate::operator::outer(&random_unit_vector(rng, dim)))
}

/// Haar-distributed unitary via QR with phase correction.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, dim, dim);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Isometry `rows × cols` (`rows ≥ cols`): first columns of a Haar unitary.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    haar_unitary(rng, rows).columns(0, cols).into_owned()
}

/// `count` distinct labels drawn uniformly from `[-2, 2]`, sorted ascending.
pub fn distinct_labels<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..count).map(|_| rng.random_range(-2.0..2.0)).collect();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] - w[0] > 1e-3) {
            return v;
        }
    }
}

/// Random positive effects normalised to sum to the identity.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize, outcomes: usize) -> Povm {
    let labels = distinct_labels(rng, outcomes);
    let raw: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let g = gaussian_matrix(rng, dim, dim);
            &g * g.adjoint()
        })
        .collect();
    let total = raw.iter().fold(ComplexMatrix::zeros(dim, dim), |a, b| a + b);
    let inv_sqrt = crate::operator::hermitian_function(&total, |x| c(1.0 / x.sqrt(), 0.0));
    let effects = raw.iter().map(|e| &inv_sqrt * e * &inv_sqrt).collect();
    Povm::new(labels, effects).expect("normalised random POVM")
}

pub fn random_joint_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize, nx: usize, ny: usize) -> JointPovm {
    let xs = distinct_labels(rng, nx);
    let ys = distinct_labels(rng, ny);
    let flat = random_povm(rng, dim, nx * ny);
    let outcomes = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
        .collect();
    JointPovm::new(outcomes, flat.effects().to_vec()).expect("random joint POVM")
}

/// Random instrument: a Haar isometry `C^d → C^d ⊗ C^m` cut into Kraus blocks.
pub fn random_instrument<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    kraus_per_outcome: &[usize],
) -> KrausInstrument {
    let total: usize = kraus_per_outcome.iter().sum();
    let v = random_isometry(rng, dim * total, dim);
    let mut blocks = (0..total).map(|r| v.rows(r * dim, dim).into_owned());
    let kraus = kraus_per_outcome
        .iter()
        .map(|&n| (0..n).map(|_| blocks.next().unwrap()).collect())
        .collect();
    let labels = distinct_labels(rng, kraus_per_outcome.len());
    KrausInstrument::new(labels, kraus).expect("isometry blocks are complete")
}

pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, dim: usize, kraus_count: usize) -> KrausInstrument {
    let mut instr = random_instrument(rng, dim, &[kraus_count]);
    instr.relabel(|_| 0.0);
    instr
}

/// A density operator's square root, exposed for oracle code.
pub fn sqrt_of(state: &DensityOperator) -> ComplexMatrix {
    psd_sqrt(state.matrix())
}
