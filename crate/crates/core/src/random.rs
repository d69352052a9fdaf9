//! Reproducible random ensembles for property tests and fuzzing.
//!
//! Pure states are normalized complex-Gaussian vectors (unitarily invariant).
//! Mixed two-qubit states are reduced states of random pure states on a
//! 4 ⊗ 4 purification.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::qmath::{ComplexMatrix, C64};
use crate::states::{bloch_basis, DensityMatrix, MeasurementBasis};

fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

pub fn pure_ket(rng: &mut impl Rng, dim: usize) -> Vec<C64> {
    let v = gaussian_vec(rng, dim);
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn pure_state(rng: &mut impl Rng, dim: usize) -> DensityMatrix {
    DensityMatrix::from_ket(&pure_ket(rng, dim)).expect("normalized ket")
}

/// `tr_E |ψ⟩⟨ψ|` for a Gaussian `ψ` on the two qubits and a 4-level environment.
pub fn mixed_two_qubit_state(rng: &mut impl Rng) -> DensityMatrix {
    let psi = pure_ket(rng, 16);
    let mut m = ComplexMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = C64::new(0.0, 0.0);
            for e in 0..4 {
                acc += psi[i * 4 + e] * psi[j * 4 + e].conj();
            }
            m.set(i, j, acc);
        }
    }
    DensityMatrix::renormalized(&m)
}

/// Single-qubit mixed state from a 2 ⊗ 2 purification.
pub fn mixed_qubit_state(rng: &mut impl Rng) -> DensityMatrix {
    let psi = pure_ket(rng, 4);
    let mut m = ComplexMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            m.set(i, j, psi[2 * i] * psi[2 * j].conj() + psi[2 * i + 1] * psi[2 * j + 1].conj());
        }
    }
    DensityMatrix::renormalized(&m)
}

/// Basis with a Haar-distributed first ket.
pub fn basis(rng: &mut impl Rng) -> MeasurementBasis {
    let polar = (1.0 - 2.0 * rng.random::<f64>()).clamp(-1.0, 1.0).acos();
    let azimuth = rng.random_range(0.0..2.0 * PI);
    bloch_basis(polar, azimuth)
}

/// Haar-random 2×2 unitary (up to a global phase).
pub fn unitary2(rng: &mut impl Rng) -> ComplexMatrix {
    let b = basis(rng);
    let (k0, k1) = (b.ket(0), b.ket(1));
    ComplexMatrix::new(2, 2, vec![k0[0], k1[0], k0[1], k1[1]]).expect("2x2")
}

/// Random Hermitian 2×2 observable with entries of order one.
pub fn hermitian2(rng: &mut impl Rng) -> ComplexMatrix {
    let a: f64 = rng.sample(StandardNormal);
    let d: f64 = rng.sample(StandardNormal);
    let b = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    ComplexMatrix::new(2, 2, vec![C64::new(a, 0.0), b, b.conj(), C64::new(d, 0.0)]).expect("2x2")
}

/// Convex mixture of `terms` random product states: always separable.
pub fn separable_two_qubit_state(rng: &mut impl Rng, terms: usize) -> DensityMatrix {
    let weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = ComplexMatrix::zeros(4, 4);
    for w in weights {
        let a = mixed_qubit_state(rng);
        let b = mixed_qubit_state(rng);
        let prod = crate::qmath::tensor_product(a.matrix(), b.matrix()).expect("4x4");
        acc = &acc + &prod.scale_real(w / total);
    }
    DensityMatrix::renormalized(&acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            DensityMatrix::new(mixed_two_qubit_state(&mut rng).matrix().clone()).unwrap();
            DensityMatrix::new(mixed_qubit_state(&mut rng).matrix().clone()).unwrap();
            DensityMatrix::new(separable_two_qubit_state(&mut rng, 3).matrix().clone()).unwrap();
            let u = unitary2(&mut rng);
            assert!((&u * &u.adjoint()).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_state() {
        let a = mixed_two_qubit_state(&mut ChaCha8Rng::seed_from_u64(42));
        let b = mixed_two_qubit_state(&mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }
}
