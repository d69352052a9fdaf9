//! Entropy functionals, in bits.
//!
//! Besides von Neumann and Shannon entropies this module builds the
//! post-measurement (classical-quantum) state of a two-qubit system after
//! Alice measures, and the three estimates of Alice's outcome uncertainty
//! given Bob: the quantum conditional entropy `H(R|B)`, the classical
//! `H(R|R_B)` obtained when Bob measures too, and the Fano bound `h₂(q)`
//! on the latter.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmath::{tensor_product, ComplexMatrix, Subsystem};
use crate::states::{DensityMatrix, MeasurementBasis};

/// Branches whose probability is below this are treated as absent.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-12;

const PROB_TOL: f64 = 1e-10;

/// `-Σ p log₂ p` with `0 log 0 = 0`.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(&rho.eigenvalues()).max(0.0)
}

/// `h₂(p) = -p log₂ p - (1-p) log₂(1-p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    let p = unit_interval("p", p)?;
    Ok(shannon_entropy(&[p, 1.0 - p]))
}

/// Upper bound `h₂(q)` on `H(R|R_B)` from the mismatch probability `q`.
pub fn fano_bound(q: f64) -> Result<f64> {
    let q = unit_interval("q", q)?;
    Ok(shannon_entropy(&[q, 1.0 - q]))
}

// Rounding-level excursions outside [0, 1] are clamped.
fn unit_interval(name: &'static str, p: f64) -> Result<f64> {
    if p.is_finite() && (-1e-12..=1.0 + 1e-12).contains(&p) {
        Ok(p.clamp(0.0, 1.0))
    } else {
        Err(Error::OutOfRange {
            name,
            value: p,
            range: "[0, 1]",
        })
    }
}

fn require_two_qubits(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() == 4 {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: "two-qubit state".into(),
            found: format!("dim {}", rho.dim()),
        })
    }
}

/// `H(A|B) = H(AB) - H(B)`; negative only for entangled states.
pub fn conditional_entropy(rho_ab: &DensityMatrix) -> Result<f64> {
    require_two_qubits(rho_ab)?;
    let rho_b = rho_ab.reduced(Subsystem::B)?;
    Ok(von_neumann_entropy(rho_ab) - von_neumann_entropy(&rho_b))
}

#[derive(Clone, Debug, Serialize)]
pub struct Branch {
    pub outcome: usize,
    pub probability: f64,
    /// Bob's state given the outcome; `I/2` when the branch is negligible.
    pub state: DensityMatrix,
    pub negligible: bool,
}

/// Bob's conditional states after Alice's measurement, `{(p_r, ρ_B^r)}`.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionalEnsemble {
    pub branches: Vec<Branch>,
}

impl ConditionalEnsemble {
    pub fn new(branches: Vec<Branch>) -> Result<Self> {
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        if branches.iter().any(|b| !(b.probability >= 0.0)) || (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!(
                "branch probabilities sum to {total}"
            )));
        }
        if branches.iter().any(|b| b.state.dim() != 2) {
            return Err(Error::DimensionMismatch {
                expected: "single-qubit branch states".into(),
                found: "other".into(),
            });
        }
        Ok(Self { branches })
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.probability).collect()
    }

    /// `Σ_r p_r ρ_B^r` over non-negligible branches.
    pub fn average_state(&self) -> DensityMatrix {
        let mut acc = ComplexMatrix::zeros(2, 2);
        for b in self.branches.iter().filter(|b| !b.negligible) {
            acc = &acc + &b.state.matrix().scale_real(b.probability);
        }
        DensityMatrix::renormalized(&acc)
    }

    /// `H(R|B) = H({p_r}) + Σ_r p_r H(ρ_B^r) - H(Σ_r p_r ρ_B^r)`.
    pub fn conditional_entropy(&self) -> f64 {
        let h_outcomes = shannon_entropy(&self.probabilities());
        let h_branches: f64 = self
            .branches
            .iter()
            .filter(|b| !b.negligible)
            .map(|b| b.probability * von_neumann_entropy(&b.state))
            .sum();
        let h = h_outcomes + h_branches - von_neumann_entropy(&self.average_state());
        if h < 0.0 && h > -1e-12 {
            0.0
        } else {
            h
        }
    }
}

fn alice_projector(basis: &MeasurementBasis, r: usize) -> ComplexMatrix {
    tensor_product(&basis.projector(r), &ComplexMatrix::identity(2)).expect("4x4")
}

/// Measures Alice's qubit in `basis` and returns Bob's conditional states.
pub fn post_measurement_state(
    rho_ab: &DensityMatrix,
    basis: &MeasurementBasis,
) -> Result<ConditionalEnsemble> {
    require_two_qubits(rho_ab)?;
    let mut branches = Vec::with_capacity(2);
    for r in 0..2 {
        let proj = alice_projector(basis, r);
        let projected = &(&proj * rho_ab.matrix()) * &proj;
        let p = projected.trace().re.max(0.0);
        let (state, negligible) = if p < NEGLIGIBLE_PROBABILITY {
            (DensityMatrix::maximally_mixed(2), true)
        } else {
            let reduced = crate::qmath::partial_trace(&projected, Subsystem::B)?;
            (DensityMatrix::renormalized(&reduced), false)
        };
        branches.push(Branch {
            outcome: r,
            probability: p,
            state,
            negligible,
        });
    }
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    for b in &mut branches {
        b.probability /= total;
    }
    ConditionalEnsemble::new(branches)
}

/// `ρ_RB = Σ_r (Π_r ⊗ I) ρ_AB (Π_r ⊗ I)`, the post-measurement state as a
/// two-qubit operator with the outcome register in place of `A`.
pub fn cq_state(rho_ab: &DensityMatrix, basis: &MeasurementBasis) -> Result<DensityMatrix> {
    require_two_qubits(rho_ab)?;
    let mut acc = ComplexMatrix::zeros(4, 4);
    for r in 0..2 {
        let proj = alice_projector(basis, r);
        acc = &acc + &(&(&proj * rho_ab.matrix()) * &proj);
    }
    Ok(DensityMatrix::renormalized(&acc))
}

/// `H(R|B)` for Alice measuring in `basis` with Bob keeping his qubit.
pub fn h_r_given_b(rho_ab: &DensityMatrix, basis: &MeasurementBasis) -> Result<f64> {
    Ok(post_measurement_state(rho_ab, basis)?.conditional_entropy())
}

/// `P(r, r_B)` indexed as `table[r][r_B]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JointDistribution {
    pub table: [[f64; 2]; 2],
}

impl JointDistribution {
    pub fn new(table: [[f64; 2]; 2]) -> Result<Self> {
        let flat = table.iter().flatten();
        let total: f64 = flat.clone().sum();
        if flat.clone().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!("{table:?} sums to {total}")));
        }
        Ok(Self { table })
    }

    /// Normalizes counts `[n(0,0), n(0,1), n(1,0), n(1,1)]`.
    pub fn from_counts(counts: [f64; 4]) -> Result<Self> {
        let total: f64 = counts.iter().sum();
        if counts.iter().any(|&c| !(c >= 0.0)) || !(total > 0.0) {
            return Err(Error::InvalidDistribution(format!("counts {counts:?}")));
        }
        Self::new([
            [counts[0] / total, counts[1] / total],
            [counts[2] / total, counts[3] / total],
        ])
    }

    pub fn flat(&self) -> [f64; 4] {
        [self.table[0][0], self.table[0][1], self.table[1][0], self.table[1][1]]
    }

    pub fn marginal_b(&self) -> [f64; 2] {
        [
            self.table[0][0] + self.table[1][0],
            self.table[0][1] + self.table[1][1],
        ]
    }

    /// Probability that `r ≠ r_B`.
    pub fn mismatch(&self) -> f64 {
        self.table[0][1] + self.table[1][0]
    }
}

/// Born-rule distribution of Alice measuring `basis_a` and Bob `basis_b`.
pub fn joint_distribution(
    rho_ab: &DensityMatrix,
    basis_a: &MeasurementBasis,
    basis_b: &MeasurementBasis,
) -> Result<JointDistribution> {
    require_two_qubits(rho_ab)?;
    let mut table = [[0.0; 2]; 2];
    for (r, row) in table.iter_mut().enumerate() {
        for (rb, cell) in row.iter_mut().enumerate() {
            let ket = crate::qmath::kron_vec(basis_a.ket(r), basis_b.ket(rb));
            *cell = rho_ab.matrix().expectation(&ket).re.max(0.0);
        }
    }
    let total: f64 = table.iter().flatten().sum();
    for p in table.iter_mut().flatten() {
        *p /= total;
    }
    JointDistribution::new(table)
}

/// `H(R|R_B) = H({P(r, r_B)}) - H({P(r_B)})`.
pub fn h_r_given_rb(dist: &JointDistribution) -> f64 {
    (shannon_entropy(&dist.flat()) - shannon_entropy(&dist.marginal_b())).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::states::{
        apply_white_noise, bell_state, linear_basis, product_state, schmidt_state, NoiseModel,
        SchmidtParams,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn h2(p: f64) -> f64 {
        binary_entropy(p).unwrap()
    }

    #[test]
    fn von_neumann_basic_values() {
        assert!(von_neumann_entropy(&bell_state()).abs() < 1e-12);
        assert!((von_neumann_entropy(&DensityMatrix::maximally_mixed(2)) - 1.0).abs() < 1e-14);
        assert!((von_neumann_entropy(&DensityMatrix::maximally_mixed(4)) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn von_neumann_of_noisy_bell_matches_eigenvalue_sum() {
        let rho = apply_white_noise(&bell_state(), NoiseModel::new(0.96).unwrap());
        // Spectrum {0.97, 0.01, 0.01, 0.01}.
        let oracle = -(0.97f64 * 0.97f64.log2()) - 3.0 * 0.01 * 0.01f64.log2();
        assert!((von_neumann_entropy(&rho) - oracle).abs() < 1e-12);
        // Reduced state stays I/2 under white noise.
        let rb = rho.reduced(Subsystem::B).unwrap();
        assert!((von_neumann_entropy(&rb) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(h2(0.5), 1.0);
        assert_eq!(h2(0.0), 0.0);
        assert_eq!(h2(1.0), 0.0);
        let direct = -0.11 * 0.11f64.log2() - 0.89 * 0.89f64.log2();
        assert!((h2(0.11) - direct).abs() < 1e-15);
        assert!((h2(0.11) - 0.49992).abs() < 1e-5);
        assert!(binary_entropy(1.1).is_err());
        assert!(binary_entropy(-0.01).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
        assert!(fano_bound(2.0).is_err());
        assert_eq!(fano_bound(0.0).unwrap(), 0.0);
        assert_eq!(fano_bound(0.5).unwrap(), 1.0);
    }

    #[test]
    fn conditional_entropy_cases() {
        assert!((conditional_entropy(&bell_state()).unwrap() + 1.0).abs() < 1e-12);
        let h = DensityMatrix::from_ket(&[crate::qmath::ONE, crate::qmath::ZERO]).unwrap();
        let prod = product_state(&h, &h).unwrap();
        assert!(conditional_entropy(&prod).unwrap().abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let zeta = rng.random_range(0.0..FRAC_PI_2);
            let p = SchmidtParams::new(zeta, rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI)).unwrap();
            let got = conditional_entropy(&schmidt_state(&p)).unwrap();
            assert!((got + h2(zeta.cos().powi(2))).abs() < 1e-9);
        }
    }

    #[test]
    fn conditional_entropy_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let rho = random::mixed_two_qubit_state(&mut rng);
            assert!(conditional_entropy(&rho).unwrap() >= -1.0 - 1e-12);
        }
    }

    #[test]
    fn post_measurement_bell_z() {
        let ens = post_measurement_state(&bell_state(), &MeasurementBasis::z()).unwrap();
        // Direct projection: (|H⟩⟨H| ⊗ I)|Φ+⟩ = |HH⟩/√2.
        assert_eq!(ens.branches.len(), 2);
        for (r, b) in ens.branches.iter().enumerate() {
            assert!((b.probability - 0.5).abs() < 1e-14);
            let expected = MeasurementBasis::z().projector(r);
            assert!(b.state.matrix().max_abs_diff(&expected) < 1e-14);
        }
    }

    #[test]
    fn post_measurement_product_and_mixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let ra = random::mixed_qubit_state(&mut rng);
            let rb = random::mixed_qubit_state(&mut rng);
            let basis = random::basis(&mut rng);
            let ens = post_measurement_state(&product_state(&ra, &rb).unwrap(), &basis).unwrap();
            for b in &ens.branches {
                assert!(b.state.matrix().max_abs_diff(rb.matrix()) < 1e-12);
            }
            let ens = post_measurement_state(&DensityMatrix::maximally_mixed(4), &basis).unwrap();
            for b in &ens.branches {
                assert!((b.probability - 0.5).abs() < 1e-14);
                assert!(b.state.matrix().max_abs_diff(DensityMatrix::maximally_mixed(2).matrix()) < 1e-14);
            }
        }
    }

    #[test]
    fn zero_probability_branch_is_flagged() {
        let h = DensityMatrix::from_ket(&[crate::qmath::ONE, crate::qmath::ZERO]).unwrap();
        let prod = product_state(&h, &h).unwrap();
        let ens = post_measurement_state(&prod, &MeasurementBasis::z()).unwrap();
        assert!(!ens.branches[0].negligible);
        assert!(ens.branches[1].negligible);
        assert_eq!(ens.conditional_entropy(), 0.0);
    }

    #[test]
    fn h_r_given_b_cases() {
        assert!(h_r_given_b(&bell_state(), &MeasurementBasis::x()).unwrap().abs() < 1e-12);
        assert!(h_r_given_b(&bell_state(), &MeasurementBasis::z()).unwrap().abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let b = random::basis(&mut rng);
            let h = h_r_given_b(&DensityMatrix::maximally_mixed(4), &b).unwrap();
            assert!((h - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn h_r_given_b_matches_closed_form_at_theta_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let zeta = rng.random_range(0.0..FRAC_PI_4);
            let omega = rng.random_range(0.0..PI);
            let rho = schmidt_state(&SchmidtParams::new(zeta, 0.0, 0.0).unwrap());
            let oracle = h2(0.5 * (1.0 - (2.0 * zeta).cos() * (2.0 * omega).cos())) - h2(zeta.cos().powi(2));
            let got = h_r_given_b(&rho, &linear_basis(omega)).unwrap();
            assert!((got - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn three_term_formula_equals_cq_state_conditional_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..300 {
            let rho = random::mixed_two_qubit_state(&mut rng);
            let basis = random::basis(&mut rng);
            let three = h_r_given_b(&rho, &basis).unwrap();
            let cq = conditional_entropy(&cq_state(&rho, &basis).unwrap()).unwrap();
            assert!((three - cq).abs() < 1e-9, "{three} vs {cq}");
            assert!((-1e-12..=1.0 + 1e-12).contains(&three));
        }
    }

    #[test]
    fn joint_distribution_cases() {
        let zz = joint_distribution(&bell_state(), &MeasurementBasis::z(), &MeasurementBasis::z()).unwrap();
        assert!((zz.table[0][0] - 0.5).abs() < 1e-14 && (zz.table[1][1] - 0.5).abs() < 1e-14);
        assert!(zz.mismatch() < 1e-15);
        // ⟨±,H|Φ+⟩ = ±1/2 for every outcome pair.
        let xz = joint_distribution(&bell_state(), &MeasurementBasis::x(), &MeasurementBasis::z()).unwrap();
        for p in xz.flat() {
            assert!((p - 0.25).abs() < 1e-14);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random::pure_state(&mut rng, 2);
        let b = random::pure_state(&mut rng, 2);
        let (ba, bb) = (random::basis(&mut rng), random::basis(&mut rng));
        let d = joint_distribution(&product_state(&a, &b).unwrap(), &ba, &bb).unwrap();
        let pa = ba.probabilities(&a);
        let pb = bb.probabilities(&b);
        for r in 0..2 {
            for s in 0..2 {
                assert!((d.table[r][s] - pa[r] * pb[s]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn h_r_given_rb_cases() {
        let perfect = JointDistribution::new([[0.5, 0.0], [0.0, 0.5]]).unwrap();
        assert_eq!(h_r_given_rb(&perfect), 0.0);
        let uniform = JointDistribution::new([[0.25; 2]; 2]).unwrap();
        assert!((h_r_given_rb(&uniform) - 1.0).abs() < 1e-15);
        assert!(JointDistribution::new([[0.5, 0.5], [0.5, 0.0]]).is_err());
        assert!(JointDistribution::from_counts([0.0; 4]).is_err());
    }

    #[test]
    fn h_r_given_rb_both_x_on_schmidt_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let zeta = rng.random_range(0.0..FRAC_PI_4);
            let rho = schmidt_state(&SchmidtParams::new(zeta, 0.0, 0.0).unwrap());
            // Amplitudes ⟨±±|Φ⟩ = (cos ζ ± sin ζ)/2 on the four outcomes.
            let (s, c) = zeta.sin_cos();
            let same = ((c + s) / 2.0).powi(2);
            let diff = ((c - s) / 2.0).powi(2);
            let enumerated = JointDistribution::new([[same, diff], [diff, same]]).unwrap();
            let x = MeasurementBasis::x();
            let d = joint_distribution(&rho, &x, &x).unwrap();
            assert!((h_r_given_rb(&d) - h_r_given_rb(&enumerated)).abs() < 1e-12);
            assert!((h_r_given_rb(&d) - h2((1.0 - (2.0 * zeta).sin()) / 2.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn data_processing_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let rho = random::mixed_two_qubit_state(&mut rng);
            let (ba, bb) = (random::basis(&mut rng), random::basis(&mut rng));
            let hrb = h_r_given_b(&rho, &ba).unwrap();
            let d = joint_distribution(&rho, &ba, &bb).unwrap();
            let hrr = h_r_given_rb(&d);
            let fano = fano_bound(d.mismatch()).unwrap();
            assert!(hrb <= hrr + 1e-9, "{hrb} > {hrr}");
            assert!(hrr <= fano + 1e-9, "{hrr} > {fano}");
        }
    }

    #[test]
    fn entropies_invariant_under_outcome_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let rho = random::mixed_two_qubit_state(&mut rng);
            let (ba, bb) = (random::basis(&mut rng), random::basis(&mut rng));
            let h1 = h_r_given_b(&rho, &ba).unwrap();
            let h2v = h_r_given_b(&rho, &ba.swapped()).unwrap();
            assert!((h1 - h2v).abs() < 1e-12);
            let d1 = h_r_given_rb(&joint_distribution(&rho, &ba, &bb).unwrap());
            let d2 = h_r_given_rb(&joint_distribution(&rho, &ba.swapped(), &bb.swapped()).unwrap());
            assert!((d1 - d2).abs() < 1e-12);
        }
    }
}
