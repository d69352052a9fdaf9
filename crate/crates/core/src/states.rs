//! Two-qubit states, measurement bases and the white-noise model.
//!
//! Polarization language is used for the computational basis:
//! `|H⟩ = (1, 0)`, `|V⟩ = (0, 1)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_range, Error, Result};
use crate::format::ser_sig12;
use crate::qmath::{
    fix_global_phase, hermitian_eig, inner, kron_vec, partial_trace, pauli, tensor_product,
    ComplexMatrix, Spectrum, Subsystem, C64, ONE, ZERO,
};

/// Validation tolerance for Hermiticity, trace and positivity.
pub const STATE_TOL: f64 = 1e-10;

/// Orthonormality tolerance for measurement bases.
pub const BASIS_TOL: f64 = 1e-12;

const SPECTRAL_FLOOR: f64 = 1e-15;

/// Pure two-qubit state `cos ζ |θ⟩|θ⟩ + sin ζ |θ⊥⟩|θ⊥⟩` with
/// `|θ⟩ = cos θ |H⟩ + e^{iφ} sin θ |V⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SchmidtParams {
    #[serde(serialize_with = "ser_sig12")]
    pub zeta: f64,
    #[serde(serialize_with = "ser_sig12")]
    pub theta: f64,
    #[serde(serialize_with = "ser_sig12")]
    pub phi: f64,
}

impl SchmidtParams {
    pub fn new(zeta: f64, theta: f64, phi: f64) -> Result<Self> {
        check_range("zeta", zeta, 0.0, FRAC_PI_2, "[0, pi/2]")?;
        if !(theta.is_finite() && (0.0..PI).contains(&theta)) {
            return Err(Error::OutOfRange {
                name: "theta",
                value: theta,
                range: "[0, pi)",
            });
        }
        if !(phi.is_finite() && (0.0..2.0 * PI).contains(&phi)) {
            return Err(Error::OutOfRange {
                name: "phi",
                value: phi,
                range: "[0, 2pi)",
            });
        }
        Ok(Self { zeta, theta, phi })
    }

    /// The `ζ ∈ [0, π/4]` branch with `sin²(2ζ) = tangle`.
    pub fn from_tangle(tangle: f64, theta: f64, phi: f64) -> Result<Self> {
        check_range("tangle", tangle, 0.0, 1.0, "[0, 1]")?;
        Self::new(zeta_for_tangle(tangle), theta, phi)
    }

    pub fn tangle(&self) -> f64 {
        (2.0 * self.zeta).sin().powi(2)
    }
}

pub fn zeta_for_tangle(tangle: f64) -> f64 {
    0.5 * tangle.clamp(0.0, 1.0).sqrt().asin()
}

/// Trace-one positive semidefinite operator on one or two qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates `matrix` as a density operator.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let n = matrix.rows();
        if !matrix.is_square() || !(n == 2 || n == 4) {
            return Err(Error::DimensionMismatch {
                expected: "2x2 or 4x4".into(),
                found: format!("{}x{}", matrix.rows(), matrix.cols()),
            });
        }
        let spectrum = hermitian_eig(&matrix)?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = spectrum.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// Hermitian part of `m`, divided by its trace. Callers guarantee `m` is
    /// positive semidefinite up to rounding.
    pub(crate) fn renormalized(m: &ComplexMatrix) -> Self {
        let h = m.hermitian_part();
        let tr = h.trace().re;
        Self {
            matrix: h.scale_real(1.0 / tr),
        }
    }

    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.hermiticity_defect() < 1e-8);
        Self { matrix }
    }

    /// `|ψ⟩⟨ψ|` after normalizing `ψ`.
    pub fn from_ket(amplitudes: &[C64]) -> Result<Self> {
        let n = amplitudes.len();
        if !(n == 2 || n == 4) {
            return Err(Error::DimensionMismatch {
                expected: "ket of length 2 or 4".into(),
                found: format!("length {n}"),
            });
        }
        let norm = inner(amplitudes, amplitudes).re.sqrt();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite ket".into()));
        }
        let v: Vec<C64> = amplitudes.iter().map(|z| z / norm).collect();
        Ok(Self {
            matrix: ComplexMatrix::projector(&v),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        assert!(dim == 2 || dim == 4);
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> Spectrum {
        hermitian_eig(&self.matrix).expect("density matrix is Hermitian")
    }

    /// Eigenvalues with rounding-level negatives clamped to zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectrum()
            .eigenvalues
            .into_iter()
            .map(|x| if x < 0.0 && x >= -STATE_TOL { 0.0 } else { x })
            .collect()
    }

    /// Reduced state of the kept qubit.
    pub fn reduced(&self, keep: Subsystem) -> Result<DensityMatrix> {
        Ok(Self {
            matrix: partial_trace(&self.matrix, keep)?,
        })
    }

    /// `(U_A ⊗ U_B) ρ (U_A ⊗ U_B)^H`.
    pub fn rotated_locally(&self, ua: &ComplexMatrix, ub: &ComplexMatrix) -> Result<Self> {
        let u = tensor_product(ua, ub)?;
        let m = &(&u * &self.matrix) * &u.adjoint();
        Ok(Self::from_trusted(m.hermitian_part()))
    }

    /// `Σ_i w_i ρ_i`; weights must be non-negative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let dim = parts
            .first()
            .map(|(_, r)| r.dim())
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (w, r) in parts {
            if r.dim() != dim || *w < 0.0 {
                return Err(Error::InvalidState("inconsistent mixture".into()));
            }
            acc = &acc + &r.matrix.scale_real(*w);
        }
        Self::new(acc)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Orthonormal qubit basis; outcome `r` corresponds to `kets[r]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBasis {
    pub label: String,
    kets: [[C64; 2]; 2],
}

impl MeasurementBasis {
    pub fn new(label: impl Into<String>, kets: [[C64; 2]; 2]) -> Result<Self> {
        let mut kets = kets;
        let mut worst: f64 = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let expected = if a == b { ONE } else { ZERO };
                worst = worst.max((inner(&kets[a], &kets[b]) - expected).norm());
            }
        }
        if !(worst <= BASIS_TOL) {
            return Err(Error::InvalidBasis { deviation: worst });
        }
        for k in kets.iter_mut() {
            fix_global_phase(k);
        }
        Ok(Self {
            label: label.into(),
            kets,
        })
    }

    pub fn z() -> Self {
        linear_basis(0.0).with_label("Z")
    }

    pub fn x() -> Self {
        linear_basis(std::f64::consts::FRAC_PI_4).with_label("X")
    }

    pub fn y() -> Self {
        bloch_basis(FRAC_PI_2, FRAC_PI_2).with_label("Y")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn ket(&self, outcome: usize) -> &[C64; 2] {
        &self.kets[outcome]
    }

    pub fn projector(&self, outcome: usize) -> ComplexMatrix {
        ComplexMatrix::projector(&self.kets[outcome])
    }

    /// Outcome distribution on a single-qubit state.
    pub fn probabilities(&self, rho: &DensityMatrix) -> [f64; 2] {
        assert_eq!(rho.dim(), 2);
        [0, 1].map(|r| rho.matrix().expectation(&self.kets[r]).re.max(0.0))
    }

    /// Same basis with the two outcome labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            label: format!("{}~", self.label),
            kets: [self.kets[1], self.kets[0]],
        }
    }

    /// Basis `{U|k_0⟩, U|k_1⟩}` for a 2×2 unitary `U`.
    pub fn transformed(&self, u: &ComplexMatrix) -> Result<Self> {
        let apply = |k: &[C64; 2]| -> [C64; 2] {
            [
                u.get(0, 0) * k[0] + u.get(0, 1) * k[1],
                u.get(1, 0) * k[0] + u.get(1, 1) * k[1],
            ]
        };
        Self::new(self.label.clone(), [apply(&self.kets[0]), apply(&self.kets[1])])
    }

    /// `max_{a,b} |⟨self_a|other_b⟩|²`.
    pub fn max_overlap(&self, other: &MeasurementBasis) -> f64 {
        let mut best: f64 = 0.0;
        for a in &self.kets {
            for b in &other.kets {
                best = best.max(inner(a, b).norm_sqr());
            }
        }
        best
    }
}

/// Linear polarization basis `{|ω⟩, |ω⊥⟩}` with
/// `|ω⟩ = cos ω |H⟩ + sin ω |V⟩`; `ω` is reduced modulo π.
pub fn linear_basis(omega: f64) -> MeasurementBasis {
    let w = omega.rem_euclid(PI);
    let (s, c) = w.sin_cos();
    let kets = [
        [C64::new(c, 0.0), C64::new(s, 0.0)],
        [C64::new(-s, 0.0), C64::new(c, 0.0)],
    ];
    MeasurementBasis::new(format!("L{:.9}", w), kets).expect("rotation is orthonormal")
}

/// Basis whose first ket sits at Bloch angles `(polar, azimuth)`.
pub fn bloch_basis(polar: f64, azimuth: f64) -> MeasurementBasis {
    let (s, c) = (0.5 * polar).sin_cos();
    let e = C64::from_polar(1.0, azimuth);
    let kets = [
        [C64::new(c, 0.0), e * s],
        [-e.conj() * s, C64::new(c, 0.0)],
    ];
    MeasurementBasis::new(format!("B{:.9},{:.9}", polar, azimuth), kets)
        .expect("Bloch pair is orthonormal")
}

/// Ket for `|θ⟩`; the orthogonal partner is `|θ⊥⟩ = -e^{-iφ} sin θ |H⟩ + cos θ |V⟩`.
fn theta_kets(theta: f64, phi: f64) -> ([C64; 2], [C64; 2]) {
    let (s, c) = theta.sin_cos();
    let e = C64::from_polar(1.0, phi);
    (
        [C64::new(c, 0.0), e * s],
        [-e.conj() * s, C64::new(c, 0.0)],
    )
}

/// State vector of [`schmidt_state`].
pub fn schmidt_ket(params: &SchmidtParams) -> Vec<C64> {
    let (t, tp) = theta_kets(params.theta, params.phi);
    let (sz, cz) = params.zeta.sin_cos();
    let a = kron_vec(&t, &t);
    let b = kron_vec(&tp, &tp);
    a.iter().zip(&b).map(|(x, y)| x * cz + y * sz).collect()
}

pub fn schmidt_state(params: &SchmidtParams) -> DensityMatrix {
    DensityMatrix::from_ket(&schmidt_ket(params)).expect("Schmidt ket is normalized")
}

/// `(|HH⟩ + |VV⟩)/√2`.
pub fn bell_state() -> DensityMatrix {
    schmidt_state(&SchmidtParams {
        zeta: std::f64::consts::FRAC_PI_4,
        theta: 0.0,
        phi: 0.0,
    })
}

pub fn product_state(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    if a.dim() != 2 || b.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "two single-qubit states".into(),
            found: format!("dims {} and {}", a.dim(), b.dim()),
        });
    }
    Ok(DensityMatrix::from_trusted(tensor_product(a.matrix(), b.matrix())?))
}

/// White-noise mixing weight `p` in `p·ρ + (1-p)·I/d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub mixing: f64,
}

impl NoiseModel {
    pub fn new(mixing: f64) -> Result<Self> {
        check_range("mixing", mixing, 0.0, 1.0, "[0, 1]")?;
        Ok(Self { mixing })
    }

    /// Inverts `F = p + (1-p)/4` for a two-qubit pure target.
    pub fn from_fidelity(fidelity: f64) -> Result<Self> {
        check_range("fidelity", fidelity, 0.25, 1.0, "[1/4, 1]")?;
        Self::new(((4.0 * fidelity - 1.0) / 3.0).clamp(0.0, 1.0))
    }

    pub fn ideal() -> Self {
        Self { mixing: 1.0 }
    }

    pub fn fidelity(&self) -> f64 {
        self.mixing + (1.0 - self.mixing) / 4.0
    }
}

pub fn apply_white_noise(rho: &DensityMatrix, model: NoiseModel) -> DensityMatrix {
    let d = rho.dim();
    let p = model.mixing;
    let noise = ComplexMatrix::identity(d).scale_real((1.0 - p) / d as f64);
    DensityMatrix::from_trusted(&rho.matrix().scale_real(p) + &noise)
}

/// `⟨Φ|ρ|Φ⟩` for a pure target `|Φ⟩⟨Φ|`.
pub fn fidelity_with_pure(rho: &DensityMatrix, target: &DensityMatrix) -> Result<f64> {
    if rho.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("dim {}", target.dim()),
            found: format!("dim {}", rho.dim()),
        });
    }
    let p = purity(target);
    if p < 1.0 - 1e-8 {
        return Err(Error::NotPure { purity: p });
    }
    // tr(ρσ) equals ⟨Φ|ρ|Φ⟩ when σ is rank one.
    Ok(rho.matrix().trace_product(target.matrix()).re.clamp(0.0, 1.0))
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("dim {}", rho.dim()),
            found: format!("dim {}", sigma.dim()),
        });
    }
    let floored_sqrt = |x: f64| if x < SPECTRAL_FLOOR { 0.0 } else { x.sqrt() };
    let sqrt_rho = rho.spectrum().map(floored_sqrt);
    let m = (&(&sqrt_rho * sigma.matrix()) * &sqrt_rho).hermitian_part();
    let root_sum: f64 = hermitian_eig(&m)?.eigenvalues.iter().map(|&x| floored_sqrt(x)).sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// `tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().trace_product(rho.matrix()).re
}

/// Squared concurrence.
///
/// The concurrence is `max(0, λ1 - λ2 - λ3 - λ4)` with `λ_i` the decreasing
/// square roots of the eigenvalues of `ρ ρ̃`, `ρ̃ = (σy⊗σy) ρ* (σy⊗σy)`.
/// Those are obtained here as the eigenvalues of the Hermitian
/// `√(√ρ ρ̃ √ρ)`, which shares them.
pub fn tangle(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: "two-qubit state".into(),
            found: format!("dim {}", rho.dim()),
        });
    }
    let yy = tensor_product(&pauli::y(), &pauli::y())?;
    let flipped = &(&yy * &rho.matrix().conj()) * &yy;
    let sqrt_rho = rho
        .spectrum()
        .map(|x| if x > SPECTRAL_FLOOR { x.sqrt() } else { 0.0 });
    let m = (&(&sqrt_rho * &flipped) * &sqrt_rho).hermitian_part();
    // Square roots amplify rounding in vanishing eigenvalues (1e-17 -> 3e-9),
    // so values at the rounding floor are taken as exact zeros.
    let lambdas: Vec<f64> = hermitian_eig(&m)?
        .eigenvalues
        .into_iter()
        .map(|x| if x > SPECTRAL_FLOOR { x.sqrt() } else { 0.0 })
        .collect();
    let c = (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0);
    Ok((c * c).min(1.0))
}
