//! Uncertainty relations and the entanglement witness built on them.
//!
//! Three relations are evaluated:
//!
//! * Robertson: `ΔR·ΔS ≥ ½|⟨[R,S]⟩|`.
//! * Maassen–Uffink: `H(R) + H(S) ≥ log₂(1/c)`, with `c` the largest squared
//!   overlap between the two measurement bases.
//! * The memory-assisted form: `H(R|B) + H(S|B) ≥ log₂(1/c) + H(A|B)`.
//!
//! Because `H(A|B) < 0` certifies entanglement, any estimate of the left-hand
//! side that falls below `log₂(1/c)` is an entanglement witness.

use serde::{Deserialize, Serialize};

use crate::entropy::{
    conditional_entropy, fano_bound, h_r_given_b, h_r_given_rb, joint_distribution,
    shannon_entropy,
};
use crate::error::{Error, Result};
use crate::format::ser_fixed9;
use crate::qmath::{ComplexMatrix, HERMITIAN_TOL};
use crate::states::{DensityMatrix, MeasurementBasis};

/// Margin below the bound that rounding alone cannot produce.
pub const WITNESS_ROUNDING_GUARD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Entangled,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Entangled => "entangled",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Which left-hand-side estimate a witness decision uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// `H(R|B) + H(S|B)` from Bob's conditional states.
    Tomographic,
    /// `H(R|R_B) + H(S|S_B)` with Bob measuring.
    Measurement,
    /// `h₂(q_R) + h₂(q_S)` from the mismatch rates alone.
    Fano,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Tomographic, Estimator::Measurement, Estimator::Fano];

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Tomographic => "tomographic",
            Estimator::Measurement => "measurement",
            Estimator::Fano => "fano",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WitnessRule {
    pub estimator: Estimator,
    /// `ε_wit`: the estimate must undercut `log₂(1/c)` by more than this.
    pub tolerance: f64,
}

impl Default for WitnessRule {
    fn default() -> Self {
        Self {
            estimator: Estimator::Tomographic,
            tolerance: 0.0,
        }
    }
}

/// Entangled iff `lhs_estimate < log_inv_c - ε_wit`.
pub fn witness(lhs_estimate: f64, log_inv_c: f64) -> Verdict {
    witness_with_tolerance(lhs_estimate, log_inv_c, 0.0)
}

pub fn witness_with_tolerance(lhs_estimate: f64, log_inv_c: f64, tolerance: f64) -> Verdict {
    if lhs_estimate < log_inv_c - tolerance - WITNESS_ROUNDING_GUARD {
        Verdict::Entangled
    } else {
        Verdict::Inconclusive
    }
}

/// `c = max_{r,s} |⟨Ψ_r|Υ_s⟩|²`, in `[½, 1]` for qubits.
pub fn complementarity(r: &MeasurementBasis, s: &MeasurementBasis) -> f64 {
    r.max_overlap(s).clamp(0.5, 1.0)
}

pub fn log_inv_c(c: f64) -> f64 {
    -c.log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaassenUffink {
    pub lhs: f64,
    pub rhs: f64,
}

impl MaassenUffink {
    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// `H(R) + H(S)` against `log₂(1/c)` on a single-qubit state.
pub fn maassen_uffink_check(
    rho_a: &DensityMatrix,
    r: &MeasurementBasis,
    s: &MeasurementBasis,
) -> Result<MaassenUffink> {
    if rho_a.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "single-qubit state".into(),
            found: format!("dim {}", rho_a.dim()),
        });
    }
    let lhs = shannon_entropy(&r.probabilities(rho_a)) + shannon_entropy(&s.probabilities(rho_a));
    Ok(MaassenUffink {
        lhs,
        rhs: log_inv_c(complementarity(r, s)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RobertsonReport {
    pub delta_r: f64,
    pub delta_s: f64,
    /// `½ |⟨[R, S]⟩|`.
    pub commutator_bound: f64,
}

impl RobertsonReport {
    pub fn slack(&self) -> f64 {
        self.delta_r * self.delta_s - self.commutator_bound
    }
}

pub fn robertson_check(
    rho: &DensityMatrix,
    r: &ComplexMatrix,
    s: &ComplexMatrix,
) -> Result<RobertsonReport> {
    if rho.dim() != 2 || r.rows() != 2 || s.rows() != 2 || !r.is_square() || !s.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "single-qubit state and 2x2 observables".into(),
            found: format!("state dim {}", rho.dim()),
        });
    }
    for obs in [r, s] {
        let d = obs.hermiticity_defect();
        if d > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: d });
        }
    }
    let m = rho.matrix();
    let mean = |o: &ComplexMatrix| m.trace_product(o).re;
    let std = |o: &ComplexMatrix| (mean(&(o * o)) - mean(o).powi(2)).max(0.0).sqrt();
    let commutator = &(r * s) - &(s * r);
    Ok(RobertsonReport {
        delta_r: std(r),
        delta_s: std(s),
        commutator_bound: 0.5 * m.trace_product(&commutator).norm(),
    })
}

/// Both sides of the memory-assisted relation for one configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UncertaintyReport {
    #[serde(serialize_with = "ser_fixed9")]
    pub lhs_tomographic: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub lhs_measurement: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub lhs_fano: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub log_inv_c: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub h_a_given_b: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub rhs_raw: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub rhs_effective: f64,
    pub witness_verdict: Verdict,
}

impl UncertaintyReport {
    /// Assembles a report from the three estimates and the bound terms.
    pub fn from_parts(
        lhs: [f64; 3],
        log_inv_c: f64,
        h_a_given_b: f64,
        rule: WitnessRule,
    ) -> Self {
        let rhs_raw = log_inv_c + h_a_given_b;
        let mut report = Self {
            lhs_tomographic: lhs[0],
            lhs_measurement: lhs[1],
            lhs_fano: lhs[2],
            log_inv_c,
            h_a_given_b,
            rhs_raw,
            rhs_effective: rhs_raw.max(0.0),
            witness_verdict: Verdict::Inconclusive,
        };
        report.apply_witness(rule);
        report
    }

    pub fn apply_witness(&mut self, rule: WitnessRule) {
        self.witness_verdict =
            witness_with_tolerance(self.lhs(rule.estimator), self.log_inv_c, rule.tolerance);
    }

    pub fn lhs(&self, estimator: Estimator) -> f64 {
        match estimator {
            Estimator::Tomographic => self.lhs_tomographic,
            Estimator::Measurement => self.lhs_measurement,
            Estimator::Fano => self.lhs_fano,
        }
    }

    /// `lhs_tomographic - rhs_raw`; non-negative for every quantum state.
    pub fn berta_slack(&self) -> f64 {
        self.lhs_tomographic - self.rhs_raw
    }

    /// `tomographic ≤ measurement + tol ≤ fano + 2·tol`.
    pub fn ordering_holds(&self, tol: f64) -> bool {
        self.lhs_tomographic <= self.lhs_measurement + tol
            && self.lhs_measurement + tol <= self.lhs_fano + 2.0 * tol
    }
}

/// Evaluates every estimator and bound term. Alice measures `r` or `s`;
/// for the measurement and Fano estimates Bob measures `bob_r` or `bob_s`.
pub fn evaluate_berta(
    rho_ab: &DensityMatrix,
    r: &MeasurementBasis,
    s: &MeasurementBasis,
    bob_r: &MeasurementBasis,
    bob_s: &MeasurementBasis,
) -> Result<UncertaintyReport> {
    evaluate_berta_with(rho_ab, r, s, bob_r, bob_s, WitnessRule::default())
}

pub fn evaluate_berta_with(
    rho_ab: &DensityMatrix,
    r: &MeasurementBasis,
    s: &MeasurementBasis,
    bob_r: &MeasurementBasis,
    bob_s: &MeasurementBasis,
    rule: WitnessRule,
) -> Result<UncertaintyReport> {
    let tomo = h_r_given_b(rho_ab, r)? + h_r_given_b(rho_ab, s)?;
    let dr = joint_distribution(rho_ab, r, bob_r)?;
    let ds = joint_distribution(rho_ab, s, bob_s)?;
    let meas = h_r_given_rb(&dr) + h_r_given_rb(&ds);
    let fano = fano_bound(dr.mismatch())? + fano_bound(ds.mismatch())?;
    Ok(UncertaintyReport::from_parts(
        [tomo, meas, fano],
        log_inv_c(complementarity(r, s)),
        conditional_entropy(rho_ab)?,
        rule,
    ))
}
