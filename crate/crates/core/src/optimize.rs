//! Closed-form entropies for the Schmidt family and the two searches built on
//! them: the state minimizing `H(R|B) + H(S|B)` at fixed entanglement and
//! complementarity, and Bob's basis minimizing `H(R|R_B)`.
//!
//! `R` is the linear basis at angle `ω` and `S` is the computational basis.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rayon::prelude::*;

use crate::entropy::{binary_entropy, h_r_given_rb, joint_distribution};
use crate::error::{check_range, Result};
use crate::states::{bloch_basis, DensityMatrix, MeasurementBasis, SchmidtParams};

/// θ seeds on `[0, π]` for [`minimize_state`].
pub const THETA_GRID_POINTS: usize = 721;
pub const THETA_TOL: f64 = 1e-10;
pub const BOB_POLAR_POINTS: usize = 37;
pub const BOB_AZIMUTH_POINTS: usize = 72;
pub const BOB_ENTROPY_TOL: f64 = 1e-8;
/// Values closer than this are ties; the lower index wins.
pub const TIE_TOL: f64 = 1e-12;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn h2(p: f64) -> f64 {
    binary_entropy(p.clamp(0.0, 1.0)).expect("clamped to [0, 1]")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedFormTerms {
    pub h_a_given_b: f64,
    pub h_r_given_b: f64,
    pub h_s_given_b: f64,
    pub c: f64,
}

impl ClosedFormTerms {
    pub fn lhs(&self) -> f64 {
        self.h_r_given_b + self.h_s_given_b
    }

    pub fn log_inv_c(&self) -> f64 {
        -self.c.log2()
    }

    pub fn rhs(&self) -> f64 {
        self.log_inv_c() + self.h_a_given_b
    }
}

pub fn closed_form_terms(params: &SchmidtParams, omega: f64) -> ClosedFormTerms {
    let (z2, t2, w2) = (2.0 * params.zeta, 2.0 * params.theta, 2.0 * omega);
    let hz = h2(params.zeta.cos().powi(2));
    let overlap_r = w2.cos() * t2.cos() + w2.sin() * t2.sin() * params.phi.cos();
    ClosedFormTerms {
        h_a_given_b: -hz,
        h_r_given_b: h2(0.5 * (1.0 - z2.cos() * overlap_r)) - hz,
        h_s_given_b: h2(0.5 * (1.0 - z2.cos() * t2.cos())) - hz,
        c: omega.cos().powi(2).max(omega.sin().powi(2)),
    }
}

/// Golden-section search on `[lo, hi]`; returns the best point evaluated.
pub fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Index of the smallest value, lowest index among ties.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] - TIE_TOL {
            best = i;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateMinimum {
    pub theta_star: f64,
    pub phi_star: f64,
    pub min_sum: f64,
}

/// Minimizes `H(R|B) + H(S|B)` over `(θ, φ ∈ {0, π})` at fixed `(ζ, ω)`.
///
/// `ω` is accepted on `[0, π/2]` so the reflection `ω → π/2 - ω` can be
/// exercised directly.
pub fn minimize_state(zeta: f64, omega: f64) -> Result<StateMinimum> {
    check_range("zeta", zeta, 0.0, FRAC_PI_4, "[0, pi/4]")?;
    check_range("omega", omega, 0.0, FRAC_PI_2, "[0, pi/2]")?;
    let sum = |theta: f64, phi: f64| {
        let theta = theta.rem_euclid(PI);
        closed_form_terms(&SchmidtParams { zeta, theta, phi }, omega).lhs()
    };
    let step = PI / (THETA_GRID_POINTS - 1) as f64;
    let seeds: Vec<(f64, f64)> = [0.0, PI]
        .iter()
        .flat_map(|&phi| (0..THETA_GRID_POINTS).map(move |k| (k as f64 * step, phi)))
        .collect();
    let values: Vec<f64> = seeds.iter().map(|&(t, p)| sum(t, p)).collect();
    let best = argmin(&values);
    let (mut theta, phi) = seeds[best];
    let mut value = values[best];
    let (t, v) = golden_section(|t| sum(t, phi), theta - step, theta + step, THETA_TOL);
    if v < value - TIE_TOL {
        theta = t;
        value = v;
    }
    let mut theta = theta.rem_euclid(PI);
    if PI - theta < THETA_TOL {
        theta = 0.0;
    }
    Ok(StateMinimum {
        theta_star: theta,
        phi_star: phi,
        min_sum: value,
    })
}

/// Best state for `R = X`, `S = Z` at fixed `ζ`: `cos ζ |HH⟩ + sin ζ |VV⟩`.
pub fn best_state_for_conjugate(zeta: f64) -> Result<SchmidtParams> {
    check_range("zeta", zeta, 0.0, FRAC_PI_4, "[0, pi/4]")?;
    SchmidtParams::new(zeta, 0.0, 0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BobBasisOptimum {
    pub basis: MeasurementBasis,
    pub h: f64,
    pub polar: f64,
    pub azimuth: f64,
}

/// Bloch-parametrized basis for Bob minimizing `H(R|R_B)`.
pub fn optimal_bob_basis(
    rho_ab: &DensityMatrix,
    alice_basis: &MeasurementBasis,
) -> Result<BobBasisOptimum> {
    let entropy = |polar: f64, azimuth: f64| -> Result<f64> {
        let dist = joint_distribution(rho_ab, alice_basis, &bloch_basis(polar, azimuth))?;
        Ok(h_r_given_rb(&dist))
    };
    let d_polar = PI / (BOB_POLAR_POINTS - 1) as f64;
    let d_azimuth = 2.0 * PI / BOB_AZIMUTH_POINTS as f64;
    let grid: Vec<(f64, f64)> = (0..BOB_POLAR_POINTS)
        .flat_map(|i| (0..BOB_AZIMUTH_POINTS).map(move |j| (i as f64 * d_polar, j as f64 * d_azimuth)))
        .collect();
    let values = grid
        .par_iter()
        .map(|&(p, a)| entropy(p, a))
        .collect::<Result<Vec<f64>>>()?;
    let best = argmin(&values);
    let (mut polar, mut azimuth) = grid[best];
    let mut h = values[best];

    // Every evaluation is a valid input, so errors cannot occur past the grid.
    let f = |p: f64, a: f64| entropy(p, a).unwrap_or(f64::INFINITY);
    let tol = BOB_ENTROPY_TOL.sqrt() * 1e-2;
    for _ in 0..200 {
        let start = h;
        let (p, v) = golden_section(|p| f(p, azimuth), polar - d_polar, polar + d_polar, tol);
        if v < h - TIE_TOL {
            polar = p;
            h = v;
        }
        let (a, v) = golden_section(|a| f(polar, a), azimuth - d_azimuth, azimuth + d_azimuth, tol);
        if v < h - TIE_TOL {
            azimuth = a;
            h = v;
        }
        if start - h < BOB_ENTROPY_TOL {
            break;
        }
    }
    let (polar, azimuth) = canonical_bloch(polar, azimuth);
    Ok(BobBasisOptimum {
        basis: bloch_basis(polar, azimuth),
        h,
        polar,
        azimuth,
    })
}

/// Maps Bloch angles into `polar ∈ [0, π]`, `azimuth ∈ [0, 2π)`.
fn canonical_bloch(polar: f64, azimuth: f64) -> (f64, f64) {
    let mut p = polar.rem_euclid(2.0 * PI);
    let mut a = azimuth;
    if p > PI {
        p = 2.0 * PI - p;
        a += PI;
    }
    (p, a.rem_euclid(2.0 * PI))
}
