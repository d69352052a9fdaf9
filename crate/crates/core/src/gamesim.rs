//! The uncertainty game end to end: a noisy source, Alice's random basis
//! choice relayed to Bob, matched measurements, and the parameter sweeps and
//! threshold scans built from many such games.

use std::f64::consts::{FRAC_PI_4, PI};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{fano_bound, h_r_given_b, h_r_given_rb, joint_distribution, JointDistribution};
use crate::error::{check_range, Error, Result};
use crate::format::{fixed9, ser_fixed9};
use crate::optimize::minimize_state;
use crate::states::{
    apply_white_noise, linear_basis, schmidt_state, zeta_for_tangle, DensityMatrix, MeasurementBasis,
    NoiseModel, SchmidtParams,
};
use crate::tomography::{conditional_qubit_tomography, sample_counts, CountMode};
use crate::uncertainty::{
    complementarity, log_inv_c, Estimator, UncertaintyReport, Verdict, WitnessRule,
};

pub const DEFAULT_SHOTS: u64 = 20_000;
pub const DEFAULT_FIDELITY: f64 = 0.97;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 200;
pub const MIN_BOOTSTRAP_RESAMPLES: usize = 100;
/// Repeated conditional tomographies behind each sampled tomographic error.
pub const TOMOGRAPHIC_ERROR_REPEATS: usize = 20;
/// Witness tolerance in sampled mode, in standard errors of the estimate.
pub const SAMPLED_WITNESS_SIGMAS: f64 = 3.0;
const BISECTION_TOL: f64 = 1e-10;

pub const SWEEP_CSV_HEADER: &str =
    "x,lhs_tomo,lhs_meas,lhs_fano,rhs_raw,rhs_eff,mu_bound,witness,err_tomo,err_meas,err_fano";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Entanglement {
    Tangle(f64),
    Zeta(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub entanglement: Entanglement,
    pub theta: f64,
    pub phi: f64,
    /// Angle of `R` relative to `S = Z`.
    pub omega: f64,
    pub fidelity: f64,
    /// Rounds per game (both bases together).
    pub shots: u64,
    pub seed: u64,
    pub exact_counts: bool,
    pub bootstrap_resamples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            entanglement: Entanglement::Tangle(1.0),
            theta: 0.0,
            phi: 0.0,
            omega: FRAC_PI_4,
            fidelity: DEFAULT_FIDELITY,
            shots: DEFAULT_SHOTS,
            seed: 0,
            exact_counts: false,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        match self.entanglement {
            Entanglement::Tangle(t) => {
                check_range("tangle", t, 0.0, 1.0, "[0, 1]")?;
            }
            Entanglement::Zeta(z) => {
                check_range("zeta", z, 0.0, PI / 2.0, "[0, pi/2]")?;
            }
        }
        self.schmidt_params()?;
        check_range("fidelity", self.fidelity, 0.25, 1.0, "[0.25, 1]")?;
        if !self.omega.is_finite() {
            return Err(Error::NonFinite);
        }
        if self.shots < 2 {
            return Err(Error::InvalidConfig("shots must be at least 2".into()));
        }
        if self.bootstrap_resamples < MIN_BOOTSTRAP_RESAMPLES {
            return Err(Error::InvalidConfig(format!(
                "bootstrap needs at least {MIN_BOOTSTRAP_RESAMPLES} resamples"
            )));
        }
        Ok(())
    }

    pub fn zeta(&self) -> f64 {
        match self.entanglement {
            Entanglement::Tangle(t) => zeta_for_tangle(t),
            Entanglement::Zeta(z) => z,
        }
    }

    pub fn schmidt_params(&self) -> Result<SchmidtParams> {
        SchmidtParams::new(self.zeta(), self.theta, self.phi)
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        NoiseModel::from_fidelity(self.fidelity)
    }

    /// The source state after white noise.
    pub fn state(&self) -> Result<DensityMatrix> {
        Ok(apply_white_noise(&schmidt_state(&self.schmidt_params()?), self.noise()?))
    }

    pub fn r_basis(&self) -> MeasurementBasis {
        linear_basis(self.omega).with_label("R")
    }

    pub fn s_basis(&self) -> MeasurementBasis {
        MeasurementBasis::z().with_label("S")
    }

    pub fn count_mode(&self) -> CountMode {
        if self.exact_counts {
            CountMode::Exact
        } else {
            CountMode::Multinomial
        }
    }

    /// Witness rule: tomographic with no margin for exact statistics, the
    /// measurement estimate with a 3σ margin for sampled counts.
    pub fn witness_rule(&self, sigma_measurement: f64) -> WitnessRule {
        if self.exact_counts {
            WitnessRule::default()
        } else {
            WitnessRule {
                estimator: Estimator::Measurement,
                tolerance: SAMPLED_WITNESS_SIGMAS * sigma_measurement,
            }
        }
    }
}

/// Which of the two bases Alice picked in a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisChoice {
    R,
    S,
}

/// Zero-latency classical channel carrying Alice's basis choice to Bob.
fn feed_forward(announced: BasisChoice) -> BasisChoice {
    announced
}

#[derive(Clone, Debug, Serialize)]
pub struct GameRecord {
    /// Joint counts `n(r, r_B)` indexed `2r + r_B`, for rounds in basis R.
    pub counts_r: [f64; 4],
    pub counts_s: [f64; 4],
    #[serde(serialize_with = "ser_fixed9")]
    pub q_r: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub q_s: f64,
    pub report: UncertaintyReport,
    pub shots: u64,
    pub exact: bool,
}

impl GameRecord {
    pub fn rounds_r(&self) -> f64 {
        self.counts_r.iter().sum()
    }

    pub fn rounds_s(&self) -> f64 {
        self.counts_s.iter().sum()
    }
}

fn draw_outcome(cumulative: &[f64; 4], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    cumulative.iter().position(|&c| u < c).unwrap_or(3)
}

/// Running sums, with the last possible outcome absorbing rounding slack so a
/// zero-probability outcome can never be drawn.
fn cumulative(p: [f64; 4]) -> [f64; 4] {
    let mut acc = 0.0;
    let mut c = p.map(|x| {
        acc += x;
        acc
    });
    if let Some(last) = p.iter().rposition(|&x| x > 0.0) {
        c[last] = f64::INFINITY;
    }
    c
}

/// Plays `config.shots` rounds. Each round Alice picks R or S with a fair
/// coin, announces it, and both parties measure in that basis. Exact mode
/// replaces the rounds by their expected counts.
pub fn run_game(config: &ExperimentConfig) -> Result<GameRecord> {
    config.validate()?;
    let state = config.state()?;
    let (r, s) = (config.r_basis(), config.s_basis());
    let pr = joint_distribution(&state, &r, &r)?.flat();
    let ps = joint_distribution(&state, &s, &s)?.flat();
    let (counts_r, counts_s) = if config.exact_counts {
        let half = config.shots as f64 / 2.0;
        (pr.map(|p| half * p), ps.map(|p| half * p))
    } else {
        let (cr, cs) = (cumulative(pr), cumulative(ps));
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut counts = [[0.0; 4]; 2];
        for _ in 0..config.shots {
            let alice = if rng.random::<bool>() { BasisChoice::R } else { BasisChoice::S };
            let bob = feed_forward(alice);
            assert_eq!(alice, bob, "Bob must measure in the announced basis");
            let (slot, cum) = match bob {
                BasisChoice::R => (0, &cr),
                BasisChoice::S => (1, &cs),
            };
            counts[slot][draw_outcome(cum, &mut rng)] += 1.0;
        }
        (counts[0], counts[1])
    };
    record_from_counts(config, &state, counts_r, counts_s, 0.0)
}

fn measured_terms(counts: [f64; 4]) -> Result<(f64, f64)> {
    let d = JointDistribution::from_counts(counts).map_err(|_| {
        Error::InvalidConfig("a basis received no rounds; increase shots".into())
    })?;
    Ok((h_r_given_rb(&d), d.mismatch()))
}

fn record_from_counts(
    config: &ExperimentConfig,
    state: &DensityMatrix,
    counts_r: [f64; 4],
    counts_s: [f64; 4],
    sigma_measurement: f64,
) -> Result<GameRecord> {
    let (r, s) = (config.r_basis(), config.s_basis());
    let (hr, q_r) = measured_terms(counts_r)?;
    let (hs, q_s) = measured_terms(counts_s)?;
    let tomo = h_r_given_b(state, &r)? + h_r_given_b(state, &s)?;
    let report = UncertaintyReport::from_parts(
        [tomo, hr + hs, fano_bound(q_r)? + fano_bound(q_s)?],
        log_inv_c(complementarity(&r, &s)),
        crate::entropy::conditional_entropy(state)?,
        config.witness_rule(sigma_measurement),
    );
    Ok(GameRecord {
        counts_r,
        counts_s,
        q_r,
        q_s,
        report,
        shots: config.shots,
        exact: config.exact_counts,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BootstrapErrors {
    #[serde(serialize_with = "ser_fixed9")]
    pub h_r_given_rb: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub h_s_given_sb: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub lhs_measurement: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub q_r: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub q_s: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub lhs_fano: f64,
    pub resamples: usize,
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Standard errors of the count-derived quantities from multinomial
/// resampling of each basis' joint counts. Exact-count records have none.
pub fn bootstrap_errors(record: &GameRecord, resamples: usize, seed: u64) -> Result<BootstrapErrors> {
    if resamples < MIN_BOOTSTRAP_RESAMPLES {
        return Err(Error::InvalidConfig(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_RESAMPLES} resamples, got {resamples}"
        )));
    }
    if record.exact {
        return Ok(BootstrapErrors {
            resamples,
            ..Default::default()
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let resample = |counts: &[f64; 4], rng: &mut ChaCha8Rng| -> Result<(f64, f64)> {
        let n: f64 = counts.iter().sum();
        let p = counts.map(|c| c / n);
        let c = sample_counts(&p, n as u64, CountMode::Multinomial, rng);
        measured_terms([c[0], c[1], c[2], c[3]])
    };
    let mut cols: [Vec<f64>; 6] = Default::default();
    for _ in 0..resamples {
        let (hr, qr) = resample(&record.counts_r, &mut rng)?;
        let (hs, qs) = resample(&record.counts_s, &mut rng)?;
        let vals = [hr, hs, hr + hs, qr, qs, fano_bound(qr)? + fano_bound(qs)?];
        for (col, v) in cols.iter_mut().zip(vals) {
            col.push(v);
        }
    }
    Ok(BootstrapErrors {
        h_r_given_rb: std_dev(&cols[0]),
        h_s_given_sb: std_dev(&cols[1]),
        lhs_measurement: std_dev(&cols[2]),
        q_r: std_dev(&cols[3]),
        q_s: std_dev(&cols[4]),
        lhs_fano: std_dev(&cols[5]),
        resamples,
    })
}

/// Tomographic estimate from simulated conditional tomography of Bob's
/// branches, spending `shots / 2` rounds on each of Alice's bases.
pub fn sampled_tomographic_lhs(config: &ExperimentConfig, seed: u64) -> Result<f64> {
    let state = config.state()?;
    let per_run = (config.shots / 6).max(1);
    let mut total = 0.0;
    for (k, basis) in [config.r_basis(), config.s_basis()].iter().enumerate() {
        let sub = seed ^ ((k as u64 + 1) << 8);
        let ct = conditional_qubit_tomography(&state, basis, per_run, sub, config.count_mode())?;
        total += ct.ensemble.conditional_entropy();
    }
    Ok(total)
}

/// Spread of the tomographic estimate over repeated simulated tomographies.
pub fn tomographic_error(config: &ExperimentConfig, repeats: usize) -> Result<f64> {
    if config.exact_counts {
        return Ok(0.0);
    }
    let vals = (0..repeats as u64)
        .into_par_iter()
        .map(|i| sampled_tomographic_lhs(config, mix_seed(config.seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(std_dev(&vals))
}

/// Per-index stream seed; index 0 keeps `seed`.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// `x` is the tangle.
    Tangle,
    /// `x` is ω in radians.
    Omega,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    #[serde(serialize_with = "ser_fixed9")]
    pub x: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub theta: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub phi: f64,
    #[serde(flatten)]
    pub report: UncertaintyReport,
    #[serde(serialize_with = "ser_fixed9")]
    pub mu_bound: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub err_tomo: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub err_meas: f64,
    #[serde(serialize_with = "ser_fixed9")]
    pub err_fano: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub exact: bool,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{SWEEP_CSV_HEADER}")?;
        for row in &self.rows {
            let r = &row.report;
            let nums = [
                row.x,
                r.lhs_tomographic,
                r.lhs_measurement,
                r.lhs_fano,
                r.rhs_raw,
                r.rhs_effective,
                row.mu_bound,
            ]
            .map(fixed9);
            writeln!(
                w,
                "{},{},{},{},{}",
                nums.join(","),
                r.witness_verdict.as_str(),
                fixed9(row.err_tomo),
                fixed9(row.err_meas),
                fixed9(row.err_fano)
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }

    /// Estimator ordering and the uncertainty relation, within `1e-9` for
    /// exact statistics or three standard errors for sampled counts.
    pub fn check_invariants(&self) -> Result<()> {
        for pair in self.rows.windows(2) {
            if !(pair[1].x > pair[0].x) {
                return Err(Error::InvalidState("sweep variable not increasing".into()));
            }
        }
        for row in &self.rows {
            let r = &row.report;
            let tol_meas = if self.exact { 1e-9 } else { 1e-9 + 3.0 * (row.err_meas + row.err_tomo) };
            let tol_fano = if self.exact { 1e-9 } else { 1e-9 + 3.0 * (row.err_meas + row.err_fano) };
            let ok = r.berta_slack() >= -1e-9
                && r.lhs_tomographic <= r.lhs_measurement + tol_meas
                && r.lhs_measurement <= r.lhs_fano + tol_fano;
            if !ok {
                return Err(Error::InvalidState(format!(
                    "invariant violated at x = {}: {r:?}",
                    fixed9(row.x)
                )));
            }
        }
        Ok(())
    }

    /// `(first, last)` x among rows whose verdict is entangled.
    pub fn witness_range(&self) -> Option<(f64, f64)> {
        let xs: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.report.witness_verdict == Verdict::Entangled)
            .map(|r| r.x)
            .collect();
        Some((*xs.first()?, *xs.last()?))
    }

    /// Smallest `lhs_tomographic - rhs_raw` over rows with `x` in `(lo, hi)`.
    pub fn min_gap(&self, lo: f64, hi: f64) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.x > lo && r.x < hi)
            .map(|r| r.report.berta_slack())
            .min_by(f64::total_cmp)
    }
}

/// One sweep point: play the game at `(ζ, θ, φ, ω)` and attach error bars.
fn sweep_point(template: &ExperimentConfig, x: f64, params: SchmidtParams, omega: f64, index: u64) -> Result<SweepRow> {
    let config = ExperimentConfig {
        entanglement: Entanglement::Zeta(params.zeta),
        theta: params.theta,
        phi: params.phi,
        omega,
        seed: mix_seed(template.seed, index),
        ..template.clone()
    };
    let record = run_game(&config)?;
    let errs = bootstrap_errors(&record, config.bootstrap_resamples, config.seed)?;
    let err_tomo = tomographic_error(&config, TOMOGRAPHIC_ERROR_REPEATS)?;
    let mut report = record.report;
    report.apply_witness(config.witness_rule(errs.lhs_measurement));
    Ok(SweepRow {
        x,
        theta: params.theta,
        phi: params.phi,
        report,
        mu_bound: report.log_inv_c,
        err_tomo,
        err_meas: errs.lhs_measurement,
        err_fano: errs.lhs_fano,
    })
}

fn grid(points: usize, hi: f64) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidConfig("a sweep needs at least 2 points".into()));
    }
    Ok((0..points).map(|i| hi * i as f64 / (points - 1) as f64).collect())
}

fn run_sweep(
    template: &ExperimentConfig,
    kind: SweepKind,
    xs: Vec<f64>,
    point: impl Fn(f64) -> Result<(SchmidtParams, f64)> + Sync,
) -> Result<SweepResult> {
    template.validate()?;
    let rows = xs
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let (params, omega) = point(x)?;
            sweep_point(template, x, params, omega, i as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        kind,
        exact: template.exact_counts,
        rows,
    })
}

/// Tangle uniform on `[0, 1]` with the aligned state `θ = φ = 0`.
pub fn sweep_tangle(template: &ExperimentConfig, omega: f64, points: usize) -> Result<SweepResult> {
    run_sweep(template, SweepKind::Tangle, grid(points, 1.0)?, |tau| {
        Ok((SchmidtParams::new(zeta_for_tangle(tau), 0.0, 0.0)?, omega))
    })
}

/// Tangle sweep at fixed ω with the state optimized per point.
pub fn sweep_tangle_fixed_angle(template: &ExperimentConfig, omega: f64, points: usize) -> Result<SweepResult> {
    run_sweep(template, SweepKind::Tangle, grid(points, 1.0)?, |tau| {
        let zeta = zeta_for_tangle(tau);
        let m = minimize_state(zeta, omega)?;
        Ok((SchmidtParams::new(zeta, m.theta_star, m.phi_star)?, omega))
    })
}

/// ω uniform on `[0, π/4]` at fixed tangle with the state optimized per point.
pub fn sweep_omega(template: &ExperimentConfig, tangle: f64, points: usize) -> Result<SweepResult> {
    check_range("tangle", tangle, 0.0, 1.0, "[0, 1]")?;
    let zeta = zeta_for_tangle(tangle);
    run_sweep(template, SweepKind::Omega, grid(points, FRAC_PI_4)?, |omega| {
        let m = minimize_state(zeta, omega)?;
        Ok((SchmidtParams::new(zeta, m.theta_star, m.phi_star)?, omega))
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdScan {
    pub estimator: Estimator,
    /// Smallest tangle at which the witness fires; `None` if it never does.
    pub tau_star: Option<f64>,
    /// Spread of the threshold over independently sampled runs.
    pub error: f64,
    /// Thresholds from each sampled run (runs that never fire are omitted).
    pub sampled: Vec<f64>,
    pub runs: usize,
    pub fidelity: f64,
}

/// Bisection for the verdict flip of `lhs(τ) < log₂(1/c)` on `[0, 1]`.
fn bisect_threshold(lhs: impl Fn(f64) -> Result<f64>, bound: f64) -> Result<Option<f64>> {
    let fires = |tau: f64| -> Result<bool> {
        Ok(crate::uncertainty::witness(lhs(tau)?, bound) == Verdict::Entangled)
    };
    if !fires(1.0)? {
        return Ok(None);
    }
    if fires(0.0)? {
        return Ok(Some(0.0));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if fires(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

fn config_at(template: &ExperimentConfig, tau: f64) -> ExperimentConfig {
    ExperimentConfig {
        entanglement: Entanglement::Tangle(tau),
        theta: 0.0,
        phi: 0.0,
        ..template.clone()
    }
}

/// Witness threshold in τ for conjugate observables on the aligned state.
///
/// `tau_star` comes from exact statistics. The error is the standard
/// deviation of thresholds found with sampled counts over `runs` seeds
/// (common random numbers across τ within a run).
pub fn witness_threshold_scan(template: &ExperimentConfig, estimator: Estimator, runs: usize) -> Result<ThresholdScan> {
    let template = ExperimentConfig {
        omega: FRAC_PI_4,
        ..template.clone()
    };
    template.validate()?;
    let bound = 1.0;
    let exact = ExperimentConfig {
        exact_counts: true,
        ..template.clone()
    };
    let tau_star = bisect_threshold(|tau| Ok(run_game(&config_at(&exact, tau))?.report.lhs(estimator)), bound)?;
    let sampled_cfg = ExperimentConfig {
        exact_counts: false,
        ..template.clone()
    };
    let sampled = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let seed = mix_seed(template.seed, i + 1);
            bisect_threshold(
                |tau| {
                    let cfg = ExperimentConfig {
                        seed,
                        ..config_at(&sampled_cfg, tau)
                    };
                    match estimator {
                        Estimator::Tomographic => sampled_tomographic_lhs(&cfg, seed),
                        _ => Ok(run_game(&cfg)?.report.lhs(estimator)),
                    }
                },
                bound,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let sampled: Vec<f64> = sampled.into_iter().flatten().collect();
    Ok(ThresholdScan {
        estimator,
        tau_star,
        error: std_dev(&sampled),
        sampled,
        runs,
        fidelity: template.fidelity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::binary_entropy;
    use crate::optimize::closed_form_terms;
    use crate::uncertainty::evaluate_berta;

    fn exact(fidelity: f64) -> ExperimentConfig {
        ExperimentConfig {
            fidelity,
            exact_counts: true,
            ..Default::default()
        }
    }

    fn h2(p: f64) -> f64 {
        binary_entropy(p).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = [
            ExperimentConfig { fidelity: 0.2, ..Default::default() },
            ExperimentConfig { fidelity: 1.01, ..Default::default() },
            ExperimentConfig { entanglement: Entanglement::Tangle(1.5), ..Default::default() },
            ExperimentConfig { shots: 1, ..Default::default() },
            ExperimentConfig { bootstrap_resamples: 10, ..Default::default() },
            ExperimentConfig { omega: f64::NAN, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        let c = ExperimentConfig { fidelity: 0.97, ..Default::default() };
        assert!((c.noise().unwrap().mixing - 0.96).abs() < 1e-12);
    }

    #[test]
    fn bell_game_is_perfectly_correlated() {
        let cfg = ExperimentConfig { fidelity: 1.0, ..Default::default() };
        let rec = run_game(&cfg).unwrap();
        assert_eq!(rec.q_r, 0.0);
        assert_eq!(rec.q_s, 0.0);
        assert!(rec.report.lhs_measurement.abs() < 1e-12);
        assert_eq!(rec.rounds_r() + rec.rounds_s(), cfg.shots as f64);
        assert!((rec.rounds_r() - 10_000.0).abs() < 5.0 * 70.8);
    }

    #[test]
    fn product_state_game() {
        let cfg = ExperimentConfig {
            entanglement: Entanglement::Tangle(0.0),
            fidelity: 1.0,
            ..Default::default()
        };
        let rec = run_game(&cfg).unwrap();
        let errs = bootstrap_errors(&rec, 200, 1).unwrap();
        assert!((rec.report.lhs_measurement - 1.0).abs() <= 3.0 * errs.lhs_measurement.max(1e-3));
    }

    #[test]
    fn noisy_bell_game_matches_exact_statistics() {
        let sampled = run_game(&ExperimentConfig { fidelity: 0.97, ..Default::default() }).unwrap();
        let expected = run_game(&exact(0.97)).unwrap();
        let errs = bootstrap_errors(&sampled, 200, 2).unwrap();
        let d_meas = (sampled.report.lhs_measurement - expected.report.lhs_measurement).abs();
        let d_fano = (sampled.report.lhs_fano - expected.report.lhs_fano).abs();
        assert!(d_meas <= 3.0 * errs.lhs_measurement, "{d_meas} vs {}", errs.lhs_measurement);
        assert!(d_fano <= 3.0 * errs.lhs_fano);
        // Werner state: both mismatch rates are (1 - p) / 2.
        assert!((expected.q_r - 0.02).abs() < 1e-12 && (expected.q_s - 0.02).abs() < 1e-12);
        assert!((expected.report.lhs_fano - 2.0 * h2(0.02)).abs() < 1e-12);
    }

    #[test]
    fn exact_game_equals_direct_evaluation() {
        let cfg = ExperimentConfig {
            entanglement: Entanglement::Tangle(0.47),
            omega: 0.4,
            theta: 0.3,
            ..exact(0.97)
        };
        let rec = run_game(&cfg).unwrap();
        let direct = evaluate_berta(&cfg.state().unwrap(), &cfg.r_basis(), &cfg.s_basis(), &cfg.r_basis(), &cfg.s_basis()).unwrap();
        for est in Estimator::ALL {
            assert!((rec.report.lhs(est) - direct.lhs(est)).abs() < 1e-12);
        }
        assert!((rec.report.rhs_raw - direct.rhs_raw).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_behaviour() {
        let rec = run_game(&exact(0.97)).unwrap();
        let e = bootstrap_errors(&rec, 100, 0).unwrap();
        assert_eq!(e.lhs_measurement, 0.0);
        assert!(bootstrap_errors(&rec, 99, 0).is_err());
        let big = run_game(&ExperimentConfig { shots: 1_000_000, fidelity: 1.0, ..Default::default() }).unwrap();
        let e = bootstrap_errors(&big, 100, 0).unwrap();
        assert!(e.lhs_measurement <= 1e-3);
    }

    #[test]
    fn bootstrap_errors_scale_as_inverse_root_n() {
        let errs: Vec<f64> = [1_000u64, 10_000, 100_000]
            .iter()
            .map(|&n| {
                let rec = run_game(&ExperimentConfig { shots: n, seed: 5, ..Default::default() }).unwrap();
                bootstrap_errors(&rec, 400, 6).unwrap().lhs_measurement
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio / 10f64.sqrt() - 1.0).abs() < 0.3, "{errs:?}");
        }
    }

    #[test]
    fn same_seed_same_game() {
        let cfg = ExperimentConfig { seed: 9, ..Default::default() };
        assert_eq!(run_game(&cfg).unwrap().counts_r, run_game(&cfg).unwrap().counts_r);
        let other = ExperimentConfig { seed: 10, ..Default::default() };
        assert_ne!(run_game(&cfg).unwrap().counts_r, run_game(&other).unwrap().counts_r);
    }

    #[test]
    fn tangle_sweep_theory_curves() {
        let sweep = sweep_tangle(&exact(1.0), FRAC_PI_4, 41).unwrap();
        assert_eq!(sweep.rows.len(), 41);
        sweep.check_invariants().unwrap();
        for row in &sweep.rows {
            let zeta = zeta_for_tangle(row.x);
            let expected = 1.0 - h2(zeta.cos().powi(2));
            assert!((row.report.lhs_tomographic - expected).abs() < 1e-9);
            assert!((row.report.rhs_raw - expected).abs() < 1e-9);
            let meas = h2((1.0 - row.x.sqrt()) / 2.0);
            assert!((row.report.lhs_measurement - meas).abs() < 1e-9);
            assert!((row.mu_bound - 1.0).abs() < 1e-12);
        }
        let last = sweep.rows.last().unwrap();
        assert!(last.report.lhs_tomographic.abs() < 1e-9 && last.report.rhs_raw.abs() < 1e-9);
        let first = &sweep.rows[0];
        assert!((first.report.lhs_tomographic - 1.0).abs() < 1e-9);
        assert_eq!(first.report.witness_verdict, Verdict::Inconclusive);
        assert_eq!(last.report.witness_verdict, Verdict::Entangled);
    }

    #[test]
    fn fixed_angle_sweep_is_not_tight() {
        let omega = 32.5f64.to_radians();
        let sweep = sweep_tangle_fixed_angle(&exact(1.0), omega, 41).unwrap();
        sweep.check_invariants().unwrap();
        let c = omega.cos().powi(2);
        let first = &sweep.rows[0];
        assert!((first.report.rhs_raw + c.log2()).abs() < 1e-12);
        assert!((first.report.rhs_raw - 0.4915).abs() < 1e-4);
        assert!(first.report.lhs_tomographic > first.report.rhs_raw + 0.1);
        let last = sweep.rows.last().unwrap();
        assert!(last.report.lhs_tomographic.abs() < 1e-9);
        assert!((last.report.rhs_raw - (-c.log2() - 1.0)).abs() < 1e-9);
        assert_eq!(last.report.rhs_effective, 0.0);
        assert!(sweep.min_gap(0.05, 0.95).unwrap() > 1e-6);
        for row in &sweep.rows {
            let t = closed_form_terms(&SchmidtParams::new(zeta_for_tangle(row.x), row.theta, row.phi).unwrap(), omega);
            assert!((t.lhs() - row.report.lhs_tomographic).abs() < 1e-9);
        }
    }

    #[test]
    fn omega_sweep_endpoints() {
        let sweep = sweep_omega(&exact(1.0), 0.47, 46).unwrap();
        assert_eq!(sweep.rows.len(), 46);
        sweep.check_invariants().unwrap();
        let first = &sweep.rows[0];
        assert!(first.report.log_inv_c.abs() < 1e-15);
        assert!(first.report.rhs_raw < 0.0 && first.report.rhs_effective == 0.0);
        let zeta = zeta_for_tangle(0.47);
        let t = closed_form_terms(&SchmidtParams::new(zeta, first.theta, first.phi).unwrap(), 0.0);
        assert!((first.report.lhs_tomographic - 2.0 * t.h_s_given_b).abs() < 1e-9);
        let last = sweep.rows.last().unwrap();
        let single = sweep_tangle(&exact(1.0), FRAC_PI_4, 101).unwrap();
        let row47 = &single.rows[47];
        assert!((row47.x - 0.47).abs() < 1e-12);
        assert!((last.report.lhs_tomographic - row47.report.lhs_tomographic).abs() < 1e-9);
        assert!((last.report.lhs_measurement - row47.report.lhs_measurement).abs() < 1e-9);
        assert!((last.x - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn exact_sweeps_ignore_seed() {
        let a = sweep_tangle(&ExperimentConfig { seed: 1, ..exact(0.97) }, FRAC_PI_4, 5).unwrap();
        let b = sweep_tangle(&ExperimentConfig { seed: 2, ..exact(0.97) }, FRAC_PI_4, 5).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
    }

    #[test]
    fn sampled_sweep_invariants_and_determinism() {
        let cfg = ExperimentConfig { seed: 4, fidelity: 0.97, ..Default::default() };
        let a = sweep_tangle(&cfg, FRAC_PI_4, 5).unwrap();
        a.check_invariants().unwrap();
        assert!(a.rows.iter().all(|r| r.err_meas > 0.0 && r.err_tomo > 0.0));
        let b = sweep_tangle(&cfg, FRAC_PI_4, 5).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
    }

    #[test]
    fn sweep_csv_format() {
        let sweep = sweep_tangle(&exact(1.0), FRAC_PI_4, 2).unwrap();
        let text = sweep.to_csv_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], SWEEP_CSV_HEADER);
        assert_eq!(
            lines[2],
            "1.000000000,0.000000000,0.000000000,0.000000000,0.000000000,0.000000000,1.000000000,entangled,0.000000000,0.000000000,0.000000000"
        );
        assert!(!text.contains('\r'));
        assert!(sweep_tangle(&exact(1.0), FRAC_PI_4, 1).is_err());
    }

    #[test]
    fn ideal_tomographic_threshold_is_zero() {
        let scan = witness_threshold_scan(&exact(1.0), Estimator::Tomographic, 0).unwrap();
        assert!(scan.tau_star.unwrap() < 1e-9);
    }

    #[test]
    fn no_threshold_when_noise_dominates() {
        let scan = witness_threshold_scan(&exact(0.4), Estimator::Fano, 0).unwrap();
        assert_eq!(scan.tau_star, None);
    }
}
