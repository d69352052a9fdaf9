//! Simulated coincidence counts over the 36 product settings built from the
//! six Pauli eigenstates, and iterative maximum-likelihood reconstruction.
//!
//! A setting names one eigenstate per side; outcome 0 is "photon found in the
//! named state" and outcome 1 is its orthogonal complement, so each setting has
//! four joint outcomes indexed `2a + b`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{joint_distribution, post_measurement_state, Branch, ConditionalEnsemble};
use crate::error::{Error, Result};
use crate::qmath::{hermitian_eig, tensor_product, ComplexMatrix};
use crate::states::{DensityMatrix, MeasurementBasis};

pub const MLE_GAIN_TOL: f64 = 1e-10;
pub const MLE_MAX_ITERATIONS: usize = 2000;
/// Predicted probabilities are floored here inside the likelihood.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
/// Nominal coincidence rate used to express shot totals as integration time.
pub const COINCIDENCE_RATE_HZ: f64 = 15_000.0;
const MAX_DILUTIONS: usize = 60;
/// Upper limit on the step sizes of the likelihood iteration.
pub const MAX_STEP_WEIGHT: f64 = 1e6;

pub const CSV_HEADER: [&str; 4] = ["setting", "alice_outcome", "bob_outcome", "count"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Eigenstate {
    XPlus,
    XMinus,
    YPlus,
    YMinus,
    ZPlus,
    ZMinus,
}

impl Eigenstate {
    pub const ALL: [Eigenstate; 6] = [
        Eigenstate::XPlus,
        Eigenstate::XMinus,
        Eigenstate::YPlus,
        Eigenstate::YMinus,
        Eigenstate::ZPlus,
        Eigenstate::ZMinus,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Eigenstate::XPlus => "X+",
            Eigenstate::XMinus => "X-",
            Eigenstate::YPlus => "Y+",
            Eigenstate::YMinus => "Y-",
            Eigenstate::ZPlus => "Z+",
            Eigenstate::ZMinus => "Z-",
        }
    }

    /// Accepts `-` or the Unicode minus sign.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().replace('\u{2212}', "-");
        Self::ALL.into_iter().find(|e| e.label() == s)
    }

    /// Basis whose outcome 0 is this eigenstate.
    pub fn basis(&self) -> MeasurementBasis {
        let b = match self {
            Eigenstate::XPlus => MeasurementBasis::x(),
            Eigenstate::XMinus => MeasurementBasis::x().swapped(),
            Eigenstate::YPlus => MeasurementBasis::y(),
            Eigenstate::YMinus => MeasurementBasis::y().swapped(),
            Eigenstate::ZPlus => MeasurementBasis::z(),
            Eigenstate::ZMinus => MeasurementBasis::z().swapped(),
        };
        b.with_label(self.label())
    }
}

impl fmt::Display for Eigenstate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Setting {
    pub alice: Eigenstate,
    pub bob: Eigenstate,
    pub alice_basis: MeasurementBasis,
    pub bob_basis: MeasurementBasis,
    pub label: String,
}

impl Setting {
    pub fn new(alice: Eigenstate, bob: Eigenstate) -> Self {
        Self {
            alice,
            bob,
            alice_basis: alice.basis(),
            bob_basis: bob.basis(),
            label: format!("{alice},{bob}"),
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        let (a, b) = label.split_once(',')?;
        Some(Self::new(Eigenstate::parse(a)?, Eigenstate::parse(b)?))
    }

    /// `Π_a ⊗ Π_b` for joint outcome `2a + b`.
    pub fn projector(&self, outcome: usize) -> ComplexMatrix {
        tensor_product(
            &self.alice_basis.projector(outcome / 2),
            &self.bob_basis.projector(outcome % 2),
        )
        .expect("2x2 factors")
    }
}

/// All 36 ordered eigenstate pairs, Alice-major.
pub fn overcomplete_settings() -> Vec<Setting> {
    Eigenstate::ALL
        .iter()
        .flat_map(|&a| Eigenstate::ALL.iter().map(move |&b| Setting::new(a, b)))
        .collect()
}

/// Born-rule probabilities of the four joint outcomes.
pub fn outcome_probabilities(rho: &DensityMatrix, setting: &Setting) -> Result<[f64; 4]> {
    Ok(joint_distribution(rho, &setting.alice_basis, &setting.bob_basis)?.flat())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// `N·p` with no sampling.
    Exact,
    /// Multinomial draw of exactly `N` shots.
    Multinomial,
    /// Independent Poisson counts with expected total `N`.
    Poisson,
}

/// Draws outcome counts for one setting.
pub fn sample_counts(probs: &[f64], shots: u64, mode: CountMode, rng: &mut impl Rng) -> Vec<f64> {
    let n = shots as f64;
    match mode {
        CountMode::Exact => probs.iter().map(|p| n * p).collect(),
        CountMode::Poisson => probs
            .iter()
            .map(|&p| {
                let lambda = n * p;
                if lambda > 0.0 {
                    Poisson::new(lambda).expect("positive rate").sample(rng)
                } else {
                    0.0
                }
            })
            .collect(),
        CountMode::Multinomial => {
            let mut out = vec![0.0; probs.len()];
            let mut remaining = shots;
            let mut rest: f64 = probs.iter().sum();
            for (k, &p) in probs.iter().enumerate() {
                if remaining == 0 {
                    break;
                }
                if k + 1 == probs.len() {
                    out[k] = remaining as f64;
                    break;
                }
                let q = if rest > 0.0 { (p / rest).clamp(0.0, 1.0) } else { 0.0 };
                let c = Binomial::new(remaining, q).expect("q in [0, 1]").sample(rng);
                out[k] = c as f64;
                remaining -= c;
                rest -= p;
            }
            out
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountsRow {
    pub setting: Setting,
    /// Indexed by joint outcome `2a + b`.
    pub counts: [f64; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountsTable {
    pub rows: Vec<CountsRow>,
    /// Seconds at the nominal coincidence rate.
    pub integration_time: f64,
}

impl CountsTable {
    pub fn new(rows: Vec<CountsRow>) -> Result<Self> {
        for row in &rows {
            if row.counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(Error::InvalidDistribution(format!(
                    "setting {} has counts {:?}",
                    row.setting.label, row.counts
                )));
            }
        }
        let total: f64 = rows.iter().flat_map(|r| r.counts).sum();
        Ok(Self {
            rows,
            integration_time: total / COINCIDENCE_RATE_HZ,
        })
    }

    pub fn total(&self) -> f64 {
        self.rows.iter().flat_map(|r| r.counts).sum()
    }

    pub fn row(&self, label: &str) -> Option<&CountsRow> {
        self.rows.iter().find(|r| r.setting.label == label)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let csv_err = |e: csv::Error| Error::InvalidConfig(e.to_string());
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for row in &self.rows {
            for (j, c) in row.counts.iter().enumerate() {
                let (a, b) = ((j / 2).to_string(), (j % 2).to_string());
                w.write_record([row.setting.label.as_str(), &a, &b, &c.to_string()])
                    .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }

    /// Parses the CSV format; unknown settings, bad outcomes, negative counts
    /// and duplicate cells are reported with their line number.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = r.headers().map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        if header.iter().map(str::trim).ne(CSV_HEADER) {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {}", CSV_HEADER.join(",")),
            });
        }
        let mut rows: Vec<CountsRow> = Vec::new();
        let mut seen: Vec<[bool; 4]> = Vec::new();
        for record in r.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let bad = |message: String| Error::Parse { line, message };
            if record.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", record.len())));
            }
            let label = record[0].trim();
            let setting =
                Setting::from_label(label).ok_or_else(|| bad(format!("unknown setting {label:?}")))?;
            let outcome = |s: &str| match s.trim() {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(bad(format!("outcome must be 0 or 1, found {other:?}"))),
            };
            let j = 2 * outcome(&record[1])? + outcome(&record[2])?;
            let count: f64 = record[3]
                .trim()
                .parse()
                .map_err(|_| bad(format!("invalid count {:?}", &record[3])))?;
            if !(count.is_finite() && count >= 0.0) {
                return Err(bad(format!("count must be a non-negative number, found {count}")));
            }
            let idx = match rows.iter().position(|r| r.setting.label == setting.label) {
                Some(i) => i,
                None => {
                    rows.push(CountsRow {
                        setting,
                        counts: [0.0; 4],
                    });
                    seen.push([false; 4]);
                    rows.len() - 1
                }
            };
            if seen[idx][j] {
                return Err(bad(format!("duplicate entry for {label} outcome {j}")));
            }
            seen[idx][j] = true;
            rows[idx].counts[j] = count;
        }
        Self::new(rows)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        self.write_csv(&mut file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Counts for every setting; setting `i` draws from its own generator seeded
/// with `seed ^ i`, so the table does not depend on thread scheduling.
pub fn simulate_counts(
    rho: &DensityMatrix,
    settings: &[Setting],
    shots_per_setting: u64,
    seed: u64,
    mode: CountMode,
) -> Result<CountsTable> {
    if shots_per_setting == 0 {
        return Err(Error::InvalidConfig("shots per setting must be at least 1".into()));
    }
    let rows = settings
        .par_iter()
        .enumerate()
        .map(|(i, setting)| {
            let probs = outcome_probabilities(rho, setting)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i as u64);
            let c = sample_counts(&probs, shots_per_setting, mode, &mut rng);
            Ok(CountsRow {
                setting: setting.clone(),
                counts: [c[0], c[1], c[2], c[3]],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CountsTable::new(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionResult {
    pub rho_hat: DensityMatrix,
    pub iterations: usize,
    pub final_loglik: f64,
    pub converged: bool,
    /// Some observed outcome had predicted probability below the floor.
    pub floored: bool,
    #[serde(skip)]
    pub loglik_history: Vec<f64>,
}

/// `Σ_j n_j ln p_j` and whether an observed outcome hit the floor.
fn loglik(projectors: &[ComplexMatrix], counts: &[f64], rho: &ComplexMatrix) -> (f64, bool, Vec<f64>) {
    let mut floored = false;
    let mut total = 0.0;
    let mut probs = Vec::with_capacity(projectors.len());
    for (proj, &n) in projectors.iter().zip(counts) {
        let p = rho.trace_product(proj).re;
        let pf = if p < PROBABILITY_FLOOR {
            if n > 0.0 {
                floored = true;
            }
            PROBABILITY_FLOOR
        } else {
            p
        };
        if n > 0.0 {
            total += n * pf.ln();
        }
        probs.push(pf);
    }
    (total, floored, probs)
}

fn normalized(m: &ComplexMatrix) -> ComplexMatrix {
    let h = m.hermitian_part();
    let tr = h.trace().re;
    h.scale_real(1.0 / tr)
}

/// Euclidean projection of a Hermitian matrix onto the density matrices:
/// eigenvalues are projected onto the probability simplex.
fn project_to_states(h: &ComplexMatrix) -> ComplexMatrix {
    let mut spec = hermitian_eig(&h.hermitian_part()).expect("Hermitian input");
    let mut cum = 0.0;
    let mut shift = 0.0;
    for (k, &mu) in spec.eigenvalues.iter().enumerate() {
        cum += mu;
        let t = (cum - 1.0) / (k + 1) as f64;
        if mu - t > 0.0 {
            shift = t;
        }
    }
    for mu in spec.eigenvalues.iter_mut() {
        *mu = (*mu - shift).max(0.0);
    }
    spec.reconstruct()
}

type Candidate = (ComplexMatrix, (f64, bool, Vec<f64>));

/// Backtracking search: halves `step` until `make(step)` does not lower the
/// log-likelihood below `ll`.
fn line_search(
    step: &mut f64,
    ll: f64,
    projectors: &[ComplexMatrix],
    counts: &[f64],
    make: impl Fn(f64) -> ComplexMatrix,
) -> Option<Candidate> {
    for _ in 0..MAX_DILUTIONS {
        let cand = make(*step);
        let eval = loglik(projectors, counts, &cand);
        if eval.0 >= ll {
            return Some((cand, eval));
        }
        *step *= 0.5;
    }
    None
}

/// Maximizes `Σ_j n_j ln tr(Π_j ρ)` starting from the maximally mixed state.
///
/// Each iteration forms `R = Σ_j (f_j / p_j) Π_j` and tries two ascent moves:
///
/// * the fixed-point map `ρ ← N[R_w ρ R_w]` with `R_w = (1 - w) I + w R`;
/// * a projected gradient step `ρ ← P(ρ + η R)` onto the state set.
///
/// Both step sizes are halved until the log-likelihood does not decrease and
/// doubled after each accepted iteration; the better candidate is kept. The
/// fixed-point map alone converges only like `1/k` when the optimum is rank
/// deficient (e.g. exact data from a pure state); the gradient move restores
/// linear convergence there.
pub fn mle_from_projectors(projectors: &[ComplexMatrix], counts: &[f64]) -> Result<ReconstructionResult> {
    if projectors.is_empty() || projectors.len() != counts.len() {
        return Err(Error::InvalidConfig("need one count per projector".into()));
    }
    let total: f64 = counts.iter().sum();
    if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) || !(total > 0.0) {
        return Err(Error::InvalidDistribution("counts must be non-negative with a positive total".into()));
    }
    let dim = projectors[0].rows();
    let identity = ComplexMatrix::identity(dim);
    let freqs: Vec<f64> = counts.iter().map(|c| c / total).collect();
    let mut rho = identity.scale_real(1.0 / dim as f64);
    let (mut ll, mut floored, mut probs) = loglik(projectors, counts, &rho);
    let mut history = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    let (mut w, mut eta): (f64, f64) = (1.0, 1.0);
    while iterations < MLE_MAX_ITERATIONS {
        iterations += 1;
        let mut r = ComplexMatrix::zeros(dim, dim);
        for ((proj, &f), &p) in projectors.iter().zip(&freqs).zip(&probs) {
            if f > 0.0 {
                r = &r + &proj.scale_real(f / p);
            }
        }
        let fixed_point = line_search(&mut w, ll, projectors, counts, |w| {
            let rw = &identity.scale_real(1.0 - w) + &r.scale_real(w);
            normalized(&(&(&rw * &rho) * &rw))
        });
        let gradient = line_search(&mut eta, ll, projectors, counts, |eta| {
            project_to_states(&(&rho + &r.scale_real(eta)))
        });
        let step = match (fixed_point, gradient) {
            (Some(a), Some(b)) => Some(if b.1 .0 > a.1 .0 { b } else { a }),
            (a, b) => a.or(b),
        };
        let Some((cand, (new_ll, new_floored, new_probs))) = step else {
            converged = true;
            break;
        };
        let gain = new_ll - ll;
        rho = cand;
        ll = new_ll;
        floored |= new_floored;
        probs = new_probs;
        history.push(ll);
        w = (2.0 * w).min(MAX_STEP_WEIGHT);
        eta = (2.0 * eta).min(MAX_STEP_WEIGHT);
        if gain < MLE_GAIN_TOL {
            converged = true;
            break;
        }
    }
    Ok(ReconstructionResult {
        rho_hat: DensityMatrix::renormalized(&rho),
        iterations,
        final_loglik: ll,
        converged,
        floored,
        loglik_history: history,
    })
}

pub fn mle_reconstruct(table: &CountsTable) -> Result<ReconstructionResult> {
    let mut projectors = Vec::with_capacity(4 * table.rows.len());
    let mut counts = Vec::with_capacity(4 * table.rows.len());
    for row in &table.rows {
        for (j, &c) in row.counts.iter().enumerate() {
            projectors.push(row.setting.projector(j));
            counts.push(c);
        }
    }
    mle_from_projectors(&projectors, &counts)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionalTomography {
    pub ensemble: ConditionalEnsemble,
    /// Alice outcomes that never occurred; their branches are placeholders.
    pub skipped: Vec<usize>,
    pub alice_counts: [f64; 2],
}

/// Reconstructs Bob's state for each of Alice's outcomes in `alice_basis`.
///
/// Bob measures in X, Y and Z on separate runs of `shots` pairs each; run `k`
/// uses the generator seeded with `seed ^ k`. Branch probabilities come from
/// Alice's outcome counts pooled over the three runs.
pub fn conditional_qubit_tomography(
    rho_ab: &DensityMatrix,
    alice_basis: &MeasurementBasis,
    shots: u64,
    seed: u64,
    mode: CountMode,
) -> Result<ConditionalTomography> {
    if shots == 0 {
        return Err(Error::InvalidConfig("shots must be at least 1".into()));
    }
    let bob_bases = [MeasurementBasis::x(), MeasurementBasis::y(), MeasurementBasis::z()];
    let mut runs = Vec::with_capacity(3);
    for (k, bob) in bob_bases.iter().enumerate() {
        let probs = joint_distribution(rho_ab, alice_basis, bob)?.flat();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ k as u64);
        runs.push(sample_counts(&probs, shots, mode, &mut rng));
    }
    let alice_counts = [0, 1].map(|r| runs.iter().map(|c| c[2 * r] + c[2 * r + 1]).sum::<f64>());
    let total = alice_counts[0] + alice_counts[1];
    let mut branches = Vec::with_capacity(2);
    let mut skipped = Vec::new();
    for r in 0..2 {
        if alice_counts[r] <= 0.0 {
            skipped.push(r);
            branches.push(Branch {
                outcome: r,
                probability: 0.0,
                state: DensityMatrix::maximally_mixed(2),
                negligible: true,
            });
            continue;
        }
        let mut projectors = Vec::with_capacity(6);
        let mut counts = Vec::with_capacity(6);
        for (bob, run) in bob_bases.iter().zip(&runs) {
            for b in 0..2 {
                projectors.push(bob.projector(b));
                counts.push(run[2 * r + b]);
            }
        }
        let fit = mle_from_projectors(&projectors, &counts)?;
        branches.push(Branch {
            outcome: r,
            probability: alice_counts[r] / total,
            state: fit.rho_hat,
            negligible: false,
        });
    }
    Ok(ConditionalTomography {
        ensemble: ConditionalEnsemble::new(branches)?,
        skipped,
        alice_counts,
    })
}

/// The exact conditional ensemble, for comparison with reconstructions.
pub fn true_conditional_ensemble(
    rho_ab: &DensityMatrix,
    alice_basis: &MeasurementBasis,
) -> Result<ConditionalEnsemble> {
    post_measurement_state(rho_ab, alice_basis)
}
