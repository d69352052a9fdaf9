//! `eur`: sweeps, tomography, witness scans and single games from the shell.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 invalid flags,
//! 3 an invariant check failed on the computed results.

mod args;

use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Map, Value};

use eur_core::fixed9;
use eur_core::gamesim::{
    bootstrap_errors, run_game, sweep_omega, sweep_tangle, sweep_tangle_fixed_angle,
    witness_threshold_scan, Entanglement, ExperimentConfig, SweepResult,
};
use eur_core::states::{fidelity, tangle};
use eur_core::tomography::{mle_reconstruct, overcomplete_settings, simulate_counts, CountMode, CountsTable};
use eur_core::uncertainty::Estimator;

use args::{angle, Cli, Command, Common, Format, GameArgs, StateArgs, SweepOmegaArgs, SweepTangleArgs, TomoArgs, WitnessArgs};

const SCHEMA: u32 = 1;
const DEFAULT_OMEGA_SWEEP_TANGLE: f64 = 0.47;

enum Failure {
    Usage(String),
    Runtime(String),
    Invariant(String),
}

impl From<eur_core::Error> for Failure {
    fn from(e: eur_core::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn num(x: f64) -> Value {
    Value::Number(fixed9(x).parse().expect("finite decimal"))
}

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(e.to_string())),
    }
}

fn fix_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_u64() || n.is_i64()) => {
            if let Some(x) = n.as_f64() {
                *v = num(x);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(fix_numbers),
        Value::Object(map) => map.values_mut().for_each(fix_numbers),
        _ => {}
    }
}

fn emit_json(out: Option<&Path>, value: &Value) -> CmdResult {
    let mut value = value.clone();
    fix_numbers(&mut value);
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| Failure::Runtime(e.to_string()))?;
    text.push('\n');
    emit(out, &text)
}

fn with_schema(value: Value) -> Value {
    let mut map = Map::new();
    map.insert("schema".into(), json!(SCHEMA));
    if let Value::Object(inner) = value {
        map.extend(inner);
    }
    Value::Object(map)
}

fn base_config(c: &Common) -> Result<ExperimentConfig, Failure> {
    let cfg = ExperimentConfig {
        fidelity: c.fidelity,
        shots: c.shots,
        seed: c.seed,
        exact_counts: c.exact,
        bootstrap_resamples: c.bootstrap,
        ..Default::default()
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn with_state(mut cfg: ExperimentConfig, s: &StateArgs) -> Result<ExperimentConfig, Failure> {
    cfg.entanglement = match (s.tangle, s.zeta, s.zeta_deg) {
        (Some(t), _, _) => Entanglement::Tangle(t),
        (None, z, zd) if z.is_some() || zd.is_some() => Entanglement::Zeta(angle(z, zd, 0.0)),
        _ => Entanglement::Tangle(1.0),
    };
    cfg.theta = angle(s.theta, s.theta_deg, 0.0);
    cfg.phi = angle(s.phi, s.phi_deg, 0.0);
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn check_points(points: usize) -> CmdResult {
    if points < 2 {
        return Err(Failure::Usage("--points must be at least 2".into()));
    }
    Ok(())
}

fn write_sweep(sweep: &SweepResult, common: &Common) -> CmdResult {
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(common.out.as_deref(), &sweep.to_csv_string())?,
        Format::Json => {
            let mut v = with_schema(serde_json::to_value(sweep).map_err(|e| Failure::Runtime(e.to_string()))?);
            v["fidelity"] = num(common.fidelity);
            emit_json(common.out.as_deref(), &v)?
        }
    }
    sweep.check_invariants().map_err(|e| Failure::Invariant(e.to_string()))
}

fn witness_summary(sweep: &SweepResult) -> String {
    match sweep.witness_range() {
        Some((a, b)) => format!("witness entangled for x in [{}, {}]", fixed9(a), fixed9(b)),
        None => "witness never entangled".into(),
    }
}

fn cmd_sweep_tangle(a: SweepTangleArgs) -> CmdResult {
    let cfg = base_config(&a.common)?;
    check_points(a.points)?;
    let omega = angle(a.omega.omega, a.omega.omega_deg, FRAC_PI_4);
    let sweep = sweep_tangle(&cfg, omega, a.points)?;
    write_sweep(&sweep, &a.common)?;
    eprintln!("sweep-tangle: {} points, {}", sweep.rows.len(), witness_summary(&sweep));
    Ok(())
}

fn cmd_sweep_omega(a: SweepOmegaArgs) -> CmdResult {
    let cfg = base_config(&a.common)?;
    if let Some(deg) = a.fixed_omega_deg {
        if !(0.0..=90.0).contains(&deg) {
            return Err(Failure::Usage("--fixed-omega-deg must be in [0, 90]".into()));
        }
        let points = a.points.unwrap_or(41);
        check_points(points)?;
        let sweep = sweep_tangle_fixed_angle(&cfg, deg.to_radians(), points)?;
        write_sweep(&sweep, &a.common)?;
        let gap = sweep.min_gap(0.05, 0.95);
        let tightness = match gap {
            Some(g) if g > 1e-6 => format!("bound not tight (min gap {} on tangle in (0.05, 0.95))", fixed9(g)),
            Some(g) => format!("bound tight somewhere (min gap {})", fixed9(g)),
            None => "no interior points".into(),
        };
        eprintln!("sweep-omega: omega fixed at {deg} deg, {} points, {}, {}", sweep.rows.len(), tightness, witness_summary(&sweep));
        return Ok(());
    }
    let tau = a.tangle.unwrap_or(DEFAULT_OMEGA_SWEEP_TANGLE);
    if !(0.0..=1.0).contains(&tau) {
        return Err(Failure::Usage("--tangle must be in [0, 1]".into()));
    }
    let points = a.points.unwrap_or(46);
    check_points(points)?;
    let sweep = sweep_omega(&cfg, tau, points)?;
    write_sweep(&sweep, &a.common)?;
    eprintln!("sweep-omega: tangle {tau}, {} points, {}", sweep.rows.len(), witness_summary(&sweep));
    Ok(())
}

fn cmd_tomo(a: TomoArgs) -> CmdResult {
    if a.common.format == Some(Format::Csv) {
        return Err(Failure::Usage("tomo writes JSON; use --counts-out for the counts CSV".into()));
    }
    let cfg = with_state(base_config(&a.common)?, &a.state)?;
    let (table, source) = match &a.counts_in {
        Some(path) => {
            let t = CountsTable::load(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            (t, None)
        }
        None => {
            let mode = if a.common.exact {
                CountMode::Exact
            } else if a.poisson {
                CountMode::Poisson
            } else {
                CountMode::Multinomial
            };
            let state = cfg.state()?;
            (simulate_counts(&state, &overcomplete_settings(), cfg.shots, cfg.seed, mode)?, Some(state))
        }
    };
    if let Some(path) = &a.counts_out {
        table
            .save(path)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    let fit = mle_reconstruct(&table)?;
    let tau = tangle(&fit.rho_hat)?;
    let fid = source.as_ref().map(|s| fidelity(&fit.rho_hat, s)).transpose()?;
    let mut v = with_schema(serde_json::to_value(&fit).map_err(|e| Failure::Runtime(e.to_string()))?);
    v["tangle"] = num(tau);
    v["fidelity_to_source"] = fid.map_or(Value::Null, num);
    v["total_counts"] = num(table.total());
    emit_json(a.common.out.as_deref(), &v)?;
    let fid_text = fid.map_or("n/a".to_string(), fixed9);
    eprintln!(
        "tomo: {} settings, iterations {}, converged {}, tangle {}, fidelity {}",
        table.rows.len(),
        fit.iterations,
        fit.converged,
        fixed9(tau),
        fid_text
    );
    if !fit.converged {
        return Err(Failure::Invariant("reconstruction did not converge".into()));
    }
    Ok(())
}

fn cmd_witness(a: WitnessArgs) -> CmdResult {
    let cfg = base_config(&a.common)?;
    let mut entries = Vec::new();
    let mut taus = Vec::new();
    for est in Estimator::ALL {
        let scan = witness_threshold_scan(&cfg, est, a.runs)?;
        taus.push(scan.tau_star);
        entries.push(json!({
            "estimator": est.name(),
            "tau_star": scan.tau_star.map_or(Value::Null, num),
            "error": num(scan.error),
            "sampled_runs": scan.sampled.len(),
        }));
    }
    let ordered = match taus.as_slice() {
        [Some(t), Some(m), Some(f)] => t < m && m < f,
        _ => false,
    };
    let report = json!({
        "schema": SCHEMA,
        "fidelity": num(cfg.fidelity),
        "shots": cfg.shots,
        "runs": a.runs,
        "thresholds": entries,
        "ordering_tomographic_lt_measurement_lt_fano": ordered,
    });
    match a.common.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(a.common.out.as_deref(), &report)?,
        Format::Csv => {
            let mut text = String::from("estimator,tau_star,error\n");
            for e in report["thresholds"].as_array().expect("array") {
                text.push_str(&format!(
                    "{},{},{}\n",
                    e["estimator"].as_str().unwrap_or_default(),
                    if e["tau_star"].is_null() { "none".to_string() } else { e["tau_star"].to_string() },
                    e["error"]
                ));
            }
            emit(a.common.out.as_deref(), &text)?
        }
    }
    let parts: Vec<String> = Estimator::ALL
        .iter()
        .zip(&taus)
        .map(|(e, t)| format!("{} {}", e.name(), t.map_or("none".into(), fixed9)))
        .collect();
    eprintln!("witness: thresholds {}; ordering {}", parts.join(", "), if ordered { "holds" } else { "violated" });
    Ok(())
}

fn cmd_game(a: GameArgs) -> CmdResult {
    let mut cfg = with_state(base_config(&a.common)?, &a.state)?;
    cfg.omega = angle(a.omega.omega, a.omega.omega_deg, FRAC_PI_4);
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let mut record = run_game(&cfg)?;
    let errs = bootstrap_errors(&record, cfg.bootstrap_resamples, cfg.seed)?;
    record.report.apply_witness(cfg.witness_rule(errs.lhs_measurement));
    match a.common.format.unwrap_or(Format::Json) {
        Format::Json => {
            let v = json!({
                "schema": SCHEMA,
                "config": serde_json::to_value(&cfg).map_err(|e| Failure::Runtime(e.to_string()))?,
                "record": serde_json::to_value(&record).map_err(|e| Failure::Runtime(e.to_string()))?,
                "errors": serde_json::to_value(errs).map_err(|e| Failure::Runtime(e.to_string()))?,
            });
            emit_json(a.common.out.as_deref(), &v)?
        }
        Format::Csv => {
            let mut text = String::from("basis,alice_outcome,bob_outcome,count\n");
            for (name, counts) in [("R", record.counts_r), ("S", record.counts_s)] {
                for (j, c) in counts.iter().enumerate() {
                    text.push_str(&format!("{name},{},{},{c}\n", j / 2, j % 2));
                }
            }
            emit(a.common.out.as_deref(), &text)?
        }
    }
    let r = &record.report;
    eprintln!(
        "game: lhs_meas {} +/- {}, lhs_fano {}, log2(1/c) {}, verdict {}",
        fixed9(r.lhs_measurement),
        fixed9(errs.lhs_measurement),
        fixed9(r.lhs_fano),
        fixed9(r.log_inv_c),
        r.witness_verdict.as_str()
    );
    let tol = 1e-9 + 3.0 * (errs.lhs_measurement + errs.lhs_fano);
    if r.berta_slack() < -1e-9 || !r.ordering_holds(tol) {
        return Err(Failure::Invariant(format!("estimator ordering or uncertainty relation: {r:?}")));
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::SweepTangle(a) => cmd_sweep_tangle(a),
        Command::SweepOmega(a) => cmd_sweep_omega(a),
        Command::Tomo(a) => cmd_tomo(a),
        Command::Witness(a) => cmd_witness(a),
        Command::Game(a) => cmd_game(a),
    }
}

fn threads(cli: &Cli) -> Option<usize> {
    match &cli.command {
        Command::SweepTangle(a) => a.common.threads,
        Command::SweepOmega(a) => a.common.threads,
        Command::Tomo(a) => a.common.threads,
        Command::Witness(a) => a.common.threads,
        Command::Game(a) => a.common.threads,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = threads(&cli) {
        if n == 0 {
            eprintln!("error: --threads must be at least 1\n\nFor more information, try '--help'.");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant violated: {msg}");
            ExitCode::from(3)
        }
    }
}
