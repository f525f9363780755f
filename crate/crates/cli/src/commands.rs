use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use lcflow::flow::{random_initial, run_flow, DiagnosticsRecord, RandomInit, TrajectoryLog};
use lcflow::lightcone::ConformalFactor;
use lcflow::spectral::{build_grid, harmonic, ScalarField, SphereGrid};
use lcflow::steady::{boost_cross_section, fit_constant_curvature, mobius_omega, BoostSpec, SteadyStateParams};
use lcflow::verify::{
    check_codazzi, check_evolution, check_gradient_estimate, check_gradient_inequality, check_monotonicity_decay,
    check_simons, check_variation, linear_fit, ResidualReport,
};
use log::{info, warn};

use crate::config::{Check, InitialKind, RunConfig};
use crate::formats::{
    read_snapshot, snapshot_name, write_diagnostics_csv, write_report, write_snapshot, FitSummary, Report,
    SnapshotFile,
};
use crate::CliError;

pub fn grid_for(cfg: &RunConfig) -> Result<Arc<SphereGrid<f64>>, CliError> {
    Ok(build_grid(cfg.grid.l, cfg.grid.oversample)?)
}

/// The configured seed; without one, zero in deterministic mode and the
/// clock otherwise. The choice is written back so that reports record it.
pub fn resolve_seed(cfg: &mut RunConfig) -> u64 {
    let seed = cfg.seed.unwrap_or_else(|| {
        if cfg.output.deterministic {
            0
        } else {
            SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64)
        }
    });
    cfg.seed = Some(seed);
    cfg.flow.seed = Some(seed);
    seed
}

fn field_from_snapshot(path: &Path, grid: &Arc<SphereGrid<f64>>) -> Result<(f64, ConformalFactor<f64>), CliError> {
    let s = read_snapshot(path)?;
    if (s.n_theta, s.n_phi) != (grid.n_theta(), grid.n_phi()) {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            msg: format!(
                "snapshot grid is {}×{} but grid.L = {} (oversample {}) gives {}×{}",
                s.n_theta,
                s.n_phi,
                grid.bandlimit(),
                grid.oversample(),
                grid.n_theta(),
                grid.n_phi()
            ),
        });
    }
    let omega = ConformalFactor::new(ScalarField::new(Arc::clone(grid), s.values)?)?;
    Ok((s.t, omega))
}

pub fn initial_omega(cfg: &RunConfig, grid: &Arc<SphereGrid<f64>>, seed: u64) -> Result<ConformalFactor<f64>, CliError> {
    let i = &cfg.initial;
    Ok(match i.kind {
        InitialKind::Round => ConformalFactor::constant(grid, i.c)?,
        InitialKind::Mobius => mobius_omega(&SteadyStateParams::new(i.c, i.a)?, grid)?,
        InitialKind::Random => {
            let spec = RandomInit {
                c: i.c,
                l0: i.l0,
                amplitude: i.amplitude,
                ..RandomInit::default()
            };
            random_initial(grid, &spec, seed)?
        }
        InitialKind::File => {
            let path = i.file.as_deref().expect("validated");
            field_from_snapshot(path, grid)?.1
        }
    })
}

fn fit_summary(omega: &ConformalFactor<f64>) -> Result<FitSummary, CliError> {
    let (p, residual) = fit_constant_curvature(omega)?;
    Ok(FitSummary {
        c: p.c,
        a: p.a,
        residual,
    })
}

fn pointwise_checks(cfg: &RunConfig, omega: &ConformalFactor<f64>, report: &mut Report) {
    let tol = &cfg.verify.tolerances;
    let (l, m) = cfg.verify.probe;
    for &check in cfg.verify.checks.iter().filter(|c| !c.needs_trajectory()) {
        let r = match check {
            Check::Codazzi => check_codazzi(omega, tol),
            Check::Simons => check_simons(omega, tol),
            Check::GradientInequality => check_gradient_inequality(omega, tol),
            Check::Variation => {
                let phi = harmonic(omega.grid(), l, m);
                check_variation(omega, &phi, cfg.verify.epsilon, tol)
            }
            _ => unreachable!("filtered"),
        };
        push(report, check, r);
    }
}

fn trajectory_checks(cfg: &RunConfig, traj: &TrajectoryLog<f64>, report: &mut Report) {
    let tol = &cfg.verify.tolerances;
    for &check in cfg.verify.checks.iter().filter(|c| c.needs_trajectory()) {
        let r = match check {
            Check::Evolution => check_evolution(traj, tol),
            Check::Monotonicity => check_monotonicity_decay(traj, &cfg.flow.sigmas, tol),
            Check::GradientEstimate => check_gradient_estimate(traj, tol),
            _ => unreachable!("filtered"),
        };
        push(report, check, r);
    }
}

fn push(report: &mut Report, check: Check, r: lcflow::Result<ResidualReport>) {
    match r {
        Ok(r) => {
            info!("{}", r.summary());
            report.reports.push(r);
        }
        Err(e) => {
            warn!("{check:?} did not run: {e}");
            report.errors.insert(check_name(check), e.to_string());
        }
    }
}

fn check_name(c: Check) -> String {
    serde_json::to_value(c)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_else(|| format!("{c:?}"))
}

/// Log-linear fits over the last two thirds of the run.
pub fn decay_slopes(records: &[DiagnosticsRecord<f64>]) -> std::collections::BTreeMap<String, f64> {
    let mut out = std::collections::BTreeMap::new();
    let Some(last) = records.last() else {
        return out;
    };
    let tail: Vec<_> = records.iter().filter(|r| r.t >= last.t / 3.0).collect();
    type Getter = fn(&DiagnosticsRecord<f64>) -> f64;
    let quantities: [(&str, Getter); 3] = [
        ("a_ring_sq_max", |r| r.a_ring_sq_max),
        ("grad_h2_sq_max", |r| r.grad_h2_sq_max),
        ("h2_oscillation", |r| r.h2_oscillation()),
    ];
    for (name, get) in quantities {
        let (x, y): (Vec<f64>, Vec<f64>) = tail
            .iter()
            .map(|r| (r.t, get(r)))
            .filter(|&(_, v)| v > 0.0)
            .map(|(t, v)| (t, v.ln()))
            .unzip();
        if x.len() >= 3 {
            let (slope, r2) = linear_fit(&x, &y);
            out.insert(format!("{name}_slope"), slope);
            out.insert(format!("{name}_r2"), r2);
        }
    }
    out
}

fn prepare_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    let dir = cfg.output.directory.as_path();
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(dir)
}

pub fn run(mut cfg: RunConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let seed = resolve_seed(&mut cfg);
    let grid = grid_for(&cfg)?;
    let omega0 = initial_omega(&cfg, &grid, seed)?;
    let traj = run_flow(&omega0, &cfg.flow).map_err(|e| CliError::Flow(e.to_string()))?;
    let dir = prepare_dir(&cfg)?;

    let mut report = Report::new("run", &cfg);
    if cfg.output.csv {
        write_diagnostics_csv(&dir.join("diagnostics.csv"), &traj.records, &cfg.flow.sigmas)?;
    }
    for s in traj.snapshots.iter().step_by(cfg.output.snapshot_stride) {
        let name = snapshot_name(s.index);
        let file = SnapshotFile {
            n_theta: grid.n_theta(),
            n_phi: grid.n_phi(),
            t: s.t,
            values: s.omega.values().to_vec(),
        };
        write_snapshot(&dir.join(&name), &file)?;
        report.snapshots.push(name);
    }
    match fit_summary(&traj.final_state.omega) {
        Ok(f) => report.fit = Some(f),
        Err(e) => {
            report.errors.insert("fit".into(), e.to_string());
        }
    }
    report.slopes = decay_slopes(&traj.records);
    pointwise_checks(&cfg, &omega0, &mut report);
    trajectory_checks(&cfg, &traj, &mut report);
    report.meta = Some(traj.meta.clone());
    report.final_record = Some(traj.last().clone());
    if !cfg.output.deterministic {
        report.wall_seconds = Some(start.elapsed().as_secs_f64());
    }
    write_report(dir, &report)?;
    Ok(report)
}

pub fn verify(mut cfg: RunConfig) -> Result<Report, CliError> {
    let seed = resolve_seed(&mut cfg);
    let grid = grid_for(&cfg)?;
    let omega = initial_omega(&cfg, &grid, seed)?;
    let mut report = Report::new("verify", &cfg);
    pointwise_checks(&cfg, &omega, &mut report);
    for &c in cfg.verify.checks.iter().filter(|c| c.needs_trajectory()) {
        report
            .errors
            .insert(check_name(c), "needs a trajectory; list it under `run`".into());
    }
    write_report(prepare_dir(&cfg)?, &report)?;
    Ok(report)
}

/// Writes the family member `(initial.c, initial.a)`, optionally boosted,
/// as `omega_0000.f64` together with its fit.
pub fn steady(cfg: RunConfig, boost: Option<BoostSpec<f64>>) -> Result<Report, CliError> {
    let grid = grid_for(&cfg)?;
    let p = SteadyStateParams::new(cfg.initial.c, cfg.initial.a)?;
    let mut omega = mobius_omega(&p, &grid)?;
    if let Some(b) = boost {
        omega = boost_cross_section(&omega, &b)?;
    }
    let dir = prepare_dir(&cfg)?;
    let name = snapshot_name(0);
    write_snapshot(
        &dir.join(&name),
        &SnapshotFile {
            n_theta: grid.n_theta(),
            n_phi: grid.n_phi(),
            t: 0.0,
            values: omega.field().values().to_vec(),
        },
    )?;
    let mut report = Report::new("steady", &cfg);
    report.snapshots.push(name);
    report.fit = Some(fit_summary(&omega)?);
    write_report(dir, &report)?;
    Ok(report)
}

pub fn fit(cfg: &RunConfig, snapshot: &Path) -> Result<FitSummary, CliError> {
    let grid = grid_for(cfg)?;
    let (_, omega) = field_from_snapshot(snapshot, &grid)?;
    fit_summary(&omega)
}

/// Human-readable digest of an output directory.
pub fn report(dir: &Path) -> Result<String, CliError> {
    let mut out = String::new();
    let json_path = dir.join("report.json");
    let text = fs::read_to_string(&json_path).map_err(|source| CliError::Io {
        path: json_path.clone(),
        source,
    })?;
    let json: serde_json::Value = serde_json::from_str(&text)?;
    let _ = writeln!(out, "command: {}", json["command"].as_str().unwrap_or("?"));
    if let Some(meta) = json.get("meta") {
        let _ = writeln!(
            out,
            "grid: L = {}, {}×{}; steps {} accepted, {} rejected; stop: {}",
            meta["bandlimit"], meta["n_theta"], meta["n_phi"], meta["accepted_steps"], meta["rejected_steps"], meta["stop_reason"]
        );
    }
    let csv_path = dir.join("diagnostics.csv");
    if csv_path.exists() {
        let table = crate::formats::read_diagnostics_csv(&csv_path)?;
        let col = |name: &str| table.column(name).unwrap_or_default();
        let (t, vol) = (col("t"), col("vol"));
        if let (Some(Some(t0)), Some(Some(t1))) = (t.first(), t.last()) {
            let _ = writeln!(out, "records: {} over t ∈ [{t0}, {t1}]", table.rows.len());
        }
        if let (Some(Some(v0)), Some(Some(v1))) = (vol.first(), vol.last()) {
            let _ = writeln!(out, "volume: {v0} → {v1}");
        }
        if let (Some(Some(lo)), Some(Some(hi))) = (col("h2_min").last(), col("h2_max").last()) {
            let _ = writeln!(out, "final H²: [{lo}, {hi}]");
        }
    }
    if let Some(fit) = json.get("fit") {
        let _ = writeln!(out, "fit: c = {}, a = {}, residual = {}", fit["c"], fit["a"], fit["residual"]);
    }
    if let Some(s) = json["slopes"].as_object() {
        for (k, v) in s {
            let _ = writeln!(out, "{k}: {v}");
        }
    }
    if let Some(reports) = json["reports"].as_array() {
        for r in reports {
            let verdict = if r["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{verdict} {}: {}", r["name"].as_str().unwrap_or("?"), r["max_residual"]);
        }
    }
    if let Some(errs) = json["errors"].as_object() {
        for (k, v) in errs {
            let _ = writeln!(out, "not run {k}: {}", v.as_str().unwrap_or("?"));
        }
    }
    Ok(out)
}
