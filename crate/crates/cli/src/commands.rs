use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::anyhow;
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use tmla::pipeline::{max_abs_error, reconstruct, run, simulate_channel, RunOptions};
use tmla::scenario::{validate, RawScenario};
use tmla::synth::DumpSidecar;
use tmla::Scenario64;

use crate::output::Staging;
use crate::svg::spectrum_svg;

pub const SCHEMA_VERSION: u32 = 1;
/// Trials within this many degrees on every source count as successes.
const SUCCESS_TOL_DEG: f64 = 1.0;

/// Exit code 2 carries a JSON report for stderr, exit code 3 an error chain.
pub enum Failure {
    Config(serde_json::Value),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(v) => write!(f, "{v}"),
            Failure::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn config_error(kind: &str, message: impl fmt::Display) -> Failure {
    Failure::Config(json!({ "kind": kind, "message": message.to_string() }))
}

pub fn load(path: &Path) -> Outcome<RawScenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error("ConfigReadError", format!("{}: {e}", path.display())))?;
    RawScenario::from_json(&text)
        .map_err(|e| config_error("ParseError", format!("{}: {e}", path.display())))
}

pub fn checked(raw: &RawScenario) -> Outcome<Scenario64> {
    validate(raw)
        .map_err(|e| Failure::Config(json!({ "kind": "ValidationFailed", "violations": e.0 })))
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[derive(Serialize)]
struct PeakOut {
    angle_deg: f64,
    p_db: f64,
}

#[derive(Serialize)]
struct ColumnError {
    window_index: usize,
    order: u32,
    relative_l2: f64,
}

#[derive(Serialize)]
struct RunResult<'a> {
    schema_version: u32,
    scenario: &'a RawScenario,
    seed: u64,
    noiseless: bool,
    source_count: usize,
    estimated_angles_deg: Vec<f64>,
    true_angles_deg: Vec<f64>,
    max_abs_error_deg: Option<f64>,
    peaks: Vec<PeakOut>,
    snapshot_errors: Vec<ColumnError>,
    covariance_eigenvalues: Vec<f64>,
    files: Vec<String>,
    wall_clock_seconds: f64,
}

pub struct SimulateArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub noiseless: bool,
    pub dump_signals: bool,
}

pub fn simulate(args: &SimulateArgs) -> Outcome<()> {
    let raw = load(&args.config)?;
    let scenario = checked(&raw)?;
    let started = Instant::now();
    let options = RunOptions {
        seed: args.seed,
        noiseless: args.noiseless,
        ..RunOptions::default()
    };
    let out = run(&scenario, &options)?;
    let estimates = out.estimates();
    if estimates.len() != scenario.source_count() {
        return Err(anyhow!(
            "spectrum has {} peaks for {} sources",
            estimates.len(),
            scenario.source_count()
        )
        .into());
    }
    let truth = scenario.true_angles_deg();
    info!("estimated {estimates:?}, truth {truth:?}");

    let mut stage = Staging::new(&args.out)?;
    stage.write_with("spectrum.csv", |w| out.spectrum.write_csv(w))?;
    stage.write_with("snapshots.csv", |w| {
        out.reconstruction.snapshots.write_csv(w)
    })?;
    let svg = spectrum_svg(
        &out.spectrum.grid,
        &out.spectrum.values_db(),
        &truth,
        &estimates,
    );
    stage.write_with("spectrum.svg", |w| w.write_all(svg.as_bytes()))?;
    let mut files = vec![
        "spectrum.csv".to_string(),
        "snapshots.csv".into(),
        "spectrum.svg".into(),
    ];
    if args.dump_signals {
        let channel = simulate_channel(&scenario, out.seed, args.noiseless)?;
        let mut sidecar: Option<DumpSidecar> = None;
        stage.write_with("signals.bin", |w| {
            sidecar = Some(
                channel
                    .elements
                    .write_dump(w)
                    .map_err(std::io::Error::other)?,
            );
            Ok(())
        })?;
        stage.write_json("signals.json", &sidecar)?;
        files.extend(["signals.bin".to_string(), "signals.json".into()]);
    }
    files.push("result.json".into());

    let db = out.spectrum.values_db();
    let result = RunResult {
        schema_version: SCHEMA_VERSION,
        scenario: &raw,
        seed: out.seed,
        noiseless: args.noiseless || scenario.sampling().snr_db.is_none(),
        source_count: scenario.source_count(),
        estimated_angles_deg: estimates.iter().copied().map(round2).collect(),
        true_angles_deg: truth.iter().copied().map(round2).collect(),
        max_abs_error_deg: max_abs_error(&estimates, &truth),
        peaks: out
            .spectrum
            .peaks
            .iter()
            .map(|p| PeakOut {
                angle_deg: round2(p.angle_deg),
                p_db: db[p.grid_index],
            })
            .collect(),
        snapshot_errors: out
            .reconstruction
            .snapshots
            .columns
            .iter()
            .zip(&out.reconstruction.errors)
            .map(|(c, &e)| ColumnError {
                window_index: c.window_index,
                order: c.order,
                relative_l2: e,
            })
            .collect(),
        covariance_eigenvalues: out.eigenvalues.clone(),
        files,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    stage.write_json("result.json", &result)?;
    stage.commit()?;
    println!(
        "estimated angles (deg): {}",
        result
            .estimated_angles_deg
            .iter()
            .map(|a| format!("{a:.2}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

pub struct SnapshotsArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub noiseless: bool,
}

pub fn snapshots(args: &SnapshotsArgs) -> Outcome<()> {
    let raw = load(&args.config)?;
    let scenario = checked(&raw)?;
    let seed = scenario.sampling().rng_seed;
    let channel = simulate_channel(&scenario, seed, args.noiseless)?;
    let rec = reconstruct(&scenario, &channel, Default::default())?;
    let columns = &rec.snapshots.columns;

    let mut stage = Staging::new(&args.out)?;
    stage.write_with("snapshots.csv", |w| {
        write!(
            w,
            "window_index,order_k,element_n,re,im,oracle_re,oracle_im\r\n"
        )?;
        for (c, oracle) in columns.iter().zip(&rec.oracle) {
            for (n, (z, o)) in c.values.iter().zip(oracle).enumerate() {
                write!(
                    w,
                    "{},{},{},{},{},{},{}\r\n",
                    c.window_index,
                    c.order,
                    n + 1,
                    z.re,
                    z.im,
                    o.re,
                    o.im
                )?;
            }
        }
        Ok(())
    })?;

    // Each higher order against the order-1 column of the same window.
    let cross_order = columns
        .iter()
        .filter(|c| c.order != 1)
        .filter_map(|c| {
            columns
                .iter()
                .find(|r| r.order == 1 && r.window_index == c.window_index)
                .map(|r| tmla::snapshot::relative_l2(&c.values, &r.values))
        })
        .reduce(f64::max);
    let max_error = rec.errors.iter().copied().fold(0.0, f64::max);
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "noiseless": args.noiseless || scenario.sampling().snr_db.is_none(),
        "orders": scenario.modulation().harmonic_orders,
        "window_count": channel.plan.window_count(),
        "max_relative_error": max_error,
        "max_cross_order_difference": cross_order,
        "columns": columns.iter().zip(&rec.errors).map(|(c, &e)| ColumnError {
            window_index: c.window_index,
            order: c.order,
            relative_l2: e,
        }).collect::<Vec<_>>(),
        "files": ["snapshots.csv", "summary.json"],
    });
    stage.write_json("summary.json", &summary)?;
    stage.commit()?;
    println!("max relative snapshot error: {max_error:.3e}");
    if let Some(c) = cross_order {
        println!("max cross-order difference: {c:.3e}");
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    SnrDb,
    WindowCount,
    WindowStride,
    SampleRate,
    HarmonicOrders,
}

impl SweepParam {
    pub const NAMES: [&'static str; 5] = [
        "snr_db",
        "window_count",
        "window_stride",
        "sample_rate",
        "harmonic_orders",
    ];

    fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }

    /// Apply one cell value, as written on the command line.
    fn apply(self, raw: &mut RawScenario, cell: &str) -> std::result::Result<(), String> {
        let number = || cell.parse::<f64>().map_err(|e| format!("{cell:?}: {e}"));
        match self {
            SweepParam::SnrDb => raw.sampling.snr_db = Some(number()?),
            SweepParam::WindowCount => {
                raw.sampling.window_count = cell.parse().map_err(|e| format!("{cell:?}: {e}"))?
            }
            SweepParam::WindowStride => raw.sampling.window_stride = Some(number()?),
            SweepParam::SampleRate => raw.sampling.sample_rate = number()?,
            SweepParam::HarmonicOrders => {
                raw.modulation.harmonic_orders = cell
                    .split('+')
                    .map(|k| k.trim().parse().map_err(|e| format!("{cell:?}: {e}")))
                    .collect::<std::result::Result<_, _>>()?
            }
        }
        Ok(())
    }
}

impl FromStr for SweepParam {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        use SweepParam::*;
        [SnrDb, WindowCount, WindowStride, SampleRate, HarmonicOrders]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or(())
    }
}

pub struct SweepArgs {
    pub config: PathBuf,
    pub param: String,
    pub values: String,
    pub trials: u64,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Cell {
    value: String,
    rmse_deg: f64,
    success_rate: f64,
    errored_trials: u64,
    valid: bool,
}

fn run_cell(raw: &RawScenario, trials: u64) -> Option<(f64, f64, u64)> {
    let scenario = match validate::<f64>(raw) {
        Ok(s) => s,
        Err(e) => {
            warn!("{e}");
            return None;
        }
    };
    let truth = scenario.true_angles_deg();
    let base = scenario.sampling().rng_seed;
    let per_trial: Vec<Option<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let out = run(&scenario, &RunOptions::seeded(base.wrapping_add(t))).ok()?;
            let est = out.estimates();
            (est.len() == truth.len()).then_some(est)
        })
        .collect();

    let mut sq = 0.0;
    let mut terms = 0usize;
    let mut hits = 0u64;
    let mut errored = 0u64;
    for est in &per_trial {
        match est {
            Some(est) => {
                sq += est
                    .iter()
                    .zip(&truth)
                    .map(|(e, t)| (e - t).powi(2))
                    .sum::<f64>();
                terms += truth.len();
                if max_abs_error(est, &truth).is_some_and(|e| e <= SUCCESS_TOL_DEG) {
                    hits += 1;
                }
            }
            None => errored += 1,
        }
    }
    let rmse = if terms == 0 {
        f64::NAN
    } else {
        (sq / terms as f64).sqrt()
    };
    Some((rmse, hits as f64 / trials as f64, errored))
}

pub fn sweep(args: &SweepArgs) -> Outcome<()> {
    let param: SweepParam = args.param.parse().map_err(|_| {
        Failure::Config(json!({
            "kind": "UnknownParameter",
            "param": args.param,
            "allowed": SweepParam::NAMES,
        }))
    })?;
    if args.trials == 0 {
        return Err(config_error("InvalidTrials", "trials must be at least 1"));
    }
    let cells: Vec<&str> = args
        .values
        .split(',')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .collect();
    if cells.is_empty() {
        return Err(config_error("InvalidValues", "no sweep values given"));
    }
    let raw = load(&args.config)?;
    checked(&raw)?;

    let mut variants = Vec::with_capacity(cells.len());
    for cell in &cells {
        let mut v = raw.clone();
        param
            .apply(&mut v, cell)
            .map_err(|m| config_error("InvalidValues", format!("{}: {m}", param.name())))?;
        variants.push(v);
    }

    let mut results = Vec::with_capacity(cells.len());
    let mut warnings = 0u64;
    for (cell, variant) in cells.iter().zip(&variants) {
        info!("{} = {cell}: {} trials", param.name(), args.trials);
        let r = match run_cell(variant, args.trials) {
            Some((rmse, rate, errored)) => {
                if errored > 0 {
                    warn!(
                        "{} = {cell}: {errored} of {} trials failed",
                        param.name(),
                        args.trials
                    );
                    warnings += 1;
                }
                Cell {
                    value: cell.to_string(),
                    rmse_deg: rmse,
                    success_rate: rate,
                    errored_trials: errored,
                    valid: true,
                }
            }
            None => {
                warn!(
                    "{} = {cell}: scenario invalid, cell left as NaN",
                    param.name()
                );
                warnings += 1;
                Cell {
                    value: cell.to_string(),
                    rmse_deg: f64::NAN,
                    success_rate: f64::NAN,
                    errored_trials: args.trials,
                    valid: false,
                }
            }
        };
        results.push(r);
    }

    let mut stage = Staging::new(&args.out)?;
    stage.write_with("rmse.csv", |w| {
        write!(w, "param,value,statistic,result\r\n")?;
        for c in &results {
            let name = param.name();
            write!(w, "{name},{},rmse_deg,{}\r\n", c.value, c.rmse_deg)?;
            write!(w, "{name},{},success_rate,{}\r\n", c.value, c.success_rate)?;
            write!(
                w,
                "{name},{},errored_trials,{}\r\n",
                c.value, c.errored_trials
            )?;
        }
        Ok(())
    })?;
    // NaN is not valid JSON; invalid cells carry null instead.
    let cells_json: Vec<_> = results
        .iter()
        .map(|c| {
            json!({
                "value": c.value,
                "valid": c.valid,
                "rmse_deg": c.rmse_deg.is_finite().then_some(c.rmse_deg),
                "success_rate": c.success_rate.is_finite().then_some(c.success_rate),
                "errored_trials": c.errored_trials,
            })
        })
        .collect();
    stage.write_json(
        "sweep.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "param": param.name(),
            "values": cells,
            "trials": args.trials,
            "seed_policy": "rng_seed + trial index",
            "base_seed": raw.sampling.rng_seed,
            "success_tolerance_deg": SUCCESS_TOL_DEG,
            "warnings": warnings,
            "cells": cells_json,
            "files": ["rmse.csv", "sweep.json"],
        }),
    )?;
    stage.commit()?;
    for c in &results {
        println!(
            "{} = {}: rmse {:.4} deg, success {:.2}",
            param.name(),
            c.value,
            c.rmse_deg,
            c.success_rate
        );
    }
    if warnings > 0 {
        eprintln!("{warnings} warning(s); see log output");
    }
    Ok(())
}
