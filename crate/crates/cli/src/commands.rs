use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rabicorr::analysis::{discord_scan_multi, locate_extremum, power_law_fit, ExtremumKind, Partition, ScanConfig};
use rabicorr::otto::{work_scan, CycleSpec, StageDiscordConfig};
use rabicorr::{Basis, Eigensystem, Extremum, PowerLawFit};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{GridDefault, RunConfig, Spacing};
use crate::error::CliError;
use crate::output::{float, json_bytes, sibling, Provenance, Table};

pub type Files = Vec<(PathBuf, Vec<u8>)>;

pub fn spectrum(cfg: &RunConfig, stem: &Path) -> Result<Files, CliError> {
    let counts = cfg.qubit_counts(1)?;
    let [n] = counts[..] else {
        return Err(CliError::Config("spectrum takes a single qubit count".into()));
    };
    let basis = cfg.basis.unwrap_or(Basis::FullTensor);
    let template = cfg.model(n, basis)?;
    let policy = cfg.cutoff_policy()?;
    let levels = cfg.levels.unwrap_or(6);
    if levels == 0 {
        return Err(CliError::Config("`levels` must be positive".into()));
    }
    let grid = cfg.grid(GridDefault { min: 0.0, max: 2.0, points: 61, spacing: Spacing::Linear })?;
    log::info!("spectrum: N = {n}, {} couplings, {levels} levels", grid.len());

    let solved: Vec<(usize, Vec<f64>)> = grid
        .par_iter()
        .map(|&g| {
            let params = template.with_coupling(g);
            let cutoff = policy.resolve(&params)?;
            Ok((cutoff, Eigensystem::lowest_energies(&params.with_cutoff(cutoff)?, levels)?))
        })
        .collect::<rabicorr::Result<_>>()?;

    let mut table = Table::new(&["g_over_omega", "level_index", "energy_minus_ground"])?;
    for (&g, (_, energies)) in grid.iter().zip(&solved) {
        for (i, e) in energies.iter().enumerate() {
            table.row(&[float(g), i.to_string(), float(e - energies[0])])?;
        }
    }
    let seed = cfg.master_seed.unwrap_or_default();
    let sidecar = json!({
        "provenance": Provenance::new("spectrum", cfg, seed)?,
        "resolved": {
            "qubit_count": n,
            "basis": basis,
            "convention": template.convention,
            "omega_r": template.omega_r,
            "omega_q": template.omega_q[0],
            "levels": levels,
            "cutoff_policy": policy,
            "g_over_omega": grid,
            "fock_cutoff": solved.iter().map(|s| s.0).collect::<Vec<_>>(),
            "ground_energy": solved.iter().map(|s| s.1[0]).collect::<Vec<_>>(),
        },
    });
    Ok(vec![(sibling(stem, ".csv"), table.into_bytes()?), (sibling(stem, ".json"), json_bytes(&sidecar)?)])
}

#[derive(Serialize)]
struct PointWarning {
    g_over_omega: f64,
    message: String,
}

#[derive(Serialize)]
struct RecordSummary {
    qubit_count: usize,
    tau: f64,
    maximum: Option<Extremum>,
    fock_cutoff: Vec<usize>,
    seeds: Vec<u64>,
    warnings: Vec<PointWarning>,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimal_angles: Option<Vec<Vec<f64>>>,
}

pub fn discord_scan(cfg: &RunConfig, stem: &Path) -> Result<Files, CliError> {
    let counts = cfg.qubit_counts(1)?;
    let partition = cfg.partition.unwrap_or(Partition::FieldVsQubits);
    let basis = cfg.basis.unwrap_or(Basis::DickeSymmetric);
    let taus = cfg.taus()?;
    let grid = cfg.grid(GridDefault { min: 0.01, max: 2.0, points: 60, spacing: Spacing::Log })?;
    let opt = cfg.optimizer()?;
    let defaults = ScanConfig::default();
    let scan = ScanConfig {
        partition,
        cutoff: cfg.cutoff_policy()?,
        tail_tol: cfg.tail_tol.unwrap_or(defaults.tail_tol),
        level_cutoff: cfg.level_cutoff,
    };
    if partition == Partition::OneVsRest {
        if let Some(n) = counts.iter().find(|n| **n < 2) {
            return Err(CliError::Config(format!("the one_vs_rest partition needs N >= 2, got {n}")));
        }
    }
    let templates = counts.iter().map(|&n| cfg.model(n, basis)).collect::<Result<Vec<_>, _>>()?;

    let mut records = Vec::new();
    for template in &templates {
        log::info!(
            "discord scan: N = {}, {partition}, {} temperatures x {} couplings",
            template.space.qubit_count,
            taus.len(),
            grid.len()
        );
        records.extend(discord_scan_multi(template, &taus, &grid, &scan, &opt)?);
    }

    let mut table = Table::new(&["N", "tau", "g_over_omega", "discord", "optimizer_warning"])?;
    let mut maxima = Table::new(&["N", "tau", "g_max", "discord_max"])?;
    let mut summaries = Vec::new();
    for r in &records {
        for p in &r.points {
            let flag = if p.warning.is_some() { "1" } else { "0" };
            table.row(&[r.qubit_count.to_string(), float(r.tau), float(p.g_over_omega), float(p.discord), flag.into()])?;
        }
        let maximum = r.locate(ExtremumKind::Max).ok();
        let (x, v) = maximum.map_or((f64::NAN, f64::NAN), |e| (e.x, e.value));
        maxima.row(&[r.qubit_count.to_string(), float(r.tau), float(x), float(v)])?;
        summaries.push(RecordSummary {
            qubit_count: r.qubit_count,
            tau: r.tau,
            maximum,
            fock_cutoff: r.points.iter().map(|p| p.cutoff).collect(),
            seeds: r.points.iter().map(|p| p.seed).collect(),
            warnings: r
                .points
                .iter()
                .filter_map(|p| p.warning.as_ref().map(|m| PointWarning { g_over_omega: p.g_over_omega, message: m.clone() }))
                .collect(),
            optimal_angles: cfg.save_angles.unwrap_or(false).then(|| r.points.iter().map(|p| p.optimal_angles.clone()).collect()),
        });
    }
    let sidecar = json!({
        "provenance": Provenance::new("discord-scan", cfg, opt.master_seed)?,
        "resolved": {
            "qubit_counts": counts,
            "basis": basis,
            "partition": partition,
            "taus": taus,
            "g_over_omega": grid,
            "scan": scan,
            "optimizer": opt,
        },
        "records": summaries,
    });
    Ok(vec![
        (sibling(stem, ".csv"), table.into_bytes()?),
        (sibling(stem, "_maxima.csv"), maxima.into_bytes()?),
        (sibling(stem, ".json"), json_bytes(&sidecar)?),
    ])
}

#[derive(Serialize)]
struct FitOrError {
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<PowerLawFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl FitOrError {
    fn of(x: &[f64], y: &[f64]) -> Self {
        match power_law_fit(x, y) {
            Ok(fit) => Self { fit: Some(fit), error: None },
            Err(e) => Self { fit: None, error: Some(e.to_string()) },
        }
    }
}

#[derive(Serialize)]
struct OttoExtrema {
    qubit_count: usize,
    work_max: Option<Extremum>,
    work_min: Option<Extremum>,
    delta_q23_max: Option<Extremum>,
    delta_q23_min: Option<Extremum>,
    delta_q14_max: Option<Extremum>,
    delta_q14_min: Option<Extremum>,
}

/// Power-law fit of extremum locations against `N`, over the qubit counts
/// where the extremum exists.
fn location_fit(extrema: &[OttoExtrema], pick: impl Fn(&OttoExtrema) -> Option<Extremum>) -> FitOrError {
    let (n, x): (Vec<f64>, Vec<f64>) = extrema.iter().filter_map(|e| pick(e).map(|m| (e.qubit_count as f64, m.x))).unzip();
    FitOrError::of(&n, &x)
}

pub fn otto(cfg: &RunConfig, stem: &Path) -> Result<Files, CliError> {
    let counts = cfg.qubit_counts(1)?;
    let basis = cfg.basis.unwrap_or(Basis::FullTensor);
    let (tau_h, tau_c) = cfg.bath_taus()?;
    let grid = cfg.grid(GridDefault { min: 0.01, max: 2.0, points: 100, spacing: Spacing::Linear })?;
    let opt = cfg.optimizer()?;
    let d = StageDiscordConfig::default();
    let template = CycleSpec {
        base_params: cfg.model(counts[0], basis)?,
        omega_h: cfg.omega_h.unwrap_or(2.0),
        omega_c: cfg.omega_c.unwrap_or(1.0),
        tau_h,
        tau_c,
        g_abs: 0.0,
        cutoff: cfg.cutoff_policy()?,
        discord: StageDiscordConfig {
            stages: cfg.stages.clone().unwrap_or(d.stages),
            max_qubits: cfg.discord_max_qubits.unwrap_or(d.max_qubits),
            basis: cfg.discord_basis.unwrap_or(d.basis),
            tail_tol: cfg.tail_tol.unwrap_or(d.tail_tol),
        },
        crossing_tol: 1e-9,
    };
    template.validate()?;
    log::info!("otto: N = {counts:?}, {} couplings, tau_h = {tau_h}, tau_c = {tau_c}", grid.len());
    let points = work_scan(&template, &grid, &counts, &opt)?;

    let mut table = Table::new(&[
        "N",
        "g_over_omega",
        "work",
        "q_hot",
        "q_cold",
        "discord_s1",
        "discord_s2",
        "discord_s3",
        "discord_s4",
        "delta_q14",
        "delta_q23",
    ])?;
    let mut warnings = Vec::new();
    let mut by_n: Vec<(usize, Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    for p in points {
        let r = p.record.map_err(CliError::from)?;
        let mut row = vec![r.qubit_count.to_string(), float(p.g_abs), float(r.work), float(r.q_hot), float(r.q_cold)];
        row.extend(r.discord_stage.iter().map(|&q| float(q)));
        row.extend([float(r.delta_q_14), float(r.delta_q_23)]);
        table.row(&row)?;
        if !r.warnings.is_empty() {
            warnings.push(json!({ "N": r.qubit_count, "g_over_omega": p.g_abs, "messages": r.warnings }));
        }
        match by_n.last_mut() {
            Some(last) if last.0 == r.qubit_count => {
                last.1.push(r.work);
                last.2.push(r.delta_q_23);
                last.3.push(r.delta_q_14);
            }
            _ => by_n.push((r.qubit_count, vec![r.work], vec![r.delta_q_23], vec![r.delta_q_14])),
        }
    }

    let find = |y: &[f64], kind| locate_extremum(&grid, y, kind).ok();
    let extrema: Vec<OttoExtrema> = by_n
        .iter()
        .map(|(n, w, q23, q14)| OttoExtrema {
            qubit_count: *n,
            work_max: find(w, ExtremumKind::Max),
            work_min: find(w, ExtremumKind::Min),
            delta_q23_max: find(q23, ExtremumKind::Max),
            delta_q23_min: find(q23, ExtremumKind::Min),
            delta_q14_max: find(q14, ExtremumKind::Max),
            delta_q14_min: find(q14, ExtremumKind::Min),
        })
        .collect();
    let fits = json!({
        "work_max": location_fit(&extrema, |e| e.work_max),
        "work_min": location_fit(&extrema, |e| e.work_min),
        "delta_q23_max": location_fit(&extrema, |e| e.delta_q23_max),
        "delta_q23_min": location_fit(&extrema, |e| e.delta_q23_min),
    });
    let sidecar = json!({
        "provenance": Provenance::new("otto", cfg, opt.master_seed)?,
        "resolved": {
            "qubit_counts": counts,
            "cycle": template,
            "g_over_omega": grid,
            "optimizer": opt,
        },
        "extrema": extrema,
        "power_law_fits": fits,
        "warnings": warnings,
    });
    Ok(vec![(sibling(stem, ".csv"), table.into_bytes()?), (sibling(stem, ".json"), json_bytes(&sidecar)?)])
}

#[derive(Serialize)]
struct GroupFit {
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<String>,
    x: Vec<f64>,
    y: Vec<f64>,
    fit: PowerLawFit,
}

pub fn fit(cfg: &RunConfig, stem: &Path) -> Result<Files, CliError> {
    let input = cfg.input.as_ref().ok_or_else(|| CliError::Config("fit needs an `input` CSV".into()))?;
    let x_col = cfg.x_column.as_deref().ok_or_else(|| CliError::Config("fit needs `x_column`".into()))?;
    let y_col = cfg.y_column.as_deref().ok_or_else(|| CliError::Config("fit needs `y_column`".into()))?;
    let shift = cfg.x_shift.unwrap_or(0.0);
    let bad = |e: csv::Error| CliError::Config(format!("{}: {e}", input.display()));

    let mut reader = csv::Reader::from_path(input).map_err(bad)?;
    let headers = reader.headers().map_err(bad)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("{}: no column `{name}`", input.display())))
    };
    let (xi, yi) = (column(x_col)?, column(y_col)?);
    let gi = cfg.group_by.as_deref().map(column).transpose()?;

    let mut order: Vec<Option<String>> = Vec::new();
    let mut groups: HashMap<Option<String>, (Vec<f64>, Vec<f64>)> = HashMap::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(bad)?;
        let number = |i: usize, name: &str| -> Result<f64, CliError> {
            let raw = rec.get(i).unwrap_or("").trim();
            raw.parse().map_err(|_| CliError::Config(format!("row {}: `{raw}` in `{name}` is not a number", line + 1)))
        };
        let key = gi.map(|i| rec.get(i).unwrap_or("").to_string());
        let (x, y) = (number(xi, x_col)? + shift, number(yi, y_col)?);
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (Vec::new(), Vec::new())
        });
        entry.0.push(x);
        entry.1.push(y);
    }
    if order.is_empty() {
        return Err(CliError::Config(format!("{}: no data rows", input.display())));
    }
    let fits = order
        .into_iter()
        .map(|key| {
            let (x, y) = groups.remove(&key).unwrap_or_default();
            let fit = power_law_fit(&x, &y).map_err(|e| {
                let label = key.as_deref().map(|k| format!(" (group {k})")).unwrap_or_default();
                CliError::Config(format!("{e}{label}"))
            })?;
            Ok(GroupFit { group: key, x, y, fit })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let seed = cfg.master_seed.unwrap_or_default();
    let out = json!({
        "provenance": Provenance::new("fit", cfg, seed)?,
        "input": input,
        "x_column": x_col,
        "y_column": y_col,
        "group_by": cfg.group_by,
        "x_shift": shift,
        "fits": fits,
    });
    Ok(vec![(sibling(stem, ".json"), json_bytes(&out)?)])
}
