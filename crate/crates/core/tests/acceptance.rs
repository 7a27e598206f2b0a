//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the report is printed whether or not the criteria hold; exits non-zero if
//! any fails. `ACCEPTANCE_ONLY=2,5` restricts the run.

mod support;

use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rabicorr::analysis::{default_discord_grid, linear_grid, Partition};
use rabicorr::model::{Eigensystem, ModelParams};
use rabicorr::otto::{run_cycle, work_scan, CycleSpec, WorkPoint};
use rabicorr::statespace::{Basis, DensityMatrix};
use rabicorr::units::reference_tau;
use rabicorr::{
    discord_scan, discord_scan_multi, locate_extremum, power_law_fit, quantum_discord, quantum_discord_ensemble,
    ExtremumKind, OptimizerConfig, ScanConfig,
};
use support::*;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Self::new(false, format!("error: {e}"))
    }
}

/// Basin hopping trimmed for long scans. Checked against the default
/// configuration on the N = 1 and one-vs-rest scans (identical maxima).
fn scan_optimizer() -> OptimizerConfig {
    OptimizerConfig { n_hops: 5, n_restarts: 2, ..Default::default() }
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).filter(|&i| v[i].is_finite()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0)
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).filter(|&i| v[i].is_finite()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0)
}

fn jc_limit() -> Outcome {
    let run = || -> rabicorr::Result<(f64, f64)> {
        let params = ModelParams::resonant(1, 12, Basis::FullTensor, 0.01)?;
        let system = Eigensystem::solve(&params)?;
        let opt = OptimizerConfig::default();
        let level = |k: usize| -> rabicorr::Result<f64> {
            let mut pops = vec![0.0; system.len()];
            pops[k] = 1.0;
            Ok(quantum_discord_ensemble(&system.ensemble(&pops, 0.0)?, &opt)?.value)
        };
        Ok((level(1)?, level(0)?))
    };
    match run() {
        Ok((excited, ground)) => Outcome::new(
            excited >= 0.99 && ground <= 0.01,
            format!("first excited {excited:.6} bits (>= 0.99), ground {ground:.2e} bits (<= 0.01)"),
        ),
        Err(e) => Outcome::error(e),
    }
}

fn thermal_maximum() -> Outcome {
    let run = || -> rabicorr::Result<Outcome> {
        let params = ModelParams::resonant(1, 2, Basis::FullTensor, 0.0)?;
        let grid = default_discord_grid();
        let rec = discord_scan(&params, reference_tau(), &grid, Partition::FieldVsQubits, &scan_optimizer())?;
        let max = rec.locate(ExtremumKind::Max)?;
        let tail = *rec.discord.last().unwrap_or(&f64::NAN);
        Ok(Outcome::new(
            !max.boundary && (0.1..=1.0).contains(&max.x) && tail < 0.05,
            format!("maximum at g/w = {:.4} (Q = {:.4}), Q(g/w = 2) = {tail:.4} (< 0.05)", max.x, max.value),
        ))
    };
    run().unwrap_or_else(Outcome::error)
}

fn collective_shift() -> Outcome {
    let run = || -> rabicorr::Result<Outcome> {
        let grid = default_discord_grid();
        let mut ns = Vec::new();
        let mut xs = Vec::new();
        for n in 1..=3 {
            let params = ModelParams::resonant(n, 2, Basis::DickeSymmetric, 0.0)?;
            let rec = discord_scan(&params, reference_tau(), &grid, Partition::FieldVsQubits, &scan_optimizer())?;
            ns.push(n as f64);
            xs.push(rec.locate(ExtremumKind::Max)?.x);
        }
        let fit = power_law_fit(&ns, &xs)?;
        let decreasing = xs.windows(2).all(|w| w[1] < w[0]);
        Ok(Outcome::new(
            decreasing && fit.r_squared >= 0.98,
            format!(
                "maxima at g/w = {:.4}, {:.4}, {:.4}; exponent {:.4}, R^2 = {:.4} (>= 0.98)",
                xs[0], xs[1], xs[2], fit.exponent, fit.r_squared
            ),
        ))
    };
    run().unwrap_or_else(Outcome::error)
}

fn reduced_partition() -> Outcome {
    let run = || -> rabicorr::Result<Outcome> {
        let grid = default_discord_grid();
        let tc = reference_tau();
        let taus = [tc, 5.0 * tc, 10.0 * tc];
        let cfg = ScanConfig { partition: Partition::OneVsRest, ..Default::default() };
        let mut maxima = vec![Vec::new(); taus.len()];
        for n in 2..=5 {
            let params = ModelParams::resonant(n, 2, Basis::FullTensor, 0.0)?;
            for (t, rec) in discord_scan_multi(&params, &taus, &grid, &cfg, &scan_optimizer())?.iter().enumerate() {
                maxima[t].push(rec.locate(ExtremumKind::Max)?.x);
            }
        }
        let shifted: Vec<f64> = (1..=4).map(f64::from).collect();
        let mut pass = true;
        let mut parts = Vec::new();
        for (t, xs) in maxima.iter().enumerate() {
            let fit = power_law_fit(&shifted, xs)?;
            pass &= fit.r_squared >= 0.98;
            parts.push(format!("{}tau_c: R^2 = {:.4}", [1, 5, 10][t], fit.r_squared));
        }
        Ok(Outcome::new(pass, parts.join(", ") + " (>= 0.98 each)"))
    };
    run().unwrap_or_else(Outcome::error)
}

fn decoupled_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=5 {
        let mut spec = match CycleSpec::standard(n, 0.0) {
            Ok(s) => s,
            Err(e) => return Outcome::error(e),
        };
        spec.discord.stages.clear();
        match run_cycle(&spec, &OptimizerConfig::default()) {
            Ok(r) => {
                let oracle = decoupled_work(n, spec.omega_h, spec.omega_c, spec.tau_h, spec.tau_c);
                worst = worst.max((r.work - oracle).abs());
            }
            Err(e) => return Outcome::error(e),
        }
    }
    Outcome::new(worst <= 1e-8, format!("max |W - W_oracle| over N = 1..5: {worst:.2e} (<= 1e-8)"))
}

/// Work for N = 1..5 on a 100-point linear grid, with stage 2 and 3
/// discords for N <= 3.
fn otto_scan() -> rabicorr::Result<(Vec<f64>, Vec<WorkPoint>)> {
    let grid = linear_grid(0.01, 2.0, 100)?;
    let mut template = CycleSpec::standard(1, 0.0)?;
    template.discord.stages = vec![2, 3];
    template.discord.max_qubits = 3;
    let points = work_scan(&template, &grid, &[1, 2, 3, 4, 5], &scan_optimizer())?;
    Ok((grid, points))
}

fn series(points: &[WorkPoint], n: usize, f: impl Fn(&rabicorr::OttoRecord) -> f64) -> Vec<f64> {
    points
        .iter()
        .filter(|p| p.qubit_count == n)
        .map(|p| p.record.as_ref().map(&f).unwrap_or(f64::NAN))
        .collect()
}

fn otto_extrema(data: &Result<(Vec<f64>, Vec<WorkPoint>), String>) -> Outcome {
    let (grid, points) = match data {
        Ok(d) => d,
        Err(e) => return Outcome::error(e),
    };
    let run = || -> rabicorr::Result<Outcome> {
        let (mut maxima, mut minima) = (Vec::new(), Vec::new());
        for n in 1..=5 {
            let w = series(points, n, |r| r.work);
            maxima.push(locate_extremum(grid, &w, ExtremumKind::Max)?.x);
            minima.push(locate_extremum(grid, &w, ExtremumKind::Min)?.x);
        }
        let ns: Vec<f64> = (1..=5).map(f64::from).collect();
        let (fmax, fmin) = (power_law_fit(&ns, &maxima)?, power_law_fit(&ns, &minima)?);
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
        Ok(Outcome::new(
            fmax.r_squared >= 0.98 && fmin.r_squared >= 0.98,
            format!(
                "W max at [{}] R^2 = {:.4}; W min at [{}] R^2 = {:.4} (>= 0.98)",
                fmt(&maxima),
                fmax.r_squared,
                fmt(&minima),
                fmin.r_squared
            ),
        ))
    };
    run().unwrap_or_else(Outcome::error)
}

fn indicator(data: &Result<(Vec<f64>, Vec<WorkPoint>), String>) -> Outcome {
    let (grid, points) = match data {
        Ok(d) => d,
        Err(e) => return Outcome::error(e),
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 1..=3 {
        let w = series(points, n, |r| r.work);
        let dq = series(points, n, |r| r.delta_q_23);
        if dq.iter().all(|v| !v.is_finite()) {
            return Outcome::new(false, format!("N = {n}: no stage discords"));
        }
        let (iw, iq) = (argmax(&w), argmin(&dq));
        pass &= iw.abs_diff(iq) <= 1;
        parts.push(format!("N = {n}: W max at g/w = {:.4}, dQ23 min at {:.4}", grid[iw], grid[iq]));
    }
    Outcome::new(pass, parts.join("; ") + " (within one grid step)")
}

fn optimizer_oracle() -> Outcome {
    let opt = OptimizerConfig::default();
    let mut worst: f64 = 0.0;
    for rho in random_two_qubit_states(50, 0x2b1d) {
        let grid = grid_discord(&rho);
        match DensityMatrix::new(rho, 2, 2).and_then(|r| quantum_discord(&r, &opt)) {
            Ok(q) => worst = worst.max((q.value - grid).abs()),
            Err(e) => return Outcome::error(e),
        }
    }
    Outcome::new(worst <= 1e-3, format!("max |Q_bh - Q_grid| over 50 states: {worst:.2e} bits (<= 1e-3)"))
}

fn properties() -> Outcome {
    let runner = || TestRunner::new_with_rng(Config::with_cases(CASES), TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let mut failures = Vec::new();
    let mut record = |name: &str, r: Result<(), String>| {
        if let Err(e) = r {
            failures.push(format!("{name}: {e}"));
        }
    };
    record("parity", runner().run(&any_model(), |p| parity_commutes(&p)).map_err(|e| e.to_string()));
    record(
        "entropy",
        runner()
            .run(&(any_state(), prop::collection::vec(-7.0f64..7.0, 9)), |(rho, a)| entropy_bounds(&rho, &a))
            .map_err(|e| e.to_string()),
    );
    record("frames", runner().run(&any_frame(), |f| frame_is_unitary(&f)).map_err(|e| e.to_string()));
    record("adiabatic", runner().run(&any_cycle(), |s| adiabatic_populations(&s)).map_err(|e| e.to_string()));
    record("first law", runner().run(&any_cycle(), |s| first_law(&s)).map_err(|e| e.to_string()));
    if failures.is_empty() {
        Outcome::new(true, format!("5 suites x {CASES} draws"))
    } else {
        Outcome::new(false, failures.join("; "))
    }
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let only: Option<Vec<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |k: u32| only.as_ref().is_none_or(|o| o.contains(&k));

    let mut otto_data: Option<Result<(Vec<f64>, Vec<WorkPoint>), String>> = None;
    let mut otto = |k: u32| -> Outcome {
        let data = otto_data.get_or_insert_with(|| otto_scan().map_err(|e| e.to_string()));
        if k == 6 {
            otto_extrema(data)
        } else {
            indicator(data)
        }
    };

    let mut failed = 0;
    for (k, name) in [
        (1, "weak-coupling eigenstate discord"),
        (2, "thermal discord maximum"),
        (3, "collective shift of the maximum"),
        (4, "one-vs-rest maxima scaling"),
        (5, "uncoupled Otto work"),
        (6, "Otto work extrema scaling"),
        (7, "dQ23 minimum tracks the work maximum"),
        (8, "basin hopping vs grid"),
        (9, "property suites"),
    ] {
        if !wanted(k) {
            continue;
        }
        let start = Instant::now();
        let outcome = match k {
            1 => jc_limit(),
            2 => thermal_maximum(),
            3 => collective_shift(),
            4 => reduced_partition(),
            5 => decoupled_oracle(),
            6 | 7 => otto(k),
            8 => optimizer_oracle(),
            _ => properties(),
        };
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!outcome.pass);
        println!("criterion {k} ({name}): {verdict}  {}  [{:.1} s]", outcome.detail, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
