//! The five studies behind the command-line subcommands.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::report::{Figure, Report, Series};
use super::HarnessError;
use crate::coupling::{run_coupled, CoupledRun};
use crate::engine::{sample_initial, simulate, Observables, Preset, Profile, SmoothBump, TestFunction, TrajectoryRecord};
use crate::lattice::{Configuration, ModelParams, ProcessKind};
use crate::stefan::{
    absorbed_heat_closed_form, dissipated_mass, interpolate, max_slope, one_phase_alpha, solve_stefan,
    solve_with_residuals, to_moving_frame, PdeParams, StefanSolution,
};

/// A report plus the data files it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub report: Report,
    /// `(relative path, contents)`.
    pub files: Vec<(String, String)>,
}

/// Convergence thresholds. The hydrodynamic limits come without rates, so these are
/// engineering choices.
pub const L1_TOLERANCE: f64 = 0.05;
pub const FRONT_TOLERANCE: f64 = 0.05;
pub const SCALING_TOLERANCE: f64 = 0.05;
pub const BETA_TOLERANCE: f64 = 0.05;
pub const RESIDUAL_RATIO: f64 = 1.8;
pub const CONSERVATION_TOLERANCE: f64 = 1e-12;

fn pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool, HarnessError> {
    let workers = cfg.run.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Runtime(crate::Error::Simulation(format!("worker pool: {e}"))))
}

/// Runs `f` for every seed on the pool; results come back in seed order.
fn per_seed<T: Send>(
    pool: &rayon::ThreadPool,
    seeds: &[u64],
    f: impl Fn(u64) -> crate::Result<T> + Sync + Send,
) -> Result<Vec<T>, HarnessError> {
    pool.install(|| seeds.par_iter().map(|&s| f(s)).collect::<crate::Result<Vec<T>>>()).map_err(HarnessError::Runtime)
}

fn model(cfg: &ExperimentConfig, n: u32, seed: u64) -> crate::Result<ModelParams> {
    ModelParams::new(cfg.model.a_minus, cfg.model.a_plus, n, cfg.run.l, cfg.run.t, seed)
}

fn initial_profile(preset: &Preset, kind: ProcessKind) -> Profile {
    match kind {
        ProcessKind::Absorbed { .. } => preset.profile(),
        _ => preset.signed_profile(),
    }
}

fn run_one(cfg: &ExperimentConfig, kind: ProcessKind, n: u32, seed: u64, obs: &Observables) -> crate::Result<TrajectoryRecord> {
    let mp = model(cfg, n, seed)?;
    let init = sample_initial(&initial_profile(&cfg.profile, kind), &mp, kind)?;
    simulate(&init, kind, &mp, &cfg.run.sample_times, obs)
}

fn pde_params(cfg: &ExperimentConfig) -> PdeParams {
    PdeParams { dt: cfg.pde.dt, ..PdeParams::new(cfg.model.a_minus, cfg.model.a_plus, cfg.run.l, cfg.pde.dx) }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Seed average of block profiles, one row per sample time.
fn mean_profile(rows: &[&Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let s = rows.len() as f64;
    let mut acc = rows[0].clone();
    for r in &rows[1..] {
        for (a, b) in acc.iter_mut().zip(r.iter()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
    for row in &mut acc {
        for x in row.iter_mut() {
            *x /= s;
        }
    }
    acc
}

/// `sum_blocks |rho_hat - rho(center)| * h`.
fn l1_distance(centers: &[f64], density: &[f64], h: f64, exact: impl Fn(f64) -> f64) -> f64 {
    centers.iter().zip(density).map(|(&c, d)| (d - exact(c)).abs() * h).sum()
}

fn fmt_list(xs: &[f64]) -> String {
    let v: Vec<String> = xs.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", v.join(", "))
}

/// Exact bookkeeping of one run: particles plus deaths are conserved, the
/// death counters never decrease and, for translating kinds, `b = D_- - D_+`.
pub fn ledger_violations(rec: &TrajectoryRecord) -> Vec<String> {
    let mut bad = Vec::new();
    for k in 0..rec.sample_times.len() {
        let (dp, dm) = (rec.deaths_plus[k], rec.deaths_minus[k]);
        if rec.particles[k] + dp + dm != rec.initial_particles {
            bad.push(format!("particles at t={} do not balance", rec.sample_times[k]));
        }
        if k > 0 && (dp < rec.deaths_plus[k - 1] || dm < rec.deaths_minus[k - 1]) {
            bad.push(format!("death counter decreased at t={}", rec.sample_times[k]));
        }
        if rec.kind.translates() && rec.b_path[k] != (dm as i64 - dp as i64) as f64 / rec.n as f64 {
            bad.push(format!("b != D at t={}", rec.sample_times[k]));
        }
    }
    bad
}

pub fn simulate_study(cfg: &ExperimentConfig) -> Result<Study, HarnessError> {
    let kind = cfg.process_kind();
    let pool = pool(cfg)?;
    let mut report = Report::new("simulate", cfg.hash(), cfg.run.seeds.clone());
    let mut files = Vec::new();
    let mut ledger_bad = Vec::new();
    let mut runs = 0;
    for &n in &cfg.run.n {
        let obs = Observables::new(cfg.block_sites(n));
        let recs = per_seed(&pool, &cfg.run.seeds, |s| run_one(cfg, kind, n, s, &obs))?;
        let mut b_series = Vec::new();
        for rec in &recs {
            runs += 1;
            for v in ledger_violations(rec) {
                ledger_bad.push(format!("N={n} seed={}: {v}", rec.seed));
            }
            let stem = format!("simulate/n{n}_seed{}", rec.seed);
            files.push((format!("{stem}_observables.csv"), rec.to_csv()));
            files.push((format!("{stem}_blocks.csv"), rec.blocks_csv()));
            if kind.translates() {
                files.push((format!("{stem}_frame_blocks.csv"), rec.frame_blocks_csv()));
            }
            if rec.edge_deviation > 0.2 {
                report.notes.push(format!(
                    "N={n} seed={}: edge blocks moved by {:.3}; the window may be too small",
                    rec.seed, rec.edge_deviation
                ));
            }
        }
        let d: Vec<f64> = (0..cfg.run.sample_times.len())
            .map(|k| recs.iter().map(|r| r.d_plus[k] + r.d_minus[k]).sum::<f64>() / recs.len() as f64)
            .collect();
        b_series.push(Series { label: format!("N={n}"), points: cfg.run.sample_times.iter().copied().zip(d).collect() });
        report.figures.push(Figure {
            name: format!("simulate_deaths_n{n}"),
            title: format!("Mean rescaled deaths D+ + D-, N={n}"),
            x_label: "t".into(),
            y_label: "deaths / N".into(),
            log_x: false,
            log_y: false,
            series: b_series,
        });
    }
    report.check(
        "ledgers exact",
        ledger_bad.is_empty(),
        if ledger_bad.is_empty() { format!("{runs} runs") } else { ledger_bad.join("; ") },
    );
    Ok(Study { report, files })
}

/// Test functions of the residual certification. Their supports end on
/// dyadic points so that every refinement level resolves them alike.
pub fn certification_tests() -> Vec<SmoothBump> {
    vec![
        SmoothBump::space_time("g1", 0.0, 0.5, 1.0, 0.0, 0.3),
        SmoothBump::space_time("g2", 0.25, 0.375, 1.0, 0.0, 0.2),
        SmoothBump::space_time("g3", -0.25, 0.5, 1.0, 0.15, 0.15),
    ]
}

/// Horizon of the residual certification solves.
pub const CERTIFICATION_HORIZON: f64 = 0.35;

pub fn pde_study(cfg: &ExperimentConfig) -> Result<Study, HarnessError> {
    let params = pde_params(cfg);
    let profile = cfg.profile.signed_profile();
    let sol = solve_stefan(&profile, &params, &cfg.run.sample_times)?;
    let mut report = Report::new("pde", cfg.hash(), cfg.run.seeds.clone());
    let mut files = vec![("pde_density.csv".to_string(), sol.to_csv()), ("pde_front.csv".to_string(), sol.front_csv())];

    report.check(
        "enthalpy conservation",
        sol.max_conservation_defect <= CONSERVATION_TOLERANCE,
        format!("max per-step defect {:e}", sol.max_conservation_defect),
    );
    let symmetric = matches!(cfg.profile, Preset::SymmetricStep { .. } | Preset::AllOnes) && cfg.model.a_minus == cfg.model.a_plus;
    if symmetric {
        let exact = sol.front.iter().all(|b| *b == Some(0.0));
        report.check("symmetric front identically zero", exact, format!("B = {:?}", sol.front));
    }
    if sol.front.iter().all(Option::is_some) {
        let mf = to_moving_frame(&sol)?;
        let mut worst: f64 = 0.0;
        let mut worst_ratio: f64 = 0.0;
        let mut ok = true;
        for (k, l0) in mf.at_origin().into_iter().enumerate() {
            let bound = 2.0 * params.dx * max_slope(&sol.rho[k], params.dx);
            ok &= l0.abs() <= bound;
            worst = worst.max(l0.abs());
            if bound > 0.0 {
                worst_ratio = worst_ratio.max(l0.abs() / bound);
            }
        }
        report.check(
            "moving frame vanishes at the origin",
            ok,
            format!("max |lambda(t,0)| = {worst:.3e}, worst |lambda(t,0)| / (2 dx max slope) = {worst_ratio:.3}"),
        );
        let mut csv = String::from("time,u,lambda\n");
        for (t, row) in mf.times.iter().zip(&mf.lambda) {
            for (u, v) in mf.centers.iter().zip(row) {
                let _ = writeln!(csv, "{t},{u},{v}");
            }
        }
        files.push(("moving_frame.csv".into(), csv));
    } else {
        report.notes.push("no interface at some sample time; moving frame skipped".into());
    }

    // weak residual refinement over 2 dx, dx, dx / 2
    let tests = certification_tests();
    if cfg.run.l > 0.75 {
        let dxs = [2.0 * cfg.pde.dx, cfg.pde.dx, cfg.pde.dx / 2.0];
        let refs: Vec<&dyn TestFunction> = tests.iter().map(|g| g as &dyn TestFunction).collect();
        let mut table = Vec::new();
        for &dx in &dxs {
            let p = PdeParams::new(cfg.model.a_minus, cfg.model.a_plus, cfg.run.l, dx);
            let (_, r) = solve_with_residuals(&profile, &p, &[CERTIFICATION_HORIZON], &refs)?;
            table.push(r);
        }
        let mut csv = String::from("test,dx,residual\n");
        let mut series = Vec::new();
        for (i, g) in tests.iter().enumerate() {
            let vals: Vec<f64> = table.iter().map(|r| r[i]).collect();
            for (dx, v) in dxs.iter().zip(&vals) {
                let _ = writeln!(csv, "{},{dx},{v}", g.id);
            }
            let ratios = [vals[0].abs() / vals[1].abs(), vals[1].abs() / vals[2].abs()];
            report.check(
                format!("weak residual refinement {}", g.id),
                ratios.iter().all(|r| *r >= RESIDUAL_RATIO),
                format!("|R| = {:?}, ratios {}", vals.iter().map(|v| format!("{:.3e}", v.abs())).collect::<Vec<_>>(), fmt_list(&ratios)),
            );
            series.push(Series { label: g.id.clone(), points: dxs.iter().copied().zip(vals.iter().map(|v| v.abs())).collect() });
        }
        files.push(("pde_residuals.csv".into(), csv));
        report.figures.push(Figure {
            name: "pde_residual".into(),
            title: "Weak residual against dx".into(),
            x_label: "dx".into(),
            y_label: "|residual|".into(),
            log_x: true,
            log_y: true,
            series,
        });
    } else {
        report.notes.push("l <= 0.75: residual certification needs a wider window".into());
    }

    report.figures.push(density_figure("pde_density", "Enthalpy solution", &sol));
    report.figures.push(Figure {
        name: "pde_front".into(),
        title: "Front B(t)".into(),
        x_label: "t".into(),
        y_label: "B".into(),
        log_x: false,
        log_y: false,
        series: vec![Series {
            label: "B".into(),
            points: sol.times.iter().zip(&sol.front).filter_map(|(t, b)| b.map(|b| (*t, b))).collect(),
        }],
    });
    Ok(Study { report, files })
}

fn density_figure(name: &str, title: &str, sol: &StefanSolution) -> Figure {
    Figure {
        name: name.into(),
        title: title.into(),
        x_label: "u".into(),
        y_label: "rho".into(),
        log_x: false,
        log_y: false,
        series: sol
            .times
            .iter()
            .zip(&sol.rho)
            .map(|(t, row)| Series { label: format!("t={t}"), points: sol.centers.iter().copied().zip(row.iter().copied()).collect() })
            .collect(),
    }
}

fn blocks_csv(times: &[f64], centers: &[f64], density: &[Vec<f64>]) -> String {
    let mut s = String::from("time,block_center,density\n");
    for (t, row) in times.iter().zip(density) {
        for (c, v) in centers.iter().zip(row) {
            let _ = writeln!(s, "{t},{c},{v}");
        }
    }
    s
}

/// Per-`N` aggregates of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeRow {
    pub n: u32,
    /// L1 distance of the seed-averaged block profile at each sample time.
    pub l1: Vec<f64>,
    /// Mean and standard error of the single-seed L1 distances.
    pub seed_l1: Vec<(f64, f64)>,
    /// Mean and standard error of `b^N(t)`.
    pub b: Vec<(f64, f64)>,
    pub abs_front_error: Vec<f64>,
}

pub fn converge_study(cfg: &ExperimentConfig) -> Result<Study, HarnessError> {
    use super::config::ConfigError;
    if cfg.run.n.len() < 3 {
        return Err(ConfigError::new("run.n", "a convergence study needs at least 3 values of N").into());
    }
    if cfg.run.n.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::new("run.n", "must be strictly increasing").into());
    }
    let kind = cfg.process_kind();
    if !matches!(kind, ProcessKind::SigmaEta | ProcessKind::BoundaryFrame) {
        return Err(ConfigError::new("model.kind", "converge compares sigma_eta or boundary_frame runs").into());
    }
    let times = &cfg.run.sample_times;
    let sol = solve_stefan(&cfg.profile.signed_profile(), &pde_params(cfg), times)?;
    let frame = kind == ProcessKind::BoundaryFrame;
    let mf = if frame { Some(to_moving_frame(&sol)?) } else { None };
    let exact = |k: usize, u: f64| match &mf {
        Some(mf) => interpolate(&mf.centers, &mf.lambda[k], u),
        None => sol.interpolate(k, u),
    };
    let front: Vec<f64> = sol.front.iter().map(|b| b.unwrap_or(f64::NAN)).collect();
    let pool = pool(cfg)?;
    let mut report = Report::new("converge", cfg.hash(), cfg.run.seeds.clone());
    let mut files = vec![("pde_density.csv".to_string(), sol.to_csv()), ("pde_front.csv".to_string(), sol.front_csv())];
    let mut rows = Vec::new();
    let mut ledger_bad = 0usize;
    let mut overlay = Vec::new();
    for &n in &cfg.run.n {
        let w = cfg.block_sites(n);
        let h = w as f64 / n as f64;
        let obs = Observables::new(w);
        let recs = per_seed(&pool, &cfg.run.seeds, |s| run_one(cfg, kind, n, s, &obs))?;
        ledger_bad += recs.iter().map(|r| ledger_violations(r).len()).sum::<usize>();
        let (centers, profiles): (&Vec<f64>, Vec<&Vec<Vec<f64>>>) = if frame {
            (&recs[0].frame_block_centers, recs.iter().map(|r| &r.frame_block_density).collect())
        } else {
            (&recs[0].block_centers, recs.iter().map(|r| &r.block_density).collect())
        };
        let mean = mean_profile(&profiles);
        let mut row = ConvergeRow { n, l1: vec![], seed_l1: vec![], b: vec![], abs_front_error: vec![] };
        for k in 0..times.len() {
            row.l1.push(l1_distance(centers, &mean[k], h, |u| exact(k, u)));
            let per: Vec<f64> = profiles.iter().map(|p| l1_distance(centers, &p[k], h, |u| exact(k, u))).collect();
            row.seed_l1.push(mean_se(&per));
            let bs: Vec<f64> = recs.iter().map(|r| r.b_path[k]).collect();
            row.b.push(mean_se(&bs));
            let dev: Vec<f64> = bs.iter().map(|b| (b - front[k]).abs()).collect();
            row.abs_front_error.push(mean_se(&dev).0);
        }
        files.push((format!("blocks_mean_n{n}.csv"), blocks_csv(times, centers, &mean)));
        if n == *cfg.run.n.last().unwrap() {
            for (k, t) in times.iter().enumerate() {
                overlay.push(Series { label: format!("N={n} t={t}"), points: centers.iter().copied().zip(mean[k].iter().copied()).collect() });
                let grid = mf.as_ref().map_or(&sol.centers, |m| &m.centers);
                overlay.push(Series { label: format!("PDE t={t}"), points: grid.iter().map(|&u| (u, exact(k, u))).collect() });
            }
        }
        rows.push(row);
    }

    let mut l1_csv = String::from("n,time,l1_mean_profile,seed_l1_mean,seed_l1_se\n");
    let mut b_csv = String::from("n,time,mean_b,se_b,front,mean_abs_error\n");
    for r in &rows {
        for (k, t) in times.iter().enumerate() {
            let _ = writeln!(l1_csv, "{},{t},{},{},{}", r.n, r.l1[k], r.seed_l1[k].0, r.seed_l1[k].1);
            let _ = writeln!(b_csv, "{},{t},{},{},{},{}", r.n, r.b[k].0, r.b[k].1, front[k], r.abs_front_error[k]);
        }
    }
    files.push(("converge_l1.csv".into(), l1_csv));
    files.push(("converge_front.csv".into(), b_csv));

    report.check("ledgers exact", ledger_bad == 0, format!("{ledger_bad} violations"));
    let last = rows.last().unwrap();
    for (k, &t) in times.iter().enumerate() {
        if t == 0.0 {
            continue;
        }
        let l1: Vec<f64> = rows.iter().map(|r| r.l1[k]).collect();
        report.check(
            format!("L1 strictly decreasing in N at t={t}"),
            l1.windows(2).all(|w| w[1] < w[0]),
            format!("N={:?} L1={}", cfg.run.n, fmt_list(&l1)),
        );
        report.check(
            format!("final L1 <= {L1_TOLERANCE} at t={t}"),
            last.l1[k] <= L1_TOLERANCE,
            format!("N={} L1={:.4}", last.n, last.l1[k]),
        );
        if frame {
            continue;
        }
        report.check(
            format!("mean |b - B| <= {FRONT_TOLERANCE} at t={t}"),
            last.abs_front_error[k] <= FRONT_TOLERANCE,
            format!("N={} mean |b - B| = {:.4}, B = {:.4}", last.n, last.abs_front_error[k], front[k]),
        );
        if matches!(cfg.profile, Preset::SymmetricStep { .. }) && cfg.model.a_minus == cfg.model.a_plus {
            let (m, se) = last.b[k];
            report.check(
                format!("symmetric b within 3 standard errors of 0 at t={t}"),
                m.abs() <= 3.0 * se || m == 0.0,
                format!("mean b = {m:.4}, se = {se:.4}"),
            );
        }
    }
    report.notes.push("L1 is computed from the seed-averaged block profile; single-seed values are in converge_l1.csv".into());

    if let (Preset::OnePhase { theta }, false) = (cfg.profile, frame) {
        if cfg.model.a_minus == 0.0 {
            one_phase_checks(&mut report, times, last, theta, cfg.model.a_plus);
        }
    }

    let l1_series = times
        .iter()
        .enumerate()
        .filter(|(_, t)| **t > 0.0)
        .map(|(k, t)| Series { label: format!("t={t}"), points: rows.iter().map(|r| (r.n as f64, r.l1[k])).collect() })
        .collect();
    report.figures.push(Figure {
        name: "converge_l1".into(),
        title: "L1 distance to the PDE against N".into(),
        x_label: "N".into(),
        y_label: "L1".into(),
        log_x: true,
        log_y: true,
        series: l1_series,
    });
    let mut front_series: Vec<Series> = rows
        .iter()
        .map(|r| Series { label: format!("b N={}", r.n), points: times.iter().copied().zip(r.b.iter().map(|b| b.0)).collect() })
        .collect();
    front_series.push(Series { label: "B".into(), points: times.iter().copied().zip(front.iter().copied()).collect() });
    report.figures.push(Figure {
        name: "converge_front".into(),
        title: "Mean b^N(t) and the PDE front".into(),
        x_label: "t".into(),
        y_label: "position".into(),
        log_x: false,
        log_y: false,
        series: front_series,
    });
    report.figures.push(Figure {
        name: "converge_density".into(),
        title: "Seed-averaged density against the PDE".into(),
        x_label: "u".into(),
        y_label: "rho".into(),
        log_x: false,
        log_y: false,
        series: overlay,
    });
    Ok(Study { report, files })
}

/// Least-squares fit `b = c sqrt(t)` at the largest N, flatness of
/// `b / sqrt(t)` and agreement with `-2 alpha sqrt(a_plus)`.
fn one_phase_checks(report: &mut Report, times: &[f64], last: &ConvergeRow, theta: f64, a_plus: f64) {
    let pts: Vec<(f64, f64)> = times.iter().zip(&last.b).filter(|(t, _)| **t > 0.0).map(|(t, b)| (*t, b.0)).collect();
    let c = pts.iter().map(|(t, b)| b * t.sqrt()).sum::<f64>() / pts.iter().map(|(t, _)| t).sum::<f64>();
    let ratios: Vec<f64> = pts.iter().map(|(t, b)| b / t.sqrt()).collect();
    let flat = ratios.iter().all(|r| (r - c).abs() <= SCALING_TOLERANCE * c.abs());
    report.check(
        format!("b/sqrt(t) constant within {}%", SCALING_TOLERANCE * 100.0),
        flat,
        format!("N={} fit c = {c:.4}, b/sqrt(t) = {}", last.n, fmt_list(&ratios)),
    );
    let target = -2.0 * one_phase_alpha(theta) * a_plus.sqrt();
    report.check(
        format!("similarity coefficient within {}%", SCALING_TOLERANCE * 100.0),
        (c - target).abs() <= SCALING_TOLERANCE * target.abs(),
        format!("fit {c:.4} vs -2 alpha sqrt(a_plus) = {target:.4}"),
    );
}

pub fn beta_check(cfg: &ExperimentConfig) -> Result<Study, HarnessError> {
    use super::config::ConfigError;
    if cfg.profile != Preset::AllOnes {
        return Err(ConfigError::new("profile.preset", "beta-check needs all_ones initial data").into());
    }
    let b_rate = cfg.model.b_rate.unwrap_or(1.0);
    let kind = ProcessKind::Absorbed { b_rate };
    let times = &cfg.run.sample_times;
    let pool = pool(cfg)?;
    let mut report = Report::new("beta-check", cfg.hash(), cfg.run.seeds.clone());
    let mut files = Vec::new();
    let mut diss_csv = String::from("n,time,mean_d,se_d,exact\n");
    let mut d_series = Vec::new();
    let mut profile_series = Vec::new();
    for &n in &cfg.run.n {
        let w = cfg.block_sites(n);
        let h = w as f64 / n as f64;
        let obs = Observables::new(w);
        let recs = per_seed(&pool, &cfg.run.seeds, |s| run_one(cfg, kind, n, s, &obs))?;
        let ledger = recs.iter().map(|r| ledger_violations(r).len()).sum::<usize>();
        report.check(format!("ledgers exact N={n}"), ledger == 0, format!("{ledger} violations"));
        let centers = &recs[0].block_centers;
        let mean = mean_profile(&recs.iter().map(|r| &r.block_density).collect::<Vec<_>>());
        files.push((format!("beta_profile_n{n}.csv"), blocks_csv(times, centers, &mean)));
        let mut pts = Vec::new();
        for (k, &t) in times.iter().enumerate() {
            let ds: Vec<f64> = recs.iter().map(|r| r.d_plus[k] + r.d_minus[k]).collect();
            let (m, se) = mean_se(&ds);
            let exact = dissipated_mass(b_rate, t);
            let _ = writeln!(diss_csv, "{n},{t},{m},{se},{exact}");
            pts.push((t, m));
            if t == 0.0 {
                report.check(format!("no dissipation at t=0, N={n}"), m == 0.0, format!("mean D = {m}"));
                continue;
            }
            report.check(
                format!("mean D_beta within {}% of 2 sqrt(bt/pi), N={n} t={t}", BETA_TOLERANCE * 100.0),
                (m - exact).abs() <= BETA_TOLERANCE * exact,
                format!("mean {m:.5} (se {se:.5}) vs {exact:.5}"),
            );
            let l1 = l1_distance(centers, &mean[k], h, |u| absorbed_heat_closed_form(b_rate, t, u));
            report.check(
                format!("profile L1 <= {BETA_TOLERANCE} against erf, N={n} t={t}"),
                l1 <= BETA_TOLERANCE,
                format!("L1 = {l1:.4}"),
            );
            if n == *cfg.run.n.last().unwrap() {
                profile_series.push(Series { label: format!("N={n} t={t}"), points: centers.iter().copied().zip(mean[k].iter().copied()).collect() });
                profile_series.push(Series {
                    label: format!("erf t={t}"),
                    points: centers.iter().map(|&u| (u, absorbed_heat_closed_form(b_rate, t, u))).collect(),
                });
            }
        }
        d_series.push(Series { label: format!("N={n}"), points: pts });
    }
    d_series.push(Series { label: "2 sqrt(bt/pi)".into(), points: times.iter().map(|&t| (t, dissipated_mass(b_rate, t))).collect() });
    files.push(("beta_dissipation.csv".into(), diss_csv));
    report.figures.push(Figure {
        name: "beta_dissipation".into(),
        title: "Dissipated mass".into(),
        x_label: "t".into(),
        y_label: "D".into(),
        log_x: false,
        log_y: false,
        series: d_series,
    });
    report.figures.push(Figure {
        name: "beta_profile".into(),
        title: "Absorbed density against erf".into(),
        x_label: "u".into(),
        y_label: "density".into(),
        log_x: false,
        log_y: false,
        series: profile_series,
    });
    Ok(Study { report, files })
}

pub fn couple_check(cfg: &ExperimentConfig) -> Result<Study, HarnessError> {
    let presets = if cfg.couple.presets.is_empty() { vec![cfg.profile] } else { cfg.couple.presets.clone() };
    let n = cfg.run.n[0];
    let pool = pool(cfg)?;
    let seeds: Vec<(usize, u64)> = cfg.run.seeds.iter().copied().enumerate().collect();
    let obs = Observables::new(cfg.block_sites(n));
    let runs: Vec<(Preset, CoupledRun)> = pool
        .install(|| {
            seeds
                .par_iter()
                .map(|&(i, seed)| {
                    let preset = presets[i % presets.len()];
                    let mp = model(cfg, n, seed)?;
                    let init = sample_initial(&preset.signed_profile(), &mp, ProcessKind::BoundaryFrame)?;
                    let Configuration::Frame(f) = init else { unreachable!("frame kinds sample frame configurations") };
                    run_coupled(&f, &mp, &cfg.run.sample_times, &obs).map(|r| (preset, r))
                })
                .collect::<crate::Result<Vec<_>>>()
        })
        .map_err(HarnessError::Runtime)?;

    let mut report = Report::new("couple-check", cfg.hash(), cfg.run.seeds.clone());
    let mut files = Vec::new();
    let mut table = String::from("seed,preset,violations,d_xi_minus,d_xi_plus,d_zeta_minus,d_zeta_plus,min_slack,max_abs_offset,events\n");
    let (mut violations, mut final_bad, mut offset_bad, mut orphan_bad) = (0u64, 0usize, 0usize, 0usize);
    for ((_, seed), (preset, run)) in seeds.iter().zip(&runs) {
        let c = run.final_counters;
        violations += run.violations;
        final_bad += usize::from(!c.dominated());
        offset_bad += usize::from(run.max_abs_offset as u64 > c.xi_total());
        orphan_bad += usize::from(run.min_unreserved < 0);
        let _ = writeln!(
            table,
            "{seed},{},{},{},{},{},{},{},{},{}",
            preset.name().replace(',', ";"),
            run.violations,
            c.xi_minus,
            c.xi_plus,
            c.zeta_minus,
            c.zeta_plus,
            run.min_slack,
            run.max_abs_offset,
            run.events
        );
        files.push((format!("couple/seed_{seed}.csv"), run.counters_csv()));
    }
    files.push(("couple_summary.csv".into(), table));
    let names: Vec<String> = presets.iter().map(Preset::name).collect();
    report.check(
        "zero pathwise domination violations",
        violations == 0,
        format!("{violations} violations over {} runs (N={n}, T={}, presets {})", runs.len(), cfg.run.t, names.join(" ")),
    );
    report.check("final-time domination in every run", final_bad == 0, format!("{final_bad} runs fail"));
    report.check("|offset| bounded by single deaths", offset_bad == 0, format!("{offset_bad} runs fail"));
    report.check("uncoupled second-class particles covered", orphan_bad == 0, format!("{orphan_bad} runs fail"));
    if let Some((_, run)) = runs.first() {
        let pick = |f: fn(&crate::coupling::DeathCounters) -> u64| -> Vec<(f64, f64)> {
            run.samples.iter().map(|s| (s.time, f(&s.counters) as f64)).collect()
        };
        report.figures.push(Figure {
            name: "couple_counters".into(),
            title: format!("Death counters, seed {}", cfg.run.seeds[0]),
            x_label: "t".into(),
            y_label: "deaths".into(),
            log_x: false,
            log_y: false,
            series: vec![
                Series { label: "xi-".into(), points: pick(|c| c.xi_minus) },
                Series { label: "xi+".into(), points: pick(|c| c.xi_plus) },
                Series { label: "zeta-".into(), points: pick(|c| c.zeta_minus) },
                Series { label: "zeta+".into(), points: pick(|c| c.zeta_plus) },
            ],
        });
    }
    Ok(Study { report, files })
}
