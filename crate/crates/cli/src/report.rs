//! `reproduce`: full pipeline plus a measured-versus-target table.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use nanorbit_core::consts::{H, HBAR, PI};
use nanorbit_core::dispersion::{timescales, Timescales};
use nanorbit_core::fibermode::solve_he11;
use nanorbit_core::materials::default_cesium;
use nanorbit_core::potentials::{EffectivePotential, RadialGrid};
use nanorbit_core::probe::rate_direct;
use nanorbit_core::radial::solve_spectrum;
use nanorbit_core::wavepacket::build;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::error::{PipelineError, StageContext};
use crate::output::{write_json, write_text};
use crate::pipeline::{Pipeline, Request, Run, Stage};

/// Number of acceptance criteria covered by the report.
pub const CRITERIA: u8 = 14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub criterion: u8,
    pub check: String,
    pub measured: String,
    pub target: String,
    pub tolerance: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config_hash: String,
    pub rows: Vec<Row>,
    #[serde(skip)]
    pub runtime_s: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Pass/fail per criterion, `1..=CRITERIA`.
    pub fn criteria(&self) -> Vec<(u8, bool, Vec<&Row>)> {
        (1..=CRITERIA)
            .map(|c| {
                let rows: Vec<&Row> = self.rows.iter().filter(|r| r.criterion == c).collect();
                let pass = !rows.is_empty() && rows.iter().all(|r| r.pass);
                (c, pass, rows)
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let w = self.rows.iter().map(|r| r.check.chars().count()).max().unwrap_or(5).max(5);
        let mw = self.rows.iter().map(|r| r.measured.chars().count()).max().unwrap_or(8).max(8);
        let tw = self.rows.iter().map(|r| r.target.chars().count()).max().unwrap_or(6).max(6);
        let mut s = String::new();
        let _ = writeln!(s, "{:>3}  {:<w$}  {:<mw$}  {:<tw$}  {:<14}  result", "#", "check", "measured", "target", "tolerance");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>3}  {:<w$}  {:<mw$}  {:<tw$}  {:<14}  {}",
                r.criterion,
                r.check,
                r.measured,
                r.target,
                r.tolerance,
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        let failed = self.rows.iter().filter(|r| !r.pass).count();
        let _ = writeln!(s, "{} rows, {} failed", self.rows.len(), failed);
        s
    }

    fn csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["criterion", "check", "measured", "target", "tolerance", "pass"])?;
        for r in &self.rows {
            w.write_record([&r.criterion.to_string(), &r.check, &r.measured, &r.target, &r.tolerance, &r.pass.to_string()])?;
        }
        Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields"))
    }
}

struct Rows(Vec<Row>);

impl Rows {
    fn push(&mut self, criterion: u8, check: &str, measured: String, target: &str, tolerance: &str, pass: bool) {
        self.0.push(Row {
            criterion,
            check: check.into(),
            measured,
            target: target.into(),
            tolerance: tolerance.into(),
            pass,
        });
    }

    fn missing(&mut self, criterion: u8, check: &str, target: &str, tolerance: &str) {
        self.push(criterion, check, "not available".into(), target, tolerance, false);
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Runs every stage with `config` in `out_dir`, checks each criterion and
/// writes `report.csv` / `report.json`.
pub fn reproduce(config: &Config, out_dir: &Path, threads: Option<usize>) -> Result<Report, PipelineError> {
    let started = Instant::now();
    let pipeline = Pipeline::new(config.clone(), out_dir).with_threads(threads);
    let run = pipeline.run(&Request::all())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| PipelineError::Config {
            key: "--threads".into(),
            message: e.to_string(),
        })?;
    let mut rows = Rows(Vec::new());
    pool.install(|| -> Result<(), PipelineError> {
        eigensolver_checks(&mut rows);
        mode_checks(&mut rows, &run);
        dispersion_checks(&mut rows, &run);
        timescale_checks(&mut rows, &run);
        packet_checks(&mut rows, config, &run)?;
        probe_checks(&mut rows, &run);
        Ok(())
    })?;
    determinism_check(&mut rows, &pipeline, &run)?;

    let report = Report {
        config_hash: run.manifest.config_hash.clone(),
        rows: rows.0,
        runtime_s: started.elapsed().as_secs_f64(),
    };
    let text = report.csv().map_err(|e| PipelineError::format(out_dir.join("report.csv"))(e.to_string()))?;
    write_text(out_dir, "report.csv", &text)?;
    write_json(out_dir, "report.json", &report)?;
    Ok(report)
}

fn eigensolver_checks(rows: &mut Rows) {
    let mass = default_cesium().mass;
    let results: Vec<(f64, bool)> = [20e3, 75e3, 150e3, 300e3, 400e3]
        .par_iter()
        .map(|&f| {
            let omega = 2.0 * PI * f;
            let sigma = (HBAR / (mass * omega)).sqrt();
            let r0 = 1.5e-6;
            let Ok(grid) = RadialGrid::new(r0 - 12.0 * sigma, r0 + 12.0 * sigma, 20_000) else {
                return (f64::INFINITY, false);
            };
            let values = grid.points().map(|r| 0.5 * mass * omega * omega * (r - r0).powi(2)).collect();
            let Ok(states) = EffectivePotential::confined(mass, grid, values).and_then(|p| solve_spectrum(&p, 4)) else {
                return (f64::INFINITY, false);
            };
            let err = states
                .iter()
                .enumerate()
                .map(|(k, s)| rel(s.energy, (k as f64 + 0.5) * HBAR * omega))
                .fold(0.0, f64::max);
            let nodes = states.iter().enumerate().all(|(k, s)| s.node_count() == k);
            (err, nodes)
        })
        .collect();
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    rows.push(1, "harmonic levels 1-4, 5 frequencies", format!("{worst:.2e}"), "(nu-1/2) hbar omega", "<= 1e-5 rel", worst <= 1e-5);

    let n = 4000;
    let square = RadialGrid::new(300e-9, 500e-9, n)
        .and_then(|g| EffectivePotential::confined(mass, g, vec![0.0; n]))
        .and_then(|p| solve_spectrum(&p, 3));
    match square {
        Ok(states) => {
            let width = (n + 1) as f64 * states[0].grid.spacing();
            let e1 = PI * PI * HBAR * HBAR / (2.0 * mass * width * width);
            let err = rel(states[0].energy, e1);
            rows.push(1, "square-well ground state", format!("{err:.2e}"), "pi^2 hbar^2/(2 M L^2)", "<= 1e-6 rel", err <= 1e-6);
            let nodes_ok = results.iter().all(|r| r.1) && states.iter().enumerate().all(|(k, s)| s.node_count() == k);
            let counts: Vec<String> = states.iter().map(|s| s.node_count().to_string()).collect();
            rows.push(1, "node counts", format!("square well {}", counts.join(",")), "nu - 1", "exact", nodes_ok);
        }
        Err(_) => {
            rows.missing(1, "square-well ground state", "pi^2 hbar^2/(2 M L^2)", "<= 1e-6 rel");
            rows.missing(1, "node counts", "nu - 1", "exact");
        }
    }
}

fn mode_checks(rows: &mut Rows, run: &Run) {
    let mode = &run.setup.mode;
    let residual = mode.dispersion_residual().abs();
    rows.push(2, "HE11 dispersion residual", format!("{residual:.2e}"), "0", "<= 1e-10", residual <= 1e-10);
    rows.push(
        2,
        "V-number, single mode",
        format!("{:.4}, {}", mode.v_number, if mode.single_mode { "single" } else { "multi" }),
        "1.24, single",
        "+-0.01",
        (mode.v_number - 1.24).abs() <= 0.01 && mode.single_mode,
    );
    match &run.trap_mode {
        Some(m) => {
            let err = rel(m.power_integral_w, m.power_w);
            rows.push(2, "power self-integral", format!("{err:.2e}"), "P", "<= 1e-6 rel", err <= 1e-6);
        }
        None => rows.missing(2, "power self-integral", "P", "<= 1e-6 rel"),
    }
}

fn dispersion_checks(rows: &mut Rows, run: &Run) {
    let (Some(table), Some(summary)) = (&run.table, &run.dispersion) else {
        rows.missing(3, "trapping window", "430..530", "+-15, contiguous");
        rows.missing(4, "E_m increasing", "> 0", "bound window");
        rows.missing(4, "second difference negative", "< 0", "bound window");
        rows.missing(5, "E1/h at m0", "214 kHz", "+-20%");
        rows.missing(5, "|E2|/h at m0", "2.52 kHz", "+-30%");
        return;
    };
    match table.m_window() {
        Some((lo, hi)) => rows.push(
            3,
            "trapping window",
            format!("{lo}..{hi}{}", if table.is_contiguous() { "" } else { " (gaps)" }),
            "430..530",
            "+-15, contiguous",
            table.is_contiguous() && (lo - 430).abs() <= 15 && (hi - 530).abs() <= 15,
        ),
        None => rows.missing(3, "trapping window", "430..530", "+-15, contiguous"),
    }
    match table.bound_window() {
        Some((lo, hi)) => {
            let first = table.first_differences(lo..=hi).unwrap_or_default();
            let second = table.second_differences(lo..=hi).unwrap_or_default();
            let bad1 = first.iter().filter(|d| d.1 <= 0.0).count();
            let bad2 = second.iter().filter(|d| d.1 >= 0.0).count();
            rows.push(
                4,
                "E_m increasing",
                format!("{} of {} steps > 0 on {lo}..{hi}", first.len() - bad1, first.len()),
                "all > 0",
                "bound window",
                !first.is_empty() && bad1 == 0,
            );
            rows.push(
                4,
                "second difference negative",
                format!("{} of {} < 0 on {lo}..{hi}", second.len() - bad2, second.len()),
                "all < 0",
                "bound window",
                !second.is_empty() && bad2 == 0,
            );
        }
        None => {
            rows.missing(4, "E_m increasing", "all > 0", "bound window");
            rows.missing(4, "second difference negative", "all < 0", "bound window");
        }
    }
    match (summary.e1_over_h_hz, summary.e2_over_h_hz) {
        (Some(e1), Some(e2)) => {
            rows.push(5, "E1/h at m0", format!("{:.2} kHz", e1 / 1e3), "214 kHz", "+-20%", rel(e1, 214e3) <= 0.2);
            rows.push(5, "|E2|/h at m0", format!("{:.3} kHz", e2.abs() / 1e3), "2.52 kHz", "+-30%", rel(e2.abs(), 2.52e3) <= 0.3);
        }
        _ => {
            rows.missing(5, "E1/h at m0", "214 kHz", "+-20%");
            rows.missing(5, "|E2|/h at m0", "2.52 kHz", "+-30%");
        }
    }
}

fn identity_error(ts: &Timescales) -> f64 {
    let mut err = rel(ts.t_rot / ts.t_osc_sca, 2.0);
    if let (Some(rev), Some(resume)) = (ts.t_rev, ts.t_resume_sca) {
        err = err.max(rel(rev / resume, 4.0));
    }
    if let (Some(coll), Some(fall)) = (ts.t_coll, ts.t_fall_sca) {
        err = err.max(rel(coll / fall, 4.0 / PI.sqrt()));
    }
    err
}

fn timescale_checks(rows: &mut Rows, run: &Run) {
    let Some(ts) = &run.timescales else {
        rows.missing(6, "timescale identities", "2, 4, 4/sqrt(pi)", "<= 1e-12 rel");
        rows.missing(7, "formula self-consistency", "exact", "<= 1e-12 rel");
        rows.missing(7, "T_rot target 4.67 us", "4.67 us", "E1 +-20%");
        rows.missing(7, "T_coll target 37.3 us", "37.3 us", "E2 +-30%");
        rows.missing(7, "T_rev target 794 us", "794 us", "E2 +-30%");
        return;
    };
    let mut worst = identity_error(ts);
    for (e1, e2, dm) in [(1e-29, -3e-31, 2.0), (7.3e-28, 4.1e-33, 11.5), (H * 1e5, -H * 1e3, 6.0), (3e-30, -9e-30, 0.5)] {
        if let Ok(t) = timescales(e1, e2, dm) {
            worst = worst.max(identity_error(&t));
        } else {
            worst = f64::INFINITY;
        }
    }
    rows.push(6, "timescale identities", format!("{worst:.1e}"), "2, 4, 4/sqrt(pi)", "<= 1e-12 rel", worst <= 1e-12);

    let (Some(coll), Some(rev)) = (ts.t_coll, ts.t_rev) else {
        rows.missing(7, "formula self-consistency", "exact", "<= 1e-12 rel");
        rows.missing(7, "T_rot target 4.67 us", "4.67 us", "E1 +-20%");
        rows.missing(7, "T_coll target 37.3 us", "37.3 us", "E2 +-30%");
        rows.missing(7, "T_rev target 794 us", "794 us", "E2 +-30%");
        return;
    };
    let consistency = rel(ts.t_rot, 2.0 * PI * HBAR / ts.e1)
        .max(rel(coll, 2.0 * PI.sqrt() * HBAR / (ts.e2.abs() * ts.delta_m)))
        .max(rel(rev, 4.0 * PI * HBAR / ts.e2.abs()));
    rows.push(7, "formula self-consistency", format!("{consistency:.1e}"), "exact", "<= 1e-12 rel", consistency <= 1e-12);
    // A relative error e on E maps to [1/(1+e), 1/(1-e)] on the time.
    let within = |t: f64, target: f64, e: f64| t >= target / (1.0 + e) && t <= target / (1.0 - e);
    rows.push(7, "T_rot target 4.67 us", format!("{:.3} us", ts.t_rot * 1e6), "4.67 us", "E1 +-20%", within(ts.t_rot, 4.67e-6, 0.2));
    rows.push(7, "T_coll target 37.3 us", format!("{:.2} us", coll * 1e6), "37.3 us", "E2 +-30%", within(coll, 37.3e-6, 0.3));
    rows.push(7, "T_rev target 794 us", format!("{:.1} us", rev * 1e6), "794 us", "E2 +-30%", within(rev, 794e-6, 0.3));
}

fn packet_checks(rows: &mut Rows, config: &Config, run: &Run) -> Result<(), PipelineError> {
    let (Some(table), Some(ts), Some(evolve)) = (&run.table, &run.timescales, &run.evolve) else {
        rows.missing(8, "norm drift over [0, T_rev]", "0", "<= 1e-6");
        rows.missing(9, "azimuthal peaks 0, 1/8, 1/4, 1/2, 1 T_rev", "1,4,2,1,1", "exact");
        rows.missing(10, "series vs 2D quadrature", "equal", "<= 1e-3 rel");
        return Ok(());
    };
    let p = &config.packet;
    let wp = build(table, p.m0, p.delta_m, p.m_min, p.m_max).stage(Stage::Evolve)?;
    let t_rev = ts.t_rev.unwrap_or(0.0);
    let n = &config.numerics;

    let grid = wp.polar_grid(n.polar_radial_nodes, n.polar_azimuthal_nodes).stage(Stage::Evolve)?;
    let drift = (0..50)
        .into_par_iter()
        .map(|k| wp.evolve(t_rev * k as f64 / 49.0, &grid).map(|s| (s.norm() - 1.0).abs()))
        .collect::<nanorbit_core::Result<Vec<_>>>()
        .stage(Stage::Evolve)?
        .into_iter()
        .fold(0.0, f64::max);
    rows.push(8, "norm drift over [0, T_rev]", format!("{drift:.1e}"), "0", "<= 1e-6, 50 times", drift <= 1e-6);

    let count = |label: &str| evolve.snapshots.iter().find(|s| s.label == label).map(|s| s.peaks);
    let labels = ["0", "T_rev/8", "T_rev/4", "T_rev/2", "T_rev refined"];
    let counts: Option<Vec<usize>> = labels.iter().map(|l| count(l)).collect();
    match counts {
        Some(c) => {
            let text: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            let analytic = count("T_rev").map_or("-".into(), |v| v.to_string());
            rows.push(
                9,
                "azimuthal peaks 0, 1/8, 1/4, 1/2, 1 T_rev",
                format!("{} (at 4 pi hbar/|E2|: {analytic})", text.join(",")),
                "1,4,2,1,1",
                "exact",
                c == [1, 4, 2, 1, 1],
            );
        }
        None => rows.missing(9, "azimuthal peaks 0, 1/8, 1/4, 1/2, 1 T_rev", "1,4,2,1,1", "exact"),
    }

    let probe_mode = solve_he11(&config.fiber(), config.atom.probe_wavelength_m).stage(Stage::Probe)?;
    match &run.coefficients {
        Some(coeff) => {
            let fine = wp.polar_grid(4000, 256).stage(Stage::Probe)?;
            let worst = (0..20)
                .into_par_iter()
                .map(|k| {
                    let t = t_rev * k as f64 / 19.0;
                    rate_direct(&wp, &probe_mode, 0.0, t, &fine).map(|d| rel(coeff.rate(t, 0.0), d))
                })
                .collect::<nanorbit_core::Result<Vec<_>>>()
                .stage(Stage::Probe)?
                .into_iter()
                .fold(0.0, f64::max);
            rows.push(10, "series vs 2D quadrature", format!("{worst:.1e}"), "equal", "<= 1e-3 rel, 20 times", worst <= 1e-3);
        }
        None => rows.missing(10, "series vs 2D quadrature", "equal", "<= 1e-3 rel"),
    }
    Ok(())
}

fn probe_checks(rows: &mut Rows, run: &Run) {
    let resumption_names = ["resumption at T_rev/4", "resumption at T_rev/2", "resumption at 3T_rev/4", "resumption at T_rev"];
    let (Some(ts), Some(a), Some(summary)) = (&run.timescales, &run.analysis, &run.probe) else {
        rows.missing(11, "T_osc = T_rot/2", "T_rot/2", "+-2%");
        rows.missing(11, "falloff below 1/e", "< 2 T_fall", "");
        for name in resumption_names {
            rows.missing(11, name, "k T_rev/4", "+-5%");
        }
        rows.missing(12, "initial visibility", "0.40", "+-0.10");
        rows.missing(12, "revival visibility / initial", "1/3", "+-0.15");
        rows.missing(13, "modulation at T_rev/8", "0", "<= 0.02 B");
        return;
    };
    let expected = ts.t_osc_sca;
    let dev = a.t_osc / expected - 1.0;
    rows.push(
        11,
        "T_osc = T_rot/2",
        format!("{:.3} us ({:+.2}%)", a.t_osc * 1e6, dev * 100.0),
        &format!("{:.3} us", expected * 1e6),
        "+-2%",
        dev.abs() <= 0.02,
    );
    match (a.t_fall, ts.t_fall_sca) {
        (Some(fall), Some(t_fall)) => rows.push(
            11,
            "falloff below 1/e",
            format!("{:.2} us", fall * 1e6),
            &format!("< 2 T_fall = {:.2} us", 2.0 * t_fall * 1e6),
            "",
            fall < 2.0 * t_fall,
        ),
        _ => rows.missing(11, "falloff below 1/e", "< 2 T_fall", ""),
    }
    let t_rev = ts.t_rev.unwrap_or(f64::NAN);
    for (k, name) in resumption_names.iter().enumerate() {
        let target = (k + 1) as f64 * t_rev / 4.0;
        let nearest = a
            .resumption_times
            .iter()
            .copied()
            .min_by(|x, y| (x - target).abs().total_cmp(&(y - target).abs()));
        match nearest {
            Some(t) => rows.push(
                11,
                name,
                format!("{:.1} us ({:+.1}%)", t * 1e6, (t / target - 1.0) * 100.0),
                &format!("{:.1} us", target * 1e6),
                "+-5%",
                rel(t, target) <= 0.05,
            ),
            None => rows.missing(11, name, &format!("{:.1} us", target * 1e6), "+-5%"),
        }
    }
    rows.push(
        12,
        "initial visibility",
        format!("{:.3}", a.visibility_initial),
        "0.40",
        "+-0.10",
        (a.visibility_initial - 0.40).abs() <= 0.10,
    );
    match a.visibility_at_rev {
        Some(v) => {
            let ratio = v / a.visibility_initial;
            rows.push(12, "revival visibility / initial", format!("{ratio:.3}"), "1/3", "+-0.15", (ratio - 1.0 / 3.0).abs() <= 0.15);
        }
        None => rows.missing(12, "revival visibility / initial", "1/3", "+-0.15"),
    }
    match summary.modulation_at_eighth_revival {
        Some(m) => rows.push(13, "modulation at T_rev/8", format!("{m:.1e} B"), "0", "<= 0.02 B", m <= 0.02),
        None => rows.missing(13, "modulation at T_rev/8", "0", "<= 0.02 B"),
    }
}

/// Reruns the pipeline into a fresh directory and compares every output.
fn determinism_check(rows: &mut Rows, pipeline: &Pipeline, run: &Run) -> Result<(), PipelineError> {
    let check_dir = pipeline.out_dir.join("determinism-check");
    if check_dir.exists() {
        std::fs::remove_dir_all(&check_dir).map_err(PipelineError::io(&check_dir))?;
    }
    let second = Pipeline::new(pipeline.config.clone(), &check_dir)
        .with_threads(pipeline.threads)
        .run(&Request::all())?;
    let mut files: Vec<&str> = run.manifest.outputs.values().flatten().map(String::as_str).collect();
    files.extend(["manifest.json", run.manifest.config_file.as_str()]);
    let mut differing = Vec::new();
    for name in &files {
        let a = std::fs::read(pipeline.out_dir.join(name)).map_err(PipelineError::io(pipeline.out_dir.join(name)))?;
        let b = std::fs::read(check_dir.join(name)).map_err(PipelineError::io(check_dir.join(name)))?;
        if a != b {
            differing.push(*name);
        }
    }
    let same_manifest = second.manifest == run.manifest;
    std::fs::remove_dir_all(&check_dir).map_err(PipelineError::io(&check_dir))?;
    rows.push(
        14,
        "repeat run byte-identical",
        if differing.is_empty() {
            format!("{} files identical", files.len())
        } else {
            format!("differs: {}", differing.join(", "))
        },
        "identical",
        "exact",
        differing.is_empty() && same_manifest,
    );
    Ok(())
}
