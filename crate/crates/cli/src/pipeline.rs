//! Stage orchestration: mode → potential → dispersion → evolve → probe.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nanorbit_core::consts::H;
use nanorbit_core::dispersion::{timescales, DispersionTable, Timescales, TrapSetup};
use nanorbit_core::fibermode::{solve_he11, FiberMode};
use nanorbit_core::potentials::Well;
use nanorbit_core::probe::{
    analyze, coefficients, modulation_amplitude, rolling_visibility, uniform_times, OverlapCoefficients,
    ScatterAnalysis, ScatterTrace,
};
use nanorbit_core::radial::solve_spectrum;
use nanorbit_core::wavepacket::{build, count_peaks_periodic, WavePacket};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache;
use crate::config::Config;
use crate::error::{PipelineError, StageContext};
use crate::output::{write_json, write_table, write_text, Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Mode,
    Potential,
    Dispersion,
    Evolve,
    Probe,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Mode, Stage::Potential, Stage::Dispersion, Stage::Evolve, Stage::Probe];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mode => "mode",
            Self::Potential => "potential",
            Self::Dispersion => "dispersion",
            Self::Evolve => "evolve",
            Self::Probe => "probe",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Request {
    pub stages: BTreeSet<Stage>,
    /// `m` for the potential stage; the packet centre when absent.
    pub potential_m: Option<i64>,
}

impl Request {
    pub fn new(stages: impl IntoIterator<Item = Stage>) -> Self {
        Self {
            stages: stages.into_iter().collect(),
            potential_m: None,
        }
    }

    pub fn all() -> Self {
        Self::new(Stage::ALL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub stages: Vec<Stage>,
    /// Files written by each stage, relative to the output directory.
    pub outputs: BTreeMap<Stage, Vec<String>>,
    pub config_file: String,
    /// Wall times and cache use.
    pub timings_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Seconds per stage.
    pub stages: BTreeMap<Stage, f64>,
    pub total_s: f64,
    pub dispersion_cache: Option<CacheUse>,
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheUse {
    Hit,
    Stored,
    NotStored,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub wavelength_m: f64,
    pub beta_per_m: f64,
    pub effective_index: f64,
    pub h_per_m: f64,
    pub q_per_m: f64,
    pub v_number: f64,
    pub single_mode: bool,
    pub dispersion_residual: f64,
    pub power_w: f64,
    pub power_integral_w: f64,
}

fn mode_summary(mode: &FiberMode) -> nanorbit_core::Result<ModeSummary> {
    Ok(ModeSummary {
        wavelength_m: mode.wavelength,
        beta_per_m: mode.beta,
        effective_index: mode.effective_index(),
        h_per_m: mode.h,
        q_per_m: mode.q,
        v_number: mode.v_number,
        single_mode: mode.single_mode,
        dispersion_residual: mode.dispersion_residual(),
        power_w: mode.power,
        power_integral_w: mode.power_integral(4000)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimescaleSummary {
    pub t_rot_s: f64,
    pub t_coll_s: Option<f64>,
    pub t_rev_s: Option<f64>,
    pub t_osc_sca_s: f64,
    pub t_fall_sca_s: Option<f64>,
    pub t_resume_sca_s: Option<f64>,
    pub t_rot_us: f64,
    pub t_coll_us: Option<f64>,
    pub t_rev_us: Option<f64>,
    pub t_osc_sca_us: f64,
    pub t_fall_sca_us: Option<f64>,
    pub t_resume_sca_us: Option<f64>,
}

impl From<&Timescales> for TimescaleSummary {
    fn from(ts: &Timescales) -> Self {
        let us = |t: f64| t * 1e6;
        Self {
            t_rot_s: ts.t_rot,
            t_coll_s: ts.t_coll,
            t_rev_s: ts.t_rev,
            t_osc_sca_s: ts.t_osc_sca,
            t_fall_sca_s: ts.t_fall_sca,
            t_resume_sca_s: ts.t_resume_sca,
            t_rot_us: us(ts.t_rot),
            t_coll_us: ts.t_coll.map(us),
            t_rev_us: ts.t_rev.map(us),
            t_osc_sca_us: us(ts.t_osc_sca),
            t_fall_sca_us: ts.t_fall_sca.map(us),
            t_resume_sca_us: ts.t_resume_sca.map(us),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionSummary {
    pub m_range: (i64, i64),
    pub window: Option<(i64, i64)>,
    pub contiguous: bool,
    pub bound_window: Option<(i64, i64)>,
    /// Solver failures by `m`.
    pub failures: BTreeMap<i64, String>,
    pub m0: i64,
    pub e1_j: Option<f64>,
    pub e2_j: Option<f64>,
    pub e1_over_h_hz: Option<f64>,
    pub e2_over_h_hz: Option<f64>,
    pub delta_m: f64,
    pub timescales: Option<TimescaleSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotSummary {
    pub label: String,
    pub t_s: f64,
    pub t_us: f64,
    pub file: String,
    pub norm: f64,
    pub marginal_norm: f64,
    pub peaks: usize,
    pub mean_angle_rad: f64,
    pub mean_resultant: f64,
    pub autocorrelation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveSummary {
    pub m0: i64,
    pub delta_m: f64,
    pub packet_window: (i64, i64),
    pub t_rev_s: Option<f64>,
    /// Autocorrelation maximum near `T_rev`.
    pub t_rev_refined_s: Option<f64>,
    pub peak_threshold: f64,
    pub snapshots: Vec<SnapshotSummary>,
    pub marginals_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSummary {
    pub t_osc_s: f64,
    pub t_osc_us: f64,
    pub visibility_initial: f64,
    pub t_fall_s: Option<f64>,
    pub resumption_times_s: Vec<f64>,
    pub resumption_times_us: Vec<f64>,
    pub resumed_periods_s: Vec<Option<f64>>,
    pub visibility_at_rev: Option<f64>,
}

impl From<&ScatterAnalysis> for AnalysisSummary {
    fn from(a: &ScatterAnalysis) -> Self {
        Self {
            t_osc_s: a.t_osc,
            t_osc_us: a.t_osc * 1e6,
            visibility_initial: a.visibility_initial,
            t_fall_s: a.t_fall,
            resumption_times_s: a.resumption_times.clone(),
            resumption_times_us: a.resumption_times.iter().map(|t| t * 1e6).collect(),
            resumed_periods_s: a.resumed_periods.clone(),
            visibility_at_rev: a.visibility_at_rev,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSummary {
    pub axis_angle_rad: f64,
    pub t_max_s: f64,
    pub dt_s: f64,
    pub samples: usize,
    /// Static term `B` of the rate.
    pub static_term: f64,
    pub modulation_ratio: f64,
    /// Half the peak-to-peak `γ/B` over one `T_osc` centred at `T_rev/8`.
    pub modulation_at_eighth_revival: Option<f64>,
    pub analysis: Option<AnalysisSummary>,
    pub analysis_error: Option<String>,
}

/// In-memory results of a run, alongside the files it wrote.
#[derive(Debug, Clone)]
pub struct Run {
    pub manifest: RunManifest,
    pub timings: Timings,
    pub setup: TrapSetup,
    pub trap_mode: Option<ModeSummary>,
    pub probe_mode: Option<ModeSummary>,
    pub table: Option<DispersionTable>,
    pub dispersion: Option<DispersionSummary>,
    pub timescales: Option<Timescales>,
    pub evolve: Option<EvolveSummary>,
    pub coefficients: Option<OverlapCoefficients>,
    pub trace: Option<ScatterTrace>,
    pub analysis: Option<ScatterAnalysis>,
    pub probe: Option<ProbeSummary>,
}

/// Pipeline bound to a config, an output directory and a thread count.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: Config,
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses all cores.
    pub threads: Option<usize>,
}

/// Runs `stages` with `config`, writing into `out_dir`.
pub fn run_pipeline(config: &Config, out_dir: &Path, stages: &[Stage]) -> Result<RunManifest, PipelineError> {
    let pipeline = Pipeline::new(config.clone(), out_dir);
    Ok(pipeline.run(&Request::new(stages.iter().copied()))?.manifest)
}

impl Pipeline {
    pub fn new(config: Config, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            config,
            out_dir: out_dir.into(),
            threads: None,
        }
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    fn pool(&self) -> Result<rayon::ThreadPool, PipelineError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads.unwrap_or(0))
            .build()
            .map_err(|e| PipelineError::Config {
                key: "--threads".into(),
                message: e.to_string(),
            })
    }

    pub fn run(&self, request: &Request) -> Result<Run, PipelineError> {
        self.config.validate()?;
        if request.stages.is_empty() {
            return Err(PipelineError::Config {
                key: "stages".into(),
                message: "no stage requested".into(),
            });
        }
        let hash = self.config.dispersion_hash();
        let needs_table = request.stages.contains(&Stage::Evolve) || request.stages.contains(&Stage::Probe);
        let cached = if needs_table && !request.stages.contains(&Stage::Dispersion) {
            let dependent = if request.stages.contains(&Stage::Evolve) { Stage::Evolve } else { Stage::Probe };
            Some(cache::load(&self.out_dir, &hash)?.ok_or(PipelineError::StageDependency {
                stage: dependent,
                requires: Stage::Dispersion,
            })?)
        } else {
            None
        };
        let pool = self.pool()?;
        let threads = pool.current_num_threads();
        pool.install(|| self.run_stages(request, hash, cached, threads))
    }

    fn run_stages(
        &self,
        request: &Request,
        hash: String,
        cached: Option<DispersionTable>,
        threads: usize,
    ) -> Result<Run, PipelineError> {
        let started = Instant::now();
        let config = &self.config;
        let out = self.out_dir.as_path();
        std::fs::create_dir_all(out).map_err(PipelineError::io(out))?;
        let first = *request.stages.iter().next().expect("non-empty");
        let setup = TrapSetup::new(config.trap_params()).stage(first)?;

        let mut outputs: BTreeMap<Stage, Vec<String>> = BTreeMap::new();
        let mut timings = BTreeMap::new();
        let mut run = Run {
            manifest: RunManifest {
                config_hash: hash.clone(),
                stages: request.stages.iter().copied().collect(),
                outputs: BTreeMap::new(),
                config_file: String::new(),
                timings_file: String::new(),
            },
            timings: Timings {
                stages: BTreeMap::new(),
                total_s: 0.0,
                dispersion_cache: None,
                threads,
            },
            setup,
            trap_mode: None,
            probe_mode: None,
            table: cached,
            dispersion: None,
            timescales: None,
            evolve: None,
            coefficients: None,
            trace: None,
            analysis: None,
            probe: None,
        };
        if run.table.is_some() {
            run.timings.dispersion_cache = Some(CacheUse::Hit);
        }

        for &stage in &request.stages {
            let t0 = Instant::now();
            let files = match stage {
                Stage::Mode => self.mode_stage(&mut run)?,
                Stage::Potential => self.potential_stage(&run, request.potential_m.unwrap_or(config.packet.m0))?,
                Stage::Dispersion => self.dispersion_stage(&mut run, &hash)?,
                Stage::Evolve => self.evolve_stage(&mut run)?,
                Stage::Probe => self.probe_stage(&mut run)?,
            };
            outputs.insert(stage, files);
            timings.insert(stage, t0.elapsed().as_secs_f64());
        }

        run.manifest.outputs = outputs;
        run.manifest.config_file = write_text(out, "config.txt", &config.serialize())?;
        run.manifest.timings_file = "timings.json".into();
        write_json(out, "manifest.json", &run.manifest)?;
        run.timings.stages = timings;
        run.timings.total_s = started.elapsed().as_secs_f64();
        write_json(out, "timings.json", &run.timings)?;
        Ok(run)
    }

    fn mode_stage(&self, run: &mut Run) -> Result<Vec<String>, PipelineError> {
        let config = &self.config;
        let trap = run.setup.mode.power_normalize(config.fiber.trap_power_w).stage(Stage::Mode)?;
        let probe = solve_he11(&config.fiber(), config.atom.probe_wavelength_m).stage(Stage::Mode)?;
        let r_max = config.fiber.radius_m + config.numerics.r_span_m;
        let n = 2000;
        let mut table = Table::new(["r_m", "er2_V2_per_m2", "ephi2_V2_per_m2", "ez2_V2_per_m2"]);
        for i in 0..=n {
            let r = r_max * i as f64 / n as f64;
            let p = trap.profile(r);
            table.push(vec![r.into(), (p.er * p.er).into(), (p.ephi * p.ephi).into(), (p.ez * p.ez).into()]);
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            trap: &'a ModeSummary,
            probe: &'a ModeSummary,
        }
        let trap_summary = mode_summary(&trap).stage(Stage::Mode)?;
        let probe_summary = mode_summary(&probe).stage(Stage::Mode)?;
        let files = vec![
            write_table(&self.out_dir, "mode", &table, config.output.format)?,
            write_json(
                &self.out_dir,
                "mode.json",
                &Doc {
                    trap: &trap_summary,
                    probe: &probe_summary,
                },
            )?,
        ];
        run.trap_mode = Some(trap_summary);
        run.probe_mode = Some(probe_summary);
        Ok(files)
    }

    fn potential_stage(&self, run: &Run, m: i64) -> Result<Vec<String>, PipelineError> {
        if !(1..=nanorbit_core::dispersion::M_LIMIT).contains(&m) {
            return Err(PipelineError::Config {
                key: "--m".into(),
                message: format!("m must lie in [1, 2000], got {m}"),
            });
        }
        let trap = &run.setup.trap;
        let pot = trap.effective(m);
        let mut table = Table::new(["r_m", "U_cf_J", "U_opt_J", "U_vdw_J", "U_eff_J"]);
        for (i, r) in trap.grid.points().enumerate() {
            table.push(vec![
                r.into(),
                trap.centrifugal(m, i).into(),
                trap.optical[i].into(),
                trap.vdw[i].into(),
                pot.values[i].into(),
            ]);
        }
        #[derive(Serialize)]
        struct Doc {
            m: i64,
            well: Option<Well>,
        }
        Ok(vec![
            write_table(&self.out_dir, &format!("potential_m{m}"), &table, self.config.output.format)?,
            write_json(&self.out_dir, &format!("potential_m{m}.json"), &Doc { m, well: pot.well })?,
        ])
    }

    fn dispersion_stage(&self, run: &mut Run, hash: &str) -> Result<Vec<String>, PipelineError> {
        let config = &self.config;
        let (lo, hi) = (config.numerics.m_scan_min, config.numerics.m_scan_max);
        let table = match cache::load(&self.out_dir, hash)? {
            Some(table) => {
                run.timings.dispersion_cache = Some(CacheUse::Hit);
                table
            }
            None => {
                let setup = &run.setup;
                let results: Vec<_> = (lo..=hi).into_par_iter().map(|m| (m, setup.solve_entry(m))).collect();
                let table = DispersionTable::assemble(lo, hi, results).stage(Stage::Dispersion)?;
                run.timings.dispersion_cache = Some(match cache::store(&self.out_dir, hash, &table)? {
                    Some(_) => CacheUse::Stored,
                    None => CacheUse::NotStored,
                });
                table
            }
        };

        let mut csv = Table::new(["m", "E_J", "E_over_h_Hz", "bound"]);
        for e in table.entries.values() {
            csv.push(vec![e.m.into(), e.energy.into(), (e.energy / H).into(), e.bound.into()]);
        }
        let p = &config.packet;
        let derivs = table.derivatives_at(p.m0).ok();
        let ts = derivs.and_then(|(e1, e2)| timescales(e1, e2, p.delta_m).ok());
        let summary = DispersionSummary {
            m_range: (lo, hi),
            window: table.m_window(),
            contiguous: table.is_contiguous(),
            bound_window: table.bound_window(),
            failures: table.failures.iter().map(|(m, e)| (*m, e.to_string())).collect(),
            m0: p.m0,
            e1_j: derivs.map(|d| d.0),
            e2_j: derivs.map(|d| d.1),
            e1_over_h_hz: derivs.map(|d| d.0 / H),
            e2_over_h_hz: derivs.map(|d| d.1 / H),
            delta_m: p.delta_m,
            timescales: ts.as_ref().map(TimescaleSummary::from),
        };
        let files = vec![
            write_table(&self.out_dir, "dispersion", &csv, config.output.format)?,
            write_json(&self.out_dir, "dispersion_summary.json", &summary)?,
        ];
        run.table = Some(table);
        run.dispersion = Some(summary);
        Ok(files)
    }

    fn packet<'a>(&self, table: &'a DispersionTable, stage: Stage) -> Result<(WavePacket<'a>, Timescales), PipelineError> {
        let p = &self.config.packet;
        let (e1, e2) = table.derivatives_at(p.m0).stage(stage)?;
        let ts = timescales(e1, e2, p.delta_m).stage(stage)?;
        let wp = build(table, p.m0, p.delta_m, p.m_min, p.m_max).stage(stage)?;
        Ok((wp, ts))
    }

    fn evolve_stage(&self, run: &mut Run) -> Result<Vec<String>, PipelineError> {
        let config = &self.config;
        let n = &config.numerics;
        let table = run.table.as_ref().expect("dispersion precedes evolve");
        let (wp, ts) = self.packet(table, Stage::Evolve)?;
        let refined = match ts.t_rev {
            Some(t_rev) => Some(wp.revival_time(t_rev, n.revival_search).stage(Stage::Evolve)?),
            None => None,
        };
        let times: Vec<(String, f64)> = if config.evolve.times_s.is_empty() {
            let (Some(t_rev), Some(refined)) = (ts.t_rev, refined) else {
                return Err(PipelineError::Config {
                    key: "evolve.times_s".into(),
                    message: "flat dispersion has no revival; list the times explicitly".into(),
                });
            };
            vec![
                ("0".into(), 0.0),
                ("T_rev/8".into(), t_rev / 8.0),
                ("T_rev/4".into(), t_rev / 4.0),
                ("T_rev/2".into(), t_rev / 2.0),
                ("T_rev".into(), t_rev),
                ("T_rev refined".into(), refined),
            ]
        } else {
            config.evolve.times_s.iter().map(|&t| (format!("{t:e} s"), t)).collect()
        };
        let grid = wp.polar_grid(n.polar_radial_nodes, n.polar_azimuthal_nodes).stage(Stage::Evolve)?;
        let snapshots = times
            .par_iter()
            .map(|(_, t)| wp.evolve(*t, &grid))
            .collect::<nanorbit_core::Result<Vec<_>>>()
            .stage(Stage::Evolve)?;

        let mut files = Vec::new();
        let mut summaries = Vec::new();
        let mut marginals = Table::new(
            std::iter::once("phi_rad".to_string()).chain((0..times.len()).map(|k| format!("P{k:02}_per_rad"))),
        );
        for (j, &phi) in grid.phi.iter().enumerate() {
            let mut row: Vec<Cell> = vec![phi.into()];
            row.extend(snapshots.iter().map(|s| Cell::from(s.marginal[j])));
            marginals.push(row);
        }
        let nphi = grid.phi.len();
        for (k, ((label, t), snap)) in times.iter().zip(&snapshots).enumerate() {
            let mut density = Table::new(["r_m", "phi_rad", "density_per_m2"]);
            for (i, &r) in grid.r.iter().enumerate() {
                for (j, &phi) in grid.phi.iter().enumerate() {
                    density.push(vec![r.into(), phi.into(), snap.density[i * nphi + j].into()]);
                }
            }
            let file = write_table(&self.out_dir, &format!("density_{k:02}"), &density, config.output.format)?;
            let (angle, resultant) = wp.circular_mean(*t).stage(Stage::Evolve)?;
            summaries.push(SnapshotSummary {
                label: label.clone(),
                t_s: *t,
                t_us: t * 1e6,
                file: file.clone(),
                norm: snap.norm(),
                marginal_norm: snap.marginal_norm(),
                peaks: count_peaks_periodic(&snap.marginal, n.peak_threshold).stage(Stage::Evolve)?,
                mean_angle_rad: angle,
                mean_resultant: resultant,
                autocorrelation: wp.autocorrelation(*t),
            });
            files.push(file);
        }
        let marginals_file = write_table(&self.out_dir, "marginals", &marginals, config.output.format)?;
        files.push(marginals_file.clone());
        let summary = EvolveSummary {
            m0: wp.m0,
            delta_m: wp.delta_m,
            packet_window: (wp.m_min, wp.m_max),
            t_rev_s: ts.t_rev,
            t_rev_refined_s: refined,
            peak_threshold: n.peak_threshold,
            snapshots: summaries,
            marginals_file,
        };
        files.push(write_json(&self.out_dir, "evolve_summary.json", &summary)?);
        run.timescales = Some(ts);
        run.evolve = Some(summary);
        Ok(files)
    }

    fn probe_stage(&self, run: &mut Run) -> Result<Vec<String>, PipelineError> {
        let config = &self.config;
        let table = run.table.as_ref().expect("dispersion precedes probe");
        let (wp, ts) = self.packet(table, Stage::Probe)?;
        let probe_mode = solve_he11(&config.fiber(), config.atom.probe_wavelength_m).stage(Stage::Probe)?;
        let coeff = coefficients(&wp, &probe_mode).stage(Stage::Probe)?;
        let t_max = if config.probe.t_max_s > 0.0 {
            config.probe.t_max_s
        } else {
            ts.t_rev.map(|t| 1.15 * t).ok_or_else(|| PipelineError::Config {
                key: "probe.t_max_s".into(),
                message: "flat dispersion has no revival; set the trace length explicitly".into(),
            })?
        };
        let dt = if config.probe.dt_s > 0.0 { config.probe.dt_s } else { ts.t_osc_sca / 40.0 };
        let theta = config.probe.axis_angle_rad;
        let times = uniform_times(t_max, dt).stage(Stage::Probe)?;
        let values: Vec<f64> = times.par_iter().map(|&t| coeff.rate(t, theta)).collect();
        let trace = ScatterTrace {
            times,
            values,
            analysis: None,
        };
        let (analysis, analysis_error) = match analyze(&trace, &ts) {
            Ok(a) => (Some(a), None),
            Err(e) => (None, Some(e.to_string())),
        };

        let mut csv = Table::new(["t_s", "t_us", "gamma_rel"]);
        for (&t, &v) in trace.times.iter().zip(&trace.values) {
            csv.push(vec![t.into(), (t * 1e6).into(), v.into()]);
        }
        let mut files = vec![write_table(&self.out_dir, "probe", &csv, config.output.format)?];
        if let Some(a) = &analysis {
            if let Ok(rolling) = rolling_visibility(&trace, 2.0 * a.t_osc) {
                let mut vis = Table::new(["t_center_s", "t_center_us", "visibility"]);
                for (c, v) in rolling {
                    vis.push(vec![c.into(), (c * 1e6).into(), v.into()]);
                }
                files.push(write_table(&self.out_dir, "probe_visibility", &vis, config.output.format)?);
            }
        }
        let summary = ProbeSummary {
            axis_angle_rad: theta,
            t_max_s: t_max,
            dt_s: dt,
            samples: trace.times.len(),
            static_term: coeff.b,
            modulation_ratio: coeff.modulation_ratio(),
            modulation_at_eighth_revival: ts
                .t_rev
                .map(|t_rev| modulation_amplitude(&coeff, t_rev / 8.0, ts.t_osc_sca, 400))
                .transpose()
                .stage(Stage::Probe)?,
            analysis: analysis.as_ref().map(AnalysisSummary::from),
            analysis_error,
        };
        files.push(write_json(&self.out_dir, "probe_summary.json", &summary)?);
        run.timescales = Some(ts);
        run.coefficients = Some(coeff);
        run.trace = Some(trace);
        run.analysis = analysis;
        run.probe = Some(summary);
        Ok(files)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenLevel {
    pub nu: usize,
    pub energy_j: f64,
    pub energy_over_h_hz: f64,
    pub nodes: usize,
}

/// Lowest `count` radial states for one `m`; returns the files written.
pub fn run_eigen(config: &Config, out_dir: &Path, m: i64, count: usize) -> Result<Vec<String>, PipelineError> {
    config.validate()?;
    if count == 0 {
        return Err(PipelineError::Config {
            key: "--count".into(),
            message: "must be at least 1".into(),
        });
    }
    let setup = TrapSetup::new(config.trap_params()).stage(Stage::Potential)?;
    let pot = setup.trap.effective(m);
    let states = solve_spectrum(&pot, count).stage(Stage::Potential)?;
    let mut table = Table::new(
        std::iter::once("r_m".to_string()).chain(states.iter().map(|s| format!("u{}_per_sqrt_m", s.nu))),
    );
    for (i, r) in pot.grid.points().enumerate() {
        let mut row = vec![Cell::from(r)];
        row.extend(states.iter().map(|s| Cell::from(s.u[i])));
        table.push(row);
    }
    #[derive(Serialize)]
    struct Doc {
        m: i64,
        well: Option<Well>,
        levels: Vec<EigenLevel>,
    }
    let doc = Doc {
        m,
        well: pot.well,
        levels: states
            .iter()
            .map(|s| EigenLevel {
                nu: s.nu,
                energy_j: s.energy,
                energy_over_h_hz: s.energy / H,
                nodes: s.node_count(),
            })
            .collect(),
    };
    std::fs::create_dir_all(out_dir).map_err(PipelineError::io(out_dir))?;
    Ok(vec![
        write_table(out_dir, &format!("eigen_m{m}"), &table, config.output.format)?,
        write_json(out_dir, &format!("eigen_m{m}.json"), &doc)?,
    ])
}
