//! Scattering rate of a weak quasi-linearly polarized probe mode as the
//! packet orbits: `γ_sca(t) ∝ B + Σ c_{m−1}c_{m+1} V_m cos(2ΔE_m t/ħ − 2θ)`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::consts::HBAR;
use crate::dispersion::Timescales;
use crate::fibermode::FiberMode;
use crate::wavepacket::{PolarGrid, WavePacket};
use crate::{Error, Result};

/// Minimum number of samples per expected oscillation period.
pub const MIN_SAMPLES_PER_PERIOD: f64 = 20.0;
/// Fraction of the initial visibility that marks a resumption.
pub const RESUMPTION_FRACTION: f64 = 0.25;

/// Radial profiles of the probe intensity, `|E|² = S(r) + M(r) cos 2(φ−θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeProfile {
    /// `|e_r|² + |e_φ|² + |e_z|²` on the solver grid.
    pub total: Vec<f64>,
    /// `|e_r|² − |e_φ|² + |e_z|²` on the solver grid.
    pub contrast: Vec<f64>,
}

impl ProbeProfile {
    pub fn on_grid(mode: &FiberMode, r: impl Iterator<Item = f64>) -> Self {
        let (total, contrast) = r
            .map(|r| {
                let p = mode.profile(r);
                (p.sum_sq(), p.modulated_sq())
            })
            .unzip();
        Self { total, contrast }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OverlapCoefficients {
    /// Static term `B = Σ c_m² ∫ u_m² S dr`.
    pub b: f64,
    /// Interior quantum numbers `m_min+1 ..= m_max−1`.
    pub m: Vec<i64>,
    /// `V_m = ∫ u_{m−1} u_{m+1} M dr`
    pub v: Vec<f64>,
    /// `c_{m−1} c_{m+1}`
    pub weight: Vec<f64>,
    /// `ΔE_m = (E_{m+1} − E_{m−1}) / 2`, J.
    pub delta_e: Vec<f64>,
}

impl OverlapCoefficients {
    /// `Σ c_{m−1}c_{m+1}V_m / B`: the modulation depth at `t = 0`.
    pub fn modulation_ratio(&self) -> f64 {
        self.weight.iter().zip(&self.v).map(|(w, v)| w * v).sum::<f64>() / self.b
    }

    /// `γ_sca(t) / B` for a probe axis at angle `theta`.
    pub fn rate(&self, t: f64, theta: f64) -> f64 {
        let sum: f64 = self
            .weight
            .iter()
            .zip(&self.v)
            .zip(&self.delta_e)
            .map(|((w, v), de)| w * v * (2.0 * de * t / HBAR - 2.0 * theta).cos())
            .sum();
        1.0 + sum / self.b
    }
}

/// Overlaps `V_m`, `B` by trapezoid quadrature on the solver grid.
pub fn coefficients(wp: &WavePacket<'_>, probe_mode: &FiberMode) -> Result<OverlapCoefficients> {
    let grid = wp.grid;
    if grid.r_min < probe_mode.radius {
        return Err(Error::InvalidInput("radial grid starts inside the fiber"));
    }
    if wp.states.iter().any(|s| s.grid != grid) {
        return Err(Error::GridMismatch);
    }
    let profile = ProbeProfile::on_grid(probe_mode, grid.points());
    coefficients_with(wp, &profile)
}

/// As [`coefficients`] with a precomputed probe profile.
pub fn coefficients_with(wp: &WavePacket<'_>, profile: &ProbeProfile) -> Result<OverlapCoefficients> {
    let dr = wp.grid.spacing();
    let n = wp.len();
    if n < 3 {
        return Err(Error::InvalidInput("packet needs at least three components"));
    }
    if profile.total.len() != wp.grid.n_points {
        return Err(Error::GridMismatch);
    }
    let b = wp
        .amplitudes
        .iter()
        .zip(&wp.states)
        .map(|(c, s)| c * c * s.u.iter().zip(&profile.total).map(|(u, p)| u * u * p).sum::<f64>() * dr)
        .sum();
    let mut out = OverlapCoefficients {
        b,
        m: Vec::new(),
        v: Vec::new(),
        weight: Vec::new(),
        delta_e: Vec::new(),
    };
    for k in 1..n - 1 {
        let (lo, hi) = (wp.states[k - 1], wp.states[k + 1]);
        let v = lo
            .u
            .iter()
            .zip(&hi.u)
            .zip(&profile.contrast)
            .map(|((a, b), p)| a * b * p)
            .sum::<f64>()
            * dr;
        out.m.push(wp.m_min + k as i64);
        out.v.push(v);
        out.weight.push(wp.amplitudes[k - 1] * wp.amplitudes[k + 1]);
        out.delta_e.push(0.5 * (wp.energies[k + 1] - wp.energies[k - 1]));
    }
    Ok(out)
}

/// Measured features of a scattering trace.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScatterAnalysis {
    /// Mean spacing of the early oscillation peaks, s.
    pub t_osc: f64,
    /// `(max − min)/(max + min)` over the first period.
    pub visibility_initial: f64,
    /// First time the rolling visibility drops below `1/e` of the initial.
    pub t_fall: Option<f64>,
    pub resumption_times: Vec<f64>,
    /// Oscillation period measured inside each resumption.
    pub resumed_periods: Vec<Option<f64>>,
    /// Largest rolling visibility within `T_rev·[7/8, 9/8]`.
    pub visibility_at_rev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScatterTrace {
    pub times: Vec<f64>,
    /// Rate in units of `B`.
    pub values: Vec<f64>,
    pub analysis: Option<ScatterAnalysis>,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidInput("times must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("times must be sorted"));
    }
    Ok(())
}

/// Uniform samples `0, dt, 2dt, … ≤ t_max`.
pub fn uniform_times(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidInput("time grid needs dt > 0 and t_max >= 0"));
    }
    let n = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * dt).collect())
}

/// Mode-overlap series `γ/B` at each time, probe axis along `φ = 0`.
pub fn trace(coeff: &OverlapCoefficients, times: &[f64]) -> Result<ScatterTrace> {
    trace_rotated(coeff, times, 0.0)
}

/// Mode-overlap series with the probe axis at angle `theta`.
pub fn trace_rotated(coeff: &OverlapCoefficients, times: &[f64], theta: f64) -> Result<ScatterTrace> {
    check_times(times)?;
    Ok(ScatterTrace {
        times: times.to_vec(),
        values: times.iter().map(|&t| coeff.rate(t, theta)).collect(),
        analysis: None,
    })
}

/// `∫ |ψ|² |E_p|² r dr dφ` by brute-force product quadrature of `|ψ|² |E_p|²` on `grid`,
/// normalized by the same quadrature of `|ψ|² S(r)` so that the static
/// term is 1.
pub fn trace_direct(
    wp: &WavePacket<'_>,
    probe_mode: &FiberMode,
    theta: f64,
    times: &[f64],
    grid: &PolarGrid,
) -> Result<ScatterTrace> {
    check_times(times)?;
    let values = times
        .iter()
        .map(|&t| rate_direct(wp, probe_mode, theta, t, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScatterTrace {
        times: times.to_vec(),
        values,
        analysis: None,
    })
}

/// One sample of [`trace_direct`].
pub fn rate_direct(wp: &WavePacket<'_>, probe_mode: &FiberMode, theta: f64, t: f64, grid: &PolarGrid) -> Result<f64> {
    let pol = crate::fibermode::Polarization::quasi_linear(theta);
    let snap = wp.evolve(t, grid)?;
    let nphi = grid.phi.len();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &r) in grid.r.iter().enumerate() {
        let s = probe_mode.profile(r).sum_sq();
        let row = &snap.density[i * nphi..(i + 1) * nphi];
        for (rho, &phi) in row.iter().zip(&grid.phi) {
            num += rho * probe_mode.intensity(pol, probe_mode.power, r, phi)? * r;
            den += rho * s * r;
        }
    }
    Ok(num / den)
}

/// Series with the cosines linearized, `ΔE_m ≅ E1 + E2 (m − m0)`.
pub fn trace_linearized(coeff: &OverlapCoefficients, e1: f64, e2: f64, m0: i64, times: &[f64]) -> Result<ScatterTrace> {
    check_times(times)?;
    let values = times
        .iter()
        .map(|&t| {
            let sum: f64 = coeff
                .m
                .iter()
                .zip(&coeff.weight)
                .zip(&coeff.v)
                .map(|((&m, w), v)| {
                    let de = e1 + e2 * (m - m0) as f64;
                    w * v * (2.0 * de * t / HBAR).cos()
                })
                .sum();
            1.0 + sum / coeff.b
        })
        .collect();
    Ok(ScatterTrace {
        times: times.to_vec(),
        values,
        analysis: None,
    })
}

/// Envelope `|Σ c_{m−1}c_{m+1}V_m e^{2iE2(m−m0)t/ħ}| / B` of the linearized
/// trace; periodic in `t` with period `πħ/|E2|`.
pub fn linearized_envelope(coeff: &OverlapCoefficients, e2: f64, m0: i64, t: f64) -> f64 {
    coeff
        .m
        .iter()
        .zip(&coeff.weight)
        .zip(&coeff.v)
        .map(|((&m, w), v)| Complex64::from_polar(w * v, 2.0 * e2 * (m - m0) as f64 * t / HBAR))
        .sum::<Complex64>()
        .norm()
        / coeff.b
}

/// Half the peak-to-peak excursion of `γ/B` over `[center − w/2, center + w/2]`,
/// in units of `B`.
pub fn modulation_amplitude(coeff: &OverlapCoefficients, center: f64, width: f64, samples: usize) -> Result<f64> {
    if !(width > 0.0) || samples < 2 || center - 0.5 * width < 0.0 {
        return Err(Error::InvalidInput("modulation window"));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..samples {
        let t = center - 0.5 * width + width * i as f64 / (samples - 1) as f64;
        let v = coeff.rate(t, 0.0);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(0.5 * (hi - lo))
}

fn visibility(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    (hi - lo) / (hi + lo)
}

fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 3 {
        return Err(Error::InsufficientSampling("fewer than three samples"));
    }
    let dt = times[1] - times[0];
    let span = times[times.len() - 1] - times[0];
    if !(dt > 0.0) || (span - dt * (times.len() - 1) as f64).abs() > 1e-6 * span {
        return Err(Error::InvalidInput("analysis needs uniformly spaced times"));
    }
    Ok(dt)
}

/// Visibility `(max − min)/(max + min)` in windows of `window` seconds,
/// labeled by their centers.
pub fn rolling_visibility(trace: &ScatterTrace, window: f64) -> Result<Vec<(f64, f64)>> {
    let dt = uniform_step(&trace.times)?;
    let w = (window / dt).round() as usize;
    if w < 2 || w >= trace.values.len() {
        return Err(Error::InsufficientSampling("rolling window does not fit the trace"));
    }
    Ok((0..trace.values.len() - w)
        .map(|i| {
            let center = 0.5 * (trace.times[i] + trace.times[i + w]);
            (center, visibility(&trace.values[i..=i + w]))
        })
        .collect())
}

/// Local maxima of `values[range]`, with parabolic refinement; a maximum at
/// the first sample counts when it exceeds its right neighbour.
fn peak_times(times: &[f64], values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    let mut peaks = Vec::new();
    if n >= 2 && values[0] > values[1] && times[0] == 0.0 {
        peaks.push(0.0);
    }
    for i in 1..n.saturating_sub(1) {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        if b > a && b >= c {
            let denom = a - 2.0 * b + c;
            let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            peaks.push(times[i] + shift * dt);
        }
    }
    peaks
}

fn mean_spacing(peaks: &[f64]) -> Option<f64> {
    (peaks.len() >= 2).then(|| (peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
}

/// Oscillation period, visibilities, falloff and resumptions.
pub fn analyze(trace: &ScatterTrace, ts: &Timescales) -> Result<ScatterAnalysis> {
    let dt = uniform_step(&trace.times)?;
    let expected = ts.t_osc_sca;
    if dt > expected / MIN_SAMPLES_PER_PERIOD {
        return Err(Error::InsufficientSampling("fewer than 20 samples per oscillation period"));
    }
    let t0 = trace.times[0];
    let early = trace.times.partition_point(|&t| t <= t0 + 3.0 * expected);
    let peaks = peak_times(&trace.times[..early], &trace.values[..early], dt);
    let t_osc = mean_spacing(&peaks).ok_or(Error::InsufficientSampling("no oscillation in the first periods"))?;

    let first = trace.times.partition_point(|&t| t <= t0 + t_osc);
    let visibility_initial = visibility(&trace.values[..first.max(2)]);

    let window = 2.0 * t_osc;
    let rolling = rolling_visibility(trace, window)?;
    let fall_level = visibility_initial / core::f64::consts::E;
    let fall_index = rolling.iter().position(|&(_, v)| v < fall_level);
    let t_fall = fall_index.map(|i| rolling[i].0);

    // Runs above the resumption level once the signal has collapsed below
    // it. Runs closer than the falloff time belong to the same resumption.
    let level = RESUMPTION_FRACTION * visibility_initial;
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let quiet = fall_index.and_then(|f| (f..rolling.len()).find(|&i| rolling[i].1 <= level));
    if let Some(start) = quiet {
        let mut open: Option<usize> = None;
        for (i, &(_, v)) in rolling.iter().enumerate().skip(start) {
            match (v > level, open) {
                (true, None) => open = Some(i),
                (false, Some(s)) => {
                    runs.push((s, i - 1));
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(s) = open {
            runs.push((s, rolling.len() - 1));
        }
    }
    let merge_gap = ts.t_fall_sca.unwrap_or(window).max(window);
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for run in runs {
        match merged.last_mut() {
            Some(last) if rolling[run.0].0 - rolling[last.1].0 < merge_gap => last.1 = run.1,
            _ => merged.push(run),
        }
    }
    let resumption_times = merged.iter().map(|&(a, b)| 0.5 * (rolling[a].0 + rolling[b].0)).collect();
    let resumed_periods = merged
        .iter()
        .map(|&(a, b)| {
            let lo = trace.times.partition_point(|&t| t < rolling[a].0);
            let hi = trace.times.partition_point(|&t| t <= rolling[b].0);
            let peaks = peak_times(&trace.times[lo..hi], &trace.values[lo..hi], dt);
            // Skip a sample-0 maximum that is only a window edge.
            let peaks: Vec<f64> = peaks.into_iter().filter(|&t| t > 0.0 || lo == 0).collect();
            mean_spacing(&peaks)
        })
        .collect();

    let visibility_at_rev = ts.t_rev.and_then(|t_rev| {
        rolling
            .iter()
            .filter(|(c, _)| (0.875 * t_rev..=1.125 * t_rev).contains(c))
            .map(|&(_, v)| v)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
    });

    Ok(ScatterAnalysis {
        t_osc,
        visibility_initial,
        t_fall,
        resumption_times,
        resumed_periods,
        visibility_at_rev,
    })
}

/// Ground-truth check helper: `values` of two traces agree to `tol` relative.
pub fn max_relative_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| ((x - y) / y).abs())
        .fold(0.0, f64::max)
}

/// Uniform samples of the mode-overlap series over `[0, t_max]` in `dt`
/// steps.
pub fn sampled(coeff: &OverlapCoefficients, t_max: f64, dt: f64, theta: f64) -> Result<ScatterTrace> {
    trace_rotated(coeff, &uniform_times(t_max, dt)?, theta)
}

/// Synthetic coefficients for tests and diagnostics: `B = 1`, the given
/// weights times overlaps, and energies `E1 + E2 (m − m0)` for the
/// differences.
pub fn synthetic_coefficients(m0: i64, half_width: i64, delta_m: f64, v: f64, e1: f64, e2: f64) -> OverlapCoefficients {
    let ms: Vec<i64> = (m0 - half_width + 1..=m0 + half_width - 1).collect();
    let c = |m: i64| crate::wavepacket::gaussian_amplitude(m, m0, delta_m);
    OverlapCoefficients {
        b: 1.0,
        weight: ms.iter().map(|&m| c(m - 1) * c(m + 1)).collect(),
        v: vec![v; ms.len()],
        delta_e: ms.iter().map(|&m| e1 + e2 * (m - m0) as f64).collect(),
        m: ms,
    }
}
