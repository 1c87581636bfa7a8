//! Gaussian superpositions of orbital ground states and their exact
//! evolution `ψ(r,φ,t) = Σ c_m e^{−iE_m t/ħ} (2πr)^{−1/2} u_m(r) e^{imφ}`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::consts::{HBAR, PI};
use crate::dispersion::DispersionTable;
use crate::potentials::RadialGrid;
use crate::radial::RadialState;
use crate::{Error, Result};

/// Default number of radial nodes in a density snapshot.
pub const DEFAULT_RADIAL_NODES: usize = 400;
/// Default number of azimuthal nodes in a density snapshot.
pub const DEFAULT_AZIMUTHAL_NODES: usize = 720;

/// Untruncated amplitude `(2πΔm²)^{−1/4} exp[−(m−m0)²/(4Δm²)]`.
pub fn gaussian_amplitude(m: i64, m0: i64, delta_m: f64) -> f64 {
    let d = (m - m0) as f64;
    (2.0 * PI * delta_m * delta_m).powf(-0.25) * (-d * d / (4.0 * delta_m * delta_m)).exp()
}

#[derive(Debug, Clone)]
pub struct WavePacket<'a> {
    pub m0: i64,
    pub delta_m: f64,
    pub m_min: i64,
    pub m_max: i64,
    /// Renormalized `c_m` for `m = m_min..=m_max`.
    pub amplitudes: Vec<f64>,
    /// `E_m − E_{m0}`, J.
    pub energies: Vec<f64>,
    pub states: Vec<&'a RadialState>,
    pub grid: RadialGrid,
    /// `∫ u_m u_m' dr` on the solver grid.
    overlap: Vec<f64>,
    /// Grid indices outside which every `u_m` is negligible.
    support: (usize, usize),
}

/// Truncated Gaussian packet built from table entries.
pub fn build<'a>(
    table: &'a DispersionTable,
    m0: i64,
    delta_m: f64,
    m_min: i64,
    m_max: i64,
) -> Result<WavePacket<'a>> {
    if !(delta_m > 0.0 && delta_m.is_finite()) {
        return Err(Error::InvalidInput("packet width must be positive"));
    }
    if !(m_min <= m0 && m0 <= m_max) {
        return Err(Error::InvalidInput("packet window must contain m0"));
    }
    let outside = Error::WindowOutsideTable { m_min, m_max };
    let mut states = Vec::new();
    for m in m_min..=m_max {
        states.push(table.state(m).map_err(|_| outside.clone())?);
    }
    let e0 = table.energy(m0)?;
    let energies = (m_min..=m_max).map(|m| table.energy(m).map(|e| e - e0)).collect::<Result<Vec<_>>>()?;
    let grid = states[0].grid;
    if states.iter().any(|s| s.grid != grid || s.u.len() != grid.n_points) {
        return Err(Error::GridMismatch);
    }

    let mut amplitudes: Vec<f64> = (m_min..=m_max).map(|m| gaussian_amplitude(m, m0, delta_m)).collect();
    let norm = amplitudes.iter().map(|c| c * c).sum::<f64>().sqrt();
    amplitudes.iter_mut().for_each(|c| *c /= norm);

    let n = states.len();
    let dr = grid.spacing();
    let mut overlap = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let o = states[i].u.iter().zip(&states[j].u).map(|(a, b)| a * b).sum::<f64>() * dr;
            overlap[i * n + j] = o;
            overlap[j * n + i] = o;
        }
    }

    let peak = states.iter().flat_map(|s| s.u.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    let significant = |i: usize| states.iter().any(|s| s.u[i].abs() > 1e-9 * peak);
    let first = (0..grid.n_points).find(|&i| significant(i)).unwrap_or(0);
    let last = (0..grid.n_points).rev().find(|&i| significant(i)).unwrap_or(grid.n_points - 1);

    Ok(WavePacket {
        m0,
        delta_m,
        m_min,
        m_max,
        amplitudes,
        energies,
        states,
        grid,
        overlap,
        support: (first, last),
    })
}

/// Polar evaluation grid: strided solver nodes in `r` and a uniform
/// periodic grid in `φ`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolarGrid {
    /// Solver-grid indices of the radial nodes.
    pub radial_index: Vec<usize>,
    pub r: Vec<f64>,
    /// Radial node spacing, m.
    pub dr: f64,
    pub phi: Vec<f64>,
}

impl PolarGrid {
    pub fn dphi(&self) -> f64 {
        2.0 * PI / self.phi.len() as f64
    }
}

/// Evolved density on a polar grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DensitySnapshot {
    pub t: f64,
    pub grid: PolarGrid,
    /// `|ψ|²` in 1/m², row-major with `φ` fastest.
    pub density: Vec<f64>,
    /// `P(φ) = ∫ |ψ|² r dr`, 1/rad.
    pub marginal: Vec<f64>,
}

impl DensitySnapshot {
    /// `∬ |ψ|² r dr dφ` by product quadrature.
    pub fn norm(&self) -> f64 {
        let nphi = self.grid.phi.len();
        let mut total = 0.0;
        for (i, &r) in self.grid.r.iter().enumerate() {
            let row: f64 = self.density[i * nphi..(i + 1) * nphi].iter().sum();
            total += row * r;
        }
        total * self.grid.dr * self.grid.dphi()
    }

    /// `∫ P(φ) dφ`
    pub fn marginal_norm(&self) -> f64 {
        self.marginal.iter().sum::<f64>() * self.grid.dphi()
    }
}

impl<'a> WavePacket<'a> {
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// `c_m` by quantum number.
    pub fn amplitude(&self, m: i64) -> Option<f64> {
        (self.m_min..=self.m_max)
            .contains(&m)
            .then(|| self.amplitudes[(m - self.m_min) as usize])
    }

    pub fn overlap(&self, i: usize, j: usize) -> f64 {
        self.overlap[i * self.len() + j]
    }

    /// Grid with about `radial_nodes` radial points spanning the support of
    /// the packet and `azimuthal_nodes` angles.
    pub fn polar_grid(&self, radial_nodes: usize, azimuthal_nodes: usize) -> Result<PolarGrid> {
        if radial_nodes < 2 || azimuthal_nodes < 4 {
            return Err(Error::InvalidInput("polar grid too small"));
        }
        let (first, last) = self.support;
        let stride = ((last - first) / (radial_nodes - 1)).max(1);
        let radial_index: Vec<usize> = (first..=last).step_by(stride).collect();
        let r = radial_index.iter().map(|&i| self.grid.r(i)).collect();
        let phi = (0..azimuthal_nodes)
            .map(|j| 2.0 * PI * j as f64 / azimuthal_nodes as f64)
            .collect();
        Ok(PolarGrid {
            radial_index,
            r,
            dr: stride as f64 * self.grid.spacing(),
            phi,
        })
    }

    pub fn default_grid(&self) -> PolarGrid {
        self.polar_grid(DEFAULT_RADIAL_NODES, DEFAULT_AZIMUTHAL_NODES)
            .expect("default grid sizes are valid")
    }

    /// `c_m e^{−i(E_m − E_{m0})t/ħ}`
    pub fn phased(&self, t: f64) -> Vec<Complex64> {
        self.amplitudes
            .iter()
            .zip(&self.energies)
            .map(|(&c, &e)| Complex64::from_polar(c, -e * t / HBAR))
            .collect()
    }

    fn check_time(t: f64) -> Result<()> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput("time must be non-negative"));
        }
        Ok(())
    }

    /// `|ψ(r, φ, t)|²` on `grid`.
    pub fn evolve(&self, t: f64, grid: &PolarGrid) -> Result<DensitySnapshot> {
        Self::check_time(t)?;
        let n = self.len();
        let nphi = grid.phi.len();
        let a = self.phased(t);
        // e^{i k φ_j}, k = m − m_min.
        let mut basis = vec![Complex64::new(0.0, 0.0); n * nphi];
        for (j, &phi) in grid.phi.iter().enumerate() {
            let step = Complex64::from_polar(1.0, phi);
            let mut z = Complex64::new(1.0, 0.0);
            for k in 0..n {
                basis[k * nphi + j] = z;
                z *= step;
            }
        }
        let mut density = vec![0.0; grid.r.len() * nphi];
        let mut row = vec![Complex64::new(0.0, 0.0); nphi];
        for (i, (&idx, &r)) in grid.radial_index.iter().zip(&grid.r).enumerate() {
            row.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for k in 0..n {
                let w = a[k] * self.states[k].u[idx];
                if w == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (z, b) in row.iter_mut().zip(&basis[k * nphi..(k + 1) * nphi]) {
                    *z += w * b;
                }
            }
            let scale = 1.0 / (2.0 * PI * r);
            for (d, z) in density[i * nphi..(i + 1) * nphi].iter_mut().zip(&row) {
                *d = z.norm_sqr() * scale;
            }
        }
        Ok(DensitySnapshot {
            t,
            grid: grid.clone(),
            density,
            marginal: self.marginal(t, &grid.phi)?,
        })
    }

    /// Fourier coefficients `g_d = Σ_{k−k'=d} A_k A*_k' O_kk'` of `2π P(φ)`,
    /// indexed by `d + n − 1`.
    fn marginal_coefficients(&self, t: f64) -> Vec<Complex64> {
        let n = self.len();
        let a = self.phased(t);
        let mut g = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
        for k in 0..n {
            for kp in 0..n {
                g[k + n - 1 - kp] += a[k] * a[kp].conj() * self.overlap(k, kp);
            }
        }
        g
    }

    /// `P(φ, t) = ∫ |ψ|² r dr`, exact in `r` on the solver grid.
    pub fn marginal(&self, t: f64, phi: &[f64]) -> Result<Vec<f64>> {
        Self::check_time(t)?;
        let n = self.len() as i64;
        let g = self.marginal_coefficients(t);
        Ok(phi
            .iter()
            .map(|&p| {
                let sum: f64 = g
                    .iter()
                    .enumerate()
                    .map(|(i, gd)| (gd * Complex64::from_polar(1.0, (i as i64 - n + 1) as f64 * p)).re)
                    .sum();
                sum / (2.0 * PI)
            })
            .collect())
    }

    /// Mean direction `arg ∫ P(φ) e^{iφ} dφ` and resultant length.
    pub fn circular_mean(&self, t: f64) -> Result<(f64, f64)> {
        Self::check_time(t)?;
        let n = self.len();
        // ∫ e^{idφ} e^{iφ} dφ picks d = −1.
        let z = self.marginal_coefficients(t)[n - 2];
        Ok((z.arg(), z.norm()))
    }

    /// `|⟨ψ(0)|ψ(t)⟩|² = |Σ c_m² e^{−iE_m t/ħ}|²`
    pub fn autocorrelation(&self, t: f64) -> f64 {
        self.amplitudes
            .iter()
            .zip(self.phased(t))
            .map(|(c, z)| z * c)
            .sum::<Complex64>()
            .norm_sqr()
    }

    /// Time of the largest autocorrelation in `[t_lo, t_hi]`: a scan with
    /// `samples` points followed by golden-section refinement.
    pub fn autocorrelation_peak(&self, t_lo: f64, t_hi: f64, samples: usize) -> Result<(f64, f64)> {
        if !(0.0 <= t_lo && t_lo < t_hi) || samples < 3 {
            return Err(Error::InvalidInput("autocorrelation search interval"));
        }
        let step = (t_hi - t_lo) / (samples - 1) as f64;
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for i in 0..samples {
            let v = self.autocorrelation(t_lo + i as f64 * step);
            if v > best_v {
                best = i;
                best_v = v;
            }
        }
        let mut a = t_lo + (best as f64 - 1.0).max(0.0) * step;
        let mut b = (t_lo + (best as f64 + 1.0) * step).min(t_hi);
        let ratio = 0.5 * (5.0f64.sqrt() - 1.0);
        for _ in 0..100 {
            let c = b - ratio * (b - a);
            let d = a + ratio * (b - a);
            if self.autocorrelation(c) > self.autocorrelation(d) {
                b = d;
            } else {
                a = c;
            }
            if b - a <= 1e-12 * b {
                break;
            }
        }
        let t = 0.5 * (a + b);
        let v = self.autocorrelation(t);
        Ok(if v >= best_v { (t, v) } else { (t_lo + best as f64 * step, best_v) })
    }

    /// Full revival near the analytic `t_rev`: the autocorrelation maximum
    /// in `t_rev·[1 − window, 1 + window]`.
    pub fn revival_time(&self, t_rev: f64, window: f64) -> Result<f64> {
        let (t, _) = self.autocorrelation_peak(t_rev * (1.0 - window), t_rev * (1.0 + window), 4001)?;
        Ok(t)
    }

    /// Rotation period from the slope of the unwrapped mean angle sampled
    /// over `[0, span]`.
    pub fn rotation_period(&self, span: f64, samples: usize) -> Result<f64> {
        if !(span > 0.0) || samples < 3 {
            return Err(Error::InvalidInput("rotation fit interval"));
        }
        let mut angles = Vec::with_capacity(samples);
        let mut offset = 0.0;
        let mut prev: Option<f64> = None;
        for i in 0..samples {
            let t = span * i as f64 / (samples - 1) as f64;
            let (theta, _) = self.circular_mean(t)?;
            if let Some(p) = prev {
                let jump = theta - p;
                if jump > PI {
                    offset -= 2.0 * PI;
                } else if jump < -PI {
                    offset += 2.0 * PI;
                }
            }
            prev = Some(theta);
            angles.push((t, theta + offset));
        }
        let n = angles.len() as f64;
        let (st, sa) = angles.iter().fold((0.0, 0.0), |(x, y), &(t, a)| (x + t, y + a));
        let (mt, ma) = (st / n, sa / n);
        let (num, den) = angles
            .iter()
            .fold((0.0, 0.0), |(u, v), &(t, a)| (u + (t - mt) * (a - ma), v + (t - mt) * (t - mt)));
        let slope = num / den;
        if slope == 0.0 {
            return Err(Error::ConvergenceFailure("packet does not rotate"));
        }
        Ok(2.0 * PI / slope.abs())
    }
}

/// Number of local maxima of the periodic marginal above
/// `threshold · max P`.
pub fn count_azimuthal_peaks(snapshot: &DensitySnapshot, threshold: f64) -> Result<usize> {
    count_peaks_periodic(&snapshot.marginal, threshold)
}

/// As [`count_azimuthal_peaks`] for any periodic sample sequence.
pub fn count_peaks_periodic(values: &[f64], threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidInput("peak threshold must lie in (0, 1)"));
    }
    let n = values.len();
    if n < 3 {
        return Err(Error::InvalidInput("too few samples for peak search"));
    }
    let top = values.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
    let level = threshold * top;
    Ok((0..n)
        .filter(|&i| {
            let v = values[i];
            v > level && v > values[(i + n - 1) % n] && v >= values[(i + 1) % n]
        })
        .count())
}

/// Angle wrapped to `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::DispersionEntry;

    /// Harmonic-oscillator ground states displaced slightly with `m`, and a
    /// quadratic dispersion with the published derivatives.
    fn synthetic_table(m_lo: i64, m_hi: i64, e1: f64, e2: f64) -> DispersionTable {
        let grid = RadialGrid::new(300e-9, 700e-9, 4000).unwrap();
        let results = (m_lo..=m_hi).map(|m| {
            let center = 450e-9 + 0.2e-9 * (m - 468) as f64;
            let width = 25e-9;
            let mut u: Vec<f64> = grid
                .points()
                .map(|r| (-(r - center).powi(2) / (2.0 * width * width)).exp())
                .collect();
            let norm = (u.iter().map(|v| v * v).sum::<f64>() * grid.spacing()).sqrt();
            u.iter_mut().for_each(|v| *v /= norm);
            let d = (m - 468) as f64;
            let energy = e1 * d + 0.5 * e2 * d * d;
            let state = RadialState {
                m,
                nu: 1,
                energy,
                grid,
                u,
            };
            (
                m,
                Ok(Some(DispersionEntry {
                    m,
                    energy,
                    bound: true,
                    state,
                })),
            )
        });
        DispersionTable::assemble(m_lo, m_hi, results).unwrap()
    }

    const KHZ: f64 = 2.0 * PI * HBAR * 1e3;

    fn table() -> DispersionTable {
        synthetic_table(440, 520, 214.0 * KHZ, -2.52 * KHZ)
    }

    #[test]
    fn amplitudes() {
        assert!((gaussian_amplitude(468, 468, 6.0) - 0.258).abs() < 5e-4);
        let t = table();
        let wp = build(&t, 468, 6.0, 446, 510).unwrap();
        let sum: f64 = wp.amplitudes.iter().map(|c| c * c).sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        for k in 1..=22 {
            assert_eq!(wp.amplitude(468 + k), wp.amplitude(468 - k));
        }
        // Truncation only renormalizes.
        let ratio = wp.amplitude(470).unwrap() / wp.amplitude(468).unwrap();
        assert!((ratio - gaussian_amplitude(470, 468, 6.0) / gaussian_amplitude(468, 468, 6.0)).abs() < 1e-14);
    }

    #[test]
    fn window_must_be_covered() {
        let t = table();
        assert!(matches!(build(&t, 468, 6.0, 430, 510), Err(Error::WindowOutsideTable { .. })));
        assert!(build(&t, 468, 0.0, 446, 510).is_err());
        assert!(build(&t, 500, 6.0, 446, 480).is_err());
    }

    #[test]
    fn norm_is_conserved() {
        let t = table();
        let wp = build(&t, 468, 6.0, 446, 510).unwrap();
        let grid = wp.default_grid();
        for i in 0..6 {
            let snap = wp.evolve(i as f64 * 150e-6, &grid).unwrap();
            assert!((snap.norm() - 1.0).abs() <= 1e-6, "{}", snap.norm());
            assert!((snap.marginal_norm() - 1.0).abs() <= 1e-6);
        }
        assert!(wp.evolve(-1.0, &grid).is_err());
    }

    #[test]
    fn marginal_matches_density_integral() {
        let t = table();
        let wp = build(&t, 468, 6.0, 446, 510).unwrap();
        let grid = wp.polar_grid(800, 360).unwrap();
        let snap = wp.evolve(37e-6, &grid).unwrap();
        let nphi = grid.phi.len();
        let top = snap.marginal.iter().cloned().fold(0.0, f64::max);
        for j in (0..nphi).step_by(7) {
            let p: f64 = (0..grid.r.len()).map(|i| snap.density[i * nphi + j] * grid.r[i]).sum::<f64>() * grid.dr;
            assert!((p - snap.marginal[j]).abs() <= 1e-4 * top);
        }
    }

    #[test]
    fn autocorrelation_and_revivals() {
        let t = table();
        let wp = build(&t, 468, 6.0, 446, 510).unwrap();
        assert!((wp.autocorrelation(0.0) - 1.0).abs() < 1e-12);
        let t_rev = 4.0 * PI * HBAR / (2.52 * KHZ);
        // A quadratic dispersion revives within one rotation of T_rev, where
        // the rotation phase also returns to a multiple of 2π.
        let peak = wp.revival_time(t_rev, 0.1).unwrap();
        assert!((peak - t_rev).abs() < 0.5 / 214e3);
        assert!(wp.autocorrelation(peak) > 0.5);
        let plateau: f64 = (0..50).map(|i| wp.autocorrelation(100e-6 + 2e-6 * i as f64)).sum::<f64>() / 50.0;
        assert!(wp.autocorrelation(peak) > 3.0 * plateau);
    }

    #[test]
    fn fractional_revival_peaks() {
        let t = table();
        let wp = build(&t, 468, 6.0, 446, 510).unwrap();
        let t_rev = 4.0 * PI * HBAR / (2.52 * KHZ);
        let grid = wp.polar_grid(100, 720).unwrap();
        for (frac, expect) in [(0.0, 1), (0.125, 4), (0.25, 2), (0.5, 1), (1.0, 1)] {
            let snap = wp.evolve(frac * t_rev, &grid).unwrap();
            assert_eq!(count_azimuthal_peaks(&snap, 0.5).unwrap(), expect, "t = {frac} T_rev");
        }
    }

    #[test]
    fn rotation_and_half_revival_shift() {
        let t = table();
        let wp = build(&t, 468, 6.0, 446, 510).unwrap();
        let t_rot = 1.0 / 214e3;
        let period = wp.rotation_period(3.0 * t_rot, 301).unwrap();
        assert!((period / t_rot - 1.0).abs() < 0.05);
        let (start, _) = wp.circular_mean(0.0).unwrap();
        assert!(start.abs() < 1e-12);
        let t_half = 0.5 * 4.0 * PI * HBAR / (2.52 * KHZ);
        let (theta, _) = wp.circular_mean(t_half).unwrap();
        let offset = wrap_angle(theta - 214.0 * KHZ * t_half / HBAR);
        assert!((offset.abs() - PI).abs() < 0.05, "{offset}");
    }

    #[test]
    fn peak_counting() {
        let phi: Vec<f64> = (0..360).map(|j| 2.0 * PI * j as f64 / 360.0).collect();
        let two: Vec<f64> = phi.iter().map(|p| 1.0 + (2.0 * p).cos()).collect();
        assert_eq!(count_peaks_periodic(&two, 0.5).unwrap(), 2);
        let wrapped: Vec<f64> = phi.iter().map(|p| (-(wrap_angle(*p)).powi(2) * 10.0).exp()).collect();
        assert_eq!(count_peaks_periodic(&wrapped, 0.5).unwrap(), 1);
        assert!(count_peaks_periodic(&two, 1.5).is_err());
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
    }
}
