//! Radial potentials: optical trap, surface van der Waals attraction and the
//! centrifugal term for azimuthal quantum number `m`.

use alloc::vec::Vec;
use core::ops::Range;

use crate::consts::HBAR;
use crate::fibermode::{FiberMode, Polarization};
use crate::materials::{AtomSpec, FiberSpec};
use crate::{Error, Result};

/// Default radial extent beyond the fiber surface, m.
pub const DEFAULT_SPAN: f64 = 2e-6;
/// Default number of radial grid points.
pub const DEFAULT_POINTS: usize = 32_000;
/// Smallest grid accepted for trap potentials.
pub const MIN_POINTS: usize = 2000;

/// Uniform radial grid open at `r_min` and closed at `r_max`:
/// `r_i = r_min + (i + 1) dr` for `i = 0..n`, `dr = (r_max − r_min) / n`.
///
/// Leaving out `r_min` itself keeps the surface singularity of the van der
/// Waals term off the grid when `r_min` is the fiber radius.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n_points: usize,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, n_points: usize) -> Result<Self> {
        if !(r_min >= 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::InvalidInput("radial grid needs 0 <= r_min < r_max"));
        }
        if n_points < MIN_POINTS {
            return Err(Error::InvalidInput("radial grid needs at least 2000 points"));
        }
        Ok(Self {
            r_min,
            r_max,
            n_points,
        })
    }

    /// Grid over `[a, a + span]` outside a fiber of radius `a`.
    pub fn outside_fiber(fiber: &FiberSpec, span: f64, n_points: usize) -> Result<Self> {
        Self::new(fiber.radius, fiber.radius + span, n_points)
    }

    pub fn spacing(&self) -> f64 {
        (self.r_max - self.r_min) / self.n_points as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r_min + (i + 1) as f64 * self.spacing()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.r(i))
    }
}

/// `ħ²(m² − 1/4) / (2 M r²)`
pub fn centrifugal(m: i64, mass: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain {
            what: "centrifugal potential (r > 0)",
            value: r,
        });
    }
    Ok(centrifugal_unchecked(m, mass, r))
}

#[inline]
fn centrifugal_unchecked(m: i64, mass: f64, r: f64) -> f64 {
    let m = m as f64;
    HBAR * HBAR * (m * m - 0.25) / (2.0 * mass * r * r)
}

/// Optical dipole potential `−α(ω)|E|²/4` of the quasi-circularly polarized
/// trapping mode at power `power`.
pub fn optical_potential(mode: &FiberMode, atom: &AtomSpec, power: f64, r: f64) -> Result<f64> {
    let e2 = mode.intensity(Polarization::QuasiCircular, power, r, 0.0)?;
    Ok(-atom.polarizability_at_wavelength(mode.wavelength) * e2 / 4.0)
}

/// Flat-surface van der Waals attraction `−C3 / (r − a)³`.
pub fn vdw_potential(atom: &AtomSpec, fiber: &FiberSpec, r: f64) -> Result<f64> {
    let d = r - fiber.radius;
    if !(d > 0.0) {
        return Err(Error::Domain {
            what: "van der Waals potential (r > a)",
            value: r,
        });
    }
    Ok(-atom.c3 / (d * d * d))
}

/// Extrema of an effective potential that form a trap outside the fiber.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Well {
    /// Inner barrier top (between the surface attraction and the trap).
    pub r_barrier: f64,
    pub r_min_trap: f64,
    /// Outer barrier top, when the potential turns down again toward
    /// large r inside the grid.
    pub r_outer_barrier: Option<f64>,
    /// Lower of the two barrier tops minus the trap minimum, J.
    pub depth: f64,
    /// Energy of the lower barrier top, J.
    pub rim: f64,
    pub barrier_index: usize,
    pub min_index: usize,
    pub outer_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectivePotential {
    pub m: i64,
    pub mass: f64,
    pub grid: RadialGrid,
    /// `U_eff` at each grid point, J.
    pub values: Vec<f64>,
    pub well: Option<Well>,
    domain: Option<Range<usize>>,
}

impl EffectivePotential {
    /// Wraps sampled values and classifies the trap.
    pub fn from_values(m: i64, mass: f64, grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(Error::InvalidInput("potential length differs from grid size"));
        }
        let well = find_well(&grid, &values);
        let domain = well.map(|w| w.barrier_index + 1..w.outer_index.unwrap_or(values.len()));
        Ok(Self {
            m,
            mass,
            grid,
            values,
            well,
            domain,
        })
    }

    /// A potential confined by hard walls just outside both ends of the
    /// grid, with no well classification. For model problems (harmonic
    /// oscillator, square well) on the same solver.
    pub fn confined(mass: f64, grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(Error::InvalidInput("potential length differs from grid size"));
        }
        let n = values.len();
        Ok(Self {
            m: 0,
            mass,
            grid,
            values,
            well: None,
            domain: Some(0..n),
        })
    }

    /// Grid indices on which the radial problem is solved. Nodes just
    /// outside the range carry Dirichlet walls.
    pub fn solver_domain(&self) -> Option<Range<usize>> {
        self.domain.clone()
    }
}

/// `U(r) = U_opt(r) + U_vdW(r)` sampled once on a grid; the effective
/// potential for any `m` adds the centrifugal term.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapPotential {
    pub grid: RadialGrid,
    pub mass: f64,
    pub optical: Vec<f64>,
    pub vdw: Vec<f64>,
}

impl TrapPotential {
    pub fn new(
        grid: RadialGrid,
        mode: &FiberMode,
        atom: &AtomSpec,
        fiber: &FiberSpec,
        power: f64,
    ) -> Result<Self> {
        if grid.r_min < fiber.radius {
            return Err(Error::InvalidInput("radial grid starts inside the fiber"));
        }
        let mut optical = Vec::with_capacity(grid.n_points);
        let mut vdw = Vec::with_capacity(grid.n_points);
        for r in grid.points() {
            optical.push(optical_potential(mode, atom, power, r)?);
            vdw.push(vdw_potential(atom, fiber, r)?);
        }
        Ok(Self {
            grid,
            mass: atom.mass,
            optical,
            vdw,
        })
    }

    /// `U(r_i)` without the centrifugal part.
    pub fn total(&self, i: usize) -> f64 {
        self.optical[i] + self.vdw[i]
    }

    pub fn centrifugal(&self, m: i64, i: usize) -> f64 {
        centrifugal_unchecked(m, self.mass, self.grid.r(i))
    }

    pub fn effective(&self, m: i64) -> EffectivePotential {
        let values = (0..self.grid.n_points)
            .map(|i| self.centrifugal(m, i) + self.optical[i] + self.vdw[i])
            .collect();
        EffectivePotential::from_values(m, self.mass, self.grid, values)
            .expect("values sized to grid")
    }
}

/// `U_eff^(m)` on `grid` for the given trap configuration.
pub fn build_effective(
    m: i64,
    grid: RadialGrid,
    mode: &FiberMode,
    atom: &AtomSpec,
    fiber: &FiberSpec,
    power: f64,
) -> Result<EffectivePotential> {
    Ok(TrapPotential::new(grid, mode, atom, fiber, power)?.effective(m))
}

/// Locates inner barrier, trap minimum and (optional) outer barrier from
/// sign changes of the 3-point smoothed slope.
fn find_well(grid: &RadialGrid, values: &[f64]) -> Option<Well> {
    let n = values.len();
    if n < 5 {
        return None;
    }
    let slope: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let smooth = |i: usize| -> f64 {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(slope.len() - 1);
        slope[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
    };
    // Next sign change of the smoothed slope after index `from`, going
    // from `rising` (true: + to −, a maximum) or falling (− to +, a minimum).
    let next_turn = |from: usize, maximum: bool| -> Option<usize> {
        let mut prev = smooth(from);
        for i in from + 1..slope.len() {
            let s = smooth(i);
            let turned = if maximum {
                prev > 0.0 && s <= 0.0
            } else {
                prev < 0.0 && s >= 0.0
            };
            if turned {
                return Some(i);
            }
            prev = s;
        }
        None
    };
    // Snap to the exact extremum among nearby nodes.
    let snap = |i: usize, maximum: bool| -> usize {
        let lo = i.saturating_sub(3);
        let hi = (i + 3).min(n - 1);
        let mut best = lo;
        for j in lo..=hi {
            let better = if maximum {
                values[j] > values[best]
            } else {
                values[j] < values[best]
            };
            if better {
                best = j;
            }
        }
        best
    };

    let barrier = snap(next_turn(0, true)?, true);
    let minimum = snap(next_turn(barrier, false)?, false);
    if minimum <= barrier || minimum + 1 >= n || values[barrier] <= values[minimum] {
        return None;
    }
    let outer = next_turn(minimum, true)
        .map(|i| snap(i, true))
        .filter(|&i| i > minimum && i < n - 1 && values[i] > values[minimum]);
    let rim = match outer {
        Some(o) => values[barrier].min(values[o]),
        None => values[barrier],
    };
    Some(Well {
        r_barrier: grid.r(barrier),
        r_min_trap: grid.r(minimum),
        r_outer_barrier: outer.map(|o| grid.r(o)),
        depth: rim - values[minimum],
        rim,
        barrier_index: barrier,
        min_index: minimum,
        outer_index: outer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::H;
    use crate::fibermode::solve_he11;
    use crate::materials::default_cesium;

    struct Setup {
        trap: TrapPotential,
        fiber: FiberSpec,
        mode: FiberMode,
    }

    fn setup(points: usize) -> Setup {
        setup_span(DEFAULT_SPAN, points)
    }

    fn setup_span(span: f64, points: usize) -> Setup {
        let fiber = FiberSpec::vacuum_clad(200e-9).unwrap();
        let atom = default_cesium();
        let mode = solve_he11(&fiber, 1064e-9).unwrap().power_normalize(20e-3).unwrap();
        let grid = RadialGrid::outside_fiber(&fiber, span, points).unwrap();
        let trap = TrapPotential::new(grid, &mode, &atom, &fiber, 20e-3).unwrap();
        Setup { trap, fiber, mode }
    }

    /// Brute force: every strict interior extremum of the raw samples.
    fn raw_extrema(values: &[f64]) -> (Vec<usize>, Vec<usize>) {
        let mut maxima = Vec::new();
        let mut minima = Vec::new();
        for i in 1..values.len() - 1 {
            if values[i] > values[i - 1] && values[i] >= values[i + 1] {
                maxima.push(i);
            }
            if values[i] < values[i - 1] && values[i] <= values[i + 1] {
                minima.push(i);
            }
        }
        (maxima, minima)
    }

    #[test]
    fn centrifugal_values() {
        let cs = default_cesium();
        assert!(centrifugal(0, cs.mass, 400e-9).unwrap() < 0.0);
        let v = centrifugal(0, cs.mass, 400e-9).unwrap();
        let expect = -HBAR * HBAR / (8.0 * cs.mass * 400e-9 * 400e-9);
        assert!(((v - expect) / expect).abs() < 1e-14);
        let mhz = centrifugal(468, cs.mass, 400e-9).unwrap() / H / 1e6;
        assert!((mhz - 52.0).abs() < 0.5, "{mhz}");
        let ratio = centrifugal(468, cs.mass, 300e-9).unwrap() / centrifugal(468, cs.mass, 600e-9).unwrap();
        assert!((ratio - 4.0).abs() < 1e-14);
        assert!(centrifugal(1, cs.mass, 0.0).is_err());
    }

    #[test]
    fn vdw_values() {
        let cs = default_cesium();
        let fiber = FiberSpec::vacuum_clad(200e-9).unwrap();
        let d = 37e-9;
        let ratio = vdw_potential(&cs, &fiber, fiber.radius + d).unwrap()
            / vdw_potential(&cs, &fiber, fiber.radius + 2.0 * d).unwrap();
        assert!((ratio - 8.0).abs() < 1e-12);
        let at100 = vdw_potential(&cs, &fiber, fiber.radius + 100e-9).unwrap();
        assert!(at100 < 0.0);
        let mhz = -at100 / H / 1e6;
        assert!(mhz > 0.1 && mhz < 10.0, "{mhz}");
        assert!(vdw_potential(&cs, &fiber, fiber.radius).is_err());
    }

    #[test]
    fn optical_potential_attractive_and_linear() {
        let s = setup(MIN_POINTS);
        let cs = default_cesium();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..300 {
            let r = s.fiber.radius + i as f64 * 5e-9;
            let u = optical_potential(&s.mode, &cs, 20e-3, r).unwrap();
            assert!(u < 0.0);
            assert!(u > prev, "|U_opt| not decreasing at {r}");
            prev = u;
            let u2 = optical_potential(&s.mode, &cs, 40e-3, r).unwrap();
            assert!((u2 / u - 2.0).abs() < 1e-12);
        }
        assert!(optical_potential(&s.mode, &cs, 20e-3, 100e-9).is_err());
    }

    #[test]
    fn effective_is_sum_of_terms() {
        let s = setup(MIN_POINTS);
        let eff = s.trap.effective(468);
        for (i, &v) in eff.values.iter().enumerate() {
            let r = s.trap.grid.r(i);
            let parts = centrifugal(468, s.trap.mass, r).unwrap() + s.trap.optical[i] + s.trap.vdw[i];
            assert!((v - parts).abs() <= 1e-15 * parts.abs().max(v.abs()));
        }
    }

    #[test]
    fn well_at_central_m() {
        let s = setup(8000);
        let eff = s.trap.effective(468);
        let w = eff.well.expect("well at m = 468");
        assert!(w.r_barrier < w.r_min_trap);
        assert!(w.r_barrier > s.fiber.radius && w.r_min_trap < s.trap.grid.r_max);
        assert!(eff.values[w.barrier_index] > eff.values[w.min_index]);
        assert!(w.depth > 0.0);
        let (maxima, minima) = raw_extrema(&eff.values);
        assert_eq!(maxima[0], w.barrier_index);
        assert_eq!(minima[0], w.min_index);
        // The evanescent trap has largely decayed at the outer edge.
        let edge = s.trap.total(s.trap.grid.n_points - 1).abs();
        assert!(edge <= 5e-2 * w.depth, "{} vs {}", edge / H, w.depth / H);
    }

    #[test]
    fn potential_vanishes_at_extended_edge() {
        let s = setup_span(4e-6, 16_000);
        let w = s.trap.effective(468).well.unwrap();
        let edge = s.trap.total(s.trap.grid.n_points - 1).abs();
        assert!(edge <= 1e-3 * w.depth, "{}", edge / w.depth);
    }

    #[test]
    fn no_well_far_outside_window() {
        let s = setup(MIN_POINTS);
        for m in [100, 2000] {
            let eff = s.trap.effective(m);
            assert!(eff.well.is_none(), "m = {m}");
            let (_, minima) = raw_extrema(&eff.values);
            assert!(minima.is_empty(), "m = {m} has a raw minimum");
        }
        // Large m: repulsive everywhere past the surface maximum.
        let eff = s.trap.effective(2000);
        let (maxima, _) = raw_extrema(&eff.values);
        let top = maxima[0];
        assert!(eff.values[top..].windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn window_is_contiguous() {
        let s = setup(4000);
        let with_well: Vec<i64> = (300..=700).filter(|&m| s.trap.effective(m).well.is_some()).collect();
        assert!(!with_well.is_empty());
        let lo = with_well[0];
        let hi = *with_well.last().unwrap();
        assert_eq!(with_well.len() as i64, hi - lo + 1);
        assert!(lo <= 530 && hi >= 430);
    }

    #[test]
    fn grid_validation() {
        assert!(RadialGrid::new(2e-7, 1e-7, 4000).is_err());
        assert!(RadialGrid::new(2e-7, 3e-7, 100).is_err());
        let g = RadialGrid::new(0.0, 1.0, 2000).unwrap();
        assert_eq!(g.r(1999), 1.0);
        assert!((g.r(0) - 0.0005).abs() < 1e-15);
    }
}
