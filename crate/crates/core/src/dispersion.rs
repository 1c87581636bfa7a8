//! The dispersion relation `E_m` of the ground vibrational state across the
//! trapping window, its finite-difference derivatives and the timescales
//! they set.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::consts::{HBAR, PI};
use crate::fibermode::{solve_he11, FiberMode};
use crate::materials::{AtomSpec, FiberSpec};
use crate::potentials::{RadialGrid, TrapPotential};
use crate::radial::{solve_ground, RadialState};
use crate::{Error, Result};

/// Largest azimuthal quantum number accepted by a sweep.
pub const M_LIMIT: i64 = 2000;

/// Physical and numerical inputs that determine the trap.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrapParams {
    pub fiber: FiberSpec,
    pub atom: AtomSpec,
    /// Trap light vacuum wavelength, m.
    pub trap_wavelength: f64,
    /// Trap light power, W.
    pub trap_power: f64,
    /// Radial extent of the grid beyond the fiber surface, m.
    pub r_span: f64,
    pub grid_points: usize,
}

/// Trap mode and `m`-independent potential, ready for per-`m` solves.
#[derive(Debug, Clone)]
pub struct TrapSetup {
    pub params: TrapParams,
    pub mode: FiberMode,
    pub trap: TrapPotential,
}

impl TrapSetup {
    pub fn new(params: TrapParams) -> Result<Self> {
        params.atom.validate()?;
        if !(params.trap_power > 0.0 && params.trap_power.is_finite()) {
            return Err(Error::InvalidInput("trap power must be positive"));
        }
        let mode = solve_he11(&params.fiber, params.trap_wavelength)?;
        let grid = RadialGrid::outside_fiber(&params.fiber, params.r_span, params.grid_points)?;
        let trap = TrapPotential::new(grid, &mode, &params.atom, &params.fiber, params.trap_power)?;
        Ok(Self { params, mode, trap })
    }

    /// Ground state for one `m`; `Ok(None)` when the potential has no well.
    pub fn solve_entry(&self, m: i64) -> Result<Option<DispersionEntry>> {
        let pot = self.trap.effective(m);
        let Some(well) = pot.well else {
            return Ok(None);
        };
        let state = solve_ground(&pot)?;
        Ok(Some(DispersionEntry {
            m,
            energy: state.energy,
            bound: state.energy < well.rim,
            state,
        }))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DispersionEntry {
    pub m: i64,
    /// Ground vibrational energy `E_m`, J.
    pub energy: f64,
    /// The level lies below the lower barrier top of its well.
    pub bound: bool,
    pub state: RadialState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionTable {
    pub entries: BTreeMap<i64, DispersionEntry>,
    /// Per-`m` solver failures, kept as gaps.
    pub failures: BTreeMap<i64, Error>,
    /// Range that was swept.
    pub requested: (i64, i64),
}

fn check_range(m_min: i64, m_max: i64) -> Result<()> {
    if !(1 <= m_min && m_min <= m_max && m_max <= M_LIMIT) {
        return Err(Error::InvalidInput("m range must lie within [1, 2000]"));
    }
    Ok(())
}

/// Sequential sweep over `m_min..=m_max`.
pub fn sweep(setup: &TrapSetup, m_min: i64, m_max: i64) -> Result<DispersionTable> {
    check_range(m_min, m_max)?;
    DispersionTable::assemble(m_min, m_max, (m_min..=m_max).map(|m| (m, setup.solve_entry(m))))
}

impl DispersionTable {
    /// Builds a table from per-`m` results, in any order.
    pub fn assemble(
        m_min: i64,
        m_max: i64,
        results: impl IntoIterator<Item = (i64, Result<Option<DispersionEntry>>)>,
    ) -> Result<Self> {
        check_range(m_min, m_max)?;
        let mut entries = BTreeMap::new();
        let mut failures = BTreeMap::new();
        for (m, result) in results {
            match result {
                Ok(Some(entry)) => {
                    if !entry.energy.is_finite() {
                        return Err(Error::ConvergenceFailure("non-finite eigenvalue"));
                    }
                    entries.insert(m, entry);
                }
                Ok(None) => {}
                Err(e) => {
                    failures.insert(m, e);
                }
            }
        }
        Ok(Self {
            entries,
            failures,
            requested: (m_min, m_max),
        })
    }

    pub fn energy(&self, m: i64) -> Result<f64> {
        self.entries
            .get(&m)
            .map(|e| e.energy)
            .ok_or(Error::MissingEntry { m })
    }

    pub fn state(&self, m: i64) -> Result<&RadialState> {
        self.entries.get(&m).map(|e| &e.state).ok_or(Error::MissingEntry { m })
    }

    /// Smallest and largest `m` with a well.
    pub fn m_window(&self) -> Option<(i64, i64)> {
        let lo = *self.entries.keys().next()?;
        let hi = *self.entries.keys().next_back()?;
        Some((lo, hi))
    }

    /// Window has no missing `m` between its ends.
    pub fn is_contiguous(&self) -> bool {
        match self.m_window() {
            Some((lo, hi)) => (hi - lo + 1) as usize == self.entries.len(),
            None => false,
        }
    }

    /// Longest contiguous run of entries whose level lies below the barrier.
    pub fn bound_window(&self) -> Option<(i64, i64)> {
        let mut best: Option<(i64, i64)> = None;
        let mut run: Option<(i64, i64)> = None;
        for (&m, e) in &self.entries {
            run = match (e.bound, run) {
                (true, Some((lo, hi))) if hi + 1 == m => Some((lo, m)),
                (true, _) => Some((m, m)),
                (false, _) => None,
            };
            if let Some((lo, hi)) = run {
                if best.is_none_or(|(a, b)| hi - lo > b - a) {
                    best = Some((lo, hi));
                }
            }
        }
        best
    }

    /// `(m, E_m)` pairs in ascending `m`.
    pub fn energies(&self) -> Vec<(i64, f64)> {
        self.entries.iter().map(|(&m, e)| (m, e.energy)).collect()
    }

    /// `E_{m+1} − E_m` over consecutive entries of `range`.
    pub fn first_differences(&self, range: RangeInclusive<i64>) -> Result<Vec<(i64, f64)>> {
        let (lo, hi) = (*range.start(), *range.end());
        (lo..hi)
            .map(|m| Ok((m, self.energy(m + 1)? - self.energy(m)?)))
            .collect()
    }

    /// `E_{m+1} − 2E_m + E_{m−1}` for interior points of `range`.
    pub fn second_differences(&self, range: RangeInclusive<i64>) -> Result<Vec<(i64, f64)>> {
        let (lo, hi) = (*range.start(), *range.end());
        (lo + 1..hi)
            .map(|m| {
                Ok((
                    m,
                    self.energy(m + 1)? - 2.0 * self.energy(m)? + self.energy(m - 1)?,
                ))
            })
            .collect()
    }

    /// Unit-step central differences `(E1, E2)` at `m0`.
    pub fn derivatives_at(&self, m0: i64) -> Result<(f64, f64)> {
        derivatives(|m| self.energy(m), m0)
    }
}

/// Central differences of any tabulated `E_m`.
pub fn derivatives(energy: impl Fn(i64) -> Result<f64>, m0: i64) -> Result<(f64, f64)> {
    let (lo, mid, hi) = (energy(m0 - 1)?, energy(m0)?, energy(m0 + 1)?);
    Ok((0.5 * (hi - lo), hi - 2.0 * mid + lo))
}

/// Analytic timescales of rotation, collapse, revival and the probe signal.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Timescales {
    pub e1: f64,
    pub e2: f64,
    pub delta_m: f64,
    /// `2πħ / E1`
    pub t_rot: f64,
    /// `2√π ħ / (|E2| Δm)`; absent for a linear dispersion.
    pub t_coll: Option<f64>,
    /// `4πħ / |E2|`
    pub t_rev: Option<f64>,
    /// `T_rot / 2`
    pub t_osc_sca: f64,
    /// `√π T_coll / 4`
    pub t_fall_sca: Option<f64>,
    /// `T_rev / 4`
    pub t_resume_sca: Option<f64>,
}

pub fn timescales(e1: f64, e2: f64, delta_m: f64) -> Result<Timescales> {
    if !(e1 > 0.0 && e1.is_finite()) {
        return Err(Error::InvalidInput("E1 must be positive"));
    }
    if !(delta_m > 0.0 && delta_m.is_finite()) {
        return Err(Error::InvalidInput("packet width must be positive"));
    }
    if !e2.is_finite() {
        return Err(Error::InvalidInput("E2 must be finite"));
    }
    let t_rot = 2.0 * PI * HBAR / e1;
    let curved = e2 != 0.0;
    let t_coll = curved.then(|| 2.0 * PI.sqrt() * HBAR / (e2.abs() * delta_m));
    let t_rev = curved.then(|| 4.0 * PI * HBAR / e2.abs());
    Ok(Timescales {
        e1,
        e2,
        delta_m,
        t_rot,
        t_coll,
        t_rev,
        t_osc_sca: t_rot / 2.0,
        t_fall_sca: t_coll.map(|t| PI.sqrt() * t / 4.0),
        t_resume_sca: t_rev.map(|t| t / 4.0),
    })
}
