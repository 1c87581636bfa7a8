//! Finite-difference solution of the radial equation
//! `[−ħ²/(2M) d²/dr² + U_eff(r)] u = E u` on the trap domain.

#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;


use crate::consts::HBAR;
use crate::potentials::{EffectivePotential, RadialGrid};
use crate::tridiag::SymTridiagonal;
use crate::{Error, Result};

/// One radial eigenstate; `u` is sampled on the full potential grid and
/// vanishes outside the solver domain.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadialState {
    pub m: i64,
    /// Vibrational quantum number, 1 for the ground state.
    pub nu: usize,
    /// Energy, J.
    pub energy: f64,
    pub grid: RadialGrid,
    /// Normalized so that `∫ u² dr = 1`, with a positive extremum.
    pub u: Vec<f64>,
}

impl RadialState {
    /// Number of sign changes of `u`, ignoring the exponentially small tails.
    pub fn node_count(&self) -> usize {
        let peak = self.u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let floor = 1e-8 * peak;
        let mut last = 0.0f64;
        let mut nodes = 0;
        for &v in &self.u {
            if v.abs() < floor {
                continue;
            }
            if last != 0.0 && v.signum() != last.signum() {
                nodes += 1;
            }
            last = v;
        }
        nodes
    }

    /// `∫ u² dr` by the trapezoid rule.
    pub fn norm(&self) -> f64 {
        crate::quad::trapezoid(&self.u.iter().map(|v| v * v).collect::<Vec<_>>(), self.grid.spacing())
    }

    /// Index of the largest `|u|`.
    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.u.iter().enumerate() {
            if v.abs() > self.u[best].abs() {
                best = i;
            }
        }
        best
    }
}

/// Three-point finite-difference Hamiltonian restricted to the solver domain.
fn hamiltonian(pot: &EffectivePotential) -> Result<(SymTridiagonal, core::ops::Range<usize>)> {
    let domain = pot.solver_domain().ok_or(Error::NoWell { m: pot.m })?;
    if domain.len() < 3 {
        return Err(Error::NoWell { m: pot.m });
    }
    let dr = pot.grid.spacing();
    let t = HBAR * HBAR / (2.0 * pot.mass * dr * dr);
    let diag = pot.values[domain.clone()].iter().map(|u| u + 2.0 * t).collect();
    let off = vec![-t; domain.len() - 1];
    Ok((SymTridiagonal::new(diag, off)?, domain))
}

fn to_state(pot: &EffectivePotential, nu: usize, energy: f64, v: &[f64], domain: &core::ops::Range<usize>) -> RadialState {
    let scale = 1.0 / pot.grid.spacing().sqrt();
    let mut u = vec![0.0; pot.values.len()];
    u[domain.clone()].iter_mut().zip(v).for_each(|(dst, src)| *dst = src * scale);
    let peak = u.iter().fold(0.0f64, |acc, &x| if x.abs() > acc.abs() { x } else { acc });
    if peak < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    RadialState {
        m: pot.m,
        nu,
        energy,
        grid: pot.grid,
        u,
    }
}

/// Lowest vibrational state (`nu = 1`).
pub fn solve_ground(pot: &EffectivePotential) -> Result<RadialState> {
    Ok(solve_spectrum(pot, 1)?.remove(0))
}

/// Lowest `count` states in ascending energy.
pub fn solve_spectrum(pot: &EffectivePotential, count: usize) -> Result<Vec<RadialState>> {
    if count == 0 {
        return Err(Error::InvalidInput("state count must be at least 1"));
    }
    let (ham, domain) = hamiltonian(pot)?;
    let (values, vectors) = ham.lowest(count)?;
    Ok(values
        .iter()
        .zip(&vectors)
        .enumerate()
        .map(|(k, (&e, v))| to_state(pot, k + 1, e, v, &domain))
        .collect())
}

/// Rayleigh quotient `⟨f|H|f⟩ / ⟨f|f⟩` of a trial function sampled on the
/// potential grid (values outside the solver domain are ignored).
pub fn rayleigh_quotient(pot: &EffectivePotential, trial: &[f64]) -> Result<f64> {
    let (ham, domain) = hamiltonian(pot)?;
    let f = &trial[domain];
    let norm: f64 = f.iter().map(|v| v * v).sum();
    Ok(ham.quadratic_form(f) / norm)
}
