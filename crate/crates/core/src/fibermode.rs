//! Fundamental HE11 mode of a step-index fiber from the exact vector
//! eigenvalue equation.
//!
//! Field expressions follow the usual hybrid-mode form with Bessel `J_n`
//! inside the core and `K_n` in the cladding. Only magnitudes of the
//! cylindrical components are exposed; their phases (a factor `i` on the
//! radial component) do not enter intensities.


#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;
use crate::consts::{C, EPSILON_0, PI};
use crate::materials::FiberSpec;
use crate::quad::richardson_trapezoid;
use crate::specfun::{j012, k012};
use crate::{Error, Result};

/// First zero of `J_0`; the single-mode cutoff of a step-index fiber.
pub const SINGLE_MODE_CUTOFF: f64 = 2.404_825_557_695_773;

const RESIDUAL_TOL: f64 = 1e-10;
const BRACKET_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Polarization {
    /// Circularly polarized guided light: azimuthally uniform intensity.
    QuasiCircular,
    /// Quasi-linear polarization with its main axis at `axis_angle` (rad).
    QuasiLinear { axis_angle: f64 },
}

impl Polarization {
    pub fn quasi_linear(axis_angle: f64) -> Self {
        Polarization::QuasiLinear {
            axis_angle: num_traits::Euclid::rem_euclid(&axis_angle, &(2.0 * PI)),
        }
    }
}

/// Magnitudes of the cylindrical electric-field components, V/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeProfile {
    pub er: f64,
    pub ephi: f64,
    pub ez: f64,
}

impl ModeProfile {
    /// `|e_r|² + |e_φ|² + |e_z|²`
    pub fn sum_sq(&self) -> f64 {
        self.er * self.er + self.ephi * self.ephi + self.ez * self.ez
    }

    /// `|e_r|² − |e_φ|² + |e_z|²`, the azimuthally modulated combination.
    pub fn modulated_sq(&self) -> f64 {
        self.er * self.er - self.ephi * self.ephi + self.ez * self.ez
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FiberMode {
    pub wavelength: f64,
    pub radius: f64,
    pub index_core: f64,
    pub index_clad: f64,
    /// Propagation constant, 1/m.
    pub beta: f64,
    /// Transverse wavenumber in the core, 1/m.
    pub h: f64,
    /// Decay constant in the cladding, 1/m.
    pub q: f64,
    /// Hybrid-mode parameter `s`.
    pub s: f64,
    /// Field amplitude `A` for the stated power, V/m.
    pub norm: f64,
    /// Power carried by the mode at amplitude `norm`, W.
    pub power: f64,
    pub v_number: f64,
    /// False when the fiber also guides higher modes at this wavelength.
    pub single_mode: bool,
}

struct Guide {
    a: f64,
    k: f64,
    n1: f64,
    n2: f64,
}

impl Guide {
    fn transverse(&self, beta: f64) -> (f64, f64) {
        let h = (self.n1 * self.n1 * self.k * self.k - beta * beta).sqrt();
        let q = (beta * beta - self.n2 * self.n2 * self.k * self.k).sqrt();
        (h, q)
    }

    /// Exact HE/EH eigenvalue equation written as `lhs − rhs`, where
    /// `lhs = J0(ha)/(ha J1(ha))`. Dimensionless.
    fn residual(&self, beta: f64) -> f64 {
        let (h, q) = self.transverse(beta);
        let ha = h * self.a;
        let qa = q * self.a;
        let [j0, j1, _] = j012(ha);
        let [k0, k1, k2] = k012(qa);
        let kp = -0.5 * (k0 + k2) / (qa * k1);
        let n1s = self.n1 * self.n1;
        let n2s = self.n2 * self.n2;
        let lhs = j0 / (ha * j1);
        let contrast = (n1s - n2s) / (2.0 * n1s);
        let sum_inv = 1.0 / (ha * ha) + 1.0 / (qa * qa);
        let root = (contrast * contrast * kp * kp
            + beta * beta / (n1s * self.k * self.k) * sum_inv * sum_inv)
            .sqrt();
        let rhs = -(n1s + n2s) / (2.0 * n1s) * kp + 1.0 / (ha * ha) - root;
        lhs - rhs
    }

    fn s_parameter(&self, beta: f64) -> f64 {
        let (h, q) = self.transverse(beta);
        let ha = h * self.a;
        let qa = q * self.a;
        let [j0, j1, j2] = j012(ha);
        let [k0, k1, k2] = k012(qa);
        let jp = 0.5 * (j0 - j2) / (ha * j1);
        let kp = -0.5 * (k0 + k2) / (qa * k1);
        (1.0 / (ha * ha) + 1.0 / (qa * qa)) / (jp + kp)
    }
}

/// Dispersion-equation residual for a trial propagation constant.
pub fn dispersion_residual(fiber: &FiberSpec, wavelength: f64, beta: f64) -> Result<f64> {
    let guide = guide(fiber, wavelength)?;
    Ok(guide.residual(beta))
}

fn guide(fiber: &FiberSpec, wavelength: f64) -> Result<Guide> {
    let n1 = fiber.index_core(wavelength)?;
    let n2 = fiber.index_clad;
    if !(n1 > n2 && n2 >= 1.0) {
        return Err(Error::InvalidInput("core index must exceed cladding index >= 1"));
    }
    Ok(Guide {
        a: fiber.radius,
        k: 2.0 * PI / wavelength,
        n1,
        n2,
    })
}

/// Solves for the HE11 mode; the returned mode is normalized to 1 W.
pub fn solve_he11(fiber: &FiberSpec, wavelength: f64) -> Result<FiberMode> {
    let g = guide(fiber, wavelength)?;
    let lo = g.n2 * g.k;
    let hi = g.n1 * g.k;
    let span = hi - lo;

    // Scan from the top of the bracket: the fundamental mode has the
    // largest propagation constant. Sign changes across poles of the
    // residual (zeros of J1(ha)) are rejected after refinement.
    let sample = |i: usize| lo + span * (i as f64 + 0.5) / (BRACKET_SAMPLES as f64 + 1.0);
    let mut upper = sample(BRACKET_SAMPLES);
    let mut f_upper = g.residual(upper);
    let mut beta = None;
    for i in (0..BRACKET_SAMPLES).rev() {
        let lower = sample(i);
        let f_lower = g.residual(lower);
        if f_lower.is_finite() && f_upper.is_finite() && f_lower.signum() != f_upper.signum() {
            let root = refine(&g, lower, upper, f_lower)?;
            if g.residual(root).abs() <= RESIDUAL_TOL {
                beta = Some(root);
                break;
            }
        }
        upper = lower;
        f_upper = f_lower;
    }
    let beta = beta.ok_or(Error::NoGuidedMode)?;

    let (h, q) = g.transverse(beta);
    let v_number = g.k * g.a * (g.n1 * g.n1 - g.n2 * g.n2).sqrt();
    let mut mode = FiberMode {
        wavelength,
        radius: g.a,
        index_core: g.n1,
        index_clad: g.n2,
        beta,
        h,
        q,
        s: g.s_parameter(beta),
        norm: 1.0,
        power: 1.0,
        v_number,
        single_mode: v_number < SINGLE_MODE_CUTOFF,
    };
    let unit_power = mode.power_integral(4000)?;
    mode.norm = (1.0 / unit_power).sqrt();
    Ok(mode)
}

/// Bisection to a tight bracket, then secant steps while they improve.
fn refine(g: &Guide, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = g.residual(mid);
        if !f_mid.is_finite() {
            return Err(Error::ConvergenceFailure("non-finite dispersion residual"));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-15 * hi {
            break;
        }
    }
    let (mut x0, mut x1) = (lo, hi);
    let (mut f0, mut f1) = (g.residual(x0), g.residual(x1));
    let mut best = if f0.abs() < f1.abs() { x0 } else { x1 };
    for _ in 0..8 {
        if f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(x2 > lo - (hi - lo) && x2 < hi + (hi - lo)) {
            break;
        }
        let f2 = g.residual(x2);
        if f2.abs() < g.residual(best).abs() {
            best = x2;
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
    }
    Ok(best)
}

impl FiberMode {
    fn k(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    fn exterior_ratio(&self) -> f64 {
        j012(self.h * self.radius)[1] / k012(self.q * self.radius)[1]
    }

    /// Real field coefficients `(a_r, a_φ, a_z, b_r, b_φ)` at unit amplitude;
    /// `e_r = i a_r`, `e_φ = −a_φ`, `e_z = a_z`, `h_r = b_r`, `h_φ = i b_φ`.
    fn components(&self, r: f64) -> [f64; 5] {
        self.components_in(r, r < self.radius)
    }

    /// As `components`, with the region chosen by the caller so that the
    /// surface `r = a` can be evaluated from either side.
    fn components_in(&self, r: f64, inside: bool) -> [f64; 5] {
        let k = self.k();
        let omega = C * k;
        let s = self.s;
        let beta = self.beta;
        if inside {
            let n1s = self.index_core * self.index_core;
            let s1 = beta * beta * s / (k * k * n1s);
            let [j0, j1, j2] = j012(self.h * r.max(1e-300));
            let e = beta / (2.0 * self.h);
            let m = omega * EPSILON_0 * n1s / (2.0 * self.h);
            [
                e * ((1.0 - s) * j0 - (1.0 + s) * j2),
                e * ((1.0 - s) * j0 + (1.0 + s) * j2),
                j1,
                m * ((1.0 - s1) * j0 + (1.0 + s1) * j2),
                m * ((1.0 - s1) * j0 - (1.0 + s1) * j2),
            ]
        } else {
            let n2s = self.index_clad * self.index_clad;
            let s0 = beta * beta * s / (k * k * n2s);
            let ratio = self.exterior_ratio();
            let [k0, k1, k2] = k012(self.q * r);
            let e = ratio * beta / (2.0 * self.q);
            let m = ratio * omega * EPSILON_0 * n2s / (2.0 * self.q);
            [
                e * ((1.0 - s) * k0 + (1.0 + s) * k2),
                e * ((1.0 - s) * k0 - (1.0 + s) * k2),
                ratio * k1,
                m * ((1.0 - s0) * k0 - (1.0 + s0) * k2),
                m * ((1.0 - s0) * k0 + (1.0 + s0) * k2),
            ]
        }
    }

    /// Field magnitudes at radius `r` for the mode's own power.
    pub fn profile(&self, r: f64) -> ModeProfile {
        let [ar, aphi, az, _, _] = self.components(r);
        ModeProfile {
            er: (self.norm * ar).abs(),
            ephi: (self.norm * aphi).abs(),
            ez: (self.norm * az).abs(),
        }
    }

    /// Axial Poynting flux at radius `r`, W/m².
    pub fn poynting_z(&self, r: f64) -> f64 {
        self.poynting_z_in(r, r < self.radius)
    }

    fn poynting_z_in(&self, r: f64, inside: bool) -> f64 {
        let [ar, aphi, _, br, bphi] = self.components_in(r, inside);
        0.5 * self.norm * self.norm * (ar * bphi + aphi * br)
    }

    /// Power through the full cross section, integrated numerically with
    /// `n` trapezoid intervals per region and one Richardson step.
    pub fn power_integral(&self, n: usize) -> Result<f64> {
        let flux_in = |r: f64| 2.0 * PI * r * self.poynting_z_in(r, true);
        let flux = |r: f64| 2.0 * PI * r * self.poynting_z_in(r, false);
        let (inside, err_in) = richardson_trapezoid(flux_in, 0.0, self.radius, n);
        // The cladding flux falls off as exp(−2qr); 40/q leaves < e^-80.
        let outer = self.radius + 40.0 / self.q;
        let (outside, err_out) = richardson_trapezoid(flux, self.radius, outer, n);
        let total = inside + outside;
        if !(total > 0.0) || (err_in + err_out) > 1e-6 * total {
            return Err(Error::ConvergenceFailure("mode power quadrature"));
        }
        Ok(total)
    }

    /// Returns a copy scaled to carry `power` watts.
    pub fn power_normalize(&self, power: f64) -> Result<FiberMode> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::InvalidInput("optical power must be positive"));
        }
        let mut out = self.clone();
        out.norm = self.norm * (power / self.power).sqrt();
        out.power = power;
        Ok(out)
    }

    /// Residual of the eigenvalue equation at the stored `beta`.
    pub fn dispersion_residual(&self) -> f64 {
        Guide {
            a: self.radius,
            k: self.k(),
            n1: self.index_core,
            n2: self.index_clad,
        }
        .residual(self.beta)
    }

    /// Effective index `beta / k`.
    pub fn effective_index(&self) -> f64 {
        self.beta / self.k()
    }

    /// Electric intensity `|E|²` (V²/m²) outside the fiber for the given
    /// polarization and power.
    ///
    /// Quasi-linear light is the equal-weight sum of the two circular
    /// modes, so its azimuthal average equals the quasi-circular intensity.
    pub fn intensity(&self, pol: Polarization, power: f64, r: f64, phi: f64) -> Result<f64> {
        if !(r >= self.radius) {
            return Err(Error::Domain {
                what: "mode intensity (r >= fiber radius)",
                value: r,
            });
        }
        let p = self.profile(r);
        let scale = power / self.power;
        Ok(scale
            * match pol {
                Polarization::QuasiCircular => p.sum_sq(),
                Polarization::QuasiLinear { axis_angle } => {
                    let c = (phi - axis_angle).cos();
                    2.0 * (p.ephi * p.ephi + p.modulated_sq() * c * c)
                }
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::silica_index;

    fn default_mode() -> FiberMode {
        let fiber = FiberSpec::vacuum_clad(200e-9).unwrap();
        solve_he11(&fiber, 1064e-9).unwrap()
    }

    /// Independent route: the product form of the same eigenvalue equation,
    /// (J' + K')(J' + (n2²/n1²)K') = (β/(k n1))² (1/U² + 1/W²)²,
    /// with Bessel values from their integral representations.
    fn product_form(a: f64, lambda: f64, beta: f64) -> f64 {
        let n1 = silica_index(lambda).unwrap();
        let k = 2.0 * PI / lambda;
        let u = a * (n1 * n1 * k * k - beta * beta).sqrt();
        let w = a * (beta * beta - k * k).sqrt();
        let jn = |n: f64, x: f64| {
            let steps = 2000;
            let h = 2.0 * PI / steps as f64;
            (0..steps)
                .map(|i| (n * i as f64 * h - x * (i as f64 * h).sin()).cos())
                .sum::<f64>()
                / steps as f64
        };
        let kn = |n: f64, x: f64| {
            let step = 0.005f64;
            let mut sum = 0.5 * (-x).exp();
            let mut t = step;
            while t < 30.0 {
                sum += (-x * t.cosh()).exp() * (n * t).cosh();
                t += step;
            }
            sum * step
        };
        let jp = 0.5 * (jn(0.0, u) - jn(2.0, u)) / (u * jn(1.0, u));
        let kp = -0.5 * (kn(0.0, w) + kn(2.0, w)) / (w * kn(1.0, w));
        let inv = 1.0 / (u * u) + 1.0 / (w * w);
        (jp + kp) * (jp + kp / (n1 * n1)) - (beta / (k * n1)).powi(2) * inv * inv
    }

    #[test]
    fn single_mode_at_trap_wavelength() {
        let m = default_mode();
        assert!((m.v_number - 1.24).abs() < 0.01, "V = {}", m.v_number);
        assert!(m.single_mode);
        let neff = m.effective_index();
        assert!(neff > 1.0 && neff < 1.4496, "{neff}");
        assert!(m.q * m.q > 0.0);
    }

    #[test]
    fn residual_small() {
        let m = default_mode();
        assert!(m.dispersion_residual().abs() <= 1e-10);
    }

    #[test]
    fn beta_matches_independent_bisection() {
        let a = 200e-9;
        let lambda = 1064e-9;
        let m = default_mode();
        let k = 2.0 * PI / lambda;
        let n1 = silica_index(lambda).unwrap();
        // Dense sampling of the product form, then plain bisection.
        let samples = 400;
        let pt = |i: usize| k * (1.0 + (n1 - 1.0) * (i as f64 + 0.5) / (samples as f64 + 1.0));
        let mut root = None;
        for i in (0..samples).rev() {
            let (x0, x1) = (pt(i), pt(i + 1));
            let (f0, f1) = (product_form(a, lambda, x0), product_form(a, lambda, x1));
            if f0.signum() != f1.signum() {
                let (mut lo, mut hi, mut flo) = (x0, x1, f0);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let fm = product_form(a, lambda, mid);
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                root = Some(0.5 * (lo + hi));
                break;
            }
        }
        let oracle = root.expect("oracle root");
        assert!(((m.beta - oracle) / oracle).abs() <= 1e-8, "{} vs {oracle}", m.beta);
    }

    #[test]
    fn tangential_fields_continuous_at_surface() {
        let m = default_mode();
        let a = m.radius;
        let inside = m.components(a * (1.0 - 1e-15));
        let outside = m.components(a);
        for idx in [1usize, 2] {
            let rel = ((inside[idx] - outside[idx]) / outside[idx]).abs();
            assert!(rel <= 1e-8, "component {idx}: {rel}");
        }
        // Normal component jumps by n1².
        let jump = inside[0] * m.index_core.powi(2) / outside[0];
        assert!((jump - 1.0).abs() < 1e-8, "{jump}");
    }

    #[test]
    fn power_normalization() {
        let m = default_mode().power_normalize(20e-3).unwrap();
        assert!(m.norm > 0.0);
        let check = m.power_integral(16000).unwrap();
        assert!(((check - 20e-3) / 20e-3).abs() <= 1e-6, "{check}");
        let r = m.radius + 150e-9;
        let double = m.power_normalize(40e-3).unwrap();
        let i1 = m.intensity(Polarization::QuasiCircular, 20e-3, r, 0.0).unwrap();
        let i2 = double.profile(r).sum_sq();
        assert!((i2 / i1 - 2.0).abs() < 1e-12);
        assert!(m.power_normalize(0.0).is_err());
    }

    #[test]
    fn quasi_linear_geometry() {
        let m = default_mode();
        let r = m.radius + 100e-9;
        let p = m.profile(r);
        let lin = Polarization::quasi_linear(0.0);
        let at_right = m.intensity(lin, m.power, r, PI / 2.0).unwrap();
        assert!((at_right - 2.0 * p.ephi * p.ephi).abs() <= 1e-12 * at_right);
        for i in 0..36 {
            let phi = i as f64 * 0.17;
            let a = m.intensity(lin, m.power, r, phi).unwrap();
            let b = m.intensity(lin, m.power, r, phi + PI).unwrap();
            assert!((a - b).abs() <= 1e-13 * a);
        }
        // Azimuthal mean of quasi-linear equals quasi-circular.
        let n = 64;
        let mean = (0..n)
            .map(|i| m.intensity(lin, m.power, r, 2.0 * PI * i as f64 / n as f64).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean / p.sum_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quasi_circular_is_isotropic() {
        let m = default_mode();
        let r = m.radius + 50e-9;
        let vals: std::vec::Vec<f64> = (0..100)
            .map(|i| m.intensity(Polarization::QuasiCircular, 1.0, r, i as f64 * 0.0628).unwrap())
            .collect();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max - min) <= 1e-12 * max);
    }

    #[test]
    fn evanescent_decay() {
        let m = default_mode();
        let pol = Polarization::QuasiCircular;
        let mut prev = f64::INFINITY;
        for i in 0..400 {
            let r = m.radius + i as f64 * 5e-9;
            let v = m.intensity(pol, 1.0, r, 0.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
        // I(r) r e^{2qr} flattens out at large r.
        let scaled = |r: f64| m.intensity(pol, 1.0, r, 0.0).unwrap() * r * (2.0 * m.q * r).exp();
        let far1 = scaled(m.radius + 20.0 / m.q);
        let far2 = scaled(m.radius + 40.0 / m.q);
        assert!(((far1 - far2) / far2).abs() < 0.05, "{far1} {far2}");
        assert!(m.intensity(pol, 1.0, m.radius * 0.5, 0.0).is_err());
    }

    #[test]
    fn multimode_fiber_flagged() {
        let fiber = FiberSpec::vacuum_clad(400e-9).unwrap();
        let m = solve_he11(&fiber, 852e-9).unwrap();
        assert!(!m.single_mode);
        assert!(m.dispersion_residual().abs() <= 1e-10);
        // HE11 is the root with the largest effective index.
        assert!(m.effective_index() > 1.2);
    }
}
