//! Bessel functions of integer order 0..=2 for real positive arguments.
//!
//! `J_n` uses the ascending series for small arguments and Miller's
//! backward recurrence otherwise. `I_n` is summed from its ascending series,
//! which has no cancellation. `K_0`/`K_1` use the logarithmic series for
//! `x <= 2` and Steed's continued fraction (Temme's CF2) above; `K_2`
//! follows from the upward recurrence, which is stable for `K`.


#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;
use crate::consts::PI;
use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BesselFamily {
    /// Bessel function of the first kind.
    J,
    /// Modified Bessel function of the second kind.
    K,
    /// Modified Bessel function of the first kind.
    I,
}

/// A Bessel function family together with an order in `0..=2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BesselKind {
    family: BesselFamily,
    order: u8,
}

impl BesselKind {
    pub fn new(family: BesselFamily, order: u8) -> Result<Self> {
        if order > 2 {
            return Err(Error::InvalidInput("Bessel order must be 0, 1 or 2"));
        }
        Ok(Self { family, order })
    }

    pub fn family(&self) -> BesselFamily {
        self.family
    }

    pub fn order(&self) -> u8 {
        self.order
    }
}

fn check_domain(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "Bessel function (x > 0 required)",
            value: x,
        })
    }
}

/// Evaluates the function selected by `kind` at `x > 0`.
pub fn eval(kind: BesselKind, x: f64) -> Result<f64> {
    check_domain(x)?;
    let values = match kind.family {
        BesselFamily::J => j012(x),
        BesselFamily::K => k012(x),
        BesselFamily::I => i012(x),
    };
    Ok(values[kind.order as usize])
}

/// First derivative with respect to `x` of the function selected by `kind`.
pub fn eval_derivative(kind: BesselKind, x: f64) -> Result<f64> {
    check_domain(x)?;
    let d = match kind.family {
        BesselFamily::J => {
            let [j0, j1, j2] = j012(x);
            [-j1, 0.5 * (j0 - j2), j1 - 2.0 * j2 / x]
        }
        BesselFamily::I => {
            let [i0, i1, i2] = i012(x);
            [i1, 0.5 * (i0 + i2), i1 - 2.0 * i2 / x]
        }
        BesselFamily::K => {
            let [k0, k1, k2] = k012(x);
            [-k1, -0.5 * (k0 + k2), -k1 - 2.0 * k2 / x]
        }
    };
    Ok(d[kind.order as usize])
}

/// `[J_0(x), J_1(x), J_2(x)]` for `x > 0`. No domain check.
pub fn j012(x: f64) -> [f64; 3] {
    if x <= 2.0 {
        [j_series(0, x), j_series(1, x), j_series(2, x)]
    } else {
        j_miller(x)
    }
}

fn j_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let y = -half * half;
    // (x/2)^n / n!
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= y / (k * (k + n as f64));
        sum += term;
        if term.abs() <= EPS * sum.abs() || k > 500.0 {
            break;
        }
        k += 1.0;
    }
    sum
}

fn j_miller(x: f64) -> [f64; 3] {
    // Start well above the turning point; the recurrence is then dominated
    // by the minimal solution J_k.
    let start = x.ceil() as usize + 30 + (40.0 * (x + 2.0)).sqrt() as usize;
    let start = start + (start & 1);
    let two_over_x = 2.0 / x;
    let mut above = 0.0;
    let mut current = 1e-30;
    let mut norm = 0.0;
    let mut out = [0.0; 3];
    for k in (1..=start).rev() {
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        let idx = k - 1;
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * current;
        }
        if idx <= 2 {
            out[idx] = current;
        }
        if current.abs() > 1e250 {
            above *= 1e-250;
            current *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += out[0];
    [out[0] / norm, out[1] / norm, out[2] / norm]
}

/// `[I_0(x), I_1(x), I_2(x)]` for `x > 0`. No domain check.
pub fn i012(x: f64) -> [f64; 3] {
    [i_series(0, x), i_series(1, x), i_series(2, x)]
}

fn i_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let y = half * half;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= y / (k * (k + n as f64));
        sum += term;
        if term <= EPS * sum || k > 500.0 {
            break;
        }
        k += 1.0;
    }
    sum
}

/// `[K_0(x), K_1(x), K_2(x)]` for `x > 0`. No domain check.
pub fn k012(x: f64) -> [f64; 3] {
    let (k0, k1) = if x <= 2.0 { k01_series(x) } else { k01_steed(x) };
    [k0, k1, k0 + 2.0 * k1 / x]
}

fn k01_series(x: f64) -> (f64, f64) {
    let half = 0.5 * x;
    let y = half * half;
    let log_half = half.ln();
    let [i0, i1, _] = i012(x);

    // K_0 = -(ln(x/2) + γ) I_0 + Σ_{k≥1} H_k y^k / (k!)²
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum0 = 0.0;
    // K_1 = 1/x + ln(x/2) I_1 - (x/4) Σ_{k≥0} (ψ(k+1) + ψ(k+2)) y^k / (k!(k+1)!)
    let mut term1 = 1.0;
    let mut sum1 = -2.0 * EULER_GAMMA + 1.0;
    let mut k = 1.0;
    loop {
        term *= y / (k * k);
        harmonic += 1.0 / k;
        let add0 = harmonic * term;
        sum0 += add0;

        term1 *= y / (k * (k + 1.0));
        let psi_sum = 2.0 * harmonic + 1.0 / (k + 1.0) - 2.0 * EULER_GAMMA;
        let add1 = psi_sum * term1;
        sum1 += add1;

        if (add0.abs() <= EPS * sum0.abs() && add1.abs() <= EPS * sum1.abs()) || k > 500.0 {
            break;
        }
        k += 1.0;
    }
    let k0 = -(log_half + EULER_GAMMA) * i0 + sum0;
    let k1 = 1.0 / x + log_half * i1 - 0.25 * x * sum1;
    (k0, k1)
}

fn k01_steed(x: f64) -> (f64, f64) {
    const MAX_ITER: usize = 10_000;
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(f: BesselFamily, n: u8) -> BesselKind {
        BesselKind::new(f, n).unwrap()
    }

    /// K_n(x) = ∫_0^∞ exp(-x cosh t) cosh(n t) dt, trapezoid in t.
    /// The integrand is doubly-exponentially decaying so the rule converges
    /// geometrically in the step.
    fn k_integral(n: u32, x: f64) -> f64 {
        let step = 0.01f64;
        let mut sum = 0.5 * (-x).exp();
        let mut t = step;
        loop {
            let v = (-x * t.cosh()).exp() * (n as f64 * t).cosh();
            sum += v;
            if v < 1e-300 || t > 40.0 {
                break;
            }
            t += step;
        }
        sum * step
    }

    /// J_n(x) = (1/π) ∫_0^π cos(nτ - x sin τ) dτ. Periodic integrand:
    /// the trapezoid rule is spectrally accurate.
    fn j_integral(n: u32, x: f64) -> f64 {
        let steps = 4000;
        let h = 2.0 * PI / steps as f64;
        let mut sum = 0.0;
        for i in 0..steps {
            let tau = i as f64 * h;
            sum += (n as f64 * tau - x * tau.sin()).cos();
        }
        sum * h / (2.0 * PI)
    }

    /// I_n(x) = (1/π) ∫_0^π exp(x cos τ) cos(nτ) dτ.
    fn i_integral(n: u32, x: f64) -> f64 {
        let steps = 4000;
        let h = 2.0 * PI / steps as f64;
        let mut sum = 0.0;
        for i in 0..steps {
            let tau = i as f64 * h;
            sum += (x * tau.cos()).exp() * (n as f64 * tau).cos();
        }
        sum * h / (2.0 * PI)
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn j0_at_origin_limit() {
        let v = eval(kind(BesselFamily::J, 0), 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn k0_at_one_matches_integral_oracle() {
        let v = eval(kind(BesselFamily::K, 0), 1.0).unwrap();
        let oracle = k_integral(0, 1.0);
        // Tabulated value 0.42102443824070833.
        assert!(rel(oracle, 0.421_024_438_240_708_33) < 1e-13);
        assert!(rel(v, oracle) < 1e-10, "{v} vs {oracle}");
    }

    #[test]
    fn k_matches_integral_oracle_across_range() {
        for &x in &[1e-3, 0.05, 0.5, 1.0, 1.9, 2.0, 2.1, 3.7, 8.0, 15.0, 30.0, 50.0] {
            let k = k012(x);
            for n in 0..3 {
                let oracle = k_integral(n, x);
                assert!(rel(k[n as usize], oracle) < 1e-10, "K{n}({x}) {} vs {oracle}", k[n as usize]);
            }
        }
    }

    #[test]
    fn j_and_i_match_integral_oracles() {
        // Points chosen away from zeros of J_n.
        for &x in &[0.1, 0.7, 1.5, 2.0, 2.5, 4.4, 6.0, 9.1, 13.3, 21.7, 34.9, 47.5] {
            let j = j012(x);
            let i = i012(x);
            for n in 0..3 {
                let oj = j_integral(n, x);
                let oi = i_integral(n, x);
                assert!(rel(j[n as usize], oj) < 1e-10, "J{n}({x}) {} vs {oj}", j[n as usize]);
                assert!(rel(i[n as usize], oi) < 1e-10, "I{n}({x}) {} vs {oi}", i[n as usize]);
            }
        }
    }

    #[test]
    fn derivative_identities() {
        let x = 2.0;
        let dj0 = eval_derivative(kind(BesselFamily::J, 0), x).unwrap();
        assert_eq!(dj0, -eval(kind(BesselFamily::J, 1), x).unwrap());
        let x = 1.5;
        let dk0 = eval_derivative(kind(BesselFamily::K, 0), x).unwrap();
        assert_eq!(dk0, -eval(kind(BesselFamily::K, 1), x).unwrap());
    }

    #[test]
    fn derivatives_match_central_differences() {
        let x = 3.0;
        let step = 1e-5;
        for family in [BesselFamily::J, BesselFamily::K, BesselFamily::I] {
            for n in 0..3 {
                let k = kind(family, n);
                let fd = (eval(k, x + step).unwrap() - eval(k, x - step).unwrap()) / (2.0 * step);
                let d = eval_derivative(k, x).unwrap();
                assert!((d - fd).abs() <= 1e-6 * d.abs().max(1e-3), "{family:?}{n}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn product_i1_k1_decreases() {
        let mut prev = f64::INFINITY;
        for i in 1..=200 {
            let x = 0.05 * i as f64;
            let p = i012(x)[1] * k012(x)[1];
            assert!(p < prev, "I1K1 not decreasing at {x}");
            prev = p;
        }
    }

    #[test]
    fn domain_errors() {
        for x in [0.0, -1.0, f64::NAN] {
            assert!(matches!(eval(kind(BesselFamily::J, 0), x), Err(Error::Domain { .. })));
            assert!(eval_derivative(kind(BesselFamily::K, 1), x).is_err());
        }
        assert!(BesselKind::new(BesselFamily::I, 3).is_err());
    }

    #[test]
    fn wronskian_and_recurrence() {
        for i in 0..=400 {
            let x = 0.1 + (20.0 - 0.1) * i as f64 / 400.0;
            for n in 0..2u8 {
                let iv = eval(kind(BesselFamily::I, n), x).unwrap();
                let kv = eval(kind(BesselFamily::K, n), x).unwrap();
                let id = eval_derivative(kind(BesselFamily::I, n), x).unwrap();
                let kd = eval_derivative(kind(BesselFamily::K, n), x).unwrap();
                let w = iv * kd - id * kv;
                assert!(rel(w, -1.0 / x) < 1e-9, "Wronskian n={n} x={x}: {w}");
            }
            // J_0 + J_2 = (2/x) J_1
            let [j0, j1, j2] = j012(x);
            let scale = j0.abs().max(j2.abs()).max(j1.abs());
            assert!(((j0 + j2) - 2.0 * j1 / x).abs() <= 1e-9 * scale, "recurrence at {x}");
        }
    }

    #[test]
    fn finite_over_range() {
        for i in 0..=1000 {
            let x = 1e-6 * (50.0f64 / 1e-6).powf(i as f64 / 1000.0);
            for v in j012(x).into_iter().chain(i012(x)).chain(k012(x)) {
                assert!(v.is_finite(), "non-finite at {x}");
            }
        }
    }
}
