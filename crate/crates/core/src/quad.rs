//! Quadrature on uniform grids.

/// Composite trapezoid rule for samples spaced `dx` apart.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            dx * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Trapezoid rule for `f` sampled at `n` intervals on `[lo, hi]`.
pub fn trapezoid_fn(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let dx = (hi - lo) / n as f64;
    let mut sum = 0.5 * (f(lo) + f(hi));
    for i in 1..n {
        sum += f(lo + i as f64 * dx);
    }
    sum * dx
}

/// Richardson-extrapolated trapezoid from `n`, `2n` and `4n` intervals.
///
/// Returns the extrapolated value and the difference between the two
/// extrapolants, which serves as an error estimate.
pub fn richardson_trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let t1 = trapezoid_fn(&f, lo, hi, n);
    let t2 = trapezoid_fn(&f, lo, hi, 2 * n);
    let t4 = trapezoid_fn(&f, lo, hi, 4 * n);
    let r1 = (4.0 * t2 - t1) / 3.0;
    let r2 = (4.0 * t4 - t2) / 3.0;
    (r2, (r2 - r1).abs())
}
