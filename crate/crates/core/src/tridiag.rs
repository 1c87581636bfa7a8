//! Lowest eigenpairs of a real symmetric tridiagonal matrix by Sturm-sequence
//! bisection followed by inverse iteration.

#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;


use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    /// `off[i]` couples rows `i` and `i + 1`.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::InvalidInput("tridiagonal needs n diagonal and n-1 off-diagonal entries"));
        }
        if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite tridiagonal entry"));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Gershgorin interval containing every eigenvalue.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        self.count_below_with(x, self.pivmin())
    }

    fn pivmin(&self) -> f64 {
        f64::MIN_POSITIVE * self.scale().powi(2).max(1.0)
    }

    fn count_below_with(&self, x: f64, pivmin: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let e = self.off[i - 1];
            q = self.diag[i] - x - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn scale(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    /// The `k`-th smallest eigenvalue (0-based), bisected to machine
    /// precision.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        if k >= self.len() {
            return Err(Error::InvalidInput("eigenvalue index out of range"));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs());
        let pad = f64::EPSILON * scale + f64::MIN_POSITIVE;
        lo -= pad;
        hi += pad;
        // Sturm counts are accurate to about ε·scale; bisecting further
        // than a small fraction of that only burns iterations.
        let floor = 1e-3 * f64::EPSILON * scale;
        let pivmin = self.pivmin();
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= floor.max(2.0 * f64::EPSILON * lo.abs().max(hi.abs())) {
                return Ok(mid);
            }
            if self.count_below_with(mid, pivmin) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::ConvergenceFailure("Sturm bisection"))
    }

    /// Eigenvector for a converged eigenvalue by inverse iteration.
    /// `previous` holds already accepted eigenvectors of nearby eigenvalues;
    /// the result is kept orthogonal to them.
    pub fn eigenvector(&self, lambda: f64, previous: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.len();
        if n == 1 {
            return Ok(vec![1.0]);
        }
        let factors = ShiftedLu::factor(self, lambda);
        // Deterministic, non-special start vector.
        let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
        let mut x: Vec<f64> = (0..n)
            .map(|_| {
                state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
                0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        for _ in 0..4 {
            factors.solve(&mut x);
            orthogonalize(&mut x, previous);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::ConvergenceFailure("inverse iteration"));
            }
            x.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(x)
    }

    /// Lowest `count` eigenpairs in ascending order.
    pub fn lowest(&self, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let count = count.min(self.len());
        let mut values = Vec::with_capacity(count);
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
        for k in 0..count {
            let lambda = self.eigenvalue(k)?;
            let v = self.eigenvector(lambda, &vectors)?;
            values.push(lambda);
            vectors.push(v);
        }
        Ok((values, vectors))
    }

    /// `x^T A x` for a vector of matching length.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.diag[i] * x[i] * x[i];
            if i + 1 < n {
                acc += 2.0 * self.off[i] * x[i] * x[i + 1];
            }
        }
        acc
    }
}

fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let dot: f64 = x.iter().zip(b).map(|(a, c)| a * c).sum();
        x.iter_mut().zip(b).for_each(|(a, c)| *a -= dot * c);
    }
}

/// LU factorization of `A − λI` with partial pivoting (row interchanges
/// between neighbors), as used for inverse iteration.
struct ShiftedLu {
    // Upper factor: u0 diagonal, u1 first and u2 second superdiagonal.
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    // Multipliers and whether rows i and i+1 were swapped.
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(a: &SymTridiagonal, lambda: f64) -> Self {
        let n = a.len();
        let tiny = f64::EPSILON * a.scale().max(f64::MIN_POSITIVE);
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];

        // The partially eliminated row i has entries (d, e) at columns i, i+1.
        let mut d = a.diag[0] - lambda;
        let mut e = if n > 1 { a.off[0] } else { 0.0 };
        for i in 0..n - 1 {
            let sub = a.off[i];
            let next_d = a.diag[i + 1] - lambda;
            let next_e = if i + 2 < n { a.off[i + 1] } else { 0.0 };
            if sub.abs() > d.abs() {
                // Swap rows i and i+1.
                swapped[i] = true;
                let l = d / sub;
                mult[i] = l;
                u0[i] = sub;
                u1[i] = next_d;
                u2[i] = next_e;
                d = e - l * next_d;
                e = -l * next_e;
            } else {
                let piv = if d == 0.0 { tiny } else { d };
                let l = sub / piv;
                mult[i] = l;
                u0[i] = piv;
                u1[i] = e;
                u2[i] = 0.0;
                d = next_d - l * e;
                e = next_e;
            }
        }
        u0[n - 1] = if d == 0.0 { tiny } else { d };
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.mult[i] * x[i];
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            if i + 1 < n {
                v -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                v -= self.u2[i] * x[i + 2];
            }
            x[i] = v / self.u0[i];
        }
    }
}
