//! Fully normalized associated Legendre functions and Gauss–Legendre rules.
//!
//! Tables are generated in `f64` regardless of the working scalar and cast
//! afterwards; the recurrences are the accuracy bottleneck, not the storage.

use std::f64::consts::PI;

/// Index of `(l, m)`, `0 <= m <= l`, in a packed triangular table.
#[inline]
pub fn tri_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Number of `(l, m >= 0)` pairs up to degree `lmax`.
#[inline]
pub fn tri_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

/// Values of `q_lm(θ) = N_lm P_l^m(cos θ)` (no Condon–Shortley phase) with
/// `N_lm² = (2l+1)/(4π) (l-m)!/(l+m)!`, so that `q_l0` is the orthonormal
/// zonal harmonic and `√2 q_lm cos(mφ)` the orthonormal real harmonic.
pub fn legendre_table(lmax: usize, cos_t: f64, sin_t: f64) -> Vec<f64> {
    let mut q = vec![0.0; tri_len(lmax)];
    let mut pmm = (0.25 / PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin_t;
        }
        q[tri_index(m, m)] = pmm;
        if m == lmax {
            break;
        }
        let mut prev2 = pmm;
        let mut prev1 = ((2 * m + 3) as f64).sqrt() * cos_t * pmm;
        q[tri_index(m + 1, m)] = prev1;
        for l in (m + 2)..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let cur = a * (cos_t * prev1 - b * prev2);
            q[tri_index(l, m)] = cur;
            prev2 = prev1;
            prev1 = cur;
        }
    }
    q
}

/// First and second θ-derivatives of the table returned by [`legendre_table`].
///
/// Uses `sin θ q' = l cos θ q_lm − √((l²−m²)(2l+1)/(2l−1)) q_{l−1,m}` and the
/// associated Legendre equation for the second derivative. Requires
/// `sin θ > 0`, which holds on every Gauss–Legendre node.
pub fn legendre_derivatives(lmax: usize, cos_t: f64, sin_t: f64, q: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = tri_len(lmax);
    let mut dq = vec![0.0; n];
    let mut d2q = vec![0.0; n];
    let cot = cos_t / sin_t;
    for l in 0..=lmax {
        for m in 0..=l {
            let (lf, mf) = (l as f64, m as f64);
            let idx = tri_index(l, m);
            let lower = if l > m {
                ((lf * lf - mf * mf) * (2.0 * lf + 1.0) / (2.0 * lf - 1.0)).sqrt() * q[tri_index(l - 1, m)]
            } else {
                0.0
            };
            dq[idx] = (lf * cos_t * q[idx] - lower) / sin_t;
            d2q[idx] = -cot * dq[idx] - (lf * (lf + 1.0) - mf * mf / (sin_t * sin_t)) * q[idx];
        }
    }
    (dq, d2q)
}

/// Gauss–Legendre nodes (descending in `x`) and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_p_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_p_and_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_p_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in [1, 2, 5, 10, 33, 130] {
            let (_, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "n={n} sum={s}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_monomials() {
        let (x, w) = gauss_legendre(6);
        for k in 0..=11 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn low_degree_closed_forms() {
        let t: f64 = 0.7;
        let (c, s) = (t.cos(), t.sin());
        let q = legendre_table(2, c, s);
        let k = (0.25 / PI).sqrt();
        assert!((q[tri_index(0, 0)] - k).abs() < 1e-15);
        assert!((q[tri_index(1, 0)] - 3f64.sqrt() * k * c).abs() < 1e-15);
        // sqrt(2) q_11 = sqrt(3/4π) sinθ
        assert!((2f64.sqrt() * q[tri_index(1, 1)] - 3f64.sqrt() * k * s).abs() < 1e-15);
        assert!((q[tri_index(2, 0)] - 5f64.sqrt() * k * 0.5 * (3.0 * c * c - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let lmax = 12;
        let t: f64 = 1.1;
        let h = 1e-5;
        let q = legendre_table(lmax, t.cos(), t.sin());
        let (dq, d2q) = legendre_derivatives(lmax, t.cos(), t.sin(), &q);
        let qp = legendre_table(lmax, (t + h).cos(), (t + h).sin());
        let qm = legendre_table(lmax, (t - h).cos(), (t - h).sin());
        for i in 0..q.len() {
            let fd1 = (qp[i] - qm[i]) / (2.0 * h);
            let fd2 = (qp[i] - 2.0 * q[i] + qm[i]) / (h * h);
            assert!((fd1 - dq[i]).abs() < 1e-7, "i={i}");
            assert!((fd2 - d2q[i]).abs() < 1e-4, "i={i}");
        }
    }
}
