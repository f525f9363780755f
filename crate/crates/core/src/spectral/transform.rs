//! Analysis and synthesis between grid values and real harmonic coefficients.
//!
//! Both directions factor into a longitudinal FFT per ring (two rings share
//! one complex transform) and a Legendre sum per order.

use std::sync::Arc;

use rustfft::num_complex::Complex;

use super::field::{HarmonicCoeffs, ScalarField};
use super::grid::SphereGrid;
use super::legendre::{legendre_derivatives, legendre_table, tri_index};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Projects a field onto the harmonics up to the grid bandlimit.
pub fn analyze<T: Real>(f: &ScalarField<T>) -> HarmonicCoeffs<T> {
    let g = f.grid();
    let l_max = g.bandlimit();
    let (nt, np) = (g.n_theta(), g.n_phi());
    let dphi = g.phi_weight();
    let sqrt2 = T::SQRT_2();
    let mut out = HarmonicCoeffs::zeros(l_max);
    // Fourier coefficients for every ring first: a[i][m], b[i][m].
    let mut a = vec![T::zero(); nt * (l_max + 1)];
    let mut b = vec![T::zero(); nt * (l_max + 1)];
    let fft = &g.ring_fft().forward;
    let mut buf = vec![Complex::new(T::zero(), T::zero()); np];
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    let half = T::lit(0.5);
    for i0 in (0..nt).step_by(2) {
        let i1 = (i0 + 1).min(nt - 1);
        let paired = i1 != i0;
        let r0 = &f.values()[i0 * np..(i0 + 1) * np];
        let r1 = &f.values()[i1 * np..(i1 + 1) * np];
        for j in 0..np {
            buf[j] = Complex::new(r0[j], if paired { r1[j] } else { T::zero() });
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        let (w0, w1) = (g.weights()[i0] * dphi, g.weights()[i1] * dphi);
        for m in 0..=l_max {
            let z = buf[m];
            let zc = buf[(np - m) % np].conj();
            // Σ f e^{−imφ} = Σ f cos − i Σ f sin for each of the two real rings.
            let f0 = (z + zc) * half;
            let f1 = (z - zc) * half;
            a[i0 * (l_max + 1) + m] = f0.re * w0;
            b[i0 * (l_max + 1) + m] = -f0.im * w0;
            if paired {
                // f1 = i F1
                a[i1 * (l_max + 1) + m] = f1.im * w1;
                b[i1 * (l_max + 1) + m] = f1.re * w1;
            }
        }
    }
    for i in 0..nt {
        let q = g.legendre_row(i, 0);
        for m in 0..=l_max {
            let am = a[i * (l_max + 1) + m];
            let bm = b[i * (l_max + 1) + m];
            for l in m..=l_max {
                let ql = q[tri_index(l, m)];
                if m == 0 {
                    let c = out.get(l, 0) + ql * am;
                    out.set(l, 0, c);
                } else {
                    let mi = m as i64;
                    let c = out.get(l, mi) + sqrt2 * ql * am;
                    out.set(l, mi, c);
                    let c = out.get(l, -mi) + sqrt2 * ql * bm;
                    out.set(l, -mi, c);
                }
            }
        }
    }
    out
}

/// Evaluates the harmonic series (or one of its partial derivatives) on the
/// grid. `theta_order` and `phi_order` are derivative orders in θ and φ.
pub fn synthesize_derivative<T: Real>(
    c: &HarmonicCoeffs<T>,
    grid: &Arc<SphereGrid<T>>,
    theta_order: usize,
    phi_order: usize,
) -> Result<ScalarField<T>> {
    if c.bandlimit() > grid.bandlimit() {
        return Err(Error::BandlimitMismatch {
            grid: grid.bandlimit(),
            coeffs: c.bandlimit(),
        });
    }
    assert!(theta_order <= 2 && phi_order <= 2 && theta_order + phi_order <= 2);
    let l_max = c.bandlimit();
    let (nt, np) = (grid.n_theta(), grid.n_phi());
    let sqrt2 = T::SQRT_2();
    let mut values = vec![T::zero(); nt * np];
    let fft = &grid.ring_fft().inverse;
    let zero = Complex::new(T::zero(), T::zero());
    let mut buf = vec![zero; np];
    let mut scratch = vec![zero; fft.get_inplace_scratch_len()];
    let half = T::lit(0.5);
    let ring_spectrum = |i: usize, out: &mut Vec<Complex<T>>| {
        out.clear();
        let q = grid.legendre_row(i, theta_order);
        for m in 0..=l_max {
            let mut am = T::zero();
            let mut bm = T::zero();
            for l in m..=l_max {
                let ql = q[tri_index(l, m)];
                if m == 0 {
                    am += ql * c.get(l, 0);
                } else {
                    am += ql * c.get(l, m as i64);
                    bm += ql * c.get(l, -(m as i64));
                }
            }
            if m > 0 {
                am *= sqrt2;
                bm *= sqrt2;
            }
            let mf = T::from_usize_lossy(m);
            // d/dφ: a cos + b sin -> m b cos - m a sin
            let (am, bm) = match phi_order {
                0 => (am, bm),
                1 => (mf * bm, -mf * am),
                _ => (-mf * mf * am, -mf * mf * bm),
            };
            // a cos + b sin = Re[(a − i b) e^{imφ}]
            out.push(Complex::new(am, -bm));
        }
    };
    let (mut s0, mut s1) = (Vec::with_capacity(l_max + 1), Vec::with_capacity(l_max + 1));
    for i0 in (0..nt).step_by(2) {
        let i1 = (i0 + 1).min(nt - 1);
        let paired = i1 != i0;
        ring_spectrum(i0, &mut s0);
        if paired {
            ring_spectrum(i1, &mut s1);
        } else {
            s1.clear();
            s1.resize(l_max + 1, zero);
        }
        // Hermitian completion of both rings packed as x0 + i x1.
        buf.iter_mut().for_each(|z| *z = zero);
        let i_unit = Complex::new(T::zero(), T::one());
        buf[0] = Complex::new(s0[0].re, s1[0].re);
        for m in 1..=l_max {
            let (h0, h1) = (s0[m] * half, s1[m] * half);
            buf[m] = buf[m] + h0 + i_unit * h1;
            buf[np - m] = buf[np - m] + h0.conj() + i_unit * h1.conj();
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for j in 0..np {
            values[i0 * np + j] = buf[j].re;
            if paired {
                values[i1 * np + j] = buf[j].im;
            }
        }
    }
    Ok(ScalarField::from_vec_unchecked(Arc::clone(grid), values))
}

/// Inverse of [`analyze`] for bandlimited data.
pub fn synthesize<T: Real>(c: &HarmonicCoeffs<T>, grid: &Arc<SphereGrid<T>>) -> Result<ScalarField<T>> {
    synthesize_derivative(c, grid, 0, 0)
}

/// Evaluates the series at an arbitrary direction `(θ, φ)`, including the poles.
pub fn eval_at<T: Real>(c: &HarmonicCoeffs<T>, theta: T, phi: T) -> T {
    let l_max = c.bandlimit();
    let (st, ct) = theta.as_f64().sin_cos();
    let q = legendre_table(l_max, ct, st.abs());
    let p = phi.as_f64();
    let mut sum = 0.0;
    for m in 0..=l_max {
        let mut am = 0.0;
        let mut bm = 0.0;
        for l in m..=l_max {
            let ql = q[tri_index(l, m)];
            if m == 0 {
                am += ql * c.get(l, 0).as_f64();
            } else {
                am += ql * c.get(l, m as i64).as_f64();
                bm += ql * c.get(l, -(m as i64)).as_f64();
            }
        }
        if m == 0 {
            sum += am;
        } else {
            let (s, co) = (m as f64 * p).sin_cos();
            sum += std::f64::consts::SQRT_2 * (am * co + bm * s);
        }
    }
    T::lit(sum)
}

/// Value and first θ/φ derivatives of the series at `(θ, φ)`, `0 < θ < π`.
pub fn eval_with_gradient_at<T: Real>(c: &HarmonicCoeffs<T>, theta: T, phi: T) -> [T; 3] {
    let l_max = c.bandlimit();
    let (st, ct) = theta.as_f64().sin_cos();
    let q = legendre_table(l_max, ct, st);
    let (dq, _) = legendre_derivatives(l_max, ct, st, &q);
    let p = phi.as_f64();
    let (mut v, mut vt, mut vp) = (0.0, 0.0, 0.0);
    for m in 0..=l_max {
        for l in m..=l_max {
            let k = tri_index(l, m);
            if m == 0 {
                let cl = c.get(l, 0).as_f64();
                v += q[k] * cl;
                vt += dq[k] * cl;
            } else {
                let (s, co) = (m as f64 * p).sin_cos();
                let a = std::f64::consts::SQRT_2 * c.get(l, m as i64).as_f64();
                let b = std::f64::consts::SQRT_2 * c.get(l, -(m as i64)).as_f64();
                let mf = m as f64;
                v += q[k] * (a * co + b * s);
                vt += dq[k] * (a * co + b * s);
                vp += q[k] * mf * (b * co - a * s);
            }
        }
    }
    [T::lit(v), T::lit(vt), T::lit(vp)]
}
