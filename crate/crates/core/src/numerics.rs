//! Finite-difference stencils and small least-squares fits.

use crate::error::{Error, Result};
use crate::C64;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Five-point central first derivative.
pub fn d1_five_point(f: [C64; 5], h: f64) -> C64 {
    (f[0] - f[1] * 8.0 + f[3] * 8.0 - f[4]) / (12.0 * h)
}

/// Five-point central second derivative.
pub fn d2_five_point(f: [C64; 5], h: f64) -> C64 {
    (-f[0] + f[1] * 16.0 - f[2] * 30.0 + f[3] * 16.0 - f[4]) / (12.0 * h * h)
}

/// One Richardson step for an `O(h^4)` estimate at steps `h` and `2h`.
pub fn richardson4(fine: C64, coarse: C64) -> C64 {
    (fine * 16.0 - coarse) / 15.0
}

/// First and second derivatives at the sample `i` of a uniform sequence with
/// spacing `h`, from five-point stencils at strides `k` and `2k` combined by
/// one Richardson step. `None` if the wide stencil leaves the data.
pub fn uniform_derivatives(v: &[C64], h: f64, i: usize, k: usize) -> Option<(C64, C64)> {
    if i < 4 * k || i + 4 * k >= v.len() {
        return None;
    }
    let pick = |stride: usize| {
        [
            v[i - 2 * stride],
            v[i - stride],
            v[i],
            v[i + stride],
            v[i + 2 * stride],
        ]
    };
    let fine = pick(k);
    let coarse = pick(2 * k);
    let hf = h * k as f64;
    Some((
        richardson4(d1_five_point(fine, hf), d1_five_point(coarse, 2.0 * hf)),
        richardson4(d2_five_point(fine, hf), d2_five_point(coarse, 2.0 * hf)),
    ))
}

/// Derivatives of a function of one complex variable along the direction
/// `dir` (unit modulus), from samples at `x + j h dir`, j = -4..=4.
pub fn directional_derivatives<F>(mut f: F, x: C64, dir: C64, h: f64) -> Result<(C64, C64)>
where
    F: FnMut(C64) -> Result<C64>,
{
    let mut v = Vec::with_capacity(9);
    for j in -4..=4 {
        v.push(f(x + dir * (j as f64 * h))?);
    }
    let (d1, d2) = uniform_derivatives(&v, h, 4, 1).expect("nine samples cover the stencil");
    Ok((d1 / dir, d2 / (dir * dir)))
}

/// Complex linear least squares via SVD.
pub fn lstsq(a: DMatrix<C64>, b: DVector<C64>) -> Result<DVector<C64>> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin / smax < 1e-15 {
        return Err(Error::IllConditioned(format!(
            "singular values span [{smin:e}, {smax:e}]"
        )));
    }
    svd.solve(&b, 0.0)
        .map_err(|e| Error::IllConditioned(e.to_string()))
}

/// Laurent coefficients `c_k`, `k = kmin..=kmax`, of `f` around `center`,
/// fitted by least squares to `samples` equally spaced points on a circle.
pub fn laurent_ring_fit<F>(
    mut f: F,
    center: C64,
    radius: f64,
    samples: usize,
    kmin: i32,
    kmax: i32,
) -> Result<Vec<C64>>
where
    F: FnMut(C64) -> Result<C64>,
{
    let ncoef = (kmax - kmin + 1) as usize;
    if samples < ncoef {
        return Err(Error::InsufficientSamples(format!(
            "{samples} ring samples for {ncoef} coefficients"
        )));
    }
    let mut a = DMatrix::<C64>::zeros(samples, ncoef);
    let mut b = DVector::<C64>::zeros(samples);
    for j in 0..samples {
        let phase = C64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.25) / samples as f64);
        b[j] = f(center + phase * radius)?;
        for (col, k) in (kmin..=kmax).enumerate() {
            a[(j, col)] = phase.powi(k);
        }
    }
    let scaled = lstsq(a, b)?;
    Ok((kmin..=kmax)
        .zip(scaled.iter())
        .map(|(k, c)| c / radius.powi(k))
        .collect())
}

/// Least-squares polynomial `sum_j c_j x^j`, `j = 0..=degree`.
pub fn polyfit(x: &[C64], y: &[C64], degree: usize) -> Result<Vec<C64>> {
    if x.len() <= degree {
        return Err(Error::InsufficientSamples(format!(
            "{} points for a degree-{degree} fit",
            x.len()
        )));
    }
    let a = DMatrix::from_fn(x.len(), degree + 1, |i, j| x[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    Ok(lstsq(a, b)?.iter().copied().collect())
}

pub fn polyval(c: &[C64], x: C64) -> C64 {
    c.iter().rev().fold(C64::default(), |acc, &ci| acc * x + ci)
}

pub fn polyder(c: &[C64]) -> Vec<C64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(j, &cj)| cj * j as f64)
        .collect()
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn stencils_on_exponential() {
        let h = 0.01;
        let v: Vec<C64> = (0..21)
            .map(|j| (c(0.3, 1.0) * (j as f64 * h)).exp())
            .collect();
        let (d1, d2) = uniform_derivatives(&v, h, 10, 1).unwrap();
        let w = c(0.3, 1.0);
        let f = (w * 0.1).exp();
        assert!((d1 - w * f).norm() < 1e-11);
        assert!((d2 - w * w * f).norm() < 1e-9);
        assert!(uniform_derivatives(&v, h, 3, 1).is_none());
    }

    #[test]
    fn ring_fit_recovers_laurent_data() {
        let f = |u: C64| Ok(0.75 / (u * u) - c(0.2, 0.1) / u + c(1.5, 0.0) + u * 3.0);
        let coeffs = laurent_ring_fit(f, c(0.0, 0.0), 1e-2, 8, -2, 5).unwrap();
        assert!((coeffs[0] - 0.75).norm() < 1e-10);
        assert!((coeffs[1] + c(0.2, 0.1)).norm() < 1e-10);
        assert!((coeffs[3] - 3.0).norm() < 1e-6);
    }

    #[test]
    fn polyfit_is_exact_on_polynomials() {
        let x: Vec<C64> = (0..10)
            .map(|j| c(j as f64 * 0.1, 0.02 * j as f64))
            .collect();
        let y: Vec<C64> = x.iter().map(|&t| t * t * 2.0 - t + c(0.5, 1.0)).collect();
        let p = polyfit(&x, &y, 3).unwrap();
        assert!((p[0] - c(0.5, 1.0)).norm() < 1e-10);
        assert!((p[2] - 2.0).norm() < 1e-9);
        assert!((polyval(&p, c(0.3, 0.0)) - c(0.38, 1.0)).norm() < 1e-10);
        assert!((polyval(&polyder(&p), c(1.0, 0.0)) - 3.0).norm() < 1e-8);
    }
}
